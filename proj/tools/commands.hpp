#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "jrc/context.hpp"
#include "jrc/experiment_config.hpp"

namespace jrc::cli {

struct OutputOptions {
  std::string out_dir = "jrc_out";
  bool quiet = false;
};

int cmd_train(const ExperimentConfig& config, const std::string& label, bool with_baseline,
              bool write_predictions, const OutputOptions& out);
int cmd_eval(const std::string& predictions_path, std::size_t ece_buckets, double clamp_eps,
             const OutputOptions& out);
int cmd_sweep_alpha(const ExperimentConfig& config, const std::vector<double>& ratios,
                    bool with_baseline, const OutputOptions& out);
int cmd_sweep_context(const ExperimentConfig& config, const std::vector<ContextKind>& kinds,
                      bool with_baseline, const OutputOptions& out);
int cmd_sweep_droprate(const ExperimentConfig& config, const std::vector<double>& rates,
                       bool with_baseline, const OutputOptions& out);
int cmd_user_groups(const ExperimentConfig& config, const OutputOptions& out);
int cmd_gen_data(const SynthConfig& synth, const std::string& prefix, bool quiet);

}  // namespace jrc::cli
