#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jrc/context.hpp"
#include "jrc/data.hpp"
#include "jrc/losses.hpp"
#include "jrc/model.hpp"

namespace jrc {

enum class LossKind {
  kPointwise,
  kRankNet,
  kListNet,
  kCombinedPair,
  kCombinedList,
  kJrc,
};

const char* to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// True for the losses defined on a single score (the model's t1 - t0).
bool is_score_loss(LossKind kind);

enum class OptimizerKind { kAdam, kSgd };
enum class BatchingKind { kSession, kSequential };
enum class DataSource { kSynthetic, kCsv };

const char* to_string(RankReduction reduction);

struct ExperimentConfig {
  LossKind loss = LossKind::kJrc;
  // (1 - alpha) / alpha. Used by jrc and the combined losses.
  double weight_ratio = 1.0;
  ContextPolicy context{ContextKind::kSession, 600};
  BatchingKind batching = BatchingKind::kSession;
  RankReduction rank_reduction = RankReduction::kContextColumns;
  // Multiplies the rank term of jrc before weighting.
  double rank_prescale = 1.0;
  double drop_rate = 0.0;

  // Model; vocabulary sizes come from the data source.
  std::size_t embed_dim = 8;
  std::vector<std::size_t> hidden_dims = {64, 32};
  double init_scale = 0.05;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  AdamOptions adam;  // adam.lr is also the SGD step size
  std::size_t epochs = 1;
  std::size_t batch_size = 256;

  DataSource data = DataSource::kSynthetic;
  SynthConfig synth;
  // Replicate seed s generates its own synthetic set from mix(synth.seed, s).
  bool vary_data_per_seed = true;
  std::string csv_path;
  CsvSchema csv;
  std::string csv_vocab_prefix;  // optional preset vocabularies

  double eval_fraction = 0.2;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::size_t ece_buckets = 10;
  double clamp_eps = 1e-7;

  // Reference run for t-tests and user-group lifts.
  LossKind baseline_loss = LossKind::kPointwise;
  std::size_t n_groups = 4;

  JrcWeights weights() const { return JrcWeights::from_ratio(weight_ratio); }

  // Throws ConfigError on invalid or inconsistent settings.
  void validate() const;

  // Applies key=value pairs on top of the current values. Unknown keys and
  // unparsable values raise ConfigError.
  void apply(const std::map<std::string, std::string>& values);

  // Canonical key=value text with every key; parse(to_text()) reproduces
  // the configuration exactly.
  std::string to_text() const;
};

// Every recognised key in canonical order.
const std::vector<std::string>& config_keys();

// Parses "key = value" lines; '#' starts a comment. Throws ConfigError on
// malformed lines or duplicate keys.
std::map<std::string, std::string> parse_key_values(std::string_view text);
std::map<std::string, std::string> read_key_value_file(const std::string& path);

ExperimentConfig parse_experiment_config(std::string_view text);

}  // namespace jrc
