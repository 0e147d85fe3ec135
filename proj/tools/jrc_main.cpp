#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "jrc/error.hpp"
#include "jrc/experiment_config.hpp"

namespace {

constexpr int kUnexpectedError = 1;

// Config file plus one --<key> flag per config key; flags win.
struct ConfigOptions {
  std::string config_path;
  std::map<std::string, std::string> overrides;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", config_path, "key=value config file");
    for (const std::string& key : jrc::config_keys()) {
      cmd->add_option_function<std::string>(
          "--" + key, [this, key](const std::string& v) { overrides[key] = v; },
          "override config key '" + key + "'");
    }
  }

  jrc::ExperimentConfig load() const {
    jrc::ExperimentConfig config;
    if (!config_path.empty()) config.apply(jrc::read_key_value_file(config_path));
    config.apply(overrides);
    return config;
  }
};

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  for (char c : text + ",") {
    if (c == ',') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, const char* what) {
  std::vector<double> out;
  for (const std::string& s : split(text)) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw jrc::ConfigError(std::string(what) + ": '" + s + "' is not a number");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint ranking and calibration CTR experiments"};
  app.require_subcommand(1);

  jrc::cli::OutputOptions out;
  auto add_output = [&](CLI::App* cmd) {
    cmd->add_option("-o,--out-dir", out.out_dir, "directory for tables and logged configs");
    cmd->add_flag("-q,--quiet", out.quiet, "no progress or table output");
  };

  bool no_baseline = false;
  ConfigOptions opts;

  auto* train = app.add_subcommand("train", "train and evaluate one configuration");
  std::string label;
  bool predictions = false;
  opts.attach(train);
  add_output(train);
  train->add_option("--label", label, "row label (default: the loss name)");
  train->add_flag("--no-baseline", no_baseline, "skip the baseline run and t-tests");
  train->add_flag("--predictions", predictions, "write held-out predictions");

  auto* eval = app.add_subcommand("eval", "metrics of a predictions CSV (p_hat,label[,user_id])");
  std::string predictions_path;
  std::size_t ece_buckets = 10;
  double clamp_eps = 1e-7;
  eval->add_option("predictions", predictions_path, "predictions CSV")->required();
  eval->add_option("--ece_buckets", ece_buckets, "ECE bucket count");
  eval->add_option("--clamp_eps", clamp_eps, "LogLoss clamp");
  eval->add_option("-o,--out-dir", out.out_dir, "directory for metrics.csv/txt");
  eval->add_flag("-q,--quiet", out.quiet, "no table output");

  auto* sweep_alpha = app.add_subcommand("sweep-alpha", "one run per weight ratio");
  std::string ratios = "0.01,0.1,1,10,100,1000,10000";
  opts.attach(sweep_alpha);
  add_output(sweep_alpha);
  sweep_alpha->add_option("--ratios", ratios, "comma-separated (1 - alpha) / alpha values");
  sweep_alpha->add_flag("--no-baseline", no_baseline, "skip the baseline run and t-tests");

  auto* sweep_context = app.add_subcommand("sweep-context", "one run per context kind");
  std::string kinds = "batch,gender,domain,session";
  opts.attach(sweep_context);
  add_output(sweep_context);
  sweep_context->add_option("--kinds", kinds, "comma-separated context kinds");
  sweep_context->add_flag("--no-baseline", no_baseline, "skip the baseline run and t-tests");

  auto* sweep_drop = app.add_subcommand("sweep-droprate", "one run per rank-term drop rate");
  std::string rates = "0,0.2,0.4,0.6,0.8,1";
  opts.attach(sweep_drop);
  add_output(sweep_drop);
  sweep_drop->add_option("--rates", rates, "comma-separated drop rates");
  sweep_drop->add_flag("--no-baseline", no_baseline, "skip the baseline run and t-tests");

  auto* groups = app.add_subcommand("user-groups", "per-activity-group GAUC lift over the baseline");
  opts.attach(groups);
  add_output(groups);

  auto* gen = app.add_subcommand("gen-data", "write the synthetic set as CSV plus vocabularies");
  std::string prefix = "synth";
  opts.attach(gen);
  gen->add_option("--prefix", prefix, "output prefix (<prefix>.csv, <prefix>.vocab.*.csv)");
  gen->add_flag("-q,--quiet", out.quiet, "no summary output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(jrc::ErrorCategory::kConfig);
  }

  try {
    if (train->parsed()) {
      return jrc::cli::cmd_train(opts.load(), label, !no_baseline, predictions, out);
    }
    if (eval->parsed()) {
      if (!eval->count("--out-dir")) out.out_dir.clear();
      return jrc::cli::cmd_eval(predictions_path, ece_buckets, clamp_eps, out);
    }
    if (sweep_alpha->parsed()) {
      return jrc::cli::cmd_sweep_alpha(opts.load(), parse_numbers(ratios, "--ratios"),
                                       !no_baseline, out);
    }
    if (sweep_context->parsed()) {
      std::vector<jrc::ContextKind> parsed;
      for (const std::string& k : split(kinds)) parsed.push_back(jrc::parse_context_kind(k));
      return jrc::cli::cmd_sweep_context(opts.load(), parsed, !no_baseline, out);
    }
    if (sweep_drop->parsed()) {
      return jrc::cli::cmd_sweep_droprate(opts.load(), parse_numbers(rates, "--rates"),
                                          !no_baseline, out);
    }
    if (groups->parsed()) return jrc::cli::cmd_user_groups(opts.load(), out);
    if (gen->parsed()) {
      const jrc::ExperimentConfig config = opts.load();
      return jrc::cli::cmd_gen_data(config.synth, prefix, out.quiet);
    }
  } catch (const jrc::Error& e) {
    std::cerr << "jrc: " << jrc::to_string(e.category()) << " error: " << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "jrc: unexpected error: " << e.what() << "\n";
    return kUnexpectedError;
  }
  return kUnexpectedError;
}
