#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jrc/context.hpp"
#include "jrc/experiment_config.hpp"
#include "jrc/metrics.hpp"
#include "jrc/model.hpp"
#include "jrc/stats.hpp"
#include "jrc/table.hpp"

namespace jrc {

using LogSink = std::function<void(const std::string&)>;

// Train and held-out samples of one replicate.
struct PreparedData {
  std::vector<Sample> train;
  std::vector<Sample> eval;
  std::vector<std::size_t> vocab_sizes;
};

// Builds the data of replicate `seed`: synthetic data (per-seed when
// vary_data_per_seed) or the CSV file, ordered by timestamp and split so
// that the last eval_fraction of samples is held out.
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

// Cuts the train stream into minibatches and keys each batch under
// config.context. Session batching groups whole sessions of
// session_window_seconds so that session contexts are never split;
// sequential batching takes consecutive runs of batch_size samples.
std::vector<ContextBatch> make_train_batches(const ExperimentConfig& config,
                                             std::span<const Sample> train,
                                             std::size_t* oversize_splits = nullptr,
                                             const LogSink& log = {});

struct BatchLoss {
  double value = 0.0;
  // Raw calibration and rank terms; NaN for losses without them.
  double calib_value = 0.0;
  double rank_value = 0.0;
  std::vector<LogitPair> dlogits;
};

// The configured loss on one batch. Single-score losses act on
// t1 - t0, so a score gradient g becomes (-g, +g) on the two logits.
// `participation` flags samples for the rank term (empty = all).
BatchLoss compute_batch_loss(const ExperimentConfig& config,
                             std::span<const LogitPair> logits,
                             const ContextBatch& batch,
                             const std::vector<std::uint8_t>& participation = {});

// forward, loss, backward and one optimizer step.
BatchLoss train_step(ModelParams& params, const ExperimentConfig& config,
                     const ContextBatch& batch,
                     const std::vector<std::uint8_t>& participation = {});

std::vector<Prediction> predict(const ModelParams& params,
                                std::span<const Sample> samples,
                                std::size_t chunk = 4096);

struct SeedResult {
  std::uint64_t seed = 0;
  MetricsReport metrics;
  std::vector<Prediction> eval_predictions;
  // Clicks per user in the train split.
  std::map<UserId, std::size_t> train_clicks;
  // Step-averaged raw loss terms (NaN when the loss has none).
  double mean_loss = 0.0;
  double mean_calib_term = 0.0;
  double mean_rank_term = 0.0;
  std::size_t steps = 0;
  std::size_t oversize_splits = 0;
  std::size_t train_samples = 0;
};

enum class Metric { kAuc, kGauc, kLogloss, kEce, kPcoc };
inline constexpr Metric kAllMetrics[] = {Metric::kAuc, Metric::kGauc, Metric::kLogloss,
                                         Metric::kEce, Metric::kPcoc};
const char* to_string(Metric metric);
std::optional<double> metric_value(const MetricsReport& report, Metric metric);

struct RunResult {
  std::string label;
  ExperimentConfig config;
  std::vector<SeedResult> seeds;  // one per config.seeds entry, same order

  std::vector<std::uint64_t> seed_list() const;
  // Values over the seeds where the metric is defined.
  std::vector<double> metric_values(Metric metric) const;
  Summary summary(Metric metric) const;
};

// Trains and evaluates every replicate seed of `config` in order.
// Undefined metrics are left as gaps in the reports.
RunResult train_eval(const ExperimentConfig& config, const std::string& label = "",
                     const LogSink& log = {});

struct MetricComparison {
  Metric metric;
  Summary run;
  Summary baseline;
  TTestResult test;  // paired by seed; NaN p-value when a seed lacks the metric
};

// Paired t-tests of every metric, replicates matched by seed. Throws
// ConfigError unless both runs used the same seed list.
std::vector<MetricComparison> compare_to_baseline(const RunResult& run,
                                                  const RunResult& baseline);

// One row per run: mean and standard deviation of every metric across seeds,
// plus paired t-test p-values when a baseline is given (NA on the row that
// is the baseline itself, identified by address).
Table run_table(std::span<const RunResult> runs, const RunResult* baseline = nullptr);

// One row per replicate seed.
Table seed_table(const RunResult& run);

struct SweepResult {
  std::vector<RunResult> runs;
  Table table;
};

// One jrc run per weight ratio (1 - alpha) / alpha. Throws ConfigError on a
// negative ratio, an empty list, or a loss without a weight.
SweepResult sweep_alpha(const ExperimentConfig& config, std::span<const double> ratios,
                        const RunResult* baseline = nullptr, const LogSink& log = {});

// One run per context kind on the same seeds and batches.
SweepResult sweep_context(const ExperimentConfig& config,
                          std::span<const ContextKind> kinds,
                          const RunResult* baseline = nullptr, const LogSink& log = {});

// One run per rank-term drop rate.
SweepResult sweep_droprate(const ExperimentConfig& config, std::span<const double> rates,
                           const RunResult* baseline = nullptr, const LogSink& log = {});

// Sample order used for activity groups: by the user's train clicks, then
// user ID, then position. Groups are consecutive slices whose sizes differ
// by at most one.
std::vector<std::vector<std::size_t>> activity_groups(
    std::span<const Prediction> preds, const std::map<UserId, std::size_t>& train_clicks,
    std::size_t n_groups);

// Per activity group: GAUC of `run` and of `baseline` averaged over seeds,
// and the relative lift (run - baseline) / baseline. Throws ConfigError when
// the baseline is missing or was run on different seeds.
Table user_group_report(const RunResult& run, const RunResult* baseline,
                        std::size_t n_groups);

}  // namespace jrc
