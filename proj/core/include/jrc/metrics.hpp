#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jrc/types.hpp"

namespace jrc {

struct Prediction {
  double p_hat = 0.0;
  int label = 0;
  UserId user_id = 0;
};

// Mann-Whitney AUC (ties count 1/2), O(n log n).
// Throws UndefinedMetricError unless both classes are present.
double auc(std::span<const Prediction> preds);

struct GaucResult {
  double value = 0.0;
  std::size_t excluded_users = 0;  // users with single-class labels
  std::size_t included_users = 0;
};

// Impression-weighted mean of per-user AUC over users that have both
// classes. Throws UndefinedMetricError (excluded_count = number of users)
// if no user qualifies.
GaucResult gauc(std::span<const Prediction> preds);

// Mean negative log-likelihood with p_hat clamped to [eps, 1 - eps].
double logloss(std::span<const Prediction> preds, double clamp_eps = 1e-7);

struct EceBucket {
  std::size_t count = 0;
  double mean_p_hat = 0.0;
  double mean_label = 0.0;
};

struct EceResult {
  double value = 0.0;
  std::vector<EceBucket> buckets;
};

// [0, 1) split into `buckets` equal bins; p_hat == 1 goes to the top bin.
// ECE = (1/N) * sum_k |sum_{i in B_k} (y_i - p_i)|.
// Throws ConfigError if buckets < 1.
EceResult ece(std::span<const Prediction> preds, std::size_t buckets = 10);

// sum p_hat / sum y. Throws UndefinedMetricError without positives.
double pcoc(std::span<const Prediction> preds);

struct MetricsOptions {
  std::size_t ece_buckets = 10;
  double clamp_eps = 1e-7;
};

// All five metrics; a metric that is undefined on the input is left empty.
struct MetricsReport {
  std::optional<double> auc;
  std::optional<double> gauc;
  std::optional<double> logloss;
  std::optional<double> ece;
  std::optional<double> pcoc;
  std::size_t gauc_excluded_users = 0;
  std::vector<EceBucket> ece_buckets;
  std::size_t count = 0;
};

MetricsReport evaluate(std::span<const Prediction> preds,
                       const MetricsOptions& options = {});

// Flat CSV serialisation of a report. Undefined metrics are written as "NA".
std::string metrics_csv_header();
std::string to_csv_row(const MetricsReport& report);
// Aligned human-readable block with the per-bucket ECE table.
std::string to_text(const MetricsReport& report);

}  // namespace jrc
