#include "jrc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>

#include "jrc/error.hpp"

namespace jrc {

namespace {

// Twice the Mann-Whitney U statistic, exact in integers.
struct PairCount {
  std::uint64_t twice_u = 0;
  std::uint64_t positives = 0;
  std::uint64_t negatives = 0;
};

PairCount count_pairs(std::span<const Prediction> preds) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].p_hat < preds[b].p_hat;
  });

  PairCount out;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    std::uint64_t pos = 0;
    std::uint64_t neg = 0;
    while (j < order.size() && preds[order[j]].p_hat == preds[order[i]].p_hat) {
      (preds[order[j]].label == 1 ? pos : neg) += 1;
      ++j;
    }
    // Positives beat every lower-scored negative and tie with the equal ones.
    out.twice_u += 2 * pos * out.negatives + pos * neg;
    out.positives += pos;
    out.negatives += neg;
    i = j;
  }
  return out;
}

std::string format_or_na(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

}  // namespace

double auc(std::span<const Prediction> preds) {
  const PairCount c = count_pairs(preds);
  if (c.positives == 0 || c.negatives == 0) {
    throw UndefinedMetricError("AUC needs at least one positive and one negative");
  }
  return static_cast<double>(c.twice_u) /
         (2.0 * static_cast<double>(c.positives) *
          static_cast<double>(c.negatives));
}

GaucResult gauc(std::span<const Prediction> preds) {
  std::map<UserId, std::vector<Prediction>> by_user;
  for (const Prediction& p : preds) by_user[p.user_id].push_back(p);

  GaucResult out;
  double weighted = 0.0;
  double impressions = 0.0;
  for (const auto& [user, user_preds] : by_user) {
    const PairCount c = count_pairs(user_preds);
    if (c.positives == 0 || c.negatives == 0) {
      ++out.excluded_users;
      continue;
    }
    ++out.included_users;
    const double user_auc = static_cast<double>(c.twice_u) /
                            (2.0 * static_cast<double>(c.positives) *
                             static_cast<double>(c.negatives));
    const double n = static_cast<double>(user_preds.size());
    weighted += n * user_auc;
    impressions += n;
  }
  if (out.included_users == 0) {
    throw UndefinedMetricError(
        "GAUC: all " + std::to_string(out.excluded_users) +
            " users have single-class labels",
        out.excluded_users);
  }
  out.value = weighted / impressions;
  return out;
}

double logloss(std::span<const Prediction> preds, double clamp_eps) {
  if (preds.empty()) throw UndefinedMetricError("LogLoss of an empty set");
  double total = 0.0;
  for (const Prediction& p : preds) {
    const double q = std::clamp(p.p_hat, clamp_eps, 1.0 - clamp_eps);
    total -= p.label == 1 ? std::log(q) : std::log1p(-q);
  }
  return total / static_cast<double>(preds.size());
}

EceResult ece(std::span<const Prediction> preds, std::size_t buckets) {
  if (buckets < 1) throw ConfigError("ECE needs at least one bucket");
  if (preds.empty()) throw UndefinedMetricError("ECE of an empty set");

  std::vector<double> sum_p(buckets, 0.0);
  std::vector<double> sum_y(buckets, 0.0);
  EceResult out;
  out.buckets.resize(buckets);
  const double k = static_cast<double>(buckets);
  for (const Prediction& p : preds) {
    const auto raw = static_cast<std::size_t>(std::floor(p.p_hat * k));
    const std::size_t b = std::min(raw, buckets - 1);
    sum_p[b] += p.p_hat;
    sum_y[b] += p.label;
    ++out.buckets[b].count;
  }
  double gap = 0.0;
  for (std::size_t b = 0; b < buckets; ++b) {
    gap += std::abs(sum_y[b] - sum_p[b]);
    if (out.buckets[b].count > 0) {
      const double c = static_cast<double>(out.buckets[b].count);
      out.buckets[b].mean_p_hat = sum_p[b] / c;
      out.buckets[b].mean_label = sum_y[b] / c;
    }
  }
  out.value = gap / static_cast<double>(preds.size());
  return out;
}

double pcoc(std::span<const Prediction> preds) {
  double sum_p = 0.0;
  double sum_y = 0.0;
  for (const Prediction& p : preds) {
    sum_p += p.p_hat;
    sum_y += p.label;
  }
  if (sum_y == 0.0) throw UndefinedMetricError("PCOC needs at least one positive");
  return sum_p / sum_y;
}

MetricsReport evaluate(std::span<const Prediction> preds,
                       const MetricsOptions& options) {
  MetricsReport report;
  report.count = preds.size();
  try {
    report.auc = auc(preds);
  } catch (const UndefinedMetricError&) {
  }
  try {
    const GaucResult g = gauc(preds);
    report.gauc = g.value;
    report.gauc_excluded_users = g.excluded_users;
  } catch (const UndefinedMetricError& e) {
    report.gauc_excluded_users = e.excluded_count();
  }
  try {
    report.logloss = logloss(preds, options.clamp_eps);
  } catch (const UndefinedMetricError&) {
  }
  try {
    EceResult e = ece(preds, options.ece_buckets);
    report.ece = e.value;
    report.ece_buckets = std::move(e.buckets);
  } catch (const UndefinedMetricError&) {
  }
  try {
    report.pcoc = pcoc(preds);
  } catch (const UndefinedMetricError&) {
  }
  return report;
}

std::string metrics_csv_header() {
  return "count,auc,gauc,logloss,ece,pcoc,gauc_excluded_users";
}

std::string to_csv_row(const MetricsReport& report) {
  return std::to_string(report.count) + "," + format_or_na(report.auc) + "," +
         format_or_na(report.gauc) + "," + format_or_na(report.logloss) + "," +
         format_or_na(report.ece) + "," + format_or_na(report.pcoc) + "," +
         std::to_string(report.gauc_excluded_users);
}

std::string to_text(const MetricsReport& report) {
  std::string out;
  char line[128];
  auto row = [&](const char* name, const std::optional<double>& v) {
    std::snprintf(line, sizeof(line), "%-8s %12s\n", name, format_or_na(v).c_str());
    out += line;
  };
  std::snprintf(line, sizeof(line), "%-8s %12zu\n", "count", report.count);
  out += line;
  row("AUC", report.auc);
  row("GAUC", report.gauc);
  row("LogLoss", report.logloss);
  row("ECE", report.ece);
  row("PCOC", report.pcoc);
  std::snprintf(line, sizeof(line), "%-8s %12zu\n", "excluded", report.gauc_excluded_users);
  out += line;
  if (!report.ece_buckets.empty()) {
    out += "\nbucket        count   mean_p_hat   mean_label\n";
    const double k = static_cast<double>(report.ece_buckets.size());
    for (std::size_t b = 0; b < report.ece_buckets.size(); ++b) {
      const EceBucket& e = report.ece_buckets[b];
      std::snprintf(line, sizeof(line), "[%.2f,%.2f) %9zu %12.6f %12.6f\n",
                    static_cast<double>(b) / k, static_cast<double>(b + 1) / k,
                    e.count, e.mean_p_hat, e.mean_label);
      out += line;
    }
  }
  return out;
}

}  // namespace jrc
