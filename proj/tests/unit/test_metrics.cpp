#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "jrc/error.hpp"
#include "jrc/metrics.hpp"
#include "oracles.hpp"

namespace jrc {
namespace {

std::vector<Prediction> preds_of(std::vector<double> p, std::vector<int> y,
                                 std::vector<UserId> u = {}) {
  std::vector<Prediction> out;
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.push_back(Prediction{p[i], y[i], u.empty() ? 0 : u[i]});
  }
  return out;
}

// Random predictions with frequent ties (scores on a coarse grid).
std::vector<Prediction> random_preds(Rng& rng, std::size_t n, std::size_t users) {
  std::vector<Prediction> out(n);
  const std::uint64_t grid = 1 + uniform_index(rng, 50);
  for (auto& p : out) {
    p.p_hat = static_cast<double>(uniform_index(rng, grid + 1)) / static_cast<double>(grid);
    p.label = bernoulli(rng, 0.1 + 0.8 * uniform01(rng)) ? 1 : 0;
    p.user_id = uniform_index(rng, users);
  }
  return out;
}

TEST(Auc, WorkedExamples) {
  EXPECT_EQ(auc(preds_of({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})), 0.75);
  EXPECT_EQ(auc(preds_of({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})), 1.0);
  EXPECT_EQ(auc(preds_of({0.3, 0.3, 0.3, 0.3}, {0, 1, 0, 1})), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(preds_of({0.1, 0.2}, {1, 1})), UndefinedMetricError);
  EXPECT_THROW(auc(preds_of({}, {})), UndefinedMetricError);
}

TEST(Auc, EqualsPairOracleExactly) {
  Rng rng(1);
  int checked = 0;
  while (checked < 200) {
    const auto preds = random_preds(rng, 1 + uniform_index(rng, 1000), 1);
    bool pos = false, neg = false;
    for (const auto& p : preds) (p.label ? pos : neg) = true;
    if (!pos || !neg) continue;
    ASSERT_EQ(auc(preds), oracle::pair_auc(preds));
    ++checked;
  }
}

TEST(Gauc, OneUserEqualsAuc) {
  Rng rng(2);
  const auto preds = random_preds(rng, 300, 1);
  const auto g = gauc(preds);
  EXPECT_EQ(g.value, auc(preds));
  EXPECT_EQ(g.included_users, 1u);
}

TEST(Gauc, WorkedExample) {
  // User A: 4 impressions, perfectly ranked. User B: 6 impressions, all tied.
  const auto preds = preds_of({0.1, 0.2, 0.8, 0.9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
                              {0, 0, 1, 1, 0, 1, 0, 1, 0, 1}, {1, 1, 1, 1, 2, 2, 2, 2, 2, 2});
  EXPECT_NEAR(gauc(preds).value, 0.7, 1e-15);
}

TEST(Gauc, AllUsersSingleClassReportsExcludedCount) {
  const auto preds = preds_of({0.1, 0.2, 0.3}, {1, 0, 1}, {1, 2, 3});
  try {
    gauc(preds);
    FAIL() << "expected UndefinedMetricError";
  } catch (const UndefinedMetricError& e) {
    EXPECT_EQ(e.excluded_count(), 3u);
  }
}

TEST(Gauc, EqualsPerUserComposition) {
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto preds = random_preds(rng, 50 + uniform_index(rng, 500), 1 + uniform_index(rng, 20));
    std::map<UserId, std::vector<Prediction>> by_user;
    for (const auto& p : preds) by_user[p.user_id].push_back(p);
    double num = 0.0, den = 0.0;
    std::size_t excluded = 0;
    for (const auto& [u, ps] : by_user) {
      bool pos = false, neg = false;
      for (const auto& p : ps) (p.label ? pos : neg) = true;
      if (!pos || !neg) {
        ++excluded;
        continue;
      }
      num += static_cast<double>(ps.size()) * oracle::pair_auc(ps);
      den += static_cast<double>(ps.size());
    }
    if (den == 0.0) {
      EXPECT_THROW(gauc(preds), UndefinedMetricError);
      continue;
    }
    const auto g = gauc(preds);
    EXPECT_NEAR(g.value, num / den, 1e-12);
    EXPECT_EQ(g.excluded_users, excluded);
  }
}

TEST(Logloss, WorkedExamples) {
  EXPECT_LE(logloss(preds_of({1.0, 0.0}, {1, 0}), 1e-15), 1e-14);
  EXPECT_NEAR(logloss(preds_of({0.5, 0.5, 0.5}, {1, 0, 1})), std::log(2.0), 1e-15);
  EXPECT_NEAR(logloss(preds_of({0.9, 0.2}, {1, 0})), (-std::log(0.9) - std::log(0.8)) / 2.0,
              1e-15);
  EXPECT_NEAR(logloss(preds_of({0.9, 0.2}, {1, 0})), 0.164252, 1e-6);
  EXPECT_THROW(logloss(preds_of({}, {})), UndefinedMetricError);
  // Clamping keeps a confidently wrong prediction finite.
  EXPECT_NEAR(logloss(preds_of({0.0}, {1}), 1e-7), -std::log(1e-7), 1e-9);
}

TEST(Ece, WorkedExamples) {
  EXPECT_EQ(ece(preds_of({0.0, 1.0, 1.0}, {0, 1, 1})).value, 0.0);
  EXPECT_NEAR(ece(preds_of({0.05, 0.15, 0.15}, {0, 1, 0}), 10).value, 0.25, 1e-15);
  EXPECT_THROW(ece(preds_of({0.5}, {1}), 0), ConfigError);
  const auto r = ece(preds_of({0.05, 0.15, 0.15, 1.0}, {0, 1, 0, 1}), 10);
  ASSERT_EQ(r.buckets.size(), 10u);
  EXPECT_EQ(r.buckets[0].count, 1u);
  EXPECT_EQ(r.buckets[1].count, 2u);
  EXPECT_EQ(r.buckets[9].count, 1u);
  EXPECT_NEAR(r.buckets[1].mean_p_hat, 0.15, 1e-15);
  EXPECT_NEAR(r.buckets[1].mean_label, 0.5, 1e-15);
}

TEST(Ece, SingleBucketIdentity) {
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    auto preds = random_preds(rng, 1 + uniform_index(rng, 500), 1);
    for (auto& p : preds) p.p_hat = uniform01(rng);
    double sum_y = 0.0, sum_p = 0.0;
    for (const auto& p : preds) {
      sum_y += p.label;
      sum_p += p.p_hat;
    }
    const double n = static_cast<double>(preds.size());
    const double direct = std::abs(sum_y - sum_p) / n;
    EXPECT_NEAR(ece(preds, 1).value, direct, 1e-12);
    if (sum_y > 0.0) {
      EXPECT_NEAR(std::abs(pcoc(preds) - 1.0) * sum_y / n, direct, 1e-12);
    }
  }
}

TEST(Pcoc, WorkedExamples) {
  EXPECT_EQ(pcoc(preds_of({1.0, 0.0, 1.0}, {1, 0, 1})), 1.0);
  EXPECT_EQ(pcoc(preds_of({0.5, 0.5, 0.5, 0.5}, {1, 0, 1, 0})), 1.0);
  EXPECT_NEAR(pcoc(preds_of({0.2, 0.4}, {0, 1})), 0.6, 1e-15);
  EXPECT_THROW(pcoc(preds_of({0.2, 0.4}, {0, 0})), UndefinedMetricError);
}

TEST(Evaluate, UndefinedMetricsBecomeGaps) {
  const auto r = evaluate(preds_of({0.2, 0.4}, {0, 0}, {1, 1}));
  EXPECT_FALSE(r.auc);
  EXPECT_FALSE(r.gauc);
  EXPECT_FALSE(r.pcoc);
  ASSERT_TRUE(r.logloss);
  ASSERT_TRUE(r.ece);
  EXPECT_EQ(r.gauc_excluded_users, 1u);
  const std::string row = to_csv_row(r);
  EXPECT_NE(row.find("NA"), std::string::npos);
  const std::string header = metrics_csv_header();
  EXPECT_EQ(std::count(row.begin(), row.end(), ','), std::count(header.begin(), header.end(), ','));
}

TEST(Evaluate, AllMetricsOnMixedInput) {
  Rng rng(5);
  auto preds = random_preds(rng, 400, 5);
  for (auto& p : preds) p.p_hat = uniform01(rng);
  const auto r = evaluate(preds);
  ASSERT_TRUE(r.auc && r.gauc && r.logloss && r.ece && r.pcoc);
  EXPECT_EQ(*r.auc, auc(preds));
  EXPECT_EQ(r.count, 400u);
  EXPECT_FALSE(to_text(r).empty());
}

}  // namespace
}  // namespace jrc
