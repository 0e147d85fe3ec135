#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "jrc/context.hpp"
#include "jrc/error.hpp"
#include "jrc/random.hpp"

namespace jrc {
namespace {

Sample event(UserId user, std::int64_t ts, FeatureId tag = 0) {
  Sample s;
  s.user_id = user;
  s.timestamp = ts;
  s.features = {tag};
  return s;
}

std::vector<std::vector<int>> dense(const ContextMask& m) {
  std::vector<std::vector<int>> out(m.size(), std::vector<int>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) out[i][j] = m(i, j) ? 1 : 0;
  }
  return out;
}

TEST(BuildMask, WorkedExamples) {
  EXPECT_EQ(dense(build_mask(std::vector<ContextKey>{1, 1, 2})),
            (std::vector<std::vector<int>>{{1, 1, 0}, {1, 1, 0}, {0, 0, 1}}));
  EXPECT_EQ(build_mask(std::vector<ContextKey>{4, 5, 6, 7}), ContextMask(4));
  const ContextMask ones = build_mask(std::vector<ContextKey>{3, 3, 3});
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(ones(i, j));
  }
  EXPECT_EQ(build_mask(std::vector<ContextKey>{}).size(), 0u);
}

TEST(BuildMask, ExhaustiveOverSmallKeyVectors) {
  std::size_t checked = 0;
  for (std::size_t n = 0; n <= 6; ++n) {
    std::size_t total = 1;
    for (std::size_t k = 0; k < n; ++k) total *= 3;
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<ContextKey> keys(n);
      std::size_t c = code;
      for (auto& k : keys) {
        k = c % 3;
        c /= 3;
      }
      const ContextMask m = build_mask(keys);
      ASSERT_EQ(m.size(), n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) ASSERT_EQ(m(i, j), keys[i] == keys[j]);
      }
      ASSERT_TRUE(m.is_equivalence());
      ++checked;
    }
  }
  EXPECT_EQ(checked, 1u + 3 + 9 + 27 + 81 + 243 + 729);
}

TEST(ContextMask, ComponentsAndChecks) {
  const ContextMask m = build_mask(std::vector<ContextKey>{9, 2, 9, 5});
  EXPECT_EQ(m.components(), (std::vector<std::size_t>{0, 1, 0, 2}));
  ContextMask bad(3);
  bad.set(0, 1, true);
  EXPECT_FALSE(bad.is_symmetric_with_unit_diagonal());
  bad.set(1, 0, true);
  bad.set(1, 2, true);
  bad.set(2, 1, true);
  EXPECT_TRUE(bad.is_symmetric_with_unit_diagonal());
  EXPECT_FALSE(bad.is_equivalence());
  EXPECT_THROW(bad.components(), InputError);
}

TEST(AssignContext, BatchGivesOneKey) {
  const std::vector<Sample> s = {event(1, 0), event(2, 5), event(3, 9)};
  EXPECT_EQ(assign_context(s, {ContextKind::kBatch, 600}), (std::vector<ContextKey>{0, 0, 0}));
}

TEST(AssignContext, SessionWindow) {
  const ContextPolicy policy{ContextKind::kSession, 600};
  auto keys = assign_context(std::vector<Sample>{event(1, 0), event(1, 300)}, policy);
  EXPECT_EQ(keys[0], keys[1]);
  keys = assign_context(std::vector<Sample>{event(1, 0), event(1, 700)}, policy);
  EXPECT_NE(keys[0], keys[1]);
  // The window is anchored at its first sample, not sliding.
  keys = assign_context(
      std::vector<Sample>{event(1, 0), event(1, 500), event(1, 900), event(2, 10)}, policy);
  EXPECT_EQ(keys[0], keys[1]);
  EXPECT_NE(keys[1], keys[2]);
  EXPECT_NE(keys[0], keys[3]);
  // Boundary: exactly one window length later opens a new window.
  keys = assign_context(std::vector<Sample>{event(1, 0), event(1, 600)}, policy);
  EXPECT_NE(keys[0], keys[1]);
}

TEST(AssignContext, DomainAndMissingAttribute) {
  std::vector<Sample> s = {event(1, 0), event(2, 0), event(3, 0)};
  s[0].domain = 7;
  s[1].domain = 8;
  s[2].domain = 7;
  const auto keys = assign_context(s, {ContextKind::kDomain, 600});
  EXPECT_EQ(keys, (std::vector<ContextKey>{7, 8, 7}));
  EXPECT_EQ(dense(build_mask(keys)),
            (std::vector<std::vector<int>>{{1, 0, 1}, {0, 1, 0}, {1, 0, 1}}));
  try {
    assign_context(s, {ContextKind::kGender, 600});
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("sample 0"), std::string::npos) << what;
    EXPECT_NE(what.find("gender"), std::string::npos) << what;
  }
}

TEST(ContextPolicy, ParseAndValidate) {
  EXPECT_EQ(parse_context_kind("session"), ContextKind::kSession);
  EXPECT_EQ(parse_context_kind("gender"), ContextKind::kGender);
  EXPECT_THROW(parse_context_kind("week"), ConfigError);
  EXPECT_THROW((ContextPolicy{ContextKind::kSession, 0}.validate()), ConfigError);
}

TEST(DropForRank, Extremes) {
  const ContextBatch batch = make_context_batch(
      std::vector<Sample>(50, event(1, 0)), ContextPolicy{ContextKind::kBatch, 600});
  for (auto f : drop_for_rank(batch, 0.0, 3)) EXPECT_EQ(f, 1);
  for (auto f : drop_for_rank(batch, 1.0, 3)) EXPECT_EQ(f, 0);
  EXPECT_THROW(drop_for_rank(batch, 1.5, 3), ConfigError);
  EXPECT_THROW(drop_for_rank(batch, -0.1, 3), ConfigError);
  EXPECT_EQ(drop_for_rank(batch, 0.5, 11), drop_for_rank(batch, 0.5, 11));
}

TEST(DropForRank, HalfRateWithinBinomialInterval) {
  const ContextBatch batch = make_context_batch(
      std::vector<Sample>(1000, event(1, 0)), ContextPolicy{ContextKind::kBatch, 600});
  const double z99 = 2.5758293035489004;
  // One draw: 99% interval of Binomial(1000, 0.5).
  const auto flags = drop_for_rank(batch, 0.5, 0);
  const double kept = static_cast<double>(std::count(flags.begin(), flags.end(), 1));
  EXPECT_LE(std::abs(kept - 500.0), z99 * std::sqrt(250.0));

  // Pooled over 20 seeds: Binomial(20000, 0.5).
  double pooled = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto f = drop_for_rank(batch, 0.5, seed);
    pooled += static_cast<double>(std::count(f.begin(), f.end(), 1));
  }
  EXPECT_LE(std::abs(pooled - 10000.0), z99 * std::sqrt(5000.0));
}

TEST(StreamBatcher, OneUserThreeClicksIsOneBatch) {
  const std::vector<Sample> events = {event(1, 0), event(1, 120), event(1, 500)};
  const auto batches = batch_stream(events, {ContextKind::kSession, 600}, 8);
  ASSERT_EQ(batches.size(), 1u);
  EXPECT_EQ(batches[0].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_TRUE(batches[0].mask(i, j));
  }
}

TEST(StreamBatcher, InterleavedUsersGiveBlockMask) {
  const std::vector<Sample> events = {event(1, 0), event(2, 10), event(1, 20), event(2, 30)};
  const auto batches = batch_stream(events, {ContextKind::kSession, 600}, 8);
  ASSERT_EQ(batches.size(), 1u);
  const ContextBatch& b = batches[0];
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      EXPECT_EQ(b.mask(i, j), b.samples[i].user_id == b.samples[j].user_id);
    }
  }
  EXPECT_EQ(std::set<ContextKey>(b.context_index.begin(), b.context_index.end()).size(), 2u);
}

TEST(StreamBatcher, EmptyStream) {
  EXPECT_TRUE(batch_stream(std::vector<Sample>{}, {ContextKind::kSession, 600}, 8).empty());
}

TEST(StreamBatcher, OversizeContextIsSplitWithWarning) {
  std::vector<Sample> events;
  for (int k = 0; k < 10; ++k) events.push_back(event(1, k));
  std::vector<std::string> warnings;
  StreamBatcher batcher({ContextKind::kSession, 600}, 4,
                        [&](const std::string& w) { warnings.push_back(w); });
  for (const auto& e : events) batcher.push(e);
  batcher.finish();
  std::size_t total = 0;
  while (batcher.has_batch()) {
    const ContextBatch b = batcher.pop_batch();
    EXPECT_LE(b.size(), 4u);
    total += b.size();
  }
  EXPECT_EQ(total, 10u);
  EXPECT_EQ(batcher.oversize_splits(), 2u);
  EXPECT_EQ(warnings.size(), 2u);
}

TEST(StreamBatcher, OutOfOrderWithinWindowIsReordered) {
  const std::vector<Sample> events = {event(1, 100), event(2, 50), event(1, 30), event(1, 700)};
  const auto batches = batch_stream(events, {ContextKind::kSession, 600}, 16);
  std::vector<std::int64_t> order;
  for (const auto& b : batches) {
    for (const auto& s : b.samples) order.push_back(s.timestamp);
  }
  EXPECT_EQ(order.size(), 4u);
  // User 1 at 30 and 100 share a window; 700 is a later window.
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = 0; j < b.size(); ++j) {
        const auto& a = b.samples[i];
        const auto& c = b.samples[j];
        const bool same = a.user_id == c.user_id && std::abs(a.timestamp - c.timestamp) < 600;
        EXPECT_EQ(b.mask(i, j), same);
      }
    }
  }
}

TEST(StreamBatcher, RegressionBeyondWindowIsStreamError) {
  StreamBatcher batcher({ContextKind::kSession, 600}, 8);
  batcher.push(event(1, 5000));
  batcher.push(event(2, 4500));
  EXPECT_THROW(batcher.push(event(3, 4000)), StreamError);
}

TEST(StreamBatcher, NonSessionPoliciesChunkSequentially) {
  std::vector<Sample> events;
  for (int k = 0; k < 10; ++k) {
    Sample s = event(k, k * 10, k);
    s.domain = k % 2;
    events.push_back(s);
  }
  const auto batches = batch_stream(events, {ContextKind::kDomain, 600}, 4);
  ASSERT_EQ(batches.size(), 3u);
  EXPECT_EQ(batches[0].size(), 4u);
  EXPECT_EQ(batches[2].size(), 2u);
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.size(); ++i) {
      EXPECT_EQ(b.context_index[i], *b.samples[i].domain);
    }
  }
}

// Randomised stream property: every sample comes out exactly once, batches
// respect max_batch, masks follow the keys, and each session context (as
// assigned over the whole stream) lands in a single batch unless it is
// larger than max_batch.
TEST(StreamBatcher, RandomStreamsConserveSamplesAndKeepContextsWhole) {
  const std::int64_t window = 600;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    const std::size_t max_batch = 8 + uniform_index(rng, 40);
    std::vector<Sample> events;
    std::int64_t clock = 0;
    for (FeatureId tag = 0; tag < 10000; ++tag) {
      clock += static_cast<std::int64_t>(uniform_index(rng, 30));
      const std::int64_t jitter = static_cast<std::int64_t>(uniform_index(rng, 200));
      events.push_back(event(uniform_index(rng, 40), std::max<std::int64_t>(0, clock - jitter),
                             tag));
    }
    std::size_t splits_seen = 0;
    StreamBatcher batcher({ContextKind::kSession, window}, max_batch,
                          [&](const std::string&) { ++splits_seen; });
    std::vector<ContextBatch> batches;
    for (const auto& e : events) {
      batcher.push(e);
      while (batcher.has_batch()) batches.push_back(batcher.pop_batch());
    }
    batcher.finish();
    while (batcher.has_batch()) batches.push_back(batcher.pop_batch());

    // Reference contexts over the time-ordered stream.
    std::vector<Sample> ordered = events;
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const Sample& a, const Sample& b) { return a.timestamp < b.timestamp; });
    const auto ref_keys = assign_context(ordered, {ContextKind::kSession, window});
    std::map<FeatureId, ContextKey> ref_of;
    std::map<ContextKey, std::size_t> ref_size;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
      ref_of[ordered[i].features[0]] = ref_keys[i];
      ++ref_size[ref_keys[i]];
    }

    std::multiset<FeatureId> seen;
    std::map<ContextKey, std::set<std::size_t>> batches_of_context;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const ContextBatch& batch = batches[b];
      ASSERT_LE(batch.size(), max_batch);
      ASSERT_GT(batch.size(), 0u);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        seen.insert(batch.samples[i].features[0]);
        batches_of_context[ref_of[batch.samples[i].features[0]]].insert(b);
        for (std::size_t j = 0; j < batch.size(); ++j) {
          ASSERT_EQ(batch.mask(i, j), batch.context_index[i] == batch.context_index[j]);
          // Same batch key implies same reference context.
          if (batch.context_index[i] == batch.context_index[j]) {
            ASSERT_EQ(ref_of[batch.samples[i].features[0]],
                      ref_of[batch.samples[j].features[0]]);
          }
        }
      }
    }
    ASSERT_EQ(seen.size(), events.size());
    for (FeatureId tag = 0; tag < events.size(); ++tag) ASSERT_EQ(seen.count(tag), 1u);

    std::size_t oversize = 0;
    for (const auto& [key, where] : batches_of_context) {
      if (ref_size[key] > max_batch) {
        ++oversize;
        continue;
      }
      ASSERT_EQ(where.size(), 1u) << "context " << key << " split across batches";
      // Whole context in one batch and under one key.
      const ContextBatch& batch = batches[*where.begin()];
      std::set<ContextKey> keys;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (ref_of[batch.samples[i].features[0]] == key) keys.insert(batch.context_index[i]);
      }
      ASSERT_EQ(keys.size(), 1u);
    }
    EXPECT_EQ(batcher.oversize_splits(), splits_seen);
    if (oversize == 0) EXPECT_EQ(splits_seen, 0u);
  }
}

}  // namespace
}  // namespace jrc
