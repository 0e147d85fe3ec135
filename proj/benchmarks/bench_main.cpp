#include <benchmark/benchmark.h>

#include <vector>

#include "jrc/context.hpp"
#include "jrc/losses.hpp"
#include "jrc/metrics.hpp"
#include "jrc/model.hpp"
#include "jrc/random.hpp"

namespace {

using namespace jrc;

// Batch of size n with sessions of about `per_context` samples.
LossInputs make_inputs(std::size_t n, std::size_t per_context) {
  Rng rng(1);
  LossInputs in;
  std::vector<ContextKey> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    in.logits.push_back({uniform_symmetric(rng, 2), uniform_symmetric(rng, 2)});
    in.labels.push_back(bernoulli(rng, 0.1) ? 1 : 0);
    keys[i] = i / per_context;
  }
  in.mask = build_mask(keys);
  return in;
}

void BM_JrcLoss(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 10);
  const auto weights = JrcWeights::from_ratio(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(jrc_loss(in, weights));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_JrcLoss)->RangeMultiplier(4)->Range(64, 1024);

void BM_ListNetLoss(benchmark::State& state) {
  const auto in = make_inputs(static_cast<std::size_t>(state.range(0)), 10);
  std::vector<double> scores;
  for (const auto& t : in.logits) scores.push_back(t.click - t.nonclick);
  for (auto _ : state) benchmark::DoNotOptimize(listnet_loss(scores, in.labels, in.mask));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ListNetLoss)->RangeMultiplier(4)->Range(64, 1024);

void BM_BuildMask(benchmark::State& state) {
  std::vector<ContextKey> keys(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = i / 10;
  for (auto _ : state) benchmark::DoNotOptimize(build_mask(keys));
}
BENCHMARK(BM_BuildMask)->RangeMultiplier(4)->Range(64, 1024);

std::vector<Prediction> make_preds(std::size_t n) {
  Rng rng(2);
  std::vector<Prediction> p(n);
  for (auto& x : p) {
    x.p_hat = uniform01(rng);
    x.label = bernoulli(rng, 0.2) ? 1 : 0;
    x.user_id = uniform_index(rng, n / 50 + 1);
  }
  return p;
}

void BM_Auc(benchmark::State& state) {
  const auto preds = make_preds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(auc(preds));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->RangeMultiplier(10)->Range(1000, 100000);

void BM_Gauc(benchmark::State& state) {
  const auto preds = make_preds(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gauc(preds));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Gauc)->RangeMultiplier(10)->Range(1000, 100000);

void BM_ForwardBackward(benchmark::State& state) {
  ModelConfig cfg;
  cfg.vocab_sizes = {2000, 500, 4, 3};
  const ModelParams init = init_model(cfg);
  ModelParams params = init;
  Rng rng(3);
  std::vector<Sample> batch(static_cast<std::size_t>(state.range(0)));
  for (auto& s : batch) {
    s.features = {static_cast<FeatureId>(uniform_index(rng, 2000)),
                  static_cast<FeatureId>(uniform_index(rng, 500)),
                  static_cast<FeatureId>(uniform_index(rng, 4)),
                  static_cast<FeatureId>(uniform_index(rng, 3))};
  }
  const std::vector<LogitPair> upstream(batch.size(), LogitPair{0.01, -0.01});
  for (auto _ : state) {
    const ForwardPass pass = forward(params, batch);
    params.zero_grad();
    backward(params, pass, upstream);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackward)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
