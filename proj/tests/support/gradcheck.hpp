#pragma once

// Finite-difference checks of every loss, at the logit level and through a
// small embedding MLP.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "jrc/context.hpp"
#include "jrc/losses.hpp"
#include "jrc/model.hpp"
#include "jrc/random.hpp"
#include "oracles.hpp"

namespace jrc::gradcheck {

struct LossValue {
  double value = 0.0;
  std::vector<LogitPair> dlogits;
};

using LossFn = std::function<LossValue(const std::vector<LogitPair>&, const std::vector<int>&,
                                       const ContextMask&)>;

struct LossCase {
  std::string name;
  LossFn fn;
};

inline LossValue from_scores(const ScoreLossResult& r) {
  LossValue out{r.value, {}};
  for (double g : r.dscores) out.dlogits.push_back(LogitPair{-g, g});
  return out;
}

inline std::vector<double> scores_of(const std::vector<LogitPair>& t) {
  std::vector<double> s;
  for (const auto& p : t) s.push_back(p.click - p.nonclick);
  return s;
}

inline std::vector<LossCase> all_losses() {
  std::vector<LossCase> cases;
  cases.push_back({"calib", [](const auto& t, const auto& y, const auto& m) {
                     auto r = calib_loss({t, y, m});
                     return LossValue{r.value, r.dlogits};
                   }});
  cases.push_back({"rank", [](const auto& t, const auto& y, const auto& m) {
                     auto r = rank_loss({t, y, m});
                     return LossValue{r.value, r.dlogits};
                   }});
  for (double alpha : {0.0, 0.3, 1.0}) {
    cases.push_back({"jrc(alpha=" + std::to_string(alpha).substr(0, 3) + ")",
                     [alpha](const auto& t, const auto& y, const auto& m) {
                       auto r = jrc_loss({t, y, m}, JrcWeights::from_alpha(alpha));
                       return LossValue{r.value, r.dlogits};
                     }});
  }
  cases.push_back({"pointwise", [](const auto& t, const auto& y, const auto&) {
                     return from_scores(pointwise_loss(scores_of(t), y));
                   }});
  cases.push_back({"ranknet", [](const auto& t, const auto& y, const auto& m) {
                     return from_scores(ranknet_loss(scores_of(t), y, m));
                   }});
  cases.push_back({"listnet", [](const auto& t, const auto& y, const auto& m) {
                     return from_scores(listnet_loss(scores_of(t), y, m));
                   }});
  cases.push_back({"combined_pair", [](const auto& t, const auto& y, const auto& m) {
                     return from_scores(combined_loss(scores_of(t), y, m,
                                                      JrcWeights::from_alpha(0.4),
                                                      CombinedKind::kPair));
                   }});
  cases.push_back({"combined_list", [](const auto& t, const auto& y, const auto& m) {
                     return from_scores(combined_loss(scores_of(t), y, m,
                                                      JrcWeights::from_alpha(0.4),
                                                      CombinedKind::kList));
                   }});
  return cases;
}

struct Instance {
  std::vector<LogitPair> logits;
  std::vector<int> labels;
  std::vector<ContextKey> keys;
  ContextMask mask;
};

inline Instance random_instance(Rng& rng, std::size_t max_batch = 8) {
  Instance inst;
  const std::size_t b = 2 + uniform_index(rng, max_batch - 1);
  inst.logits = oracle::random_logits(rng, b);
  inst.labels = oracle::random_labels(rng, b);
  inst.keys = oracle::random_keys(rng, b, 1 + uniform_index(rng, 3));
  inst.mask = build_mask(inst.keys);
  return inst;
}

// Worst relative error between analytic and central-difference gradients
// with respect to the logits.
inline double logit_gradient_error(const LossCase& loss, const Instance& inst,
                                   double eps = 1e-4) {
  const LossValue analytic = loss.fn(inst.logits, inst.labels, inst.mask);
  const auto numeric = oracle::numeric_gradient(
      [&](const std::vector<double>& x) {
        return loss.fn(oracle::unflatten(x), inst.labels, inst.mask).value;
      },
      oracle::flatten(inst.logits), eps);
  return oracle::max_relative_error(oracle::flatten(analytic.dlogits), numeric);
}

struct ModelInstance {
  ModelParams params;
  std::vector<Sample> samples;
  std::vector<int> labels;
  ContextMask mask;
};

// Smallest |pre-activation| over the batch; central differences are only
// valid away from the ReLU kinks.
inline double kink_margin(const ModelParams& params, const std::vector<Sample>& samples) {
  const ForwardPass pass = forward(params, samples);
  double margin = INFINITY;
  for (const auto& layer : pass.pre_activations) {
    for (double z : layer) margin = std::min(margin, std::abs(z));
  }
  return margin;
}

inline ModelInstance random_model_instance(Rng& rng, double min_margin = 1e-3) {
  for (;;) {
    ModelConfig cfg;
    cfg.vocab_sizes = {4, 5};
    cfg.embed_dim = 1 + uniform_index(rng, 4);
    cfg.hidden_dims = {3 + uniform_index(rng, 3)};
    cfg.init_scale = 0.7;
    cfg.seed = rng();
    ModelInstance inst;
    inst.params = init_model(cfg);
    // Non-zero biases so that no unit is exactly at its kink.
    for (std::size_t l = 0; l < inst.params.num_layers(); ++l) {
      for (double& v : inst.params.bias(l).value) v = uniform_symmetric(rng, 0.5);
    }
    const std::size_t b = 2 + uniform_index(rng, 7);
    std::vector<ContextKey> keys = oracle::random_keys(rng, b, 1 + uniform_index(rng, 3));
    for (std::size_t i = 0; i < b; ++i) {
      Sample s;
      s.features = {static_cast<FeatureId>(uniform_index(rng, 4)),
                    static_cast<FeatureId>(uniform_index(rng, 5))};
      s.label = bernoulli(rng, 0.5) ? 1 : 0;
      inst.samples.push_back(s);
      inst.labels.push_back(s.label);
    }
    inst.mask = build_mask(keys);
    if (kink_margin(inst.params, inst.samples) >= min_margin) return inst;
  }
}

// Worst relative error of d(loss)/d(theta) over every parameter.
inline double param_gradient_error(const LossCase& loss, ModelInstance inst, double eps = 1e-4) {
  const ForwardPass pass = forward(inst.params, inst.samples);
  const LossValue lv = loss.fn(pass.logits, inst.labels, inst.mask);
  inst.params.zero_grad();
  backward(inst.params, pass, lv.dlogits);

  std::vector<double> analytic, numeric;
  for (ParamBlock& block : inst.params.blocks()) {
    for (std::size_t k = 0; k < block.size(); ++k) {
      const double orig = block.value[k];
      block.value[k] = orig + eps;
      const double up = loss.fn(forward(inst.params, inst.samples).logits, inst.labels,
                                inst.mask).value;
      block.value[k] = orig - eps;
      const double down = loss.fn(forward(inst.params, inst.samples).logits, inst.labels,
                                  inst.mask).value;
      block.value[k] = orig;
      numeric.push_back((up - down) / (2.0 * eps));
      analytic.push_back(block.grad[k]);
    }
  }
  return oracle::max_relative_error(analytic, numeric);
}

}  // namespace jrc::gradcheck
