#include "jrc/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jrc/error.hpp"

namespace jrc {

namespace {

void validate_labels(std::span<const int> labels) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw InputError("label of sample " + std::to_string(i) +
                       " is not in {0, 1}");
    }
  }
}

void validate_mask(const ContextMask& mask, std::size_t n) {
  if (mask.size() != n) {
    throw InputError("mask is " + std::to_string(mask.size()) + "x" +
                     std::to_string(mask.size()) + " for a batch of " +
                     std::to_string(n));
  }
  if (!mask.is_symmetric_with_unit_diagonal()) {
    throw InputError("mask must be symmetric with a unit diagonal");
  }
}

void validate_scores(std::span<const double> scores,
                     std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw InputError("got " + std::to_string(scores.size()) + " scores and " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw InputError("score of sample " + std::to_string(i) +
                       " is not finite");
    }
  }
  validate_labels(labels);
}

bool participates(const std::vector<std::uint8_t>& flags, std::size_t i) {
  return flags.empty() || flags[i] != 0;
}

// Shared machinery of every masked listwise softmax in this file. For an
// anchor column j, the softmax set is {k : mask(k, j), k participating}.
// `channel(k)` returns the value entering the softmax for the channel the
// caller is working on.
struct SoftmaxSet {
  std::vector<std::size_t> members;
  double lse = 0.0;
};

template <typename Value>
SoftmaxSet masked_softmax_set(const ContextMask& mask,
                              const std::vector<std::uint8_t>& participation,
                              std::size_t anchor, Value value) {
  SoftmaxSet set;
  double max_v = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < mask.size(); ++k) {
    if (mask(k, anchor) && participates(participation, k)) {
      set.members.push_back(k);
      max_v = std::max(max_v, value(k));
    }
  }
  double sum = 0.0;
  for (std::size_t k : set.members) sum += std::exp(value(k) - max_v);
  set.lse = max_v + std::log(sum);
  return set;
}

}  // namespace

void LossInputs::validate() const {
  const std::size_t n = logits.size();
  if (labels.size() != n) {
    throw InputError("got " + std::to_string(n) + " logits and " +
                     std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(logits[i].nonclick) || !std::isfinite(logits[i].click)) {
      throw InputError("logits of sample " + std::to_string(i) +
                       " are not finite");
    }
  }
  validate_labels(labels);
  validate_mask(mask, n);
}

JrcWeights JrcWeights::from_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  return JrcWeights(alpha);
}

JrcWeights JrcWeights::from_ratio(double ratio) {
  if (!(ratio >= 0.0)) {
    throw ConfigError("weight ratio (1-alpha)/alpha must be >= 0, got " +
                      std::to_string(ratio));
  }
  if (std::isinf(ratio)) return JrcWeights(0.0);
  return JrcWeights(1.0 / (1.0 + ratio));
}

double JrcWeights::ratio() const {
  if (alpha_ == 0.0) return std::numeric_limits<double>::infinity();
  return (1.0 - alpha_) / alpha_;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double predict_ctr(const LogitPair& logit) {
  if (!std::isfinite(logit.nonclick) || !std::isfinite(logit.click)) {
    throw InputError("predict_ctr: non-finite logit");
  }
  return sigmoid(logit.click - logit.nonclick);
}

LossResult calib_loss(const LossInputs& inputs) {
  inputs.validate();
  const std::size_t n = inputs.logits.size();
  LossResult result;
  result.dlogits.assign(n, LogitPair{});
  result.terms.assign(n, 0.0);
  if (n == 0) return result;

  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const LogitPair& t = inputs.logits[i];
    const int y = inputs.labels[i];
    // -log softmax(t)[y] = log(1 + exp(t[1-y] - t[y])).
    const double term = softplus(t[1 - y] - t[y]);
    result.terms[i] = term;
    total += term;
    const double residual = sigmoid(t.click - t.nonclick) - y;
    result.dlogits[i].click = residual * inv_n;
    result.dlogits[i].nonclick = -residual * inv_n;
  }
  result.value = total * inv_n;
  return result;
}

LossResult rank_loss(const LossInputs& inputs, const RankOptions& options) {
  inputs.validate();
  const std::size_t n = inputs.logits.size();
  const auto& flags = options.participation;
  if (!flags.empty() && flags.size() != n) {
    throw InputError("participation flags: expected " + std::to_string(n) +
                     ", got " + std::to_string(flags.size()));
  }

  LossResult result;
  result.dlogits.assign(n, LogitPair{});
  result.terms.assign(n, 0.0);
  if (n == 0) return result;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (std::size_t j = 0; j < n; ++j) {
    if (!participates(flags, j)) continue;
    std::array<SoftmaxSet, 2> sets;
    for (int c = 0; c < 2; ++c) {
      sets[c] = masked_softmax_set(inputs.mask, flags, j, [&](std::size_t k) {
        return inputs.logits[k][c];
      });
    }
    const auto& members = sets[0].members;
    const double context_size = static_cast<double>(members.size());

    // Per-sample term of the anchor itself (row j == column j by symmetry).
    const int y_j = inputs.labels[j];
    result.terms[j] = sets[y_j].lse - inputs.logits[j][y_j];

    // Samples whose terms are evaluated against this anchor's softmax set,
    // and the weight each term receives in the batch value.
    double weight = 0.0;
    std::vector<std::size_t> owners;
    switch (options.reduction) {
      case RankReduction::kContextColumns:
        owners = members;
        weight = inv_n / context_size;
        break;
      case RankReduction::kSampleMean:
        owners = {j};
        weight = inv_n;
        break;
      case RankReduction::kContextSizeWeighted:
        owners = {j};
        weight = inv_n / context_size;
        break;
    }

    std::array<double, 2> owners_with_label = {0.0, 0.0};
    for (std::size_t i : owners) {
      const int y = inputs.labels[i];
      result.value += weight * (sets[y].lse - inputs.logits[i][y]);
      result.dlogits[i][y] -= weight;
      owners_with_label[y] += 1.0;
    }
    for (int c = 0; c < 2; ++c) {
      if (owners_with_label[c] == 0.0) continue;
      const double scale = weight * owners_with_label[c];
      for (std::size_t k : sets[c].members) {
        result.dlogits[k][c] +=
            scale * std::exp(inputs.logits[k][c] - sets[c].lse);
      }
    }
  }
  return result;
}

JrcLossResult jrc_loss(const LossInputs& inputs, const JrcWeights& weights,
                       const JrcOptions& options) {
  const double alpha = weights.alpha();
  const LossResult calib = calib_loss(inputs);
  const LossResult rank = rank_loss(inputs, options.rank);
  const double rank_weight = (1.0 - alpha) * options.rank_scale;

  JrcLossResult result;
  result.calib_value = calib.value;
  result.rank_value = rank.value;
  result.value = alpha * calib.value + rank_weight * rank.value;
  const std::size_t n = inputs.logits.size();
  result.dlogits.resize(n);
  result.terms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.dlogits[i].nonclick = alpha * calib.dlogits[i].nonclick +
                                 rank_weight * rank.dlogits[i].nonclick;
    result.dlogits[i].click =
        alpha * calib.dlogits[i].click + rank_weight * rank.dlogits[i].click;
    result.terms[i] = alpha * calib.terms[i] + rank_weight * rank.terms[i];
  }
  return result;
}

ScoreLossResult pointwise_loss(std::span<const double> scores,
                               std::span<const int> labels) {
  validate_scores(scores, labels);
  const std::size_t n = scores.size();
  ScoreLossResult result;
  result.dscores.assign(n, 0.0);
  result.terms.assign(n, 0.0);
  if (n == 0) return result;
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // -log sigmoid(s) for y = 1, -log(1 - sigmoid(s)) for y = 0.
    const double s = scores[i];
    const double term = labels[i] == 1 ? softplus(-s) : softplus(s);
    result.terms[i] = term;
    total += term;
    result.dscores[i] = (sigmoid(s) - labels[i]) * inv_n;
  }
  result.value = total * inv_n;
  return result;
}

ScoreLossResult ranknet_loss(std::span<const double> scores,
                             std::span<const int> labels,
                             const ContextMask& mask) {
  validate_scores(scores, labels);
  const std::size_t n = scores.size();
  validate_mask(mask, n);

  ScoreLossResult result;
  result.dscores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] == 0 && mask(i, j)) ++result.pair_count;
    }
  }
  if (result.pair_count == 0) return result;

  const double inv_pairs = 1.0 / static_cast<double>(result.pair_count);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (labels[j] != 0 || !mask(i, j)) continue;
      const double diff = scores[i] - scores[j];
      result.value += softplus(-diff) * inv_pairs;
      // d/d diff of -log sigmoid(diff) = -sigmoid(-diff).
      const double g = sigmoid(-diff) * inv_pairs;
      result.dscores[i] -= g;
      result.dscores[j] += g;
    }
  }
  return result;
}

ScoreLossResult listnet_loss(std::span<const double> scores,
                             std::span<const int> labels,
                             const ContextMask& mask,
                             RankReduction reduction) {
  validate_scores(scores, labels);
  const std::size_t n = scores.size();
  validate_mask(mask, n);

  ScoreLossResult result;
  result.dscores.assign(n, 0.0);
  result.terms.assign(n, 0.0);
  if (n == 0) return result;
  const double inv_n = 1.0 / static_cast<double>(n);
  const std::vector<std::uint8_t> everyone;

  for (std::size_t j = 0; j < n; ++j) {
    const SoftmaxSet set = masked_softmax_set(
        mask, everyone, j, [&](std::size_t k) { return scores[k]; });
    const double context_size = static_cast<double>(set.members.size());
    if (labels[j] == 1) result.terms[j] = set.lse - scores[j];

    double weight = 0.0;
    std::vector<std::size_t> owners;
    switch (reduction) {
      case RankReduction::kContextColumns:
        owners = set.members;
        weight = inv_n / context_size;
        break;
      case RankReduction::kSampleMean:
        owners = {j};
        weight = inv_n;
        break;
      case RankReduction::kContextSizeWeighted:
        owners = {j};
        weight = inv_n / context_size;
        break;
    }

    double positives = 0.0;
    for (std::size_t i : owners) {
      if (labels[i] != 1) continue;
      result.value += weight * (set.lse - scores[i]);
      result.dscores[i] -= weight;
      positives += 1.0;
    }
    if (positives == 0.0) continue;
    for (std::size_t k : set.members) {
      result.dscores[k] +=
          weight * positives * std::exp(scores[k] - set.lse);
    }
  }
  return result;
}

ScoreLossResult combined_loss(std::span<const double> scores,
                              std::span<const int> labels,
                              const ContextMask& mask,
                              const JrcWeights& weights, CombinedKind kind) {
  const double alpha = weights.alpha();
  const ScoreLossResult point = pointwise_loss(scores, labels);
  const ScoreLossResult rank = kind == CombinedKind::kPair
                                   ? ranknet_loss(scores, labels, mask)
                                   : listnet_loss(scores, labels, mask);
  ScoreLossResult result;
  result.pair_count = rank.pair_count;
  result.value = alpha * point.value + (1.0 - alpha) * rank.value;
  result.dscores.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    result.dscores[i] =
        alpha * point.dscores[i] + (1.0 - alpha) * rank.dscores[i];
  }
  return result;
}

EbmConditionals ebm_conditionals(const LossInputs& inputs) {
  inputs.validate();
  const std::size_t n = inputs.logits.size();

  EbmConditionals out;
  out.context_of = inputs.mask.components();
  const std::size_t n_contexts =
      n == 0 ? 0
             : *std::max_element(out.context_of.begin(), out.context_of.end()) + 1;

  // Per-context log-sum-exp of each channel.
  std::vector<std::array<double, 2>> max_t(
      n_contexts, {-std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()});
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 2; ++c) {
      auto& m = max_t[out.context_of[i]][c];
      m = std::max(m, inputs.logits[i][c]);
    }
  }
  std::vector<std::array<double, 2>> sum_exp(n_contexts, {0.0, 0.0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t z = out.context_of[i];
    for (int c = 0; c < 2; ++c) {
      sum_exp[z][c] += std::exp(inputs.logits[i][c] - max_t[z][c]);
    }
  }
  std::vector<std::array<double, 2>> lse(n_contexts);
  for (std::size_t z = 0; z < n_contexts; ++z) {
    for (int c = 0; c < 2; ++c) lse[z][c] = max_t[z][c] + std::log(sum_exp[z][c]);
  }

  out.p_y_given_x.resize(n);
  out.p_x_given_yz.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double p1 = predict_ctr(inputs.logits[i]);
    out.p_y_given_x[i] = {sigmoid(inputs.logits[i].nonclick - inputs.logits[i].click), p1};
    const std::size_t z = out.context_of[i];
    for (int c = 0; c < 2; ++c) {
      out.p_x_given_yz[i][c] = std::exp(inputs.logits[i][c] - lse[z][c]);
    }
  }

  // p(y | z) = S_y / (S_0 + S_1) with S_y = sum_{ctx} exp(t^y).
  out.p_y_given_z.resize(n_contexts);
  for (std::size_t z = 0; z < n_contexts; ++z) {
    const double diff = lse[z][1] - lse[z][0];
    out.p_y_given_z[z] = {sigmoid(-diff), sigmoid(diff)};
  }
  return out;
}

}  // namespace jrc
