#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jrc/mask.hpp"
#include "jrc/types.hpp"

namespace jrc {

// Logits, labels and same-context mask of one minibatch.
struct LossInputs {
  std::vector<LogitPair> logits;
  std::vector<int> labels;
  ContextMask mask;

  // Throws InputError on inconsistent lengths, labels outside {0, 1},
  // non-finite logits, or a mask that is not symmetric with unit diagonal.
  void validate() const;
};

// Balance between the calibration and ranking terms:
//   loss = alpha * calib + (1 - alpha) * rank,  ratio = (1 - alpha) / alpha.
class JrcWeights {
 public:
  // Throws ConfigError unless 0 <= alpha <= 1.
  static JrcWeights from_alpha(double alpha);
  // Throws ConfigError unless ratio >= 0 (+inf gives alpha = 0).
  static JrcWeights from_ratio(double ratio);

  double alpha() const { return alpha_; }
  // +inf when alpha == 0.
  double ratio() const;

 private:
  explicit JrcWeights(double alpha) : alpha_(alpha) {}
  double alpha_;
};

struct LossResult {
  double value = 0.0;              // batch-mean loss
  std::vector<LogitPair> dlogits;  // d(value)/d(nonclick, click) per sample
  std::vector<double> terms;       // unreduced per-sample terms
};

struct JrcLossResult : LossResult {
  double calib_value = 0.0;
  double rank_value = 0.0;  // before rank_scale
};

// Gradient-carrying result for losses on a one-dimensional score.
struct ScoreLossResult {
  double value = 0.0;
  std::vector<double> dscores;
  std::vector<double> terms;
  std::size_t pair_count = 0;  // ranknet only
};

// How the per-sample generative terms are reduced to a batch value.
//   kContextColumns: for every column j of the mask, sum the terms of the
//     samples in j's context, divide by the context size, then average over
//     the batch. This is the masked column reduction of the -log softmax
//     matrix; on an equivalence mask it equals kSampleMean exactly.
//   kSampleMean: plain batch mean of the per-sample terms.
//   kContextSizeWeighted: each term divided by its own context size, then
//     averaged over the batch.
enum class RankReduction { kContextColumns, kSampleMean, kContextSizeWeighted };

struct RankOptions {
  RankReduction reduction = RankReduction::kContextColumns;
  // Per-sample participation flags; empty means every sample participates.
  // Non-participating samples are removed from every softmax set and
  // contribute no term. The batch-mean denominator stays the full batch.
  std::vector<std::uint8_t> participation;
};

struct JrcOptions {
  RankOptions rank;
  // Multiplies the rank term before weighting (loss-level rescaling).
  double rank_scale = 1.0;
};

enum class CombinedKind { kPair, kList };

double sigmoid(double x);
// log(1 + exp(x)) without overflow.
double softplus(double x);

// sigmoid(click - nonclick). Throws InputError on non-finite logits.
double predict_ctr(const LogitPair& logit);

// Mean of -log softmax(logits)[label].
LossResult calib_loss(const LossInputs& inputs);

// Contextual listwise generative loss: for sample i with label y the term is
//   -log( exp(t_i^y) / sum_{j in ctx(i)} exp(t_j^y) ).
LossResult rank_loss(const LossInputs& inputs, const RankOptions& options = {});

JrcLossResult jrc_loss(const LossInputs& inputs, const JrcWeights& weights,
                       const JrcOptions& options = {});

// Mean binary cross-entropy of sigmoid(score).
ScoreLossResult pointwise_loss(std::span<const double> scores,
                               std::span<const int> labels);

// Mean over in-context (positive, negative) pairs of
// -log sigmoid(s_pos - s_neg). No pairs: value 0, zero gradients.
ScoreLossResult ranknet_loss(std::span<const double> scores,
                             std::span<const int> labels,
                             const ContextMask& mask);

// Per context: -sum_{positives} log softmax_context(scores).
ScoreLossResult listnet_loss(
    std::span<const double> scores, std::span<const int> labels,
    const ContextMask& mask,
    RankReduction reduction = RankReduction::kContextColumns);

ScoreLossResult combined_loss(std::span<const double> scores,
                              std::span<const int> labels,
                              const ContextMask& mask,
                              const JrcWeights& weights, CombinedKind kind);

// Conditionals of the energy-based reading of the two logits, with the
// in-batch context standing in for the full context population. All of them
// are ratios in which the partition function cancels. Arrays are indexed by
// label.
struct EbmConditionals {
  std::vector<std::array<double, 2>> p_y_given_x;
  // p_x_given_yz[i][y] = exp(t_i^y) / sum_{k in ctx(i)} exp(t_k^y)
  std::vector<std::array<double, 2>> p_x_given_yz;
  std::vector<std::size_t> context_of;  // dense context index per sample
  std::vector<std::array<double, 2>> p_y_given_z;  // per context
};

// Requires an equivalence mask (throws InputError otherwise).
EbmConditionals ebm_conditionals(const LossInputs& inputs);

}  // namespace jrc
