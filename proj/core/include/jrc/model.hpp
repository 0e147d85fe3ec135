#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "jrc/types.hpp"

namespace jrc {

// Concatenated-embedding MLP: one embedding table per categorical field,
// ReLU hidden layers, and a linear output layer of width exactly 2.
struct ModelConfig {
  std::vector<std::size_t> vocab_sizes;
  std::size_t embed_dim = 8;
  std::vector<std::size_t> hidden_dims = {64, 32};
  std::uint64_t seed = 0;
  double init_scale = 0.05;

  // Throws ConfigError on empty vocabularies, zero-width layers or a
  // negative / non-finite init_scale.
  void validate() const;

  std::size_t num_fields() const { return vocab_sizes.size(); }
  std::size_t input_dim() const { return vocab_sizes.size() * embed_dim; }
};

// A named, flat parameter tensor with its gradient and Adam moments.
// Dense layers are stored as `rows` = fan-out, `cols` = fan-in, row-major.
struct ParamBlock {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  std::size_t size() const { return value.size(); }
};

struct AdamOptions {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of `value`; `step` is the 1-based step
// index after increment.
void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step,
                 const AdamOptions& options);

class ModelParams {
 public:
  ModelParams() = default;

  const ModelConfig& config() const { return config_; }

  std::span<ParamBlock> blocks() { return blocks_; }
  std::span<const ParamBlock> blocks() const { return blocks_; }

  ParamBlock& embedding(std::size_t field) { return blocks_[field]; }
  const ParamBlock& embedding(std::size_t field) const {
    return blocks_[field];
  }
  // Dense layer l, 0 <= l <= hidden_dims.size(); the last one is the output.
  ParamBlock& weight(std::size_t layer);
  const ParamBlock& weight(std::size_t layer) const;
  ParamBlock& bias(std::size_t layer);
  const ParamBlock& bias(std::size_t layer) const;
  std::size_t num_layers() const { return config_.hidden_dims.size() + 1; }

  std::uint64_t step() const { return step_; }
  std::size_t num_parameters() const;

  void zero_grad();

  // Applies Adam to every block, zeroes gradients and increments the step
  // counter. Throws TrainingError naming the block if any gradient is not
  // finite; parameters are left untouched in that case.
  void adam_step(const AdamOptions& options);

  // Plain gradient descent: value -= lr * grad. Same bookkeeping and error
  // behaviour as adam_step.
  void sgd_step(double lr);

  friend ModelParams init_model(const ModelConfig& config);

 private:
  void check_finite_grads() const;

  ModelConfig config_;
  std::vector<ParamBlock> blocks_;  // embeddings, then (weight, bias) pairs
  std::uint64_t step_ = 0;
};

// Uniform[-init_scale, init_scale) embeddings and weights from
// mt19937_64(config.seed); biases, gradients and moments start at zero.
ModelParams init_model(const ModelConfig& config);

// Everything backward needs from one forward call.
struct ForwardPass {
  std::vector<LogitPair> logits;
  std::size_t batch_size = 0;
  // Feature IDs of the batch, batch_size * num_fields.
  std::vector<FeatureId> feature_ids;
  // activations[0] is the concatenated embedding input; activations[l + 1]
  // is the post-ReLU output of hidden layer l. Each is batch_size * width.
  std::vector<std::vector<double>> activations;
  // Pre-activation values of each hidden layer (same shapes as
  // activations[1..]).
  std::vector<std::vector<double>> pre_activations;
};

// Throws InputError naming the field and ID on out-of-vocabulary features or
// a feature-count mismatch.
ForwardPass forward(const ModelParams& params, std::span<const Sample> batch);

// Accumulates d(loss)/d(theta) into params' gradients given the per-sample
// logit gradients. Throws InputError when lengths disagree.
void backward(ModelParams& params, const ForwardPass& pass,
              std::span<const LogitPair> dloss_dlogits);

}  // namespace jrc
