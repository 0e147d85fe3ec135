#include "jrc/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jrc/error.hpp"
#include "jrc/random.hpp"

namespace jrc {

namespace {

ParamBlock make_block(std::string name, std::size_t rows, std::size_t cols) {
  ParamBlock block;
  block.name = std::move(name);
  block.rows = rows;
  block.cols = cols;
  const std::size_t n = rows * cols;
  block.value.assign(n, 0.0);
  block.grad.assign(n, 0.0);
  block.first_moment.assign(n, 0.0);
  block.second_moment.assign(n, 0.0);
  return block;
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double x) { return std::isfinite(x); });
}

}  // namespace

void ModelConfig::validate() const {
  if (vocab_sizes.empty()) {
    throw ConfigError("model: at least one categorical field is required");
  }
  for (std::size_t f = 0; f < vocab_sizes.size(); ++f) {
    if (vocab_sizes[f] == 0) {
      throw ConfigError("model: field " + std::to_string(f) +
                        " has an empty vocabulary");
    }
  }
  if (embed_dim == 0) throw ConfigError("model: embed_dim must be >= 1");
  if (hidden_dims.empty()) {
    throw ConfigError("model: hidden_dims must be non-empty");
  }
  for (std::size_t l = 0; l < hidden_dims.size(); ++l) {
    if (hidden_dims[l] == 0) {
      throw ConfigError("model: hidden layer " + std::to_string(l) +
                        " has zero width");
    }
  }
  if (!std::isfinite(init_scale) || init_scale < 0.0) {
    throw ConfigError("model: init_scale must be finite and >= 0");
  }
}

void adam_update(std::span<double> value, std::span<const double> grad,
                 std::span<double> first_moment,
                 std::span<double> second_moment, std::uint64_t step,
                 const AdamOptions& options) {
  const double t = static_cast<double>(step);
  const double m_corr = 1.0 - std::pow(options.beta1, t);
  const double v_corr = 1.0 - std::pow(options.beta2, t);
  for (std::size_t i = 0; i < value.size(); ++i) {
    const double g = grad[i];
    first_moment[i] = options.beta1 * first_moment[i] + (1.0 - options.beta1) * g;
    second_moment[i] =
        options.beta2 * second_moment[i] + (1.0 - options.beta2) * g * g;
    const double m_hat = first_moment[i] / m_corr;
    const double v_hat = second_moment[i] / v_corr;
    value[i] -= options.lr * m_hat / (std::sqrt(v_hat) + options.eps);
  }
}

ParamBlock& ModelParams::weight(std::size_t layer) {
  return blocks_[config_.num_fields() + 2 * layer];
}
const ParamBlock& ModelParams::weight(std::size_t layer) const {
  return blocks_[config_.num_fields() + 2 * layer];
}
ParamBlock& ModelParams::bias(std::size_t layer) {
  return blocks_[config_.num_fields() + 2 * layer + 1];
}
const ParamBlock& ModelParams::bias(std::size_t layer) const {
  return blocks_[config_.num_fields() + 2 * layer + 1];
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (const auto& block : blocks_) n += block.size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& block : blocks_) std::fill(block.grad.begin(), block.grad.end(), 0.0);
}

void ModelParams::check_finite_grads() const {
  for (const auto& block : blocks_) {
    if (!all_finite(block.grad)) {
      throw TrainingError("non-finite gradient in parameter block '" +
                          block.name + "'");
    }
  }
}

void ModelParams::adam_step(const AdamOptions& options) {
  check_finite_grads();
  ++step_;
  for (auto& block : blocks_) {
    adam_update(block.value, block.grad, block.first_moment,
                block.second_moment, step_, options);
    if (!all_finite(block.value)) {
      throw TrainingError("non-finite parameter after update in block '" +
                          block.name + "'");
    }
  }
  zero_grad();
}

void ModelParams::sgd_step(double lr) {
  check_finite_grads();
  ++step_;
  for (auto& block : blocks_) {
    for (std::size_t i = 0; i < block.size(); ++i) {
      block.value[i] -= lr * block.grad[i];
    }
    if (!all_finite(block.value)) {
      throw TrainingError("non-finite parameter after update in block '" +
                          block.name + "'");
    }
  }
  zero_grad();
}

ModelParams init_model(const ModelConfig& config) {
  config.validate();
  ModelParams params;
  params.config_ = config;

  const std::size_t n_fields = config.num_fields();
  for (std::size_t f = 0; f < n_fields; ++f) {
    params.blocks_.push_back(make_block("embedding/" + std::to_string(f),
                                        config.vocab_sizes[f],
                                        config.embed_dim));
  }
  std::size_t fan_in = config.input_dim();
  for (std::size_t l = 0; l <= config.hidden_dims.size(); ++l) {
    const std::size_t fan_out =
        l < config.hidden_dims.size() ? config.hidden_dims[l] : 2;
    params.blocks_.push_back(
        make_block("dense/" + std::to_string(l) + "/weight", fan_out, fan_in));
    params.blocks_.push_back(
        make_block("dense/" + std::to_string(l) + "/bias", fan_out, 1));
    fan_in = fan_out;
  }

  Rng rng(config.seed);
  for (std::size_t f = 0; f < n_fields; ++f) {
    for (double& x : params.blocks_[f].value) {
      x = uniform_symmetric(rng, config.init_scale);
    }
  }
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    for (double& x : params.weight(l).value) {
      x = uniform_symmetric(rng, config.init_scale);
    }
  }
  return params;
}

ForwardPass forward(const ModelParams& params, std::span<const Sample> batch) {
  const ModelConfig& config = params.config();
  const std::size_t n_fields = config.num_fields();
  const std::size_t dim = config.embed_dim;
  const std::size_t n = batch.size();

  ForwardPass pass;
  pass.batch_size = n;
  pass.feature_ids.resize(n * n_fields);

  std::vector<double> input(n * config.input_dim());
  for (std::size_t s = 0; s < n; ++s) {
    const Sample& sample = batch[s];
    if (sample.features.size() != n_fields) {
      throw InputError("sample " + std::to_string(s) + " has " +
                       std::to_string(sample.features.size()) +
                       " features, model expects " + std::to_string(n_fields));
    }
    for (std::size_t f = 0; f < n_fields; ++f) {
      const FeatureId id = sample.features[f];
      if (id >= config.vocab_sizes[f]) {
        throw InputError("field " + std::to_string(f) + ": feature ID " +
                         std::to_string(id) + " is out of vocabulary (size " +
                         std::to_string(config.vocab_sizes[f]) + ")");
      }
      pass.feature_ids[s * n_fields + f] = id;
      const double* row = params.embedding(f).value.data() + id * dim;
      std::copy(row, row + dim,
                input.begin() + static_cast<std::ptrdiff_t>(s * config.input_dim() + f * dim));
    }
  }
  pass.activations.push_back(std::move(input));

  std::size_t fan_in = config.input_dim();
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const ParamBlock& w = params.weight(l);
    const ParamBlock& b = params.bias(l);
    const std::size_t fan_out = w.rows;
    const bool hidden = l + 1 < params.num_layers();
    const std::vector<double>& x = pass.activations.back();
    std::vector<double> z(n * fan_out);
    for (std::size_t s = 0; s < n; ++s) {
      const double* xs = x.data() + s * fan_in;
      for (std::size_t o = 0; o < fan_out; ++o) {
        const double* wo = w.value.data() + o * fan_in;
        double acc = b.value[o];
        for (std::size_t i = 0; i < fan_in; ++i) acc += wo[i] * xs[i];
        z[s * fan_out + o] = acc;
      }
    }
    if (hidden) {
      std::vector<double> a(z.size());
      std::transform(z.begin(), z.end(), a.begin(),
                     [](double v) { return v > 0.0 ? v : 0.0; });
      pass.pre_activations.push_back(std::move(z));
      pass.activations.push_back(std::move(a));
    } else {
      pass.logits.resize(n);
      for (std::size_t s = 0; s < n; ++s) {
        pass.logits[s] = LogitPair{z[2 * s], z[2 * s + 1]};
      }
    }
    fan_in = fan_out;
  }
  return pass;
}

void backward(ModelParams& params, const ForwardPass& pass,
              std::span<const LogitPair> dloss_dlogits) {
  const ModelConfig& config = params.config();
  const std::size_t n = pass.batch_size;
  if (dloss_dlogits.size() != n) {
    throw InputError("backward: got " + std::to_string(dloss_dlogits.size()) +
                     " logit gradients for a batch of " + std::to_string(n));
  }
  if (pass.activations.size() != params.num_layers()) {
    throw InputError("backward: forward pass does not match the model");
  }

  // delta holds d(loss)/d(z) of the current layer, batch-major.
  std::vector<double> delta(n * 2);
  for (std::size_t s = 0; s < n; ++s) {
    delta[2 * s] = dloss_dlogits[s].nonclick;
    delta[2 * s + 1] = dloss_dlogits[s].click;
  }

  for (std::size_t l = params.num_layers(); l-- > 0;) {
    ParamBlock& w = params.weight(l);
    ParamBlock& b = params.bias(l);
    const std::size_t fan_out = w.rows;
    const std::size_t fan_in = w.cols;
    const std::vector<double>& x = pass.activations[l];

    std::vector<double> dx(n * fan_in, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
      const double* xs = x.data() + s * fan_in;
      double* dxs = dx.data() + s * fan_in;
      for (std::size_t o = 0; o < fan_out; ++o) {
        const double d = delta[s * fan_out + o];
        if (d == 0.0) continue;
        b.grad[o] += d;
        double* gw = w.grad.data() + o * fan_in;
        const double* wo = w.value.data() + o * fan_in;
        for (std::size_t i = 0; i < fan_in; ++i) {
          gw[i] += d * xs[i];
          dxs[i] += d * wo[i];
        }
      }
    }
    if (l > 0) {
      const std::vector<double>& z = pass.pre_activations[l - 1];
      for (std::size_t i = 0; i < dx.size(); ++i) {
        if (z[i] <= 0.0) dx[i] = 0.0;
      }
    }
    delta = std::move(dx);
  }

  // delta is now d(loss)/d(input); scatter into the embedding rows.
  const std::size_t n_fields = config.num_fields();
  const std::size_t dim = config.embed_dim;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t f = 0; f < n_fields; ++f) {
      const FeatureId id = pass.feature_ids[s * n_fields + f];
      double* g = params.embedding(f).grad.data() + id * dim;
      const double* d = delta.data() + s * config.input_dim() + f * dim;
      for (std::size_t k = 0; k < dim; ++k) g[k] += d[k];
    }
  }
}

}  // namespace jrc
