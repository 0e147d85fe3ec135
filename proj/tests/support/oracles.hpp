#pragma once

// Independent reference implementations used as test oracles. They favour
// literal, slow formulations over the library's algorithms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "jrc/losses.hpp"
#include "jrc/mask.hpp"
#include "jrc/metrics.hpp"
#include "jrc/model.hpp"
#include "jrc/random.hpp"
#include "jrc/types.hpp"

namespace jrc::oracle {

inline std::vector<LogitPair> random_logits(Rng& rng, std::size_t n, double scale = 2.0) {
  std::vector<LogitPair> out(n);
  for (auto& t : out) {
    t.nonclick = uniform_symmetric(rng, scale);
    t.click = uniform_symmetric(rng, scale);
  }
  return out;
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, double p = 0.5) {
  std::vector<int> out(n);
  for (int& y : out) y = bernoulli(rng, p) ? 1 : 0;
  return out;
}

inline std::vector<ContextKey> random_keys(Rng& rng, std::size_t n, std::size_t alphabet) {
  std::vector<ContextKey> out(n);
  for (auto& k : out) k = uniform_index(rng, alphabet);
  return out;
}

inline ContextMask mask_of(const std::vector<ContextKey>& keys) {
  ContextMask m(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    for (std::size_t j = 0; j < keys.size(); ++j) m.set(i, j, keys[i] == keys[j]);
  }
  return m;
}

inline double log_sum_exp(const std::vector<double>& v) {
  double m = -INFINITY;
  for (double x : v) m = std::max(m, x);
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// mean_i -log softmax(t_i)[y_i] through an explicit two-way softmax.
inline double calib(const std::vector<LogitPair>& t, const std::vector<int>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double lse = log_sum_exp({t[i].nonclick, t[i].click});
    total += lse - t[i][y[i]];
  }
  return total / static_cast<double>(t.size());
}

// Transcription of the masked tensor formulation: logits tiled to [B, B, 2],
// out-of-context entries pushed to -1e9, log-softmax over axis 0, label
// one-hots masked, summed over axis 0, divided by the column's context size
// and averaged over columns.
inline double rank_tensor(const std::vector<LogitPair>& t, const std::vector<int>& y,
                          const ContextMask& mask) {
  const std::size_t b = t.size();
  double total = 0.0;
  for (std::size_t j = 0; j < b; ++j) {
    double col_sum = 0.0;
    double mask_sum = 0.0;
    for (std::size_t i = 0; i < b; ++i) mask_sum += mask(i, j) ? 1.0 : 0.0;
    for (int c = 0; c < 2; ++c) {
      std::vector<double> l(b);
      for (std::size_t i = 0; i < b; ++i) l[i] = t[i][c] + (mask(i, j) ? 0.0 : -1e9);
      const double lse = log_sum_exp(l);
      for (std::size_t i = 0; i < b; ++i) {
        const double yi = (y[i] == c ? 1.0 : 0.0) * (mask(i, j) ? 1.0 : 0.0);
        if (yi != 0.0) col_sum -= yi * (l[i] - lse);
      }
    }
    total += col_sum / mask_sum;
  }
  return total / static_cast<double>(b);
}

// -log p(x_i | y_i, z_i) with the context enumerated from keys.
inline std::vector<double> rank_terms(const std::vector<LogitPair>& t, const std::vector<int>& y,
                                      const std::vector<ContextKey>& keys) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::vector<double> same;
    for (std::size_t k = 0; k < t.size(); ++k) {
      if (keys[k] == keys[i]) same.push_back(t[k][y[i]]);
    }
    out[i] = log_sum_exp(same) - t[i][y[i]];
  }
  return out;
}

inline double pointwise(const std::vector<double>& s, const std::vector<int>& y) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-s[i]));
    total -= y[i] ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(s.size());
}

inline double ranknet(const std::vector<double>& s, const std::vector<int>& y,
                      const ContextMask& mask) {
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] == 1 && y[j] == 0 && mask(i, j)) {
        total += std::log1p(std::exp(-(s[i] - s[j])));
        ++pairs;
      }
    }
  }
  return pairs ? total / static_cast<double>(pairs) : 0.0;
}

// Per context: -sum over positives of log softmax over the context, summed
// over contexts and divided by the batch size.
inline double listnet(const std::vector<double>& s, const std::vector<int>& y,
                      const std::vector<ContextKey>& keys) {
  std::map<ContextKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < s.size(); ++i) groups[keys[i]].push_back(i);
  double total = 0.0;
  for (const auto& [key, members] : groups) {
    std::vector<double> v;
    for (std::size_t i : members) v.push_back(s[i]);
    const double lse = log_sum_exp(v);
    for (std::size_t i : members) {
      if (y[i] == 1) total += lse - s[i];
    }
  }
  return total / static_cast<double>(s.size());
}

// O(n^2) pair enumeration AUC: P(score_pos > score_neg) + 0.5 P(tie).
inline double pair_auc(const std::vector<Prediction>& preds) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& a : preds) {
    if (a.label != 1) continue;
    for (const auto& b : preds) {
      if (b.label != 0) continue;
      pairs += 1.0;
      if (a.p_hat > b.p_hat) {
        wins += 1.0;
      } else if (a.p_hat == b.p_hat) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

// Second forward implementation: explicit nested loops over the parameter
// blocks, no shared code with the library's forward pass.
inline std::vector<LogitPair> forward(const ModelParams& params, const std::vector<Sample>& batch) {
  const ModelConfig& cfg = params.config();
  std::vector<LogitPair> out;
  for (const Sample& s : batch) {
    std::vector<double> x;
    for (std::size_t f = 0; f < cfg.num_fields(); ++f) {
      const ParamBlock& e = params.embedding(f);
      for (std::size_t d = 0; d < cfg.embed_dim; ++d) {
        x.push_back(e.value[s.features[f] * cfg.embed_dim + d]);
      }
    }
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
      const ParamBlock& w = params.weight(l);
      const ParamBlock& b = params.bias(l);
      std::vector<double> z(w.rows);
      for (std::size_t r = 0; r < w.rows; ++r) {
        double acc = b.value[r];
        for (std::size_t c = 0; c < w.cols; ++c) acc += w.value[r * w.cols + c] * x[c];
        const bool hidden = l + 1 < params.num_layers();
        z[r] = hidden ? std::max(acc, 0.0) : acc;
      }
      x = std::move(z);
    }
    out.push_back(LogitPair{x[0], x[1]});
  }
  return out;
}

// Central differences of f at x, one coordinate at a time.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> x, double eps = 1e-4) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double up = f(x);
    x[i] = orig - eps;
    const double down = f(x);
    x[i] = orig;
    g[i] = (up - down) / (2.0 * eps);
  }
  return g;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
inline double max_relative_error(const std::vector<double>& a, const std::vector<double>& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

inline std::vector<double> flatten(const std::vector<LogitPair>& t) {
  std::vector<double> out;
  for (const auto& p : t) {
    out.push_back(p.nonclick);
    out.push_back(p.click);
  }
  return out;
}

inline std::vector<LogitPair> unflatten(const std::vector<double>& v) {
  std::vector<LogitPair> out(v.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = LogitPair{v[2 * i], v[2 * i + 1]};
  return out;
}

}  // namespace jrc::oracle
