#include <algorithm>
#include <cmath>
#include <numeric>

#include "jrc/data.hpp"
#include "jrc/error.hpp"
#include "jrc/losses.hpp"
#include "jrc/random.hpp"

namespace jrc {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

void require_positive(std::size_t value, const char* name) {
  if (value == 0) {
    throw ConfigError(std::string("synthetic data: ") + name + " must be >= 1");
  }
}

void require_nonnegative(double value, const char* name) {
  if (!std::isfinite(value) || value < 0.0) {
    throw ConfigError(std::string("synthetic data: ") + name +
                      " must be finite and >= 0");
  }
}

}  // namespace

void SynthConfig::validate() const {
  require_positive(n_users, "n_users");
  require_positive(n_items, "n_items");
  require_positive(n_domains, "n_domains");
  require_positive(sessions_per_user, "sessions_per_user");
  require_positive(items_per_session, "items_per_session");
  require_positive(latent_dim, "latent_dim");
  require_nonnegative(noise_scale, "noise_scale");
  require_nonnegative(activity_skew, "activity_skew");
  require_nonnegative(interaction_scale, "interaction_scale");
  require_nonnegative(item_bias_scale, "item_bias_scale");
  require_nonnegative(domain_bias_scale, "domain_bias_scale");
  if (!std::isfinite(base_logit)) {
    throw ConfigError("synthetic data: base_logit must be finite");
  }
  if (session_window_seconds <= 0 || session_window_seconds >= kSecondsPerDay) {
    throw ConfigError(
        "synthetic data: session_window_seconds must lie in (0, 86400)");
  }
}

std::vector<std::size_t> SynthConfig::vocab_sizes() const {
  return {n_users, n_items, n_domains, 2};
}

std::vector<LabeledSample> generate(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);

  const std::size_t d = config.latent_dim;
  // Components ~ c * N(0,1) with d * c^4 = interaction_scale^2.
  const double component_scale =
      std::sqrt(config.interaction_scale / std::sqrt(static_cast<double>(d)));
  auto draw_vectors = [&](std::size_t count) {
    std::vector<double> v(count * d);
    for (double& x : v) x = component_scale * approx_standard_normal(rng);
    return v;
  };
  const std::vector<double> user_vec = draw_vectors(config.n_users);
  const std::vector<double> item_vec = draw_vectors(config.n_items);

  std::vector<double> item_bias(config.n_items);
  for (double& b : item_bias) b = config.item_bias_scale * approx_standard_normal(rng);
  std::vector<double> domain_bias(config.n_domains);
  for (double& b : domain_bias) b = config.domain_bias_scale * approx_standard_normal(rng);
  std::vector<double> user_offset(config.n_users);
  std::vector<std::uint32_t> user_gender(config.n_users);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    user_offset[u] = config.activity_skew * approx_standard_normal(rng);
    user_gender[u] = static_cast<std::uint32_t>(uniform_index(rng, 2));
  }

  const std::int64_t window = config.session_window_seconds;
  std::vector<LabeledSample> out;
  out.reserve(config.num_samples());
  std::vector<std::int64_t> offsets(config.items_per_session);
  for (std::size_t u = 0; u < config.n_users; ++u) {
    for (std::size_t s = 0; s < config.sessions_per_user; ++s) {
      const std::int64_t start =
          static_cast<std::int64_t>(s) * kSecondsPerDay +
          static_cast<std::int64_t>(
              uniform_index(rng, static_cast<std::uint64_t>(kSecondsPerDay - window)));
      const double session_offset =
          config.noise_scale * approx_standard_normal(rng);
      for (auto& o : offsets) {
        o = static_cast<std::int64_t>(uniform_index(rng, static_cast<std::uint64_t>(window)));
      }
      std::sort(offsets.begin(), offsets.end());
      for (std::size_t k = 0; k < config.items_per_session; ++k) {
        const auto item = static_cast<std::uint32_t>(uniform_index(rng, config.n_items));
        const auto domain =
            static_cast<std::uint32_t>(uniform_index(rng, config.n_domains));
        double dot = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
          dot += user_vec[u * d + c] * item_vec[item * d + c];
        }
        const double logit = config.base_logit + dot + item_bias[item] +
                             domain_bias[domain] + user_offset[u] +
                             session_offset;

        LabeledSample ls;
        ls.true_ctr = sigmoid(logit);
        ls.sample.label = bernoulli(rng, ls.true_ctr) ? 1 : 0;
        ls.sample.user_id = u;
        ls.sample.timestamp = start + offsets[k];
        ls.sample.gender = user_gender[u];
        ls.sample.domain = domain;
        ls.sample.features = {static_cast<FeatureId>(u), item, domain,
                              user_gender[u]};
        out.push_back(std::move(ls));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledSample& a, const LabeledSample& b) {
                     return a.sample.timestamp < b.sample.timestamp;
                   });
  return out;
}

}  // namespace jrc
