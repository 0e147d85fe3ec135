#include "jrc/experiment_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "jrc/error.hpp"

namespace jrc {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': '" + std::string(text) +
                      "' is not a number");
  }
  return v;
}

template <typename Int>
Int parse_unsigned(const std::string& key, std::string_view text) {
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError("config key '" + key + "': '" + std::string(text) +
                      "' is not a non-negative integer");
  }
  return v;
}

bool parse_bool(const std::string& key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false");
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t pos = text.find(',', start);
    const auto item = trim(text.substr(start, pos == std::string_view::npos
                                                  ? std::string_view::npos
                                                  : pos - start));
    if (!item.empty()) out.emplace_back(item);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += format(items[i]);
  }
  return out;
}

struct KeySpec {
  std::string name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define JRC_DOUBLE_KEY(key, member)                                       \
  KeySpec {                                                               \
    key, [](const ExperimentConfig& c) { return format_double(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.member = parse_double(key, v);                                \
        }                                                                 \
  }
#define JRC_SIZE_KEY(key, member)                                           \
  KeySpec {                                                                 \
    key, [](const ExperimentConfig& c) { return std::to_string(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) {                     \
          c.member = parse_unsigned<std::size_t>(key, v);                   \
        }                                                                   \
  }
#define JRC_STRING_KEY(key, member)                                  \
  KeySpec {                                                          \
    key, [](const ExperimentConfig& c) { return c.member; },        \
        [](ExperimentConfig& c, const std::string& v) { c.member = v; } \
  }

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"loss", [](const ExperimentConfig& c) { return std::string(to_string(c.loss)); },
       [](ExperimentConfig& c, const std::string& v) { c.loss = parse_loss_kind(v); }},
      JRC_DOUBLE_KEY("weight_ratio", weight_ratio),
      {"context",
       [](const ExperimentConfig& c) { return std::string(to_string(c.context.kind)); },
       [](ExperimentConfig& c, const std::string& v) {
         c.context.kind = parse_context_kind(v);
       }},
      {"session_window_seconds",
       [](const ExperimentConfig& c) {
         return std::to_string(c.context.session_window_seconds);
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.context.session_window_seconds =
             parse_unsigned<std::int64_t>("session_window_seconds", v);
       }},
      {"batching",
       [](const ExperimentConfig& c) {
         return std::string(c.batching == BatchingKind::kSession ? "session" : "sequential");
       },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "session") {
           c.batching = BatchingKind::kSession;
         } else if (v == "sequential") {
           c.batching = BatchingKind::kSequential;
         } else {
           throw ConfigError("batching must be session or sequential");
         }
       }},
      {"rank_reduction",
       [](const ExperimentConfig& c) { return std::string(to_string(c.rank_reduction)); },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "columns") {
           c.rank_reduction = RankReduction::kContextColumns;
         } else if (v == "sample_mean") {
           c.rank_reduction = RankReduction::kSampleMean;
         } else if (v == "size_weighted") {
           c.rank_reduction = RankReduction::kContextSizeWeighted;
         } else {
           throw ConfigError(
               "rank_reduction must be columns, sample_mean or size_weighted");
         }
       }},
      JRC_DOUBLE_KEY("rank_prescale", rank_prescale),
      JRC_DOUBLE_KEY("drop_rate", drop_rate),
      JRC_SIZE_KEY("embed_dim", embed_dim),
      {"hidden_dims",
       [](const ExperimentConfig& c) {
         return join(c.hidden_dims, [](std::size_t d) { return std::to_string(d); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.hidden_dims.clear();
         for (const auto& item : split_list(v)) {
           c.hidden_dims.push_back(parse_unsigned<std::size_t>("hidden_dims", item));
         }
       }},
      JRC_DOUBLE_KEY("init_scale", init_scale),
      {"optimizer",
       [](const ExperimentConfig& c) {
         return std::string(c.optimizer == OptimizerKind::kAdam ? "adam" : "sgd");
       },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "adam") {
           c.optimizer = OptimizerKind::kAdam;
         } else if (v == "sgd") {
           c.optimizer = OptimizerKind::kSgd;
         } else {
           throw ConfigError("optimizer must be adam or sgd");
         }
       }},
      JRC_DOUBLE_KEY("lr", adam.lr),
      JRC_DOUBLE_KEY("beta1", adam.beta1),
      JRC_DOUBLE_KEY("beta2", adam.beta2),
      JRC_DOUBLE_KEY("adam_eps", adam.eps),
      JRC_SIZE_KEY("epochs", epochs),
      JRC_SIZE_KEY("batch_size", batch_size),
      {"data",
       [](const ExperimentConfig& c) {
         return std::string(c.data == DataSource::kSynthetic ? "synth" : "csv");
       },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "synth") {
           c.data = DataSource::kSynthetic;
         } else if (v == "csv") {
           c.data = DataSource::kCsv;
         } else {
           throw ConfigError("data must be synth or csv");
         }
       }},
      JRC_SIZE_KEY("synth_n_users", synth.n_users),
      JRC_SIZE_KEY("synth_n_items", synth.n_items),
      JRC_SIZE_KEY("synth_n_domains", synth.n_domains),
      JRC_SIZE_KEY("synth_sessions_per_user", synth.sessions_per_user),
      JRC_SIZE_KEY("synth_items_per_session", synth.items_per_session),
      JRC_SIZE_KEY("synth_latent_dim", synth.latent_dim),
      JRC_DOUBLE_KEY("synth_base_logit", synth.base_logit),
      JRC_DOUBLE_KEY("synth_noise_scale", synth.noise_scale),
      {"synth_seed",
       [](const ExperimentConfig& c) { return std::to_string(c.synth.seed); },
       [](ExperimentConfig& c, const std::string& v) {
         c.synth.seed = parse_unsigned<std::uint64_t>("synth_seed", v);
       }},
      JRC_DOUBLE_KEY("synth_activity_skew", synth.activity_skew),
      JRC_DOUBLE_KEY("synth_interaction_scale", synth.interaction_scale),
      JRC_DOUBLE_KEY("synth_item_bias_scale", synth.item_bias_scale),
      JRC_DOUBLE_KEY("synth_domain_bias_scale", synth.domain_bias_scale),
      {"synth_session_window_seconds",
       [](const ExperimentConfig& c) {
         return std::to_string(c.synth.session_window_seconds);
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.synth.session_window_seconds =
             parse_unsigned<std::int64_t>("synth_session_window_seconds", v);
       }},
      {"vary_data_per_seed",
       [](const ExperimentConfig& c) {
         return std::string(c.vary_data_per_seed ? "true" : "false");
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.vary_data_per_seed = parse_bool("vary_data_per_seed", v);
       }},
      JRC_STRING_KEY("csv_path", csv_path),
      JRC_STRING_KEY("csv_label", csv.label_column),
      JRC_STRING_KEY("csv_user", csv.user_column),
      JRC_STRING_KEY("csv_timestamp", csv.timestamp_column),
      {"csv_features",
       [](const ExperimentConfig& c) {
         return join(c.csv.feature_columns, [](const std::string& s) { return s; });
       },
       [](ExperimentConfig& c, const std::string& v) { c.csv.feature_columns = split_list(v); }},
      JRC_STRING_KEY("csv_domain", csv.domain_column),
      JRC_STRING_KEY("csv_gender", csv.gender_column),
      {"csv_delimiter",
       [](const ExperimentConfig& c) {
         return c.csv.delimiter == '\t' ? std::string("tab") : std::string(1, c.csv.delimiter);
       },
       [](ExperimentConfig& c, const std::string& v) {
         if (v == "tab") {
           c.csv.delimiter = '\t';
         } else if (v.size() == 1) {
           c.csv.delimiter = v[0];
         } else {
           throw ConfigError("csv_delimiter must be a single character or 'tab'");
         }
       }},
      {"csv_header",
       [](const ExperimentConfig& c) {
         return std::string(c.csv.has_header ? "true" : "false");
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.csv.has_header = parse_bool("csv_header", v);
       }},
      JRC_SIZE_KEY("csv_max_malformed", csv.max_malformed_rows),
      JRC_STRING_KEY("csv_vocab_prefix", csv_vocab_prefix),
      JRC_DOUBLE_KEY("eval_fraction", eval_fraction),
      {"seeds",
       [](const ExperimentConfig& c) {
         return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
       },
       [](ExperimentConfig& c, const std::string& v) {
         c.seeds.clear();
         for (const auto& item : split_list(v)) {
           c.seeds.push_back(parse_unsigned<std::uint64_t>("seeds", item));
         }
       }},
      JRC_SIZE_KEY("ece_buckets", ece_buckets),
      JRC_DOUBLE_KEY("clamp_eps", clamp_eps),
      {"baseline_loss",
       [](const ExperimentConfig& c) { return std::string(to_string(c.baseline_loss)); },
       [](ExperimentConfig& c, const std::string& v) { c.baseline_loss = parse_loss_kind(v); }},
      JRC_SIZE_KEY("n_groups", n_groups),
  };
  return specs;
}

#undef JRC_DOUBLE_KEY
#undef JRC_SIZE_KEY
#undef JRC_STRING_KEY

}  // namespace

const char* to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kPointwise:
      return "pointwise";
    case LossKind::kRankNet:
      return "ranknet";
    case LossKind::kListNet:
      return "listnet";
    case LossKind::kCombinedPair:
      return "combined_pair";
    case LossKind::kCombinedList:
      return "combined_list";
    case LossKind::kJrc:
      return "jrc";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind kind : {LossKind::kPointwise, LossKind::kRankNet, LossKind::kListNet,
                        LossKind::kCombinedPair, LossKind::kCombinedList, LossKind::kJrc}) {
    if (name == to_string(kind)) return kind;
  }
  throw ConfigError("unknown loss '" + std::string(name) +
                    "' (expected pointwise, ranknet, listnet, combined_pair, "
                    "combined_list or jrc)");
}

bool is_score_loss(LossKind kind) { return kind != LossKind::kJrc; }

const char* to_string(RankReduction reduction) {
  switch (reduction) {
    case RankReduction::kContextColumns:
      return "columns";
    case RankReduction::kSampleMean:
      return "sample_mean";
    case RankReduction::kContextSizeWeighted:
      return "size_weighted";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  weights();  // ratio >= 0
  context.validate();
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw ConfigError("drop_rate must lie in [0, 1]");
  }
  if (!(rank_prescale >= 0.0) || !std::isfinite(rank_prescale)) {
    throw ConfigError("rank_prescale must be finite and >= 0");
  }
  if (!(adam.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(adam.eps >= 0.0)) throw ConfigError("adam_eps must be >= 0");
  if (epochs == 0) throw ConfigError("epochs must be >= 1");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw ConfigError("eval_fraction must lie in (0, 1)");
  }
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (ece_buckets == 0) throw ConfigError("ece_buckets must be >= 1");
  if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) {
    throw ConfigError("clamp_eps must lie in (0, 0.5)");
  }
  if (n_groups == 0) throw ConfigError("n_groups must be >= 1");

  ModelConfig model;
  model.vocab_sizes = {1};
  model.embed_dim = embed_dim;
  model.hidden_dims = hidden_dims;
  model.init_scale = init_scale;
  model.validate();

  if (data == DataSource::kSynthetic) {
    if (!csv_path.empty()) {
      throw ConfigError("exactly one data source: csv_path is set but data=synth");
    }
    synth.validate();
  } else {
    if (csv_path.empty()) throw ConfigError("data=csv requires csv_path");
    csv.validate();
  }
}

void ExperimentConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    if (key == "alpha") continue;
    bool found = false;
    for (const KeySpec& spec : key_specs()) {
      if (spec.name == key) {
        spec.set(*this, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown config key '" + key + "'");
  }
  // alpha is accepted as an alternative spelling of the weight ratio.
  if (auto it = values.find("alpha"); it != values.end()) {
    if (values.count("weight_ratio")) {
      throw ConfigError("set either alpha or weight_ratio, not both");
    }
    weight_ratio = JrcWeights::from_alpha(parse_double("alpha", it->second)).ratio();
  }
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const KeySpec& spec : key_specs()) {
    out += spec.name + " = " + spec.get(*this) + "\n";
  }
  return out;
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const KeySpec& spec : key_specs()) k.push_back(spec.name);
    k.push_back("alpha");
    return k;
  }();
  return keys;
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t end = text.find('\n', start);
    std::string_view line =
        text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (!line.empty()) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": expected key = value");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty()) {
        throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
      }
      if (!out.emplace(key, value).second) {
        throw ConfigError("config key '" + key + "' set twice");
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return out;
}

std::map<std::string, std::string> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_key_values(buffer.str());
}

ExperimentConfig parse_experiment_config(std::string_view text) {
  ExperimentConfig config;
  config.apply(parse_key_values(text));
  return config;
}

}  // namespace jrc
