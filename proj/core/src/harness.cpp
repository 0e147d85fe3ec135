#include "jrc/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "jrc/data.hpp"
#include "jrc/error.hpp"
#include "jrc/losses.hpp"
#include "jrc/random.hpp"

namespace jrc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kModelSeedSalt = 0x6d6f64656cULL;
constexpr std::uint64_t kDropSeedSalt = 0x64726f70ULL;

void emit(const LogSink& log, const std::string& message) {
  if (log) log(message);
}

std::vector<double> scores_of(std::span<const LogitPair> logits) {
  std::vector<double> s(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) s[i] = logits[i].click - logits[i].nonclick;
  return s;
}

std::vector<int> labels_of(const ContextBatch& batch) {
  std::vector<int> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = batch.samples[i].label;
  return labels;
}

void check_same_seeds(const RunResult& run, const RunResult& baseline) {
  if (run.seed_list() != baseline.seed_list()) {
    throw ConfigError("run '" + run.label + "' and baseline '" + baseline.label +
                      "' were trained on different seeds");
  }
}

std::string format_ratio(double r) {
  if (std::isinf(r)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", r);
  return buf;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  PreparedData out;
  std::vector<Sample> all;
  if (config.data == DataSource::kSynthetic) {
    SynthConfig synth = config.synth;
    if (config.vary_data_per_seed) synth.seed = mix_seed(config.synth.seed, seed);
    auto labeled = generate(synth);
    all.reserve(labeled.size());
    for (auto& ls : labeled) all.push_back(std::move(ls.sample));
    out.vocab_sizes = synth.vocab_sizes();
  } else {
    CsvVocabularies preset;
    const CsvVocabularies* preset_ptr = nullptr;
    if (!config.csv_vocab_prefix.empty()) {
      preset = load_vocabularies(config.csv_vocab_prefix, config.csv.feature_columns.size());
      preset_ptr = &preset;
    }
    CsvData data = read_csv(config.csv_path, config.csv, preset_ptr);
    for (const Vocabulary& v : data.vocab.features) out.vocab_sizes.push_back(v.size());
    all = std::move(data.samples);
    std::stable_sort(all.begin(), all.end(), [](const Sample& a, const Sample& b) {
      return a.timestamp < b.timestamp;
    });
  }

  const auto n_eval = static_cast<std::size_t>(
      std::llround(config.eval_fraction * static_cast<double>(all.size())));
  if (n_eval == 0 || n_eval >= all.size()) {
    throw DataError("temporal split of " + std::to_string(all.size()) +
                    " samples leaves an empty train or eval part");
  }
  const std::size_t n_train = all.size() - n_eval;
  out.train.assign(std::make_move_iterator(all.begin()),
                   std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)));
  out.eval.assign(std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(n_train)),
                  std::make_move_iterator(all.end()));
  return out;
}

std::vector<ContextBatch> make_train_batches(const ExperimentConfig& config,
                                             std::span<const Sample> train,
                                             std::size_t* oversize_splits,
                                             const LogSink& log) {
  std::vector<ContextBatch> batches;
  if (config.batching == BatchingKind::kSession) {
    ContextPolicy grouping{ContextKind::kSession, config.context.session_window_seconds};
    StreamBatcher batcher(grouping, config.batch_size, log);
    for (const Sample& s : train) {
      batcher.push(s);
      while (batcher.has_batch()) batches.push_back(batcher.pop_batch());
    }
    batcher.finish();
    while (batcher.has_batch()) batches.push_back(batcher.pop_batch());
    if (oversize_splits) *oversize_splits = batcher.oversize_splits();
    if (config.context.kind != ContextKind::kSession) {
      for (ContextBatch& b : batches) b = make_context_batch(std::move(b.samples), config.context);
    }
  } else {
    for (std::size_t start = 0; start < train.size(); start += config.batch_size) {
      const std::size_t end = std::min(train.size(), start + config.batch_size);
      batches.push_back(make_context_batch(
          std::vector<Sample>(train.begin() + static_cast<std::ptrdiff_t>(start),
                              train.begin() + static_cast<std::ptrdiff_t>(end)),
          config.context));
    }
    if (oversize_splits) *oversize_splits = 0;
  }
  return batches;
}

BatchLoss compute_batch_loss(const ExperimentConfig& config, std::span<const LogitPair> logits,
                             const ContextBatch& batch,
                             const std::vector<std::uint8_t>& participation) {
  BatchLoss out;
  if (config.loss == LossKind::kJrc) {
    LossInputs inputs{std::vector<LogitPair>(logits.begin(), logits.end()), labels_of(batch),
                      batch.mask};
    JrcOptions options;
    options.rank.reduction = config.rank_reduction;
    options.rank.participation = participation;
    options.rank_scale = config.rank_prescale;
    JrcLossResult r = jrc_loss(inputs, config.weights(), options);
    out.value = r.value;
    out.calib_value = r.calib_value;
    out.rank_value = r.rank_value;
    out.dlogits = std::move(r.dlogits);
    return out;
  }

  const std::vector<double> scores = scores_of(logits);
  const std::vector<int> labels = labels_of(batch);
  ScoreLossResult r;
  switch (config.loss) {
    case LossKind::kPointwise:
      r = pointwise_loss(scores, labels);
      break;
    case LossKind::kRankNet:
      r = ranknet_loss(scores, labels, batch.mask);
      break;
    case LossKind::kListNet:
      r = listnet_loss(scores, labels, batch.mask, config.rank_reduction);
      break;
    case LossKind::kCombinedPair:
      r = combined_loss(scores, labels, batch.mask, config.weights(), CombinedKind::kPair);
      break;
    case LossKind::kCombinedList:
      r = combined_loss(scores, labels, batch.mask, config.weights(), CombinedKind::kList);
      break;
    case LossKind::kJrc:
      break;
  }
  out.value = r.value;
  out.calib_value = kNaN;
  out.rank_value = kNaN;
  out.dlogits.resize(r.dscores.size());
  for (std::size_t i = 0; i < r.dscores.size(); ++i) {
    out.dlogits[i] = LogitPair{-r.dscores[i], r.dscores[i]};
  }
  return out;
}

BatchLoss train_step(ModelParams& params, const ExperimentConfig& config,
                     const ContextBatch& batch, const std::vector<std::uint8_t>& participation) {
  const ForwardPass pass = forward(params, batch.samples);
  BatchLoss loss = compute_batch_loss(config, pass.logits, batch, participation);
  if (!std::isfinite(loss.value)) {
    throw TrainingError("non-finite loss at step " + std::to_string(params.step() + 1));
  }
  backward(params, pass, loss.dlogits);
  if (config.optimizer == OptimizerKind::kAdam) {
    params.adam_step(config.adam);
  } else {
    params.sgd_step(config.adam.lr);
  }
  return loss;
}

std::vector<Prediction> predict(const ModelParams& params, std::span<const Sample> samples,
                                std::size_t chunk) {
  std::vector<Prediction> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const auto part = samples.subspan(start, std::min(chunk, samples.size() - start));
    const ForwardPass pass = forward(params, part);
    for (std::size_t i = 0; i < part.size(); ++i) {
      out.push_back(Prediction{predict_ctr(pass.logits[i]), part[i].label, part[i].user_id});
    }
  }
  return out;
}

const char* to_string(Metric metric) {
  switch (metric) {
    case Metric::kAuc:
      return "auc";
    case Metric::kGauc:
      return "gauc";
    case Metric::kLogloss:
      return "logloss";
    case Metric::kEce:
      return "ece";
    case Metric::kPcoc:
      return "pcoc";
  }
  return "?";
}

std::optional<double> metric_value(const MetricsReport& report, Metric metric) {
  switch (metric) {
    case Metric::kAuc:
      return report.auc;
    case Metric::kGauc:
      return report.gauc;
    case Metric::kLogloss:
      return report.logloss;
    case Metric::kEce:
      return report.ece;
    case Metric::kPcoc:
      return report.pcoc;
  }
  return std::nullopt;
}

std::vector<std::uint64_t> RunResult::seed_list() const {
  std::vector<std::uint64_t> out;
  for (const SeedResult& s : seeds) out.push_back(s.seed);
  return out;
}

std::vector<double> RunResult::metric_values(Metric metric) const {
  std::vector<double> out;
  for (const SeedResult& s : seeds) {
    if (auto v = metric_value(s.metrics, metric)) out.push_back(*v);
  }
  return out;
}

Summary RunResult::summary(Metric metric) const { return summarize(metric_values(metric)); }

RunResult train_eval(const ExperimentConfig& config, const std::string& label,
                     const LogSink& log) {
  config.validate();
  RunResult run;
  run.label = label.empty() ? std::string(to_string(config.loss)) : label;
  run.config = config;
  MetricsOptions metric_options{config.ece_buckets, config.clamp_eps};

  for (std::uint64_t seed : config.seeds) {
    SeedResult result;
    result.seed = seed;
    PreparedData data = prepare_data(config, seed);
    result.train_samples = data.train.size();
    for (const Sample& s : data.train) {
      auto& clicks = result.train_clicks[s.user_id];
      clicks += static_cast<std::size_t>(s.label);
    }

    const std::vector<ContextBatch> batches =
        make_train_batches(config, data.train, &result.oversize_splits, log);

    ModelConfig model_config;
    model_config.vocab_sizes = data.vocab_sizes;
    model_config.embed_dim = config.embed_dim;
    model_config.hidden_dims = config.hidden_dims;
    model_config.init_scale = config.init_scale;
    model_config.seed = mix_seed(seed, kModelSeedSalt);
    ModelParams params = init_model(model_config);

    double loss_sum = 0.0, calib_sum = 0.0, rank_sum = 0.0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
      for (const ContextBatch& batch : batches) {
        std::vector<std::uint8_t> participation;
        if (config.drop_rate > 0.0) {
          participation = drop_for_rank(
              batch, config.drop_rate, mix_seed(mix_seed(seed, kDropSeedSalt), params.step()));
        }
        const BatchLoss loss = train_step(params, config, batch, participation);
        loss_sum += loss.value;
        calib_sum += loss.calib_value;
        rank_sum += loss.rank_value;
        ++result.steps;
      }
    }
    const double steps = static_cast<double>(std::max<std::size_t>(result.steps, 1));
    result.mean_loss = loss_sum / steps;
    result.mean_calib_term = calib_sum / steps;
    result.mean_rank_term = rank_sum / steps;

    result.eval_predictions = predict(params, data.eval);
    result.metrics = evaluate(result.eval_predictions, metric_options);
    emit(log, run.label + " seed " + std::to_string(seed) + ": " + to_csv_row(result.metrics));
    run.seeds.push_back(std::move(result));
  }
  return run;
}

std::vector<MetricComparison> compare_to_baseline(const RunResult& run,
                                                  const RunResult& baseline) {
  check_same_seeds(run, baseline);
  std::vector<MetricComparison> out;
  for (Metric m : kAllMetrics) {
    MetricComparison c{m, run.summary(m), baseline.summary(m), {}};
    std::vector<double> a, b;
    bool complete = true;
    for (std::size_t i = 0; i < run.seeds.size(); ++i) {
      auto va = metric_value(run.seeds[i].metrics, m);
      auto vb = metric_value(baseline.seeds[i].metrics, m);
      if (!va || !vb) {
        complete = false;
        break;
      }
      a.push_back(*va);
      b.push_back(*vb);
    }
    if (complete) {
      c.test = paired_t_test(a, b);
    } else {
      c.test = TTestResult{kNaN, kNaN, kNaN};
    }
    out.push_back(c);
  }
  return out;
}

Table run_table(std::span<const RunResult> runs, const RunResult* baseline) {
  std::vector<std::string> header = {"run", "seeds"};
  for (Metric m : kAllMetrics) {
    header.push_back(to_string(m));
    header.push_back(std::string(to_string(m)) + "_std");
  }
  if (baseline) {
    for (Metric m : kAllMetrics) header.push_back(std::string(to_string(m)) + "_p");
  }
  header.push_back("calib_term");
  header.push_back("rank_term");
  Table table(header);
  for (const RunResult& run : runs) {
    std::vector<std::string> row = {run.label, std::to_string(run.seeds.size())};
    for (Metric m : kAllMetrics) {
      const Summary s = run.summary(m);
      row.push_back(s.n ? format_fixed(s.mean) : "NA");
      row.push_back(s.n > 1 ? format_fixed(s.stddev) : "NA");
    }
    if (baseline && &run == baseline) {
      row.insert(row.end(), std::size(kAllMetrics), "NA");
    } else if (baseline) {
      for (const MetricComparison& c : compare_to_baseline(run, *baseline)) {
        row.push_back(format_fixed(c.test.p_value, 4));
      }
    }
    double calib = 0.0, rank = 0.0;
    for (const SeedResult& s : run.seeds) {
      calib += s.mean_calib_term;
      rank += s.mean_rank_term;
    }
    const double n = static_cast<double>(std::max<std::size_t>(run.seeds.size(), 1));
    row.push_back(format_fixed(calib / n));
    row.push_back(format_fixed(rank / n));
    table.add_row(std::move(row));
  }
  return table;
}

Table seed_table(const RunResult& run) {
  std::vector<std::string> header = {"run", "seed", "train_samples", "eval_samples"};
  for (Metric m : kAllMetrics) header.push_back(to_string(m));
  for (const char* h : {"gauc_excluded_users", "steps", "mean_loss", "calib_term", "rank_term",
                        "oversize_splits"}) {
    header.push_back(h);
  }
  Table table(header);
  for (const SeedResult& s : run.seeds) {
    std::vector<std::string> row = {run.label, std::to_string(s.seed),
                                    std::to_string(s.train_samples),
                                    std::to_string(s.metrics.count)};
    for (Metric m : kAllMetrics) {
      auto v = metric_value(s.metrics, m);
      row.push_back(v ? format_fixed(*v) : "NA");
    }
    row.push_back(std::to_string(s.metrics.gauc_excluded_users));
    row.push_back(std::to_string(s.steps));
    row.push_back(format_fixed(s.mean_loss));
    row.push_back(format_fixed(s.mean_calib_term));
    row.push_back(format_fixed(s.mean_rank_term));
    row.push_back(std::to_string(s.oversize_splits));
    table.add_row(std::move(row));
  }
  return table;
}

SweepResult sweep_alpha(const ExperimentConfig& config, std::span<const double> ratios,
                        const RunResult* baseline, const LogSink& log) {
  if (ratios.empty()) throw ConfigError("sweep-alpha needs at least one ratio");
  if (config.loss != LossKind::kJrc && config.loss != LossKind::kCombinedPair &&
      config.loss != LossKind::kCombinedList) {
    throw ConfigError(std::string("loss '") + to_string(config.loss) +
                      "' has no calibration/ranking weight to sweep");
  }
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("weight ratio must be >= 0, got " + format_ratio(r));
  }
  SweepResult out{{}, Table({})};
  for (double r : ratios) {
    ExperimentConfig c = config;
    c.weight_ratio = r;
    out.runs.push_back(train_eval(c, "ratio=" + format_ratio(r), log));
  }
  out.table = run_table(out.runs, baseline);
  return out;
}

SweepResult sweep_context(const ExperimentConfig& config, std::span<const ContextKind> kinds,
                          const RunResult* baseline, const LogSink& log) {
  if (kinds.empty()) throw ConfigError("sweep-context needs at least one context kind");
  SweepResult out{{}, Table({})};
  for (ContextKind k : kinds) {
    ExperimentConfig c = config;
    c.context.kind = k;
    out.runs.push_back(train_eval(c, std::string("context=") + to_string(k), log));
  }
  out.table = run_table(out.runs, baseline);
  return out;
}

SweepResult sweep_droprate(const ExperimentConfig& config, std::span<const double> rates,
                           const RunResult* baseline, const LogSink& log) {
  if (rates.empty()) throw ConfigError("sweep-droprate needs at least one rate");
  for (double r : rates) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw ConfigError("drop rate must lie in [0, 1], got " + format_ratio(r));
    }
  }
  SweepResult out{{}, Table({})};
  for (double r : rates) {
    ExperimentConfig c = config;
    c.drop_rate = r;
    out.runs.push_back(train_eval(c, "drop_rate=" + format_ratio(r), log));
  }
  out.table = run_table(out.runs, baseline);
  return out;
}

std::vector<std::vector<std::size_t>> activity_groups(
    std::span<const Prediction> preds, const std::map<UserId, std::size_t>& train_clicks,
    std::size_t n_groups) {
  if (n_groups == 0) throw ConfigError("n_groups must be >= 1");
  auto clicks_of = [&](UserId u) -> std::size_t {
    auto it = train_clicks.find(u);
    return it == train_clicks.end() ? 0 : it->second;
  };
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const std::size_t ca = clicks_of(preds[a].user_id), cb = clicks_of(preds[b].user_id);
    if (ca != cb) return ca < cb;
    if (preds[a].user_id != preds[b].user_id) return preds[a].user_id < preds[b].user_id;
    return a < b;
  });
  std::vector<std::vector<std::size_t>> groups(n_groups);
  const std::size_t n = order.size();
  for (std::size_t g = 0; g < n_groups; ++g) {
    const std::size_t begin = g * n / n_groups, end = (g + 1) * n / n_groups;
    groups[g].assign(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return groups;
}

Table user_group_report(const RunResult& run, const RunResult* baseline,
                        std::size_t n_groups) {
  if (!baseline) throw ConfigError("user-group report needs a baseline run");
  check_same_seeds(run, *baseline);
  if (n_groups == 0) throw ConfigError("n_groups must be >= 1");

  struct Accum {
    double gauc = 0.0, base = 0.0;
    std::size_t seeds = 0, samples = 0;
    std::size_t min_clicks = std::numeric_limits<std::size_t>::max(), max_clicks = 0;
  };
  std::vector<Accum> acc(n_groups);
  for (std::size_t s = 0; s < run.seeds.size(); ++s) {
    const SeedResult& a = run.seeds[s];
    const SeedResult& b = baseline->seeds[s];
    if (a.eval_predictions.size() != b.eval_predictions.size()) {
      throw ConfigError("run and baseline were evaluated on different data (seed " +
                        std::to_string(a.seed) + ")");
    }
    for (std::size_t i = 0; i < a.eval_predictions.size(); ++i) {
      if (a.eval_predictions[i].user_id != b.eval_predictions[i].user_id ||
          a.eval_predictions[i].label != b.eval_predictions[i].label) {
        throw ConfigError("run and baseline were evaluated on different data (seed " +
                          std::to_string(a.seed) + ")");
      }
    }
    const auto groups = activity_groups(a.eval_predictions, a.train_clicks, n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
      std::vector<Prediction> pa, pb;
      for (std::size_t i : groups[g]) {
        pa.push_back(a.eval_predictions[i]);
        pb.push_back(b.eval_predictions[i]);
        auto it = a.train_clicks.find(a.eval_predictions[i].user_id);
        const std::size_t c = it == a.train_clicks.end() ? 0 : it->second;
        acc[g].min_clicks = std::min(acc[g].min_clicks, c);
        acc[g].max_clicks = std::max(acc[g].max_clicks, c);
      }
      acc[g].samples += groups[g].size();
      try {
        const double ga = gauc(pa).value;
        const double gb = gauc(pb).value;
        acc[g].gauc += ga;
        acc[g].base += gb;
        ++acc[g].seeds;
      } catch (const UndefinedMetricError&) {
        // Group without a user that has both classes in this seed.
      }
    }
  }

  Table table({"group", "samples", "min_train_clicks", "max_train_clicks", "seeds", "gauc",
               "baseline_gauc", "lift"});
  for (std::size_t g = 0; g < n_groups; ++g) {
    const Accum& a = acc[g];
    const bool any = a.seeds > 0;
    const double ga = any ? a.gauc / static_cast<double>(a.seeds) : kNaN;
    const double gb = any ? a.base / static_cast<double>(a.seeds) : kNaN;
    table.add_row({std::to_string(g + 1), std::to_string(a.samples),
                   a.samples ? std::to_string(a.min_clicks) : "NA",
                   a.samples ? std::to_string(a.max_clicks) : "NA", std::to_string(a.seeds),
                   format_fixed(ga), format_fixed(gb),
                   format_fixed(any ? (ga - gb) / gb : kNaN)});
  }
  return table;
}

}  // namespace jrc
