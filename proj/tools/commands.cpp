#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "jrc/data.hpp"
#include "jrc/error.hpp"
#include "jrc/harness.hpp"
#include "jrc/metrics.hpp"

namespace jrc::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

fs::path prepare_dir(const OutputOptions& out) {
  fs::path dir(out.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

LogSink make_log(const OutputOptions& out) {
  if (out.quiet) return {};
  return [](const std::string& message) { std::cerr << "[jrc] " << message << "\n"; };
}

std::string sanitize(const std::string& label) {
  std::string s = label;
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')) {
      c = '_';
    }
  }
  return s;
}

std::optional<RunResult> maybe_baseline(const ExperimentConfig& config, bool with_baseline,
                                        const LogSink& log) {
  if (!with_baseline) return std::nullopt;
  ExperimentConfig base = config;
  base.loss = config.baseline_loss;
  base.drop_rate = 0.0;
  return train_eval(base, std::string("baseline:") + to_string(base.loss), log);
}

void write_predictions(const fs::path& path, const RunResult& run) {
  std::ostringstream out;
  out << "seed,user_id,label,p_hat\n";
  char buf[64];
  for (const SeedResult& s : run.seeds) {
    for (const Prediction& p : s.eval_predictions) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.p_hat);
      out << s.seed << ',' << p.user_id << ',' << p.label << ',' << buf << '\n';
    }
  }
  write_file(path, out.str());
}

void write_table(const fs::path& dir, const std::string& stem, const Table& table) {
  write_file(dir / (stem + ".csv"), table.to_csv());
  write_file(dir / (stem + ".txt"), table.to_text());
}

void print(const OutputOptions& out, const std::string& text) {
  if (!out.quiet) std::cout << text;
}

const char* kReplicateNote =
    "# p-values: paired two-sided t-test across training seeds (one replicate per seed)\n";

int finish_sweep(const SweepResult& sweep, const std::optional<RunResult>& baseline,
                 const std::string& name, const OutputOptions& out) {
  const fs::path dir = prepare_dir(out);
  write_table(dir, name, sweep.table);
  fs::create_directories(dir / "configs");
  std::vector<RunResult> all = sweep.runs;
  if (baseline) all.push_back(*baseline);
  for (const RunResult& run : all) {
    write_file(dir / "configs" / (sanitize(run.label) + ".txt"), run.config.to_text());
  }
  std::string seeds;
  for (const RunResult& run : all) {
    const std::string t = seed_table(run).to_csv();
    seeds += seeds.empty() ? t : t.substr(t.find('\n') + 1);
  }
  write_file(dir / (name + "_seeds.csv"), seeds);
  print(out, sweep.table.to_text());
  if (baseline) print(out, kReplicateNote);
  return 0;
}

}  // namespace

int cmd_train(const ExperimentConfig& config, const std::string& label, bool with_baseline,
              bool predictions, const OutputOptions& out) {
  config.validate();
  const LogSink log = make_log(out);
  const fs::path dir = prepare_dir(out);
  write_file(dir / "config.txt", config.to_text());

  const RunResult run = train_eval(config, label, log);
  std::optional<RunResult> baseline;
  if (with_baseline && config.loss != config.baseline_loss) {
    baseline = maybe_baseline(config, true, log);
  }
  std::vector<RunResult> rows = {run};
  if (baseline) rows.push_back(*baseline);
  const Table table = run_table(rows, baseline ? &rows.back() : nullptr);
  write_table(dir, "runs", table);

  std::string seeds = seed_table(run).to_csv();
  if (baseline) {
    const std::string t = seed_table(*baseline).to_csv();
    seeds += t.substr(t.find('\n') + 1);
  }
  write_file(dir / "seeds.csv", seeds);
  if (predictions) write_predictions(dir / "predictions.csv", run);

  print(out, table.to_text());
  if (baseline) print(out, kReplicateNote);
  return 0;
}

int cmd_eval(const std::string& predictions_path, std::size_t ece_buckets, double clamp_eps,
             const OutputOptions& out) {
  std::ifstream in(predictions_path);
  if (!in) throw DataError("cannot read " + predictions_path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(predictions_path + " is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      header.push_back(cell);
    }
  }
  auto column = [&](const std::string& name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    if (required) throw DataError(predictions_path + ": missing column '" + name + "'");
    return std::nullopt;
  };
  const std::size_t p_col = *column("p_hat", true);
  const std::size_t y_col = *column("label", true);
  const auto u_col = column("user_id", false);

  std::vector<Prediction> preds;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw DataError(predictions_path + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    Prediction p;
    try {
      std::size_t used = 0;
      p.p_hat = std::stod(cells[p_col], &used);
      if (used != cells[p_col].size()) throw std::invalid_argument("p_hat");
      if (cells[y_col] != "0" && cells[y_col] != "1") throw std::invalid_argument("label");
      p.label = cells[y_col] == "1" ? 1 : 0;
      if (u_col) p.user_id = std::stoull(cells[*u_col]);
    } catch (const std::exception&) {
      throw DataError(predictions_path + ":" + std::to_string(line_no) + ": malformed row");
    }
    if (!(p.p_hat >= 0.0 && p.p_hat <= 1.0)) {
      throw DataError(predictions_path + ":" + std::to_string(line_no) +
                      ": p_hat outside [0, 1]");
    }
    preds.push_back(p);
  }

  const MetricsReport report = evaluate(preds, MetricsOptions{ece_buckets, clamp_eps});
  const std::string csv = metrics_csv_header() + "\n" + to_csv_row(report) + "\n";
  if (!out.out_dir.empty()) {
    const fs::path dir = prepare_dir(out);
    write_file(dir / "metrics.csv", csv);
    write_file(dir / "metrics.txt", to_text(report));
  }
  print(out, to_text(report));
  return 0;
}

int cmd_sweep_alpha(const ExperimentConfig& config, const std::vector<double>& ratios,
                    bool with_baseline, const OutputOptions& out) {
  config.validate();
  const LogSink log = make_log(out);
  const auto baseline = maybe_baseline(config, with_baseline, log);
  const SweepResult sweep =
      sweep_alpha(config, ratios, baseline ? &*baseline : nullptr, log);
  return finish_sweep(sweep, baseline, "sweep_alpha", out);
}

int cmd_sweep_context(const ExperimentConfig& config, const std::vector<ContextKind>& kinds,
                      bool with_baseline, const OutputOptions& out) {
  config.validate();
  const LogSink log = make_log(out);
  const auto baseline = maybe_baseline(config, with_baseline, log);
  const SweepResult sweep =
      sweep_context(config, kinds, baseline ? &*baseline : nullptr, log);
  return finish_sweep(sweep, baseline, "sweep_context", out);
}

int cmd_sweep_droprate(const ExperimentConfig& config, const std::vector<double>& rates,
                       bool with_baseline, const OutputOptions& out) {
  config.validate();
  const LogSink log = make_log(out);
  const auto baseline = maybe_baseline(config, with_baseline, log);
  const SweepResult sweep =
      sweep_droprate(config, rates, baseline ? &*baseline : nullptr, log);
  return finish_sweep(sweep, baseline, "sweep_droprate", out);
}

int cmd_user_groups(const ExperimentConfig& config, const OutputOptions& out) {
  config.validate();
  const LogSink log = make_log(out);
  const fs::path dir = prepare_dir(out);
  write_file(dir / "config.txt", config.to_text());
  const RunResult run = train_eval(config, "", log);
  const auto baseline = maybe_baseline(config, true, log);
  const Table table = user_group_report(run, &*baseline, config.n_groups);
  write_table(dir, "user_groups", table);
  print(out, table.to_text());
  return 0;
}

int cmd_gen_data(const SynthConfig& synth, const std::string& prefix, bool quiet) {
  const auto labeled = generate(synth);
  std::vector<Sample> samples;
  samples.reserve(labeled.size());
  for (const LabeledSample& ls : labeled) samples.push_back(ls.sample);
  const fs::path parent = fs::path(prefix).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  write_csv(prefix + ".csv", samples, synth_csv_schema());
  save_vocabularies(prefix, synth_vocabularies(synth));
  if (!quiet) {
    std::cout << "wrote " << samples.size() << " samples to " << prefix << ".csv\n";
  }
  return 0;
}

}  // namespace jrc::cli
