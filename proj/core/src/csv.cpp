#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "jrc/data.hpp"
#include "jrc/error.hpp"

namespace jrc {

namespace {

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string vocab_path(const std::string& prefix, const std::string& name) {
  return prefix + ".vocab." + name + ".csv";
}

void save_vocabulary(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write vocabulary file " + path);
  out << "token,id\n";
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out << vocab.token(static_cast<std::uint32_t>(id)) << ',' << id << '\n';
  }
}

Vocabulary load_vocabulary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read vocabulary file " + path);
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 || line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    std::uint32_t id = 0;
    if (comma == std::string::npos ||
        !parse_int(std::string_view(line).substr(comma + 1), id)) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected 'token,id'");
    }
    vocab.insert(line.substr(0, comma), id);
  }
  if (!vocab.dense()) {
    throw DataError(path + ": vocabulary IDs are not dense");
  }
  return vocab;
}

Vocabulary identity_vocabulary(std::size_t n) {
  Vocabulary vocab;
  for (std::size_t i = 0; i < n; ++i) vocab.intern(std::to_string(i));
  return vocab;
}

}  // namespace

std::uint32_t Vocabulary::intern(std::string_view token) {
  auto it = ids_.find(std::string(token));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<std::uint32_t>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(std::string(token), id);
  return id;
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::insert(std::string token, std::uint32_t id) {
  if (auto existing = find(token)) {
    if (*existing != id) {
      throw DataError("vocabulary token '" + token + "' mapped to two IDs");
    }
    return;
  }
  if (id >= tokens_.size()) tokens_.resize(id + 1);
  if (!tokens_[id].empty()) {
    throw DataError("vocabulary ID " + std::to_string(id) + " assigned twice");
  }
  tokens_[id] = token;
  ids_.emplace(std::move(token), id);
}

void CsvSchema::validate() const {
  if (label_column.empty()) throw ConfigError("CSV schema: label column is required");
  std::set<std::string> seen;
  for (const auto& f : feature_columns) {
    if (f.empty()) throw ConfigError("CSV schema: empty feature column name");
    if (!seen.insert(f).second) {
      throw ConfigError("CSV schema: feature column '" + f + "' listed twice");
    }
    if (f == label_column) {
      throw ConfigError("CSV schema: label column '" + f + "' used as a feature");
    }
    if (!timestamp_column.empty() && f == timestamp_column) {
      throw ConfigError("CSV schema: timestamp column '" + f +
                        "' used as a feature");
    }
  }
  if (feature_columns.empty()) {
    throw ConfigError("CSV schema: at least one feature column is required");
  }
  if (!timestamp_column.empty() && timestamp_column == label_column) {
    throw ConfigError("CSV schema: label and timestamp share a column");
  }
}

CsvData read_csv(const std::string& path, const CsvSchema& schema,
                 const CsvVocabularies* preset) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  CsvData data;
  if (preset) data.vocab = *preset;
  data.vocab.features.resize(schema.feature_columns.size());

  std::string line;
  std::size_t line_no = 0;
  std::size_t n_columns = 0;
  std::unordered_map<std::string, std::size_t> column_of;

  if (schema.has_header) {
    if (!std::getline(in, line)) return data;  // empty file
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto names = split(line, schema.delimiter);
    n_columns = names.size();
    for (std::size_t c = 0; c < names.size(); ++c) {
      column_of.emplace(std::string(names[c]), c);
    }
  }

  auto resolve = [&](const std::string& name,
                     const char* role) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    if (schema.has_header) {
      auto it = column_of.find(name);
      if (it == column_of.end()) {
        throw DataError(path + ": schema " + role + " column '" + name +
                        "' not found in header");
      }
      return it->second;
    }
    std::size_t index = 0;
    if (!parse_int(name, index)) {
      throw ConfigError("CSV schema: without a header, column '" + name +
                        "' must be a zero-based position");
    }
    n_columns = std::max(n_columns, index + 1);
    return index;
  };

  const std::size_t label_col = *resolve(schema.label_column, "label");
  const auto user_col = resolve(schema.user_column, "user");
  const auto ts_col = resolve(schema.timestamp_column, "timestamp");
  const auto domain_col = resolve(schema.domain_column, "domain");
  const auto gender_col = resolve(schema.gender_column, "gender");
  std::vector<std::size_t> feature_cols;
  for (const auto& f : schema.feature_columns) feature_cols.push_back(*resolve(f, "feature"));

  auto malformed = [&](std::size_t at) {
    ++data.malformed_rows;
    data.malformed_lines.push_back(at);
    if (data.malformed_rows > schema.max_malformed_rows) {
      std::ostringstream msg;
      msg << path << ": " << data.malformed_rows
          << " malformed rows exceed the limit of " << schema.max_malformed_rows
          << " (lines";
      for (std::size_t i = 0; i < std::min<std::size_t>(10, data.malformed_lines.size()); ++i) {
        msg << ' ' << data.malformed_lines[i];
      }
      if (data.malformed_lines.size() > 10) msg << " ...";
      msg << ')';
      throw DataError(msg.str());
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, schema.delimiter);
    if (fields.size() != n_columns && (schema.has_header || fields.size() < n_columns)) {
      malformed(line_no);
      continue;
    }

    Sample sample;
    const std::string_view label = fields[label_col];
    if (label == "0") {
      sample.label = 0;
    } else if (label == "1") {
      sample.label = 1;
    } else {
      malformed(line_no);
      continue;
    }
    if (ts_col && !(parse_int(fields[*ts_col], sample.timestamp) && sample.timestamp >= 0)) {
      malformed(line_no);
      continue;
    }
    bool ok = true;
    for (std::size_t col : feature_cols) {
      if (fields[col].empty()) ok = false;
    }
    if (user_col && fields[*user_col].empty()) ok = false;
    if (!ok) {
      malformed(line_no);
      continue;
    }

    if (user_col) sample.user_id = data.vocab.users.intern(fields[*user_col]);
    if (domain_col && !fields[*domain_col].empty()) {
      sample.domain = data.vocab.domains.intern(fields[*domain_col]);
    }
    if (gender_col && !fields[*gender_col].empty()) {
      sample.gender = data.vocab.genders.intern(fields[*gender_col]);
    }
    sample.features.reserve(feature_cols.size());
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      sample.features.push_back(data.vocab.features[f].intern(fields[feature_cols[f]]));
    }
    data.samples.push_back(std::move(sample));
  }
  return data;
}

void write_csv(const std::string& path, const std::vector<Sample>& samples,
               const CsvSchema& schema) {
  schema.validate();
  // Unique column names, in a fixed order.
  std::vector<std::string> columns;
  auto add = [&](const std::string& name) {
    if (!name.empty() && std::find(columns.begin(), columns.end(), name) == columns.end()) {
      columns.push_back(name);
    }
  };
  add(schema.label_column);
  add(schema.user_column);
  add(schema.timestamp_column);
  add(schema.domain_column);
  add(schema.gender_column);
  for (const auto& f : schema.feature_columns) add(f);

  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  const char delim = schema.delimiter;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << (c ? std::string(1, delim) : std::string()) << columns[c];
  }
  out << '\n';

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    if (s.features.size() != schema.feature_columns.size()) {
      throw InputError("write_csv: sample " + std::to_string(i) + " has " +
                       std::to_string(s.features.size()) + " features, schema has " +
                       std::to_string(schema.feature_columns.size()));
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& name = columns[c];
      std::optional<std::string> value;
      auto put = [&](std::string token) {
        if (value && *value != token) {
          throw InputError("write_csv: column '" + name +
                           "' carries two different values in sample " +
                           std::to_string(i));
        }
        value = std::move(token);
      };
      if (name == schema.label_column) put(std::to_string(s.label));
      if (name == schema.user_column) put(std::to_string(s.user_id));
      if (name == schema.timestamp_column) put(std::to_string(s.timestamp));
      if (name == schema.domain_column) put(s.domain ? std::to_string(*s.domain) : "");
      if (name == schema.gender_column) put(s.gender ? std::to_string(*s.gender) : "");
      for (std::size_t f = 0; f < schema.feature_columns.size(); ++f) {
        if (name == schema.feature_columns[f]) put(std::to_string(s.features[f]));
      }
      if (c) out << delim;
      out << value.value_or("");
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path);
}

void save_vocabularies(const std::string& prefix, const CsvVocabularies& vocab) {
  for (std::size_t f = 0; f < vocab.features.size(); ++f) {
    save_vocabulary(vocab_path(prefix, "f" + std::to_string(f)), vocab.features[f]);
  }
  save_vocabulary(vocab_path(prefix, "user"), vocab.users);
  save_vocabulary(vocab_path(prefix, "domain"), vocab.domains);
  save_vocabulary(vocab_path(prefix, "gender"), vocab.genders);
}

CsvVocabularies load_vocabularies(const std::string& prefix,
                                  std::size_t n_feature_columns) {
  CsvVocabularies vocab;
  for (std::size_t f = 0; f < n_feature_columns; ++f) {
    vocab.features.push_back(load_vocabulary(vocab_path(prefix, "f" + std::to_string(f))));
  }
  vocab.users = load_vocabulary(vocab_path(prefix, "user"));
  vocab.domains = load_vocabulary(vocab_path(prefix, "domain"));
  vocab.genders = load_vocabulary(vocab_path(prefix, "gender"));
  return vocab;
}

CsvVocabularies synth_vocabularies(const SynthConfig& config) {
  CsvVocabularies vocab;
  for (std::size_t n : config.vocab_sizes()) vocab.features.push_back(identity_vocabulary(n));
  vocab.users = identity_vocabulary(config.n_users);
  vocab.domains = identity_vocabulary(config.n_domains);
  vocab.genders = identity_vocabulary(2);
  return vocab;
}

CsvSchema synth_csv_schema() {
  CsvSchema schema;
  schema.label_column = "label";
  schema.user_column = "user";
  schema.timestamp_column = "timestamp";
  schema.domain_column = "domain";
  schema.gender_column = "gender";
  schema.feature_columns = {"user", "item", "domain", "gender"};
  return schema;
}

}  // namespace jrc
