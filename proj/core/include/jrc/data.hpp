#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jrc/types.hpp"

namespace jrc {

// Synthetic CTR data with known click probabilities. Each impression's
// ground truth is
//   true_ctr = sigmoid(base_logit + <u_user, v_item> + item_bias
//                      + domain_bias + user_offset + session_offset)
// where the latent vectors, biases and offsets are drawn from `seed`.
//   <u, v>          has standard deviation interaction_scale
//   item_bias       ~ item_bias_scale * N(0, 1)
//   domain_bias     ~ domain_bias_scale * N(0, 1)
//   user_offset     ~ activity_skew * N(0, 1)      (per user, fixed)
//   session_offset  ~ noise_scale * N(0, 1)        (per session, unobserved)
// User u's session s starts at a random time on day s and its impressions
// fall inside the following session_window_seconds.
// Features per sample: [user, item, domain, gender].
struct SynthConfig {
  std::size_t n_users = 2500;
  std::size_t n_items = 300;
  std::size_t n_domains = 4;
  std::size_t sessions_per_user = 14;
  std::size_t items_per_session = 7;
  std::size_t latent_dim = 4;
  double base_logit = -1.5;
  double noise_scale = 1.0;
  std::uint64_t seed = 1;
  double activity_skew = 0.5;
  double interaction_scale = 1.0;
  double item_bias_scale = 0.5;
  double domain_bias_scale = 0.3;
  std::int64_t session_window_seconds = 600;

  void validate() const;
  std::vector<std::size_t> vocab_sizes() const;
  std::size_t num_samples() const {
    return n_users * sessions_per_user * items_per_session;
  }
};

struct LabeledSample {
  Sample sample;
  double true_ctr = 0.5;
};

// All samples, ordered by timestamp (ties by generation order).
std::vector<LabeledSample> generate(const SynthConfig& config);

// Dense dictionary encoding of string tokens, IDs in order of first intern.
class Vocabulary {
 public:
  std::uint32_t intern(std::string_view token);
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return tokens_[id]; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // Every ID below size() has a token.
  bool dense() const { return ids_.size() == tokens_.size(); }

  // Inserts token with an explicit ID; IDs must be dense once loading is
  // complete. Throws DataError on conflicting entries.
  void insert(std::string token, std::uint32_t id);

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> tokens_;
};

// Column mapping of an external CSV file. Columns are referred to by header
// name, or by zero-based position ("0", "1", ...) when has_header is false.
// Optional columns are left empty when absent.
struct CsvSchema {
  std::string label_column = "label";
  std::string user_column;
  std::string timestamp_column;
  std::vector<std::string> feature_columns;
  std::string domain_column;
  std::string gender_column;
  char delimiter = ',';
  bool has_header = true;
  std::size_t max_malformed_rows = 0;

  // Label and timestamp must not double as feature columns, and feature
  // columns must be distinct. Throws ConfigError.
  void validate() const;
};

struct CsvVocabularies {
  std::vector<Vocabulary> features;  // one per feature column
  Vocabulary users;
  Vocabulary domains;
  Vocabulary genders;
};

struct CsvData {
  std::vector<Sample> samples;
  CsvVocabularies vocab;
  std::size_t malformed_rows = 0;
  std::vector<std::size_t> malformed_lines;  // 1-based line numbers
};

// Parses `path` under `schema`. Categorical tokens are dictionary-encoded;
// when `preset` is given its vocabularies are used (and extended) so IDs can
// be reproduced across files. Malformed rows are skipped and counted; more
// than schema.max_malformed_rows of them raise DataError listing the lines.
// A missing label (or other named) column raises DataError.
CsvData read_csv(const std::string& path, const CsvSchema& schema,
                 const CsvVocabularies* preset = nullptr);

// Writes samples with feature IDs, user IDs and attributes as decimal
// tokens, using the column names of `schema` (header always written).
void write_csv(const std::string& path, const std::vector<Sample>& samples,
               const CsvSchema& schema);

// Persists vocabularies as two-column CSV files "<prefix>.vocab.<name>.csv"
// (token,id) with names f<k>, user, domain, gender.
void save_vocabularies(const std::string& prefix, const CsvVocabularies& vocab);
CsvVocabularies load_vocabularies(const std::string& prefix,
                                  std::size_t n_feature_columns);

// Identity vocabularies ("0" -> 0, "1" -> 1, ...) matching the synthetic
// generator, so that generated data written with write_csv reads back to
// identical samples.
CsvVocabularies synth_vocabularies(const SynthConfig& config);

// Schema of files written by the gen-data command.
CsvSchema synth_csv_schema();

}  // namespace jrc
