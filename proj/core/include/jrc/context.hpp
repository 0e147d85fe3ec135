#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jrc/mask.hpp"
#include "jrc/types.hpp"

namespace jrc {

enum class ContextKind { kBatch, kGender, kDomain, kSession };

const char* to_string(ContextKind kind);
// Accepts "batch", "gender", "domain", "session"; throws ConfigError.
ContextKind parse_context_kind(std::string_view name);

struct ContextPolicy {
  ContextKind kind = ContextKind::kBatch;
  std::int64_t session_window_seconds = 600;

  void validate() const;
};

struct ContextBatch {
  std::vector<Sample> samples;
  std::vector<ContextKey> context_index;
  ContextMask mask;

  std::size_t size() const { return samples.size(); }
};

// Context key per sample:
//   batch          -> 0 for everyone
//   gender, domain -> the attribute value (DataError if missing)
//   session        -> dense ID of (user, window); each user's samples are
//                     walked in timestamp order and a new window starts at
//                     the first sample not covered by the previous one
//                     (tumbling, anchored at the window's first sample).
std::vector<ContextKey> assign_context(std::span<const Sample> samples,
                                       const ContextPolicy& policy);

ContextMask build_mask(std::span<const ContextKey> context_index);

// Recomputes keys and mask of `samples` under `policy`.
ContextBatch make_context_batch(std::vector<Sample> samples,
                                const ContextPolicy& policy);

// Per-sample flags for the rank term: 1 = participates. Each sample is
// dropped independently with probability drop_rate under `seed`.
// Throws ConfigError unless drop_rate is in [0, 1].
std::vector<std::uint8_t> drop_for_rank(const ContextBatch& batch,
                                        double drop_rate, std::uint64_t seed);

// Groups a timestamp-ordered event stream into minibatches made of whole
// contexts.
//
// For the session policy a context is one user's samples inside a tumbling
// window of session_window_seconds. A context is closed once stream time
// passes the end of its window, and closed contexts are packed into the
// pending batch, which is emitted before it would exceed max_batch. A
// context that alone outgrows max_batch is cut into sub-contexts of
// max_batch samples, each with its own key, and a warning is reported.
//
// For the batch, gender and domain policies the stream is chunked into
// consecutive batches of max_batch samples and keys are assigned within
// each batch.
//
// Events may arrive out of order by at most one window length; they are
// held in a reorder buffer and processed in timestamp order. An event older
// than (latest timestamp - window) raises StreamError.
class StreamBatcher {
 public:
  using WarningSink = std::function<void(const std::string&)>;

  StreamBatcher(ContextPolicy policy, std::size_t max_batch,
                WarningSink warn = {});

  void push(Sample sample);
  // Flushes buffered events, open windows and the pending batch.
  void finish();

  bool has_batch() const { return !ready_.empty(); }
  ContextBatch pop_batch();

  std::size_t oversize_splits() const { return oversize_splits_; }

 private:
  struct Buffered {
    std::int64_t timestamp;
    std::uint64_t seq;
    Sample sample;
  };
  struct LaterFirst {
    bool operator()(const Buffered& a, const Buffered& b) const {
      return a.timestamp != b.timestamp ? a.timestamp > b.timestamp
                                        : a.seq > b.seq;
    }
  };
  struct Window {
    UserId user = 0;
    std::int64_t anchor = 0;
    ContextKey key = 0;
    std::vector<Sample> samples;
  };

  void release_until(std::int64_t limit, bool everything);
  void process(Sample sample);
  void close_front_window();
  void add_context(std::vector<Sample>& samples, ContextKey key);
  void emit_pending();

  ContextPolicy policy_;
  std::size_t max_batch_;
  WarningSink warn_;

  std::priority_queue<Buffered, std::vector<Buffered>, LaterFirst> buffer_;
  std::uint64_t next_seq_ = 0;
  bool seen_any_ = false;
  std::int64_t watermark_ = 0;

  std::deque<Window> open_;  // ordered by anchor
  std::unordered_map<UserId, std::size_t> open_index_;  // user -> position offset
  std::uint64_t popped_windows_ = 0;
  ContextKey next_key_ = 0;

  std::vector<Sample> pending_samples_;
  std::vector<ContextKey> pending_keys_;
  std::deque<ContextBatch> ready_;
  std::size_t oversize_splits_ = 0;
};

// Runs a StreamBatcher over `events` and collects every batch.
std::vector<ContextBatch> batch_stream(std::span<const Sample> events,
                                       const ContextPolicy& policy,
                                       std::size_t max_batch,
                                       StreamBatcher::WarningSink warn = {});

}  // namespace jrc
