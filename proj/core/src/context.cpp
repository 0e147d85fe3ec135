#include "jrc/context.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "jrc/error.hpp"
#include "jrc/random.hpp"

namespace jrc {

ContextMask ContextMask::from_keys(std::span<const ContextKey> keys) {
  ContextMask mask;
  mask.n_ = keys.size();
  mask.bits_.assign(mask.n_ * mask.n_, 0);
  for (std::size_t i = 0; i < mask.n_; ++i) {
    for (std::size_t j = 0; j < mask.n_; ++j) {
      mask.bits_[i * mask.n_ + j] = keys[i] == keys[j] ? 1 : 0;
    }
  }
  return mask;
}

bool ContextMask::is_symmetric_with_unit_diagonal() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(*this)(i, i)) return false;
    for (std::size_t j = i + 1; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(j, i)) return false;
    }
  }
  return true;
}

bool ContextMask::is_equivalence() const {
  if (!is_symmetric_with_unit_diagonal()) return false;
  // Symmetric + reflexive is transitive iff every row equals the row of its
  // first member.
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t first = 0;
    while (!(*this)(i, first)) ++first;
    for (std::size_t j = 0; j < n_; ++j) {
      if ((*this)(i, j) != (*this)(first, j)) return false;
    }
  }
  return true;
}

std::vector<std::size_t> ContextMask::components() const {
  if (!is_equivalence()) {
    throw InputError("mask does not describe a partition into contexts");
  }
  std::vector<std::size_t> out(n_);
  std::vector<std::size_t> id_of_first(n_, n_);
  std::size_t next = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t first = 0;
    while (!(*this)(i, first)) ++first;
    if (id_of_first[first] == n_) id_of_first[first] = next++;
    out[i] = id_of_first[first];
  }
  return out;
}

const char* to_string(ContextKind kind) {
  switch (kind) {
    case ContextKind::kBatch:
      return "batch";
    case ContextKind::kGender:
      return "gender";
    case ContextKind::kDomain:
      return "domain";
    case ContextKind::kSession:
      return "session";
  }
  return "?";
}

ContextKind parse_context_kind(std::string_view name) {
  if (name == "batch") return ContextKind::kBatch;
  if (name == "gender") return ContextKind::kGender;
  if (name == "domain") return ContextKind::kDomain;
  if (name == "session") return ContextKind::kSession;
  throw ConfigError("unknown context kind '" + std::string(name) +
                    "' (expected batch, gender, domain or session)");
}

void ContextPolicy::validate() const {
  if (session_window_seconds <= 0) {
    throw ConfigError("session_window_seconds must be > 0");
  }
}

std::vector<ContextKey> assign_context(std::span<const Sample> samples,
                                       const ContextPolicy& policy) {
  policy.validate();
  const std::size_t n = samples.size();
  std::vector<ContextKey> keys(n, 0);
  switch (policy.kind) {
    case ContextKind::kBatch:
      break;
    case ContextKind::kGender:
    case ContextKind::kDomain: {
      const bool gender = policy.kind == ContextKind::kGender;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& attr = gender ? samples[i].gender : samples[i].domain;
        if (!attr) {
          throw DataError("sample " + std::to_string(i) + " has no " +
                          (gender ? "gender" : "domain") + " attribute");
        }
        keys[i] = *attr;
      }
      break;
    }
    case ContextKind::kSession: {
      std::map<UserId, std::vector<std::size_t>> by_user;
      for (std::size_t i = 0; i < n; ++i) by_user[samples[i].user_id].push_back(i);

      // (user, window number) per sample, then dense IDs by first appearance.
      std::vector<std::pair<UserId, std::size_t>> window_of(n);
      for (auto& [user, idx] : by_user) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          return samples[a].timestamp < samples[b].timestamp;
        });
        std::size_t window = 0;
        std::int64_t anchor = samples[idx.front()].timestamp;
        for (std::size_t i : idx) {
          if (samples[i].timestamp - anchor >= policy.session_window_seconds) {
            ++window;
            anchor = samples[i].timestamp;
          }
          window_of[i] = {user, window};
        }
      }
      std::map<std::pair<UserId, std::size_t>, ContextKey> dense;
      for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = dense.try_emplace(window_of[i], dense.size());
        keys[i] = it->second;
      }
      break;
    }
  }
  return keys;
}

ContextMask build_mask(std::span<const ContextKey> context_index) {
  return ContextMask::from_keys(context_index);
}

ContextBatch make_context_batch(std::vector<Sample> samples,
                                const ContextPolicy& policy) {
  ContextBatch batch;
  batch.context_index = assign_context(samples, policy);
  batch.mask = build_mask(batch.context_index);
  batch.samples = std::move(samples);
  return batch;
}

std::vector<std::uint8_t> drop_for_rank(const ContextBatch& batch,
                                        double drop_rate, std::uint64_t seed) {
  if (!(drop_rate >= 0.0 && drop_rate <= 1.0)) {
    throw ConfigError("drop_rate must lie in [0, 1], got " +
                      std::to_string(drop_rate));
  }
  Rng rng(seed);
  std::vector<std::uint8_t> flags(batch.size());
  for (auto& flag : flags) flag = bernoulli(rng, drop_rate) ? 0 : 1;
  return flags;
}

StreamBatcher::StreamBatcher(ContextPolicy policy, std::size_t max_batch,
                             WarningSink warn)
    : policy_(policy), max_batch_(max_batch), warn_(std::move(warn)) {
  policy_.validate();
  if (max_batch_ == 0) throw ConfigError("max_batch must be >= 1");
}

void StreamBatcher::push(Sample sample) {
  const std::int64_t t = sample.timestamp;
  if (t < 0) throw StreamError("negative timestamp " + std::to_string(t));
  if (seen_any_ && t < watermark_ - policy_.session_window_seconds) {
    throw StreamError("timestamp " + std::to_string(t) +
                      " regresses more than one window behind " +
                      std::to_string(watermark_));
  }
  watermark_ = seen_any_ ? std::max(watermark_, t) : t;
  seen_any_ = true;
  buffer_.push(Buffered{t, next_seq_++, std::move(sample)});
  release_until(watermark_ - policy_.session_window_seconds, false);
}

void StreamBatcher::finish() {
  release_until(0, true);
  while (!open_.empty()) close_front_window();
  emit_pending();
}

ContextBatch StreamBatcher::pop_batch() {
  ContextBatch batch = std::move(ready_.front());
  ready_.pop_front();
  return batch;
}

void StreamBatcher::release_until(std::int64_t limit, bool everything) {
  while (!buffer_.empty() && (everything || buffer_.top().timestamp <= limit)) {
    // priority_queue::top is const; the element is discarded right after.
    Sample sample = std::move(const_cast<Buffered&>(buffer_.top()).sample);
    buffer_.pop();
    process(std::move(sample));
  }
}

void StreamBatcher::process(Sample sample) {
  if (policy_.kind != ContextKind::kSession) {
    pending_samples_.push_back(std::move(sample));
    if (pending_samples_.size() == max_batch_) emit_pending();
    return;
  }

  const std::int64_t t = sample.timestamp;
  while (!open_.empty() &&
         open_.front().anchor + policy_.session_window_seconds <= t) {
    close_front_window();
  }

  auto it = open_index_.find(sample.user_id);
  if (it == open_index_.end()) {
    Window window;
    window.user = sample.user_id;
    window.anchor = t;
    window.key = next_key_++;
    open_.push_back(std::move(window));
    it = open_index_.emplace(sample.user_id, popped_windows_ + open_.size() - 1)
             .first;
  }
  Window& window = open_[it->second - popped_windows_];
  if (window.samples.size() == max_batch_) {
    ++oversize_splits_;
    if (warn_) {
      warn_("context of user " + std::to_string(window.user) +
            " exceeds max_batch=" + std::to_string(max_batch_) +
            "; splitting into sub-contexts");
    }
    add_context(window.samples, window.key);
    window.samples.clear();
    window.key = next_key_++;
  }
  window.samples.push_back(std::move(sample));
}

void StreamBatcher::close_front_window() {
  Window window = std::move(open_.front());
  open_.pop_front();
  ++popped_windows_;
  open_index_.erase(window.user);
  if (!window.samples.empty()) add_context(window.samples, window.key);
}

void StreamBatcher::add_context(std::vector<Sample>& samples, ContextKey key) {
  if (pending_samples_.size() + samples.size() > max_batch_) emit_pending();
  for (auto& s : samples) {
    pending_samples_.push_back(std::move(s));
    pending_keys_.push_back(key);
  }
  if (pending_samples_.size() == max_batch_) emit_pending();
}

void StreamBatcher::emit_pending() {
  if (pending_samples_.empty()) return;
  ContextBatch batch;
  if (policy_.kind == ContextKind::kSession) {
    batch.context_index = std::move(pending_keys_);
  } else {
    batch.context_index = assign_context(pending_samples_, policy_);
  }
  batch.mask = build_mask(batch.context_index);
  batch.samples = std::move(pending_samples_);
  pending_samples_.clear();
  pending_keys_.clear();
  ready_.push_back(std::move(batch));
}

std::vector<ContextBatch> batch_stream(std::span<const Sample> events,
                                       const ContextPolicy& policy,
                                       std::size_t max_batch,
                                       StreamBatcher::WarningSink warn) {
  StreamBatcher batcher(policy, max_batch, std::move(warn));
  std::vector<ContextBatch> out;
  for (const Sample& s : events) {
    batcher.push(s);
    while (batcher.has_batch()) out.push_back(batcher.pop_batch());
  }
  batcher.finish();
  while (batcher.has_batch()) out.push_back(batcher.pop_batch());
  return out;
}

}  // namespace jrc
