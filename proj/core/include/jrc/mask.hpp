#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "jrc/types.hpp"

namespace jrc {

// Square boolean matrix; entry (i, j) is set iff samples i and j share a
// context.
class ContextMask {
 public:
  ContextMask() = default;

  // n x n identity (every sample in its own context).
  explicit ContextMask(std::size_t n) : n_(n), bits_(n * n, 0) {
    for (std::size_t i = 0; i < n; ++i) bits_[i * n + i] = 1;
  }

  // mask(i, j) = keys[i] == keys[j].
  static ContextMask from_keys(std::span<const ContextKey> keys);

  std::size_t size() const { return n_; }
  bool operator()(std::size_t i, std::size_t j) const {
    return bits_[i * n_ + j] != 0;
  }
  void set(std::size_t i, std::size_t j, bool value) {
    bits_[i * n_ + j] = value ? 1 : 0;
  }

  bool is_symmetric_with_unit_diagonal() const;
  // Symmetric, reflexive and transitive.
  bool is_equivalence() const;

  // Dense context index per sample (0, 1, ... in order of first
  // appearance). Throws InputError unless the mask is an equivalence.
  std::vector<std::size_t> components() const;

  friend bool operator==(const ContextMask&, const ContextMask&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace jrc
