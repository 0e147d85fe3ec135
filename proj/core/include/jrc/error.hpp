#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jrc {

// Every error raised by the library carries one of these categories. The CLI
// maps them onto process exit codes.
enum class ErrorCategory {
  kConfig = 2,
  kData = 3,
  kTraining = 4,
  kInput = 5,
  kUndefinedMetric = 6,
  kStream = 7,
};

const char* to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(ErrorCategory::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what)
      : Error(ErrorCategory::kData, what) {}
};

class TrainingError : public Error {
 public:
  explicit TrainingError(const std::string& what)
      : Error(ErrorCategory::kTraining, what) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what)
      : Error(ErrorCategory::kInput, what) {}
};

class StreamError : public Error {
 public:
  explicit StreamError(const std::string& what)
      : Error(ErrorCategory::kStream, what) {}
};

// A metric that has no value on the given predictions (single-class labels,
// no positives, ...). `excluded_count` is metric-specific; GAUC stores the
// number of users it had to drop.
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what,
                                std::size_t excluded_count = 0)
      : Error(ErrorCategory::kUndefinedMetric, what),
        excluded_count_(excluded_count) {}

  std::size_t excluded_count() const noexcept { return excluded_count_; }

 private:
  std::size_t excluded_count_;
};

inline const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kConfig:
      return "configuration error";
    case ErrorCategory::kData:
      return "data error";
    case ErrorCategory::kTraining:
      return "training error";
    case ErrorCategory::kInput:
      return "input error";
    case ErrorCategory::kUndefinedMetric:
      return "undefined metric";
    case ErrorCategory::kStream:
      return "stream error";
  }
  return "error";
}

}  // namespace jrc
