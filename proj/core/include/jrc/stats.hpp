#pragma once

#include <cstddef>
#include <span>

namespace jrc {

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  std::size_t n = 0;
};

Summary summarize(std::span<const double> values);

struct TTestResult {
  double t = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;  // two-sided
};

// Paired two-sided t-test on a[i] - b[i]. With fewer than two pairs the
// p-value is NaN; with identical differences it is 0 (non-zero mean) or 1.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace jrc
