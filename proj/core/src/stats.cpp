#include "jrc/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <limits>
#include <vector>

#include "jrc/error.hpp"

namespace jrc {

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (s.n == 0) return s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(s.n);
  if (s.n > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(s.n - 1));
  }
  return s;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("paired t-test needs samples of equal length");
  }
  TTestResult result;
  const std::size_t n = a.size();
  if (n < 2) {
    result.p_value = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const Summary s = summarize(diff);
  result.degrees_of_freedom = static_cast<double>(n - 1);
  if (s.stddev == 0.0) {
    result.t = s.mean == 0.0 ? 0.0
                             : std::copysign(std::numeric_limits<double>::infinity(), s.mean);
    result.p_value = s.mean == 0.0 ? 1.0 : 0.0;
    return result;
  }
  result.t = s.mean / (s.stddev / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(result.degrees_of_freedom);
  result.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t)));
  return result;
}

}  // namespace jrc
