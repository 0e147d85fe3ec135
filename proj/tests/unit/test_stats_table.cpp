#include <gtest/gtest.h>

#include <cmath>

#include "jrc/error.hpp"
#include "jrc/stats.hpp"
#include "jrc/table.hpp"

namespace jrc {
namespace {

TEST(Summarize, MeanAndSampleStddev) {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  const Summary s = summarize(v);
  EXPECT_EQ(s.n, 8u);
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.stddev, std::sqrt(32.0 / 7.0), 1e-14);
  EXPECT_EQ(summarize(std::vector<double>{}).n, 0u);
  EXPECT_EQ(summarize(std::vector<double>{3.0}).stddev, 0.0);
}

// Reference values from scipy.stats.ttest_rel.
TEST(PairedTTest, MatchesReference) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {0.5, 2.5, 2, 3, 4.5};
  const TTestResult r = paired_t_test(a, b);
  EXPECT_NEAR(r.t, 1.8257418583505538, 1e-12);
  EXPECT_EQ(r.degrees_of_freedom, 4.0);
  EXPECT_NEAR(r.p_value, 0.14192744777405542, 1e-10);

  const std::vector<double> c = {0.61, 0.62, 0.60, 0.63}, d = {0.60, 0.60, 0.59, 0.61};
  const TTestResult r2 = paired_t_test(c, d);
  EXPECT_NEAR(r2.t, 5.196152422706632, 1e-9);
  EXPECT_NEAR(r2.p_value, 0.013846832988859047, 1e-9);
}

TEST(PairedTTest, DegenerateCases) {
  EXPECT_TRUE(std::isnan(paired_t_test(std::vector<double>{1.0}, std::vector<double>{0.0}).p_value));
  const std::vector<double> a = {1, 2, 3}, b = {0, 1, 2};
  EXPECT_EQ(paired_t_test(a, b).p_value, 0.0);
  EXPECT_EQ(paired_t_test(a, a).p_value, 1.0);
  EXPECT_THROW(paired_t_test(a, std::vector<double>{1.0}), InputError);
}

TEST(Table, CsvAndText) {
  Table t({"name", "value"});
  t.add_row({"alpha", "1.000000"});
  t.add_row({"b", "22.5"});
  EXPECT_EQ(t.to_csv(), "name,value\nalpha,1.000000\nb,22.5\n");
  const std::string text = t.to_text();
  EXPECT_NE(text.find("alpha  1.000000"), std::string::npos) << text;
  EXPECT_THROW(t.add_row({"only"}), InputError);
}

TEST(Table, FormatFixed) {
  EXPECT_EQ(format_fixed(0.5), "0.500000");
  EXPECT_EQ(format_fixed(1.0 / 3.0, 3), "0.333");
  EXPECT_EQ(format_fixed(std::nan("")), "NA");
}

}  // namespace
}  // namespace jrc
