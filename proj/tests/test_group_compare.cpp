#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "multipref/error.hpp"
#include "multipref/group_compare.hpp"

using namespace multipref;

TEST(GroupPrefProb, Sigmoid) {
  EXPECT_NEAR(group_pref_prob(std::log(3.0)), 0.75, 1e-15);
  EXPECT_EQ(group_pref_prob(0.0), 0.5);
  for (double m : {-3.0, -0.2, 0.7, 5.0}) EXPECT_NEAR(group_pref_prob(m) + group_pref_prob(-m), 1.0, 1e-15);
  EXPECT_GT(group_pref_prob(800.0), 0.999);
  EXPECT_THROW(link_from_string("probit"), ConfigError);
}

TEST(LabelByGroupSum, Examples) {
  EXPECT_TRUE(label_by_group_sum(std::vector<double>{1.0, 2.0}, std::vector<double>{1.5, 1.0}));
  EXPECT_FALSE(label_by_group_sum(std::vector<double>{1.0, 1.0}, std::vector<double>{0.5, 1.5}));
  EXPECT_FALSE(label_by_group_sum(std::vector<double>{0.0}, std::vector<double>{0.1}));
}

TEST(Hoeffding, ClosedFormAndMonotone) {
  EXPECT_NEAR(hoeffding_lower_bound(1.0, 1.0, 2), 1.0 - std::exp(-4.0), 1e-15);
  EXPECT_NEAR(hoeffding_lower_bound(0.2, 2.0, 1), 1.0 - std::exp(-0.02), 1e-15);
  double prev = 0.0;
  for (std::size_t k = 1; k <= 64; k *= 2) {
    const double b = hoeffding_lower_bound(0.1, 2.0, k);
    EXPECT_GT(b, prev);
    EXPECT_LT(b, 1.0);
    prev = b;
  }
  EXPECT_THROW(hoeffding_lower_bound(0.0, 1.0, 1), ConfigError);
  EXPECT_THROW(hoeffding_lower_bound(0.1, 1.0, 0), ConfigError);
}

TEST(QualityDistribution, MeansAndRange) {
  const auto x = QualityDistribution::uniform(0.2, 1.2);
  const auto y = QualityDistribution::uniform(0.0, 1.0);
  EXPECT_NEAR(x.mean(), 0.7, 1e-15);
  EXPECT_NEAR(difference_range_width(x, y), 2.0, 1e-15);
  EXPECT_NEAR(QualityDistribution::bernoulli_scaled(0.0, 2.0, 0.25).mean(), 0.5, 1e-15);
  EXPECT_NEAR(QualityDistribution::parse("bernoulli:0,1,0.7").mean(), 0.7, 1e-15);
  EXPECT_THROW(QualityDistribution::parse("uniform:1,0"), ConfigError);
}

TEST(LabelStudy, AccuracyAboveBoundAndGrowsWithK) {
  const auto x = QualityDistribution::uniform(0.2, 1.2);
  const auto y = QualityDistribution::uniform(0.0, 1.0);
  double prev = 0.0;
  for (std::size_t k : {1, 4, 16, 64}) {
    const auto r = empirical_correct_label_rate(x, y, k, 20000, 7);
    EXPECT_GE(r.empirical_accuracy, r.hoeffding_bound - 3.0 * r.standard_error()) << "k " << k;
    EXPECT_GT(r.empirical_accuracy, prev) << "k " << k;
    prev = r.empirical_accuracy;
  }
  EXPECT_GT(prev, 0.95);
}

TEST(LabelStudy, SingleSampleUniformShiftExact) {
  // P(X > Y) for X ~ U[0.2,1.2], Y ~ U[0,1] is 1 - 0.8^2/2 = 0.68.
  const auto r = empirical_correct_label_rate(QualityDistribution::uniform(0.2, 1.2),
                                              QualityDistribution::uniform(0.0, 1.0), 1, 100000, 3);
  EXPECT_NEAR(r.empirical_accuracy, 0.68, 4.0 * r.standard_error());
}

TEST(LabelStudy, DeterministicAndRejectsBadInput) {
  const auto x = QualityDistribution::bernoulli_scaled(0.0, 1.0, 0.7);
  const auto y = QualityDistribution::bernoulli_scaled(0.0, 1.0, 0.4);
  const auto a = empirical_correct_label_rate(x, y, 8, 1000, 11);
  const auto b = empirical_correct_label_rate(x, y, 8, 1000, 11);
  EXPECT_EQ(a.empirical_accuracy, b.empirical_accuracy);
  EXPECT_THROW(empirical_correct_label_rate(x, y, 0, 10, 1), ConfigError);
  EXPECT_THROW(empirical_correct_label_rate(x, y, 1, 0, 1), ConfigError);
  // Reversed means leave no positive margin for the bound.
  EXPECT_THROW(empirical_correct_label_rate(y, x, 1, 10, 1), ConfigError);
}
