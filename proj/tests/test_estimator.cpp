#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "multipref/error.hpp"
#include "multipref/estimator.hpp"

using namespace multipref;

namespace {

// Exact expectation of `est` over all n-tuples from p and m-tuples from q.
double enumerate_expectation(const std::vector<double>& pv, const std::vector<double>& pw, std::size_t n,
                             const std::vector<double>& qv, const std::vector<double>& qw, std::size_t m,
                             const std::function<double(const std::vector<double>&, const std::vector<double>&)>& est) {
  double total = 0.0;
  std::vector<std::size_t> ip(n, 0), iq(m, 0);
  auto advance = [](std::vector<std::size_t>& idx, std::size_t base) {
    for (std::size_t& i : idx) {
      if (++i < base) return true;
      i = 0;
    }
    return false;
  };
  do {
    std::vector<double> xs(n);
    double wp = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = pv[ip[i]];
      wp *= pw[ip[i]];
    }
    std::fill(iq.begin(), iq.end(), 0);
    do {
      std::vector<double> ys(m);
      double wq = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        ys[j] = qv[iq[j]];
        wq *= qw[iq[j]];
      }
      total += wp * wq * est(xs, ys);
    } while (advance(iq, qv.size()));
  } while (advance(ip, pv.size()));
  return total;
}

double mean_of(const std::vector<double>& v, const std::vector<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * w[i];
  return s;
}

}  // namespace

TEST(SquaredDiff, TwoPointEnumeration) {
  const std::vector<double> pv{0.0, 2.0}, pw{0.5, 0.5}, qv{0.0}, qw{1.0};
  const double unbiased = enumerate_expectation(pv, pw, 2, qv, qw, 1, [](const auto& x, const auto& y) {
    return squared_diff_unbiased(x, y, 0.0).value;
  });
  const double naive = enumerate_expectation(pv, pw, 2, qv, qw, 1, [](const auto& x, const auto& y) {
    return squared_diff_naive(x, y, 0.0);
  });
  EXPECT_NEAR(unbiased, 1.0, 1e-15);
  EXPECT_NEAR(naive, 1.5, 1e-15);
}

TEST(SquaredDiff, UnbiasedOnRandomDiscreteDistributions) {
  Rng rng = make_rng(3, {});
  std::uniform_real_distribution<double> u(-2.0, 2.0), w(0.1, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pv(3), pw(3), qv(2), qw(2);
    for (double& x : pv) x = u(rng);
    for (double& x : qv) x = u(rng);
    for (double& x : pw) x = w(rng);
    for (double& x : qw) x = w(rng);
    const double sp = pw[0] + pw[1] + pw[2], sq = qw[0] + qw[1];
    for (double& x : pw) x /= sp;
    for (double& x : qw) x /= sq;
    const double c = u(rng);
    const double d = mean_of(pv, pw) - mean_of(qv, qw) - c;
    // Both sides need k >= 2: a single sample has no variance estimate.
    const std::size_t n = 2 + static_cast<std::size_t>(trial % 3), m = 2 + static_cast<std::size_t>(trial % 2);
    const double e = enumerate_expectation(pv, pw, n, qv, qw, m, [c](const auto& x, const auto& y) {
      return squared_diff_unbiased(x, y, c).value;
    });
    EXPECT_NEAR(e, d * d, 1e-12) << "trial " << trial;
  }
}

TEST(SquaredDiff, DegenerateSamples) {
  const std::vector<double> p{1.5, 1.5, 1.5}, q{0.5, 0.5};
  EXPECT_EQ(squared_diff_unbiased(p, q, 1.0).value, 0.0);
  EXPECT_EQ(squared_diff_unbiased(p, q, 0.0).value, 1.0);
  // Same multiset on both sides with c = 0: -(svar_p/n + svar_q/m).
  const std::vector<double> s{0.0, 2.0};
  EXPECT_NEAR(squared_diff_unbiased(s, s, 0.0).value, -2.0, 1e-15);
  EXPECT_THROW(squared_diff_unbiased(std::vector<double>{}, q, 0.0), ConfigError);
}

TEST(SquaredDiff, SingleSampleHasNoCorrection) {
  const std::vector<double> p{3.0}, q{1.0};
  const auto r = squared_diff_unbiased(p, q, 0.5);
  EXPECT_EQ(r.svar_p, 0.0);
  EXPECT_EQ(r.value, squared_diff_naive(p, q, 0.5));
  EXPECT_EQ(r.value, 2.25);
}

TEST(SquaredDiff, ExchangeableAndQuadraticInScale) {
  Rng rng = make_rng(4, {});
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> p(7), q(5);
  for (double& x : p) x = d(rng);
  for (double& x : q) x = d(rng);
  const double base = squared_diff_unbiased(p, q, 0.3).value;
  std::vector<double> pp = p, qq = q;
  std::shuffle(pp.begin(), pp.end(), rng);
  std::shuffle(qq.begin(), qq.end(), rng);
  EXPECT_NEAR(squared_diff_unbiased(pp, qq, 0.3).value, base, 1e-13);
  const double a = -2.5;
  for (double& x : pp) x *= a;
  for (double& x : qq) x *= a;
  EXPECT_NEAR(squared_diff_unbiased(pp, qq, 0.3 * a).value, a * a * base, 1e-12);
  // Shifting both samples and c together changes nothing.
  std::vector<double> ps = p, qs = q;
  for (double& x : ps) x += 4.0;
  for (double& x : qs) x += 1.0;
  EXPECT_NEAR(squared_diff_unbiased(ps, qs, 3.3).value, base, 1e-12);
}

TEST(Moments, ClosedForms) {
  const Transform sq = Transform::parse("square");
  const Moments u = transformed_moments(DistributionSpec::uniform(0.0, 2.0), sq);
  EXPECT_NEAR(u.mean, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(u.variance, 16.0 / 5.0 - 16.0 / 9.0, 1e-14);
  const Moments n = transformed_moments(DistributionSpec::normal(1.0, 2.0), Transform::parse("identity"));
  EXPECT_EQ(n.mean, 1.0);
  EXPECT_EQ(n.variance, 4.0);
  const Moments n2 = transformed_moments(DistributionSpec::normal(0.0, 1.0), sq);
  EXPECT_NEAR(n2.variance, 2.0, 1e-15);
  const Moments t = transformed_moments(DistributionSpec::parse("discrete:0,1,2,1"), Transform::parse("table:0,5,2,7"));
  EXPECT_EQ(t.mean, 6.0);
  EXPECT_EQ(t.variance, 1.0);
  EXPECT_THROW(transformed_moments(DistributionSpec::normal(0, 1), Transform::parse("table:0,1")), ConfigError);
}

TEST(Parsing, RejectsGarbage) {
  EXPECT_THROW(DistributionSpec::parse("uniform:2,1"), ConfigError);
  EXPECT_THROW(DistributionSpec::parse("gamma:1,1"), ConfigError);
  EXPECT_THROW(DistributionSpec::parse("normal:0,x"), ConfigError);
  EXPECT_THROW(Transform::parse("cube"), ConfigError);
  EXPECT_THROW(Transform::parse("table:1"), ConfigError);
  EXPECT_EQ(DistributionSpec::parse("point:3").a, 3.0);
}

TEST(BiasStudy, UnbiasedMeanAndNaiveOffset) {
  StudyConfig c;
  c.trials = 20000;
  c.sample_sizes = {2, 8, 32};
  const BiasStudy s = bias_study(c);
  const Moments mp = transformed_moments(c.p, c.f), mq = transformed_moments(c.q, c.f);
  EXPECT_NEAR(s.true_value, 1.0, 1e-15);  // E[X^2] = 4/3 vs 1/3
  for (const BiasRow& r : s.rows) {
    const double se = r.std_unbiased / std::sqrt(static_cast<double>(c.trials));
    EXPECT_LT(std::abs(r.mean_unbiased - s.true_value), 4.0 * se) << "k " << r.k;
    // E[naive] - truth = (sigma_p^2 + sigma_q^2) / k.
    const double offset = (mp.variance + mq.variance) / static_cast<double>(r.k);
    const double se_n = r.std_naive / std::sqrt(static_cast<double>(c.trials));
    EXPECT_LT(std::abs(r.mean_naive - s.true_value - offset), 4.0 * se_n + 1e-12) << "k " << r.k;
    EXPECT_LE(r.rmse_unbiased, r.rmse_naive * 1.5);
  }
}

TEST(BiasStudy, DeterministicForSeed) {
  StudyConfig c;
  c.trials = 500;
  std::ostringstream a, b;
  write_bias_csv(a, bias_study(c));
  write_bias_csv(b, bias_study(c));
  EXPECT_EQ(a.str(), b.str());
}

TEST(VarianceStudy, SlopeNearMinusOne) {
  StudyConfig c;
  c.trials = 4000;
  c.sample_sizes = {32, 64, 128, 256};
  const VarianceStudy s = variance_scaling_study(c);
  ASSERT_TRUE(s.slope.has_value());
  EXPECT_NEAR(*s.slope, -1.0, 0.15);
  for (const VarianceRow& r : s.rows) EXPECT_NEAR(r.empirical_var / r.predicted_full, 1.0, 0.2) << "k " << r.k;
}

TEST(VarianceStudy, SlopeUndefinedForPointMasses) {
  StudyConfig c;
  c.p = DistributionSpec::point(1.0);
  c.q = DistributionSpec::point(0.0);
  c.trials = 10;
  c.sample_sizes = {2, 4};
  EXPECT_FALSE(variance_scaling_study(c).slope.has_value());
}
