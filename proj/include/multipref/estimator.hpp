#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "multipref/random.hpp"

namespace multipref {

// Variance-corrected estimate of (E_p f - E_q f - c)^2 from finite samples.
struct EstimatorResult {
  double value = 0.0;
  double mean_p = 0.0;
  double mean_q = 0.0;
  double svar_p = 0.0;  // unbiased sample variance, 0 when n == 1
  double svar_q = 0.0;
  std::size_t n = 0;
  std::size_t m = 0;
};

EstimatorResult squared_diff_unbiased(std::span<const double> samples_p, std::span<const double> samples_q,
                                      double c);
double squared_diff_naive(std::span<const double> samples_p, std::span<const double> samples_q, double c);

// A scalar distribution with closed-form moments of f(X).
struct DistributionSpec {
  enum class Family { uniform, normal, point, discrete };
  Family family = Family::uniform;
  // uniform: [a, b]; normal: mean a, stddev b; point: value a.
  double a = 0.0;
  double b = 1.0;
  // discrete: support values and (unnormalized) weights.
  std::vector<double> values;
  std::vector<double> weights;

  static DistributionSpec uniform(double lo, double hi);
  static DistributionSpec normal(double mean, double stddev);
  static DistributionSpec point(double value);
  static DistributionSpec discrete(std::vector<double> values, std::vector<double> weights);
  static DistributionSpec parse(const std::string& text);  // "uniform:0,2", "normal:0,1", "point:3"

  void validate() const;
  double draw(Rng& rng) const;
};

// f applied to each draw before estimation.
struct Transform {
  enum class Kind { identity, square, table };
  Kind kind = Kind::square;
  // table: f(values[i]) = outputs[i]; only defined on the listed inputs.
  std::vector<double> inputs;
  std::vector<double> outputs;

  static Transform parse(const std::string& name);
  double apply(double x) const;
};

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

// Closed-form E[f(X)] and Var[f(X)]. Throws ConfigError for combinations
// without a closed form (normal with a table transform, table on a
// continuous family).
Moments transformed_moments(const DistributionSpec& dist, const Transform& f);

struct StudyConfig {
  DistributionSpec p = DistributionSpec::uniform(0.0, 2.0);
  DistributionSpec q = DistributionSpec::uniform(-1.0, 1.0);
  Transform f;
  double c = 0.0;
  std::vector<std::size_t> sample_sizes{2, 4, 8, 16, 32, 64};
  std::size_t trials = 100000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BiasRow {
  std::size_t k = 0;
  double rmse_naive = 0.0;
  double rmse_unbiased = 0.0;
  double mean_naive = 0.0;
  double mean_unbiased = 0.0;
  double std_unbiased = 0.0;  // empirical stddev of the unbiased estimate
  double std_naive = 0.0;
};

struct BiasStudy {
  double true_value = 0.0;
  std::vector<BiasRow> rows;
};

struct VarianceRow {
  std::size_t k = 0;
  double empirical_var = 0.0;
  double predicted_leading_term = 0.0;  // 4 (sp^2/k + sq^2/k) (mu_p - mu_q - c)^2
  double predicted_full = 0.0;          // leading + second-order terms of the exact expansion
};

struct VarianceStudy {
  std::vector<VarianceRow> rows;
  std::optional<double> slope;  // least-squares slope of log var vs log k
};

BiasStudy bias_study(const StudyConfig& config);
VarianceStudy variance_scaling_study(const StudyConfig& config);

// Draws n samples of f(X) from `dist` for (seed, k, trial).
std::vector<double> draw_transformed(const DistributionSpec& dist, const Transform& f, std::size_t n, Rng& rng);

void write_bias_csv(std::ostream& out, const BiasStudy& study);
void write_variance_csv(std::ostream& out, const VarianceStudy& study);

}  // namespace multipref
