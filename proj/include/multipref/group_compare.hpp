#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multipref/random.hpp"

namespace multipref {

enum class Link { sigmoid };

Link link_from_string(std::string_view name);

/// Probability that one group is preferred given the reward margin.
double group_pref_prob(double margin, Link link = Link::sigmoid);

/// True iff sum(xs) > sum(ys); ties are false.
bool label_by_group_sum(std::span<const double> xs, std::span<const double> ys);

/// max(0, 1 - exp(-2 k delta^2 / width^2)).
double hoeffding_lower_bound(double delta, double range_width, std::size_t k);

// Bounded per-response quality distribution.
struct QualityDistribution {
  enum class Family { uniform, bernoulli_scaled, discrete };
  Family family = Family::uniform;
  double lo = 0.0;  // support bounds
  double hi = 1.0;
  double p = 0.5;                // bernoulli_scaled: P(value == hi)
  std::vector<double> values;    // discrete support
  std::vector<double> weights;

  static QualityDistribution uniform(double lo, double hi);
  static QualityDistribution bernoulli_scaled(double lo, double hi, double p);
  static QualityDistribution discrete(std::vector<double> values, std::vector<double> weights);
  static QualityDistribution parse(const std::string& text);  // "uniform:0.2,1.2", "bernoulli:0,1,0.7"

  void validate() const;
  double mean() const;
  double draw(Rng& rng) const;
};

// Width (b - a) of the range of Z = X - Y.
double difference_range_width(const QualityDistribution& x, const QualityDistribution& y);

struct LabelStudyResult {
  std::size_t k = 0;
  double empirical_accuracy = 0.0;
  double hoeffding_bound = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double range_width = 0.0;

  double standard_error() const;
};

LabelStudyResult empirical_correct_label_rate(const QualityDistribution& x, const QualityDistribution& y,
                                              std::size_t k, std::size_t trials, std::uint64_t seed);

void write_label_study_csv(std::ostream& out, std::span<const LabelStudyResult> rows);

}  // namespace multipref
