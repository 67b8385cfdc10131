#include "multipref/group_compare.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "multipref/csv.hpp"
#include "multipref/error.hpp"
#include "multipref/objectives.hpp"

namespace multipref {

Link link_from_string(std::string_view name) {
  if (name == "sigmoid") return Link::sigmoid;
  throw ConfigError("unknown link '" + std::string(name) + "'");
}

double group_pref_prob(double margin, Link link) {
  switch (link) {
    case Link::sigmoid:
      return sigmoid(margin);
  }
  throw ConfigError("unknown link");
}

bool label_by_group_sum(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw ConfigError("group sizes differ: " + std::to_string(xs.size()) + " vs " + std::to_string(ys.size()));
  }
  if (xs.empty()) throw ConfigError("groups must be non-empty");
  double sx = 0.0, sy = 0.0;
  for (double x : xs) sx += x;
  for (double y : ys) sy += y;
  return sx > sy;
}

double hoeffding_lower_bound(double delta, double range_width, std::size_t k) {
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(range_width > 0.0)) throw ConfigError("range width must be positive");
  if (k < 1) throw ConfigError("k must be >= 1");
  const double kk = static_cast<double>(k);
  return std::max(0.0, -std::expm1(-2.0 * kk * delta * delta / (range_width * range_width)));
}

QualityDistribution QualityDistribution::uniform(double lo, double hi) {
  QualityDistribution d;
  d.family = Family::uniform;
  d.lo = lo;
  d.hi = hi;
  return d;
}

QualityDistribution QualityDistribution::bernoulli_scaled(double lo, double hi, double p) {
  QualityDistribution d;
  d.family = Family::bernoulli_scaled;
  d.lo = lo;
  d.hi = hi;
  d.p = p;
  return d;
}

QualityDistribution QualityDistribution::discrete(std::vector<double> values, std::vector<double> weights) {
  QualityDistribution d;
  d.family = Family::discrete;
  if (!values.empty()) {
    d.lo = *std::min_element(values.begin(), values.end());
    d.hi = *std::max_element(values.begin(), values.end());
  }
  d.values = std::move(values);
  d.weights = std::move(weights);
  return d;
}

QualityDistribution QualityDistribution::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + item + "' in '" + text + "'");
      }
    }
  }
  QualityDistribution d;
  if (family == "uniform" && args.size() == 2) {
    d = uniform(args[0], args[1]);
  } else if (family == "bernoulli" && args.size() == 3) {
    d = bernoulli_scaled(args[0], args[1], args[2]);
  } else if (family == "discrete" && !args.empty() && args.size() % 2 == 0) {
    std::vector<double> values, weights;
    for (std::size_t i = 0; i < args.size(); i += 2) {
      values.push_back(args[i]);
      weights.push_back(args[i + 1]);
    }
    d = discrete(std::move(values), std::move(weights));
  } else {
    throw ConfigError("unknown quality distribution '" + text + "'");
  }
  d.validate();
  return d;
}

void QualityDistribution::validate() const {
  switch (family) {
    case Family::uniform:
      if (!(lo < hi)) throw ConfigError("quality bounds need lo < hi");
      break;
    case Family::bernoulli_scaled:
      if (!(lo < hi)) throw ConfigError("quality bounds need lo < hi");
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("bernoulli p must lie in [0, 1]");
      break;
    case Family::discrete: {
      if (values.empty() || values.size() != weights.size()) {
        throw ConfigError("discrete quality needs matching non-empty values and weights");
      }
      double total = 0.0;
      for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("discrete weights must be non-negative");
        total += w;
      }
      if (!(total > 0.0)) throw ConfigError("discrete weights must not all be zero");
      break;
    }
  }
}

double QualityDistribution::mean() const {
  switch (family) {
    case Family::uniform:
      return 0.5 * (lo + hi);
    case Family::bernoulli_scaled:
      return lo + p * (hi - lo);
    case Family::discrete: {
      double total = 0.0, acc = 0.0;
      for (std::size_t i = 0; i < values.size(); ++i) {
        total += weights[i];
        acc += weights[i] * values[i];
      }
      return acc / total;
    }
  }
  return 0.0;
}

double QualityDistribution::draw(Rng& rng) const {
  switch (family) {
    case Family::uniform:
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    case Family::bernoulli_scaled:
      return std::bernoulli_distribution(p)(rng) ? hi : lo;
    case Family::discrete:
      return values[std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng)];
  }
  return lo;
}

double difference_range_width(const QualityDistribution& x, const QualityDistribution& y) {
  return (x.hi - y.lo) - (x.lo - y.hi);
}

double LabelStudyResult::standard_error() const {
  if (trials == 0) return 0.0;
  return std::sqrt(empirical_accuracy * (1.0 - empirical_accuracy) / static_cast<double>(trials));
}

LabelStudyResult empirical_correct_label_rate(const QualityDistribution& x, const QualityDistribution& y,
                                              std::size_t k, std::size_t trials, std::uint64_t seed) {
  x.validate();
  y.validate();
  if (k < 1) throw ConfigError("k must be >= 1");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  const double delta = x.mean() - y.mean();
  if (!(delta > 0.0)) throw ConfigError("E[X] must exceed E[Y]");

  LabelStudyResult result;
  result.k = k;
  result.trials = trials;
  result.seed = seed;
  result.range_width = difference_range_width(x, y);
  result.hoeffding_bound = hoeffding_lower_bound(delta, result.range_width, k);

  std::vector<double> xs(k), ys(k);
  std::size_t correct = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng = make_rng(seed, {k, t});
    for (double& v : xs) v = x.draw(rng);
    for (double& v : ys) v = y.draw(rng);
    if (label_by_group_sum(xs, ys)) ++correct;
  }
  result.empirical_accuracy = static_cast<double>(correct) / static_cast<double>(trials);
  return result;
}

void write_label_study_csv(std::ostream& out, std::span<const LabelStudyResult> rows) {
  csv::row(out, "k", "empirical_accuracy", "hoeffding_bound", "trials", "seed");
  for (const LabelStudyResult& r : rows) csv::row(out, r.k, r.empirical_accuracy, r.hoeffding_bound, r.trials, r.seed);
}

}  // namespace multipref
