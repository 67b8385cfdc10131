#include "multipref/estimator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

#include "multipref/csv.hpp"
#include "multipref/error.hpp"

namespace multipref {

namespace {

struct SampleStats {
  double mean = 0.0;
  double svar = 0.0;
};

SampleStats stats_of(std::span<const double> xs, const char* name) {
  if (xs.empty()) throw ConfigError(std::string(name) + " must be non-empty");
  double sum = 0.0;
  for (double x : xs) sum += x;
  SampleStats s;
  s.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.svar = ss / static_cast<double>(xs.size() - 1);
  }
  return s;
}

std::vector<double> parse_numbers(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "' in '" + text + "'");
    }
  }
  return out;
}

// Raw moments E[X^j], j = 1..4.
std::array<double, 5> raw_moments(const DistributionSpec& d) {
  std::array<double, 5> m{1.0, 0.0, 0.0, 0.0, 0.0};
  switch (d.family) {
    case DistributionSpec::Family::uniform: {
      if (d.a == d.b) {
        for (int j = 1; j <= 4; ++j) m[j] = std::pow(d.a, j);
        break;
      }
      for (int j = 1; j <= 4; ++j) {
        m[j] = (std::pow(d.b, j + 1) - std::pow(d.a, j + 1)) / ((j + 1) * (d.b - d.a));
      }
      break;
    }
    case DistributionSpec::Family::normal: {
      const double mu = d.a;
      const double s2 = d.b * d.b;
      m[1] = mu;
      m[2] = mu * mu + s2;
      m[3] = mu * mu * mu + 3.0 * mu * s2;
      m[4] = std::pow(mu, 4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2;
      break;
    }
    case DistributionSpec::Family::point:
      for (int j = 1; j <= 4; ++j) m[j] = std::pow(d.a, j);
      break;
    case DistributionSpec::Family::discrete: {
      double total = 0.0;
      for (double w : d.weights) total += w;
      for (std::size_t i = 0; i < d.values.size(); ++i) {
        const double p = d.weights[i] / total;
        for (int j = 1; j <= 4; ++j) m[j] += p * std::pow(d.values[i], j);
      }
      break;
    }
  }
  return m;
}

}  // namespace

EstimatorResult squared_diff_unbiased(std::span<const double> samples_p, std::span<const double> samples_q,
                                      double c) {
  const SampleStats p = stats_of(samples_p, "samples_p");
  const SampleStats q = stats_of(samples_q, "samples_q");
  EstimatorResult r;
  r.mean_p = p.mean;
  r.mean_q = q.mean;
  r.svar_p = p.svar;
  r.svar_q = q.svar;
  r.n = samples_p.size();
  r.m = samples_q.size();
  const double d = p.mean - q.mean - c;
  r.value = d * d - p.svar / static_cast<double>(r.n) - q.svar / static_cast<double>(r.m);
  return r;
}

double squared_diff_naive(std::span<const double> samples_p, std::span<const double> samples_q, double c) {
  const double d = stats_of(samples_p, "samples_p").mean - stats_of(samples_q, "samples_q").mean - c;
  return d * d;
}

DistributionSpec DistributionSpec::uniform(double lo, double hi) {
  DistributionSpec d;
  d.family = Family::uniform;
  d.a = lo;
  d.b = hi;
  return d;
}

DistributionSpec DistributionSpec::normal(double mean, double stddev) {
  DistributionSpec d;
  d.family = Family::normal;
  d.a = mean;
  d.b = stddev;
  return d;
}

DistributionSpec DistributionSpec::point(double value) {
  DistributionSpec d;
  d.family = Family::point;
  d.a = value;
  d.b = value;
  return d;
}

DistributionSpec DistributionSpec::discrete(std::vector<double> values, std::vector<double> weights) {
  DistributionSpec d;
  d.family = Family::discrete;
  d.values = std::move(values);
  d.weights = std::move(weights);
  return d;
}

DistributionSpec DistributionSpec::parse(const std::string& text) {
  const auto colon = text.find(':');
  const std::string family = text.substr(0, colon);
  const std::vector<double> args =
      colon == std::string::npos ? std::vector<double>{} : parse_numbers(text.substr(colon + 1));
  DistributionSpec d;
  if (family == "uniform" && args.size() == 2) {
    d = uniform(args[0], args[1]);
  } else if (family == "normal" && args.size() == 2) {
    d = normal(args[0], args[1]);
  } else if (family == "point" && args.size() == 1) {
    d = point(args[0]);
  } else if (family == "discrete" && !args.empty() && args.size() % 2 == 0) {
    // discrete:v1,w1,v2,w2,...
    std::vector<double> values, weights;
    for (std::size_t i = 0; i < args.size(); i += 2) {
      values.push_back(args[i]);
      weights.push_back(args[i + 1]);
    }
    d = discrete(std::move(values), std::move(weights));
  } else {
    throw ConfigError("unknown distribution '" + text + "'");
  }
  d.validate();
  return d;
}

void DistributionSpec::validate() const {
  switch (family) {
    case Family::uniform:
      if (!(a <= b)) throw ConfigError("uniform distribution needs lo <= hi");
      break;
    case Family::normal:
      if (!(b >= 0.0)) throw ConfigError("normal distribution needs stddev >= 0");
      break;
    case Family::point:
      break;
    case Family::discrete: {
      if (values.empty() || values.size() != weights.size()) {
        throw ConfigError("discrete distribution needs matching non-empty values and weights");
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

double DistributionSpec::draw(Rng& rng) const {
  switch (family) {
    case Family::uniform:
      if (a == b) return a;
      return std::uniform_real_distribution<double>(a, b)(rng);
    case Family::normal:
      if (b == 0.0) return a;
      return std::normal_distribution<double>(a, b)(rng);
    case Family::point:
      return a;
    case Family::discrete:
      return values[std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng)];
  }
  return a;
}

Transform Transform::parse(const std::string& name) {
  Transform f;
  if (name == "identity") {
    f.kind = Kind::identity;
  } else if (name == "square") {
    f.kind = Kind::square;
  } else if (name.rfind("table:", 0) == 0) {
    // table:x1,y1,x2,y2,...
    const std::vector<double> args = parse_numbers(name.substr(6));
    if (args.empty() || args.size() % 2 != 0) throw ConfigError("table transform needs x,y pairs");
    f.kind = Kind::table;
    for (std::size_t i = 0; i < args.size(); i += 2) {
      f.inputs.push_back(args[i]);
      f.outputs.push_back(args[i + 1]);
    }
  } else {
    throw ConfigError("unknown transform '" + name + "'");
  }
  return f;
}

double Transform::apply(double x) const {
  switch (kind) {
    case Kind::identity:
      return x;
    case Kind::square:
      return x * x;
    case Kind::table:
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i] == x) return outputs[i];
      }
      throw ConfigError("table transform undefined at " + csv::format(x));
  }
  return x;
}

Moments transformed_moments(const DistributionSpec& dist, const Transform& f) {
  dist.validate();
  Moments out;
  if (f.kind == Transform::Kind::table) {
    if (dist.family == DistributionSpec::Family::point) {
      out.mean = f.apply(dist.a);
      return out;
    }
    if (dist.family != DistributionSpec::Family::discrete) {
      throw ConfigError("table transform requires a discrete or point distribution");
    }
    double total = 0.0;
    for (double w : dist.weights) total += w;
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
      const double p = dist.weights[i] / total;
      const double y = f.apply(dist.values[i]);
      m1 += p * y;
      m2 += p * y * y;
    }
    out.mean = m1;
    out.variance = std::max(0.0, m2 - m1 * m1);
    return out;
  }
  const auto m = raw_moments(dist);
  if (f.kind == Transform::Kind::identity) {
    out.mean = m[1];
    out.variance = m[2] - m[1] * m[1];
  } else {
    out.mean = m[2];
    out.variance = m[4] - m[2] * m[2];
  }
  out.variance = std::max(0.0, out.variance);
  if (dist.family == DistributionSpec::Family::point) out.variance = 0.0;
  return out;
}

void StudyConfig::validate() const {
  p.validate();
  q.validate();
  if (trials < 1) throw ConfigError("trials must be >= 1");
  if (sample_sizes.empty()) throw ConfigError("sample_sizes must be non-empty");
  for (std::size_t k : sample_sizes) {
    if (k < 1) throw ConfigError("every sample size must be >= 1");
  }
  transformed_moments(p, f);
  transformed_moments(q, f);
}

std::vector<double> draw_transformed(const DistributionSpec& dist, const Transform& f, std::size_t n, Rng& rng) {
  std::vector<double> out(n);
  for (double& x : out) x = f.apply(dist.draw(rng));
  return out;
}

namespace {

constexpr std::uint64_t kBiasStream = 0;
constexpr std::uint64_t kVarianceStream = 1;

}  // namespace

BiasStudy bias_study(const StudyConfig& config) {
  config.validate();
  const Moments mp = transformed_moments(config.p, config.f);
  const Moments mq = transformed_moments(config.q, config.f);
  const double d = mp.mean - mq.mean - config.c;
  BiasStudy study;
  study.true_value = d * d;
  const double trials = static_cast<double>(config.trials);
  for (std::size_t k : config.sample_sizes) {
    double sum_u = 0.0, sum_n = 0.0, se_u = 0.0, se_n = 0.0, sq_u = 0.0, sq_n = 0.0;
    for (std::size_t t = 0; t < config.trials; ++t) {
      Rng rng = make_rng(config.seed, {kBiasStream, k, t});
      const auto xp = draw_transformed(config.p, config.f, k, rng);
      const auto xq = draw_transformed(config.q, config.f, k, rng);
      const double u = squared_diff_unbiased(xp, xq, config.c).value;
      const double n = squared_diff_naive(xp, xq, config.c);
      sum_u += u;
      sum_n += n;
      sq_u += u * u;
      sq_n += n * n;
      se_u += (u - study.true_value) * (u - study.true_value);
      se_n += (n - study.true_value) * (n - study.true_value);
    }
    BiasRow row;
    row.k = k;
    row.mean_unbiased = sum_u / trials;
    row.mean_naive = sum_n / trials;
    row.rmse_unbiased = std::sqrt(se_u / trials);
    row.rmse_naive = std::sqrt(se_n / trials);
    if (config.trials > 1) {
      row.std_unbiased = std::sqrt(std::max(0.0, (sq_u - trials * row.mean_unbiased * row.mean_unbiased) / (trials - 1)));
      row.std_naive = std::sqrt(std::max(0.0, (sq_n - trials * row.mean_naive * row.mean_naive) / (trials - 1)));
    }
    study.rows.push_back(row);
  }
  return study;
}

VarianceStudy variance_scaling_study(const StudyConfig& config) {
  config.validate();
  const Moments mp = transformed_moments(config.p, config.f);
  const Moments mq = transformed_moments(config.q, config.f);
  const double d = mp.mean - mq.mean - config.c;
  VarianceStudy study;
  for (std::size_t k : config.sample_sizes) {
    double sum = 0.0, sum_sq = 0.0;
    // Sums are shifted by the first value to limit cancellation.
    double shift = 0.0;
    for (std::size_t t = 0; t < config.trials; ++t) {
      Rng rng = make_rng(config.seed, {kVarianceStream, k, t});
      const auto xp = draw_transformed(config.p, config.f, k, rng);
      const auto xq = draw_transformed(config.q, config.f, k, rng);
      const double u = squared_diff_unbiased(xp, xq, config.c).value;
      if (t == 0) shift = u;
      sum += u - shift;
      sum_sq += (u - shift) * (u - shift);
    }
    const double n = static_cast<double>(config.trials);
    VarianceRow row;
    row.k = k;
    row.empirical_var = config.trials > 1 ? std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0)) : 0.0;
    const double kk = static_cast<double>(k);
    const double s = mp.variance / kk + mq.variance / kk;
    row.predicted_leading_term = 4.0 * s * d * d;
    row.predicted_full = row.predicted_leading_term + 2.0 * s * s;
    if (k > 1) {
      row.predicted_full += 2.0 * mp.variance * mp.variance / (kk * (kk - 1.0)) +
                            2.0 * mq.variance * mq.variance / (kk * (kk - 1.0));
    }
    study.rows.push_back(row);
  }

  // Least squares on (log k, log var); undefined if any variance vanishes.
  bool defined = study.rows.size() >= 2;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const VarianceRow& r : study.rows) {
    if (!(r.empirical_var > 0.0)) {
      defined = false;
      break;
    }
    const double x = std::log(static_cast<double>(r.k));
    const double y = std::log(r.empirical_var);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(study.rows.size());
  const double denom = n * sxx - sx * sx;
  if (defined && denom > 0.0) study.slope = (n * sxy - sx * sy) / denom;
  return study;
}

void write_bias_csv(std::ostream& out, const BiasStudy& study) {
  csv::row(out, "k", "rmse_naive", "rmse_unbiased", "mean_naive", "mean_unbiased");
  for (const BiasRow& r : study.rows) csv::row(out, r.k, r.rmse_naive, r.rmse_unbiased, r.mean_naive, r.mean_unbiased);
}

void write_variance_csv(std::ostream& out, const VarianceStudy& study) {
  csv::row(out, "k", "empirical_var", "predicted_leading_term");
  for (const VarianceRow& r : study.rows) csv::row(out, r.k, r.empirical_var, r.predicted_leading_term);
}

}  // namespace multipref
