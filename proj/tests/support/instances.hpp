#pragma once

// Random (policy, reference, record, config) instances and a central
// finite-difference oracle, shared by the unit tests and the acceptance run.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "multipref/objectives.hpp"
#include "multipref/policy.hpp"
#include "multipref/random.hpp"

namespace multipref::fixtures {

struct Instance {
  std::unique_ptr<Policy> policy;
  PolicySnapshot ref;
  PreferenceRecord record;
  std::vector<SftExample> sft;
  ObjectiveConfig config;
};

inline std::vector<double> normal_vector(std::size_t n, double scale, Rng& rng) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline std::unique_ptr<Policy> random_policy(bool linear, std::size_t vocab, const std::vector<std::int64_t>& ids,
                                             Rng& rng) {
  if (linear) return std::make_unique<LinearSoftmaxPolicy>(vocab, normal_vector(5, 1.0, rng));
  return std::make_unique<TabularPolicy>(ids, vocab, normal_vector(ids.size() * vocab, 1.0, rng));
}

inline Response random_response(std::size_t vocab, Rng& rng) {
  std::uniform_int_distribution<int> len(1, 3);
  std::uniform_int_distribution<Token> tok(0, static_cast<Token>(vocab) - 1);
  Response r;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) r.tokens.push_back(tok(rng));
  return r;
}

// Random instance; `single` forces one response per side.
inline Instance random_instance(std::uint64_t seed, bool single) {
  Rng rng = make_rng(seed, {0x7e5});
  const std::size_t vocab = std::uniform_int_distribution<std::size_t>(4, 12)(rng);
  const std::vector<std::int64_t> ids{3, 11, 42};
  const bool linear = std::bernoulli_distribution(0.3)(rng);
  Instance inst{random_policy(linear, vocab, ids, rng), PolicySnapshot::capture(*random_policy(linear, vocab, ids, rng)),
                {}, {}, {}};
  IntervalPrompt p;
  p.id = ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)];
  p.lo = std::uniform_int_distribution<Token>(0, static_cast<Token>(vocab) - 2)(rng);
  p.hi = std::uniform_int_distribution<Token>(p.lo, static_cast<Token>(vocab) - 1)(rng);
  inst.record.prompt = p;
  std::uniform_int_distribution<std::size_t> k(1, 5);
  const std::size_t kw = single ? 1 : k(rng);
  const std::size_t kl = single ? 1 : k(rng);
  for (std::size_t i = 0; i < kw; ++i) inst.record.chosen.responses.push_back(random_response(vocab, rng));
  for (std::size_t i = 0; i < kl; ++i) inst.record.rejected.responses.push_back(random_response(vocab, rng));
  for (int i = 0; i < 4; ++i) {
    IntervalPrompt q = p;
    q.id = ids[static_cast<std::size_t>(i) % ids.size()];
    inst.sft.push_back({q, random_response(vocab, rng), std::uniform_real_distribution<double>(0.1, 2.0)(rng)});
  }
  // Large enough margins that neither loss is locally flat.
  inst.config.beta = std::uniform_real_distribution<double>(0.05, 2.0)(rng);
  inst.config.tau = std::uniform_real_distribution<double>(0.1, 2.0)(rng);
  inst.config.nll_coeff = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  return inst;
}

// Central differences of `f` around the policy's parameters.
inline std::vector<double> numeric_gradient(Policy& policy, const std::function<double()>& f, double h = 1e-5) {
  std::span<double> params = policy.mutable_parameters();
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + h;
    const double up = f();
    params[i] = saved - h;
    const double down = f();
    params[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||, 1e-4). The floor keeps flat instances (an
// exactly-zero analytic gradient against ~1e-10 of rounding noise) from
// reading as 100% error.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max(std::sqrt(std::max(na, nb)), 1e-4);
}

}  // namespace multipref::fixtures
