#include "multipref/policy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multipref/error.hpp"

namespace multipref {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::tabular:
      return "tabular";
    case PolicyKind::linear:
      return "linear";
  }
  return "unknown";
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max_logit);
  const double log_norm = max_logit + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "tabular") return PolicyKind::tabular;
  if (name == "linear") return PolicyKind::linear;
  throw ConfigError("unknown policy kind '" + std::string(name) + "'");
}

void Policy::check_prompt(const IntervalPrompt& prompt) const {
  if (prompt.lo < 0 || prompt.lo > prompt.hi || static_cast<std::size_t>(prompt.hi) >= vocab_size()) {
    throw ConfigError("invalid interval [" + std::to_string(prompt.lo) + ", " + std::to_string(prompt.hi) +
                      "] for vocab size " + std::to_string(vocab_size()));
  }
}

// ---------------------------------------------------------------------------
// TabularPolicy

TabularPolicy::TabularPolicy(std::vector<std::int64_t> prompt_ids, std::size_t vocab_size)
    : TabularPolicy(prompt_ids, vocab_size, std::vector<double>(prompt_ids.size() * vocab_size, 0.0)) {}

TabularPolicy::TabularPolicy(std::vector<std::int64_t> prompt_ids, std::size_t vocab_size,
                             std::vector<double> logits)
    : vocab_size_(vocab_size), prompt_ids_(std::move(prompt_ids)), logits_(std::move(logits)) {
  if (vocab_size_ == 0) throw ConfigError("vocab_size must be positive");
  if (logits_.size() != prompt_ids_.size() * vocab_size_) {
    throw ConfigError("tabular logits size " + std::to_string(logits_.size()) + " != prompts x vocab " +
                      std::to_string(prompt_ids_.size() * vocab_size_));
  }
  row_index_.reserve(prompt_ids_.size());
  for (std::size_t r = 0; r < prompt_ids_.size(); ++r) {
    if (!row_index_.emplace(prompt_ids_[r], r).second) {
      throw ConfigError("duplicate prompt id " + std::to_string(prompt_ids_[r]));
    }
  }
}

std::size_t TabularPolicy::row_of(std::int64_t prompt_id) const {
  auto it = row_index_.find(prompt_id);
  if (it == row_index_.end()) throw ConfigError("unknown prompt " + std::to_string(prompt_id));
  return it->second;
}

std::span<double> TabularPolicy::row(std::int64_t prompt_id) {
  return std::span<double>(logits_).subspan(row_of(prompt_id) * vocab_size_, vocab_size_);
}

std::span<const double> TabularPolicy::row(std::int64_t prompt_id) const {
  return std::span<const double>(logits_).subspan(row_of(prompt_id) * vocab_size_, vocab_size_);
}

std::vector<double> TabularPolicy::log_distribution(const IntervalPrompt& prompt) const {
  check_prompt(prompt);
  return log_softmax(row(prompt.id));
}

void TabularPolicy::accumulate_gradient(const IntervalPrompt& prompt, std::span<const double> log_dist,
                                        std::span<const TokenWeight> weights, std::span<double> grad) const {
  const std::size_t offset = row_of(prompt.id) * vocab_size_;
  double total = 0.0;
  for (const TokenWeight& tw : weights) {
    grad[offset + static_cast<std::size_t>(tw.token)] += tw.weight;
    total += tw.weight;
  }
  if (total == 0.0) return;
  for (std::size_t t = 0; t < vocab_size_; ++t) grad[offset + t] -= total * std::exp(log_dist[t]);
}

// ---------------------------------------------------------------------------
// LinearSoftmaxPolicy

LinearSoftmaxPolicy::LinearSoftmaxPolicy(std::size_t vocab_size)
    : LinearSoftmaxPolicy(vocab_size, std::vector<double>(kFeatureCount, 0.0)) {}

LinearSoftmaxPolicy::LinearSoftmaxPolicy(std::size_t vocab_size, std::vector<double> weights)
    : vocab_size_(vocab_size), weights_(std::move(weights)) {
  if (vocab_size_ == 0) throw ConfigError("vocab_size must be positive");
  if (weights_.size() != kFeatureCount) {
    throw ConfigError("linear policy expects " + std::to_string(kFeatureCount) + " weights, got " +
                      std::to_string(weights_.size()));
  }
}

LinearSoftmaxPolicy::Features LinearSoftmaxPolicy::features(const IntervalPrompt& prompt, Token token) {
  Features f{};
  if (prompt.contains(token)) {
    f[0] = 1.0;
    if (prompt.hi > prompt.lo) {
      const double offset = static_cast<double>(token - prompt.lo) / static_cast<double>(prompt.hi - prompt.lo);
      f[3] = offset;
      f[4] = offset * offset;
    }
  } else if (token < prompt.lo) {
    f[1] = 1.0;
  } else {
    f[2] = 1.0;
  }
  return f;
}

std::vector<double> LinearSoftmaxPolicy::log_distribution(const IntervalPrompt& prompt) const {
  check_prompt(prompt);
  std::vector<double> logits(vocab_size_);
  for (std::size_t t = 0; t < vocab_size_; ++t) {
    const Features f = features(prompt, static_cast<Token>(t));
    double z = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) z += weights_[j] * f[j];
    logits[t] = z;
  }
  return log_softmax(logits);
}

void LinearSoftmaxPolicy::accumulate_gradient(const IntervalPrompt& prompt, std::span<const double> log_dist,
                                              std::span<const TokenWeight> weights,
                                              std::span<double> grad) const {
  double total = 0.0;
  for (const TokenWeight& tw : weights) {
    const Features f = features(prompt, tw.token);
    for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] += tw.weight * f[j];
    total += tw.weight;
  }
  if (total == 0.0) return;
  Features expected{};
  for (std::size_t t = 0; t < vocab_size_; ++t) {
    const double p = std::exp(log_dist[t]);
    const Features f = features(prompt, static_cast<Token>(t));
    for (std::size_t j = 0; j < kFeatureCount; ++j) expected[j] += p * f[j];
  }
  for (std::size_t j = 0; j < kFeatureCount; ++j) grad[j] -= total * expected[j];
}

// ---------------------------------------------------------------------------

PolicySnapshot PolicySnapshot::capture(const Policy& source) {
  return PolicySnapshot(std::shared_ptr<const Policy>(source.clone()));
}

double response_log_prob(std::span<const double> log_dist, const Response& response) {
  if (response.tokens.empty()) throw ConfigError("response must contain at least one token");
  double total = 0.0;
  for (Token t : response.tokens) {
    if (t < 0 || static_cast<std::size_t>(t) >= log_dist.size()) {
      throw ConfigError("token " + std::to_string(t) + " outside vocab of size " + std::to_string(log_dist.size()));
    }
    total += log_dist[static_cast<std::size_t>(t)];
  }
  return total;
}

double log_prob(const Policy& policy, const IntervalPrompt& prompt, const Response& response) {
  return response_log_prob(policy.log_distribution(prompt), response);
}

std::vector<double> grad_log_prob(const Policy& policy, const IntervalPrompt& prompt, const Response& response) {
  const std::vector<double> log_dist = policy.log_distribution(prompt);
  response_log_prob(log_dist, response);
  std::vector<TokenWeight> weights;
  weights.reserve(response.tokens.size());
  for (Token t : response.tokens) weights.push_back({t, 1.0});
  std::vector<double> grad(policy.parameter_count(), 0.0);
  policy.accumulate_gradient(prompt, log_dist, weights, grad);
  return grad;
}

std::vector<double> predictive_distribution(const Policy& policy, const IntervalPrompt& prompt) {
  std::vector<double> dist = policy.log_distribution(prompt);
  for (double& v : dist) v = std::exp(v);
  return dist;
}

SampleGroup sample(const Policy& policy, const IntervalPrompt& prompt, Rng& rng, std::size_t count) {
  if (count == 0) throw ConfigError("sample count must be positive");
  const std::vector<double> dist = predictive_distribution(policy, prompt);
  std::discrete_distribution<Token> draw(dist.begin(), dist.end());
  SampleGroup group;
  group.responses.reserve(count);
  for (std::size_t i = 0; i < count; ++i) group.responses.push_back(single_token(draw(rng)));
  return group;
}

}  // namespace multipref
