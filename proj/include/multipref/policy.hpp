#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "multipref/random.hpp"
#include "multipref/types.hpp"

namespace multipref {

inline constexpr std::size_t kDefaultVocabSize = 1016;

enum class PolicyKind { tabular, linear };

std::string_view to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

struct TokenWeight {
  Token token;
  double weight;
};

// Single-step categorical policy over an integer vocabulary with exact
// log-probabilities and parameter gradients. A multi-token response is scored
// as the sum of per-token log-probabilities under the prompt's distribution.
class Policy {
 public:
  virtual ~Policy() = default;

  virtual PolicyKind kind() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::span<const double> parameters() const = 0;
  virtual std::span<double> mutable_parameters() = 0;
  virtual std::unique_ptr<Policy> clone() const = 0;

  // Log-softmax over the full vocabulary. Throws ConfigError for prompts the
  // policy cannot evaluate.
  virtual std::vector<double> log_distribution(const IntervalPrompt& prompt) const = 0;

  // grad += sum_i w_i * d log pi(token_i | prompt) / d params, where
  // `log_dist` is this policy's log_distribution(prompt).
  virtual void accumulate_gradient(const IntervalPrompt& prompt, std::span<const double> log_dist,
                                   std::span<const TokenWeight> weights,
                                   std::span<double> grad) const = 0;

  std::size_t parameter_count() const { return parameters().size(); }

 protected:
  void check_prompt(const IntervalPrompt& prompt) const;
};

// One logit row per known prompt id.
class TabularPolicy final : public Policy {
 public:
  TabularPolicy(std::vector<std::int64_t> prompt_ids, std::size_t vocab_size = kDefaultVocabSize);
  TabularPolicy(std::vector<std::int64_t> prompt_ids, std::size_t vocab_size, std::vector<double> logits);

  PolicyKind kind() const override { return PolicyKind::tabular; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::span<const double> parameters() const override { return logits_; }
  std::span<double> mutable_parameters() override { return logits_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<TabularPolicy>(*this); }

  std::vector<double> log_distribution(const IntervalPrompt& prompt) const override;
  void accumulate_gradient(const IntervalPrompt& prompt, std::span<const double> log_dist,
                           std::span<const TokenWeight> weights, std::span<double> grad) const override;

  const std::vector<std::int64_t>& prompt_ids() const { return prompt_ids_; }
  bool knows(std::int64_t prompt_id) const { return row_index_.contains(prompt_id); }
  std::span<double> row(std::int64_t prompt_id);
  std::span<const double> row(std::int64_t prompt_id) const;

 private:
  std::size_t row_of(std::int64_t prompt_id) const;

  std::size_t vocab_size_;
  std::vector<std::int64_t> prompt_ids_;
  std::unordered_map<std::int64_t, std::size_t> row_index_;
  std::vector<double> logits_;
};

// Logit(prompt, token) = weights . features(prompt, token); one weight vector
// shared by every interval, so it can be evaluated on unseen prompts.
class LinearSoftmaxPolicy final : public Policy {
 public:
  static constexpr std::size_t kFeatureCount = 5;
  using Features = std::array<double, kFeatureCount>;

  explicit LinearSoftmaxPolicy(std::size_t vocab_size = kDefaultVocabSize);
  LinearSoftmaxPolicy(std::size_t vocab_size, std::vector<double> weights);

  // (in-interval, below, above, relative offset, squared relative offset).
  static Features features(const IntervalPrompt& prompt, Token token);

  PolicyKind kind() const override { return PolicyKind::linear; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::span<const double> parameters() const override { return weights_; }
  std::span<double> mutable_parameters() override { return weights_; }
  std::unique_ptr<Policy> clone() const override { return std::make_unique<LinearSoftmaxPolicy>(*this); }

  std::vector<double> log_distribution(const IntervalPrompt& prompt) const override;
  void accumulate_gradient(const IntervalPrompt& prompt, std::span<const double> log_dist,
                           std::span<const TokenWeight> weights, std::span<double> grad) const override;

 private:
  std::size_t vocab_size_;
  std::vector<double> weights_;
};

// Immutable copy of a policy, used as the reference model.
class PolicySnapshot {
 public:
  static PolicySnapshot capture(const Policy& source);

  const Policy& policy() const { return *policy_; }
  // Mutable copy for further training.
  std::unique_ptr<Policy> thaw() const { return policy_->clone(); }

 private:
  explicit PolicySnapshot(std::shared_ptr<const Policy> p) : policy_(std::move(p)) {}
  std::shared_ptr<const Policy> policy_;
};

double log_prob(const Policy& policy, const IntervalPrompt& prompt, const Response& response);
std::vector<double> grad_log_prob(const Policy& policy, const IntervalPrompt& prompt,
                                  const Response& response);
std::vector<double> predictive_distribution(const Policy& policy, const IntervalPrompt& prompt);
SampleGroup sample(const Policy& policy, const IntervalPrompt& prompt, Rng& rng, std::size_t count);

// Sum of log_dist over the response's tokens; validates token range.
double response_log_prob(std::span<const double> log_dist, const Response& response);

std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace multipref
