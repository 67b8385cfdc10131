#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "multipref/policy.hpp"
#include "multipref/types.hpp"

namespace multipref {

// Shannon entropy in nats, 0 ln 0 = 0. Input must be a probability vector.
double entropy(std::span<const double> dist);

// KL(dist || uniform over support_size) = ln(support_size) - entropy(dist).
double kl_to_uniform(std::span<const double> dist, std::size_t support_size);

enum class SupportMode { full_vocab, interval_restricted };

SupportMode support_mode_from_string(std::string_view name);

// Predictive distribution, optionally restricted to [lo, hi] and renormalized.
std::vector<double> prompt_distribution(const Policy& policy, const IntervalPrompt& prompt, SupportMode support);

// Mass the policy puts outside [lo, hi].
double out_of_interval_mass(const Policy& policy, const IntervalPrompt& prompt);

struct WinRateReport {
  std::size_t wins = 0;
  std::size_t losses = 0;
  std::size_t ties = 0;
  double win_rate = 0.0;  // wins / (wins + losses + ties)
};

// Per prompt, `a` wins if its entropy is strictly larger than `b`'s.
WinRateReport entropy_win_rate(const Policy& a, const Policy& b, std::span<const IntervalPrompt> prompts,
                               SupportMode support = SupportMode::interval_restricted);

struct CategoryCounts {
  std::vector<std::uint64_t> counts;
};

double simpson_index(const CategoryCounts& counts);

double distinct_n(std::span<const std::vector<Token>> texts, std::size_t n);
// Whitespace-tokenized texts; each distinct word is one token.
double distinct_n(std::span<const std::string> texts, std::size_t n);

}  // namespace multipref
