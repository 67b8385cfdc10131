#include "multipref/metrics.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "multipref/error.hpp"

namespace multipref {

namespace {

void check_distribution(std::span<const double> dist) {
  if (dist.empty()) throw ConfigError("distribution must be non-empty");
  double total = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0)) throw ConfigError("distribution has a negative or NaN entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("distribution does not sum to 1");
}

}  // namespace

double entropy(std::span<const double> dist) {
  check_distribution(dist);
  double h = 0.0;
  for (double p : dist) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double kl_to_uniform(std::span<const double> dist, std::size_t support_size) {
  if (support_size < dist.size()) throw ConfigError("support smaller than distribution length");
  return std::log(static_cast<double>(support_size)) - entropy(dist);
}

SupportMode support_mode_from_string(std::string_view name) {
  if (name == "full-vocab") return SupportMode::full_vocab;
  if (name == "interval-restricted") return SupportMode::interval_restricted;
  throw ConfigError("unknown support mode '" + std::string(name) + "'");
}

std::vector<double> prompt_distribution(const Policy& policy, const IntervalPrompt& prompt, SupportMode support) {
  std::vector<double> dist = predictive_distribution(policy, prompt);
  if (support == SupportMode::full_vocab) return dist;
  std::vector<double> restricted(dist.begin() + prompt.lo, dist.begin() + prompt.hi + 1);
  double total = 0.0;
  for (double p : restricted) total += p;
  for (double& p : restricted) p /= total;
  return restricted;
}

double out_of_interval_mass(const Policy& policy, const IntervalPrompt& prompt) {
  const std::vector<double> dist = predictive_distribution(policy, prompt);
  double inside = 0.0;
  for (Token t = prompt.lo; t <= prompt.hi; ++t) inside += dist[static_cast<std::size_t>(t)];
  return std::max(0.0, 1.0 - inside);
}

WinRateReport entropy_win_rate(const Policy& a, const Policy& b, std::span<const IntervalPrompt> prompts,
                               SupportMode support) {
  WinRateReport report;
  for (const IntervalPrompt& prompt : prompts) {
    const double ha = entropy(prompt_distribution(a, prompt, support));
    const double hb = entropy(prompt_distribution(b, prompt, support));
    if (ha > hb) {
      ++report.wins;
    } else if (ha < hb) {
      ++report.losses;
    } else {
      ++report.ties;
    }
  }
  if (!prompts.empty()) report.win_rate = static_cast<double>(report.wins) / static_cast<double>(prompts.size());
  return report;
}

double simpson_index(const CategoryCounts& counts) {
  std::uint64_t total = 0;
  for (std::uint64_t c : counts.counts) total += c;
  if (total == 0) throw ConfigError("simpson index needs at least one observation");
  // Integer numerator keeps exact ratios exact.
  std::uint64_t sum_sq = 0;
  for (std::uint64_t c : counts.counts) sum_sq += c * c;
  return 1.0 - static_cast<double>(sum_sq) / (static_cast<double>(total) * static_cast<double>(total));
}

double distinct_n(std::span<const std::vector<Token>> texts, std::size_t n) {
  if (n < 1) throw ConfigError("n must be >= 1");
  std::set<std::vector<Token>> seen;
  std::size_t total = 0;
  for (const auto& text : texts) {
    if (text.size() < n) continue;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      seen.emplace(text.begin() + static_cast<std::ptrdiff_t>(i), text.begin() + static_cast<std::ptrdiff_t>(i + n));
      ++total;
    }
  }
  if (total == 0) throw ConfigError("no n-grams available");
  return static_cast<double>(seen.size()) / static_cast<double>(total);
}

double distinct_n(std::span<const std::string> texts, std::size_t n) {
  std::map<std::string, Token> vocab;
  std::vector<std::vector<Token>> tokenized;
  for (const std::string& text : texts) {
    std::istringstream words(text);
    std::vector<Token> tokens;
    for (std::string w; words >> w;) tokens.push_back(vocab.emplace(w, static_cast<Token>(vocab.size())).first->second);
    tokenized.push_back(std::move(tokens));
  }
  return distinct_n(std::span<const std::vector<Token>>(tokenized), n);
}

}  // namespace multipref
