#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <string>

#include "multipref/error.hpp"
#include "multipref/metrics.hpp"

using namespace multipref;

TEST(Entropy, Examples) {
  const std::vector<double> uniform(8, 0.125);
  EXPECT_NEAR(entropy(uniform), std::log(8.0), 1e-15);
  EXPECT_EQ(entropy(std::vector<double>{1.0, 0.0, 0.0}), 0.0);
  EXPECT_NEAR(entropy(std::vector<double>{0.5, 0.25, 0.25}), 1.5 * std::log(2.0), 1e-15);
  EXPECT_THROW(entropy(std::vector<double>{0.5, 0.6}), ConfigError);
  EXPECT_THROW(entropy(std::vector<double>{}), ConfigError);
}

TEST(KlToUniform, Examples) {
  EXPECT_NEAR(kl_to_uniform(std::vector<double>(5, 0.2), 5), 0.0, 1e-15);
  EXPECT_NEAR(kl_to_uniform(std::vector<double>{1.0, 0.0, 0.0, 0.0}, 4), std::log(4.0), 1e-15);
  // Shorter vector padded with zeros up to the support.
  EXPECT_NEAR(kl_to_uniform(std::vector<double>{0.5, 0.5}, 4), std::log(2.0), 1e-15);
  EXPECT_THROW(kl_to_uniform(std::vector<double>(5, 0.2), 4), ConfigError);
}

TEST(PromptDistribution, RestrictionAndOutsideMass) {
  std::vector<double> logits(10, 0.0);
  logits[2] = std::log(3.0);
  TabularPolicy pi({0}, 10, logits);
  const IntervalPrompt p{0, 2, 4};
  const auto full = prompt_distribution(pi, p, SupportMode::full_vocab);
  EXPECT_EQ(full.size(), 10u);
  const auto inside = prompt_distribution(pi, p, SupportMode::interval_restricted);
  ASSERT_EQ(inside.size(), 3u);
  EXPECT_NEAR(inside[0], 0.6, 1e-15);
  EXPECT_NEAR(std::accumulate(inside.begin(), inside.end(), 0.0), 1.0, 1e-15);
  EXPECT_NEAR(out_of_interval_mass(pi, p), 7.0 / 12.0, 1e-15);
  EXPECT_EQ(support_mode_from_string("full-vocab"), SupportMode::full_vocab);
  EXPECT_THROW(support_mode_from_string("all"), ConfigError);
}

TEST(WinRate, TiesAndWins) {
  TabularPolicy flat({0, 1, 2}, 6);
  std::vector<double> logits(18, 0.0);
  logits[6 + 1] = 2.0;  // prompt 1 peaked
  TabularPolicy peaked({0, 1, 2}, 6, logits);
  const std::vector<IntervalPrompt> prompts{{0, 0, 5}, {1, 0, 5}, {2, 0, 5}};
  const auto same = entropy_win_rate(flat, flat, prompts);
  EXPECT_EQ(same.ties, 3u);
  EXPECT_EQ(same.win_rate, 0.0);
  const auto r = entropy_win_rate(flat, peaked, prompts);
  EXPECT_EQ(r.wins, 1u);
  EXPECT_EQ(r.ties, 2u);
  EXPECT_NEAR(r.win_rate, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(entropy_win_rate(peaked, flat, prompts).losses, 1u);
}

TEST(Simpson, Examples) {
  EXPECT_EQ(simpson_index({{5}}), 0.0);
  EXPECT_EQ(simpson_index({{1, 1}}), 0.5);
  EXPECT_EQ(simpson_index({{1, 1, 1, 1}}), 0.75);
  EXPECT_EQ(simpson_index({{2, 0, 2}}), 0.5);
  EXPECT_THROW(simpson_index({{0, 0}}), ConfigError);
}

TEST(DistinctN, Examples) {
  const std::vector<std::string> texts{"a a b"};
  EXPECT_NEAR(distinct_n(texts, 1), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(distinct_n(texts, 2), 1.0);
  const std::vector<std::vector<Token>> toks{{1, 2, 1, 2}, {1, 2}};
  EXPECT_NEAR(distinct_n(toks, 2), 2.0 / 4.0, 1e-15);
  EXPECT_THROW(distinct_n(texts, 0), ConfigError);
}
