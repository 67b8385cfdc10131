#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "multipref/dataset.hpp"
#include "multipref/estimator.hpp"
#include "multipref/group_compare.hpp"
#include "multipref/metrics.hpp"
#include "multipref/policy.hpp"
#include "multipref/trainer.hpp"

namespace multipref {

struct ExperimentReport {
  std::string name;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::pair<std::string, double>> metrics;
  std::vector<std::filesystem::path> files;

  double metric(std::string_view key) const;
  void add(std::string key, double value) { metrics.emplace_back(std::move(key), value); }
  void echo(std::string key, std::string value) { config.emplace_back(std::move(key), std::move(value)); }
};

void write_report_csv(const std::filesystem::path& path, const ExperimentReport& report);

// ---------------------------------------------------------------------------
// Biased starting policy

struct SftOptions {
  double skew = 0.6;  // mass on bias_token(prompt); the rest is uniform on the interval
  bool uniform_target = false;
  int steps = 200;
  double learning_rate = 0.1;
  int batch_size = 0;  // 0 trains on the full example set every step
  std::uint64_t seed = 0;
  std::size_t vocab_size = kDefaultVocabSize;
  PolicyKind policy = PolicyKind::tabular;
};

// One weighted example per interval token; weights equal the target
// probabilities, so the SFT loss is the exact expected NLL.
std::vector<SftExample> biased_sft_examples(std::span<const IntervalPrompt> prompts, const SftOptions& options);

// Trains a fresh zero-parameter policy on the biased examples. The
// result is both the SFT baseline and the reference policy.
PolicySnapshot make_biased_sft_policy(std::span<const IntervalPrompt> prompts, const SftOptions& options);

// ---------------------------------------------------------------------------
// Random-number experiment

struct PreferenceRunConfig {
  Method method = Method::mdpo;
  TrainConfig train;
  SftOptions sft;
  std::filesystem::path out_dir;  // empty: no files
  bool write_policies = true;
};

// Desk-scale defaults for one preference method, with the method's
// objective defaults (beta, tau, NLL anchor). Tabular policies train with
// SGD, linear ones with Adam.
PreferenceRunConfig default_run_config(Method method, PolicyKind policy = PolicyKind::tabular);

struct RngRunResult {
  ExperimentReport report;
  PolicySnapshot sft;
  PolicySnapshot trained;
  TrainHistory history;
};

double mean_kl_to_uniform(const Policy& policy, std::span<const IntervalPrompt> prompts);
double mean_out_of_interval_mass(const Policy& policy, std::span<const IntervalPrompt> prompts);

// SFT snapshot -> preference training -> entropy win rates and KL to uniform.
RngRunResult run_rng_pipeline(std::span<const PreferenceRecord> train_records,
                              std::span<const PreferenceRecord> test_records, const PolicySnapshot& sft,
                              const PreferenceRunConfig& config);

// Reads the JSONL datasets, builds the biased SFT policy over all of their
// prompts, then runs the pipeline. `test_path` may be empty.
RngRunResult run_rng_experiment(const std::filesystem::path& train_path, const std::filesystem::path& test_path,
                                const PreferenceRunConfig& config);

// ---------------------------------------------------------------------------
// Estimator and group-comparison simulations

struct EstimatorExperimentConfig {
  StudyConfig bias;
  StudyConfig variance;
  std::filesystem::path out_dir;

  EstimatorExperimentConfig();
};

struct EstimatorExperimentResult {
  ExperimentReport report;
  BiasStudy bias;
  VarianceStudy variance;
};

EstimatorExperimentResult run_estimator_experiment(const EstimatorExperimentConfig& config);

struct CompareExperimentConfig {
  QualityDistribution x = QualityDistribution::uniform(0.2, 1.2);
  QualityDistribution y = QualityDistribution::uniform(0.0, 1.0);
  std::vector<std::size_t> ks{1, 2, 4, 8, 16, 32};
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

struct CompareExperimentResult {
  ExperimentReport report;
  std::vector<LabelStudyResult> rows;
};

CompareExperimentResult run_compare_experiment(const CompareExperimentConfig& config);

// ---------------------------------------------------------------------------
// Label-noise robustness

// Per-response quality inside its group: minus the number of other group
// members with the same token, over (k - 1); -1 extra outside [lo, hi]. The
// group sum is minus the collision count, an unbiased proxy for the group
// histogram's squared distance to uniform. A single response carries no
// information (score 0 inside the interval), so singleton labels are decided
// by the labeler noise.
double response_quality(const IntervalPrompt& prompt, const SampleGroup& group, std::size_t index);

struct NoiseExperimentConfig {
  RngDatasetConfig data;  // prompts (records, seed overwritten per replica) and k
  double label_noise = 0.3;  // half-width of the uniform labeler noise
  bool noise_free = false;   // label by true expected quality instead
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  PreferenceRunConfig single;  // trained on the first response of each side
  PreferenceRunConfig multi;   // trained on the full groups
  std::filesystem::path out_dir;

  NoiseExperimentConfig();
};

struct NoiseSeedResult {
  std::uint64_t seed = 0;
  double label_accuracy_single = 0.0;
  double label_accuracy_multi = 0.0;
  double kl_sft = 0.0;
  double kl_single = 0.0;
  double kl_multi = 0.0;
  double win_rate_multi_vs_single = 0.0;  // entropy win rate on training prompts
};

struct NoiseExperimentResult {
  ExperimentReport report;
  std::vector<NoiseSeedResult> seeds;
  std::size_t multi_wins = 0;  // seeds with kl_multi <= kl_single
  double sign_test_p = 1.0;    // one-sided
};

// Builds records whose chosen side is decided by label_by_group_sum over
// noisy per-response quality scores, then trains the single-sample method on
// k=1 slices and the multi-sample method on the groups.
NoiseExperimentResult run_noise_robustness_experiment(const NoiseExperimentConfig& config);

// P(Binomial(n, 1/2) >= successes).
double sign_test_p_value(std::size_t successes, std::size_t n);

// ---------------------------------------------------------------------------
// Iterative rounds

struct IterativeConfig {
  int rounds = 3;
  RngDatasetConfig data;
  PreferenceRunConfig run;
  std::filesystem::path out_dir;

  IterativeConfig();
};

struct IterativeResult {
  ExperimentReport report;
  std::vector<double> mean_kl;  // index 0: SFT, index r: after round r
  std::vector<TrainHistory> histories;
  std::optional<PolicySnapshot> final_policy;
};

// Round 1 trains on the dataset as built; round r > 1 draws rejected groups
// from round r-1's policy, fresh uniform chosen groups, and re-snapshots the
// reference.
IterativeResult run_iterative_experiment(const IterativeConfig& config);

}  // namespace multipref
