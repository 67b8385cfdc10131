#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "multipref/error.hpp"
#include "multipref/experiments.hpp"

using namespace multipref;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("multipref_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RngDatasetConfig small_data(std::size_t records, std::size_t k) {
  RngDatasetConfig c;
  c.records = records;
  c.k = k;
  c.seed = 5;
  return c;
}

PreferenceRunConfig small_run(Method method) {
  PreferenceRunConfig run = default_run_config(method);
  run.train.steps = 30;
  run.sft.steps = 40;
  return run;
}

}  // namespace

TEST(Dataset, ChosenInIntervalRejectedOnBiasToken) {
  const auto records = build_rng_dataset(small_data(200, 5));
  ASSERT_EQ(records.size(), 200u);
  for (const auto& r : records) {
    EXPECT_GE(r.prompt.hi - r.prompt.lo, 5);
    EXPECT_LE(r.prompt.hi - r.prompt.lo, 10);
    EXPECT_EQ(r.chosen.size(), 5u);
    for (const auto& y : r.chosen.responses) EXPECT_TRUE(r.prompt.contains(y.tokens[0]));
    for (const auto& y : r.rejected.responses) EXPECT_EQ(y.tokens[0], bias_token(r.prompt));
  }
}

TEST(Dataset, UniformGroupFrequencies) {
  Rng rng = make_rng(1, {});
  const IntervalPrompt p{0, 10, 19};
  std::map<Token, int> counts;
  for (const auto& y : uniform_group(p, 100000, rng).responses) ++counts[y.tokens[0]];
  ASSERT_EQ(counts.size(), 10u);
  // Binomial(1e5, 0.1): sd about 95.
  for (const auto& [tok, c] : counts) EXPECT_NEAR(c, 10000, 500) << tok;
}

TEST(Dataset, TestSplitIntervals) {
  RngDatasetConfig c = small_data(300, 1);
  c.test_split = true;
  for (const auto& p : sample_rng_prompts(c)) {
    EXPECT_LT(p.lo, p.hi);
    EXPECT_LE(p.hi, 1000);
  }
}

TEST(Dataset, JsonlRoundTrip) {
  RngDatasetConfig c = small_data(50, 3);
  c.rejected_family = RejectedFamily::mixture;
  const auto records = build_rng_dataset(c);
  std::stringstream s;
  write_jsonl(s, records);
  EXPECT_EQ(read_jsonl(s), records);
}

TEST(Dataset, ValidationErrors) {
  RngDatasetConfig c = small_data(0, 1);
  EXPECT_THROW(build_rng_dataset(c), ConfigError);
  c = small_data(1, 0);
  EXPECT_THROW(build_rng_dataset(c), ConfigError);
  c = small_data(1, 1);
  c.a_max = 1010;
  EXPECT_THROW(build_rng_dataset(c), ConfigError);
  std::stringstream bad("{\"prompt\": {\"id\": 0, \"lo\": 3, \"hi\": 1}, \"chosen\": [[1]], \"rejected\": [[2]]}\n");
  EXPECT_THROW(read_jsonl(bad), ConfigError);
  std::stringstream garbage("not json\n");
  EXPECT_THROW(read_jsonl(garbage), ConfigError);
  const auto records = build_rng_dataset(small_data(3, 2));
  EXPECT_THROW(slice_groups(records, 3), ConfigError);
  EXPECT_EQ(slice_groups(records, 1)[0].chosen.size(), 1u);
}

TEST(BiasedSft, SkewOneCollapses) {
  const std::vector<IntervalPrompt> prompts{{0, 100, 109}, {1, 3, 10}};
  SftOptions o;
  o.skew = 1.0;
  o.steps = 500;
  o.learning_rate = 0.1;
  const auto sft = make_biased_sft_policy(prompts, o);
  for (const auto& p : prompts) {
    const auto d = prompt_distribution(sft.policy(), p, SupportMode::interval_restricted);
    EXPECT_LT(entropy(d), 0.1);
  }
}

TEST(BiasedSft, UniformTargetReachesMaxEntropy) {
  const std::vector<IntervalPrompt> prompts{{0, 100, 109}, {1, 3, 10}};
  SftOptions o;
  o.uniform_target = true;
  o.steps = 500;
  const auto sft = make_biased_sft_policy(prompts, o);
  for (const auto& p : prompts) {
    const auto d = prompt_distribution(sft.policy(), p, SupportMode::interval_restricted);
    EXPECT_NEAR(entropy(d), std::log(static_cast<double>(p.width())), 0.05);
  }
}

TEST(BiasedSft, ModalTokenIsBiasToken) {
  const std::vector<IntervalPrompt> prompts = sample_rng_prompts(small_data(50, 1));
  const auto sft = make_biased_sft_policy(prompts, SftOptions{});
  std::size_t modal = 0;
  for (const auto& p : prompts) {
    const auto d = predictive_distribution(sft.policy(), p);
    const auto best = std::max_element(d.begin(), d.end()) - d.begin();
    if (best == bias_token(p)) ++modal;
  }
  EXPECT_GE(modal, 48u);
  EXPECT_THROW(make_biased_sft_policy(std::vector<IntervalPrompt>{}, SftOptions{}), ConfigError);
}

TEST(Pipeline, SmallRunIsDeterministic) {
  const auto train_records = build_rng_dataset(small_data(40, 3));
  const auto sft = make_biased_sft_policy(prompts_of(train_records), small_run(Method::mdpo).sft);
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  PreferenceRunConfig run = small_run(Method::mdpo);
  run.out_dir = a;
  const auto ra = run_rng_pipeline(train_records, {}, sft, run);
  run.out_dir = b;
  const auto rb = run_rng_pipeline(train_records, {}, sft, run);
  EXPECT_EQ(ra.report.metric("mean_kl_trained_train"), rb.report.metric("mean_kl_trained_train"));
  for (const auto& entry : fs::directory_iterator(a)) {
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path().filename();
  }
  EXPECT_LT(ra.report.metric("mean_kl_trained_train"), ra.report.metric("mean_kl_sft_train"));
}

TEST(Pipeline, SingleSampleMethodsCollapse) {
  const auto records = slice_groups(build_rng_dataset(small_data(40, 3)), 1);
  const auto sft = make_biased_sft_policy(prompts_of(records), small_run(Method::mdpo).sft);
  const std::pair<Method, Method> pairs[] = {{Method::dpo, Method::mdpo}, {Method::ipo, Method::mipo}};
  for (const auto& [single, multi] : pairs) {
    PreferenceRunConfig rs = small_run(single), rm = small_run(multi);
    rs.out_dir = scratch("collapse_s");
    rm.out_dir = scratch("collapse_m");
    run_rng_pipeline(records, {}, sft, rs);
    run_rng_pipeline(records, {}, sft, rm);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(rs.out_dir)) {
      if (entry.path().filename() == "config.csv") continue;
      EXPECT_EQ(slurp(entry.path()), slurp(rm.out_dir / entry.path().filename())) << entry.path().filename();
      ++compared;
    }
    EXPECT_GE(compared, 4u);
  }
}

TEST(Iterative, SmallRunRecordsEveryRound) {
  IterativeConfig c;
  c.rounds = 2;
  c.data = small_data(30, 3);
  c.run = small_run(Method::mdpo);
  c.out_dir = scratch("iter");
  const auto r = run_iterative_experiment(c);
  ASSERT_EQ(r.mean_kl.size(), 3u);
  EXPECT_EQ(r.histories.size(), 2u);
  EXPECT_TRUE(fs::exists(c.out_dir / "rounds.csv"));
  EXPECT_LT(r.mean_kl[1], r.mean_kl[0]);
  c.rounds = 1;
  EXPECT_THROW(run_iterative_experiment(c), ConfigError);
}

TEST(Noise, QualityScoreAndSignTest) {
  const IntervalPrompt p{0, 10, 14};
  const SampleGroup g = group_of_tokens({10, 10, 12, 20, 13});
  EXPECT_NEAR(response_quality(p, g, 0), -0.25, 1e-15);
  EXPECT_EQ(response_quality(p, g, 2), 0.0);
  EXPECT_EQ(response_quality(p, g, 3), -1.0);
  EXPECT_EQ(response_quality(p, group_of_tokens({11}), 0), 0.0);
  EXPECT_NEAR(sign_test_p_value(5, 5), 1.0 / 32.0, 1e-15);
  EXPECT_NEAR(sign_test_p_value(0, 5), 1.0, 1e-12);
  EXPECT_NEAR(sign_test_p_value(4, 5), 6.0 / 32.0, 1e-15);
}

TEST(Simulations, EstimatorAndCompareWriteFiles) {
  EstimatorExperimentConfig e;
  e.bias.trials = 200;
  e.variance.trials = 200;
  e.variance.sample_sizes = {8, 16};
  e.out_dir = scratch("est");
  const auto er = run_estimator_experiment(e);
  EXPECT_TRUE(fs::exists(e.out_dir / "bias_study.csv"));
  EXPECT_TRUE(fs::exists(e.out_dir / "variance_study.csv"));
  EXPECT_EQ(er.report.metric("true_value"), 1.0);
  CompareExperimentConfig c;
  c.trials = 500;
  c.out_dir = scratch("cmp");
  const auto cr = run_compare_experiment(c);
  EXPECT_EQ(cr.rows.size(), c.ks.size());
  EXPECT_TRUE(fs::exists(c.out_dir / "compare.csv"));
  EXPECT_THROW(er.report.metric("missing"), ConfigError);
}
