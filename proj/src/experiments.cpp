#include "multipref/experiments.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "multipref/csv.hpp"
#include "multipref/error.hpp"
#include "multipref/policy_io.hpp"

namespace multipref {

namespace fs = std::filesystem;

double ExperimentReport::metric(std::string_view key) const {
  for (const auto& [k, v] : metrics) {
    if (k == key) return v;
  }
  throw ConfigError("report " + name + " has no metric '" + std::string(key) + "'");
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void prepare_dir(const fs::path& dir) {
  if (!dir.empty()) fs::create_directories(dir);
}

void write_config_csv(const fs::path& path, const ExperimentReport& report) {
  auto out = open_output(path);
  csv::row(out, "key", "value");
  csv::row(out, "experiment", report.name);
  for (const auto& [k, v] : report.config) csv::row(out, k, v);
}

void echo_train(ExperimentReport& report, const std::string& prefix, const TrainConfig& t) {
  report.echo(prefix + "optimizer", std::string(to_string(t.optimizer)));
  report.echo(prefix + "learning_rate", csv::format(t.learning_rate));
  report.echo(prefix + "steps", std::to_string(t.steps));
  report.echo(prefix + "batch_size", std::to_string(t.batch_size));
  report.echo(prefix + "seed", std::to_string(t.seed));
  report.echo(prefix + "beta", csv::format(t.objective_config.beta));
  report.echo(prefix + "tau", csv::format(t.objective_config.tau));
  report.echo(prefix + "nll_coeff", csv::format(t.objective_config.nll_coeff));
  report.echo(prefix + "variance_correction", t.objective_config.variance_correction ? "true" : "false");
}

void echo_sft(ExperimentReport& report, const SftOptions& s) {
  report.echo("sft.skew", s.uniform_target ? "uniform" : csv::format(s.skew));
  report.echo("sft.steps", std::to_string(s.steps));
  report.echo("sft.learning_rate", csv::format(s.learning_rate));
  report.echo("sft.batch_size", std::to_string(s.batch_size));
  report.echo("sft.seed", std::to_string(s.seed));
  report.echo("policy", std::string(to_string(s.policy)));
}

std::vector<IntervalPrompt> unique_prompts(std::span<const PreferenceRecord> a, std::span<const PreferenceRecord> b) {
  std::vector<IntervalPrompt> out;
  std::map<std::int64_t, IntervalPrompt> seen;
  for (auto records : {a, b}) {
    for (const PreferenceRecord& r : records) {
      auto [it, inserted] = seen.emplace(r.prompt.id, r.prompt);
      if (inserted) {
        out.push_back(r.prompt);
      } else if (!(it->second == r.prompt)) {
        throw ConfigError("prompt id " + std::to_string(r.prompt.id) + " used for two different intervals");
      }
    }
  }
  return out;
}

}  // namespace

void write_report_csv(const fs::path& path, const ExperimentReport& report) {
  auto out = open_output(path);
  csv::row(out, "metric", "value");
  for (const auto& [k, v] : report.metrics) csv::row(out, k, v);
}

// ---------------------------------------------------------------------------

std::vector<SftExample> biased_sft_examples(std::span<const IntervalPrompt> prompts, const SftOptions& options) {
  if (!options.uniform_target && !(options.skew >= 0.0 && options.skew <= 1.0)) {
    throw ConfigError("sft skew must lie in [0, 1]");
  }
  std::vector<SftExample> examples;
  for (const IntervalPrompt& p : prompts) {
    const Token n = p.width();
    const Token bias = bias_token(p);
    for (Token t = p.lo; t <= p.hi; ++t) {
      double w = 1.0 / static_cast<double>(n);
      if (!options.uniform_target && n > 1) {
        w = t == bias ? options.skew : (1.0 - options.skew) / static_cast<double>(n - 1);
      }
      if (w > 0.0) examples.push_back({p, single_token(t), w});
    }
  }
  return examples;
}

PolicySnapshot make_biased_sft_policy(std::span<const IntervalPrompt> prompts, const SftOptions& options) {
  if (prompts.empty()) throw ConfigError("no prompts for SFT");
  std::vector<std::int64_t> ids;
  std::set<std::int64_t> seen;
  for (const IntervalPrompt& p : prompts) {
    if (seen.insert(p.id).second) ids.push_back(p.id);
  }
  std::unique_ptr<Policy> policy;
  if (options.policy == PolicyKind::linear) {
    policy = std::make_unique<LinearSoftmaxPolicy>(options.vocab_size);
  } else {
    policy = std::make_unique<TabularPolicy>(std::move(ids), options.vocab_size);
  }
  const std::vector<SftExample> examples = biased_sft_examples(prompts, options);
  TrainConfig tc;
  tc.optimizer = Optimizer::adam;
  tc.learning_rate = options.learning_rate;
  tc.steps = options.steps;
  tc.batch_size = options.batch_size > 0 ? options.batch_size : static_cast<int>(examples.size());
  tc.seed = options.seed;
  tc.objective = Method::sft;
  train(*policy, examples, tc);
  return PolicySnapshot::capture(*policy);
}

// ---------------------------------------------------------------------------

PreferenceRunConfig default_run_config(Method method, PolicyKind policy) {
  PreferenceRunConfig config;
  config.method = method;
  config.sft.policy = policy;
  config.train.steps = 500;
  config.train.batch_size = 16;
  config.train.objective = method;
  config.train.objective_config = default_objective_config(preference_loss_of(method));
  const bool ipo_family = method == Method::ipo || method == Method::mipo;
  if (policy == PolicyKind::tabular) {
    // Plain SGD: Adam's per-coordinate normalization turns the vanishing
    // softmax-tail gradients of a one-row-per-prompt table into full-size
    // steps. The (m)DPO gradient carries a factor beta, hence its larger rate.
    config.train.optimizer = Optimizer::sgd;
    config.train.learning_rate = ipo_family ? 0.2 : 300.0;
  } else {
    config.train.optimizer = Optimizer::adam;
    config.train.learning_rate = 0.01;
  }
  return config;
}

double mean_kl_to_uniform(const Policy& policy, std::span<const IntervalPrompt> prompts) {
  if (prompts.empty()) return 0.0;
  double total = 0.0;
  for (const IntervalPrompt& p : prompts) {
    const auto dist = prompt_distribution(policy, p, SupportMode::interval_restricted);
    total += kl_to_uniform(dist, dist.size());
  }
  return total / static_cast<double>(prompts.size());
}

double mean_out_of_interval_mass(const Policy& policy, std::span<const IntervalPrompt> prompts) {
  if (prompts.empty()) return 0.0;
  double total = 0.0;
  for (const IntervalPrompt& p : prompts) total += out_of_interval_mass(policy, p);
  return total / static_cast<double>(prompts.size());
}

namespace {

void add_split_metrics(ExperimentReport& report, const std::string& split, const Policy& sft, const Policy& trained,
                       std::span<const IntervalPrompt> prompts) {
  if (prompts.empty()) return;
  const WinRateReport wr = entropy_win_rate(trained, sft, prompts, SupportMode::interval_restricted);
  report.add("win_rate_vs_sft_" + split, wr.win_rate);
  report.add("wins_vs_sft_" + split, static_cast<double>(wr.wins));
  report.add("losses_vs_sft_" + split, static_cast<double>(wr.losses));
  report.add("ties_vs_sft_" + split, static_cast<double>(wr.ties));
  report.add("mean_kl_sft_" + split, mean_kl_to_uniform(sft, prompts));
  report.add("mean_kl_trained_" + split, mean_kl_to_uniform(trained, prompts));
  report.add("out_of_interval_sft_" + split, mean_out_of_interval_mass(sft, prompts));
  report.add("out_of_interval_trained_" + split, mean_out_of_interval_mass(trained, prompts));
}

void write_prompt_csv(std::ostream& out, const std::string& split, const Policy& sft, const Policy& trained,
                      std::span<const IntervalPrompt> prompts) {
  for (const IntervalPrompt& p : prompts) {
    const auto ds = prompt_distribution(sft, p, SupportMode::interval_restricted);
    const auto dt = prompt_distribution(trained, p, SupportMode::interval_restricted);
    const double hs = entropy(ds);
    const double ht = entropy(dt);
    const double ln_n = std::log(static_cast<double>(ds.size()));
    csv::row(out, split, p.id, p.lo, p.hi, hs, ht, ln_n - hs, ln_n - ht, out_of_interval_mass(sft, p),
             out_of_interval_mass(trained, p));
  }
}

}  // namespace

RngRunResult run_rng_pipeline(std::span<const PreferenceRecord> train_records,
                              std::span<const PreferenceRecord> test_records, const PolicySnapshot& sft,
                              const PreferenceRunConfig& config) {
  if (config.method == Method::sft) throw ConfigError("the preference pipeline needs a preference method");
  std::unique_ptr<Policy> policy = sft.thaw();
  TrainConfig tc = config.train;
  tc.objective = config.method;
  TrainHistory history = train(*policy, sft, train_records, tc);

  ExperimentReport report;
  report.name = "rng-" + std::string(to_string(config.method));
  report.echo("method", std::string(to_string(config.method)));
  echo_train(report, "train.", tc);
  echo_sft(report, config.sft);
  report.echo("train_records", std::to_string(train_records.size()));
  report.echo("test_records", std::to_string(test_records.size()));
  if (!train_records.empty()) {
    report.echo("k_chosen", std::to_string(train_records.front().chosen.size()));
    report.echo("k_rejected", std::to_string(train_records.front().rejected.size()));
  }

  const std::vector<IntervalPrompt> train_prompts = prompts_of(train_records);
  const std::vector<IntervalPrompt> test_prompts = prompts_of(test_records);
  add_split_metrics(report, "train", sft.policy(), *policy, train_prompts);
  add_split_metrics(report, "test", sft.policy(), *policy, test_prompts);
  report.add("final_loss", history.steps.back().loss);

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    const fs::path report_path = config.out_dir / "report.csv";
    const fs::path config_path = config.out_dir / "config.csv";
    const fs::path prompts_path = config.out_dir / "prompts.csv";
    const fs::path history_path = config.out_dir / "history.csv";
    write_report_csv(report_path, report);
    write_config_csv(config_path, report);
    {
      auto out = open_output(prompts_path);
      csv::row(out, "split", "id", "lo", "hi", "entropy_sft", "entropy_trained", "kl_sft", "kl_trained",
               "out_of_interval_sft", "out_of_interval_trained");
      write_prompt_csv(out, "train", sft.policy(), *policy, train_prompts);
      write_prompt_csv(out, "test", sft.policy(), *policy, test_prompts);
    }
    {
      auto out = open_output(history_path);
      write_history_csv(out, history);
    }
    report.files = {report_path, config_path, prompts_path, history_path};
    if (config.write_policies) {
      save_policy(sft.policy(), config.out_dir / "sft_policy.json");
      save_policy(*policy, config.out_dir / "policy.json");
      report.files.push_back(config.out_dir / "sft_policy.json");
      report.files.push_back(config.out_dir / "policy.json");
    }
  }
  PolicySnapshot trained = *history.final_policy;
  return RngRunResult{std::move(report), sft, std::move(trained), std::move(history)};
}

RngRunResult run_rng_experiment(const fs::path& train_path, const fs::path& test_path,
                                const PreferenceRunConfig& config) {
  const std::vector<PreferenceRecord> train_records = read_jsonl(train_path);
  const std::vector<PreferenceRecord> test_records =
      test_path.empty() ? std::vector<PreferenceRecord>{} : read_jsonl(test_path);
  if (train_records.empty()) throw ConfigError("training dataset " + train_path.string() + " is empty");
  const std::vector<IntervalPrompt> prompts = unique_prompts(train_records, test_records);
  SftOptions sft_options = config.sft;
  const PolicySnapshot sft = make_biased_sft_policy(prompts, sft_options);
  return run_rng_pipeline(train_records, test_records, sft, config);
}

// ---------------------------------------------------------------------------

EstimatorExperimentConfig::EstimatorExperimentConfig() {
  bias.sample_sizes = {2, 4, 8, 16, 32, 64};
  variance.sample_sizes = {8, 16, 32, 64, 128, 256, 512};
}

EstimatorExperimentResult run_estimator_experiment(const EstimatorExperimentConfig& config) {
  EstimatorExperimentResult result;
  result.bias = bias_study(config.bias);
  result.variance = variance_scaling_study(config.variance);
  ExperimentReport& report = result.report;
  report.name = "estimator";
  report.echo("bias.trials", std::to_string(config.bias.trials));
  report.echo("bias.seed", std::to_string(config.bias.seed));
  report.echo("variance.trials", std::to_string(config.variance.trials));
  report.echo("variance.seed", std::to_string(config.variance.seed));
  report.echo("c", csv::format(config.bias.c));
  report.add("true_value", result.bias.true_value);
  report.add("variance_slope_defined", result.variance.slope ? 1.0 : 0.0);
  report.add("variance_slope", result.variance.slope.value_or(std::nan("")));
  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    {
      auto out = open_output(config.out_dir / "bias_study.csv");
      write_bias_csv(out, result.bias);
    }
    {
      auto out = open_output(config.out_dir / "variance_study.csv");
      write_variance_csv(out, result.variance);
    }
    write_report_csv(config.out_dir / "report.csv", report);
    write_config_csv(config.out_dir / "config.csv", report);
    report.files = {config.out_dir / "bias_study.csv", config.out_dir / "variance_study.csv",
                    config.out_dir / "report.csv", config.out_dir / "config.csv"};
  }
  return result;
}

CompareExperimentResult run_compare_experiment(const CompareExperimentConfig& config) {
  CompareExperimentResult result;
  for (std::size_t k : config.ks) {
    result.rows.push_back(empirical_correct_label_rate(config.x, config.y, k, config.trials, config.seed));
  }
  ExperimentReport& report = result.report;
  report.name = "compare";
  report.echo("trials", std::to_string(config.trials));
  report.echo("seed", std::to_string(config.seed));
  report.add("mean_x", config.x.mean());
  report.add("mean_y", config.y.mean());
  report.add("range_width", difference_range_width(config.x, config.y));
  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    {
      auto out = open_output(config.out_dir / "compare.csv");
      write_label_study_csv(out, result.rows);
    }
    write_report_csv(config.out_dir / "report.csv", report);
    write_config_csv(config.out_dir / "config.csv", report);
    report.files = {config.out_dir / "compare.csv", config.out_dir / "report.csv", config.out_dir / "config.csv"};
  }
  return result;
}

// ---------------------------------------------------------------------------

double response_quality(const IntervalPrompt& prompt, const SampleGroup& group, std::size_t index) {
  const Token t = group.responses.at(index).tokens.front();
  double q = prompt.contains(t) ? 0.0 : -1.0;
  const std::size_t k = group.size();
  if (k < 2) return q;
  std::size_t same = 0;
  for (std::size_t j = 0; j < k; ++j) {
    if (j != index && group.responses[j].tokens.front() == t) ++same;
  }
  return q - static_cast<double>(same) / static_cast<double>(k - 1);
}

double sign_test_p_value(std::size_t successes, std::size_t n) {
  if (successes > n) throw ConfigError("successes exceed trials");
  double p = 0.0;
  for (std::size_t i = successes; i <= n; ++i) {
    p += std::exp(std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(i) + 1.0) -
                  std::lgamma(static_cast<double>(n - i) + 1.0) - static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, p);
}

NoiseExperimentConfig::NoiseExperimentConfig() {
  data.records = 1000;
  single = default_run_config(Method::dpo);
  multi = default_run_config(Method::mdpo);
}

NoiseExperimentResult run_noise_robustness_experiment(const NoiseExperimentConfig& config) {
  if (config.seeds.empty()) throw ConfigError("noise experiment needs at least one seed");
  if (!(config.label_noise >= 0.0)) throw ConfigError("label noise must be >= 0");
  NoiseExperimentResult result;
  ExperimentReport& report = result.report;
  report.name = "noise";
  report.echo("records", std::to_string(config.data.records));
  report.echo("k", std::to_string(config.data.k));
  report.echo("label_noise", csv::format(config.label_noise));
  report.echo("noise_free", config.noise_free ? "true" : "false");
  report.echo("quality", "-(same-token group members)/(k-1); -1 outside the interval");
  report.echo("single.method", std::string(to_string(config.single.method)));
  report.echo("multi.method", std::string(to_string(config.multi.method)));
  echo_train(report, "single.", config.single.train);
  echo_train(report, "multi.", config.multi.train);
  echo_sft(report, config.multi.sft);

  for (std::uint64_t seed : config.seeds) {
    RngDatasetConfig data = config.data;
    data.seed = seed;
    const std::vector<IntervalPrompt> prompts = sample_rng_prompts(data);
    SftOptions sft_options = config.multi.sft;
    sft_options.seed = seed;
    const PolicySnapshot sft = make_biased_sft_policy(prompts, sft_options);

    std::vector<PreferenceRecord> multi_records, single_records;
    std::size_t multi_correct = 0, single_correct = 0;
    std::uniform_real_distribution<double> noise(-config.label_noise, config.label_noise);
    for (std::size_t i = 0; i < prompts.size(); ++i) {
      const IntervalPrompt& p = prompts[i];
      Rng rng = make_rng(seed, {0x401, i});
      SampleGroup strong = uniform_group(p, data.k, rng);
      SampleGroup weak = sample(sft.policy(), p, rng, data.k);
      std::vector<double> qs(data.k), qw(data.k);
      for (std::size_t j = 0; j < data.k; ++j) {
        qs[j] = response_quality(p, strong, j);
        qw[j] = response_quality(p, weak, j);
        if (!config.noise_free && config.label_noise > 0.0) {
          qs[j] += noise(rng);
          qw[j] += noise(rng);
        }
      }
      // Singletons are scored on their own (a group of one).
      double s1 = response_quality(p, SampleGroup{{strong.responses.front()}}, 0);
      double w1 = response_quality(p, SampleGroup{{weak.responses.front()}}, 0);
      if (!config.noise_free && config.label_noise > 0.0) {
        s1 += noise(rng);
        w1 += noise(rng);
      }
      const bool multi_label = config.noise_free || label_by_group_sum(qs, qw);
      multi_correct += multi_label ? 1 : 0;
      multi_records.push_back({p, multi_label ? strong : weak, multi_label ? weak : strong});
      // The single-sample baseline sees the first response of each side.
      const bool single_label =
          config.noise_free || label_by_group_sum(std::span(&s1, 1), std::span(&w1, 1));
      single_correct += single_label ? 1 : 0;
      PreferenceRecord s;
      s.prompt = p;
      s.chosen.responses = {(single_label ? strong : weak).responses.front()};
      s.rejected.responses = {(single_label ? weak : strong).responses.front()};
      single_records.push_back(std::move(s));
    }

    PreferenceRunConfig single_cfg = config.single;
    PreferenceRunConfig multi_cfg = config.multi;
    single_cfg.out_dir.clear();
    multi_cfg.out_dir.clear();
    single_cfg.train.seed = seed;
    multi_cfg.train.seed = seed;
    const RngRunResult single_run = run_rng_pipeline(single_records, {}, sft, single_cfg);
    const RngRunResult multi_run = run_rng_pipeline(multi_records, {}, sft, multi_cfg);

    NoiseSeedResult r;
    r.seed = seed;
    r.label_accuracy_single = static_cast<double>(single_correct) / static_cast<double>(prompts.size());
    r.label_accuracy_multi = static_cast<double>(multi_correct) / static_cast<double>(prompts.size());
    r.kl_sft = mean_kl_to_uniform(sft.policy(), prompts);
    r.kl_single = mean_kl_to_uniform(single_run.trained.policy(), prompts);
    r.kl_multi = mean_kl_to_uniform(multi_run.trained.policy(), prompts);
    r.win_rate_multi_vs_single =
        entropy_win_rate(multi_run.trained.policy(), single_run.trained.policy(), prompts).win_rate;
    if (r.kl_multi <= r.kl_single) ++result.multi_wins;
    result.seeds.push_back(r);
  }
  result.sign_test_p = sign_test_p_value(result.multi_wins, result.seeds.size());

  double kl_single = 0.0, kl_multi = 0.0, kl_sft = 0.0;
  for (const NoiseSeedResult& r : result.seeds) {
    kl_single += r.kl_single;
    kl_multi += r.kl_multi;
    kl_sft += r.kl_sft;
  }
  const double n = static_cast<double>(result.seeds.size());
  report.add("mean_kl_sft", kl_sft / n);
  report.add("mean_kl_single", kl_single / n);
  report.add("mean_kl_multi", kl_multi / n);
  report.add("multi_wins", static_cast<double>(result.multi_wins));
  report.add("sign_test_p", result.sign_test_p);

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    {
      auto out = open_output(config.out_dir / "noise.csv");
      csv::row(out, "seed", "label_accuracy_single", "label_accuracy_multi", "kl_sft", "kl_single", "kl_multi",
               "win_rate_multi_vs_single");
      for (const NoiseSeedResult& r : result.seeds) {
        csv::row(out, r.seed, r.label_accuracy_single, r.label_accuracy_multi, r.kl_sft, r.kl_single, r.kl_multi,
                 r.win_rate_multi_vs_single);
      }
    }
    write_report_csv(config.out_dir / "report.csv", report);
    write_config_csv(config.out_dir / "config.csv", report);
    report.files = {config.out_dir / "noise.csv", config.out_dir / "report.csv", config.out_dir / "config.csv"};
  }
  return result;
}

// ---------------------------------------------------------------------------

IterativeConfig::IterativeConfig() { run = default_run_config(Method::mdpo); }

IterativeResult run_iterative_experiment(const IterativeConfig& config) {
  if (config.rounds < 2) throw ConfigError("iterative experiment needs at least 2 rounds");
  const std::vector<PreferenceRecord> base = build_rng_dataset(config.data);
  const std::vector<IntervalPrompt> prompts = prompts_of(base);
  const PolicySnapshot sft = make_biased_sft_policy(prompts, config.run.sft);

  IterativeResult result;
  ExperimentReport& report = result.report;
  report.name = "iterate";
  report.echo("rounds", std::to_string(config.rounds));
  report.echo("records", std::to_string(config.data.records));
  report.echo("k", std::to_string(config.data.k));
  report.echo("data.seed", std::to_string(config.data.seed));
  report.echo("method", std::string(to_string(config.run.method)));
  echo_train(report, "train.", config.run.train);
  echo_sft(report, config.run.sft);

  result.mean_kl.push_back(mean_kl_to_uniform(sft.policy(), prompts));
  std::vector<double> win_rates{0.0};
  PolicySnapshot previous = sft;
  for (int round = 1; round <= config.rounds; ++round) {
    std::vector<PreferenceRecord> records;
    if (round == 1) {
      records = base;
    } else {
      records.reserve(prompts.size());
      for (std::size_t i = 0; i < prompts.size(); ++i) {
        Rng rng = make_rng(config.data.seed, {0x17e, static_cast<std::uint64_t>(round), i});
        PreferenceRecord r;
        r.prompt = prompts[i];
        r.chosen = uniform_group(r.prompt, config.data.k, rng);
        r.rejected = sample(previous.policy(), r.prompt, rng, config.data.k);
        records.push_back(std::move(r));
      }
    }
    PreferenceRunConfig run = config.run;
    run.out_dir.clear();
    RngRunResult out = run_rng_pipeline(records, {}, previous, run);
    result.mean_kl.push_back(mean_kl_to_uniform(out.trained.policy(), prompts));
    win_rates.push_back(entropy_win_rate(out.trained.policy(), previous.policy(), prompts).win_rate);
    result.histories.push_back(std::move(out.history));
    previous = out.trained;
  }
  result.final_policy = previous;

  for (std::size_t r = 0; r < result.mean_kl.size(); ++r) report.add("mean_kl_round_" + std::to_string(r), result.mean_kl[r]);

  if (!config.out_dir.empty()) {
    prepare_dir(config.out_dir);
    {
      auto out = open_output(config.out_dir / "rounds.csv");
      csv::row(out, "round", "mean_kl", "win_rate_vs_previous");
      for (std::size_t r = 0; r < result.mean_kl.size(); ++r) csv::row(out, r, result.mean_kl[r], win_rates[r]);
    }
    {
      auto out = open_output(config.out_dir / "history.csv");
      csv::row(out, "round", "step", "loss", "grad_norm");
      for (std::size_t r = 0; r < result.histories.size(); ++r) {
        for (const StepRecord& s : result.histories[r].steps) csv::row(out, r + 1, s.step, s.loss, s.grad_norm);
      }
    }
    write_report_csv(config.out_dir / "report.csv", report);
    write_config_csv(config.out_dir / "config.csv", report);
    report.files = {config.out_dir / "rounds.csv", config.out_dir / "history.csv", config.out_dir / "report.csv",
                    config.out_dir / "config.csv"};
  }
  return result;
}

}  // namespace multipref
