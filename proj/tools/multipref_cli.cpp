// multipref: dataset building, preference training and the desk-scale
// simulations. Exit codes: 0 ok, 1 configuration error, 2 numerical abort.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "multipref/csv.hpp"
#include "multipref/dataset.hpp"
#include "multipref/error.hpp"
#include "multipref/experiments.hpp"
#include "multipref/metrics.hpp"
#include "multipref/policy_io.hpp"

namespace fs = std::filesystem;
using namespace multipref;

namespace {

// Values of the shared flags; optionals so that "not given" keeps the
// subcommand's own default.
struct Shared {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> beta;
  std::optional<double> tau;
  std::optional<double> nll_coeff;
  std::optional<double> lr;
  std::optional<int> steps;
  std::string method;
  std::string out_dir = "out";
};

void add_seed(CLI::App* app, Shared& s) { app->add_option("--seed", s.seed, "random seed"); }
void add_k(CLI::App* app, Shared& s) { app->add_option("--k", s.k, "group size")->check(CLI::PositiveNumber); }
void add_out(CLI::App* app, Shared& s) { app->add_option("--out-dir", s.out_dir, "output directory"); }

void add_training(CLI::App* app, Shared& s) {
  app->add_option("--method", s.method, "dpo | ipo | mdpo | mipo");
  app->add_option("--beta", s.beta, "implicit reward scale");
  app->add_option("--tau", s.tau, "IPO regularizer (margin target 1/(2 tau))");
  app->add_option("--nll-coeff", s.nll_coeff, "chosen-group NLL anchor weight");
  app->add_option("--lr", s.lr, "learning rate");
  app->add_option("--steps", s.steps, "optimizer steps");
}

struct RunFlags {
  int batch_size = -1;
  std::string optimizer;
  double sft_skew = -1.0;
  int sft_steps = -1;
  double sft_lr = -1.0;
  bool no_variance_correction = false;
  std::string policy = "tabular";
};

void add_run_flags(CLI::App* app, RunFlags& r) {
  app->add_option("--batch-size", r.batch_size, "records per step");
  app->add_option("--optimizer", r.optimizer, "adam | sgd");
  app->add_option("--sft-skew", r.sft_skew, "SFT mass on the bias token");
  app->add_option("--sft-steps", r.sft_steps, "SFT optimizer steps");
  app->add_option("--sft-lr", r.sft_lr, "SFT learning rate");
  app->add_flag("--no-variance-correction", r.no_variance_correction, "drop the mIPO variance terms");
  app->add_option("--policy", r.policy, "tabular | linear")->capture_default_str();
}

// Default config of `method`, overridden by whatever flags were given.
PreferenceRunConfig run_config(Method method, const Shared& s, const RunFlags& r) {
  PreferenceRunConfig c = default_run_config(method, policy_kind_from_string(r.policy));
  if (s.seed) {
    c.train.seed = *s.seed;
    c.sft.seed = *s.seed;
  }
  if (s.beta) c.train.objective_config.beta = *s.beta;
  if (s.tau) c.train.objective_config.tau = *s.tau;
  if (s.nll_coeff) c.train.objective_config.nll_coeff = *s.nll_coeff;
  if (s.lr) c.train.learning_rate = *s.lr;
  if (s.steps) c.train.steps = *s.steps;
  if (r.batch_size >= 0) c.train.batch_size = r.batch_size;
  if (!r.optimizer.empty()) c.train.optimizer = optimizer_from_string(r.optimizer);
  if (r.sft_skew >= 0.0) c.sft.skew = r.sft_skew;
  if (r.sft_steps >= 0) c.sft.steps = r.sft_steps;
  if (r.sft_lr >= 0.0) c.sft.learning_rate = r.sft_lr;
  if (r.no_variance_correction) c.train.objective_config.variance_correction = false;
  c.train.validate();
  return c;
}

Method parse_method(const std::string& name, Method fallback) {
  if (name.empty()) return fallback;
  const Method m = method_from_string(name);
  if (m == Method::sft) throw ConfigError("--method must be a preference method");
  return m;
}

std::vector<std::size_t> parse_sizes(const std::vector<std::string>& items) {
  std::vector<std::size_t> out;
  for (const std::string& s : items) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw ConfigError("bad size '" + s + "'");
    }
    if (pos != s.size() || v == 0) throw ConfigError("bad size '" + s + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

void print_report(const ExperimentReport& report) {
  std::cout << report.name << "\n";
  for (const auto& [k, v] : report.metrics) std::cout << "  " << k << " = " << csv::format(v) << "\n";
  for (const fs::path& f : report.files) std::cout << "  wrote " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-sample preference optimization on toy policies"};
  app.require_subcommand(1);

  Shared shared;
  RunFlags run_flags;

  // dataset
  auto* ds = app.add_subcommand("dataset", "build the random-number preference dataset (JSONL)");
  RngDatasetConfig ds_config;
  std::size_t test_records = 100;
  std::string family = "point-mass";
  add_seed(ds, shared);
  add_k(ds, shared);
  add_out(ds, shared);
  ds->add_option("--records", ds_config.records, "training records")->capture_default_str();
  ds->add_option("--test-records", test_records, "test records (0: no test split)")->capture_default_str();
  ds->add_option("--family", family, "rejected family: point-mass | geometric-tilt | mixture")->capture_default_str();

  // train
  auto* tr = app.add_subcommand("train", "SFT-bias a policy, then preference-train it");
  std::string train_path, test_path;
  add_seed(tr, shared);
  add_k(tr, shared);
  add_out(tr, shared);
  add_training(tr, shared);
  add_run_flags(tr, run_flags);
  tr->add_option("--train", train_path, "training JSONL")->required()->check(CLI::ExistingFile);
  tr->add_option("--test", test_path, "test JSONL")->check(CLI::ExistingFile);

  // eval
  auto* ev = app.add_subcommand("eval", "per-prompt entropy, KL-to-uniform and out-of-interval mass");
  std::string policy_path, baseline_path, data_path, support = "interval-restricted";
  add_out(ev, shared);
  ev->add_option("--policy", policy_path, "policy JSON")->required()->check(CLI::ExistingFile);
  ev->add_option("--baseline", baseline_path, "second policy for the entropy win rate")->check(CLI::ExistingFile);
  ev->add_option("--data", data_path, "JSONL whose prompts are evaluated")->required()->check(CLI::ExistingFile);
  ev->add_option("--support", support, "interval-restricted | full-vocab")->capture_default_str();

  // sim-estimator
  auto* se = app.add_subcommand("sim-estimator", "bias and variance of the squared-difference estimators");
  EstimatorExperimentConfig est;
  std::string p_spec = "uniform:0,2", q_spec = "uniform:-1,1", f_name = "square";
  std::vector<std::string> bias_ks, var_ks;
  std::size_t est_trials = 100000;
  add_seed(se, shared);
  add_out(se, shared);
  se->add_option("--p", p_spec, "distribution p")->capture_default_str();
  se->add_option("--q", q_spec, "distribution q")->capture_default_str();
  se->add_option("--f", f_name, "identity | square")->capture_default_str();
  se->add_option("--c", est.bias.c, "offset c");
  se->add_option("--trials", est_trials, "Monte Carlo trials per k")->capture_default_str();
  se->add_option("--bias-ks", bias_ks, "sample sizes of the bias study");
  se->add_option("--variance-ks", var_ks, "sample sizes of the variance study");

  // sim-compare
  auto* sc = app.add_subcommand("sim-compare", "group-sum label accuracy vs the Hoeffding bound");
  CompareExperimentConfig cmp;
  std::string x_spec = "uniform:0.2,1.2", y_spec = "uniform:0,1";
  std::vector<std::string> cmp_ks;
  add_seed(sc, shared);
  add_out(sc, shared);
  sc->add_option("--x", x_spec, "chosen-side quality distribution")->capture_default_str();
  sc->add_option("--y", y_spec, "rejected-side quality distribution")->capture_default_str();
  sc->add_option("--ks", cmp_ks, "group sizes");
  sc->add_option("--trials", cmp.trials, "Monte Carlo trials per k")->capture_default_str();

  // sim-noise
  auto* sn = app.add_subcommand("sim-noise", "single- vs multi-sample training under noisy labels");
  NoiseExperimentConfig noise;
  std::vector<std::uint64_t> noise_seeds;
  add_k(sn, shared);
  add_out(sn, shared);
  add_training(sn, shared);
  add_run_flags(sn, run_flags);
  sn->add_option("--records", noise.data.records, "prompts per seed")->capture_default_str();
  sn->add_option("--label-noise", noise.label_noise, "half-width of the labeler noise")->capture_default_str();
  sn->add_flag("--noise-free", noise.noise_free, "label by true expected quality");
  sn->add_option("--seeds", noise_seeds, "replica seeds");

  // iterate
  auto* it = app.add_subcommand("iterate", "iterative rounds with the previous policy as the rejected sampler");
  IterativeConfig iter;
  add_seed(it, shared);
  add_k(it, shared);
  add_out(it, shared);
  add_training(it, shared);
  add_run_flags(it, run_flags);
  it->add_option("--rounds", iter.rounds, "number of rounds")->capture_default_str();
  it->add_option("--records", iter.data.records, "prompts")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    const fs::path out_dir = shared.out_dir;
    if (*ds) {
      ds_config.rejected_family = rejected_family_from_string(family);
      if (shared.k) ds_config.k = *shared.k;
      if (shared.seed) ds_config.seed = *shared.seed;
      const auto train_records = build_rng_dataset(ds_config);
      fs::create_directories(out_dir);
      write_jsonl(out_dir / "train.jsonl", train_records);
      std::cout << "wrote " << (out_dir / "train.jsonl").string() << " (" << train_records.size() << " records)\n";
      if (test_records > 0) {
        RngDatasetConfig test_config = ds_config;
        test_config.test_split = true;
        test_config.records = test_records;
        test_config.first_id = static_cast<std::int64_t>(ds_config.records);
        test_config.seed = derive_seed(ds_config.seed, {0x7e57});
        const auto records = build_rng_dataset(test_config);
        write_jsonl(out_dir / "test.jsonl", records);
        std::cout << "wrote " << (out_dir / "test.jsonl").string() << " (" << records.size() << " records)\n";
      }
    } else if (*tr) {
      PreferenceRunConfig config = run_config(parse_method(shared.method, Method::mdpo), shared, run_flags);
      config.out_dir = out_dir;
      fs::path train_file = train_path, test_file = test_path;
      if (shared.k) {
        // Re-slice the groups, e.g. --k 1 turns a group dataset into DPO pairs.
        fs::create_directories(out_dir);
        train_file = out_dir / "train_sliced.jsonl";
        write_jsonl(train_file, slice_groups(read_jsonl(fs::path(train_path)), *shared.k));
        if (!test_path.empty()) {
          test_file = out_dir / "test_sliced.jsonl";
          write_jsonl(test_file, slice_groups(read_jsonl(fs::path(test_path)), *shared.k));
        }
      }
      const RngRunResult result = run_rng_experiment(train_file, test_file, config);
      print_report(result.report);
    } else if (*ev) {
      const auto policy = load_policy(policy_path);
      const auto records = read_jsonl(data_path);
      const std::vector<IntervalPrompt> prompts = prompts_of(records);
      const SupportMode mode = support_mode_from_string(support);
      fs::create_directories(out_dir);
      std::ofstream out(out_dir / "eval.csv", std::ios::binary);
      if (!out) throw ConfigError("cannot write " + (out_dir / "eval.csv").string());
      csv::row(out, "id", "lo", "hi", "entropy", "kl_to_uniform", "out_of_interval");
      double kl_total = 0.0;
      for (const IntervalPrompt& p : prompts) {
        const auto dist = prompt_distribution(*policy, p, mode);
        const double kl = kl_to_uniform(dist, dist.size());
        kl_total += kl;
        csv::row(out, p.id, p.lo, p.hi, entropy(dist), kl, out_of_interval_mass(*policy, p));
      }
      std::cout << "prompts = " << prompts.size() << "\n";
      std::cout << "mean_kl_to_uniform = " << csv::format(kl_total / static_cast<double>(prompts.size())) << "\n";
      std::cout << "mean_out_of_interval = " << csv::format(mean_out_of_interval_mass(*policy, prompts)) << "\n";
      if (!baseline_path.empty()) {
        const auto baseline = load_policy(baseline_path);
        const WinRateReport wr = entropy_win_rate(*policy, *baseline, prompts, mode);
        std::cout << "win_rate = " << csv::format(wr.win_rate) << " (wins " << wr.wins << ", losses " << wr.losses
                  << ", ties " << wr.ties << ")\n";
      }
      std::cout << "wrote " << (out_dir / "eval.csv").string() << "\n";
    } else if (*se) {
      est.bias.p = est.variance.p = DistributionSpec::parse(p_spec);
      est.bias.q = est.variance.q = DistributionSpec::parse(q_spec);
      est.bias.f = est.variance.f = Transform::parse(f_name);
      est.variance.c = est.bias.c;
      est.bias.trials = est.variance.trials = est_trials;
      if (shared.seed) est.bias.seed = est.variance.seed = *shared.seed;
      if (!bias_ks.empty()) est.bias.sample_sizes = parse_sizes(bias_ks);
      if (!var_ks.empty()) est.variance.sample_sizes = parse_sizes(var_ks);
      est.out_dir = out_dir;
      print_report(run_estimator_experiment(est).report);
    } else if (*sc) {
      cmp.x = QualityDistribution::parse(x_spec);
      cmp.y = QualityDistribution::parse(y_spec);
      if (!cmp_ks.empty()) cmp.ks = parse_sizes(cmp_ks);
      if (shared.seed) cmp.seed = *shared.seed;
      cmp.out_dir = out_dir;
      const auto result = run_compare_experiment(cmp);
      for (const LabelStudyResult& r : result.rows) {
        std::cout << "k=" << r.k << " accuracy=" << csv::format(r.empirical_accuracy)
                  << " hoeffding=" << csv::format(r.hoeffding_bound) << "\n";
      }
      print_report(result.report);
    } else if (*sn) {
      // --method picks the multi-sample method; its single-sample twin is the baseline.
      const Method multi = parse_method(shared.method, Method::mdpo);
      if (multi != Method::mdpo && multi != Method::mipo) throw ConfigError("sim-noise takes --method mdpo or mipo");
      const Method single = multi == Method::mdpo ? Method::dpo : Method::ipo;
      noise.multi = run_config(multi, shared, run_flags);
      noise.single = run_config(single, shared, run_flags);
      if (shared.k) noise.data.k = *shared.k;
      if (!noise_seeds.empty()) noise.seeds = noise_seeds;
      noise.out_dir = out_dir;
      const auto result = run_noise_robustness_experiment(noise);
      for (const NoiseSeedResult& r : result.seeds) {
        std::cout << "seed " << r.seed << ": kl_sft=" << csv::format(r.kl_sft)
                  << " kl_single=" << csv::format(r.kl_single) << " kl_multi=" << csv::format(r.kl_multi)
                  << " acc_single=" << csv::format(r.label_accuracy_single)
                  << " acc_multi=" << csv::format(r.label_accuracy_multi) << "\n";
      }
      print_report(result.report);
    } else if (*it) {
      iter.run = run_config(parse_method(shared.method, Method::mdpo), shared, run_flags);
      if (shared.k) iter.data.k = *shared.k;
      if (shared.seed) iter.data.seed = *shared.seed;
      iter.out_dir = out_dir;
      print_report(run_iterative_experiment(iter).report);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
