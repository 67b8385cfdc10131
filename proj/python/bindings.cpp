#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <map>
#include <optional>
#include <string>

#include "multipref/error.hpp"
#include "multipref/experiments.hpp"
#include "multipref/policy_io.hpp"

namespace py = pybind11;
using namespace multipref;

namespace {

SampleGroup to_group(const std::vector<std::vector<Token>>& responses) {
  SampleGroup g;
  for (const auto& r : responses) g.responses.push_back(Response{r});
  return g;
}

std::vector<std::vector<Token>> from_group(const SampleGroup& g) {
  std::vector<std::vector<Token>> out;
  for (const Response& r : g.responses) out.push_back(r.tokens);
  return out;
}

py::dict record_dict(const PreferenceRecord& r) {
  py::dict d;
  d["prompt"] = r.prompt;
  d["chosen"] = from_group(r.chosen);
  d["rejected"] = from_group(r.rejected);
  return d;
}

std::map<std::string, double> metrics_of(const ExperimentReport& report) {
  return {report.metrics.begin(), report.metrics.end()};
}

ObjectiveConfig objective(double beta, double tau, double nll_coeff, bool variance_correction) {
  ObjectiveConfig c;
  c.beta = beta;
  c.tau = tau;
  c.nll_coeff = nll_coeff;
  c.variance_correction = variance_correction;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "multi-sample preference optimization on toy policies";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<IntervalPrompt>(m, "IntervalPrompt")
      .def(py::init([](std::int64_t id, Token lo, Token hi) { return IntervalPrompt{id, lo, hi}; }), py::arg("id"),
           py::arg("lo"), py::arg("hi"))
      .def_readwrite("id", &IntervalPrompt::id)
      .def_readwrite("lo", &IntervalPrompt::lo)
      .def_readwrite("hi", &IntervalPrompt::hi)
      .def("__repr__", [](const IntervalPrompt& p) {
        return "IntervalPrompt(id=" + std::to_string(p.id) + ", lo=" + std::to_string(p.lo) +
               ", hi=" + std::to_string(p.hi) + ")";
      });

  py::class_<Policy>(m, "Policy")
      .def_property_readonly("vocab_size", &Policy::vocab_size)
      .def_property_readonly("kind", [](const Policy& p) { return std::string(to_string(p.kind())); })
      .def("parameters", [](const Policy& p) { return std::vector<double>(p.parameters().begin(), p.parameters().end()); })
      .def("set_parameters",
           [](Policy& p, const std::vector<double>& values) {
             auto params = p.mutable_parameters();
             if (values.size() != params.size()) throw ConfigError("parameter count mismatch");
             std::copy(values.begin(), values.end(), params.begin());
           })
      .def("log_prob", [](const Policy& p, const IntervalPrompt& prompt,
                          const std::vector<Token>& tokens) { return log_prob(p, prompt, Response{tokens}); })
      .def("grad_log_prob", [](const Policy& p, const IntervalPrompt& prompt,
                               const std::vector<Token>& tokens) { return grad_log_prob(p, prompt, Response{tokens}); })
      .def("predictive_distribution",
           [](const Policy& p, const IntervalPrompt& prompt) { return predictive_distribution(p, prompt); })
      .def(
          "sample",
          [](const Policy& p, const IntervalPrompt& prompt, std::uint64_t seed, std::size_t count) {
            Rng rng = make_rng(seed, {});
            return from_group(sample(p, prompt, rng, count));
          },
          py::arg("prompt"), py::arg("seed"), py::arg("count"))
      .def("to_json", [](const Policy& p) { return policy_to_json(p).dump(); })
      .def("save", [](const Policy& p, const std::filesystem::path& path) { save_policy(p, path); });

  py::class_<TabularPolicy, Policy>(m, "TabularPolicy")
      .def(py::init([](std::vector<std::int64_t> ids, std::size_t vocab, std::optional<std::vector<double>> logits) {
             if (logits) return TabularPolicy(std::move(ids), vocab, std::move(*logits));
             return TabularPolicy(std::move(ids), vocab);
           }),
           py::arg("prompt_ids"), py::arg("vocab_size") = kDefaultVocabSize, py::arg("logits") = py::none());

  py::class_<LinearSoftmaxPolicy, Policy>(m, "LinearSoftmaxPolicy")
      .def(py::init([](std::size_t vocab, std::optional<std::vector<double>> weights) {
             if (weights) return LinearSoftmaxPolicy(vocab, std::move(*weights));
             return LinearSoftmaxPolicy(vocab);
           }),
           py::arg("vocab_size") = kDefaultVocabSize, py::arg("weights") = py::none());

  m.def("load_policy", [](const std::filesystem::path& path) { return load_policy(path); });

  m.def(
      "preference_loss",
      [](const std::string& name, const Policy& policy, const Policy& ref, const IntervalPrompt& prompt,
         const std::vector<std::vector<Token>>& chosen, const std::vector<std::vector<Token>>& rejected, double beta,
         double tau, double nll_coeff, bool variance_correction) {
        const PreferenceRecord record{prompt, to_group(chosen), to_group(rejected)};
        const ObjectiveValue v = composite_objective(policy, PolicySnapshot::capture(ref), record,
                                                     preference_loss_from_string(name),
                                                     objective(beta, tau, nll_coeff, variance_correction));
        return py::make_tuple(v.loss, v.gradient);
      },
      "Loss and gradient of dpo | ipo | mdpo | mipo (plus the NLL anchor when nll_coeff > 0).", py::arg("name"),
      py::arg("policy"), py::arg("ref"), py::arg("prompt"), py::arg("chosen"), py::arg("rejected"),
      py::arg("beta") = 0.01, py::arg("tau") = 0.1, py::arg("nll_coeff") = 0.0, py::arg("variance_correction") = true);

  m.def("sft_nll", [](const Policy& policy, const std::vector<std::pair<IntervalPrompt, std::vector<Token>>>& data) {
    std::vector<SftExample> examples;
    for (const auto& [p, t] : data) examples.push_back({p, Response{t}});
    const ObjectiveValue v = sft_nll(policy, examples);
    return py::make_tuple(v.loss, v.gradient);
  });

  m.def("softplus", &softplus);
  m.def("sigmoid", &sigmoid);

  m.def(
      "squared_diff_unbiased",
      [](const std::vector<double>& p, const std::vector<double>& q, double c) {
        return squared_diff_unbiased(p, q, c).value;
      },
      py::arg("samples_p"), py::arg("samples_q"), py::arg("c") = 0.0);
  m.def(
      "squared_diff_naive",
      [](const std::vector<double>& p, const std::vector<double>& q, double c) { return squared_diff_naive(p, q, c); },
      py::arg("samples_p"), py::arg("samples_q"), py::arg("c") = 0.0);

  m.def("group_pref_prob", [](double margin) { return group_pref_prob(margin); });
  m.def("label_by_group_sum",
        [](const std::vector<double>& xs, const std::vector<double>& ys) { return label_by_group_sum(xs, ys); });
  m.def("hoeffding_lower_bound", &hoeffding_lower_bound, py::arg("delta"), py::arg("range_width"), py::arg("k"));
  m.def(
      "label_accuracy",
      [](const std::string& x, const std::string& y, std::size_t k, std::size_t trials, std::uint64_t seed) {
        const LabelStudyResult r = empirical_correct_label_rate(QualityDistribution::parse(x),
                                                                QualityDistribution::parse(y), k, trials, seed);
        py::dict d;
        d["k"] = r.k;
        d["accuracy"] = r.empirical_accuracy;
        d["hoeffding_bound"] = r.hoeffding_bound;
        d["standard_error"] = r.standard_error();
        return d;
      },
      py::arg("x") = "uniform:0.2,1.2", py::arg("y") = "uniform:0,1", py::arg("k") = 1, py::arg("trials") = 10000,
      py::arg("seed") = 0);

  m.def("entropy", [](const std::vector<double>& d) { return entropy(d); });
  m.def("kl_to_uniform", [](const std::vector<double>& d, std::size_t n) { return kl_to_uniform(d, n); });
  m.def("simpson_index", [](const std::vector<std::uint64_t>& counts) { return simpson_index({counts}); });
  m.def("distinct_n", [](const std::vector<std::string>& texts, std::size_t n) { return distinct_n(texts, n); });

  m.def(
      "build_rng_dataset",
      [](std::size_t records, std::size_t k, std::uint64_t seed, bool test_split, const std::string& family) {
        RngDatasetConfig c;
        c.records = records;
        c.k = k;
        c.seed = seed;
        c.test_split = test_split;
        c.rejected_family = rejected_family_from_string(family);
        py::list out;
        for (const PreferenceRecord& r : build_rng_dataset(c)) out.append(record_dict(r));
        return out;
      },
      py::arg("records") = 3000, py::arg("k") = 5, py::arg("seed") = 0, py::arg("test_split") = false,
      py::arg("family") = "point-mass");

  m.def(
      "write_rng_dataset",
      [](const std::filesystem::path& path, std::size_t records, std::size_t k, std::uint64_t seed) {
        RngDatasetConfig c;
        c.records = records;
        c.k = k;
        c.seed = seed;
        write_jsonl(path, build_rng_dataset(c));
      },
      py::arg("path"), py::arg("records") = 3000, py::arg("k") = 5, py::arg("seed") = 0);

  m.def("read_jsonl", [](const std::filesystem::path& path) {
    py::list out;
    for (const PreferenceRecord& r : read_jsonl(path)) out.append(record_dict(r));
    return out;
  });

  m.def(
      "run_rng_experiment",
      [](const std::filesystem::path& train, const std::filesystem::path& test, const std::string& method,
         const std::filesystem::path& out_dir, std::optional<int> steps, const std::string& policy,
         std::uint64_t seed) {
        const Method mth = method_from_string(method);
        PreferenceRunConfig run = default_run_config(mth, policy_kind_from_string(policy));
        if (steps) run.train.steps = *steps;
        run.train.seed = seed;
        run.sft.seed = seed;
        run.out_dir = out_dir;
        return metrics_of(run_rng_experiment(train, test, run).report);
      },
      "SFT-bias a policy, preference-train it and return the report metrics.", py::arg("train"),
      py::arg("test") = std::filesystem::path(), py::arg("method") = "mdpo", py::arg("out_dir") = std::filesystem::path(),
      py::arg("steps") = py::none(), py::arg("policy") = "tabular", py::arg("seed") = 0);

  m.def("sign_test_p_value", &sign_test_p_value);
}
