#include "multipref/objectives.hpp"

#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "multipref/error.hpp"

namespace multipref {

void ObjectiveConfig::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be positive");
  if (!(nll_coeff >= 0.0) || !std::isfinite(nll_coeff)) throw ConfigError("nll_coeff must be non-negative");
}

std::string_view to_string(PreferenceLoss loss) {
  switch (loss) {
    case PreferenceLoss::dpo:
      return "dpo";
    case PreferenceLoss::ipo:
      return "ipo";
    case PreferenceLoss::mdpo:
      return "mdpo";
    case PreferenceLoss::mipo:
      return "mipo";
  }
  return "unknown";
}

PreferenceLoss preference_loss_from_string(std::string_view name) {
  if (name == "dpo") return PreferenceLoss::dpo;
  if (name == "ipo") return PreferenceLoss::ipo;
  if (name == "mdpo") return PreferenceLoss::mdpo;
  if (name == "mipo") return PreferenceLoss::mipo;
  throw ConfigError("unknown preference loss '" + std::string(name) + "'");
}

ObjectiveConfig default_objective_config(PreferenceLoss loss) {
  ObjectiveConfig config;
  config.beta = 0.01;
  config.tau = 0.1;
  const bool ipo_family = loss == PreferenceLoss::ipo || loss == PreferenceLoss::mipo;
  config.nll_coeff = ipo_family ? 0.1 : 0.001;
  return config;
}

double softplus(double x) { return std::log1p(std::exp(-std::abs(x))) + std::max(x, 0.0); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

using PromptKey = std::tuple<std::int64_t, Token, Token>;

PromptKey key_of(const IntervalPrompt& p) { return {p.id, p.lo, p.hi}; }

void push_response(std::vector<TokenWeight>& out, const Response& response, double weight) {
  for (Token t : response.tokens) out.push_back({t, weight});
}

struct SideTerms {
  std::vector<double> ratios;
  std::vector<double> policy_log_probs;
  double mean = 0.0;
};

SideTerms side_terms(std::span<const double> policy_log_dist, std::span<const double> ref_log_dist,
                     const SampleGroup& group, const char* side) {
  if (group.empty()) throw ConfigError(std::string(side) + " group must be non-empty");
  SideTerms s;
  s.ratios.reserve(group.size());
  s.policy_log_probs.reserve(group.size());
  double sum = 0.0;
  for (const Response& r : group.responses) {
    const double lp = response_log_prob(policy_log_dist, r);
    const double ratio = lp - response_log_prob(ref_log_dist, r);
    s.policy_log_probs.push_back(lp);
    s.ratios.push_back(ratio);
    sum += ratio;
  }
  s.mean = sum / static_cast<double>(group.size());
  return s;
}

// Unbiased sample variance, 0 for a single observation.
double sample_variance(const SideTerms& s) {
  const std::size_t k = s.ratios.size();
  if (k < 2) return 0.0;
  double ss = 0.0;
  for (double r : s.ratios) ss += (r - s.mean) * (r - s.mean);
  return ss / static_cast<double>(k - 1);
}

void require_singletons(const PreferenceRecord& record, const char* loss) {
  if (record.chosen.size() != 1 || record.rejected.size() != 1) {
    throw ConfigError(std::string(loss) + " requires single-response groups (got " +
                      std::to_string(record.chosen.size()) + " chosen, " + std::to_string(record.rejected.size()) +
                      " rejected); use the multi-sample loss for groups");
  }
}

double evaluate_record(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                       PreferenceLoss loss, const ObjectiveConfig& config, double nll_coeff, double scale,
                       std::span<double> grad) {
  config.validate();
  if (loss == PreferenceLoss::dpo) require_singletons(record, "dpo_loss");
  if (loss == PreferenceLoss::ipo) require_singletons(record, "ipo_loss");

  const std::vector<double> lp = policy.log_distribution(record.prompt);
  const std::vector<double> lr = ref.policy().log_distribution(record.prompt);
  const SideTerms w = side_terms(lp, lr, record.chosen, "chosen");
  const SideTerms l = side_terms(lp, lr, record.rejected, "rejected");
  const double kw = static_cast<double>(w.ratios.size());
  const double kl = static_cast<double>(l.ratios.size());

  double value = 0.0;
  std::vector<double> dw(w.ratios.size(), 0.0);
  std::vector<double> dl(l.ratios.size(), 0.0);

  if (loss == PreferenceLoss::dpo || loss == PreferenceLoss::mdpo) {
    const double z = config.beta * (w.mean - l.mean);
    value = softplus(-z);
    const double dz = -sigmoid(-z) * config.beta;
    for (double& d : dw) d = dz / kw;
    for (double& d : dl) d = -dz / kl;
  } else {
    const double h = w.mean - l.mean - config.ipo_target();
    value = h * h;
    for (double& d : dw) d = 2.0 * h / kw;
    for (double& d : dl) d = -2.0 * h / kl;
    if (loss == PreferenceLoss::mipo && config.variance_correction) {
      auto correct = [&value](const SideTerms& s, std::vector<double>& d) {
        const std::size_t k = s.ratios.size();
        if (k < 2) return;
        const double kk = static_cast<double>(k);
        value -= sample_variance(s) / kk;
        const double c = 2.0 / (kk * (kk - 1.0));
        for (std::size_t i = 0; i < k; ++i) d[i] -= c * (s.ratios[i] - s.mean);
      };
      correct(w, dw);
      correct(l, dl);
    }
  }

  if (nll_coeff > 0.0) {
    double nll = 0.0;
    for (double v : w.policy_log_probs) nll -= v;
    value += nll_coeff * (nll / kw);
    for (double& d : dw) d -= nll_coeff / kw;
  }

  if (!grad.empty() && scale != 0.0) {
    std::vector<TokenWeight> weights;
    for (std::size_t i = 0; i < dw.size(); ++i) push_response(weights, record.chosen.responses[i], scale * dw[i]);
    for (std::size_t i = 0; i < dl.size(); ++i) push_response(weights, record.rejected.responses[i], scale * dl[i]);
    policy.accumulate_gradient(record.prompt, lp, weights, grad);
  }
  return value;
}

ObjectiveValue evaluate_dense(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                              PreferenceLoss loss, const ObjectiveConfig& config, double nll_coeff) {
  ObjectiveValue out;
  out.gradient.assign(policy.parameter_count(), 0.0);
  out.loss = evaluate_record(policy, ref, record, loss, config, nll_coeff, 1.0, out.gradient);
  return out;
}

}  // namespace

double accumulate_sft(const Policy& policy, std::span<const SftExample> dataset, double scale,
                      std::span<double> grad) {
  if (dataset.empty()) throw ConfigError("sft dataset must be non-empty");
  double total_weight = 0.0;
  for (const SftExample& ex : dataset) {
    if (!(ex.weight >= 0.0) || !std::isfinite(ex.weight)) throw ConfigError("sft example weight must be >= 0");
    total_weight += ex.weight;
  }
  if (!(total_weight > 0.0)) throw ConfigError("sft dataset has zero total weight");

  // One log-softmax per distinct prompt.
  std::map<PromptKey, std::size_t> slot;
  std::vector<const IntervalPrompt*> prompts;
  std::vector<std::vector<double>> log_dists;
  std::vector<std::vector<TokenWeight>> weights;
  double loss = 0.0;
  for (const SftExample& ex : dataset) {
    auto [it, inserted] = slot.emplace(key_of(ex.prompt), prompts.size());
    if (inserted) {
      prompts.push_back(&ex.prompt);
      log_dists.push_back(policy.log_distribution(ex.prompt));
      weights.emplace_back();
    }
    const std::size_t s = it->second;
    const double w = ex.weight / total_weight;
    loss -= w * response_log_prob(log_dists[s], ex.response);
    push_response(weights[s], ex.response, -scale * w);
  }
  if (!grad.empty() && scale != 0.0) {
    for (std::size_t s = 0; s < prompts.size(); ++s) {
      policy.accumulate_gradient(*prompts[s], log_dists[s], weights[s], grad);
    }
  }
  return loss;
}

ObjectiveValue sft_nll(const Policy& policy, std::span<const SftExample> dataset) {
  ObjectiveValue out;
  out.gradient.assign(policy.parameter_count(), 0.0);
  out.loss = accumulate_sft(policy, dataset, 1.0, out.gradient);
  return out;
}

double implicit_reward(const Policy& policy, const PolicySnapshot& ref, const IntervalPrompt& prompt,
                       const Response& response, double beta) {
  return beta * (log_prob(policy, prompt, response) - log_prob(ref.policy(), prompt, response));
}

double group_log_ratio(const Policy& policy, const PolicySnapshot& ref, const IntervalPrompt& prompt,
                       const SampleGroup& group) {
  const std::vector<double> lp = policy.log_distribution(prompt);
  const std::vector<double> lr = ref.policy().log_distribution(prompt);
  return side_terms(lp, lr, group, "sample").mean;
}

ObjectiveValue dpo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                        const ObjectiveConfig& config) {
  return evaluate_dense(policy, ref, record, PreferenceLoss::dpo, config, 0.0);
}

ObjectiveValue ipo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                        const ObjectiveConfig& config) {
  return evaluate_dense(policy, ref, record, PreferenceLoss::ipo, config, 0.0);
}

ObjectiveValue mdpo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                         const ObjectiveConfig& config) {
  return evaluate_dense(policy, ref, record, PreferenceLoss::mdpo, config, 0.0);
}

ObjectiveValue mipo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                         const ObjectiveConfig& config) {
  return evaluate_dense(policy, ref, record, PreferenceLoss::mipo, config, 0.0);
}

ObjectiveValue composite_objective(const Policy& policy, const PolicySnapshot& ref,
                                   const PreferenceRecord& record, PreferenceLoss loss,
                                   const ObjectiveConfig& config) {
  return evaluate_dense(policy, ref, record, loss, config, config.nll_coeff);
}

double accumulate_composite(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                            PreferenceLoss loss, const ObjectiveConfig& config, double scale,
                            std::span<double> grad) {
  return evaluate_record(policy, ref, record, loss, config, config.nll_coeff, scale, grad);
}

double mdpo_diffusion_loss(const DiffusionBatchStub& batch) {
  if (batch.chosen.empty() || batch.rejected.empty()) throw ConfigError("diffusion groups must be non-empty");
  if (batch.timesteps <= 0) throw ConfigError("timesteps must be positive");
  if (!(batch.omega_lambda_t > 0.0)) throw ConfigError("omega_lambda_t must be positive");
  if (!(batch.beta > 0.0)) throw ConfigError("beta must be positive");
  auto mean_cost = [](const std::vector<DiffusionSample>& group) {
    double sum = 0.0;
    for (const DiffusionSample& s : group) {
      if (!(s.sq_err_policy >= 0.0) || !(s.sq_err_ref >= 0.0)) {
        throw ConfigError("squared errors must be non-negative");
      }
      sum += s.sq_err_policy - s.sq_err_ref;
    }
    return sum / static_cast<double>(group.size());
  };
  const double z = -batch.beta * static_cast<double>(batch.timesteps) * batch.omega_lambda_t *
                   (mean_cost(batch.chosen) - mean_cost(batch.rejected));
  return softplus(-z);
}

}  // namespace multipref
