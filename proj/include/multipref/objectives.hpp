#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "multipref/policy.hpp"
#include "multipref/types.hpp"

namespace multipref {

struct ObjectiveConfig {
  double beta = 0.01;      // KL coefficient of the implicit reward
  double tau = 0.1;        // IPO regularizer; the margin target is 1 / (2 tau)
  double nll_coeff = 0.0;  // weight of the chosen-group NLL anchor
  bool variance_correction = true;

  void validate() const;
  double ipo_target() const { return 0.5 / tau; }
};

struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> gradient;
};

enum class PreferenceLoss { dpo, ipo, mdpo, mipo };

std::string_view to_string(PreferenceLoss loss);
PreferenceLoss preference_loss_from_string(std::string_view name);

// Defaults used for the random-number experiments: beta 0.01 for (m)DPO,
// tau 0.1 for (m)IPO, NLL anchor 0.001 for (m)DPO and 0.1 for (m)IPO.
ObjectiveConfig default_objective_config(PreferenceLoss loss);

/// Numerically stable log(1 + e^x).
double softplus(double x);
double sigmoid(double x);

ObjectiveValue sft_nll(const Policy& policy, std::span<const SftExample> dataset);

double implicit_reward(const Policy& policy, const PolicySnapshot& ref, const IntervalPrompt& prompt,
                       const Response& response, double beta);

/// Mean over the group of log(pi(y|x) / pi_ref(y|x)).
double group_log_ratio(const Policy& policy, const PolicySnapshot& ref, const IntervalPrompt& prompt,
                       const SampleGroup& group);

ObjectiveValue dpo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                        const ObjectiveConfig& config);
ObjectiveValue ipo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                        const ObjectiveConfig& config);

/// -log sigmoid(beta * (mean chosen log-ratio - mean rejected log-ratio)).
ObjectiveValue mdpo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                         const ObjectiveConfig& config);

/// (mean chosen log-ratio - mean rejected log-ratio - 1/(2 tau))^2, minus
/// svar_w/k_w + svar_l/k_l when variance_correction is set. The sample
/// variances divide by (k - 1) and are 0 for single-response groups.
ObjectiveValue mipo_loss(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                         const ObjectiveConfig& config);

/// Preference loss plus nll_coeff * mean NLL of the chosen responses.
ObjectiveValue composite_objective(const Policy& policy, const PolicySnapshot& ref,
                                   const PreferenceRecord& record, PreferenceLoss loss,
                                   const ObjectiveConfig& config);

// Accumulating forms used by the trainer: add scale * gradient into `grad`
// and return the unscaled loss.
double accumulate_sft(const Policy& policy, std::span<const SftExample> dataset, double scale,
                      std::span<double> grad);
double accumulate_composite(const Policy& policy, const PolicySnapshot& ref, const PreferenceRecord& record,
                            PreferenceLoss loss, const ObjectiveConfig& config, double scale,
                            std::span<double> grad);

// Diffusion form of mDPO over precomputed squared denoising errors. The per
// sample cost is r = ||eps - eps_theta||^2 - ||eps - eps_ref||^2.
struct DiffusionSample {
  double sq_err_policy = 0.0;
  double sq_err_ref = 0.0;
};

struct DiffusionBatchStub {
  std::vector<DiffusionSample> chosen;
  std::vector<DiffusionSample> rejected;
  int timesteps = 1000;         // T
  double omega_lambda_t = 1.0;  // timestep weighting
  double beta = 1.0;
};

/// -log sigmoid(-beta * T * omega * (mean_w r - mean_l r)).
double mdpo_diffusion_loss(const DiffusionBatchStub& batch);

}  // namespace multipref
