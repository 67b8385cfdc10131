#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "multipref/objectives.hpp"
#include "multipref/policy.hpp"
#include "multipref/types.hpp"

namespace multipref {

enum class Optimizer { sgd, adam };
enum class Method { sft, dpo, ipo, mdpo, mipo };

std::string_view to_string(Optimizer optimizer);
std::string_view to_string(Method method);
Optimizer optimizer_from_string(std::string_view name);
Method method_from_string(std::string_view name);
// Throws for Method::sft.
PreferenceLoss preference_loss_of(Method method);

struct TrainConfig {
  Optimizer optimizer = Optimizer::adam;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int steps = 500;
  int batch_size = 16;
  std::uint64_t seed = 0;
  Method objective = Method::mdpo;
  ObjectiveConfig objective_config;

  void validate() const;
};

struct StepRecord {
  int step = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
};

struct TrainHistory {
  std::vector<StepRecord> steps;
  std::optional<PolicySnapshot> final_policy;
};

struct AdamState {
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::int64_t step = 0;
};

// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config);
void sgd_step(std::span<double> params, std::span<const double> grad, const TrainConfig& config);

// SFT on (prompt, response) examples; config.objective must be sft.
TrainHistory train(Policy& policy, std::span<const SftExample> dataset, const TrainConfig& config);

// Preference training against a fixed reference. Each batch element is one
// whole record.
TrainHistory train(Policy& policy, const PolicySnapshot& ref, std::span<const PreferenceRecord> dataset,
                   const TrainConfig& config);

void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace multipref
