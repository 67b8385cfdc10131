#include "multipref/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <string>

#include "multipref/csv.hpp"
#include "multipref/error.hpp"
#include "multipref/random.hpp"

namespace multipref {

std::string_view to_string(Optimizer optimizer) {
  return optimizer == Optimizer::sgd ? "sgd" : "adam";
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::sft:
      return "sft";
    case Method::dpo:
      return "dpo";
    case Method::ipo:
      return "ipo";
    case Method::mdpo:
      return "mdpo";
    case Method::mipo:
      return "mipo";
  }
  return "unknown";
}

Optimizer optimizer_from_string(std::string_view name) {
  if (name == "sgd") return Optimizer::sgd;
  if (name == "adam") return Optimizer::adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "'");
}

Method method_from_string(std::string_view name) {
  if (name == "sft") return Method::sft;
  if (name == "dpo") return Method::dpo;
  if (name == "ipo") return Method::ipo;
  if (name == "mdpo") return Method::mdpo;
  if (name == "mipo") return Method::mipo;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

PreferenceLoss preference_loss_of(Method method) {
  switch (method) {
    case Method::dpo:
      return PreferenceLoss::dpo;
    case Method::ipo:
      return PreferenceLoss::ipo;
    case Method::mdpo:
      return PreferenceLoss::mdpo;
    case Method::mipo:
      return PreferenceLoss::mipo;
    case Method::sft:
      break;
  }
  throw ConfigError("sft is not a preference objective");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be >= 0");
  if (steps < 1) throw ConfigError("steps must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
  objective_config.validate();
}

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const TrainConfig& config) {
  if (grad.size() != params.size()) {
    throw ConfigError("gradient size " + std::to_string(grad.size()) + " != parameter count " +
                      std::to_string(params.size()));
  }
  if (state.first_moment.empty() && state.second_moment.empty()) {
    state.first_moment.assign(params.size(), 0.0);
    state.second_moment.assign(params.size(), 0.0);
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw ConfigError("adam state does not match parameter count");
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const double lr = config.learning_rate;
  const double eps = config.adam_epsilon;
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m[i] = b1 * m[i] + (1.0 - b1) * g;
    v[i] = b2 * v[i] + (1.0 - b2) * g * g;
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void sgd_step(std::span<double> params, std::span<const double> grad, const TrainConfig& config) {
  if (grad.size() != params.size()) throw ConfigError("gradient size does not match parameter count");
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= config.learning_rate * grad[i];
}

namespace {

// Without-replacement batches, reshuffled every epoch.
class BatchSampler {
 public:
  BatchSampler(std::size_t size, std::uint64_t seed) : order_(size), rng_(make_rng(seed, {0x5eed})) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    reshuffle();
  }

  std::vector<std::size_t> next(std::size_t batch_size) {
    std::vector<std::size_t> batch;
    batch.reserve(batch_size);
    while (batch.size() < batch_size) {
      if (cursor_ == order_.size()) reshuffle();
      batch.push_back(order_[cursor_++]);
      if (batch.size() == order_.size()) break;
    }
    return batch;
  }

 private:
  void reshuffle() {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }

  std::vector<std::size_t> order_;
  Rng rng_;
  std::size_t cursor_ = 0;
};

template <typename Evaluate>
TrainHistory run_loop(Policy& policy, std::size_t dataset_size, const TrainConfig& config, Evaluate&& evaluate) {
  BatchSampler sampler(dataset_size, config.seed);
  AdamState adam;
  std::vector<double> grad(policy.parameter_count());
  TrainHistory history;
  history.steps.reserve(static_cast<std::size_t>(config.steps));
  for (int step = 1; step <= config.steps; ++step) {
    const std::vector<std::size_t> batch = sampler.next(static_cast<std::size_t>(config.batch_size));
    std::fill(grad.begin(), grad.end(), 0.0);
    const double loss = evaluate(batch, std::span<double>(grad));
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    const double norm = std::sqrt(sq);
    if (!std::isfinite(loss) || !std::isfinite(norm)) {
      throw NumericalError("non-finite " + std::string(std::isfinite(loss) ? "gradient" : "loss") + " at step " +
                           std::to_string(step) + " (" + std::string(to_string(config.objective)) + ")");
    }
    history.steps.push_back({step, loss, norm});
    if (config.learning_rate == 0.0) continue;
    if (config.optimizer == Optimizer::adam) {
      adam_step(policy.mutable_parameters(), grad, adam, config);
    } else {
      sgd_step(policy.mutable_parameters(), grad, config);
    }
  }
  history.final_policy = PolicySnapshot::capture(policy);
  return history;
}

}  // namespace

TrainHistory train(Policy& policy, std::span<const SftExample> dataset, const TrainConfig& config) {
  config.validate();
  if (config.objective != Method::sft) {
    throw ConfigError("objective " + std::string(to_string(config.objective)) + " needs preference records");
  }
  if (dataset.empty()) throw ConfigError("training dataset must be non-empty");
  std::vector<SftExample> batch_examples;
  return run_loop(policy, dataset.size(), config, [&](const std::vector<std::size_t>& batch, std::span<double> grad) {
    batch_examples.clear();
    for (std::size_t i : batch) batch_examples.push_back(dataset[i]);
    return accumulate_sft(policy, batch_examples, 1.0, grad);
  });
}

TrainHistory train(Policy& policy, const PolicySnapshot& ref, std::span<const PreferenceRecord> dataset,
                   const TrainConfig& config) {
  config.validate();
  if (config.objective == Method::sft) throw ConfigError("sft needs (prompt, response) examples");
  if (dataset.empty()) throw ConfigError("training dataset must be non-empty");
  const PreferenceLoss loss_kind = preference_loss_of(config.objective);
  if (loss_kind == PreferenceLoss::dpo || loss_kind == PreferenceLoss::ipo) {
    for (const PreferenceRecord& r : dataset) {
      if (r.chosen.size() != 1 || r.rejected.size() != 1) {
        throw ConfigError(std::string(to_string(config.objective)) +
                          " needs k=1 records; use the multi-sample method for groups");
      }
    }
  }
  if (ref.policy().parameter_count() != policy.parameter_count() || ref.policy().kind() != policy.kind()) {
    throw ConfigError("reference snapshot does not match the policy structure");
  }
  return run_loop(policy, dataset.size(), config, [&](const std::vector<std::size_t>& batch, std::span<double> grad) {
    const double scale = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    for (std::size_t i : batch) {
      loss += accumulate_composite(policy, ref, dataset[i], loss_kind, config.objective_config, scale, grad);
    }
    return loss * scale;
  });
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  csv::row(out, "step", "loss", "grad_norm");
  for (const StepRecord& s : history.steps) csv::row(out, s.step, s.loss, s.grad_norm);
}

}  // namespace multipref
