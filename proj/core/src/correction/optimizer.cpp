#include "alirector/correction/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "alirector/common/error.hpp"

namespace alirector::correction {

double LearningRateSchedule::at(std::size_t step) const {
  if (warmup_steps > 0 && step <= warmup_steps) {
    return peak * static_cast<double>(step) / static_cast<double>(warmup_steps);
  }
  if (step >= total_steps || total_steps <= warmup_steps) return end;
  const double remaining = static_cast<double>(total_steps - step) /
                           static_cast<double>(total_steps - warmup_steps);
  return end + (peak - end) * std::pow(remaining, power);
}

Adam::Adam(std::size_t size, AdamConfig config)
    : config_(config), first_(size, 0.0), second_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads,
                double learning_rate) {
  if (params.size() != first_.size() || grads.size() != first_.size()) {
    throw ContractError("Adam: parameter/gradient size mismatch");
  }
  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * g;
    second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * g * g;
    const double m = first_[i] / c1;
    const double v = second_[i] / c2;
    params[i] -= learning_rate * m / (std::sqrt(v) + config_.epsilon);
  }
}

double clip_gradients(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

}  // namespace alirector::correction
