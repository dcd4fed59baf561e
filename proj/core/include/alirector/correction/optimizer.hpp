#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace alirector::correction {

// Linear warmup to `peak`, then polynomial decay to `end` at `total_steps`.
struct LearningRateSchedule {
  double peak = 1e-3;
  double end = 0.0;
  std::size_t warmup_steps = 0;
  std::size_t total_steps = 1;
  double power = 1.0;

  // `step` counts from 1.
  double at(std::size_t step) const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t size, AdamConfig config = {});

  void step(std::span<double> params, std::span<const double> grads, double learning_rate);
  std::size_t steps() const { return steps_; }

 private:
  AdamConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  std::size_t steps_ = 0;
};

// Rescales `grads` to at most `max_norm` (no-op when max_norm <= 0) and
// returns the norm before clipping.
double clip_gradients(std::span<double> grads, double max_norm);

}  // namespace alirector::correction
