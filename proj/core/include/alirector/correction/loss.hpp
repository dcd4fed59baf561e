#pragma once

#include "alirector/common/types.hpp"
#include "alirector/model/transformer.hpp"

namespace alirector::correction {

using model::Matrix;

// Per-example loss components. `total` is gec + beta * kd; the kd fields
// stay zero while distillation is off.
struct LossBreakdown {
  double gec = 0.0;
  double kd_forward = 0.0;
  double kd_reverse = 0.0;
  double kd = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& other);
  LossBreakdown scaled(double factor) const;
};

// Summed token negative log-likelihood of `gold` under row-wise softmax of
// `logits`. Writes d(loss)/d(logits) when `dlogits` is given. Throws
// ContractError when the row count differs from gold.size().
double gec_loss(const Matrix& logits, const Tokens& gold, Matrix* dlogits = nullptr);

// gec_loss divided by the number of target tokens (0 for an empty target).
double gec_loss_mean(const Matrix& logits, const Tokens& gold);

// The decoder tokens inside the target span.
Tokens target_tokens(const model::SequenceInput& input);

}  // namespace alirector::correction
