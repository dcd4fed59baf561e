#include "alirector/correction/loss.hpp"

#include <cmath>
#include <string>

#include "alirector/common/error.hpp"

namespace alirector::correction {

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& other) {
  gec += other.gec;
  kd_forward += other.kd_forward;
  kd_reverse += other.kd_reverse;
  kd += other.kd;
  total += other.total;
  return *this;
}

LossBreakdown LossBreakdown::scaled(double factor) const {
  return {gec * factor, kd_forward * factor, kd_reverse * factor, kd * factor, total * factor};
}

double gec_loss(const Matrix& logits, const Tokens& gold, Matrix* dlogits) {
  if (static_cast<std::size_t>(logits.rows()) != gold.size()) {
    throw ContractError("gec_loss: " + std::to_string(logits.rows()) + " logit rows for " +
                        std::to_string(gold.size()) + " target tokens");
  }
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  double loss = 0.0;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const Token y = gold[static_cast<std::size_t>(t)];
    if (y < 0 || y >= logits.cols()) throw ContractError("gec_loss: gold id out of range");
    const auto row = logits.row(t);
    const double top = row.maxCoeff();
    const double sum = (row.array() - top).exp().sum();
    const double lse = top + std::log(sum);
    loss += lse - row(y);
    if (dlogits) {
      dlogits->row(t) = ((row.array() - lse).exp()).matrix();
      (*dlogits)(t, y) -= 1.0;
    }
  }
  return loss;
}

double gec_loss_mean(const Matrix& logits, const Tokens& gold) {
  if (gold.empty()) return 0.0;
  return gec_loss(logits, gold) / static_cast<double>(gold.size());
}

Tokens target_tokens(const model::SequenceInput& input) {
  return Tokens(input.decoder.begin() + static_cast<std::ptrdiff_t>(input.target.begin),
                input.decoder.begin() + static_cast<std::ptrdiff_t>(input.target.end));
}

}  // namespace alirector::correction
