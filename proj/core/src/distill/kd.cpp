// Copyright 2026 The Alirector Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "alirector/distill/kd.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"

namespace alirector::distill {
namespace {

constexpr double kStudentFloor = 1e-12;

// KL summed over rows; accumulates (p_s - p_t) / tau * weight into grad.
double kl_rows(const Matrix& teacher_logits, const Matrix& student_logits, double tau,
               double weight, Matrix* grad, bool& clamped) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < student_logits.rows(); ++t) {
    const RowVector pt = tempered_distribution(teacher_logits.row(t), tau);
    const RowVector ps = tempered_distribution(student_logits.row(t), tau);
    bool c = false;
    total += kl_div(pt, ps, &c);
    clamped = clamped || c;
    if (grad) grad->row(t) += weight / tau * (ps - pt);
  }
  return total;
}

}  // namespace

void DistillConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("distill.alpha must lie in [0, 1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("distill.beta must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("distill.tau must be > 0");
}

DistillConfig DistillConfig::from_kv(const KeyValues& kv) {
  DistillConfig c;
  c.alpha = kv.get_double("distill.alpha", c.alpha);
  c.beta = kv.get_double("distill.beta", c.beta);
  c.tau = kv.get_double("distill.tau", c.tau);
  c.validate();
  return c;
}

std::string DistillConfig::to_json() const {
  nlohmann::ordered_json j{{"alpha", alpha}, {"beta", beta}, {"tau", tau}};
  return j.dump();
}

RowVector tempered_distribution(const RowVector& logits, double tau) {
  if (!(tau > 0.0)) throw ContractError("tau must be positive");
  const RowVector scaled = logits / tau;
  const double top = scaled.maxCoeff();
  RowVector out = (scaled.array() - top).exp().matrix();
  out /= out.sum();
  return out;
}

double kl_div(const RowVector& teacher, const RowVector& student, bool* clamped) {
  if (teacher.size() != student.size()) throw ContractError("kl_div: size mismatch");
  double total = 0.0;
  bool hit = false;
  for (Eigen::Index i = 0; i < teacher.size(); ++i) {
    const double p = teacher(i);
    if (p <= 0.0) continue;
    double q = student(i);
    if (q < kStudentFloor) {
      q = kStudentFloor;
      hit = true;
    }
    total += p * (std::log(p) - std::log(q));
  }
  if (clamped) *clamped = hit;
  return total;
}

KdTerms kd_loss(const Matrix& forward_logits, const Matrix& reverse_logits,
                const Matrix& student_logits, const DistillConfig& config, Matrix* dstudent) {
  if (forward_logits.rows() != student_logits.rows() ||
      reverse_logits.rows() != student_logits.rows() ||
      forward_logits.cols() != student_logits.cols() ||
      reverse_logits.cols() != student_logits.cols()) {
    throw ContractError("kd_loss: teacher and student logits cover different positions");
  }
  KdTerms out;
  if (dstudent) dstudent->setZero(student_logits.rows(), student_logits.cols());
  out.forward = kl_rows(forward_logits, student_logits, config.tau, config.alpha, dstudent,
                        out.clamped);
  out.reverse = kl_rows(reverse_logits, student_logits, config.tau, 1.0 - config.alpha, dstudent,
                        out.clamped);
  out.kd = config.alpha * out.forward + (1.0 - config.alpha) * out.reverse;
  return out;
}

double total_loss(double gec, double kd, double beta) { return gec + beta * kd; }

}  // namespace alirector::distill
