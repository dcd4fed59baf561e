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

#pragma once

#include <string>

#include "alirector/common/kv.hpp"
#include "alirector/correction/loss.hpp"
#include "alirector/model/params.hpp"

namespace alirector::distill {

using model::Matrix;
using model::RowVector;

struct DistillConfig {
  double alpha = 0.9;  // weight of the forward teacher
  double beta = 0.5;   // weight of the distillation term
  double tau = 1.0;

  // alpha in (0, 1), beta >= 0, tau > 0; ConfigError otherwise. Edge
  // values of alpha (0 or 1) are accepted for the one-teacher ablations.
  void validate() const;
  static DistillConfig from_kv(const KeyValues& kv);
  std::string to_json() const;
  bool operator==(const DistillConfig&) const = default;
};

// softmax(logits / tau), log-sum-exp stabilised.
RowVector tempered_distribution(const RowVector& logits, double tau);

// KL(teacher || student) with 0 ln 0 = 0. Student probabilities are clamped
// at 1e-12; `clamped` is set when that happens.
double kl_div(const RowVector& teacher, const RowVector& student, bool* clamped = nullptr);

struct KdTerms {
  double forward = 0.0;
  double reverse = 0.0;
  double kd = 0.0;
  bool clamped = false;
};

// Per-position KL summed over the target for each teacher, mixed by alpha.
// With `dstudent`, writes d(kd)/d(student_logits). Throws ContractError if
// the three tensors differ in shape.
KdTerms kd_loss(const Matrix& forward_logits, const Matrix& reverse_logits,
                const Matrix& student_logits, const DistillConfig& config,
                Matrix* dstudent = nullptr);

double total_loss(double gec, double kd, double beta);

}  // namespace alirector::distill
