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

#include "alirector/distill/student.hpp"

#include "alirector/common/error.hpp"
#include "alirector/correction/predict.hpp"

namespace alirector::distill {

TeacherBundle::TeacherBundle(model::ModelParams forward, model::ModelParams reverse)
    : forward_(std::move(forward)),
      reverse_(std::move(reverse)),
      forward_hash_(forward_.hash()),
      reverse_hash_(reverse_.hash()) {}

void TeacherBundle::verify() const {
  if (forward_.hash() != forward_hash_ || reverse_.hash() != reverse_hash_) {
    throw IntegrityError("teacher weights changed during student training");
  }
}

TeacherLogits compute_teacher_logits(const model::Transformer& model, const TeacherBundle& teachers,
                                     const std::vector<alignment::AlignmentExample>& triples,
                                     alignment::AblationMode ablation) {
  const bool shared = ablation != alignment::AblationMode::kNone;
  TeacherLogits out;
  out.forward.reserve(triples.size());
  out.reverse.reserve(triples.size());
  for (const auto& t : triples) {
    const auto fwd = alignment::build_alignment_input(model.config(), t.source, t.prediction,
                                                      model::Direction::kForward, ablation,
                                                      t.target);
    out.forward.push_back(model.forward(teachers.forward(), fwd.sequence));
    if (shared) {
      out.reverse.push_back(out.forward.back());
      continue;
    }
    const auto rev = alignment::build_alignment_input(model.config(), t.source, t.prediction,
                                                      model::Direction::kReverse, ablation,
                                                      t.target);
    out.reverse.push_back(model.forward(teachers.reverse(), rev.sequence));
  }
  return out;
}

correction::AuxiliaryLoss make_kd_loss(const TeacherLogits& teachers, const DistillConfig& config) {
  config.validate();
  return [&teachers, config](std::size_t index, const Matrix& logits, Matrix& dlogits,
                             correction::LossBreakdown& parts) {
    if (index >= teachers.forward.size() || index >= teachers.reverse.size()) {
      throw ContractError("no teacher logits for example " + std::to_string(index));
    }
    Matrix dkd;
    const KdTerms kd = kd_loss(teachers.forward[index], teachers.reverse[index], logits, config,
                               config.beta > 0.0 ? &dkd : nullptr);
    parts.kd_forward = kd.forward;
    parts.kd_reverse = kd.reverse;
    parts.kd = kd.kd;
    parts.total = total_loss(parts.gec, kd.kd, config.beta);
    if (config.beta > 0.0) dlogits += config.beta * dkd;
  };
}

correction::TrainResult train_alirector(const model::Transformer& model,
                                        model::ModelParams student_init, const StudentTask& task,
                                        const correction::TrainConfig& config) {
  if (task.triples == nullptr || task.triples->empty()) {
    throw ContractError("student training needs alignment triples");
  }
  const model::ModelRole init_role = student_init.role();
  if (init_role != model::ModelRole::kCorrector && init_role != model::ModelRole::kAlirectorStudent) {
    throw ContractError("the student starts from a correction model");
  }
  student_init.set_role(model::ModelRole::kAlirectorStudent);
  correction::TrainingTask train_task;
  for (const auto& t : *task.triples) {
    train_task.examples.push_back(
        model::make_sequence_input(model.config(), model::Task::kCorrect, t.source, t.target));
  }
  if (task.teacher_logits) {
    train_task.auxiliary = make_kd_loss(*task.teacher_logits, task.distill);
  }
  train_task.evaluate_dev = [&](const model::ModelParams& params) {
    return correction::evaluate_corrector(model, params, task.dev_sources, task.dev_targets,
                                          task.dev_decode);
  };
  train_task.on_epoch = [&](const correction::EpochMetrics& m) {
    if (task.teachers) task.teachers->verify();
    if (task.on_epoch) task.on_epoch(m);
  };
  correction::TrainResult result = correction::train(model, std::move(student_init), train_task, config);
  if (task.teachers) task.teachers->verify();
  return result;
}

}  // namespace alirector::distill
