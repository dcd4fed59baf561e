#pragma once

#include <vector>

#include "alirector/alignment/align.hpp"
#include "alirector/distill/kd.hpp"

namespace alirector::distill {

// Frozen forward and reverse aligners. The hashes are taken at
// construction and checked by verify().
class TeacherBundle {
 public:
  TeacherBundle(model::ModelParams forward, model::ModelParams reverse);

  const model::ModelParams& forward() const { return forward_; }
  const model::ModelParams& reverse() const { return reverse_; }
  const std::string& forward_hash() const { return forward_hash_; }
  const std::string& reverse_hash() const { return reverse_hash_; }

  // Throws IntegrityError when either teacher's weights changed.
  void verify() const;

 private:
  model::ModelParams forward_;
  model::ModelParams reverse_;
  std::string forward_hash_;
  std::string reverse_hash_;
};

// Teacher logits over each triple's gold target, in inference mode.
struct TeacherLogits {
  std::vector<Matrix> forward;
  std::vector<Matrix> reverse;
};

// The teachers read the alignment inputs built under `ablation`. For the
// ablated inputs both slots hold the same sentence, so the forward teacher
// serves both directions and `reverse` mirrors `forward`.
TeacherLogits compute_teacher_logits(const model::Transformer& model, const TeacherBundle& teachers,
                                     const std::vector<alignment::AlignmentExample>& triples,
                                     alignment::AblationMode ablation);

// Distillation term for correction::train. The kd gradient is only added
// when beta > 0, so beta = 0 reproduces plain fine-tuning exactly.
correction::AuxiliaryLoss make_kd_loss(const TeacherLogits& teachers, const DistillConfig& config);

struct StudentTask {
  const std::vector<alignment::AlignmentExample>* triples = nullptr;
  const TeacherLogits* teacher_logits = nullptr;  // null: distillation off
  const TeacherBundle* teachers = nullptr;        // verified after every epoch
  DistillConfig distill;
  std::vector<Tokens> dev_sources;
  std::vector<Tokens> dev_targets;
  model::DecodeOptions dev_decode;
  std::function<void(const correction::EpochMetrics&)> on_epoch;
};

// Continues training the corrector on (source -> target) of the triples
// with the distillation term added. Returns the dev-best student.
correction::TrainResult train_alirector(const model::Transformer& model,
                                        model::ModelParams student_init, const StudentTask& task,
                                        const correction::TrainConfig& config);

}  // namespace alirector::distill
