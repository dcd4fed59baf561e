#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "alirector/common/kv.hpp"
#include "alirector/correction/loss.hpp"
#include "alirector/eval/score.hpp"
#include "alirector/model/transformer.hpp"

namespace alirector::correction {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t max_epochs = 20;
  double learning_rate = 1e-3;
  double end_learning_rate = 0.0;
  double decay_power = 1.0;
  std::size_t warmup_steps = 100;
  std::uint64_t seed = 1;
  // Epochs without a dev F0.5 improvement before stopping; 0 disables.
  std::size_t patience = 3;
  double clip_norm = 1.0;
  std::size_t probe_size = 32;
  // Apply the model's dropout and Dropout-Src while training.
  bool dropout = true;

  // Throws ConfigError for non-positive sizes or rates and when warmup
  // covers every step of a `total_steps` run.
  void validate(std::size_t total_steps) const;

  // Reads `<section>.<key>`, falling back to `train.<key>`, then the
  // defaults. The seed falls back to the top-level `seed` key.
  static TrainConfig from_kv(const KeyValues& kv, const std::string& section = "train");
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double learning_rate = 0.0;
  LossBreakdown train;  // batch-mean of the per-example sums
  double dev_precision = 0.0;
  double dev_recall = 0.0;
  double dev_f05 = 0.0;
  double probe_loss = 0.0;
  double probe_kl = 0.0;
  bool best = false;

  std::string to_json() const;
};

// Extra loss term evaluated on the student logits of training example
// `index`. Implementations add their gradient to `dlogits` and fill the kd
// fields and `total` of `parts` (which arrives with gec and total set).
using AuxiliaryLoss = std::function<void(std::size_t index, const Matrix& logits,
                                         Matrix& dlogits, LossBreakdown& parts)>;

struct TrainingTask {
  std::vector<model::SequenceInput> examples;
  AuxiliaryLoss auxiliary;  // optional
  // Dev evaluation used for checkpoint selection.
  std::function<eval::EvalReport(const model::ModelParams&)> evaluate_dev;
  // Called after every epoch, e.g. to persist metrics or verify teachers.
  std::function<void(const EpochMetrics&)> on_epoch;
};

struct TrainResult {
  model::ModelParams best;
  std::vector<EpochMetrics> history;
  std::size_t best_epoch = 0;
};

// Mini-batch Adam with warmup and polynomial decay. The returned parameters
// are those of the epoch with the highest dev F0.5 (earliest on ties).
// Throws DivergenceError on a non-finite loss or weight.
TrainResult train(const model::Transformer& model, model::ModelParams init,
                  const TrainingTask& task, const TrainConfig& config);

// Mean per-example loss in inference mode over the first `count` examples.
LossBreakdown probe_loss(const model::Transformer& model, const model::ModelParams& params,
                         const TrainingTask& task, std::size_t count);

}  // namespace alirector::correction
