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

#include "alirector/correction/train.hpp"

#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "alirector/common/error.hpp"
#include "alirector/common/log.hpp"
#include "alirector/common/rng.hpp"
#include "alirector/correction/optimizer.hpp"

namespace alirector::correction {
namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kDropoutStream = 0x64726f70ULL;

std::string key_for(const KeyValues& kv, const std::string& section, const std::string& name) {
  const std::string own = section + "." + name;
  if (kv.contains(own)) return own;
  return "train." + name;
}

}  // namespace

void TrainConfig::validate(std::size_t total_steps) const {
  if (batch_size == 0 || max_epochs == 0) {
    throw ConfigError("train.batch_size and train.max_epochs must be positive");
  }
  if (!(learning_rate > 0.0) || end_learning_rate < 0.0 || !(decay_power > 0.0)) {
    throw ConfigError("train learning rates and decay power must be positive");
  }
  if (total_steps > 0 && warmup_steps >= total_steps) {
    throw ConfigError("train.warmup_steps (" + std::to_string(warmup_steps) +
                      ") must be below the total step count (" + std::to_string(total_steps) +
                      ")");
  }
}

TrainConfig TrainConfig::from_kv(const KeyValues& kv, const std::string& section) {
  TrainConfig c;
  auto get_size = [&](const char* name, std::size_t fallback) {
    const long v = kv.get_long(key_for(kv, section, name), static_cast<long>(fallback));
    if (v < 0) throw ConfigError(section + "." + name + " must be non-negative");
    return static_cast<std::size_t>(v);
  };
  c.batch_size = get_size("batch_size", c.batch_size);
  c.max_epochs = get_size("max_epochs", c.max_epochs);
  c.warmup_steps = get_size("warmup_steps", c.warmup_steps);
  c.patience = get_size("patience", c.patience);
  c.probe_size = get_size("probe_size", c.probe_size);
  c.learning_rate = kv.get_double(key_for(kv, section, "learning_rate"), c.learning_rate);
  c.end_learning_rate =
      kv.get_double(key_for(kv, section, "end_learning_rate"), c.end_learning_rate);
  c.decay_power = kv.get_double(key_for(kv, section, "decay_power"), c.decay_power);
  c.clip_norm = kv.get_double(key_for(kv, section, "clip_norm"), c.clip_norm);
  c.dropout = kv.get_bool(key_for(kv, section, "dropout"), c.dropout);
  c.seed = static_cast<std::uint64_t>(kv.get_long("seed", 1));
  c.validate(0);
  return c;
}

std::string EpochMetrics::to_json() const {
  nlohmann::ordered_json j{{"epoch", epoch},
                           {"lr", learning_rate},
                           {"train_loss", train.total},
                           {"gec", train.gec},
                           {"kd_forward", train.kd_forward},
                           {"kd_reverse", train.kd_reverse},
                           {"kd", train.kd},
                           {"dev_P", dev_precision},
                           {"dev_R", dev_recall},
                           {"dev_F05", dev_f05},
                           {"probe_loss", probe_loss},
                           {"probe_kl", probe_kl},
                           {"best", best}};
  return j.dump();
}

LossBreakdown probe_loss(const model::Transformer& model, const model::ModelParams& params,
                         const TrainingTask& task, std::size_t count) {
  count = std::min(count, task.examples.size());
  LossBreakdown sum;
  for (std::size_t i = 0; i < count; ++i) {
    const model::SequenceInput& input = task.examples[i];
    const Matrix logits = model.forward(params, input);
    Matrix dlogits;
    LossBreakdown parts;
    parts.gec = gec_loss(logits, target_tokens(input), &dlogits);
    parts.total = parts.gec;
    if (task.auxiliary) task.auxiliary(i, logits, dlogits, parts);
    sum += parts;
  }
  return count == 0 ? sum : sum.scaled(1.0 / static_cast<double>(count));
}

TrainResult train(const model::Transformer& model, model::ModelParams init,
                  const TrainingTask& task, const TrainConfig& config) {
  const std::size_t n = task.examples.size();
  if (n == 0) throw ContractError("training needs at least one example");
  config.validate(0);
  const std::size_t steps_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::size_t total_steps = steps_per_epoch * config.max_epochs;
  config.validate(total_steps);

  LearningRateSchedule schedule{config.learning_rate, config.end_learning_rate,
                                config.warmup_steps, total_steps, config.decay_power};
  model::ModelParams params = std::move(init);
  Adam adam(params.values().size());
  model::Gradients grads(params);
  Rng shuffle_rng(derive_seed(config.seed, kShuffleStream));
  Rng dropout_rng(derive_seed(config.seed, kDropoutStream));
  Rng* dropout = config.dropout ? &dropout_rng : nullptr;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result{params, {}, 0};
  double best_f05 = -1.0;
  std::size_t stale = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(uniform_int(shuffle_rng, 0, static_cast<std::int64_t>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }
    LossBreakdown epoch_sum;
    double lr = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      grads.zero();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t index = order[b];
        const model::SequenceInput& input = task.examples[index];
        model::Tape tape;
        const Matrix logits = model.forward(params, input, tape, dropout);
        Matrix dlogits;
        LossBreakdown parts;
        parts.gec = gec_loss(logits, target_tokens(input), &dlogits);
        parts.total = parts.gec;
        if (task.auxiliary) task.auxiliary(index, logits, dlogits, parts);
        if (!std::isfinite(parts.total)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                                std::to_string(step + 1) + ", example " + std::to_string(index));
        }
        epoch_sum += parts;
        model.backward(params, tape, dlogits, grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grads.values()) g *= scale;
      clip_gradients(grads.values(), config.clip_norm);
      ++step;
      lr = schedule.at(step);
      adam.step(params.values(), grads.values(), lr);
    }
    if (!params.all_finite()) {
      throw DivergenceError("non-finite weights after epoch " + std::to_string(epoch));
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.learning_rate = lr;
    m.train = epoch_sum.scaled(1.0 / static_cast<double>(n));
    if (task.evaluate_dev) {
      const eval::EvalReport dev = task.evaluate_dev(params);
      m.dev_precision = dev.precision;
      m.dev_recall = dev.recall;
      m.dev_f05 = dev.f05;
    }
    const LossBreakdown probe = probe_loss(model, params, task, config.probe_size);
    m.probe_loss = probe.total;
    m.probe_kl = probe.kd;
    // Without a dev evaluator the latest weights are kept.
    if (!task.evaluate_dev || m.dev_f05 > best_f05) {
      best_f05 = m.dev_f05;
      result.best = params;
      result.best_epoch = epoch;
      m.best = true;
      stale = 0;
    } else {
      ++stale;
    }
    logger().info("epoch {} loss {:.4f} dev P {:.2f} R {:.2f} F0.5 {:.2f}{}", epoch, m.train.total,
                   m.dev_precision, m.dev_recall, m.dev_f05, m.best ? " *" : "");
    result.history.push_back(m);
    if (task.on_epoch) task.on_epoch(m);
    if (config.patience > 0 && stale >= config.patience) break;
  }
  return result;
}

}  // namespace alirector::correction
