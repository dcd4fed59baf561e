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

#include "alirector/alignment/align.hpp"

#include "alirector/common/error.hpp"
#include "alirector/correction/predict.hpp"

namespace alirector::alignment {
namespace {

void check_role(const model::ModelParams& params, model::ModelRole expected, const char* what) {
  if (params.role() != expected) {
    throw ContractError(std::string(what) + " must have role " +
                        std::string(model::to_string(expected)) + ", got " +
                        std::string(model::to_string(params.role())));
  }
}

model::ModelRole role_for(Direction direction) {
  return direction == Direction::kForward ? model::ModelRole::kForwardAligner
                                          : model::ModelRole::kReverseAligner;
}

}  // namespace

std::string_view to_string(AblationMode mode) {
  switch (mode) {
    case AblationMode::kNone:
      return "none";
    case AblationMode::kDiscSource:
      return "disc_source";
    case AblationMode::kDiscPredict:
      return "disc_predict";
  }
  return "none";
}

std::optional<AblationMode> parse_ablation(std::string_view name) {
  for (AblationMode m : {AblationMode::kNone, AblationMode::kDiscSource, AblationMode::kDiscPredict}) {
    if (name == to_string(m)) return m;
  }
  return std::nullopt;
}

AlignmentInput build_alignment_input(const model::ModelConfig& config, const Tokens& source,
                                     const Tokens& prediction, Direction direction,
                                     AblationMode ablation, const std::optional<Tokens>& target) {
  if (source.empty()) throw ContractError("alignment input needs a non-empty source");
  const Tokens& first_slot = ablation == AblationMode::kDiscSource ? prediction : source;
  const Tokens& second_slot = ablation == AblationMode::kDiscPredict ? source : prediction;
  AlignmentInput out;
  out.direction = direction;
  out.ablation = ablation;
  out.pair = direction == Direction::kForward ? model::join_pair(first_slot, second_slot)
                                              : model::join_pair(second_slot, first_slot);
  out.sequence = model::make_sequence_input(config, model::Task::kAlign, out.pair, target);
  const std::size_t longest = std::max(out.sequence.encoder ? out.sequence.encoder->size() : 0,
                                       out.sequence.decoder.size());
  if (longest > config.max_positions) {
    throw CapacityError("alignment input of length " + std::to_string(longest) +
                        " exceeds max_positions " + std::to_string(config.max_positions));
  }
  return out;
}

model::DecodeOptions initial_decode_options(const model::ModelConfig& config, const Tokens& source,
                                            const model::DecodeOptions& options) {
  // Longest first-pass output that still fits in every aligner input built
  // from it, including the variants that repeat one sentence in both slots.
  // Decoder-only models also need room for the answer.
  auto room_for = [&](const Tokens& first) {
    const model::SequenceInput bare = model::make_sequence_input(
        config, model::Task::kAlign, model::join_pair(first, {}), std::nullopt);
    const std::size_t used = bare.encoder ? bare.encoder->size() : bare.decoder.size();
    std::size_t room = config.max_positions > used ? config.max_positions - used : 0;
    return bare.encoder ? room : room / 2;
  };
  const std::size_t room = std::min(room_for(source), room_for({}) / 2);
  model::DecodeOptions out = options;
  const std::size_t budget = std::max<std::size_t>(room, 1);
  out.max_len = out.max_len > 0 ? std::min(out.max_len, budget) : budget;
  return out;
}

Tokens initial_correction(const model::Transformer& model, const model::ModelParams& corrector,
                          const Tokens& source, const model::DecodeOptions& options) {
  const auto prefix =
      model::make_sequence_input(model.config(), model::Task::kCorrect, source, std::nullopt);
  return model::decode(model, corrector, prefix,
                       initial_decode_options(model.config(), source, options))
      .tokens;
}

std::vector<AlignmentExample> build_alignment_triples(const model::Transformer& model,
                                                      const model::ModelParams& corrector,
                                                      const std::vector<Tokens>& sources,
                                                      const std::vector<Tokens>& targets,
                                                      const model::DecodeOptions& options) {
  if (sources.size() != targets.size()) {
    throw ContractError("build_alignment_triples: sources and targets differ in length");
  }
  check_role(corrector, model::ModelRole::kCorrector, "triple builder");
  std::vector<AlignmentExample> out;
  out.reserve(sources.size());
  for (std::size_t i = 0; i < sources.size(); ++i) {
    out.push_back({sources[i], initial_correction(model, corrector, sources[i], options),
                   targets[i]});
  }
  return out;
}

std::vector<model::SequenceInput> alignment_inputs(const model::ModelConfig& config,
                                                   const std::vector<AlignmentExample>& triples,
                                                   Direction direction, AblationMode ablation) {
  std::vector<model::SequenceInput> out;
  out.reserve(triples.size());
  for (const AlignmentExample& t : triples) {
    out.push_back(
        build_alignment_input(config, t.source, t.prediction, direction, ablation, t.target)
            .sequence);
  }
  return out;
}

std::vector<Tokens> align_corpus(const model::Transformer& model, const model::ModelParams& aligner,
                                 const std::vector<AlignmentExample>& triples, Direction direction,
                                 AblationMode ablation, const model::DecodeOptions& options) {
  std::vector<Tokens> out;
  out.reserve(triples.size());
  for (const AlignmentExample& t : triples) {
    const AlignmentInput input =
        build_alignment_input(model.config(), t.source, t.prediction, direction, ablation);
    out.push_back(model::decode(model, aligner, input.sequence, options).tokens);
  }
  return out;
}

correction::TrainResult train_alignment(const model::Transformer& model, model::ModelParams init,
                                        const std::vector<AlignmentExample>& triples,
                                        const std::vector<AlignmentExample>& dev,
                                        Direction direction, AblationMode ablation,
                                        const correction::TrainConfig& config,
                                        const model::DecodeOptions& dev_decode,
                                        std::function<void(const correction::EpochMetrics&)> on_epoch) {
  init.set_role(role_for(direction));
  correction::TrainingTask task;
  task.examples = alignment_inputs(model.config(), triples, direction, ablation);
  std::vector<Tokens> dev_sources;
  std::vector<Tokens> dev_targets;
  for (const AlignmentExample& t : dev) {
    dev_sources.push_back(t.source);
    dev_targets.push_back(t.target);
  }
  task.evaluate_dev = [&](const model::ModelParams& params) {
    return eval::score_corpus(dev_sources, dev_targets,
                              align_corpus(model, params, dev, direction, ablation, dev_decode));
  };
  task.on_epoch = std::move(on_epoch);
  return correction::train(model, std::move(init), task, config);
}

TwoStageOutput predict_and_align(const model::Transformer& model,
                                 const model::ModelParams& corrector,
                                 const model::ModelParams& aligner, const Tokens& source,
                                 const model::DecodeOptions& options) {
  check_role(aligner, model::ModelRole::kForwardAligner, "second-stage model");
  TwoStageOutput out;
  check_role(corrector, model::ModelRole::kCorrector, "first-stage model");
  out.initial = initial_correction(model, corrector, source, options);
  const AlignmentInput input = build_alignment_input(model.config(), source, out.initial,
                                                     Direction::kForward, AblationMode::kNone);
  out.final = model::decode(model, aligner, input.sequence, options).tokens;
  return out;
}

}  // namespace alirector::alignment
