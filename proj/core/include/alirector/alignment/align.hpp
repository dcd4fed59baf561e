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

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alirector/correction/train.hpp"
#include "alirector/model/decode.hpp"
#include "alirector/model/prompt.hpp"

namespace alirector::alignment {

using model::Direction;

// Input ablations: kDiscSource fills both slots with the initial correction,
// kDiscPredict with the source.
enum class AblationMode { kNone, kDiscSource, kDiscPredict };

std::string_view to_string(AblationMode mode);
std::optional<AblationMode> parse_ablation(std::string_view name);

struct AlignmentExample {
  Tokens source;
  Tokens prediction;
  Tokens target;

  bool operator==(const AlignmentExample&) const = default;
};

struct AlignmentInput {
  Direction direction = Direction::kForward;
  AblationMode ablation = AblationMode::kNone;
  Tokens pair;  // first SEP second
  model::SequenceInput sequence;
};

// Throws ContractError for an empty source and CapacityError when the
// constructed sequence exceeds max_positions.
AlignmentInput build_alignment_input(const model::ModelConfig& config, const Tokens& source,
                                     const Tokens& prediction, Direction direction,
                                     AblationMode ablation,
                                     const std::optional<Tokens>& target = std::nullopt);

// Decodes the corrector's output for every example. Order preserved.
// Caps the first-pass output so that the source and the initial correction
// together fit within max_positions.
model::DecodeOptions initial_decode_options(const model::ModelConfig& config, const Tokens& source,
                                            const model::DecodeOptions& options);

Tokens initial_correction(const model::Transformer& model, const model::ModelParams& corrector,
                          const Tokens& source, const model::DecodeOptions& options);

std::vector<AlignmentExample> build_alignment_triples(const model::Transformer& model,
                                                      const model::ModelParams& corrector,
                                                      const std::vector<Tokens>& sources,
                                                      const std::vector<Tokens>& targets,
                                                      const model::DecodeOptions& options);

// Teacher-forced training inputs for one aligner.
std::vector<model::SequenceInput> alignment_inputs(const model::ModelConfig& config,
                                                   const std::vector<AlignmentExample>& triples,
                                                   Direction direction, AblationMode ablation);

// Decodes the aligner's output for each triple's (source, prediction).
std::vector<Tokens> align_corpus(const model::Transformer& model, const model::ModelParams& aligner,
                                 const std::vector<AlignmentExample>& triples, Direction direction,
                                 AblationMode ablation, const model::DecodeOptions& options);

// Trains an aligner on `triples`, selecting on dev F0.5 of its own outputs
// for `dev`. The role of the result follows `direction`.
correction::TrainResult train_alignment(const model::Transformer& model, model::ModelParams init,
                                        const std::vector<AlignmentExample>& triples,
                                        const std::vector<AlignmentExample>& dev,
                                        Direction direction, AblationMode ablation,
                                        const correction::TrainConfig& config,
                                        const model::DecodeOptions& dev_decode,
                                        std::function<void(const correction::EpochMetrics&)> on_epoch = {});

struct TwoStageOutput {
  Tokens initial;
  Tokens final;
};

// Corrector output first, then the forward aligner on (source, output).
TwoStageOutput predict_and_align(const model::Transformer& model,
                                 const model::ModelParams& corrector,
                                 const model::ModelParams& aligner, const Tokens& source,
                                 const model::DecodeOptions& options);

}  // namespace alirector::alignment
