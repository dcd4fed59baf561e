#pragma once

#include <optional>
#include <string_view>

#include "alirector/common/types.hpp"
#include "alirector/model/transformer.hpp"

namespace alirector::model {

// Token sequence fed to a decoder-only model. Only positions inside
// `target_span` carry loss.
struct RenderedPrompt {
  Tokens tokens;
  Span target_span;

  bool operator==(const RenderedPrompt&) const = default;
};

enum class Direction { kForward, kReverse };

std::string_view to_string(Direction direction);

enum class Task { kCorrect, kAlign };

// Known template ids are "plain" and "sectioned"; anything else throws
// ConfigError.
bool template_exists(std::string_view template_id);

// [INSTR_GEC, INPUT, x..., RESPONSE, y..., EOS]. With no target the prompt
// stops after RESPONSE and the span is empty at the end.
RenderedPrompt render_gec_prompt(std::string_view template_id, const Tokens& source,
                                 const std::optional<Tokens>& target);

// Same layout under INSTR_ALIGN, with `source` SEP `prediction` in the input
// field (swapped for the reverse direction).
RenderedPrompt render_align_prompt(std::string_view template_id, const Tokens& source,
                                   const Tokens& prediction, const std::optional<Tokens>& target,
                                   Direction direction);

// first SEP second.
Tokens join_pair(const Tokens& first, const Tokens& second);

// Model input for either architecture. `input` is the source sentence for
// kCorrect and an already joined pair for kAlign. Without a target the
// result is a decoding prefix: [BOS] for the encoder-decoder, the prompt up
// to RESPONSE for the decoder-only model.
SequenceInput make_sequence_input(const ModelConfig& config, Task task, const Tokens& input,
                                  const std::optional<Tokens>& target);

}  // namespace alirector::model
