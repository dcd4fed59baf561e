#include "alirector/model/prompt.hpp"

#include <string>

#include "alirector/common/error.hpp"
#include "alirector/corpus/vocab.hpp"

namespace alirector::model {
namespace {

RenderedPrompt render(std::string_view template_id, Token instruction, const Tokens& input,
                      const std::optional<Tokens>& target) {
  if (!template_exists(template_id)) {
    throw ConfigError("unknown prompt template '" + std::string(template_id) + "'");
  }
  if (input.empty()) throw ContractError("prompt input must be non-empty");
  RenderedPrompt out;
  if (template_id == "sectioned") out.tokens.push_back(corpus::kFieldInstruction);
  out.tokens.push_back(instruction);
  out.tokens.push_back(corpus::kFieldInput);
  out.tokens.insert(out.tokens.end(), input.begin(), input.end());
  out.tokens.push_back(corpus::kFieldResponse);
  const std::size_t begin = out.tokens.size();
  if (target) {
    out.tokens.insert(out.tokens.end(), target->begin(), target->end());
    out.tokens.push_back(corpus::kEos);
  }
  out.target_span = {begin, out.tokens.size()};
  return out;
}

}  // namespace

std::string_view to_string(Direction direction) {
  return direction == Direction::kForward ? "forward" : "reverse";
}

bool template_exists(std::string_view template_id) {
  return template_id == "plain" || template_id == "sectioned";
}

RenderedPrompt render_gec_prompt(std::string_view template_id, const Tokens& source,
                                 const std::optional<Tokens>& target) {
  return render(template_id, corpus::kInstrGec, source, target);
}

RenderedPrompt render_align_prompt(std::string_view template_id, const Tokens& source,
                                   const Tokens& prediction, const std::optional<Tokens>& target,
                                   Direction direction) {
  if (source.empty()) throw ContractError("prompt input must be non-empty");
  const Tokens input = direction == Direction::kForward ? join_pair(source, prediction)
                                                        : join_pair(prediction, source);
  return render(template_id, corpus::kInstrAlign, input, target);
}

Tokens join_pair(const Tokens& first, const Tokens& second) {
  Tokens out;
  out.reserve(first.size() + second.size() + 1);
  out.insert(out.end(), first.begin(), first.end());
  out.push_back(corpus::kSep);
  out.insert(out.end(), second.begin(), second.end());
  return out;
}

SequenceInput make_sequence_input(const ModelConfig& config, Task task, const Tokens& input,
                                  const std::optional<Tokens>& target) {
  SequenceInput out;
  if (config.arch == Architecture::kEncoderDecoder) {
    if (input.empty()) throw ContractError("model input must be non-empty");
    out.encoder = input;
    out.decoder.push_back(corpus::kBos);
    if (target) {
      out.decoder.insert(out.decoder.end(), target->begin(), target->end());
      out.decoder.push_back(corpus::kEos);
    }
    out.target = {1, out.decoder.size()};
    return out;
  }
  const Token instruction = task == Task::kCorrect ? corpus::kInstrGec : corpus::kInstrAlign;
  RenderedPrompt prompt = render(config.prompt_template, instruction, input, target);
  out.decoder = std::move(prompt.tokens);
  out.target = prompt.target_span;
  return out;
}

}  // namespace alirector::model
