#include "alirector/model/config.hpp"

#include "alirector/common/error.hpp"

namespace alirector::model {

std::string_view to_string(Architecture arch) {
  return arch == Architecture::kEncoderDecoder ? "encoder_decoder" : "decoder_only";
}

std::optional<Architecture> parse_architecture(std::string_view name) {
  if (name == "encoder_decoder" || name == "seq2seq") return Architecture::kEncoderDecoder;
  if (name == "decoder_only") return Architecture::kDecoderOnly;
  return std::nullopt;
}

std::string_view to_string(PositionEncoding encoding) {
  return encoding == PositionEncoding::kLearned ? "learned" : "sinusoidal";
}

std::optional<PositionEncoding> parse_position_encoding(std::string_view name) {
  if (name == "learned") return PositionEncoding::kLearned;
  if (name == "sinusoidal") return PositionEncoding::kSinusoidal;
  return std::nullopt;
}

std::string_view to_string(ModelRole role) {
  switch (role) {
    case ModelRole::kCorrector:
      return "corrector";
    case ModelRole::kForwardAligner:
      return "forward_aligner";
    case ModelRole::kReverseAligner:
      return "reverse_aligner";
    case ModelRole::kAlirectorStudent:
      return "alirector_student";
  }
  return "unknown";
}

std::optional<ModelRole> parse_role(std::string_view name) {
  for (ModelRole role : {ModelRole::kCorrector, ModelRole::kForwardAligner,
                         ModelRole::kReverseAligner, ModelRole::kAlirectorStudent}) {
    if (name == to_string(role)) return role;
  }
  return std::nullopt;
}

void ModelConfig::validate() const {
  if (layers == 0 || heads == 0 || hidden_dim == 0 || ffn_dim == 0 || vocab_size == 0 ||
      max_positions == 0) {
    throw ConfigError("model sizes must be positive");
  }
  if (hidden_dim % heads != 0) {
    throw ConfigError("model hidden_dim (" + std::to_string(hidden_dim) +
                      ") must be divisible by heads (" + std::to_string(heads) + ")");
  }
  if (!(dropout >= 0.0 && dropout < 1.0) || !(dropout_src >= 0.0 && dropout_src < 1.0)) {
    throw ConfigError("model dropout rates must be in [0, 1)");
  }
  if (!(init_std > 0.0)) throw ConfigError("model init_std must be positive");
}

ModelConfig ModelConfig::from_kv(const KeyValues& kv, std::size_t vocab_size) {
  ModelConfig c;
  const std::string arch = kv.get_string("model.arch", "encoder_decoder");
  const auto parsed = parse_architecture(arch);
  if (!parsed) throw ConfigError("unknown model.arch '" + arch + "'");
  c.arch = *parsed;
  c.layers = static_cast<std::size_t>(kv.get_long("model.layers", 2));
  c.heads = static_cast<std::size_t>(kv.get_long("model.heads", 4));
  c.hidden_dim = static_cast<std::size_t>(kv.get_long("model.hidden_dim", 64));
  c.ffn_dim = static_cast<std::size_t>(kv.get_long("model.ffn_dim", 128));
  c.max_positions = static_cast<std::size_t>(kv.get_long("model.max_positions", 64));
  c.dropout = kv.get_double("model.dropout", 0.1);
  c.dropout_src = kv.get_double("model.dropout_src", 0.2);
  c.init_std = kv.get_double("model.init_std", 0.02);
  const std::string positions = kv.get_string("model.positions", "sinusoidal");
  const auto encoding = parse_position_encoding(positions);
  if (!encoding) throw ConfigError("unknown model.positions '" + positions + "'");
  c.positions = *encoding;
  c.slot_positions = kv.get_bool("model.slot_positions", true);
  c.prompt_template = kv.get_string("model.template", "plain");
  c.vocab_size = vocab_size;
  c.validate();
  return c;
}

}  // namespace alirector::model
