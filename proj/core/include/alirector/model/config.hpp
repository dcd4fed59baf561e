#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "alirector/common/kv.hpp"

namespace alirector::model {

enum class Architecture { kEncoderDecoder, kDecoderOnly };

std::string_view to_string(Architecture arch);
std::optional<Architecture> parse_architecture(std::string_view name);

// Learned position tables, or fixed sinusoids (with token embeddings scaled
// by sqrt(hidden_dim)) that extend to positions never seen in training.
enum class PositionEncoding { kLearned, kSinusoidal };

std::string_view to_string(PositionEncoding encoding);
std::optional<PositionEncoding> parse_position_encoding(std::string_view name);

enum class ModelRole { kCorrector, kForwardAligner, kReverseAligner, kAlirectorStudent };

std::string_view to_string(ModelRole role);
std::optional<ModelRole> parse_role(std::string_view name);

struct ModelConfig {
  Architecture arch = Architecture::kEncoderDecoder;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t hidden_dim = 64;
  std::size_t ffn_dim = 128;
  std::size_t vocab_size = 0;
  std::size_t max_positions = 64;
  double dropout = 0.1;
  double dropout_src = 0.2;
  double init_std = 0.02;
  PositionEncoding positions = PositionEncoding::kSinusoidal;
  // Encoder inputs made of SEP-separated slots restart their positions in
  // each slot and add a per-slot segment vector, so that a token and its
  // counterpart in the other slot share a position.
  bool slot_positions = true;
  // Prompt template family for the decoder-only architecture.
  std::string prompt_template = "plain";

  // Throws ConfigError on non-positive sizes, hidden_dim not divisible by
  // heads, or dropout rates outside [0, 1).
  void validate() const;

  static ModelConfig from_kv(const KeyValues& kv, std::size_t vocab_size);
  bool operator==(const ModelConfig&) const = default;
};

}  // namespace alirector::model
