#pragma once

#include "alirector/model/transformer.hpp"

namespace alirector::model {

struct DecodeOptions {
  std::size_t beam_size = 1;
  // Maximum generated tokens including EOS; 0 means whatever fits in
  // max_positions.
  std::size_t max_len = 0;
};

struct DecodeResult {
  Tokens tokens;  // without EOS
  // Average log-probability per generated token, EOS included.
  double score = 0.0;
  // No EOS was produced within the length limit.
  bool truncated = false;
};

// Generates a continuation of `prefix` (as built by make_sequence_input
// without a target). Reserved tokens other than EOS are never proposed.
// Beam search keeps the greedy hypothesis as a candidate, so its result
// never scores below beam_size 1. Throws ContractError for beam_size 0.
DecodeResult decode(const Transformer& model, const ModelParams& params,
                    const SequenceInput& prefix, const DecodeOptions& options);

}  // namespace alirector::model
