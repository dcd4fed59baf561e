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
#include <vector>

#include "alirector/common/rng.hpp"
#include "alirector/common/types.hpp"
#include "alirector/model/params.hpp"

namespace alirector::model {

// Model input. For the encoder-decoder architecture `encoder` holds the
// source and `decoder` is [BOS, y..., EOS]; for the decoder-only
// architecture `decoder` is the whole rendered prompt. In both cases
// `target` locates the teacher-forced target tokens inside `decoder`; the
// logits row for decoder[p] is produced at position p - 1.
struct SequenceInput {
  std::optional<Tokens> encoder;
  Tokens decoder;
  Span target;
};

// Zeroes whole rows with probability `rate` and scales survivors by
// 1 / (1 - rate). Identity when `training` is false or rate is 0. The
// applied per-row factors are written to `row_scale` when given.
Matrix dropout_src(const Matrix& input_embeddings, double rate, Rng* rng, bool training,
                   std::vector<double>* row_scale = nullptr);

namespace detail {

struct NormCache {
  Matrix xhat;
  Eigen::VectorXd inv_std;
};

struct AttentionCache {
  Matrix xq;
  Matrix xkv;
  Matrix q;
  Matrix k;
  Matrix v;
  std::vector<Matrix> probs;
  Matrix concat;
};

struct FeedForwardCache {
  Matrix x;
  Matrix pre;
  Matrix act;
};

struct LayerCache {
  NormCache ln_self;
  AttentionCache self;
  Matrix drop_self;
  NormCache ln_cross;
  AttentionCache cross;
  Matrix drop_cross;
  NormCache ln_ffn;
  FeedForwardCache ffn;
  Matrix drop_ffn;
};

}  // namespace detail

// Activations recorded by a training forward pass for backward().
struct Tape {
  Tokens encoder_tokens;
  Tokens decoder_tokens;
  Span target;
  std::vector<double> encoder_row_scale;
  std::vector<double> decoder_row_scale;
  std::vector<detail::LayerCache> encoder_layers;
  detail::NormCache encoder_norm;
  Matrix memory;
  std::vector<detail::LayerCache> decoder_layers;
  detail::NormCache decoder_norm;
  Matrix head_input;
};

// Cached keys/values for incremental decoding.
struct DecoderState {
  std::vector<Matrix> self_keys;
  std::vector<Matrix> self_values;
  std::vector<Matrix> cross_keys;
  std::vector<Matrix> cross_values;
  std::size_t position = 0;
};

// Pre-norm transformer. Parameters are passed per call, so a single
// Transformer is shared by every model with the same configuration and all
// const methods are safe to call concurrently.
class Transformer {
 public:
  explicit Transformer(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }

  // Inference-mode logits, shape [target.size() x vocab_size]. Throws
  // VocabError for ids >= vocab_size, CapacityError when a sequence exceeds
  // max_positions and ContractError for an invalid target span.
  Matrix forward(const ModelParams& params, const SequenceInput& input) const;

  // Training-mode forward pass recording activations. Dropout is drawn from
  // `rng`; pass nullptr to disable it.
  Matrix forward(const ModelParams& params, const SequenceInput& input, Tape& tape,
                 Rng* rng) const;

  // Accumulates d(loss)/d(params) into `grads` given d(loss)/d(logits).
  void backward(const ModelParams& params, const Tape& tape, const Matrix& dlogits,
                Gradients& grads) const;

  // Incremental decoding: start() encodes the source (if any); step() feeds
  // one decoder token and returns next-token logits.
  DecoderState start(const ModelParams& params, const std::optional<Tokens>& encoder) const;
  RowVector step(const ModelParams& params, DecoderState& state, Token token) const;

 private:
  struct Linear {
    std::size_t weight = 0;
    std::optional<std::size_t> bias;
  };
  struct Norm {
    std::size_t gain = 0;
    std::size_t bias = 0;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct Layer {
    Norm ln_self;
    Attention self;
    bool has_cross = false;
    Norm ln_cross;
    Attention cross;
    Norm ln_ffn;
    Linear ffn_in;
    Linear ffn_out;
  };

  void validate(const SequenceInput& input) const;
  Matrix run(const ModelParams& params, const SequenceInput& input, Tape* tape, Rng* rng) const;
  Matrix embed(const ModelParams& params, const Tokens& tokens,
               const std::optional<std::size_t>& pos_array,
               std::size_t src_rows, Rng* rng, std::vector<double>* row_scale,
               bool slotted = false) const;
  Matrix layer_forward(const ModelParams& params, const Layer& layer, Matrix x,
                       const Matrix* memory, bool causal, detail::LayerCache* cache,
                       Rng* rng) const;
  Matrix layer_backward(const ModelParams& params, const Layer& layer,
                        const detail::LayerCache& cache, Matrix dy, Matrix* dmemory,
                        Gradients& grads) const;
  Matrix attention(const ModelParams& params, const Attention& attn, const Matrix& xq,
                   const Matrix& xkv, bool causal, detail::AttentionCache* cache) const;
  void attention_backward(const ModelParams& params, const Attention& attn,
                          const detail::AttentionCache& cache, const Matrix& dout, Matrix& dxq,
                          Matrix& dxkv, Gradients& grads) const;
  Matrix norm(const ModelParams& params, const Norm& n, const Matrix& x,
              detail::NormCache* cache) const;
  Matrix norm_backward(const ModelParams& params, const Norm& n, const detail::NormCache& cache,
                       const Matrix& dy, Gradients& grads) const;
  Matrix linear(const ModelParams& params, const Linear& lin, const Matrix& x) const;
  Matrix linear_backward(const ModelParams& params, const Linear& lin, const Matrix& x,
                         const Matrix& dy, Gradients& grads) const;
  void embed_backward(const Tokens& tokens, const std::optional<std::size_t>& pos_array,
                      const std::vector<double>& row_scale, const Matrix& dx,
                      Gradients& grads, bool slotted = false) const;
  Matrix dropout(const Matrix& x, Matrix* mask, Rng* rng) const;

  ModelConfig config_;
  std::size_t token_embedding_ = 0;
  double token_scale_ = 1.0;
  // Learned position tables; empty with sinusoidal positions.
  std::optional<std::size_t> encoder_positions_;
  std::optional<std::size_t> decoder_positions_;
  std::optional<std::size_t> segments_;
  Matrix sinusoid_;
  std::vector<Layer> encoder_;
  Norm encoder_norm_;
  std::vector<Layer> decoder_;
  Norm decoder_norm_;
  Linear head_;
};

}  // namespace alirector::model
