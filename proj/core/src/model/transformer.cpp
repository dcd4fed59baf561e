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

#include "alirector/model/transformer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "alirector/common/error.hpp"
#include "alirector/corpus/vocab.hpp"

namespace alirector::model {
namespace {

constexpr double kNormEps = 1e-5;
constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

Matrix gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kGeluScale * (v + kGeluCubic * v * v * v)));
  });
}

Matrix gelu_grad(const Matrix& x) {
  return x.unaryExpr([](double v) {
    const double t = std::tanh(kGeluScale * (v + kGeluCubic * v * v * v));
    const double dt = (1.0 - t * t) * kGeluScale * (1.0 + 3.0 * kGeluCubic * v * v);
    return 0.5 * (1.0 + t) + 0.5 * v * dt;
  });
}

void softmax_rows(Matrix& s) {
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    auto row = s.row(i);
    const double top = row.maxCoeff();
    row = (row.array() - top).exp().matrix();
    row /= row.sum();
  }
}

// Single-query attention against cached keys and values.
Matrix attend(const Matrix& q, const Matrix& keys, const Matrix& values, std::size_t heads) {
  const Eigen::Index dh = q.cols() / static_cast<Eigen::Index>(heads);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix out(q.rows(), q.cols());
  for (std::size_t h = 0; h < heads; ++h) {
    const Eigen::Index c = static_cast<Eigen::Index>(h) * dh;
    Matrix s = q.middleCols(c, dh) * keys.middleCols(c, dh).transpose() * scale;
    softmax_rows(s);
    out.middleCols(c, dh) = s * values.middleCols(c, dh);
  }
  return out;
}

Matrix masked(const Matrix& dy, const Matrix& mask) {
  if (mask.size() == 0) return dy;
  return dy.cwiseProduct(mask);
}

}  // namespace

namespace {

struct Slots {
  std::vector<std::size_t> position;
  std::vector<std::size_t> segment;
};

// The separator closes its slot; the next token starts again at position 0
// in the second segment.
Slots slots_of(const Tokens& tokens) {
  Slots s;
  std::size_t pos = 0;
  std::size_t seg = 0;
  for (Token t : tokens) {
    s.position.push_back(pos);
    s.segment.push_back(seg);
    if (t == corpus::kSep) {
      seg = 1;
      pos = 0;
    } else {
      ++pos;
    }
  }
  return s;
}

}  // namespace

Matrix dropout_src(const Matrix& input_embeddings, double rate, Rng* rng, bool training,
                   std::vector<double>* row_scale) {
  const auto rows = static_cast<std::size_t>(input_embeddings.rows());
  if (row_scale) row_scale->assign(rows, 1.0);
  if (!training || rate <= 0.0 || rng == nullptr) return input_embeddings;
  Matrix out = input_embeddings;
  const double keep = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < rows; ++i) {
    const double factor = uniform01(*rng) < rate ? 0.0 : keep;
    out.row(static_cast<Eigen::Index>(i)) *= factor;
    if (row_scale) (*row_scale)[i] = factor;
  }
  return out;
}

Transformer::Transformer(const ModelConfig& config) : config_(config) {
  const ParameterLayout layout = make_layout(config_);
  auto lin = [&](const std::string& prefix, bool bias) {
    Linear l;
    l.weight = layout.index(prefix + ".weight");
    if (bias) l.bias = layout.index(prefix + ".bias");
    return l;
  };
  auto nrm = [&](const std::string& prefix) {
    return Norm{layout.index(prefix + ".gain"), layout.index(prefix + ".bias")};
  };
  auto att = [&](const std::string& prefix) {
    return Attention{lin(prefix + ".q", true), lin(prefix + ".k", false),
                     lin(prefix + ".v", true), lin(prefix + ".o", true)};
  };
  const bool encdec = config_.arch == Architecture::kEncoderDecoder;
  auto layer = [&](const std::string& prefix, bool cross) {
    Layer out;
    out.ln_self = nrm(prefix + ".ln_self");
    out.self = att(prefix + ".self");
    out.has_cross = cross;
    if (cross) {
      out.ln_cross = nrm(prefix + ".ln_cross");
      out.cross = att(prefix + ".cross");
    }
    out.ln_ffn = nrm(prefix + ".ln_ffn");
    out.ffn_in = lin(prefix + ".ffn.in", true);
    out.ffn_out = lin(prefix + ".ffn.out", true);
    return out;
  };

  token_embedding_ = layout.index("embed.tokens");
  const bool learned = config_.positions == PositionEncoding::kLearned;
  if (!learned) {
    const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
    token_scale_ = std::sqrt(static_cast<double>(d));
    sinusoid_.resize(static_cast<Eigen::Index>(config_.max_positions), d);
    for (Eigen::Index p = 0; p < sinusoid_.rows(); ++p) {
      for (Eigen::Index i = 0; i < d; i += 2) {
        const double angle =
            static_cast<double>(p) / std::pow(10000.0, static_cast<double>(i) / static_cast<double>(d));
        sinusoid_(p, i) = std::sin(angle);
        if (i + 1 < d) sinusoid_(p, i + 1) = std::cos(angle);
      }
    }
  }
  if (encdec) {
    if (learned) encoder_positions_ = layout.index("embed.encoder_positions");
    if (config_.slot_positions) segments_ = layout.index("embed.segments");
    for (std::size_t l = 0; l < config_.layers; ++l) {
      encoder_.push_back(layer("encoder." + std::to_string(l), false));
    }
    encoder_norm_ = nrm("encoder.norm");
  }
  if (learned) decoder_positions_ = layout.index("embed.decoder_positions");
  for (std::size_t l = 0; l < config_.layers; ++l) {
    decoder_.push_back(layer("decoder." + std::to_string(l), encdec));
  }
  decoder_norm_ = nrm("decoder.norm");
  head_ = lin("head", true);
}

void Transformer::validate(const SequenceInput& input) const {
  const bool encdec = config_.arch == Architecture::kEncoderDecoder;
  auto check_ids = [&](const Tokens& tokens, const char* what) {
    for (Token t : tokens) {
      if (t < 0 || static_cast<std::size_t>(t) >= config_.vocab_size) {
        throw VocabError(std::string(what) + " token id " + std::to_string(t) +
                         " outside vocabulary of size " + std::to_string(config_.vocab_size));
      }
    }
    if (tokens.size() > config_.max_positions) {
      throw CapacityError(std::string(what) + " length " + std::to_string(tokens.size()) +
                          " exceeds max_positions " + std::to_string(config_.max_positions));
    }
  };
  if (encdec) {
    if (!input.encoder || input.encoder->empty()) {
      throw ContractError("encoder-decoder model needs a non-empty encoder input");
    }
    check_ids(*input.encoder, "encoder");
  } else if (input.encoder) {
    throw ContractError("decoder-only model takes no encoder input");
  }
  check_ids(input.decoder, "decoder");
  if (input.target.begin < 1 || input.target.begin > input.target.end ||
      input.target.end > input.decoder.size()) {
    throw ContractError("target span [" + std::to_string(input.target.begin) + ", " +
                        std::to_string(input.target.end) + ") invalid for decoder length " +
                        std::to_string(input.decoder.size()));
  }
}

Matrix Transformer::forward(const ModelParams& params, const SequenceInput& input) const {
  return run(params, input, nullptr, nullptr);
}

Matrix Transformer::forward(const ModelParams& params, const SequenceInput& input, Tape& tape,
                            Rng* rng) const {
  return run(params, input, &tape, rng);
}

Matrix Transformer::run(const ModelParams& params, const SequenceInput& input, Tape* tape,
                        Rng* rng) const {
  validate(input);
  const bool encdec = config_.arch == Architecture::kEncoderDecoder;
  const std::size_t n = input.target.size();
  if (tape) {
    *tape = Tape{};
    tape->target = input.target;
  }
  if (n == 0) return Matrix(0, static_cast<Eigen::Index>(config_.vocab_size));

  Matrix memory;
  if (encdec) {
    Matrix x = embed(params, *input.encoder, encoder_positions_, input.encoder->size(), rng,
                     tape ? &tape->encoder_row_scale : nullptr, true);
    if (tape) tape->encoder_layers.resize(encoder_.size());
    for (std::size_t l = 0; l < encoder_.size(); ++l) {
      x = layer_forward(params, encoder_[l], std::move(x), nullptr, false,
                        tape ? &tape->encoder_layers[l] : nullptr, rng);
    }
    memory = norm(params, encoder_norm_, x, tape ? &tape->encoder_norm : nullptr);
  }

  const std::size_t length = input.target.end - 1;
  const Tokens decoder(input.decoder.begin(),
                       input.decoder.begin() + static_cast<std::ptrdiff_t>(length));
  // Decoder-only prompts carry the source before the response marker.
  const std::size_t src_rows = encdec ? 0 : input.target.begin - 1;
  Matrix y = embed(params, decoder, decoder_positions_, src_rows, rng,
                   tape ? &tape->decoder_row_scale : nullptr);
  if (tape) tape->decoder_layers.resize(decoder_.size());
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    y = layer_forward(params, decoder_[l], std::move(y), encdec ? &memory : nullptr, true,
                      tape ? &tape->decoder_layers[l] : nullptr, rng);
  }
  const Matrix picked =
      y.middleRows(static_cast<Eigen::Index>(input.target.begin - 1), static_cast<Eigen::Index>(n));
  Matrix out = norm(params, decoder_norm_, picked, tape ? &tape->decoder_norm : nullptr);
  Matrix logits = linear(params, head_, out);
  if (tape) {
    if (encdec) tape->encoder_tokens = *input.encoder;
    tape->decoder_tokens = decoder;
    tape->memory = std::move(memory);
    tape->head_input = std::move(out);
  }
  return logits;
}

void Transformer::backward(const ModelParams& params, const Tape& tape, const Matrix& dlogits,
                           Gradients& grads) const {
  const bool encdec = config_.arch == Architecture::kEncoderDecoder;
  const std::size_t n = tape.target.size();
  if (static_cast<std::size_t>(dlogits.rows()) != n ||
      static_cast<std::size_t>(dlogits.cols()) != config_.vocab_size) {
    throw ContractError("logit gradient shape does not match the recorded forward pass");
  }
  if (n == 0) return;
  const Matrix dout = linear_backward(params, head_, tape.head_input, dlogits, grads);
  const Matrix dpicked = norm_backward(params, decoder_norm_, tape.decoder_norm, dout, grads);
  const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
  Matrix dy = Matrix::Zero(static_cast<Eigen::Index>(tape.decoder_tokens.size()), d);
  dy.middleRows(static_cast<Eigen::Index>(tape.target.begin - 1),
                static_cast<Eigen::Index>(n)) = dpicked;
  Matrix dmemory;
  if (encdec) dmemory = Matrix::Zero(tape.memory.rows(), d);
  for (std::size_t l = decoder_.size(); l-- > 0;) {
    dy = layer_backward(params, decoder_[l], tape.decoder_layers[l], std::move(dy),
                        encdec ? &dmemory : nullptr, grads);
  }
  embed_backward(tape.decoder_tokens, decoder_positions_, tape.decoder_row_scale, dy, grads);
  if (!encdec) return;
  Matrix dx = norm_backward(params, encoder_norm_, tape.encoder_norm, dmemory, grads);
  for (std::size_t l = encoder_.size(); l-- > 0;) {
    dx = layer_backward(params, encoder_[l], tape.encoder_layers[l], std::move(dx), nullptr,
                        grads);
  }
  embed_backward(tape.encoder_tokens, encoder_positions_, tape.encoder_row_scale, dx, grads, true);
}

Matrix Transformer::embed(const ModelParams& params, const Tokens& tokens,
                          const std::optional<std::size_t>& pos_array, std::size_t src_rows,
                          Rng* rng, std::vector<double>* row_scale, bool slotted) const {
  const auto table = params.array(token_embedding_);
  const auto length = static_cast<Eigen::Index>(tokens.size());
  Matrix x(length, table.cols());
  for (Eigen::Index i = 0; i < length; ++i) {
    x.row(i) = token_scale_ * table.row(tokens[static_cast<std::size_t>(i)]);
  }
  std::vector<double> scale;
  if (src_rows > 0) {
    const auto rows = static_cast<Eigen::Index>(src_rows);
    x.topRows(rows) = dropout_src(x.topRows(rows), config_.dropout_src, rng, rng != nullptr, &scale);
  }
  scale.resize(tokens.size(), 1.0);
  if (slotted && segments_) {
    const auto segments = params.array(*segments_);
    const Slots slots = slots_of(tokens);
    for (Eigen::Index i = 0; i < length; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const auto p = static_cast<Eigen::Index>(slots.position[u]);
      if (pos_array) {
        x.row(i) += params.array(*pos_array).row(p);
      } else {
        x.row(i) += sinusoid_.row(p);
      }
      x.row(i) += segments.row(static_cast<Eigen::Index>(slots.segment[u]));
    }
  } else if (pos_array) {
    x += params.array(*pos_array).topRows(length);
  } else {
    x += sinusoid_.topRows(length);
  }
  if (row_scale) *row_scale = std::move(scale);
  return x;
}

void Transformer::embed_backward(const Tokens& tokens, const std::optional<std::size_t>& pos_array,
                                 const std::vector<double>& row_scale, const Matrix& dx,
                                 Gradients& grads, bool slotted) const {
  auto table = grads.array(token_embedding_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double s = (i < row_scale.size() ? row_scale[i] : 1.0) * token_scale_;
    if (s != 0.0) table.row(tokens[i]) += s * dx.row(r);
  }
  if (slotted && segments_) {
    auto segments = grads.array(*segments_);
    const Slots slots = slots_of(tokens);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      segments.row(static_cast<Eigen::Index>(slots.segment[i])) += dx.row(r);
      if (pos_array) {
        grads.array(*pos_array).row(static_cast<Eigen::Index>(slots.position[i])) += dx.row(r);
      }
    }
  } else if (pos_array) {
    grads.array(*pos_array).topRows(static_cast<Eigen::Index>(tokens.size())) += dx;
  }
}

Matrix Transformer::dropout(const Matrix& x, Matrix* mask, Rng* rng) const {
  if (rng == nullptr || config_.dropout <= 0.0) {
    if (mask) mask->resize(0, 0);
    return x;
  }
  const double keep = 1.0 / (1.0 - config_.dropout);
  Matrix m(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = uniform01(*rng) < config_.dropout ? 0.0 : keep;
  }
  Matrix out = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return out;
}

Matrix Transformer::layer_forward(const ModelParams& params, const Layer& layer, Matrix x,
                                  const Matrix* memory, bool causal, detail::LayerCache* cache,
                                  Rng* rng) const {
  {
    const Matrix a = norm(params, layer.ln_self, x, cache ? &cache->ln_self : nullptr);
    const Matrix h = attention(params, layer.self, a, a, causal, cache ? &cache->self : nullptr);
    x += dropout(h, cache ? &cache->drop_self : nullptr, rng);
  }
  if (layer.has_cross) {
    const Matrix c = norm(params, layer.ln_cross, x, cache ? &cache->ln_cross : nullptr);
    const Matrix h =
        attention(params, layer.cross, c, *memory, false, cache ? &cache->cross : nullptr);
    x += dropout(h, cache ? &cache->drop_cross : nullptr, rng);
  }
  const Matrix b = norm(params, layer.ln_ffn, x, cache ? &cache->ln_ffn : nullptr);
  Matrix pre = linear(params, layer.ffn_in, b);
  Matrix act = gelu(pre);
  const Matrix f = linear(params, layer.ffn_out, act);
  x += dropout(f, cache ? &cache->drop_ffn : nullptr, rng);
  if (cache) {
    cache->ffn.x = b;
    cache->ffn.pre = std::move(pre);
    cache->ffn.act = std::move(act);
  }
  return x;
}

Matrix Transformer::layer_backward(const ModelParams& params, const Layer& layer,
                                   const detail::LayerCache& cache, Matrix dy, Matrix* dmemory,
                                   Gradients& grads) const {
  {
    const Matrix df = masked(dy, cache.drop_ffn);
    const Matrix dact = linear_backward(params, layer.ffn_out, cache.ffn.act, df, grads);
    const Matrix dpre = dact.cwiseProduct(gelu_grad(cache.ffn.pre));
    const Matrix db = linear_backward(params, layer.ffn_in, cache.ffn.x, dpre, grads);
    dy += norm_backward(params, layer.ln_ffn, cache.ln_ffn, db, grads);
  }
  Matrix dq;
  Matrix dkv;
  if (layer.has_cross) {
    attention_backward(params, layer.cross, cache.cross, masked(dy, cache.drop_cross), dq, dkv,
                       grads);
    *dmemory += dkv;
    dy += norm_backward(params, layer.ln_cross, cache.ln_cross, dq, grads);
  }
  attention_backward(params, layer.self, cache.self, masked(dy, cache.drop_self), dq, dkv, grads);
  dq += dkv;
  dy += norm_backward(params, layer.ln_self, cache.ln_self, dq, grads);
  return dy;
}

Matrix Transformer::attention(const ModelParams& params, const Attention& attn, const Matrix& xq,
                              const Matrix& xkv, bool causal,
                              detail::AttentionCache* cache) const {
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index dh = static_cast<Eigen::Index>(config_.hidden_dim) / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix q = linear(params, attn.q, xq);
  Matrix k = linear(params, attn.k, xkv);
  Matrix v = linear(params, attn.v, xkv);
  Matrix concat(q.rows(), q.cols());
  if (cache) cache->probs.clear();
  for (Eigen::Index h = 0; h < heads; ++h) {
    const Eigen::Index c = h * dh;
    Matrix s = q.middleCols(c, dh) * k.middleCols(c, dh).transpose() * scale;
    if (causal) {
      for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < s.cols(); ++j) {
          s(i, j) = -std::numeric_limits<double>::infinity();
        }
      }
    }
    softmax_rows(s);
    concat.middleCols(c, dh) = s * v.middleCols(c, dh);
    if (cache) cache->probs.push_back(std::move(s));
  }
  Matrix out = linear(params, attn.o, concat);
  if (cache) {
    cache->xq = xq;
    cache->xkv = xkv;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->concat = std::move(concat);
  }
  return out;
}

void Transformer::attention_backward(const ModelParams& params, const Attention& attn,
                                     const detail::AttentionCache& cache, const Matrix& dout,
                                     Matrix& dxq, Matrix& dxkv, Gradients& grads) const {
  const auto heads = static_cast<Eigen::Index>(config_.heads);
  const Eigen::Index dh = static_cast<Eigen::Index>(config_.hidden_dim) / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix dconcat = linear_backward(params, attn.o, cache.concat, dout, grads);
  Matrix dq(cache.q.rows(), cache.q.cols());
  Matrix dk(cache.k.rows(), cache.k.cols());
  Matrix dv(cache.v.rows(), cache.v.cols());
  for (Eigen::Index h = 0; h < heads; ++h) {
    const Eigen::Index c = h * dh;
    const Matrix& p = cache.probs[static_cast<std::size_t>(h)];
    const Matrix d_o = dconcat.middleCols(c, dh);
    dv.middleCols(c, dh) = p.transpose() * d_o;
    const Matrix dp = d_o * cache.v.middleCols(c, dh).transpose();
    const Eigen::VectorXd inner = dp.cwiseProduct(p).rowwise().sum();
    const Matrix ds = p.cwiseProduct(dp.colwise() - inner);
    dq.middleCols(c, dh) = ds * cache.k.middleCols(c, dh) * scale;
    dk.middleCols(c, dh) = ds.transpose() * cache.q.middleCols(c, dh) * scale;
  }
  dxq = linear_backward(params, attn.q, cache.xq, dq, grads);
  dxkv = linear_backward(params, attn.k, cache.xkv, dk, grads);
  dxkv += linear_backward(params, attn.v, cache.xkv, dv, grads);
}

Matrix Transformer::norm(const ModelParams& params, const Norm& n, const Matrix& x,
                         detail::NormCache* cache) const {
  const auto gain = params.array(n.gain);
  const auto bias = params.array(n.bias);
  const double width = static_cast<double>(x.cols());
  Matrix xhat(x.rows(), x.cols());
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double mean = x.row(i).sum() / width;
    const auto centered = (x.row(i).array() - mean).matrix();
    const double var = centered.squaredNorm() / width;
    inv_std(i) = 1.0 / std::sqrt(var + kNormEps);
    xhat.row(i) = centered * inv_std(i);
  }
  Matrix y = xhat.array().rowwise() * gain.row(0).array();
  y.rowwise() += bias.row(0);
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix Transformer::norm_backward(const ModelParams& params, const Norm& n,
                                  const detail::NormCache& cache, const Matrix& dy,
                                  Gradients& grads) const {
  const auto gain = params.array(n.gain);
  grads.array(n.gain).row(0) += dy.cwiseProduct(cache.xhat).colwise().sum();
  grads.array(n.bias).row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  const double width = static_cast<double>(dy.cols());
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const double mean_d = dxhat.row(i).sum() / width;
    const double mean_dx = dxhat.row(i).dot(cache.xhat.row(i)) / width;
    dx.row(i) = cache.inv_std(i) *
                ((dxhat.row(i).array() - mean_d) - cache.xhat.row(i).array() * mean_dx).matrix();
  }
  return dx;
}

Matrix Transformer::linear(const ModelParams& params, const Linear& lin, const Matrix& x) const {
  Matrix y = x * params.array(lin.weight);
  if (lin.bias) y.rowwise() += params.array(*lin.bias).row(0);
  return y;
}

Matrix Transformer::linear_backward(const ModelParams& params, const Linear& lin, const Matrix& x,
                                    const Matrix& dy, Gradients& grads) const {
  grads.array(lin.weight).noalias() += x.transpose() * dy;
  if (lin.bias) grads.array(*lin.bias).row(0) += dy.colwise().sum();
  return dy * params.array(lin.weight).transpose();
}

DecoderState Transformer::start(const ModelParams& params,
                                const std::optional<Tokens>& encoder) const {
  const bool encdec = config_.arch == Architecture::kEncoderDecoder;
  DecoderState state;
  const auto d = static_cast<Eigen::Index>(config_.hidden_dim);
  state.self_keys.assign(decoder_.size(), Matrix(0, d));
  state.self_values.assign(decoder_.size(), Matrix(0, d));
  if (!encdec) {
    if (encoder) throw ContractError("decoder-only model takes no encoder input");
    return state;
  }
  SequenceInput probe{encoder, Tokens{0}, Span{1, 1}};
  validate(probe);
  Matrix x = embed(params, *encoder, encoder_positions_, 0, nullptr, nullptr, true);
  for (const Layer& layer : encoder_) {
    x = layer_forward(params, layer, std::move(x), nullptr, false, nullptr, nullptr);
  }
  const Matrix memory = norm(params, encoder_norm_, x, nullptr);
  for (const Layer& layer : decoder_) {
    state.cross_keys.push_back(linear(params, layer.cross.k, memory));
    state.cross_values.push_back(linear(params, layer.cross.v, memory));
  }
  return state;
}

RowVector Transformer::step(const ModelParams& params, DecoderState& state, Token token) const {
  if (state.position >= config_.max_positions) {
    throw CapacityError("decoder position " + std::to_string(state.position) +
                        " exceeds max_positions " + std::to_string(config_.max_positions));
  }
  if (token < 0 || static_cast<std::size_t>(token) >= config_.vocab_size) {
    throw VocabError("decoder token id " + std::to_string(token) + " outside vocabulary");
  }
  const auto pos = static_cast<Eigen::Index>(state.position);
  Matrix x = token_scale_ * params.array(token_embedding_).row(token);
  if (decoder_positions_) {
    x += params.array(*decoder_positions_).row(pos);
  } else {
    x += sinusoid_.row(pos);
  }
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    const Layer& layer = decoder_[l];
    {
      const Matrix a = norm(params, layer.ln_self, x, nullptr);
      Matrix& keys = state.self_keys[l];
      Matrix& values = state.self_values[l];
      keys.conservativeResize(keys.rows() + 1, Eigen::NoChange);
      values.conservativeResize(values.rows() + 1, Eigen::NoChange);
      keys.row(keys.rows() - 1) = linear(params, layer.self.k, a);
      values.row(values.rows() - 1) = linear(params, layer.self.v, a);
      const Matrix h = attend(linear(params, layer.self.q, a), keys, values, config_.heads);
      x += linear(params, layer.self.o, h);
    }
    if (layer.has_cross) {
      const Matrix c = norm(params, layer.ln_cross, x, nullptr);
      const Matrix h = attend(linear(params, layer.cross.q, c), state.cross_keys[l],
                              state.cross_values[l], config_.heads);
      x += linear(params, layer.cross.o, h);
    }
    const Matrix b = norm(params, layer.ln_ffn, x, nullptr);
    x += linear(params, layer.ffn_out, gelu(linear(params, layer.ffn_in, b)));
  }
  const Matrix out = norm(params, decoder_norm_, x, nullptr);
  ++state.position;
  return linear(params, head_, out).row(0);
}

}  // namespace alirector::model
