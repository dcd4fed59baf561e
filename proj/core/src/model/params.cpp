#include "alirector/model/params.hpp"

#include <cmath>
#include <numbers>

#include "alirector/common/error.hpp"
#include "alirector/common/hash.hpp"
#include "alirector/common/rng.hpp"

namespace alirector::model {
namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void add_linear(ParameterLayout& layout, const std::string& prefix, std::size_t in,
                std::size_t out, bool bias) {
  layout.add(prefix + ".weight", in, out);
  if (bias) layout.add(prefix + ".bias", 1, out);
}

void add_norm(ParameterLayout& layout, const std::string& prefix, std::size_t d) {
  layout.add(prefix + ".gain", 1, d);
  layout.add(prefix + ".bias", 1, d);
}

void add_attention(ParameterLayout& layout, const std::string& prefix, std::size_t d) {
  add_linear(layout, prefix + ".q", d, d, true);
  // Key biases shift every score of a query equally and have no gradient.
  add_linear(layout, prefix + ".k", d, d, false);
  add_linear(layout, prefix + ".v", d, d, true);
  add_linear(layout, prefix + ".o", d, d, true);
}

void add_layer(ParameterLayout& layout, const std::string& prefix, const ModelConfig& c,
               bool cross) {
  add_norm(layout, prefix + ".ln_self", c.hidden_dim);
  add_attention(layout, prefix + ".self", c.hidden_dim);
  if (cross) {
    add_norm(layout, prefix + ".ln_cross", c.hidden_dim);
    add_attention(layout, prefix + ".cross", c.hidden_dim);
  }
  add_norm(layout, prefix + ".ln_ffn", c.hidden_dim);
  add_linear(layout, prefix + ".ffn.in", c.hidden_dim, c.ffn_dim, true);
  add_linear(layout, prefix + ".ffn.out", c.ffn_dim, c.hidden_dim, true);
}

}  // namespace

std::size_t ParameterLayout::add(std::string name, std::size_t rows, std::size_t cols) {
  if (by_name_.count(name)) throw ContractError("duplicate parameter array " + name);
  const std::size_t index = arrays_.size();
  by_name_.emplace(name, index);
  arrays_.push_back({std::move(name), rows, cols, total_});
  constexpr std::size_t kStride = EIGEN_MAX_ALIGN_BYTES > 0 ? EIGEN_MAX_ALIGN_BYTES / sizeof(double) : 1;
  total_ += (rows * cols + kStride - 1) / kStride * kStride;
  return index;
}

std::size_t ParameterLayout::index(const std::string& name) const {
  const auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ContractError("no parameter array named " + name);
  return it->second;
}

bool ParameterLayout::operator==(const ParameterLayout& other) const {
  if (arrays_.size() != other.arrays_.size()) return false;
  for (std::size_t i = 0; i < arrays_.size(); ++i) {
    const auto& a = arrays_[i];
    const auto& b = other.arrays_[i];
    if (a.name != b.name || a.rows != b.rows || a.cols != b.cols) return false;
  }
  return true;
}

ParameterLayout make_layout(const ModelConfig& c) {
  c.validate();
  ParameterLayout layout;
  const bool encdec = c.arch == Architecture::kEncoderDecoder;
  const bool learned = c.positions == PositionEncoding::kLearned;
  layout.add("embed.tokens", c.vocab_size, c.hidden_dim);
  if (encdec) {
    if (learned) layout.add("embed.encoder_positions", c.max_positions, c.hidden_dim);
    if (c.slot_positions) layout.add("embed.segments", 2, c.hidden_dim);
    for (std::size_t l = 0; l < c.layers; ++l) {
      add_layer(layout, "encoder." + std::to_string(l), c, false);
    }
    add_norm(layout, "encoder.norm", c.hidden_dim);
  }
  if (learned) layout.add("embed.decoder_positions", c.max_positions, c.hidden_dim);
  for (std::size_t l = 0; l < c.layers; ++l) {
    add_layer(layout, "decoder." + std::to_string(l), c, encdec);
  }
  add_norm(layout, "decoder.norm", c.hidden_dim);
  add_linear(layout, "head", c.hidden_dim, c.vocab_size, true);
  return layout;
}

ModelParams::ModelParams(ModelConfig config, ModelRole role)
    : config_(std::move(config)),
      role_(role),
      layout_(std::make_shared<const ParameterLayout>(make_layout(config_))),
      values_(layout_->total(), 0.0) {}

ModelParams ModelParams::initialize(const ModelConfig& config, ModelRole role,
                                    std::uint64_t seed) {
  ModelParams params(config, role);
  Rng rng(derive_seed(seed, 0x696e6974ULL));
  for (const ArrayInfo& info : params.layout().arrays()) {
    double* data = params.values_.data() + info.offset;
    if (ends_with(info.name, ".gain")) {
      std::fill(data, data + info.size(), 1.0);
    } else if (ends_with(info.name, ".bias") || info.name == "embed.segments") {
      std::fill(data, data + info.size(), 0.0);
    } else {
      // Sinusoidal models scale token vectors by sqrt(d); start them near unit norm.
      const double std_dev =
          info.name == "embed.tokens" && config.positions == PositionEncoding::kSinusoidal
              ? 1.0 / std::sqrt(static_cast<double>(config.hidden_dim))
              : config.init_std;
      for (std::size_t i = 0; i < info.size(); ++i) {
        // Box-Muller keeps the draw independent of the standard library.
        const double u1 = 1.0 - uniform01(rng);
        const double u2 = uniform01(rng);
        data[i] = std_dev * std::sqrt(-2.0 * std::log(u1)) *
                  std::cos(2.0 * std::numbers::pi * u2);
      }
    }
  }
  return params;
}

MatrixMap ModelParams::array(std::size_t index) {
  const ArrayInfo& info = layout_->info(index);
  return MatrixMap(values_.data() + info.offset, static_cast<Eigen::Index>(info.rows),
                   static_cast<Eigen::Index>(info.cols));
}

ConstMatrixMap ModelParams::array(std::size_t index) const {
  const ArrayInfo& info = layout_->info(index);
  return ConstMatrixMap(values_.data() + info.offset, static_cast<Eigen::Index>(info.rows),
                        static_cast<Eigen::Index>(info.cols));
}

bool ModelParams::all_finite() const {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string ModelParams::hash() const {
  return sha256_hex(std::span<const unsigned char>(
      reinterpret_cast<const unsigned char*>(values_.data()), values_.size() * sizeof(double)));
}

Gradients::Gradients(const ModelParams& params)
    : layout_(params.layout_ptr()), values_(layout_->total(), 0.0) {}

void Gradients::zero() { std::fill(values_.begin(), values_.end(), 0.0); }

MatrixMap Gradients::array(std::size_t index) {
  const ArrayInfo& info = layout_->info(index);
  return MatrixMap(values_.data() + info.offset, static_cast<Eigen::Index>(info.rows),
                   static_cast<Eigen::Index>(info.cols));
}

ConstMatrixMap Gradients::array(std::size_t index) const {
  const ArrayInfo& info = layout_->info(index);
  return ConstMatrixMap(values_.data() + info.offset, static_cast<Eigen::Index>(info.rows),
                        static_cast<Eigen::Index>(info.cols));
}

}  // namespace alirector::model
