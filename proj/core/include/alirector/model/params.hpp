#pragma once

#include <Eigen/Core>

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "alirector/model/config.hpp"

namespace alirector::model {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;
using RowVectorMap = Eigen::Map<RowVector>;
using ConstRowVectorMap = Eigen::Map<const RowVector>;

// Flat weight storage. Aligned, with every array starting on an alignment
// boundary, so vectorized reductions over a Map always see the same layout
// and results do not depend on where the heap placed the buffer.
using ParamBuffer = std::vector<double, Eigen::aligned_allocator<double>>;

struct ArrayInfo {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

// Names and shapes of the weight arrays of one model, packed into a single
// contiguous buffer.
class ParameterLayout {
 public:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
  std::size_t index(const std::string& name) const;  // throws ContractError
  const ArrayInfo& info(std::size_t index) const { return arrays_[index]; }
  const std::vector<ArrayInfo>& arrays() const { return arrays_; }
  std::size_t total() const { return total_; }

  bool operator==(const ParameterLayout& other) const;

 private:
  std::vector<ArrayInfo> arrays_;
  std::unordered_map<std::string, std::size_t> by_name_;
  std::size_t total_ = 0;
};

// Weight arrays for `config`, in the order the transformer reads them.
ParameterLayout make_layout(const ModelConfig& config);

class Gradients;

// The trainable parameter set of one sequence model plus its role tag.
class ModelParams {
 public:
  ModelParams(ModelConfig config, ModelRole role);

  // Scaled-normal weights (std = config.init_std), unit layer-norm gains and
  // zero biases. Deterministic in `seed`.
  static ModelParams initialize(const ModelConfig& config, ModelRole role, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelRole role() const { return role_; }
  void set_role(ModelRole role) { role_ = role; }
  const ParameterLayout& layout() const { return *layout_; }
  std::shared_ptr<const ParameterLayout> layout_ptr() const { return layout_; }

  ParamBuffer& values() { return values_; }
  const ParamBuffer& values() const { return values_; }

  MatrixMap array(std::size_t index);
  ConstMatrixMap array(std::size_t index) const;
  MatrixMap array(const std::string& name) { return array(layout_->index(name)); }
  ConstMatrixMap array(const std::string& name) const { return array(layout_->index(name)); }

  bool all_finite() const;
  // SHA-256 over the raw weight bytes.
  std::string hash() const;

 private:
  ModelConfig config_;
  ModelRole role_;
  std::shared_ptr<const ParameterLayout> layout_;
  ParamBuffer values_;
};

// Gradient buffer with the same layout as a ModelParams.
class Gradients {
 public:
  explicit Gradients(const ModelParams& params);

  void zero();
  ParamBuffer& values() { return values_; }
  const ParamBuffer& values() const { return values_; }
  MatrixMap array(std::size_t index);
  ConstMatrixMap array(std::size_t index) const;
  const ParameterLayout& layout() const { return *layout_; }

 private:
  std::shared_ptr<const ParameterLayout> layout_;
  ParamBuffer values_;
};

}  // namespace alirector::model
