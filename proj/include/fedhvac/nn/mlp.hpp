#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fedhvac/core/rng.hpp"

namespace fedhvac::nn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a forward or backward pass produces NaN/Inf.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::size_t layer, const std::string& what)
      : std::runtime_error("layer " + std::to_string(layer) + ": " + what), layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

enum class Activation { kRelu, kTanh };

/// Feed-forward network shape. Hidden layers use `activation`, the output layer is linear.
struct MlpSpec {
  std::vector<std::size_t> layer_dims;
  Activation activation = Activation::kRelu;

  void validate() const;
  std::size_t num_layers() const { return layer_dims.size() - 1; }
  std::size_t input_dim() const { return layer_dims.front(); }
  std::size_t output_dim() const { return layer_dims.back(); }
  std::size_t param_count() const;

  // Flat layout: for each layer l (input side first), the out x in weight
  // matrix in row-major order, then the out-length bias.
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  bool operator==(const MlpSpec&) const = default;
};

/// Flat real vector with a phantom tag so parameters and gradients do not mix.
template <class Tag>
class FlatVector {
 public:
  FlatVector() = default;
  explicit FlatVector(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit FlatVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }
  std::span<double> span() { return values_; }
  std::span<const double> span() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  Eigen::Map<Eigen::VectorXd> vec() { return {values_.data(), static_cast<Eigen::Index>(values_.size())}; }
  Eigen::Map<const Eigen::VectorXd> vec() const {
    return {values_.data(), static_cast<Eigen::Index>(values_.size())};
  }

  bool operator==(const FlatVector&) const = default;

 private:
  std::vector<double> values_;
};

struct ParamTag {};
struct GradTag {};
using ParamVector = FlatVector<ParamTag>;
using GradVector = FlatVector<GradTag>;

bool all_finite(std::span<const double> v);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias.
ParamVector init_params(const MlpSpec& spec, Rng& rng);

/// Column-major batch: one sample per column.
using Batch = Eigen::MatrixXd;

/// Intermediate activations kept by forward_batch for backward_batch.
struct ForwardTape {
  std::vector<Batch> inputs;  // inputs[l] is the input of layer l
};

Batch forward_batch(const MlpSpec& spec, const ParamVector& params, const Batch& input,
                    ForwardTape* tape = nullptr);

/// Accumulates d(sum(output_grad .* output))/d(params) into `param_grad` (if non-null)
/// and returns the gradient with respect to the batch input.
Batch backward_batch(const MlpSpec& spec, const ParamVector& params, const ForwardTape& tape,
                     const Batch& output_grad, GradVector* param_grad);

std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input);

struct BackwardResult {
  GradVector params;
  std::vector<double> input;
};

BackwardResult backward(const MlpSpec& spec, const ParamVector& params,
                        std::span<const double> input, std::span<const double> output_grad);

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;
  bool operator==(const Layer&) const = default;
};

ParamVector pack(const MlpSpec& spec, const std::vector<Layer>& layers);
std::vector<Layer> unpack(const MlpSpec& spec, const ParamVector& params);

}  // namespace fedhvac::nn
