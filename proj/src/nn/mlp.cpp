#include "fedhvac/nn/mlp.hpp"

#include <cmath>

namespace fedhvac::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_congruent(const MlpSpec& spec, const ParamVector& params) {
  spec.validate();
  if (params.size() != spec.param_count()) {
    throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                     " entries, spec requires " + std::to_string(spec.param_count()));
  }
}

void apply_activation(Activation act, Batch& z) {
  switch (act) {
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kTanh:
      z = z.array().tanh();
      break;
  }
}

// Derivative expressed through the activation output.
void scale_by_activation_grad(Activation act, const Batch& activated, Batch& grad) {
  switch (act) {
    case Activation::kRelu:
      grad = (activated.array() > 0.0).select(grad, 0.0);
      break;
    case Activation::kTanh:
      grad.array() *= 1.0 - activated.array().square();
      break;
  }
}

}  // namespace

void MlpSpec::validate() const {
  if (layer_dims.size() < 2) throw ShapeError("MlpSpec needs at least an input and an output dim");
  for (auto d : layer_dims) {
    if (d == 0) throw ShapeError("MlpSpec dims must be positive");
  }
}

std::size_t MlpSpec::param_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    n += layer_dims[l + 1] * layer_dims[l] + layer_dims[l + 1];
  }
  return n;
}

std::size_t MlpSpec::weight_offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += layer_dims[l + 1] * layer_dims[l] + layer_dims[l + 1];
  return off;
}

std::size_t MlpSpec::bias_offset(std::size_t layer) const {
  return weight_offset(layer) + layer_dims[layer + 1] * layer_dims[layer];
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

ParamVector init_params(const MlpSpec& spec, Rng& rng) {
  spec.validate();
  ParamVector p(spec.param_count());
  std::size_t k = 0;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(spec.layer_dims[l]));
    const std::size_t n = spec.layer_dims[l + 1] * spec.layer_dims[l] + spec.layer_dims[l + 1];
    for (std::size_t i = 0; i < n; ++i) p[k++] = rng.uniform(-bound, bound);
  }
  return p;
}

Batch forward_batch(const MlpSpec& spec, const ParamVector& params, const Batch& input,
                    ForwardTape* tape) {
  check_congruent(spec, params);
  if (static_cast<std::size_t>(input.rows()) != spec.input_dim()) {
    throw ShapeError("input has " + std::to_string(input.rows()) + " rows, expected " +
                     std::to_string(spec.input_dim()));
  }
  if (tape) tape->inputs.assign(spec.num_layers(), Batch());

  Batch x = input;
  for (std::size_t l = 0; l < spec.num_layers(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_dims[l + 1]);
    Eigen::Map<const RowMatrix> w(params.data() + spec.weight_offset(l), out, in);
    Eigen::Map<const Eigen::VectorXd> b(params.data() + spec.bias_offset(l), out);
    Batch z = w * x;
    z.colwise() += b;
    if (l + 1 < spec.num_layers()) apply_activation(spec.activation, z);
    if (!z.allFinite()) throw NumericError(l, "non-finite activation in forward pass");
    if (tape) {
      tape->inputs[l] = std::move(x);
    }
    x = std::move(z);
  }
  return x;
}

Batch backward_batch(const MlpSpec& spec, const ParamVector& params, const ForwardTape& tape,
                     const Batch& output_grad, GradVector* param_grad) {
  check_congruent(spec, params);
  if (tape.inputs.size() != spec.num_layers()) throw ShapeError("tape does not match spec");
  if (static_cast<std::size_t>(output_grad.rows()) != spec.output_dim() ||
      output_grad.cols() != tape.inputs.front().cols()) {
    throw ShapeError("output gradient shape does not match forward batch");
  }
  if (param_grad) {
    if (param_grad->empty()) *param_grad = GradVector(spec.param_count());
    if (param_grad->size() != spec.param_count()) throw ShapeError("gradient vector size mismatch");
  }

  Batch delta = output_grad;
  for (std::size_t l = spec.num_layers(); l-- > 0;) {
    const auto in = static_cast<Eigen::Index>(spec.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_dims[l + 1]);
    const Batch& x = tape.inputs[l];
    if (param_grad) {
      Eigen::Map<RowMatrix> dw(param_grad->data() + spec.weight_offset(l), out, in);
      Eigen::Map<Eigen::VectorXd> db(param_grad->data() + spec.bias_offset(l), out);
      dw.noalias() += delta * x.transpose();
      db.noalias() += delta.rowwise().sum();
    }
    Eigen::Map<const RowMatrix> w(params.data() + spec.weight_offset(l), out, in);
    Batch next = w.transpose() * delta;
    if (l > 0) scale_by_activation_grad(spec.activation, x, next);
    if (!next.allFinite()) throw NumericError(l, "non-finite gradient in backward pass");
    delta = std::move(next);
  }
  return delta;
}

std::vector<double> forward(const MlpSpec& spec, const ParamVector& params,
                            std::span<const double> input) {
  spec.validate();
  if (input.size() != spec.input_dim()) {
    throw ShapeError("input length " + std::to_string(input.size()) + " != " +
                     std::to_string(spec.input_dim()));
  }
  Batch x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  Batch y = forward_batch(spec, params, x);
  return {y.data(), y.data() + y.size()};
}

BackwardResult backward(const MlpSpec& spec, const ParamVector& params,
                        std::span<const double> input, std::span<const double> output_grad) {
  spec.validate();
  if (input.size() != spec.input_dim()) throw ShapeError("input length mismatch");
  if (output_grad.size() != spec.output_dim()) throw ShapeError("output gradient length mismatch");
  Batch x = Eigen::Map<const Eigen::VectorXd>(input.data(), static_cast<Eigen::Index>(input.size()));
  ForwardTape tape;
  forward_batch(spec, params, x, &tape);
  Batch g = Eigen::Map<const Eigen::VectorXd>(output_grad.data(),
                                              static_cast<Eigen::Index>(output_grad.size()));
  BackwardResult result{GradVector(spec.param_count()), {}};
  Batch dx = backward_batch(spec, params, tape, g, &result.params);
  result.input.assign(dx.data(), dx.data() + dx.size());
  return result;
}

ParamVector pack(const MlpSpec& spec, const std::vector<Layer>& layers) {
  spec.validate();
  if (layers.size() != spec.num_layers()) throw ShapeError("layer count mismatch");
  ParamVector p(spec.param_count());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_dims[l + 1]);
    if (layers[l].weight.rows() != out || layers[l].weight.cols() != in || layers[l].bias.size() != out) {
      throw ShapeError("layer " + std::to_string(l) + " shape mismatch");
    }
    Eigen::Map<RowMatrix>(p.data() + spec.weight_offset(l), out, in) = layers[l].weight;
    Eigen::Map<Eigen::VectorXd>(p.data() + spec.bias_offset(l), out) = layers[l].bias;
  }
  return p;
}

std::vector<Layer> unpack(const MlpSpec& spec, const ParamVector& params) {
  check_congruent(spec, params);
  std::vector<Layer> layers(spec.num_layers());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(spec.layer_dims[l]);
    const auto out = static_cast<Eigen::Index>(spec.layer_dims[l + 1]);
    layers[l].weight = Eigen::Map<const RowMatrix>(params.data() + spec.weight_offset(l), out, in);
    layers[l].bias = Eigen::Map<const Eigen::VectorXd>(params.data() + spec.bias_offset(l), out);
  }
  return layers;
}

}  // namespace fedhvac::nn
