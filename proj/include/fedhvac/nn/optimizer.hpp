#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedhvac/nn/mlp.hpp"

namespace fedhvac::nn {

class OptimizerConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class OptimizerKind { kSgd, kSgdm, kAdam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view name);

/// Client optimizer hyperparameters. Defaults follow the usual PyTorch values
/// (Adam 0.9/0.999/1e-8, SGDM momentum 0.9).
struct OptimizerHyper {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.9;

  void validate() const;
  bool operator==(const OptimizerHyper&) const = default;
};

/// sgd: no buffers; sgdm: buffers[0] = velocity; adam: buffers[0] = m, buffers[1] = v.
struct OptimizerState {
  OptimizerHyper hyper;
  std::vector<std::vector<double>> buffers;
  std::uint64_t step_count = 0;

  static OptimizerState create(const OptimizerHyper& hyper, std::size_t param_count);
  bool operator==(const OptimizerState&) const = default;
};

std::size_t required_buffers(OptimizerKind kind);

/// sgd:  p -= lr * g
/// sgdm: v = mu * v + g;  p -= lr * v
/// adam: bias-corrected first/second moments.
void optimizer_step(OptimizerState& state, ParamVector& params, const GradVector& grads);

}  // namespace fedhvac::nn
