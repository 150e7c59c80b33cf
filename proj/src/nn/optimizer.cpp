#include "fedhvac/nn/optimizer.hpp"

#include <cmath>

namespace fedhvac::nn {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return "sgd";
    case OptimizerKind::kSgdm:
      return "sgdm";
    case OptimizerKind::kAdam:
      return "adam";
  }
  return "?";
}

OptimizerKind optimizer_kind_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "sgdm") return OptimizerKind::kSgdm;
  if (name == "adam") return OptimizerKind::kAdam;
  throw OptimizerConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd|sgdm|adam)");
}

void OptimizerHyper::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw OptimizerConfigError("learning rate must be finite and non-negative");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw OptimizerConfigError("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw OptimizerConfigError("epsilon must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw OptimizerConfigError("momentum must lie in [0, 1)");
}

std::size_t required_buffers(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd:
      return 0;
    case OptimizerKind::kSgdm:
      return 1;
    case OptimizerKind::kAdam:
      return 2;
  }
  return 0;
}

OptimizerState OptimizerState::create(const OptimizerHyper& hyper, std::size_t param_count) {
  hyper.validate();
  OptimizerState s;
  s.hyper = hyper;
  s.buffers.assign(required_buffers(hyper.kind), std::vector<double>(param_count, 0.0));
  return s;
}

void optimizer_step(OptimizerState& state, ParamVector& params, const GradVector& grads) {
  const auto& h = state.hyper;
  if (state.buffers.size() != required_buffers(h.kind)) {
    throw OptimizerConfigError(std::string(to_string(h.kind)) + " optimizer expects " +
                               std::to_string(required_buffers(h.kind)) + " buffers, state has " +
                               std::to_string(state.buffers.size()));
  }
  if (grads.size() != params.size()) throw ShapeError("gradient and parameter sizes differ");
  for (const auto& b : state.buffers) {
    if (b.size() != params.size()) throw OptimizerConfigError("optimizer buffer size mismatch");
  }

  const std::size_t n = params.size();
  ++state.step_count;
  switch (h.kind) {
    case OptimizerKind::kSgd:
      for (std::size_t i = 0; i < n; ++i) params[i] -= h.learning_rate * grads[i];
      break;
    case OptimizerKind::kSgdm: {
      auto& v = state.buffers[0];
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = h.momentum * v[i] + grads[i];
        params[i] -= h.learning_rate * v[i];
      }
      break;
    }
    case OptimizerKind::kAdam: {
      auto& m = state.buffers[0];
      auto& v = state.buffers[1];
      const double t = static_cast<double>(state.step_count);
      const double bc1 = 1.0 - std::pow(h.beta1, t);
      const double bc2 = 1.0 - std::pow(h.beta2, t);
      for (std::size_t i = 0; i < n; ++i) {
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * grads[i];
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * grads[i] * grads[i];
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
      }
      break;
    }
  }
}

}  // namespace fedhvac::nn
