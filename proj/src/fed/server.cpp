#include "fedhvac/fed/server.hpp"

#include <cmath>

namespace fedhvac::fed {

std::string_view to_string(ServerKind kind) {
  switch (kind) {
    case ServerKind::kFedAvg:
      return "fedavg";
    case ServerKind::kFedAvgM:
      return "fedavgm";
    case ServerKind::kFedAdam:
      return "fedadam";
  }
  return "?";
}

ServerKind server_kind_from_string(std::string_view name) {
  if (name == "fedavg") return ServerKind::kFedAvg;
  if (name == "fedavgm") return ServerKind::kFedAvgM;
  if (name == "fedadam") return ServerKind::kFedAdam;
  throw std::invalid_argument("unknown server optimizer '" + std::string(name) + "' (expected fedavg|fedavgm|fedadam)");
}

void ServerConfig::validate() const {
  if (!(eta_g >= 0.0) || !std::isfinite(eta_g)) throw std::invalid_argument("eta_g must be finite and non-negative");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("server momentum must lie in [0, 1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("server beta1/beta2 must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("server epsilon must be positive");
  if (!(tau_mask > 0.0 && tau_mask <= 1.0)) throw std::invalid_argument("masking threshold must lie in (0, 1]");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("client fraction must lie in (0, 1]");
}

ServerState ServerState::create(const ServerConfig& config, std::vector<nn::ParamVector> globals) {
  config.validate();
  ServerState s;
  s.config = config;
  s.globals = std::move(globals);
  if (config.kind != ServerKind::kFedAvg) {
    for (const auto& g : s.globals) s.momentum.emplace_back(g.size(), 0.0);
  }
  if (config.kind == ServerKind::kFedAdam) {
    for (const auto& g : s.globals) s.second_moment.emplace_back(g.size(), 0.0);
  }
  return s;
}

std::vector<MaskVector> unit_masks(const std::vector<nn::GradVector>& delta) {
  std::vector<MaskVector> m;
  for (const auto& d : delta) m.push_back(MaskVector{std::vector<double>(d.size(), 1.0)});
  return m;
}

void server_step(ServerState& state, const std::vector<nn::GradVector>& delta,
                 const std::vector<MaskVector>& mask) {
  const auto& c = state.config;
  const std::size_t nets = state.globals.size();
  if (delta.size() != nets || mask.size() != nets) throw AggregationError("server step network count mismatch");
  const bool needs_m = c.kind != ServerKind::kFedAvg;
  const bool needs_v = c.kind == ServerKind::kFedAdam;
  if ((state.momentum.size() == nets) != needs_m || (needs_m && state.momentum.size() != nets) ||
      (state.second_moment.size() == nets) != needs_v) {
    throw std::logic_error(std::string("server state buffers do not match optimizer ") +
                           std::string(to_string(c.kind)));
  }

  for (std::size_t k = 0; k < nets; ++k) {
    auto& w = state.globals[k];
    const auto& d = delta[k];
    const auto& m = mask[k];
    if (d.size() != w.size() || m.size() != w.size()) throw AggregationError("server step shape mismatch");
    switch (c.kind) {
      case ServerKind::kFedAvg:
        // Same association as fedavgm so that mu = 0 reproduces this bit for bit.
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += m[i] * (c.eta_g * d[i]);
        break;
      case ServerKind::kFedAvgM: {
        auto& v = state.momentum[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
          v[i] = c.momentum * v[i] + c.eta_g * d[i];
          w[i] += m[i] * v[i];
        }
        break;
      }
      case ServerKind::kFedAdam: {
        auto& mo = state.momentum[k];
        auto& v = state.second_moment[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
          mo[i] = c.beta1 * mo[i] + (1.0 - c.beta1) * d[i];
          v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * d[i] * d[i];
          w[i] += c.eta_g * m[i] * mo[i] / (std::sqrt(v[i]) + c.epsilon);
        }
        break;
      }
    }
  }
  ++state.round;
}

}  // namespace fedhvac::fed
