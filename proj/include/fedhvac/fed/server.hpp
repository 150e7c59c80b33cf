#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedhvac/fed/aggregation.hpp"
#include "fedhvac/nn/mlp.hpp"

namespace fedhvac::fed {

enum class ServerKind { kFedAvg, kFedAvgM, kFedAdam };

std::string_view to_string(ServerKind kind);
ServerKind server_kind_from_string(std::string_view name);

struct ServerConfig {
  ServerKind kind = ServerKind::kFedAvg;
  double eta_g = 1.0;
  double momentum = 0.9;   // FedAvgM
  double beta1 = 0.9;      // FedAdam
  double beta2 = 0.99;
  double epsilon = 1e-3;
  double tau_mask = 0.4;
  bool masking = true;
  double fraction = 1.0;   // C

  void validate() const;
  bool operator==(const ServerConfig&) const = default;
};

/// Global model plus server optimizer moments. `momentum` holds v for FedAvgM
/// and m for FedAdam; `second_moment` is FedAdam's v. Both start at zero.
struct ServerState {
  ServerConfig config;
  std::vector<nn::ParamVector> globals;
  std::vector<std::vector<double>> momentum;
  std::vector<std::vector<double>> second_moment;
  std::uint64_t round = 0;

  static ServerState create(const ServerConfig& config, std::vector<nn::ParamVector> globals);
};

/// fedavg:  w += eta_g * mask .* delta
/// fedavgm: v = mu v + eta_g delta;   w += mask .* v
/// fedadam: m = b1 m + (1-b1) delta;  v = b2 v + (1-b2) delta^2;
///          w += eta_g * mask .* m / (sqrt(v) + eps)      (no bias correction)
void server_step(ServerState& state, const std::vector<nn::GradVector>& delta,
                 const std::vector<MaskVector>& mask);

/// All-ones masks shaped like `delta` (masking disabled).
std::vector<MaskVector> unit_masks(const std::vector<nn::GradVector>& delta);

}  // namespace fedhvac::fed
