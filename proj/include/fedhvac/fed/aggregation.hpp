#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedhvac/core/rng.hpp"
#include "fedhvac/nn/mlp.hpp"

namespace fedhvac::fed {

class AggregationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-client pseudo-gradient: one delta per federated network (w_local - w_global)
/// and the number of transitions the client collected in the round.
struct ClientUpdate {
  std::vector<nn::GradVector> deltas;
  std::size_t n = 0;
};

/// Soft mask, one entry per coordinate, each in [0, 1].
struct MaskVector {
  std::vector<double> values;
  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

/// sum_k n_k / n_tot * delta_k. Equal deltas aggregate to that delta exactly.
std::vector<nn::GradVector> aggregate(std::span<const ClientUpdate> updates);

/// A_j = |mean_k sign(delta_k[j])|, with sign(0) = 0.
std::vector<double> agreement_scores(std::span<const ClientUpdate> updates, std::size_t network);

/// 1 where A_j >= tau, else A_j.
MaskVector mask_from_agreement(std::span<const double> agreement, double tau);

/// One mask per federated network.
std::vector<MaskVector> agreement_mask(std::span<const ClientUpdate> updates, double tau);

/// m = max(floor(C * K), 1) distinct clients, returned in ascending order.
std::vector<std::size_t> select_clients(std::size_t num_clients, double fraction, Rng& rng);

struct NetworkRoundStats {
  double delta_norm = 0.0;   // L2 norm of the aggregated pseudo-gradient
  double mean_mask = 0.0;
  double agree_frac = 0.0;   // fraction of coordinates with A >= tau
};

NetworkRoundStats round_stats(const nn::GradVector& delta, std::span<const double> agreement,
                              const MaskVector& mask, double tau);

}  // namespace fedhvac::fed
