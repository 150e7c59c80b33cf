#include "fedhvac/fed/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedhvac::fed {
namespace {

void check_congruent(std::span<const ClientUpdate> updates) {
  if (updates.empty()) throw AggregationError("no client updates to aggregate");
  const auto& ref = updates.front().deltas;
  for (const auto& u : updates) {
    if (u.deltas.size() != ref.size()) throw AggregationError("client updates carry different network counts");
    for (std::size_t k = 0; k < ref.size(); ++k) {
      if (u.deltas[k].size() != ref[k].size()) throw AggregationError("client update shapes differ");
    }
  }
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

std::vector<nn::GradVector> aggregate(std::span<const ClientUpdate> updates) {
  check_congruent(updates);
  std::size_t total = 0;
  for (const auto& u : updates) total += u.n;
  if (total == 0) throw AggregationError("total client sample count is zero");

  // Offsets from the first client keep identical updates exact: sum_k w_k = 1, so
  // d_1 + sum_k w_k (d_k - d_1) is the weighted mean.
  std::vector<nn::GradVector> out = updates.front().deltas;
  for (const auto& u : updates.subspan(1)) {
    const double w = static_cast<double>(u.n) / static_cast<double>(total);
    for (std::size_t k = 0; k < out.size(); ++k) {
      auto& acc = out[k];
      const auto& d = u.deltas[k];
      const auto& ref = updates.front().deltas[k];
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * (d[i] - ref[i]);
    }
  }
  return out;
}

std::vector<double> agreement_scores(std::span<const ClientUpdate> updates, std::size_t network) {
  check_congruent(updates);
  if (network >= updates.front().deltas.size()) throw AggregationError("network index out of range");
  const std::size_t dim = updates.front().deltas[network].size();
  std::vector<double> sum(dim, 0.0);
  for (const auto& u : updates) {
    const auto& d = u.deltas[network];
    for (std::size_t i = 0; i < dim; ++i) sum[i] += sign(d[i]);
  }
  const double k = static_cast<double>(updates.size());
  for (auto& s : sum) s = std::abs(s / k);
  return sum;
}

MaskVector mask_from_agreement(std::span<const double> agreement, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw AggregationError("mask threshold must lie in (0, 1]");
  MaskVector m;
  m.values.resize(agreement.size());
  for (std::size_t i = 0; i < agreement.size(); ++i) m.values[i] = agreement[i] >= tau ? 1.0 : agreement[i];
  return m;
}

std::vector<MaskVector> agreement_mask(std::span<const ClientUpdate> updates, double tau) {
  check_congruent(updates);
  std::vector<MaskVector> masks;
  for (std::size_t k = 0; k < updates.front().deltas.size(); ++k) {
    masks.push_back(mask_from_agreement(agreement_scores(updates, k), tau));
  }
  return masks;
}

std::vector<std::size_t> select_clients(std::size_t num_clients, double fraction, Rng& rng) {
  if (num_clients == 0) throw AggregationError("need at least one client");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw AggregationError("client fraction must lie in (0, 1]");
  const auto m = std::max<std::size_t>(
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(num_clients))), 1);
  std::vector<std::size_t> all(num_clients);
  std::iota(all.begin(), all.end(), 0);
  if (m >= num_clients) return all;
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + rng.index(num_clients - i);
    std::swap(all[i], all[j]);
  }
  all.resize(m);
  std::sort(all.begin(), all.end());
  return all;
}

NetworkRoundStats round_stats(const nn::GradVector& delta, std::span<const double> agreement,
                              const MaskVector& mask, double tau) {
  NetworkRoundStats s;
  double sq = 0.0;
  for (double d : delta) sq += d * d;
  s.delta_norm = std::sqrt(sq);
  if (!mask.values.empty()) {
    s.mean_mask = std::accumulate(mask.values.begin(), mask.values.end(), 0.0) /
                  static_cast<double>(mask.values.size());
  }
  if (!agreement.empty()) {
    const auto agreeing = std::count_if(agreement.begin(), agreement.end(), [&](double a) { return a >= tau; });
    s.agree_frac = static_cast<double>(agreeing) / static_cast<double>(agreement.size());
  }
  return s;
}

}  // namespace fedhvac::fed
