#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "fedhvac/core/rng.hpp"
#include "fedhvac/nn/mlp.hpp"

namespace fedhvac::testing {

/// |a - b| / max(|a|, |b|, floor)
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of f with respect to coordinate i of x.
inline double central_difference(std::vector<double>& x, std::size_t i, const std::function<double()>& f,
                                 double h = 1e-5) {
  const double keep = x[i];
  x[i] = keep + h;
  const double up = f();
  x[i] = keep - h;
  const double down = f();
  x[i] = keep;
  return (up - down) / (2.0 * h);
}

/// Largest relative error between an analytic gradient and central differences of f.
inline double max_fd_error(std::vector<double>& x, const std::vector<double>& analytic,
                           const std::function<double()>& f, double h = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, rel_error(analytic[i], central_difference(x, i, f, h)));
  }
  return worst;
}

inline nn::MlpSpec random_spec(Rng& rng, std::size_t max_dim = 16, std::size_t max_hidden_layers = 2) {
  nn::MlpSpec s;
  const std::size_t hidden = 1 + rng.index(max_hidden_layers);
  for (std::size_t l = 0; l < hidden + 2; ++l) s.layer_dims.push_back(1 + rng.index(max_dim));
  s.activation = rng.uniform() < 0.5 ? nn::Activation::kRelu : nn::Activation::kTanh;
  return s;
}

}  // namespace fedhvac::testing
