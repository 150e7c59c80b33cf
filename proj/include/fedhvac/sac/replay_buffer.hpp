#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fedhvac/core/rng.hpp"

namespace fedhvac::sac {

/// One (s, a, r, s') step. Observations are raw (unnormalized); the action is in
/// environment units.
struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool done = false;
};

/// FIFO ring of transitions with uniform sampling (with replacement).
/// Storage is flat and grows on demand up to `capacity`.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim, std::uint64_t seed);

  void add(const Transition& t);
  void add(std::span<const double> obs, std::span<const double> action, double reward,
           std::span<const double> next_obs, bool done);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t obs_dim() const { return obs_dim_; }
  std::size_t act_dim() const { return act_dim_; }

  /// Index 0 is the oldest stored transition.
  Transition at(std::size_t i) const;

  std::span<const double> obs(std::size_t slot) const;
  std::span<const double> action(std::size_t slot) const;
  std::span<const double> next_obs(std::size_t slot) const;
  double reward(std::size_t slot) const { return rewards_[slot]; }
  bool done(std::size_t slot) const { return dones_[slot] != 0; }

  /// Draws `n` storage slots uniformly with replacement. Requires size() > 0.
  std::vector<std::size_t> sample_slots(std::size_t n);

 private:
  std::size_t slot_of(std::size_t i) const;

  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  std::size_t size_ = 0;
  std::size_t next_ = 0;
  std::vector<double> obs_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> next_obs_;
  std::vector<std::uint8_t> dones_;
  Rng rng_;
};

}  // namespace fedhvac::sac
