#include "fedhvac/sac/replay_buffer.hpp"

#include <cmath>
#include <stdexcept>

namespace fedhvac::sac {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim,
                           std::uint64_t seed)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(act_dim), rng_(seed) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
}

void ReplayBuffer::add(const Transition& t) { add(t.obs, t.action, t.reward, t.next_obs, t.done); }

void ReplayBuffer::add(std::span<const double> obs, std::span<const double> action, double reward,
                       std::span<const double> next_obs, bool done) {
  if (obs.size() != obs_dim_ || next_obs.size() != obs_dim_ || action.size() != act_dim_) {
    throw std::invalid_argument("transition dimensions do not match the replay buffer");
  }
  if (!std::isfinite(reward)) throw std::invalid_argument("transition reward is not finite");

  if (size_ < capacity_) {
    obs_.insert(obs_.end(), obs.begin(), obs.end());
    actions_.insert(actions_.end(), action.begin(), action.end());
    next_obs_.insert(next_obs_.end(), next_obs.begin(), next_obs.end());
    rewards_.push_back(reward);
    dones_.push_back(done ? 1 : 0);
    ++size_;
    next_ = size_ % capacity_;
    return;
  }
  const std::size_t s = next_;
  std::copy(obs.begin(), obs.end(), obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_));
  std::copy(action.begin(), action.end(), actions_.begin() + static_cast<std::ptrdiff_t>(s * act_dim_));
  std::copy(next_obs.begin(), next_obs.end(), next_obs_.begin() + static_cast<std::ptrdiff_t>(s * obs_dim_));
  rewards_[s] = reward;
  dones_[s] = done ? 1 : 0;
  next_ = (next_ + 1) % capacity_;
}

std::size_t ReplayBuffer::slot_of(std::size_t i) const {
  if (i >= size_) throw std::out_of_range("replay buffer index out of range");
  if (size_ < capacity_) return i;
  return (next_ + i) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  const std::size_t s = slot_of(i);
  Transition t;
  auto o = obs(s), a = action(s), n = next_obs(s);
  t.obs.assign(o.begin(), o.end());
  t.action.assign(a.begin(), a.end());
  t.next_obs.assign(n.begin(), n.end());
  t.reward = rewards_[s];
  t.done = dones_[s] != 0;
  return t;
}

std::span<const double> ReplayBuffer::obs(std::size_t slot) const {
  return {obs_.data() + slot * obs_dim_, obs_dim_};
}
std::span<const double> ReplayBuffer::action(std::size_t slot) const {
  return {actions_.data() + slot * act_dim_, act_dim_};
}
std::span<const double> ReplayBuffer::next_obs(std::size_t slot) const {
  return {next_obs_.data() + slot * obs_dim_, obs_dim_};
}

std::vector<std::size_t> ReplayBuffer::sample_slots(std::size_t n) {
  if (size_ == 0) throw std::logic_error("cannot sample from an empty replay buffer");
  std::vector<std::size_t> out(n);
  for (auto& s : out) s = rng_.index(size_);
  return out;
}

}  // namespace fedhvac::sac
