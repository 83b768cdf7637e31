#include "ces/replay_buffer.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace ces {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
  if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t per_trajectory)
    : capacity_(capacity), per_trajectory_(per_trajectory) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  if (per_trajectory == 0) throw std::invalid_argument("ReplayBuffer: m must be positive");
}

void ReplayBuffer::push(Transition t) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(t));
}

void ReplayBuffer::add_from_trajectory(const Trajectory& trajectory, Rng& rng) {
  const std::size_t n = trajectory.size();
  if (n == 0) return;
  std::vector<std::size_t> picks = sample_without_replacement(n, std::min(per_trajectory_, n), rng);
  std::sort(picks.begin(), picks.end());
  for (std::size_t i : picks) push(trajectory.transitions[i]);
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch_size, Rng& rng) const {
  if (items_.empty()) throw std::logic_error("ReplayBuffer::sample: buffer is empty");
  if (batch_size <= items_.size()) return sample_without_replacement(items_.size(), batch_size, rng);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = static_cast<std::size_t>(rng.below(items_.size()));
  return idx;
}

std::vector<Transition> ReplayBuffer::sample_batch(std::size_t batch_size, Rng& rng) const {
  std::vector<Transition> out;
  out.reserve(batch_size);
  for (std::size_t i : sample_indices(batch_size, rng)) out.push_back(items_[i]);
  return out;
}

void ReplayBuffer::dump(const std::filesystem::path& path) const {
  std::size_t state_dim = 0, action_dim = 0;
  if (!items_.empty()) {
    state_dim = items_.front().state.size();
    action_dim = items_.front().action.size();
  }
  std::vector<double> flat;
  flat.reserve(items_.size() * (2 * state_dim + action_dim));
  for (const Transition& t : items_) {
    flat.insert(flat.end(), t.state.begin(), t.state.end());
    flat.insert(flat.end(), t.action.begin(), t.action.end());
    flat.insert(flat.end(), t.next_state.begin(), t.next_state.end());
  }
  nlohmann::json header{{"kind", "replay"},        {"count", flat.size()},
                        {"records", items_.size()}, {"state_dim", state_dim},
                        {"action_dim", action_dim}};
  save_array(path, flat, header.dump());
}

}  // namespace ces
