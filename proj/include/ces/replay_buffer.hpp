#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <vector>

#include "ces/maze.hpp"
#include "ces/rng.hpp"

namespace ces {

// Bounded FIFO of transitions; the oldest entries are evicted first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t per_trajectory);

  std::size_t capacity() const { return capacity_; }
  std::size_t per_trajectory() const { return per_trajectory_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }

  void push(Transition t);

  // Appends min(m, |trajectory|) transitions drawn uniformly without
  // replacement, in trajectory order.
  void add_from_trajectory(const Trajectory& trajectory, Rng& rng);

  // Uniform indices: without replacement when batch_size <= size(), with
  // replacement otherwise. Throws on an empty buffer.
  std::vector<std::size_t> sample_indices(std::size_t batch_size, Rng& rng) const;
  std::vector<Transition> sample_batch(std::size_t batch_size, Rng& rng) const;

  // Flat float64 records (s, a, s') in buffer order.
  void dump(const std::filesystem::path& path) const;

 private:
  std::size_t capacity_;
  std::size_t per_trajectory_;
  std::deque<Transition> items_;
};

// First k entries of a uniform random permutation of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng);

}  // namespace ces
