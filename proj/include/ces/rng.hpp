#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace ces {

// Seeded random source. The distributions are implemented here on top of
// the raw 64-bit engine so that draws do not depend on the standard
// library's (implementation-defined) distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  // Independent stream derived from (seed, stream_id) via splitmix64.
  static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard normal (Box-Muller, one value per call).
  double normal();
  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::string state() const;
  void set_state(const std::string& text);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ces
