#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ces/icm.hpp"
#include "ces/maze.hpp"
#include "ces/rng.hpp"

namespace ces {

struct FitnessRecord {
  std::size_t index = 0;
  double extrinsic = 0.0;
  double intrinsic = 0.0;
  double total = 0.0;
};

// Sum of rewards over the episode.
double extrinsic_fitness(const Trajectory& trajectory);

// sum_t gamma^(n-1-t) e_t over per-step errors, so the final step has weight
// 1 (0^0 is taken as 1).
double discounted_sum(std::span<const double> errors, double gamma);

// Discounted forward-model error over the whole trajectory; 0 (with a
// warning) for an empty trajectory.
double curiosity_fitness(const IcmParams& icm, const Trajectory& trajectory, double gamma);

// Population z-scores with the 1/N standard deviation. A channel whose values
// are all equal (including all +inf) scores 0 everywhere.
std::vector<double> z_scores(std::span<const double> values);

// phi * z(f_e) + (1 - phi) * z(f_i) over the current population. If every
// f_e is exactly 0 they are replaced by standard-normal draws first. Needs at
// least two records; fills in `total` and returns the totals.
std::vector<double> combine_fitness(std::span<FitnessRecord> records, double phi, Rng& rng);

}  // namespace ces
