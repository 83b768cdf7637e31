#pragma once

// NS-ES (kNN novelty over an append-only behaviour archive, blended with the
// extrinsic fitness through the shared ES generation) and a grid MAP-Elites
// with Gaussian genome mutation.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "ces/generation.hpp"

namespace ces {

using BehaviorDescriptor = std::vector<double>;

struct NoveltyArchive {
  std::vector<BehaviorDescriptor> behaviors;
  std::vector<std::uint64_t> generation_found;
  std::size_t k = 10;

  std::size_t size() const { return behaviors.size(); }
  void add(BehaviorDescriptor b, std::uint64_t generation);
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

// Mean distance to the k nearest archive entries (all entries if fewer than
// k). +inf for an empty archive.
double novelty_score(const NoveltyArchive& archive, std::span<const double> behavior);

struct NsEsGeneration {
  GenerationResult result;
};

// Novelty is scored against the archive as it was at the start of the
// generation; all lambda behaviours are appended afterwards.
NsEsGeneration ns_es_generation(EsState& state, NoveltyArchive& archive, double phi,
                                const PolicyEvaluator& evaluator, Rng& fitness_rng);

struct Elite {
  ParameterVector genome;
  double fitness = 0.0;
  BehaviorDescriptor behavior;
  std::uint64_t generation = 0;
};

// One elite per cell of a regular grid; behaviours outside the bounds are
// clamped into the boundary cells.
class EliteGrid {
 public:
  EliteGrid(std::vector<double> lower, std::vector<double> upper, std::size_t resolution = 50);

  std::size_t dimensions() const { return lower_.size(); }
  std::size_t resolution() const { return resolution_; }
  double total_cells() const;
  std::size_t size() const { return elites_.size(); }
  bool empty() const { return elites_.empty(); }
  double coverage() const { return static_cast<double>(size()) / total_cells(); }

  std::vector<std::size_t> cell_of(std::span<const double> behavior) const;
  std::uint64_t cell_key(std::span<const double> behavior) const;

  // Inserts into an empty cell or over a strictly worse elite.
  bool try_insert(Elite elite);

  const Elite* find(std::span<const double> behavior) const;
  // Elites in the order their cells were first filled.
  const std::vector<Elite>& elites() const { return elites_; }
  const Elite& best() const;

  void write_csv(std::ostream& out) const;

 private:
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::size_t resolution_;
  std::unordered_map<std::uint64_t, std::size_t> slot_;
  std::vector<Elite> elites_;
};

// Grid over the maze behaviour (x, y, v_x, v_y): world bounds and
// [-max_speed, max_speed].
EliteGrid make_maze_grid(const Maze& maze, std::size_t resolution = 50);

// Random genomes N(0, sigma^2) inserted into the grid.
std::vector<Evaluation> map_elites_bootstrap(EliteGrid& grid, std::size_t count, double sigma,
                                             const PolicyEvaluator& evaluator, Rng& rng);

// Picks `batch` uniformly random elites, mutates each gene with N(0, sigma_m^2),
// evaluates and inserts.
std::vector<Evaluation> map_elites_generation(EliteGrid& grid, std::size_t batch, double mutation_sigma,
                                              const PolicyEvaluator& evaluator, Rng& rng,
                                              std::uint64_t generation);

}  // namespace ces
