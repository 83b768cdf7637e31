#pragma once

// Experiment runner: config parsing, the per-generation loop for every
// algorithm, reports and checkpoints.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "ces/fitness.hpp"
#include "ces/metrics.hpp"

namespace ces {

enum class Algorithm { curiosity_es, ns_es, map_elites, plain_es };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view name);

struct RunConfig {
  Algorithm algorithm = Algorithm::curiosity_es;
  std::string environment = "snake";  // builtin maze name or maze file path

  double sigma = 0.5;
  std::size_t lambda = 56;
  std::size_t mu = 28;
  double alpha = 1.0;
  double icm_learning_rate = 1e-4;
  double beta = 0.2;
  double gamma = 0.99;
  int icm_epochs = 64;  // p
  std::size_t icm_batch_size = 128;
  // Minibatches per ICM epoch; 0 is a full pass over the buffer.
  std::size_t icm_batches_per_epoch = 1;
  std::size_t icm_feature_dim = 32;
  std::size_t transitions_per_individual = 50;  // m
  std::size_t buffer_capacity = 200000;
  double phi = 0.8;
  std::size_t knn = 20;
  int horizon = 500;  // overrides the maze file's horizon
  std::size_t generations = 300;

  std::size_t map_elites_bootstrap = 500;
  std::size_t map_elites_batch = 56;
  double map_elites_sigma = 0.5;
  std::size_t grid_resolution = 50;

  std::size_t checkpoint_every = 25;
  std::size_t fingerprint_limit = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

// Per-maze defaults for the named maze (snake, us, hard); unknown names get the
// snake values.
RunConfig default_config(std::string_view maze_name);

// Flat `key = value` lines, `#` comments. `environment` (or `maze`) is read
// first and selects the defaults the remaining keys override.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& config);

struct GenerationReport {
  std::size_t generation = 0;
  double max_extrinsic = 0.0;
  double mean_extrinsic = 0.0;
  double min_extrinsic = 0.0;
  double max_intrinsic = 0.0;
  double mean_intrinsic = 0.0;
  double best_so_far = 0.0;
  double coverage_percent = 0.0;
  std::size_t buffer_size = 0;
  double icm_loss = 0.0;
  std::size_t rollouts = 0;
  std::size_t dominance_violations = 0;
  double wall_ms = 0.0;
};

struct RunSummary {
  std::vector<GenerationReport> reports;
  double best_so_far = 0.0;
  double final_coverage_percent = 0.0;
  std::size_t rollouts = 0;
  std::size_t archive_size = 0;
  std::size_t dominance_violations = 0;
  std::vector<double> final_center;
};

struct RunOptions {
  // Empty: nothing is written.
  std::filesystem::path output_dir;
  // Called after every generation.
  std::function<void(const GenerationReport&)> on_generation;
};

RunSummary run_experiment(const RunConfig& config, const RunOptions& options = {});

// Number of rewarding individuals ranked behind a non-rewarding one.
std::size_t count_dominance_violations(std::span<const FitnessRecord> records);

struct ReplayResult {
  std::vector<RolloutResult> episodes;
};

// Re-rolls a checkpointed center (episode 0) and sigma-perturbations of it
// drawn from `seed`; writes episode_<k>.csv into out_dir when non-empty.
ReplayResult replay_checkpoint(const std::filesystem::path& checkpoint, std::size_t episodes, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

// Writes reward_curve, coverage, final_states and (with enough rewarding
// fingerprints) pca CSVs plus SVGs into out_dir, for one or more run dirs.
void analyze_runs(std::span<const std::filesystem::path> runs, const std::filesystem::path& out_dir);

}  // namespace ces
