#pragma once

// One generation of an intrinsically motivated ES. Curiosity-ES, NS-ES and
// plain ES share this code path and differ only in the intrinsic-fitness
// provider (plain ES is phi = 1 with no provider).

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ces/es.hpp"
#include "ces/fitness.hpp"
#include "ces/icm.hpp"
#include "ces/maze.hpp"
#include "ces/replay_buffer.hpp"

namespace ces {

struct Evaluation {
  double extrinsic = 0.0;
  Trajectory trajectory;
};

// Maze behaviour descriptor: final (x, y, v_x, v_y).
std::vector<double> final_behavior(const Trajectory& trajectory);

// Rolls out flat genomes as policy networks on a fixed maze. Read-only and
// safe to call concurrently.
class PolicyEvaluator {
 public:
  explicit PolicyEvaluator(Maze maze, Network policy_template = make_policy_network());

  const Maze& maze() const { return maze_; }
  std::size_t genome_size() const { return template_.parameter_count(); }
  const Network& policy_template() const { return template_; }

  Evaluation operator()(std::span<const double> genome) const;
  // Parallel over genomes; result i belongs to genome i.
  std::vector<Evaluation> evaluate_all(std::span<const ParameterVector> genomes) const;

 private:
  Maze maze_;
  Network template_;
};

// Random initial center with the policy network's uniform fan-in init.
ParameterVector initial_policy_genome(const Network& policy_template, Rng& rng);

// Computes f_i for the whole population (read-only on shared state).
using IntrinsicProvider = std::function<std::vector<double>(std::span<const Evaluation>)>;

struct GenerationResult {
  std::vector<ParameterVector> population;
  std::vector<Evaluation> evaluations;
  std::vector<FitnessRecord> records;
  std::vector<std::size_t> order;  // ranking by total fitness
};

// Sample, evaluate, score, blend, rank and move the center. An empty provider
// leaves f_i = 0 (plain ES).
GenerationResult intrinsic_es_generation(EsState& state, const PolicyEvaluator& evaluator,
                                         const IntrinsicProvider& intrinsic, double phi,
                                         Rng& fitness_rng);

struct CuriositySettings {
  double phi = 0.8;
  double gamma = 0.99;
  IcmTrainOptions training;
};

struct CuriosityGeneration {
  GenerationResult result;
  std::vector<double> icm_loss_history;
};

// Curiosity-ES generation: evaluate and rank with the current ICM, update
// the center, add m transitions per individual to the buffer, then train the
// ICM. Every fitness in the generation uses the ICM produced by the previous
// generation.
CuriosityGeneration curiosity_es_generation(EsState& state, IcmParams& icm, ReplayBuffer& buffer,
                                            const PolicyEvaluator& evaluator,
                                            const CuriositySettings& settings, Rng& fitness_rng,
                                            Rng& buffer_rng, Rng& train_rng);

}  // namespace ces
