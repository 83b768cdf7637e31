#include "ces/generation.hpp"

#include <stdexcept>

#include "ces/parallel.hpp"

namespace ces {

std::vector<double> final_behavior(const Trajectory& trajectory) {
  if (trajectory.empty()) throw std::invalid_argument("final_behavior: empty trajectory");
  const auto s = trajectory.final_state();
  return {s[0], s[1], s[2], s[3]};
}

PolicyEvaluator::PolicyEvaluator(Maze maze, Network policy_template)
    : maze_(std::move(maze)), template_(std::move(policy_template)) {
  if (template_.input_dim() != kStateDim || template_.output_dim() != kActionDim) {
    throw std::invalid_argument("PolicyEvaluator: policy must map 36 inputs to 2 outputs");
  }
}

Evaluation PolicyEvaluator::operator()(std::span<const double> genome) const {
  Network policy = template_;
  policy.set_weights(genome);
  RolloutResult r = rollout(maze_, policy);
  return {r.extrinsic_fitness, std::move(r.trajectory)};
}

std::vector<Evaluation> PolicyEvaluator::evaluate_all(std::span<const ParameterVector> genomes) const {
  std::vector<Evaluation> out(genomes.size());
  parallel_for(genomes.size(), [&](std::size_t i) { out[i] = (*this)(genomes[i]); });
  return out;
}

ParameterVector initial_policy_genome(const Network& policy_template, Rng& rng) {
  Network net = policy_template;
  net.init_uniform(rng);
  return {net.weights().begin(), net.weights().end()};
}

GenerationResult intrinsic_es_generation(EsState& state, const PolicyEvaluator& evaluator,
                                         const IntrinsicProvider& intrinsic, double phi,
                                         Rng& fitness_rng) {
  GenerationResult g;
  g.population = sample_population(state);
  g.evaluations = evaluator.evaluate_all(g.population);
  std::vector<double> fi(g.population.size(), 0.0);
  if (intrinsic) {
    fi = intrinsic(g.evaluations);
    if (fi.size() != g.population.size()) throw std::logic_error("intrinsic provider returned wrong count");
  }
  g.records.resize(g.population.size());
  for (std::size_t i = 0; i < g.records.size(); ++i) {
    g.records[i] = {i, g.evaluations[i].extrinsic, fi[i], 0.0};
  }
  const std::vector<double> total = combine_fitness(g.records, phi, fitness_rng);
  g.order = rank_order(total);

  std::vector<ParameterVector> elites;
  elites.reserve(state.mu);
  for (std::size_t j = 0; j < state.mu; ++j) elites.push_back(g.population[g.order[j]]);
  update_center(state, estimate_gradient(state, elites, rank_weights(state.mu)));
  return g;
}

CuriosityGeneration curiosity_es_generation(EsState& state, IcmParams& icm, ReplayBuffer& buffer,
                                            const PolicyEvaluator& evaluator,
                                            const CuriositySettings& settings, Rng& fitness_rng,
                                            Rng& buffer_rng, Rng& train_rng) {
  const IcmParams& frozen = icm;
  const double gamma = settings.gamma;
  IntrinsicProvider curiosity = [&frozen, gamma](std::span<const Evaluation> evals) {
    std::vector<double> fi(evals.size());
    parallel_for(evals.size(), [&](std::size_t i) { fi[i] = curiosity_fitness(frozen, evals[i].trajectory, gamma); });
    return fi;
  };
  CuriosityGeneration out;
  out.result = intrinsic_es_generation(state, evaluator, curiosity, settings.phi, fitness_rng);
  for (const Evaluation& e : out.result.evaluations) buffer.add_from_trajectory(e.trajectory, buffer_rng);
  out.icm_loss_history = train_icm(icm, buffer, settings.training, train_rng);
  return out;
}

}  // namespace ces
