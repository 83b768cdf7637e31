#pragma once

// Canonical ES with a fixed isotropic Gaussian, log-rank recombination
// weights and a learning rate on the center update:
//   grad = 1/(sigma * mu) * sum_j w_j (R_j - center),  center += alpha * grad.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ces/rng.hpp"

namespace ces {

using ParameterVector = std::vector<double>;

struct EsState {
  ParameterVector center;
  double sigma = 0.5;
  std::size_t lambda = 56;
  std::size_t mu = 28;
  double alpha = 1.0;
  std::uint64_t generation = 0;
  Rng rng;

  // Throws std::invalid_argument unless mu <= lambda, sigma > 0, alpha > 0.
  void validate() const;
};

// lambda i.i.d. draws center + sigma * eps with eps ~ N(0, I).
std::vector<ParameterVector> sample_population(EsState& state);

// w_j = (log(mu + 0.5) - log j) / sum_i (log(mu + 0.5) - log i), j = 1..mu.
std::vector<double> rank_weights(std::size_t mu);

// Indices by descending fitness; ties keep the lower index first.
std::vector<std::size_t> rank_order(std::span<const double> fitness);

ParameterVector estimate_gradient(const EsState& state, std::span<const ParameterVector> ranked_elites,
                                  std::span<const double> weights);

// center += alpha * gradient; advances the generation counter.
void update_center(EsState& state, std::span<const double> gradient);

// One sample-rank-update cycle on a fitness (higher is better).
template <typename Fitness>
void es_generation(EsState& state, Fitness&& fitness) {
  std::vector<ParameterVector> population = sample_population(state);
  std::vector<double> f(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) f[i] = fitness(population[i]);
  const std::vector<std::size_t> order = rank_order(f);
  std::vector<ParameterVector> elites;
  elites.reserve(state.mu);
  for (std::size_t j = 0; j < state.mu; ++j) elites.push_back(std::move(population[order[j]]));
  update_center(state, estimate_gradient(state, elites, rank_weights(state.mu)));
}

}  // namespace ces
