#include "ces/es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ces {

void EsState::validate() const {
  if (center.empty()) throw std::invalid_argument("ES: empty center");
  if (!(sigma > 0.0)) throw std::invalid_argument("ES: sigma must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("ES: alpha must be positive");
  if (lambda == 0 || mu == 0 || mu > lambda) throw std::invalid_argument("ES: need 1 <= mu <= lambda");
}

std::vector<ParameterVector> sample_population(EsState& state) {
  state.validate();
  std::vector<ParameterVector> population(state.lambda, ParameterVector(state.center.size()));
  for (ParameterVector& x : population) {
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = state.center[d] + state.sigma * state.rng.normal();
  }
  return population;
}

std::vector<double> rank_weights(std::size_t mu) {
  if (mu == 0) throw std::invalid_argument("rank_weights: mu must be >= 1");
  std::vector<double> w(mu);
  const double top = std::log(static_cast<double>(mu) + 0.5);
  double sum = 0.0;
  for (std::size_t j = 0; j < mu; ++j) {
    w[j] = top - std::log(static_cast<double>(j + 1));
    sum += w[j];
  }
  for (double& v : w) v /= sum;
  return w;
}

std::vector<std::size_t> rank_order(std::span<const double> fitness) {
  std::vector<std::size_t> order(fitness.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
  return order;
}

ParameterVector estimate_gradient(const EsState& state, std::span<const ParameterVector> ranked_elites,
                                  std::span<const double> weights) {
  if (ranked_elites.size() != state.mu || weights.size() != state.mu) {
    throw std::invalid_argument("estimate_gradient: expected mu elites and weights");
  }
  const std::size_t n = state.center.size();
  ParameterVector grad(n, 0.0);
  for (std::size_t j = 0; j < ranked_elites.size(); ++j) {
    const ParameterVector& r = ranked_elites[j];
    if (r.size() != n) throw std::invalid_argument("estimate_gradient: elite dimension mismatch");
    for (std::size_t d = 0; d < n; ++d) grad[d] += (r[d] - state.center[d]) * weights[j];
  }
  const double scale = 1.0 / (state.sigma * static_cast<double>(state.mu));
  for (double& g : grad) g *= scale;
  return grad;
}

void update_center(EsState& state, std::span<const double> gradient) {
  if (gradient.size() != state.center.size()) throw std::invalid_argument("update_center: dimension mismatch");
  for (double g : gradient) {
    if (!std::isfinite(g)) throw std::domain_error("update_center: non-finite gradient");
  }
  for (std::size_t d = 0; d < gradient.size(); ++d) state.center[d] += state.alpha * gradient[d];
  ++state.generation;
}

}  // namespace ces
