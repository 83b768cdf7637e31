#include "ces/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

namespace ces {

double extrinsic_fitness(const Trajectory& trajectory) {
  double sum = 0.0;
  for (double r : trajectory.rewards) sum += r;
  return sum;
}

double discounted_sum(std::span<const double> errors, double gamma) {
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("curiosity fitness: gamma must be in [0, 1]");
  // Horner from the end: the last element gets weight gamma^0 = 1.
  double acc = 0.0;
  for (double e : errors) acc = acc * gamma + e;
  return acc;
}

double curiosity_fitness(const IcmParams& icm, const Trajectory& trajectory, double gamma) {
  if (trajectory.empty()) {
    std::clog << "warning: curiosity_fitness on an empty trajectory\n";
    return 0.0;
  }
  return discounted_sum(forward_errors(icm, trajectory), gamma);
}

std::vector<double> z_scores(std::span<const double> values) {
  std::vector<double> z(values.size(), 0.0);
  if (values.empty()) return z;
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); })) return z;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  if (!std::isfinite(mean) || !std::isfinite(sd)) {
    throw std::domain_error("z_scores: non-finite population statistics");
  }
  if (sd == 0.0) return z;
  for (std::size_t i = 0; i < values.size(); ++i) z[i] = (values[i] - mean) / sd;
  return z;
}

std::vector<double> combine_fitness(std::span<FitnessRecord> records, double phi, Rng& rng) {
  if (records.size() < 2) throw std::invalid_argument("combine_fitness: need at least two records");
  if (phi < 0.0 || phi > 1.0) throw std::invalid_argument("combine_fitness: phi must be in [0, 1]");
  std::vector<double> fe(records.size()), fi(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    fe[i] = records[i].extrinsic;
    fi[i] = records[i].intrinsic;
  }
  if (std::all_of(fe.begin(), fe.end(), [](double v) { return v == 0.0; })) {
    for (double& v : fe) v = rng.normal();
  }
  const std::vector<double> ze = z_scores(fe);
  const std::vector<double> zi = z_scores(fi);
  std::vector<double> total(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    total[i] = phi * ze[i] + (1.0 - phi) * zi[i];
    records[i].total = total[i];
  }
  return total;
}

}  // namespace ces
