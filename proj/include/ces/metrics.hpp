#pragma once

// Post-processing: position coverage, best-so-far curves, last-states
// fingerprints with a PCA projection, and small SVG plots.

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ces/maze.hpp"

namespace ces {

class CoverageGrid {
 public:
  CoverageGrid(Bounds bounds, std::size_t resolution = 50);

  std::pair<std::size_t, std::size_t> cell_of(Vec2 p) const;
  // Returns true when the cell was newly occupied.
  bool update(Vec2 position);
  std::size_t occupied() const { return cells_.size(); }
  std::size_t total() const { return resolution_ * resolution_; }
  double fraction() const { return static_cast<double>(occupied()) / static_cast<double>(total()); }
  double percent() const { return 100.0 * static_cast<double>(occupied()) / static_cast<double>(total()); }
  std::size_t resolution() const { return resolution_; }
  const Bounds& bounds() const { return bounds_; }

 private:
  Bounds bounds_;
  std::size_t resolution_;
  std::set<std::pair<std::size_t, std::size_t>> cells_;
};

std::vector<double> best_reward_curve(std::span<const double> per_generation_max);

inline constexpr std::size_t kFingerprintStates = 300;

struct PolicyFingerprint {
  std::vector<double> values;  // kFingerprintStates * kStateDim
  double extrinsic = 0.0;
  std::string algorithm;
};

// Last 300 visited states (s_0 .. s_T), front-padded with the first state.
PolicyFingerprint make_fingerprint(const Trajectory& trajectory, double extrinsic, std::string algorithm);

struct PcaResult {
  std::vector<std::vector<double>> components;  // dims x D, unit norm
  std::vector<std::vector<double>> projections;  // N x dims
  std::vector<double> explained_variance;        // per component, 1/N scaling
  double total_variance = 0.0;
};

// Power iteration with deflation on the smaller of the Gram and covariance
// matrices.
PcaResult pca_project(std::span<const std::vector<double>> data, std::size_t dims = 2);
PcaResult pca_project(std::span<const PolicyFingerprint> fingerprints, std::size_t dims = 2);

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_svg(std::ostream& out, const std::string& title, std::span<const SvgSeries> series);
void write_scatter_svg(std::ostream& out, const std::string& title, std::span<const SvgSeries> series,
                       const std::vector<Segment>* walls = nullptr);

}  // namespace ces
