#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <sstream>

#include "ces/metrics.hpp"
#include "ces/rng.hpp"
#include "oracles.hpp"

using namespace ces;

TEST_CASE("coverage grid") {
  CoverageGrid g({{0, 0}, {70, 70}});
  CHECK(g.percent() == 0.0);
  CHECK(g.update({10, 10}));
  CHECK_FALSE(g.update({10, 10}));
  CHECK(g.occupied() == 1);
  CoverageGrid row({{0, 0}, {70, 70}});
  for (int i = 0; i < 50; ++i) row.update({(i + 0.5) * 70.0 / 50, 3});
  CHECK(row.percent() == 2.0);
  row.update({-4, 100});
  CHECK(row.cell_of({-4, 100}) == std::pair<std::size_t, std::size_t>{0, 49});
}

TEST_CASE("best reward curve") {
  CHECK(best_reward_curve(std::vector<double>{0, 0, 0}) == std::vector<double>{0, 0, 0});
  const auto c = best_reward_curve(std::vector<double>{0, 0.3, 0.2, 0.5});
  CHECK(c == std::vector<double>{0, 0.3, 0.3, 0.5});
  CHECK(best_reward_curve(c) == c);
}

TEST_CASE("fingerprints are front padded") {
  Trajectory t;
  for (int i = 0; i < 10; ++i) {
    std::vector<double> s(kStateDim, i), n(kStateDim, i + 1);
    t.transitions.push_back({s, {0, 0}, n});
  }
  const PolicyFingerprint fp = make_fingerprint(t, 0.7, "x");
  REQUIRE(fp.values.size() == kFingerprintStates * kStateDim);
  CHECK(fp.values.front() == 0.0);
  CHECK(fp.values.back() == 10.0);
  // 11 states, so 289 copies of the first.
  CHECK(fp.values[289 * kStateDim - 1] == 0.0);
  CHECK(fp.values[289 * kStateDim + kStateDim] == 1.0);

  Trajectory longer;
  for (int i = 0; i < 400; ++i) {
    longer.transitions.push_back({std::vector<double>(kStateDim, i), {0, 0}, std::vector<double>(kStateDim, i + 1)});
  }
  const PolicyFingerprint tail = make_fingerprint(longer, 1.0, "x");
  CHECK(tail.values.front() == 101.0);
  CHECK(tail.values.back() == 400.0);
}

TEST_CASE("pca on a symmetric 2D set") {
  const std::vector<std::vector<double>> pts{{1, 0}, {-1, 0}, {0, 0}};
  const PcaResult r = pca_project(pts, 2);
  CHECK(std::abs(r.components[0][0]) == doctest::Approx(1.0));
  CHECK(r.projections[0][0] == doctest::Approx(1.0));
  CHECK(r.projections[1][0] == doctest::Approx(-1.0));
  CHECK(r.projections[2][0] == doctest::Approx(0.0));
  CHECK(r.explained_variance[1] == doctest::Approx(0.0));
}

TEST_CASE("points on a line have no second component") {
  Rng rng(1);
  std::vector<double> dir(40);
  for (double& v : dir) v = rng.normal();
  std::vector<std::vector<double>> pts;
  for (int i = 0; i < 10; ++i) {
    const double t = rng.normal();
    std::vector<double> p(40);
    for (std::size_t j = 0; j < 40; ++j) p[j] = 3.0 + t * dir[j];
    pts.push_back(p);
  }
  const PcaResult r = pca_project(pts, 2);
  CHECK(r.explained_variance[1] < 1e-12 * r.explained_variance[0]);
}

TEST_CASE("pca needs three points and zero variance projects to zero") {
  CHECK_THROWS(pca_project(std::vector<std::vector<double>>{{1}, {2}}, 2));
  const PcaResult r = pca_project(std::vector<std::vector<double>>(4, {1, 2, 3}), 2);
  for (const auto& p : r.projections) CHECK(p == std::vector<double>{0, 0});
}

TEST_CASE("pca matches a Jacobi decomposition and ignores offsets") {
  Rng rng(2);
  std::vector<std::vector<double>> x(50, std::vector<double>(120));
  for (auto& row : x) {
    for (double& v : row) v = rng.normal();
  }
  const PcaResult r = pca_project(x, 2);
  // Oracle on the covariance in feature space.
  std::vector<double> mean(120, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < 120; ++j) mean[j] += row[j] / 50.0;
  }
  std::vector<std::vector<double>> cov(120, std::vector<double>(120, 0.0));
  for (const auto& row : x) {
    for (std::size_t a = 0; a < 120; ++a) {
      for (std::size_t b = 0; b < 120; ++b) cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
    }
  }
  const auto [values, vectors] = oracle::jacobi_eigen(cov);
  const std::vector<std::vector<double>> top{vectors[0], vectors[1]};
  CHECK(oracle::max_principal_angle(r.components, top) < 1e-6);
  CHECK(r.explained_variance[0] == doctest::Approx(values[0] / 50.0).epsilon(1e-9));

  auto shifted = x;
  for (auto& row : shifted) {
    for (double& v : row) v += 5.0;
  }
  const PcaResult s = pca_project(shifted, 2);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(std::abs(s.projections[i][0]) == doctest::Approx(std::abs(r.projections[i][0])).epsilon(1e-9));
  }
}

TEST_CASE("svg emitters produce well formed documents") {
  const SvgSeries s{"a", {0, 1, 2}, {0, 1, 4}};
  std::ostringstream line, scatter;
  write_line_svg(line, "t", std::span<const SvgSeries>(&s, 1));
  write_scatter_svg(scatter, "t", std::span<const SvgSeries>(&s, 1));
  CHECK(line.str().rfind("<svg", 0) == 0);
  CHECK(line.str().find("</svg>") != std::string::npos);
  CHECK(scatter.str().find("<circle") != std::string::npos);
}
