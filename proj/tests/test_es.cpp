#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numeric>

#include "ces/es.hpp"

using namespace ces;

namespace {

EsState make_state(std::size_t dim, double sigma, std::size_t lambda, std::size_t mu, std::uint64_t seed) {
  EsState s;
  s.center.assign(dim, 0.0);
  s.sigma = sigma;
  s.lambda = lambda;
  s.mu = mu;
  s.alpha = 1.0;
  s.rng = Rng(seed);
  return s;
}

double sphere(const ParameterVector& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace

TEST_CASE("rank weights") {
  CHECK(rank_weights(1) == std::vector<double>{1.0});
  // (log 2.5, log 1.25) normalised.
  const auto w2 = rank_weights(2);
  CHECK(w2[0] == doctest::Approx(0.8042).epsilon(1e-4));
  CHECK(w2[1] == doctest::Approx(0.1958).epsilon(1e-4));
  const double a = std::log(2.5), b = std::log(2.5) - std::log(2.0);
  CHECK(w2[0] == doctest::Approx(a / (a + b)).epsilon(1e-15));
  CHECK_THROWS(rank_weights(0));
  for (std::size_t mu : {3, 28, 100, 1000}) {
    const auto w = rank_weights(mu);
    CHECK(std::abs(std::accumulate(w.begin(), w.end(), 0.0) - 1.0) < 1e-12);
    for (std::size_t j = 0; j < mu; ++j) {
      CHECK(w[j] > 0.0);
      if (j > 0) CHECK(w[j] < w[j - 1]);
    }
  }
}

TEST_CASE("tiny sigma samples the center") {
  EsState s = make_state(5, 1e-300, 8, 4, 1);
  s.center = {1, 2, 3, 4, 5};
  for (const auto& x : sample_population(s)) {
    for (std::size_t i = 0; i < 5; ++i) CHECK(x[i] == doctest::Approx(s.center[i]));
  }
}

TEST_CASE("sample mean concentrates on the center") {
  EsState s = make_state(3, 0.5, 10000, 1, 2);
  s.center = {1, -2, 0.5};
  const auto pop = sample_population(s);
  for (std::size_t i = 0; i < 3; ++i) {
    double m = 0;
    for (const auto& x : pop) m += x[i];
    m /= static_cast<double>(pop.size());
    CHECK(std::abs(m - s.center[i]) < 4 * 0.5 / std::sqrt(10000.0));
  }
}

TEST_CASE("same seed, same population") {
  EsState a = make_state(4, 0.5, 6, 3, 7), b = make_state(4, 0.5, 6, 3, 7);
  CHECK(sample_population(a) == sample_population(b));
}

TEST_CASE("rank order is descending with index tie-break") {
  const std::vector<double> f{1, 3, 3, -1, 2};
  CHECK(rank_order(f) == std::vector<std::size_t>{1, 2, 4, 0, 3});
}

TEST_CASE("rank order is invariant under increasing transforms") {
  Rng rng(3);
  std::vector<double> f(50);
  for (double& v : f) v = rng.normal();
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) g[i] = std::exp(3 * f[i]) + 7;
  CHECK(rank_order(f) == rank_order(g));
}

TEST_CASE("gradient estimates") {
  EsState s = make_state(2, 1.0, 2, 1, 0);
  s.center = {1, 1};
  SUBCASE("elites at the center") {
    const std::vector<ParameterVector> e{{1, 1}};
    CHECK(estimate_gradient(s, e, rank_weights(1)) == ParameterVector{0, 0});
  }
  SUBCASE("mu = 1 and sigma = 1") {
    const std::vector<ParameterVector> e{{3, -1}};
    CHECK(estimate_gradient(s, e, rank_weights(1)) == ParameterVector{2, -2});
  }
  SUBCASE("mu = 2, sigma = 0.5 by hand") {
    s.sigma = 0.5;
    s.mu = 2;
    const std::vector<ParameterVector> e{{2, 1}, {1, 3}};
    const auto w = rank_weights(2);
    // 1/(0.5*2) * (w0*(1,0) + w1*(0,2))
    const auto g = estimate_gradient(s, e, w);
    CHECK(g[0] == doctest::Approx(w[0]));
    CHECK(g[1] == doctest::Approx(2 * w[1]));
  }
  SUBCASE("length mismatch") {
    const std::vector<ParameterVector> e{{1, 1}, {1, 1}};
    CHECK_THROWS(estimate_gradient(s, e, rank_weights(1)));
  }
}

TEST_CASE("center updates") {
  EsState s = make_state(2, 0.5, 4, 2, 0);
  update_center(s, std::vector<double>{0, 0});
  CHECK(s.center == ParameterVector{0, 0});
  CHECK(s.generation == 1);
  update_center(s, std::vector<double>{1, 0});
  CHECK(s.center == ParameterVector{1, 0});
  CHECK_THROWS_AS(update_center(s, std::vector<double>{std::nan(""), 0}), std::domain_error);
  CHECK_THROWS(update_center(s, std::vector<double>{1}));
}

TEST_CASE("state validation") {
  EsState s = make_state(2, 0.5, 4, 5, 0);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.mu = 2;
  s.sigma = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("distance to the optimum of a quadratic bowl shrinks") {
  EsState s = make_state(10, 0.5, 56, 28, 5);
  Rng init(6);
  for (double& v : s.center) v = init.normal();
  const double start = sphere(s.center);
  double previous = start;
  int increases = 0;
  for (int g = 0; g < 50; ++g) {
    es_generation(s, [](const ParameterVector& x) { return -sphere(x); });
    const double now = sphere(s.center);
    if (now > previous) ++increases;
    previous = now;
  }
  CHECK(sphere(s.center) < 0.5 * start);
  CHECK(increases <= 5);
}
