// Acceptance gate. Prints one line per criterion and exits non-zero if any
// fails. CES_ACCEPTANCE=1,4,9 restricts the run to the listed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ces/baselines.hpp"
#include "ces/es.hpp"
#include "ces/fitness.hpp"
#include "ces/generation.hpp"
#include "ces/icm.hpp"
#include "ces/maze.hpp"
#include "ces/metrics.hpp"
#include "ces/replay_buffer.hpp"
#include "ces/rng.hpp"
#include "ces/runner.hpp"
#include "oracles.hpp"

using namespace ces;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void note(const std::string& line) {
  std::printf("    %s\n", line.c_str());
  std::fflush(stdout);
}

Transition random_transition(Rng& rng, std::size_t sd, std::size_t ad) {
  Transition t{std::vector<double>(sd), std::vector<double>(ad), std::vector<double>(sd)};
  for (double& v : t.state) v = rng.normal();
  for (double& v : t.action) v = rng.uniform(-1, 1);
  for (double& v : t.next_state) v = rng.normal();
  return t;
}

// 1 ------------------------------------------------------------------------

Outcome icm_gradients() {
  double worst = 0.0;
  int instances = 0;
  for (std::uint64_t seed = 0; seed < 120; ++seed) {
    Rng rng = Rng::stream(seed, 100);
    IcmConfig c;
    c.state_dim = 2 + rng.below(5);
    c.action_dim = 1 + rng.below(3);
    c.feature_dim = 1 + rng.below(4);
    c.hidden = 2 + rng.below(5);
    IcmParams icm = make_icm(c, rng);
    icm.beta = rng.uniform();
    std::vector<Transition> batch;
    const std::size_t b = 1 + rng.below(4);
    for (std::size_t i = 0; i < b; ++i) batch.push_back(random_transition(rng, c.state_dim, c.action_dim));
    std::vector<const Transition*> ptrs;
    for (const auto& t : batch) ptrs.push_back(&t);
    std::vector<double> grad(icm.parameter_count());
    icm_loss_gradient(icm, ptrs, grad);
    const auto f = [&](const std::vector<double>& p) {
      IcmParams copy = icm;
      copy.set_parameters(p);
      return icm_loss(copy, batch);
    };
    worst = std::max(worst, oracle::relative_error(grad, oracle::finite_difference(f, icm.parameters())));
    ++instances;
  }
  return {worst < 1e-4, fmt("%d instances, worst relative error %.3g", instances, worst)};
}

// 2 ------------------------------------------------------------------------

Outcome formula_oracles() {
  bool ok = true;
  std::string detail;

  const auto w = rank_weights(2);
  const bool weights_ok = std::abs(w[0] - 0.8042) <= 1e-4 && std::abs(w[1] - 0.1958) <= 1e-4;
  ok &= weights_ok;
  detail += fmt("w=(%.5f, %.5f) ", w[0], w[1]);

  Rng rng = Rng::stream(2, 100);
  int knn_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    NoveltyArchive archive;
    archive.k = 1 + rng.below(25);
    const std::size_t n = 1 + rng.below(200), d = 1 + rng.below(6);
    std::vector<std::vector<double>> plain;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> b(d);
      for (double& v : b) v = rng.normal() * 10;
      archive.add(b, 0);
      plain.push_back(b);
    }
    std::vector<double> query(d);
    for (double& v : query) v = rng.normal() * 10;
    if (novelty_score(archive, query) != oracle::knn_brute_force(plain, query, archive.k)) ++knn_mismatch;
  }
  ok &= knn_mismatch == 0;
  detail += fmt("knn mismatches %d/1000 ", knn_mismatch);

  IcmParams icm = make_icm(IcmConfig{}, rng);
  Trajectory traj;
  for (int i = 0; i < 3; ++i) traj.transitions.push_back(random_transition(rng, kStateDim, kActionDim));
  traj.rewards.assign(3, 0.0);
  const auto e = forward_errors(icm, traj);
  const double expanded = 0.25 * e[0] + 0.5 * e[1] + e[2];
  const double eq = std::abs(curiosity_fitness(icm, traj, 0.5) - expanded);
  ok &= eq <= 1e-12;
  detail += fmt("gamma=0.5 expansion diff %.2g ", eq);

  int rank_flips = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.below(80);
    std::vector<FitnessRecord> r1, r2;
    const double a = rng.uniform(0.1, 10), b = rng.uniform(-5, 5), c = rng.uniform(0.1, 10), dd = rng.normal();
    for (std::size_t i = 0; i < n; ++i) {
      const double fe = (rng.below(3) == 0 && i > 0) ? 0.0 : rng.uniform(), fi = rng.normal();
      r1.push_back({i, fe, fi, 0.0});
      r2.push_back({i, a * fe + b, c * fi + dd, 0.0});
    }
    const double phi = rng.uniform();
    Rng x(trial), y(trial);
    if (rank_order(combine_fitness(r1, phi, x)) != rank_order(combine_fitness(r2, phi, y))) ++rank_flips;
  }
  ok &= rank_flips == 0;
  detail += fmt("affine rank changes %d/1000", rank_flips);
  return {ok, detail};
}

// 3 ------------------------------------------------------------------------

MazeSpec random_walls_maze(Rng& rng) {
  MazeSpec s;
  s.name = "random";
  s.start = {1, 1};
  s.goal = {69, 69};
  for (int i = 0; i < 6; ++i) {
    const Vec2 a{rng.uniform(5, 65), rng.uniform(5, 65)};
    const Vec2 b{a.x + rng.uniform(-25, 25), a.y + rng.uniform(-25, 25)};
    s.walls.push_back({a, {std::clamp(b.x, 0.5, 69.5), std::clamp(b.y, 0.5, 69.5)}});
  }
  return s;
}

Outcome environment_oracles() {
  Rng rng = Rng::stream(3, 100);
  std::vector<Maze> mazes;
  for (const std::string& name : builtin_maze_names()) mazes.emplace_back(builtin_maze(name));

  double worst = 0.0;
  for (int config = 0; config < 1000; ++config) {
    const Maze maze = config % 4 == 3 ? Maze(random_walls_maze(rng)) : mazes[config % mazes.size()];
    Vec2 p;
    for (;;) {
      const Bounds& b = maze.spec().bounds;
      p = {rng.uniform(b.lo.x, b.hi.x), rng.uniform(b.lo.y, b.hi.y)};
      bool clear = true;
      for (const Segment& s : maze.segments()) clear &= point_segment_distance(p, s) > 1e-2;
      if (clear) break;
    }
    const auto beams = lidar_scan(maze, p);
    for (std::size_t i = 0; i < kLidarBeams; ++i) {
      const double angle = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(kLidarBeams);
      worst = std::max(worst, std::abs(beams[i] - oracle::ray_march(maze, p, angle)));
    }
  }

  // Random action sequences; a small room with the goal near the start so
  // goal contacts are frequent.
  MazeSpec room;
  room.name = "room";
  room.bounds = {{0, 0}, {20, 20}};
  room.start = {10, 10};
  room.goal = {14, 10};
  room.walls = {{{12, 4}, {12, 8}}, {{6, 12}, {14, 12}}};
  mazes.emplace_back(room);

  long steps = 0, crossings = 0, bad_rewards = 0, rewards_seen = 0;
  while (steps < 1000000) {
    const Maze& maze = mazes[static_cast<std::size_t>(steps / 500) % mazes.size()];
    const auto& spec = maze.spec();
    EnvState s = reset(maze);
    while (!s.done) {
      const Action a{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5)};
      const StepResult r = step(maze, s, a);
      for (const Segment& w : spec.walls) {
        if (oracle::crosses(s.position, r.state.position, w.a, w.b)) ++crossings;
      }
      const double dist = norm(r.state.position - spec.goal);
      const double expected = dist < spec.goal_threshold ? 1.0 - static_cast<double>(s.t) / spec.horizon : 0.0;
      if (r.reward != expected || (expected > 0) != (r.reward > 0 && r.done)) ++bad_rewards;
      if (r.reward > 0) ++rewards_seen;
      s = r.state;
      ++steps;
    }
  }
  const bool ok = worst < 1e-3 && crossings == 0 && bad_rewards == 0 && rewards_seen > 0;
  return {ok, fmt("lidar worst diff %.3g over 1000 configs; %ld steps, %ld wall crossings, %ld reward mismatches, "
                  "%ld goal contacts",
                  worst, steps, crossings, bad_rewards, rewards_seen)};
}

// 4 ------------------------------------------------------------------------

Outcome sphere() {
  int reached = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EsState s;
    s.center.assign(10, 0.0);
    s.sigma = 0.5;
    s.lambda = 56;
    s.mu = 28;
    s.alpha = 1.0;
    s.rng = Rng::stream(seed, 2);
    Rng init = Rng::stream(seed, 1);
    for (double& v : s.center) v = init.normal();
    const auto f = [](const ParameterVector& x) {
      double q = 0.0;
      for (double v : x) q += v * v;
      return q;
    };
    double best = f(s.center);
    int hit = -1;
    for (int g = 1; g <= 300; ++g) {
      es_generation(s, [&](const ParameterVector& x) { return -f(x); });
      best = std::min(best, f(s.center));
      if (hit < 0 && f(s.center) < 1e-3) hit = g;
    }
    if (hit > 0) ++reached;
    note(fmt("seed %llu: min f %.3g, final f %.3g, first below 1e-3 at %d", static_cast<unsigned long long>(seed),
             best, f(s.center), hit));
  }
  return {reached >= 4, fmt("%d/5 seeds reach f < 1e-3", reached)};
}

// 5 ------------------------------------------------------------------------

Outcome consumption() {
  const Maze maze(builtin_maze("snake"));
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = Rng::stream(seed, 5);
    IcmParams icm = make_icm(IcmConfig{}, rng);
    use_maze_normalization(icm, maze);
    Network policy = make_policy_network();
    const ParameterVector center = initial_policy_genome(policy, rng);
    ReplayBuffer buffer(1000, 1000);
    while (buffer.size() < 1000) {
      ParameterVector w = center;
      for (double& v : w) v += 0.5 * rng.normal();
      policy.set_weights(w);
      const Trajectory t = rollout(maze, policy).trajectory;
      for (const Transition& tr : t.transitions) {
        if (buffer.size() < 1000) buffer.push(tr);
      }
    }
    const auto mean_bonus = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < buffer.size(); ++i) s += curiosity_bonus(icm, buffer[i]);
      return s / static_cast<double>(buffer.size());
    };
    const double before = mean_bonus();
    Rng train = Rng::stream(seed, 6);
    train_icm(icm, buffer, {64, 128, 0}, train);
    const double after = mean_bonus();
    if (after * 10.0 <= before) ++ok;
    note(fmt("seed %llu: mean bonus %.4g -> %.4g (x%.1f)", static_cast<unsigned long long>(seed), before, after,
             before / after));
  }
  return {ok >= 4, fmt("%d/5 seeds drop by >= 10x", ok)};
}

// 6, 7 ---------------------------------------------------------------------

RunSummary acceptance_run(RunConfig c, const std::string& label) {
  const auto t0 = std::chrono::steady_clock::now();
  RunSummary s = run_experiment(c);
  const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  note(fmt("%-13s %-5s seed %llu: best %.4f, coverage %.2f%%, rollouts %zu, dominance violations %zu (%.0f s)",
           label.c_str(), c.environment.c_str(), static_cast<unsigned long long>(c.seed), s.best_so_far,
           s.final_coverage_percent, s.rollouts, s.dominance_violations, sec));
  return s;
}

Outcome snake_reproduction() {
  int curious_found = 0, plain_found = 0;
  double curious_cov = 0.0, plain_cov = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig c = default_config("snake");
    c.seed = seed;
    c.algorithm = Algorithm::curiosity_es;
    const RunSummary a = acceptance_run(c, "curiosity_es");
    c.algorithm = Algorithm::plain_es;
    const RunSummary b = acceptance_run(c, "plain_es");
    curious_found += a.best_so_far > 0;
    plain_found += b.best_so_far > 0;
    curious_cov += a.final_coverage_percent / 5;
    plain_cov += b.final_coverage_percent / 5;
  }
  const bool ok = curious_found >= 4 && plain_found <= 1 && curious_cov >= 2 * plain_cov;
  return {ok, fmt("curiosity_es reward in %d/5, plain_es in %d/5; mean coverage %.2f%% vs %.2f%% (ratio %.2f)",
                  curious_found, plain_found, curious_cov, plain_cov, curious_cov / plain_cov)};
}

Outcome us_comparison() {
  int curious_found = 0, elites_found = 0, curious_ahead = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    RunConfig c = default_config("us");
    c.seed = seed;
    c.algorithm = Algorithm::curiosity_es;
    const RunSummary a = acceptance_run(c, "curiosity_es");
    // Same evaluation budget: bootstrap + batch * generations <= lambda * N.
    c.algorithm = Algorithm::map_elites;
    c.generations = (c.lambda * c.generations - c.map_elites_bootstrap) / c.map_elites_batch;
    const RunSummary b = acceptance_run(c, "map_elites");
    curious_found += a.best_so_far > 0;
    elites_found += b.best_so_far > 0;
    curious_ahead += a.best_so_far >= b.best_so_far;
  }
  const bool ok = curious_found >= 3 && elites_found >= 3 && curious_ahead >= 3;
  return {ok, fmt("reward found: curiosity_es %d/5, map_elites %d/5; curiosity_es >= map_elites in %d/5",
                  curious_found, elites_found, curious_ahead)};
}

// 8 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "ces_acceptance_determinism";
  fs::remove_all(root);
  int compared = 0, differing = 0;
  for (Algorithm algo : {Algorithm::curiosity_es, Algorithm::ns_es, Algorithm::map_elites, Algorithm::plain_es}) {
    for (const char* maze : {"snake", "us", "hard"}) {
      RunConfig c = default_config(maze);
      c.algorithm = algo;
      c.seed = 11;
      c.generations = 6;
      c.lambda = 12;
      c.mu = 6;
      c.horizon = 150;
      c.icm_epochs = 4;
      c.icm_batch_size = 32;
      c.map_elites_bootstrap = 24;
      c.map_elites_batch = 12;
      c.checkpoint_every = 3;
      const std::string name = std::string(to_string(algo)) + "_" + maze;
      std::vector<fs::path> dirs;
      for (const char* threads : {"1", "3"}) {
        setenv("CES_THREADS", threads, 1);
        const fs::path dir = root / (name + "_t" + threads);
        run_experiment(c, {dir, {}});
        dirs.push_back(dir);
      }
      for (const auto& entry : fs::recursive_directory_iterator(dirs[0])) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        const fs::path other = dirs[1] / fs::relative(entry.path(), dirs[0]);
        ++compared;
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
          ++differing;
          note("differs: " + fs::relative(entry.path(), root).string());
        }
      }
    }
  }
  unsetenv("CES_THREADS");
  fs::remove_all(root);
  return {compared > 0 && differing == 0,
          fmt("%d CSV files compared across repeated runs (1 and 3 threads), %d differ", compared, differing)};
}

// 9 ------------------------------------------------------------------------

Outcome pca_oracle() {
  const std::size_t n = 50, d = 900;
  Rng rng = Rng::stream(9, 100);
  std::vector<std::vector<double>> x(n, std::vector<double>(d));
  for (auto& row : x) {
    for (double& v : row) v = rng.normal();
  }
  const PcaResult r = pca_project(x, 2);

  // Oracle: Jacobi on the centred Gram matrix, lifted back to feature space.
  std::vector<double> mean(d, 0.0);
  for (const auto& row : x) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += row[j] / static_cast<double>(n);
  }
  auto xc = x;
  for (auto& row : xc) {
    for (std::size_t j = 0; j < d; ++j) row[j] -= mean[j];
  }
  std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t j = 0; j < d; ++j) gram[a][b] += xc[a][j] * xc[b][j];
    }
  }
  const auto [values, vectors] = oracle::jacobi_eigen(gram);
  std::vector<std::vector<double>> top;
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> v(d, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t j = 0; j < d; ++j) v[j] += vectors[k][a] * xc[a][j];
    }
    double s = 0.0;
    for (double q : v) s += q * q;
    for (double& q : v) q /= std::sqrt(s);
    top.push_back(v);
  }
  const double angle = oracle::max_principal_angle(r.components, top);
  return {angle < 1e-6, fmt("max principal angle %.3g on %zux%zu data", angle, n, d)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ICM gradients match finite differences", icm_gradients},
      {"formula oracles", formula_oracles},
      {"environment oracles", environment_oracles},
      {"ES sphere convergence", sphere},
      {"curiosity consumption", consumption},
      {"SNAKE reproduction", snake_reproduction},
      {"US comparison", us_comparison},
      {"determinism", determinism},
      {"PCA oracle", pca_oracle},
  };
  std::set<std::size_t> selected;
  if (const char* only = std::getenv("CES_ACCEPTANCE")) {
    std::stringstream ss(only);
    for (std::string item; std::getline(ss, item, ',');) selected.insert(std::stoul(item));
  }
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const std::size_t id = i + 1;
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu: %s  %s: %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), sec);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
