#include "ces/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ces/baselines.hpp"
#include "ces/format.hpp"
#include "ces/generation.hpp"

namespace ces {

namespace fs = std::filesystem;
using nlohmann::json;

namespace stream_ids {
constexpr std::uint64_t center_init = 1;
constexpr std::uint64_t es_sampling = 2;
constexpr std::uint64_t fitness_fallback = 3;
constexpr std::uint64_t buffer = 4;
constexpr std::uint64_t icm_init = 5;
constexpr std::uint64_t icm_train = 6;
constexpr std::uint64_t fingerprints = 7;
constexpr std::uint64_t map_elites = 8;
constexpr std::uint64_t replay = 9;
}  // namespace stream_ids

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::curiosity_es: return "curiosity_es";
    case Algorithm::ns_es: return "ns_es";
    case Algorithm::map_elites: return "map_elites";
    case Algorithm::plain_es: return "plain_es";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : {Algorithm::curiosity_es, Algorithm::ns_es, Algorithm::map_elites, Algorithm::plain_es}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail("sigma must be positive");
  if (lambda < 2) fail("lambda must be >= 2");
  if (mu < 1 || mu > lambda) fail("mu must be in [1, lambda]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) fail("alpha must be positive");
  if (!(icm_learning_rate > 0.0)) fail("icm_learning_rate must be positive");
  if (beta < 0.0 || beta > 1.0) fail("beta must be in [0, 1]");
  if (gamma < 0.0 || gamma > 1.0) fail("gamma must be in [0, 1]");
  if (phi < 0.0 || phi > 1.0) fail("phi must be in [0, 1]");
  if (icm_epochs < 0) fail("icm_epochs must be >= 0");
  if (icm_batch_size == 0) fail("icm_batch_size must be positive");
  if (icm_feature_dim == 0) fail("icm_feature_dim must be positive");
  if (transitions_per_individual == 0) fail("transitions_per_individual must be positive");
  if (buffer_capacity == 0) fail("buffer_capacity must be positive");
  if (knn == 0) fail("knn must be positive");
  if (horizon < 1) fail("horizon must be positive");
  if (map_elites_bootstrap == 0) fail("map_elites_bootstrap must be positive");
  if (map_elites_batch == 0) fail("map_elites_batch must be positive");
  if (!(map_elites_sigma > 0.0)) fail("map_elites_sigma must be positive");
  if (grid_resolution == 0) fail("grid_resolution must be positive");
}

RunConfig default_config(std::string_view maze_name) {
  RunConfig c;
  c.environment = std::string(maze_name);
  if (maze_name == "us") {
    c.alpha = 1.0, c.knn = 10, c.beta = 0.2;
  } else if (maze_name == "hard") {
    c.alpha = 1.0, c.knn = 20, c.beta = 0.2;
  } else {
    c.alpha = 0.5, c.knn = 20, c.beta = 0.1;
  }
  return c;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": " + value);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field number_field(T RunConfig::*member) {
  return {[member](RunConfig& c, const std::string& v) { c.*member = parse_number<T>("value", v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return format_double(c.*member);
            } else {
              return std::to_string(c.*member);
            }
          }};
}

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"algorithm", {[](RunConfig& c, const std::string& v) { c.algorithm = parse_algorithm(v); },
                     [](const RunConfig& c) { return std::string(to_string(c.algorithm)); }}},
      {"environment", {[](RunConfig& c, const std::string& v) { c.environment = v; },
                       [](const RunConfig& c) { return c.environment; }}},
      {"sigma", number_field(&RunConfig::sigma)},
      {"lambda", number_field(&RunConfig::lambda)},
      {"mu", number_field(&RunConfig::mu)},
      {"alpha", number_field(&RunConfig::alpha)},
      {"icm_learning_rate", number_field(&RunConfig::icm_learning_rate)},
      {"beta", number_field(&RunConfig::beta)},
      {"gamma", number_field(&RunConfig::gamma)},
      {"icm_epochs", number_field(&RunConfig::icm_epochs)},
      {"icm_batch_size", number_field(&RunConfig::icm_batch_size)},
      {"icm_batches_per_epoch", number_field(&RunConfig::icm_batches_per_epoch)},
      {"icm_feature_dim", number_field(&RunConfig::icm_feature_dim)},
      {"transitions_per_individual", number_field(&RunConfig::transitions_per_individual)},
      {"buffer_capacity", number_field(&RunConfig::buffer_capacity)},
      {"phi", number_field(&RunConfig::phi)},
      {"knn", number_field(&RunConfig::knn)},
      {"horizon", number_field(&RunConfig::horizon)},
      {"generations", number_field(&RunConfig::generations)},
      {"map_elites_bootstrap", number_field(&RunConfig::map_elites_bootstrap)},
      {"map_elites_batch", number_field(&RunConfig::map_elites_batch)},
      {"map_elites_sigma", number_field(&RunConfig::map_elites_sigma)},
      {"grid_resolution", number_field(&RunConfig::grid_resolution)},
      {"checkpoint_every", number_field(&RunConfig::checkpoint_every)},
      {"fingerprint_limit", number_field(&RunConfig::fingerprint_limit)},
      {"seed", number_field(&RunConfig::seed)},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    if (key == "maze") key = "environment";
    entries.emplace_back(key, trim(std::string_view(t).substr(eq + 1)));
  }

  std::string environment = "snake";
  for (const auto& [k, v] : entries) {
    if (k == "environment") environment = v;
  }
  RunConfig c = default_config(environment);
  for (const auto& [k, v] : entries) {
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& f) { return f.first == k; });
    if (it == table.end()) throw std::invalid_argument("config: unknown key '" + k + "'");
    it->second.set(c, v);
  }
  c.validate();
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : fields()) out += key + " = " + field.get(config) + "\n";
  return out;
}

std::size_t count_dominance_violations(std::span<const FitnessRecord> records) {
  double worst_rewarding = std::numeric_limits<double>::infinity();
  double best_unrewarded = -std::numeric_limits<double>::infinity();
  for (const FitnessRecord& r : records) {
    if (r.extrinsic > 0.0) {
      worst_rewarding = std::min(worst_rewarding, r.total);
    } else {
      best_unrewarded = std::max(best_unrewarded, r.total);
    }
  }
  if (!std::isfinite(worst_rewarding) || !std::isfinite(best_unrewarded)) return 0;
  std::size_t n = 0;
  for (const FitnessRecord& r : records) {
    if (r.extrinsic > 0.0 && r.total <= best_unrewarded) ++n;
  }
  return n;
}

namespace {

MazeSpec configured_maze(const RunConfig& config) {
  MazeSpec spec = resolve_maze(config.environment);
  spec.horizon = config.horizon;
  return spec;
}

// Keeps a uniform sample of at most `limit` rewarding fingerprints.
class FingerprintReservoir {
 public:
  FingerprintReservoir(std::size_t limit, Rng rng) : limit_(limit), rng_(std::move(rng)) {}

  void offer(const Trajectory& t, double extrinsic, const std::string& label) {
    if (limit_ == 0 || !(extrinsic > 0.0)) return;
    ++seen_;
    if (items_.size() < limit_) {
      items_.push_back(make_fingerprint(t, extrinsic, label));
      return;
    }
    const std::uint64_t j = rng_.below(seen_);
    if (j < limit_) items_[j] = make_fingerprint(t, extrinsic, label);
  }

  void save(const fs::path& path) const {
    std::vector<double> flat;
    json fitness = json::array();
    for (const auto& f : items_) {
      flat.insert(flat.end(), f.values.begin(), f.values.end());
      fitness.push_back(f.extrinsic);
    }
    json header = {{"count", flat.size()},
                   {"rows", items_.size()},
                   {"cols", kFingerprintStates * kStateDim},
                   {"algorithm", items_.empty() ? std::string() : items_.front().algorithm},
                   {"fitness", fitness}};
    save_array(path, flat, header.dump());
  }

 private:
  std::size_t limit_;
  Rng rng_;
  std::uint64_t seen_ = 0;
  std::vector<PolicyFingerprint> items_;
};

struct Outputs {
  bool enabled = false;
  fs::path dir;
  std::ofstream reports, fitness, final_states, timing;

  void open(const fs::path& d) {
    enabled = !d.empty();
    if (!enabled) return;
    dir = d;
    fs::create_directories(dir);
    const auto open_file = [&](std::ofstream& f, const char* name) {
      f.open(dir / name, std::ios::binary | std::ios::trunc);
      if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    };
    open_file(reports, "reports.csv");
    open_file(fitness, "fitness.csv");
    open_file(final_states, "final_states.csv");
    open_file(timing, "timing.log");
    reports << "generation,max_fe,mean_fe,min_fe,max_fi,mean_fi,best_so_far,coverage_percent,buffer_size,"
               "icm_loss,rollouts,dominance_violations\n";
    fitness << "generation,index,f_e,f_i,total,rank\n";
    final_states << "generation,index,x,y,v_x,v_y,f_e\n";
  }
};

void write_report(std::ostream& out, const GenerationReport& r) {
  out << r.generation << ',' << format_double(r.max_extrinsic) << ',' << format_double(r.mean_extrinsic) << ','
      << format_double(r.min_extrinsic) << ',' << format_double(r.max_intrinsic) << ','
      << format_double(r.mean_intrinsic) << ',' << format_double(r.best_so_far) << ','
      << format_double(r.coverage_percent) << ',' << r.buffer_size << ',' << format_double(r.icm_loss) << ','
      << r.rollouts << ',' << r.dominance_violations << '\n';
}

void save_checkpoint(const fs::path& dir, const RunConfig& config, const MazeSpec& maze,
                     std::span<const double> center, std::size_t generation, const EsState* es,
                     const IcmParams* icm) {
  fs::create_directories(dir);
  save_array(dir / "center.bin", center, json{{"count", center.size()}, {"kind", "policy_center"}}.dump());
  json j = {{"algorithm", to_string(config.algorithm)},
            {"environment", config.environment},
            {"maze", format_maze(maze)},
            {"generation", generation},
            {"sigma", config.sigma},
            {"lambda", config.lambda},
            {"mu", config.mu},
            {"alpha", config.alpha},
            {"seed", config.seed},
            {"center", "center.bin"}};
  if (es) j["es_rng"] = es->rng.state();
  if (icm) {
    save_icm(dir / "icm", *icm);
    j["icm"] = "icm";
  }
  std::ofstream(dir / "es.json") << j.dump(2) << '\n';
}

std::string checkpoint_name(std::size_t generation) {
  std::string s = std::to_string(generation);
  return "gen_" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

}  // namespace

RunSummary run_experiment(const RunConfig& config, const RunOptions& options) {
  config.validate();
  const MazeSpec spec = configured_maze(config);
  const PolicyEvaluator evaluator{Maze(spec)};
  const Maze& maze = evaluator.maze();
  const std::uint64_t seed = config.seed;
  const std::string label(to_string(config.algorithm));

  Outputs out;
  out.open(options.output_dir);
  if (out.enabled) std::ofstream(out.dir / "config.txt") << format_config(config);

  CoverageGrid coverage(spec.bounds, config.grid_resolution);
  FingerprintReservoir reservoir(config.fingerprint_limit, Rng::stream(seed, stream_ids::fingerprints));
  RunSummary summary;
  double best = 0.0;
  bool any = false;

  const auto record_evaluations = [&](std::size_t generation, std::span<const Evaluation> evals) {
    for (std::size_t i = 0; i < evals.size(); ++i) {
      const auto b = final_behavior(evals[i].trajectory);
      coverage.update({b[0], b[1]});
      reservoir.offer(evals[i].trajectory, evals[i].extrinsic, label);
      if (!any || evals[i].extrinsic > best) best = evals[i].extrinsic, any = true;
      if (out.enabled) {
        out.final_states << generation << ',' << i << ',' << format_double(b[0]) << ',' << format_double(b[1])
                         << ',' << format_double(b[2]) << ',' << format_double(b[3]) << ','
                         << format_double(evals[i].extrinsic) << '\n';
      }
    }
    summary.rollouts += evals.size();
  };

  const auto fill_report = [&](GenerationReport& r, std::span<const Evaluation> evals,
                               std::span<const FitnessRecord> records) {
    double sum_e = 0.0;
    r.max_extrinsic = -std::numeric_limits<double>::infinity();
    r.min_extrinsic = std::numeric_limits<double>::infinity();
    for (const Evaluation& e : evals) {
      sum_e += e.extrinsic;
      r.max_extrinsic = std::max(r.max_extrinsic, e.extrinsic);
      r.min_extrinsic = std::min(r.min_extrinsic, e.extrinsic);
    }
    r.mean_extrinsic = sum_e / static_cast<double>(evals.size());
    if (!records.empty()) {
      double sum_i = 0.0;
      r.max_intrinsic = -std::numeric_limits<double>::infinity();
      for (const FitnessRecord& f : records) {
        sum_i += f.intrinsic;
        r.max_intrinsic = std::max(r.max_intrinsic, f.intrinsic);
      }
      r.mean_intrinsic = sum_i / static_cast<double>(records.size());
    }
    r.best_so_far = best;
    r.coverage_percent = coverage.percent();
    r.rollouts = summary.rollouts;
  };

  const auto finish_generation = [&](GenerationReport& r, std::chrono::steady_clock::time_point t0) {
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    summary.dominance_violations += r.dominance_violations;
    if (r.dominance_violations > 0) {
      std::clog << "warning: generation " << r.generation << ": " << r.dominance_violations
                << " rewarding individuals outranked by non-rewarding ones\n";
    }
    if (out.enabled) {
      write_report(out.reports, r);
      out.timing << r.generation << ' ' << format_double(r.wall_ms) << " ms\n";
    }
    summary.reports.push_back(r);
    if (options.on_generation) options.on_generation(r);
  };

  const auto write_fitness = [&](std::size_t generation, const GenerationResult& g) {
    if (!out.enabled) return;
    std::vector<std::size_t> rank(g.order.size());
    for (std::size_t r = 0; r < g.order.size(); ++r) rank[g.order[r]] = r;
    for (const FitnessRecord& f : g.records) {
      out.fitness << generation << ',' << f.index << ',' << format_double(f.extrinsic) << ','
                  << format_double(f.intrinsic) << ',' << format_double(f.total) << ',' << rank[f.index] << '\n';
    }
  };

  const bool checkpoints = out.enabled && config.checkpoint_every > 0;

  if (config.algorithm == Algorithm::map_elites) {
    EliteGrid grid = make_maze_grid(maze, config.grid_resolution);
    Rng rng = Rng::stream(seed, stream_ids::map_elites);
    {
      const auto t0 = std::chrono::steady_clock::now();
      const auto evals = map_elites_bootstrap(grid, config.map_elites_bootstrap, config.sigma, evaluator, rng);
      record_evaluations(0, evals);
      GenerationReport r;
      fill_report(r, evals, {});
      finish_generation(r, t0);
    }
    for (std::size_t gen = 0; gen < config.generations; ++gen) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto evals = map_elites_generation(grid, config.map_elites_batch, config.map_elites_sigma, evaluator,
                                               rng, gen + 1);
      record_evaluations(gen + 1, evals);
      GenerationReport r;
      r.generation = gen + 1;
      fill_report(r, evals, {});
      finish_generation(r, t0);
      if (checkpoints && (gen + 1) % config.checkpoint_every == 0) {
        save_checkpoint(out.dir / "checkpoints" / checkpoint_name(gen + 1), config, spec, grid.best().genome,
                        gen + 1, nullptr, nullptr);
      }
    }
    summary.archive_size = grid.size();
    summary.final_center = grid.best().genome;
    if (out.enabled) {
      std::ofstream f(out.dir / "grid.csv", std::ios::binary);
      grid.write_csv(f);
    }
  } else {
    EsState state;
    {
      Rng init = Rng::stream(seed, stream_ids::center_init);
      state.center = initial_policy_genome(evaluator.policy_template(), init);
    }
    state.sigma = config.sigma;
    state.lambda = config.lambda;
    state.mu = config.mu;
    state.alpha = config.alpha;
    state.rng = Rng::stream(seed, stream_ids::es_sampling);
    state.validate();
    Rng fitness_rng = Rng::stream(seed, stream_ids::fitness_fallback);

    std::optional<IcmParams> icm;
    std::optional<ReplayBuffer> buffer;
    Rng buffer_rng = Rng::stream(seed, stream_ids::buffer);
    Rng train_rng = Rng::stream(seed, stream_ids::icm_train);
    CuriositySettings curiosity;
    if (config.algorithm == Algorithm::curiosity_es) {
      IcmConfig ic;
      ic.beta = config.beta;
      ic.learning_rate = config.icm_learning_rate;
      ic.feature_dim = config.icm_feature_dim;
      Rng icm_rng = Rng::stream(seed, stream_ids::icm_init);
      icm = make_icm(ic, icm_rng);
      use_maze_normalization(*icm, maze);
      buffer.emplace(config.buffer_capacity, config.transitions_per_individual);
      curiosity.phi = config.phi;
      curiosity.gamma = config.gamma;
      curiosity.training.epochs = config.icm_epochs;
      curiosity.training.batch_size = config.icm_batch_size;
      curiosity.training.max_batches_per_epoch = config.icm_batches_per_epoch;
    }
    NoveltyArchive archive;
    archive.k = config.knn;
    const double phi = config.algorithm == Algorithm::plain_es ? 1.0 : config.phi;

    for (std::size_t gen = 0; gen < config.generations; ++gen) {
      const auto t0 = std::chrono::steady_clock::now();
      GenerationReport r;
      r.generation = gen + 1;
      GenerationResult g;
      if (config.algorithm == Algorithm::curiosity_es) {
        CuriosityGeneration cg =
            curiosity_es_generation(state, *icm, *buffer, evaluator, curiosity, fitness_rng, buffer_rng, train_rng);
        g = std::move(cg.result);
        r.buffer_size = buffer->size();
        if (!cg.icm_loss_history.empty()) {
          double s = 0.0;
          for (double v : cg.icm_loss_history) s += v;
          r.icm_loss = s / static_cast<double>(cg.icm_loss_history.size());
        }
      } else if (config.algorithm == Algorithm::ns_es) {
        g = std::move(ns_es_generation(state, archive, phi, evaluator, fitness_rng).result);
      } else {
        g = intrinsic_es_generation(state, evaluator, nullptr, 1.0, fitness_rng);
      }
      record_evaluations(gen + 1, g.evaluations);
      write_fitness(gen + 1, g);
      if (phi > 0.5) r.dominance_violations = count_dominance_violations(g.records);
      fill_report(r, g.evaluations, g.records);
      if (summary.rollouts != config.lambda * (gen + 1)) throw std::logic_error("rollout accounting mismatch");
      finish_generation(r, t0);
      if (checkpoints && (gen + 1) % config.checkpoint_every == 0) {
        save_checkpoint(out.dir / "checkpoints" / checkpoint_name(gen + 1), config, spec, state.center, gen + 1,
                        &state, icm ? &*icm : nullptr);
      }
    }
    summary.archive_size = archive.size();
    summary.final_center = state.center;
    if (out.enabled && config.algorithm == Algorithm::ns_es) {
      std::ofstream f(out.dir / "archive.csv", std::ios::binary);
      f << "b0,b1,b2,b3,generation\n";
      for (std::size_t i = 0; i < archive.size(); ++i) {
        for (double v : archive.behaviors[i]) f << format_double(v) << ',';
        f << archive.generation_found[i] << '\n';
      }
    }
  }

  summary.best_so_far = best;
  summary.final_coverage_percent = coverage.percent();
  if (out.enabled) {
    reservoir.save(out.dir / "fingerprints.bin");
    std::ofstream(out.dir / "maze.txt") << format_maze(spec);
    if (config.checkpoint_every > 0) {
      save_checkpoint(out.dir / "checkpoints" / "final", config, spec, summary.final_center, config.generations,
                      nullptr, nullptr);
    }
  }
  return summary;
}

ReplayResult replay_checkpoint(const fs::path& checkpoint, std::size_t episodes, std::uint64_t seed,
                               const fs::path& out_dir) {
  const fs::path file = fs::is_directory(checkpoint) ? checkpoint / "es.json" : checkpoint;
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open checkpoint " + file.string());
  const json j = json::parse(in);
  const fs::path dir = file.parent_path();
  const Maze maze(parse_maze(j.at("maze").get<std::string>(), j.value("environment", "checkpoint")));
  const std::vector<double> center = load_array(dir / j.value("center", "center.bin"));
  const double sigma = j.at("sigma").get<double>();

  Network policy = make_policy_network();
  if (center.size() != policy.parameter_count()) throw std::runtime_error("checkpoint center has wrong size");
  Rng rng = Rng::stream(seed, stream_ids::replay);
  ReplayResult result;
  if (!out_dir.empty()) fs::create_directories(out_dir);
  for (std::size_t k = 0; k < episodes; ++k) {
    std::vector<double> genome = center;
    if (k > 0) {
      for (double& w : genome) w += sigma * rng.normal();
    }
    policy.set_weights(genome);
    result.episodes.push_back(rollout(maze, policy));
    if (!out_dir.empty()) {
      std::ofstream f(out_dir / ("episode_" + std::to_string(k) + ".csv"), std::ios::binary);
      write_trajectory_csv(f, result.episodes.back().trajectory);
    }
  }
  return result;
}

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

double to_double(const std::string& s) { return std::stod(s); }

}  // namespace

void analyze_runs(std::span<const fs::path> runs, const fs::path& out_dir) {
  if (runs.empty()) throw std::invalid_argument("analyze: no runs given");
  fs::create_directories(out_dir);
  std::vector<SvgSeries> curves, coverages;
  std::vector<PolicyFingerprint> fingerprints;

  for (const fs::path& run : runs) {
    const std::string label = run.filename().empty() ? run.parent_path().filename().string()
                                                     : run.filename().string();
    const RunConfig config = load_config(run / "config.txt");
    const MazeSpec spec = parse_maze([&] {
      std::ifstream in(run / "maze.txt");
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }(), config.environment);

    const auto reports = read_csv(run / "reports.csv");
    std::vector<double> gens, max_fe;
    for (const auto& r : reports) gens.push_back(to_double(r.at(0))), max_fe.push_back(to_double(r.at(1)));
    const std::vector<double> curve = best_reward_curve(max_fe);
    {
      std::ofstream f(out_dir / (label + "_reward_curve.csv"), std::ios::binary);
      f << "generation,best_so_far\n";
      for (std::size_t i = 0; i < curve.size(); ++i) f << format_double(gens[i]) << ',' << format_double(curve[i]) << '\n';
    }
    curves.push_back({label, gens, curve});

    const auto finals = read_csv(run / "final_states.csv");
    CoverageGrid grid(spec.bounds, config.grid_resolution);
    SvgSeries scatter{label, {}, {}};
    SvgSeries cov{label, {}, {}};
    {
      std::ofstream fs_out(out_dir / (label + "_final_states.csv"), std::ios::binary);
      std::ofstream cov_out(out_dir / (label + "_coverage.csv"), std::ios::binary);
      fs_out << "x,y,generation\n";
      cov_out << "generation,percent\n";
      for (std::size_t i = 0; i < finals.size(); ++i) {
        const auto& row = finals[i];
        const double x = to_double(row.at(2)), y = to_double(row.at(3));
        grid.update({x, y});
        scatter.x.push_back(x), scatter.y.push_back(y);
        fs_out << format_double(x) << ',' << format_double(y) << ',' << row.at(0) << '\n';
        if (i + 1 == finals.size() || finals[i + 1].at(0) != row.at(0)) {
          cov_out << row.at(0) << ',' << format_double(grid.percent()) << '\n';
          cov.x.push_back(to_double(row.at(0))), cov.y.push_back(grid.percent());
        }
      }
    }
    coverages.push_back(cov);
    {
      std::ofstream svg(out_dir / (label + "_final_states.svg"), std::ios::binary);
      std::vector<Segment> walls = spec.walls;
      write_scatter_svg(svg, label + " final positions", std::span<const SvgSeries>(&scatter, 1), &walls);
    }

    if (fs::exists(run / "fingerprints.bin")) {
      std::string header;
      const std::vector<double> flat = load_array(run / "fingerprints.bin", &header);
      const json h = json::parse(header);
      const std::size_t rows = h.value("rows", std::size_t{0});
      const std::size_t cols = h.value("cols", kFingerprintStates * kStateDim);
      for (std::size_t r = 0; r < rows; ++r) {
        PolicyFingerprint fp;
        fp.values.assign(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                         flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
        fp.extrinsic = h.at("fitness").at(r).get<double>();
        fp.algorithm = label;
        fingerprints.push_back(std::move(fp));
      }
    }
  }

  {
    std::ofstream svg(out_dir / "reward_curve.svg", std::ios::binary);
    write_line_svg(svg, "best reward so far", curves);
  }
  {
    std::ofstream svg(out_dir / "coverage.svg", std::ios::binary);
    write_line_svg(svg, "final position coverage (%)", coverages);
  }
  if (fingerprints.size() >= 3) {
    const PcaResult pca = pca_project(fingerprints, 2);
    std::ofstream f(out_dir / "pca.csv", std::ios::binary);
    f << "p1,p2,fitness,algorithm\n";
    std::map<std::string, SvgSeries> by_algo;
    for (std::size_t i = 0; i < fingerprints.size(); ++i) {
      f << format_double(pca.projections[i][0]) << ',' << format_double(pca.projections[i][1]) << ','
        << format_double(fingerprints[i].extrinsic) << ',' << fingerprints[i].algorithm << '\n';
      SvgSeries& s = by_algo[fingerprints[i].algorithm];
      s.label = fingerprints[i].algorithm;
      s.x.push_back(pca.projections[i][0]);
      s.y.push_back(pca.projections[i][1]);
    }
    std::vector<SvgSeries> series;
    for (auto& [k, s] : by_algo) series.push_back(std::move(s));
    std::ofstream svg(out_dir / "pca.svg", std::ios::binary);
    write_scatter_svg(svg, "PCA of last 300 states (rewarding policies)", series);
  } else {
    std::clog << "analyze: fewer than 3 rewarding fingerprints, PCA skipped\n";
  }
}

}  // namespace ces
