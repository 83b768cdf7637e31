#include "ces/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ces/format.hpp"
#include "ces/parallel.hpp"

namespace ces {

void NoveltyArchive::add(BehaviorDescriptor b, std::uint64_t generation) {
  if (!behaviors.empty() && b.size() != behaviors.front().size()) {
    throw std::invalid_argument("NoveltyArchive: behaviour dimension mismatch");
  }
  behaviors.push_back(std::move(b));
  generation_found.push_back(generation);
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double novelty_score(const NoveltyArchive& archive, std::span<const double> behavior) {
  if (archive.k == 0) throw std::invalid_argument("novelty_score: k must be >= 1");
  if (archive.behaviors.empty()) return std::numeric_limits<double>::infinity();
  std::vector<double> d;
  d.reserve(archive.size());
  for (const BehaviorDescriptor& b : archive.behaviors) d.push_back(euclidean_distance(behavior, b));
  const std::size_t k = std::min(archive.k, d.size());
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  std::sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k));
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += d[i];
  return sum / static_cast<double>(k);
}

NsEsGeneration ns_es_generation(EsState& state, NoveltyArchive& archive, double phi,
                                const PolicyEvaluator& evaluator, Rng& fitness_rng) {
  const NoveltyArchive& snapshot = archive;
  IntrinsicProvider novelty = [&snapshot](std::span<const Evaluation> evals) {
    std::vector<double> fi(evals.size());
    parallel_for(evals.size(), [&](std::size_t i) {
      fi[i] = novelty_score(snapshot, final_behavior(evals[i].trajectory));
    });
    return fi;
  };
  const std::uint64_t generation = state.generation;
  NsEsGeneration out{intrinsic_es_generation(state, evaluator, novelty, phi, fitness_rng)};
  for (const Evaluation& e : out.result.evaluations) archive.add(final_behavior(e.trajectory), generation);
  return out;
}

EliteGrid::EliteGrid(std::vector<double> lower, std::vector<double> upper, std::size_t resolution)
    : lower_(std::move(lower)), upper_(std::move(upper)), resolution_(resolution) {
  if (lower_.empty() || lower_.size() != upper_.size()) throw std::invalid_argument("EliteGrid: bad bounds");
  if (resolution_ == 0) throw std::invalid_argument("EliteGrid: resolution must be positive");
  for (std::size_t d = 0; d < lower_.size(); ++d) {
    if (!(upper_[d] > lower_[d])) throw std::invalid_argument("EliteGrid: empty dimension");
  }
  if (std::pow(static_cast<double>(resolution_), static_cast<double>(lower_.size())) > 1.8e19) {
    throw std::invalid_argument("EliteGrid: too many cells");
  }
}

double EliteGrid::total_cells() const {
  return std::pow(static_cast<double>(resolution_), static_cast<double>(lower_.size()));
}

std::vector<std::size_t> EliteGrid::cell_of(std::span<const double> behavior) const {
  if (behavior.size() != lower_.size()) throw std::invalid_argument("EliteGrid: behaviour dimension mismatch");
  std::vector<std::size_t> cell(behavior.size());
  for (std::size_t d = 0; d < behavior.size(); ++d) {
    const double u = (behavior[d] - lower_[d]) / (upper_[d] - lower_[d]);
    const double c = std::floor(u * static_cast<double>(resolution_));
    cell[d] = static_cast<std::size_t>(std::clamp(c, 0.0, static_cast<double>(resolution_ - 1)));
  }
  return cell;
}

std::uint64_t EliteGrid::cell_key(std::span<const double> behavior) const {
  std::uint64_t key = 0;
  for (std::size_t c : cell_of(behavior)) key = key * resolution_ + c;
  return key;
}

bool EliteGrid::try_insert(Elite elite) {
  const std::uint64_t key = cell_key(elite.behavior);
  const auto it = slot_.find(key);
  if (it == slot_.end()) {
    slot_.emplace(key, elites_.size());
    elites_.push_back(std::move(elite));
    return true;
  }
  Elite& current = elites_[it->second];
  if (elite.fitness > current.fitness) {
    current = std::move(elite);
    return true;
  }
  return false;
}

const Elite* EliteGrid::find(std::span<const double> behavior) const {
  const auto it = slot_.find(cell_key(behavior));
  return it == slot_.end() ? nullptr : &elites_[it->second];
}

const Elite& EliteGrid::best() const {
  if (elites_.empty()) throw std::logic_error("EliteGrid::best: empty grid");
  return *std::max_element(elites_.begin(), elites_.end(),
                           [](const Elite& a, const Elite& b) { return a.fitness < b.fitness; });
}

void EliteGrid::write_csv(std::ostream& out) const {
  for (std::size_t d = 0; d < lower_.size(); ++d) out << 'b' << d << ',';
  out << "fitness,generation\n";
  for (const Elite& e : elites_) {
    for (double v : e.behavior) out << format_double(v) << ',';
    out << format_double(e.fitness) << ',' << e.generation << '\n';
  }
}

EliteGrid make_maze_grid(const Maze& maze, std::size_t resolution) {
  const MazeSpec& s = maze.spec();
  const double v = s.dynamics.max_speed;
  return EliteGrid({s.bounds.lo.x, s.bounds.lo.y, -v, -v}, {s.bounds.hi.x, s.bounds.hi.y, v, v}, resolution);
}

namespace {

std::vector<Evaluation> evaluate_and_insert(EliteGrid& grid, std::vector<ParameterVector> genomes,
                                            const PolicyEvaluator& evaluator, std::uint64_t generation) {
  std::vector<Evaluation> evals = evaluator.evaluate_all(genomes);
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    grid.try_insert({std::move(genomes[i]), evals[i].extrinsic, final_behavior(evals[i].trajectory), generation});
  }
  return evals;
}

}  // namespace

std::vector<Evaluation> map_elites_bootstrap(EliteGrid& grid, std::size_t count, double sigma,
                                             const PolicyEvaluator& evaluator, Rng& rng) {
  std::vector<ParameterVector> genomes(count, ParameterVector(evaluator.genome_size()));
  for (auto& g : genomes) {
    for (double& w : g) w = sigma * rng.normal();
  }
  return evaluate_and_insert(grid, std::move(genomes), evaluator, 0);
}

std::vector<Evaluation> map_elites_generation(EliteGrid& grid, std::size_t batch, double mutation_sigma,
                                              const PolicyEvaluator& evaluator, Rng& rng,
                                              std::uint64_t generation) {
  if (grid.empty()) throw std::logic_error("map_elites_generation: grid must be bootstrapped first");
  std::vector<ParameterVector> genomes;
  genomes.reserve(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    ParameterVector g = grid.elites()[static_cast<std::size_t>(rng.below(grid.size()))].genome;
    for (double& w : g) w += mutation_sigma * rng.normal();
    genomes.push_back(std::move(g));
  }
  return evaluate_and_insert(grid, std::move(genomes), evaluator, generation);
}

}  // namespace ces
