// Command-line front end: run, replay, analyze.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ces/format.hpp"
#include "ces/runner.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-ES maze experiments"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run one experiment");
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out_dir;
  bool quiet = false;
  run->add_option("--config", config_path, "key = value config file")->required()->check(CLI::ExistingFile);
  auto* seed_opt = run->add_option("--seed", seed, "master seed (overrides the config)");
  run->add_option("--out", out_dir, "output directory (default runs/<algorithm>_<env>_s<seed>)");
  run->add_flag("--quiet", quiet, "no per-generation progress");

  auto* replay = app.add_subcommand("replay", "re-roll a checkpointed policy");
  std::string checkpoint;
  std::size_t episodes = 1;
  std::uint64_t replay_seed = 0;
  std::string replay_out;
  replay->add_option("--checkpoint", checkpoint, "es.json or its directory")->required()->check(CLI::ExistingPath);
  replay->add_option("--episodes", episodes, "episode 0 is the center, the rest are sigma-perturbations")
      ->required()
      ->check(CLI::PositiveNumber);
  replay->add_option("--seed", replay_seed, "seed for the perturbations");
  replay->add_option("--out", replay_out, "trajectory directory (default <checkpoint dir>/replay)");

  auto* analyze = app.add_subcommand("analyze", "metric CSVs and SVGs for run directories");
  std::vector<std::string> run_dirs;
  std::string analyze_out;
  analyze->add_option("--run", run_dirs, "run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  analyze->add_option("--out", analyze_out, "output directory (default <first run>/analysis)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ces::RunConfig config = ces::load_config(config_path);
      seed_given = seed_opt->count() > 0;
      if (seed_given) config.seed = seed;
      if (out_dir.empty()) {
        const fs::path env(config.environment);
        const std::string env_name = env.has_extension() ? env.stem().string() : config.environment;
        out_dir = "runs/" + std::string(ces::to_string(config.algorithm)) + "_" + env_name + "_s" +
                  std::to_string(config.seed);
      }
      ces::RunOptions options;
      options.output_dir = out_dir;
      if (!quiet) {
        options.on_generation = [](const ces::GenerationReport& r) {
          std::cout << "gen " << r.generation << "  max_fe " << ces::format_double(r.max_extrinsic) << "  best "
                    << ces::format_double(r.best_so_far) << "  coverage " << ces::format_double(r.coverage_percent)
                    << "%  " << static_cast<long>(r.wall_ms) << " ms\n";
        };
      }
      const ces::RunSummary s = ces::run_experiment(config, options);
      std::cout << "best_so_far " << ces::format_double(s.best_so_far) << "\ncoverage_percent "
                << ces::format_double(s.final_coverage_percent) << "\nrollouts " << s.rollouts << "\noutput "
                << out_dir << '\n';
    } else if (*replay) {
      fs::path cp(checkpoint);
      const fs::path dir = fs::is_directory(cp) ? cp : cp.parent_path();
      const fs::path out = replay_out.empty() ? dir / "replay" : fs::path(replay_out);
      const ces::ReplayResult r = ces::replay_checkpoint(cp, episodes, replay_seed, out);
      for (std::size_t k = 0; k < r.episodes.size(); ++k) {
        std::cout << "episode " << k << "  steps " << r.episodes[k].trajectory.size() << "  fitness "
                  << ces::format_double(r.episodes[k].extrinsic_fitness) << '\n';
      }
      std::cout << "trajectories in " << out.string() << '\n';
    } else if (*analyze) {
      std::vector<fs::path> runs(run_dirs.begin(), run_dirs.end());
      const fs::path out = analyze_out.empty() ? runs.front() / "analysis" : fs::path(analyze_out);
      ces::analyze_runs(runs, out);
      std::cout << "analysis in " << out.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
