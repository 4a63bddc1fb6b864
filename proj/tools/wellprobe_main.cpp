// wellprobe: declarative experiment runner. One subcommand per pipeline;
// every run reads an optional JSON config, applies flag overrides, executes,
// and writes summary.json plus data files into the output directory.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "wellprobe/errors.hpp"
#include "wellprobe/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string mode;
  std::uint64_t seed = 0;
  int runs = 0;
  bool have_seed = false;
  bool have_runs = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
  cmd->add_option("--seed", flags.seed, "master seed (overrides config)")
      ->each([&flags](const std::string&) { flags.have_seed = true; });
  cmd->add_option("--runs", flags.runs, "ensemble size / run count (overrides config)")
      ->each([&flags](const std::string&) { flags.have_runs = true; });
}

int execute(const CommonFlags& flags, wellprobe::RunMode default_mode,
            bool maxfs_family) {
  using namespace wellprobe;

  ExperimentConfig config;
  if (!flags.config_path.empty()) config = load_config_file(flags.config_path);

  if (!maxfs_family) {
    config.mode = default_mode;
  } else {
    // maxfs covers two pipelines; the flag (or config) picks which.
    if (flags.config_path.empty()) config.mode = default_mode;
    if (!flags.mode.empty()) config.mode = run_mode_from_name(flags.mode);
    if (config.mode != RunMode::DropSearch && config.mode != RunMode::WeightSweep)
      throw ConfigError(std::string("config: maxfs runs drop_search or ") +
                        "weight_sweep, got '" + run_mode_name(config.mode) + "'");
  }
  if (flags.have_seed) config.master_seed = flags.seed;
  if (flags.have_runs) config.runs = flags.runs;
  if (!flags.out_dir.empty()) config.out_dir = flags.out_dir;

  const RunSummary summary = run_experiment(config);

  std::printf("%s %s -> %s\n", problem_name(config.problem),
              run_mode_name(config.mode), summary.out_dir.c_str());
  std::printf("%s\n", summary.metrics.dump(2).c_str());
  std::printf("files:");
  for (const std::string& f : summary.files) std::printf(" %s", f.c_str());
  std::printf(" summary.json\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wellprobe: ensemble probes of linear-system well-posedness"};
  app.require_subcommand(1);

  CommonFlags probe_flags, scaling_flags, maxfs_flags, kaczmarz_flags;

  CLI::App* probe =
      app.add_subcommand("probe", "seeded solve ensemble, stats and heatmaps");
  add_common_flags(probe, probe_flags);

  CLI::App* scaling =
      app.add_subcommand("scaling", "patch-dimension vs perimeter fits");
  add_common_flags(scaling, scaling_flags);

  CLI::App* maxfs =
      app.add_subcommand("maxfs", "constraint drop search / weight sweep");
  add_common_flags(maxfs, maxfs_flags);
  maxfs->add_option("--mode", maxfs_flags.mode,
                    "drop_search (default) or weight_sweep");

  CLI::App* kaczmarz =
      app.add_subcommand("kaczmarz", "randomized row-projection runs with traces");
  add_common_flags(kaczmarz, kaczmarz_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (probe->parsed())
      return execute(probe_flags, wellprobe::RunMode::Ensemble, false);
    if (scaling->parsed())
      return execute(scaling_flags, wellprobe::RunMode::PerimeterScaling, false);
    if (maxfs->parsed())
      return execute(maxfs_flags, wellprobe::RunMode::DropSearch, true);
    if (kaczmarz->parsed())
      return execute(kaczmarz_flags, wellprobe::RunMode::Kaczmarz, false);
  } catch (const wellprobe::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
