#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#ifdef __unix__
#include <sys/wait.h>
#endif

#include "doctest.h"
#include "wellprobe/experiment.hpp"
#include "wellprobe/heatmap.hpp"

using namespace wellprobe;
using nlohmann::json;

namespace {

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) : path(name) {
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& text) {
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

void expect_config_error(const std::function<void()>& fn, const std::string& needle) {
  try {
    fn();
    FAIL_CHECK("expected ConfigError mentioning '" << needle << "'");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(needle) != std::string::npos);
  }
}

json drop_search_doc(const std::string& out_dir) {
  json doc;
  doc["problem"] = "line_ode";
  doc["mode"] = "drop_search";
  doc["out_dir"] = out_dir;
  doc["ode"]["n"] = 6;
  doc["ode"]["constraints"] = {{{"kind", "value"}, {"t", 0.0}, {"value", 0.0}},
                               {{"kind", "value"}, {"t", 1.0}, {"value", 1.0}},
                               {{"kind", "value"}, {"t", 0.5}, {"value", 0.0}}};
  doc["drop_search"]["max_drop"] = 1;
  return doc;
}

const unsigned char* pixel(const Heatmap& map, int r, int c) {
  return map.rgb.data() + 3 * (static_cast<std::size_t>(r) * map.width + c);
}

bool pixel_is(const Heatmap& map, int r, int c, int red, int green, int blue) {
  const unsigned char* p = pixel(map, r, c);
  return p[0] == red && p[1] == green && p[2] == blue;
}

}  // namespace

// ---------------------------------------------------------------------------
// Heatmaps

TEST_CASE("heatmap endpoints hit the colormap extremes") {
  Eigen::MatrixXd field(2, 2);
  field << 0.0, 1.0, 1.0, 0.0;
  const Heatmap map = render_heatmap(field);
  CHECK(map.width == 2);
  CHECK(map.height == 2);
  CHECK(pixel_is(map, 0, 0, 68, 1, 84));     // low end
  CHECK(pixel_is(map, 0, 1, 253, 231, 37));  // high end
  CHECK(pixel_is(map, 1, 0, 253, 231, 37));
  CHECK(pixel_is(map, 1, 1, 68, 1, 84));
}

TEST_CASE("a constant field renders as the colormap midpoint") {
  const Heatmap map = render_heatmap(Eigen::MatrixXd::Constant(3, 4, 2.5));
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) CHECK(pixel_is(map, r, c, 33, 145, 140));
}

TEST_CASE("non-finite entries are reported with their indices") {
  Eigen::MatrixXd field = Eigen::MatrixXd::Zero(2, 3);
  field(0, 1) = std::nan("");
  field(1, 2) = std::numeric_limits<double>::infinity();
  try {
    render_heatmap(field);
    FAIL_CHECK("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(0, 1)") != std::string::npos);
    CHECK(msg.find("(1, 2)") != std::string::npos);
  }
  CHECK_THROWS_AS(render_heatmap(Eigen::MatrixXd()), InvalidArgument);
}

TEST_CASE("log scale refuses negatives and clamps zeros") {
  Eigen::MatrixXd negative(1, 2);
  negative << -1.0, 1.0;
  HeatmapOptions log_opts;
  log_opts.scale = HeatmapScale::Log;
  CHECK_THROWS_AS(render_heatmap(negative, log_opts), InvalidArgument);

  Eigen::MatrixXd field(2, 2);
  field << 0.0, 1e-4, 1e-2, 1.0;
  const Heatmap map = render_heatmap(field, log_opts);
  // The zero is clamped to the smallest positive value, so both share the
  // low-end color.
  const unsigned char* zero_px = pixel(map, 0, 0);
  const unsigned char* tiny_px = pixel(map, 0, 1);
  CHECK(zero_px[0] == tiny_px[0]);
  CHECK(zero_px[1] == tiny_px[1]);
  CHECK(zero_px[2] == tiny_px[2]);
  CHECK(pixel_is(map, 0, 0, 68, 1, 84));
  CHECK(pixel_is(map, 1, 1, 253, 231, 37));

  // All-zero field on a log scale degenerates to a constant image.
  const Heatmap flat = render_heatmap(Eigen::MatrixXd::Zero(2, 2), log_opts);
  CHECK(pixel_is(flat, 0, 0, 33, 145, 140));
}

TEST_CASE("explicit color range clamps out-of-range values") {
  Eigen::MatrixXd field(1, 3);
  field << -5.0, 0.5, 7.0;
  HeatmapOptions opts;
  opts.vmin = 0.0;
  opts.vmax = 1.0;
  const Heatmap map = render_heatmap(field, opts);
  CHECK(pixel_is(map, 0, 0, 68, 1, 84));
  CHECK(pixel_is(map, 0, 2, 253, 231, 37));

  opts.vmin = 2.0;
  opts.vmax = 1.0;
  CHECK_THROWS_AS(render_heatmap(field, opts), InvalidArgument);
}

TEST_CASE("ppm encoding is the header plus raw pixels") {
  Eigen::MatrixXd field(2, 3);
  field << 0, 1, 2, 3, 4, 5;
  const Heatmap map = render_heatmap(field);
  const std::vector<std::uint8_t> bytes = encode_ppm(map);
  const std::string header = "P6\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 18);
  CHECK(std::equal(header.begin(), header.end(), bytes.begin()));
  CHECK(std::equal(map.rgb.begin(), map.rgb.end(), bytes.begin() + header.size()));
}

TEST_CASE("field_from_values lays time along rows") {
  const GridShape shape{3, 2};  // n_x = 3, n_t = 2
  Eigen::VectorXd values(6);
  values << 10, 11, 12, 20, 21, 22;
  const Eigen::MatrixXd field = field_from_values(shape, values);
  REQUIRE(field.rows() == 2);
  REQUIRE(field.cols() == 3);
  CHECK(field(0, 0) == 10);
  CHECK(field(0, 2) == 12);
  CHECK(field(1, 1) == 21);
  CHECK_THROWS_AS(field_from_values(shape, Eigen::VectorXd::Zero(5)),
                  InvalidArgument);
}

// ---------------------------------------------------------------------------
// Config parsing

TEST_CASE("config round-trips losslessly through JSON") {
  json doc;
  doc["problem"] = "wave_case_study_2";
  doc["mode"] = "ensemble";
  doc["runs"] = 17;
  doc["master_seed"] = 12345;
  doc["threads"] = 2;
  doc["out_dir"] = "somewhere";
  doc["grid"] = {{"n_x", 14}, {"n_t", 22}, {"c", 2.0}};
  doc["data"] = {{"t_lo", 3}, {"t_hi", 7}, {"x_anchor", 1}, {"slant", -1},
                 {"width", 5}};
  doc["reflector"] = {{"t_begin", 10}, {"t_end", 20}};
  doc["solver"] = {{"sigma", 0.5}, {"max_iters", 123}};
  doc["scaling"] = {{"centers", {{{"label", "a"}, {"x", 3.0}, {"t", 4.0}}}},
                    {"radii", {1.0, 2.0}}};
  doc["kaczmarz"] = {{"variant", "quantile"}, {"q", 0.25}};

  const ExperimentConfig c1 = config_from_json(doc);
  CHECK(c1.problem == Problem::WaveCaseStudy2);
  CHECK(c1.runs == 17);
  CHECK(c1.grid.n_x == 14);
  REQUIRE(c1.data.has_value());
  CHECK(c1.data->slant == -1);
  REQUIRE(c1.reflector.has_value());
  CHECK(c1.solver.max_iters == 123);
  REQUIRE(c1.scaling.centers.size() == 1);
  CHECK(c1.scaling.centers[0].label == "a");
  CHECK(c1.kaczmarz.variant == KaczmarzVariant::Quantile);
  CHECK(c1.kaczmarz.q == 0.25);

  const json j1 = config_to_json(c1);
  const ExperimentConfig c2 = config_from_json(j1);
  const json j2 = config_to_json(c2);
  CHECK(j1 == j2);
  CHECK(j1.dump() == j2.dump());
  CHECK(config_hash(c1) == config_hash(c2));

  // An empty document is all defaults and also round-trips.
  const ExperimentConfig dflt = config_from_json(json::object());
  CHECK(dflt.problem == Problem::WaveWellPosed);
  CHECK(dflt.runs == 200);
  CHECK(!dflt.data.has_value());
  const json jd = config_to_json(dflt);
  CHECK(config_to_json(config_from_json(jd)) == jd);
}

TEST_CASE("config hash tracks content") {
  ExperimentConfig a;
  ExperimentConfig b;
  CHECK(config_hash(a) == config_hash(b));
  b.runs = 201;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("unknown keys are rejected with their full path") {
  expect_config_error([] { config_from_json(json::parse(R"({"bogus": 1})")); },
                      "unknown key 'bogus'");
  expect_config_error(
      [] { config_from_json(json::parse(R"({"grid": {"dx": 0.1}})")); },
      "unknown key 'grid.dx'");
  expect_config_error(
      [] {
        config_from_json(json::parse(
            R"({"ode": {"constraints": [{"kind": "value", "при": 0}]}})"));
      },
      "ode.constraints[0]");
  expect_config_error(
      [] {
        config_from_json(json::parse(
            R"({"scaling": {"centers": [{"x": 1}, {"radius": 2}]}})"));
      },
      "unknown key 'scaling.centers[1].radius'");
  expect_config_error(
      [] { config_from_json(json::parse(R"({"kaczmarz": {"Q": 0.5}})")); },
      "unknown key 'kaczmarz.Q'");
}

TEST_CASE("field types and ranges are validated") {
  expect_config_error([] { config_from_json(json::parse(R"({"runs": "many"})")); },
                      "'runs' must be an integer");
  expect_config_error([] { config_from_json(json::parse(R"({"runs": 0})")); },
                      "'runs' must be at least 1");
  expect_config_error([] { config_from_json(json::parse(R"({"grid": []})")); },
                      "'grid' must be an object");
  expect_config_error(
      [] { config_from_json(json::parse(R"({"master_seed": -4})")); },
      "non-negative");
  expect_config_error(
      [] {
        config_from_json(
            json::parse(R"({"weight_sweep": {"weights": [1, "x"]}})"));
      },
      "array of numbers");
  expect_config_error(
      [] { config_from_json(json::parse(R"({"out_dir": 3})")); },
      "must be a string");
  CHECK_THROWS_AS(config_from_json(json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("enum fields list the valid spellings") {
  expect_config_error(
      [] { config_from_json(json::parse(R"({"problem": "heat_equation"})")); },
      "wave_well_posed");
  expect_config_error(
      [] { config_from_json(json::parse(R"({"mode": "probe"})")); },
      "perimeter_scaling");
  expect_config_error(
      [] {
        config_from_json(json::parse(R"({"kaczmarz": {"variant": "qrk"}})"));
      },
      "quantile_subspace_constrained");
  expect_config_error(
      [] {
        config_from_json(json::parse(
            R"({"ode": {"constraints": [{"kind": "second_derivative"}]}})"));
      },
      "first_derivative");
  expect_config_error(
      [] {
        config_from_json(
            json::parse(R"({"drop_search": {"droppable": ["laws"]}})"));
      },
      "boundary_condition");
}

TEST_CASE("enum names round-trip") {
  for (const Problem p :
       {Problem::WaveWellPosed, Problem::WaveCaseStudy1, Problem::WaveCaseStudy2,
        Problem::LineODE, Problem::HarmonicOscillator, Problem::TwoLineFixture})
    CHECK(problem_from_name(problem_name(p)) == p);
  for (const RunMode m :
       {RunMode::Ensemble, RunMode::PerimeterScaling, RunMode::DropSearch,
        RunMode::WeightSweep, RunMode::Kaczmarz})
    CHECK(run_mode_from_name(run_mode_name(m)) == m);
}

TEST_CASE("load_config_file failure modes") {
  TempDir tmp("tmp_test_cli_cfg");
  expect_config_error([&] { load_config_file(tmp.file("missing.json")); },
                      "cannot open");
  write_text(tmp.file("broken.json"), "{\"runs\": ");
  expect_config_error([&] { load_config_file(tmp.file("broken.json")); },
                      "not valid JSON");
  write_text(tmp.file("good.json"), R"({"problem": "line_ode", "runs": 3})");
  const ExperimentConfig c = load_config_file(tmp.file("good.json"));
  CHECK(c.problem == Problem::LineODE);
  CHECK(c.runs == 3);
}

// ---------------------------------------------------------------------------
// run_experiment

TEST_CASE("drop-search experiment reports the three repairs") {
  TempDir tmp("tmp_test_cli_drop");
  const ExperimentConfig config = config_from_json(drop_search_doc(tmp.path.string()));
  const RunSummary summary = run_experiment(config);

  CHECK(summary.metrics["n_candidates"] == 3);
  CHECK(summary.metrics["subsets_examined"] == 3);
  CHECK(summary.metrics["max_satisfied_constraints"] == 2);
  REQUIRE(summary.files == std::vector<std::string>{"candidates.csv"});

  const std::string csv = slurp(tmp.file("candidates.csv"));
  CHECK(line_count(csv) == 4);  // header + three candidates

  const json doc = json::parse(slurp(tmp.file("summary.json")));
  CHECK(doc["schema_version"] == 1);
  CHECK(doc["metrics"]["n_candidates"] == 3);
  CHECK(doc["config"]["problem"] == "line_ode");
  CHECK(doc["files"] == json::array({"candidates.csv"}));
  // Hash in the file matches the hash of the echoed config.
  char expect[19];
  std::snprintf(expect, sizeof(expect), "0x%016llx",
                static_cast<unsigned long long>(config_hash(config)));
  CHECK(doc["config_hash"] == expect);
  CHECK(config_hash(config_from_json(doc["config"])) == config_hash(config));
}

TEST_CASE("weight-sweep experiment reports monotone trade-off flags") {
  TempDir tmp("tmp_test_cli_sweep");
  json doc = drop_search_doc(tmp.path.string());
  doc["mode"] = "weight_sweep";
  doc.erase("drop_search");
  doc["weight_sweep"]["weights"] = {1.0, 10.0, 100.0, 1000.0};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(summary.metrics["constraint_nonincreasing"] == true);
  CHECK(summary.metrics["law_nondecreasing"] == true);
  CHECK(summary.metrics["constraint_strictly_decreased"] == true);
  CHECK(summary.metrics["law_strictly_increased"] == true);
  CHECK(line_count(slurp(tmp.file("weight_sweep.csv"))) == 5);
}

TEST_CASE("wave ensemble experiment emits the full file set") {
  TempDir tmp("tmp_test_cli_wave");
  json doc;
  doc["problem"] = "wave_case_study_1";
  doc["mode"] = "ensemble";
  doc["runs"] = 8;
  doc["master_seed"] = 3;
  doc["out_dir"] = tmp.path.string();
  doc["grid"] = {{"n_x", 8}, {"n_t", 12}};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(summary.metrics["runs_feasible"] == 8);
  CHECK(summary.metrics["peak_variance"].get<double>() > 0.0);
  CHECK(summary.metrics["oracle_agreement"].is_number());

  const std::vector<std::string> expected{
      "ensemble.csv", "mean.csv",          "variance.csv",
      "error_of_mean.csv", "mean.ppm",     "variance.ppm",
      "error_of_mean.ppm", "low_variance.csv", "oracle_classes.csv"};
  for (const std::string& name : expected) {
    INFO("file ", name);
    CHECK(std::find(summary.files.begin(), summary.files.end(), name) !=
          summary.files.end());
    CHECK(std::filesystem::file_size(tmp.file(name)) > 0);
  }

  // Grid CSVs carry one row per node plus a header.
  CHECK(line_count(slurp(tmp.file("mean.csv"))) == 8 * 12 + 1);
  const std::string header =
      slurp(tmp.file("mean.csv")).substr(0, slurp(tmp.file("mean.csv")).find('\n'));
  CHECK(header == "t_index,x_index,value");
}

TEST_CASE("repeated runs produce byte-identical outputs") {
  TempDir tmp("tmp_test_cli_repeat");
  json doc;
  doc["problem"] = "wave_case_study_1";
  doc["mode"] = "ensemble";
  doc["runs"] = 5;
  doc["master_seed"] = 11;
  doc["out_dir"] = tmp.path.string();
  doc["grid"] = {{"n_x", 8}, {"n_t", 10}};

  run_experiment(config_from_json(doc));
  const std::string ensemble1 = slurp(tmp.file("ensemble.csv"));
  const std::string mean_ppm1 = slurp(tmp.file("mean.ppm"));
  const std::string summary1 = slurp(tmp.file("summary.json"));

  run_experiment(config_from_json(doc));
  CHECK(slurp(tmp.file("ensemble.csv")) == ensemble1);
  CHECK(slurp(tmp.file("mean.ppm")) == mean_ppm1);
  CHECK(slurp(tmp.file("summary.json")) == summary1);
}

TEST_CASE("ode ensemble experiment skips the grid artifacts") {
  TempDir tmp("tmp_test_cli_ode");
  json doc;
  doc["problem"] = "harmonic_oscillator";
  doc["mode"] = "ensemble";
  doc["runs"] = 6;
  doc["out_dir"] = tmp.path.string();
  doc["ode"] = {{"n", 12},
                {"t_max", 1.5},
                {"constraints", {{{"kind", "value"}, {"t", 0.0}, {"value", 1.0}}}}};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(std::find(summary.files.begin(), summary.files.end(), "mean.csv") !=
        summary.files.end());
  for (const std::string& name : summary.files)
    CHECK(name.find(".ppm") == std::string::npos);
}

TEST_CASE("scaling experiment writes one csv per center") {
  TempDir tmp("tmp_test_cli_scaling");
  json doc;
  doc["problem"] = "wave_case_study_1";
  doc["mode"] = "perimeter_scaling";
  doc["runs"] = 25;
  doc["master_seed"] = 23;
  doc["out_dir"] = tmp.path.string();
  doc["grid"] = {{"n_x", 12}, {"n_t", 18}};
  doc["scaling"] = {{"centers", {{{"label", "far"}, {"x", 8.0}, {"t", 13.0}}}},
                    {"radii", {1.5, 2.5, 3.5}}};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(summary.files == std::vector<std::string>{"scaling_far.csv"});
  CHECK(summary.metrics["slopes"]["far"].get<double>() > 0.0);
  CHECK(line_count(slurp(tmp.file("scaling_far.csv"))) == 4);

  // A scaling run on a grid-free problem is a config error.
  json bad = drop_search_doc(tmp.path.string());
  bad["mode"] = "perimeter_scaling";
  bad.erase("drop_search");
  CHECK_THROWS_AS(run_experiment(config_from_json(bad)), ConfigError);
}

TEST_CASE("kaczmarz experiment records a trace for a single run") {
  TempDir tmp("tmp_test_cli_rk1");
  json doc;
  doc["problem"] = "two_line_fixture";
  doc["mode"] = "kaczmarz";
  doc["runs"] = 1;
  doc["master_seed"] = 2;
  doc["out_dir"] = tmp.path.string();
  doc["kaczmarz"] = {{"variant", "quantile_subspace_constrained"},
                     {"q", 1.0 / 3.0},
                     {"max_iters", 4000},
                     {"trace_every", 10}};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(summary.files == std::vector<std::string>{"trace.csv"});
  CHECK(summary.metrics["converged"].is_boolean());
  CHECK(summary.metrics["final_ref_distances"].size() == 2);

  const std::string csv = slurp(tmp.file("trace.csv"));
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "iteration,law_residual,constraint_quantile,constraint_max,"
        "dist_ref_0,dist_ref_1");
  CHECK(line_count(csv) >= 3);
}

TEST_CASE("kaczmarz experiment aggregates repeated runs") {
  TempDir tmp("tmp_test_cli_rkN");
  json doc;
  doc["problem"] = "two_line_fixture";
  doc["mode"] = "kaczmarz";
  doc["runs"] = 5;
  doc["master_seed"] = 7;
  doc["out_dir"] = tmp.path.string();
  doc["ode"] = {{"n", 19}, {"n1", 6}, {"n2", 3}};
  doc["kaczmarz"] = {{"variant", "quantile_subspace_constrained"},
                     {"q", 1.0 / 3.0},
                     {"max_iters", 3000}};

  const RunSummary summary = run_experiment(config_from_json(doc));
  CHECK(summary.files == std::vector<std::string>{"kaczmarz_runs.csv"});
  CHECK(summary.metrics["refs_hit"].size() == 2);
  CHECK(summary.metrics["converged_runs"].get<int>() >= 0);

  const std::string csv = slurp(tmp.file("kaczmarz_runs.csv"));
  CHECK(line_count(csv) == 6);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "run,seed,converged,iterations,max_law_residual,"
        "final_constraint_quantile,nearest_ref,nearest_ref_distance");
}

// ---------------------------------------------------------------------------
// The installed binary, end to end

#ifdef WELLPROBE_CLI_PATH

namespace {

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(WELLPROBE_CLI_PATH) + " " + args + " > cli_stdout.txt 2>&1";
  const int rc = std::system(cmd.c_str());
#ifdef __unix__
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
#else
  return rc;
#endif
}

}  // namespace

TEST_CASE("cli: a subcommand is required") {
  CHECK(run_cli("") != 0);
  CHECK(run_cli("frobnicate") != 0);
}

TEST_CASE("cli: maxfs runs the drop search from a config file") {
  TempDir tmp("tmp_test_cli_bin_drop");
  write_text(tmp.file("cfg.json"), drop_search_doc(tmp.path.string()).dump());
  CHECK(run_cli("maxfs --config " + tmp.file("cfg.json")) == 0);
  const json doc = json::parse(slurp(tmp.file("summary.json")));
  CHECK(doc["metrics"]["n_candidates"] == 3);

  // Mode flag flips the same config to the weight sweep.
  CHECK(run_cli("maxfs --mode weight_sweep --config " + tmp.file("cfg.json")) == 0);
  CHECK(std::filesystem::file_size(tmp.file("weight_sweep.csv")) > 0);

  // The maxfs subcommand refuses non-maxfs modes.
  CHECK(run_cli("maxfs --mode ensemble --config " + tmp.file("cfg.json")) == 2);
}

TEST_CASE("cli: config errors exit with status 2") {
  TempDir tmp("tmp_test_cli_bin_err");
  write_text(tmp.file("bad.json"), R"({"bogus": 1})");
  CHECK(run_cli("probe --config " + tmp.file("bad.json")) == 2);
  write_text(tmp.file("broken.json"), "{");
  CHECK(run_cli("probe --config " + tmp.file("broken.json")) == 2);
  // A missing config file is caught by the flag validator.
  CHECK(run_cli("probe --config " + tmp.file("absent.json")) != 0);
}

TEST_CASE("cli: probe honours flag overrides") {
  TempDir tmp("tmp_test_cli_bin_probe");
  json doc;
  doc["problem"] = "line_ode";
  doc["runs"] = 50;
  doc["ode"] = {{"n", 6},
                {"constraints", {{{"kind", "value"}, {"t", 0.0}, {"value", 0.0}}}}};
  write_text(tmp.file("cfg.json"), doc.dump());

  CHECK(run_cli("probe --config " + tmp.file("cfg.json") + " --runs 5 --seed 9 --out " +
                tmp.path.string()) == 0);
  const json summary = json::parse(slurp(tmp.file("summary.json")));
  CHECK(summary["config"]["runs"] == 5);
  CHECK(summary["config"]["master_seed"] == 9);
  CHECK(summary["config"]["mode"] == "ensemble");
  CHECK(summary["metrics"]["runs_feasible"] == 5);
}

#endif  // WELLPROBE_CLI_PATH
