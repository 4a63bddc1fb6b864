#include "wellprobe/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "wellprobe/detail/fnv.hpp"
#include "wellprobe/heatmap.hpp"
#include "wellprobe/rng.hpp"

namespace wellprobe {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum <-> name tables

struct NameEntry {
  const char* name;
  int value;
};

constexpr NameEntry kProblemNames[] = {
    {"wave_well_posed", 0},    {"wave_case_study_1", 1}, {"wave_case_study_2", 2},
    {"line_ode", 3},           {"harmonic_oscillator", 4},
    {"two_line_fixture", 5},
};

constexpr NameEntry kModeNames[] = {
    {"ensemble", 0},     {"perimeter_scaling", 1}, {"drop_search", 2},
    {"weight_sweep", 3}, {"kaczmarz", 4},
};

constexpr NameEntry kKindNames[] = {
    {"law", 0}, {"initial_condition", 1}, {"boundary_condition", 2},
    {"data_constraint", 3},
};

constexpr NameEntry kConstraintKindNames[] = {{"value", 0}, {"first_derivative", 1}};

constexpr NameEntry kVariantNames[] = {
    {"plain", 0}, {"quantile", 1}, {"quantile_subspace_constrained", 2}};

template <std::size_t N>
int name_to_value(const NameEntry (&table)[N], const std::string& name,
                  const std::string& path) {
  std::string valid;
  for (const NameEntry& e : table) {
    if (name == e.name) return e.value;
    if (!valid.empty()) valid += ", ";
    valid += e.name;
  }
  throw ConfigError("config: '" + path + "' must be one of {" + valid + "}, got '" +
                    name + "'");
}

template <std::size_t N>
const char* value_to_name(const NameEntry (&table)[N], int value) {
  for (const NameEntry& e : table)
    if (e.value == value) return e.name;
  return "unknown";
}

// ---------------------------------------------------------------------------
// Strict JSON access

[[noreturn]] void bad_field(const std::string& path, const char* what) {
  throw ConfigError("config: '" + path + "' " + what);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void check_keys(const json& j, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("config: unknown key '" + join(path, it.key()) + "'");
  }
}

const json* find(const json& j, const char* key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double get_double(const json& j, const std::string& path, const char* key,
                  double dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_number()) bad_field(join(path, key), "must be a number");
  return v->get<double>();
}

int get_int(const json& j, const std::string& path, const char* key, int dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) bad_field(join(path, key), "must be an integer");
  return v->get<int>();
}

long get_long(const json& j, const std::string& path, const char* key, long dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) bad_field(join(path, key), "must be an integer");
  return v->get<long>();
}

std::uint64_t get_u64(const json& j, const std::string& path, const char* key,
                      std::uint64_t dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (v->is_number_unsigned()) return v->get<std::uint64_t>();
  if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v->get<std::int64_t>());
  bad_field(join(path, key), "must be a non-negative integer");
}

std::string get_string(const json& j, const std::string& path, const char* key,
                       const std::string& dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_string()) bad_field(join(path, key), "must be a string");
  return v->get<std::string>();
}

std::vector<double> get_double_array(const json& j, const std::string& path,
                                     const char* key, std::vector<double> dflt) {
  const json* v = find(j, key);
  if (!v) return dflt;
  if (!v->is_array()) bad_field(join(path, key), "must be an array of numbers");
  std::vector<double> out;
  for (const json& e : *v) {
    if (!e.is_number()) bad_field(join(path, key), "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Section parsers

GridSpec parse_grid(const json& j) {
  check_keys(j, "grid", {"n_x", "n_t", "x_min", "x_max", "t_max", "c"});
  GridSpec g;
  g.n_x = get_int(j, "grid", "n_x", g.n_x);
  g.n_t = get_int(j, "grid", "n_t", g.n_t);
  g.x_min = get_double(j, "grid", "x_min", g.x_min);
  g.x_max = get_double(j, "grid", "x_max", g.x_max);
  g.t_max = get_double(j, "grid", "t_max", g.t_max);
  g.c = get_double(j, "grid", "c", g.c);
  return g;
}

ParallelogramSpec parse_data(const json& j) {
  check_keys(j, "data", {"t_lo", "t_hi", "x_anchor", "slant", "width"});
  ParallelogramSpec p;
  p.t_lo = get_int(j, "data", "t_lo", p.t_lo);
  p.t_hi = get_int(j, "data", "t_hi", p.t_hi);
  p.x_anchor = get_int(j, "data", "x_anchor", p.x_anchor);
  p.slant = get_int(j, "data", "slant", p.slant);
  p.width = get_int(j, "data", "width", p.width);
  return p;
}

ReflectorSpec parse_reflector(const json& j) {
  check_keys(j, "reflector", {"t_begin", "t_end"});
  ReflectorSpec r;
  r.t_begin = get_int(j, "reflector", "t_begin", r.t_begin);
  r.t_end = get_int(j, "reflector", "t_end", r.t_end);
  return r;
}

OdeParams parse_ode(const json& j) {
  check_keys(j, "ode", {"n", "t_max", "omega", "constraints", "n1", "n2"});
  OdeParams p;
  p.n = get_int(j, "ode", "n", p.n);
  p.t_max = get_double(j, "ode", "t_max", p.t_max);
  p.omega = get_double(j, "ode", "omega", p.omega);
  p.n1 = get_int(j, "ode", "n1", p.n1);
  p.n2 = get_int(j, "ode", "n2", p.n2);
  if (const json* cs = find(j, "constraints")) {
    if (!cs->is_array()) bad_field("ode.constraints", "must be an array");
    int k = 0;
    for (const json& c : *cs) {
      const std::string path = "ode.constraints[" + std::to_string(k++) + "]";
      if (!c.is_object()) bad_field(path, "must be an object");
      check_keys(c, path, {"kind", "t", "value"});
      ConstraintPoint pt;
      pt.kind = static_cast<ConstraintKind>(name_to_value(
          kConstraintKindNames, get_string(c, path, "kind", "value"), path + ".kind"));
      pt.t = get_double(c, path, "t", 0.0);
      pt.value = get_double(c, path, "value", 0.0);
      p.constraints.push_back(pt);
    }
  }
  return p;
}

SolverOptions parse_solver(const json& j) {
  check_keys(j, "solver",
             {"sigma", "max_iters", "grad_tol", "res_atol", "tol_feasible",
              "rank_tol"});
  SolverOptions s;
  s.sigma = get_double(j, "solver", "sigma", s.sigma);
  s.max_iters = get_long(j, "solver", "max_iters", s.max_iters);
  s.grad_tol = get_double(j, "solver", "grad_tol", s.grad_tol);
  s.res_atol = get_double(j, "solver", "res_atol", s.res_atol);
  s.tol_feasible = get_double(j, "solver", "tol_feasible", s.tol_feasible);
  s.rank_tol = get_double(j, "solver", "rank_tol", s.rank_tol);
  return s;
}

ScalingParams parse_scaling(const json& j) {
  check_keys(j, "scaling", {"centers", "radii", "tau_rel", "noise_floor_rel"});
  ScalingParams p;
  p.radii = get_double_array(j, "scaling", "radii", p.radii);
  p.tau_rel = get_double(j, "scaling", "tau_rel", p.tau_rel);
  p.noise_floor_rel = get_double(j, "scaling", "noise_floor_rel", p.noise_floor_rel);
  if (const json* cs = find(j, "centers")) {
    if (!cs->is_array()) bad_field("scaling.centers", "must be an array");
    int k = 0;
    for (const json& c : *cs) {
      const std::string path = "scaling.centers[" + std::to_string(k) + "]";
      if (!c.is_object()) bad_field(path, "must be an object");
      check_keys(c, path, {"label", "x", "t"});
      ScalingCenter center;
      center.label = get_string(c, path, "label", "center_" + std::to_string(k));
      center.x = get_double(c, path, "x", 0.0);
      center.t = get_double(c, path, "t", 0.0);
      p.centers.push_back(center);
      ++k;
    }
  }
  return p;
}

DropSearchParams parse_drop_search(const json& j) {
  check_keys(j, "drop_search", {"max_drop", "budget", "droppable"});
  DropSearchParams p;
  p.max_drop = get_int(j, "drop_search", "max_drop", p.max_drop);
  p.budget = get_long(j, "drop_search", "budget", p.budget);
  if (const json* ks = find(j, "droppable")) {
    if (!ks->is_array()) bad_field("drop_search.droppable", "must be an array");
    p.droppable.clear();
    for (const json& k : *ks) {
      if (!k.is_string()) bad_field("drop_search.droppable", "must hold strings");
      p.droppable.push_back(static_cast<RowKind>(name_to_value(
          kKindNames, k.get<std::string>(), "drop_search.droppable")));
    }
  }
  return p;
}

WeightSweepParams parse_weight_sweep(const json& j) {
  check_keys(j, "weight_sweep", {"weights"});
  WeightSweepParams p;
  p.weights = get_double_array(j, "weight_sweep", "weights", p.weights);
  return p;
}

KaczmarzParams parse_kaczmarz(const json& j) {
  check_keys(j, "kaczmarz",
             {"variant", "q", "max_iters", "sample_size", "sigma", "tol",
              "trace_every"});
  KaczmarzParams p;
  p.variant = static_cast<KaczmarzVariant>(
      name_to_value(kVariantNames, get_string(j, "kaczmarz", "variant", "plain"),
                    "kaczmarz.variant"));
  p.q = get_double(j, "kaczmarz", "q", p.q);
  p.max_iters = get_long(j, "kaczmarz", "max_iters", p.max_iters);
  p.sample_size = get_int(j, "kaczmarz", "sample_size", p.sample_size);
  p.sigma = get_double(j, "kaczmarz", "sigma", p.sigma);
  p.tol = get_double(j, "kaczmarz", "tol", p.tol);
  p.trace_every = get_long(j, "kaczmarz", "trace_every", p.trace_every);
  return p;
}

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvFile {
 public:
  CsvFile(const std::string& path, const std::string& header) : path_(path) {
    out_.open(path, std::ios::binary);
    if (!out_) throw Error("run_experiment: cannot open " + path);
    out_ << header << '\n';
  }

  void line(const std::string& s) { out_ << s << '\n'; }

  void close() {
    out_.close();
    if (out_.fail()) throw Error("run_experiment: short write to " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

class OutputDir {
 public:
  OutputDir(const std::string& dir, std::vector<std::string>& files)
      : dir_(dir), files_(files) {}

  std::string path(const std::string& name) const { return dir_ + "/" + name; }

  void record(const std::string& name) { files_.push_back(name); }

 private:
  std::string dir_;
  std::vector<std::string>& files_;
};

/// Grid quantities go out grid-major: one row per node, time outermost.
void write_grid_csv(OutputDir& out, const std::string& name, const GridShape& shape,
                    const Eigen::VectorXd& values) {
  CsvFile csv(out.path(name), "t_index,x_index,value");
  for (int t = 0; t < shape.n_t; ++t)
    for (int i = 0; i < shape.n_x; ++i)
      csv.line(std::to_string(t) + "," + std::to_string(i) + "," +
               fmt(values[shape.node(i, t)]));
  csv.close();
  out.record(name);
}

std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char ch : label)
    out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_')
               ? ch
               : '_';
  return out.empty() ? std::string("center") : out;
}

GridShape ode_shape(int node_count) { return GridShape{1, node_count}; }

}  // namespace

// ---------------------------------------------------------------------------
// Public enum names

const char* problem_name(Problem problem) {
  return value_to_name(kProblemNames, static_cast<int>(problem));
}

const char* run_mode_name(RunMode mode) {
  return value_to_name(kModeNames, static_cast<int>(mode));
}

Problem problem_from_name(const std::string& name) {
  return static_cast<Problem>(name_to_value(kProblemNames, name, "problem"));
}

RunMode run_mode_from_name(const std::string& name) {
  return static_cast<RunMode>(name_to_value(kModeNames, name, "mode"));
}

// ---------------------------------------------------------------------------
// Config (de)serialization

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(j, "",
             {"problem", "mode", "runs", "master_seed", "threads", "out_dir", "grid",
              "data", "reflector", "ode", "solver", "scaling", "drop_search",
              "weight_sweep", "kaczmarz"});

  ExperimentConfig c;
  c.problem = problem_from_name(
      get_string(j, "", "problem", problem_name(c.problem)));
  c.mode = run_mode_from_name(get_string(j, "", "mode", run_mode_name(c.mode)));
  c.runs = get_int(j, "", "runs", c.runs);
  c.master_seed = get_u64(j, "", "master_seed", c.master_seed);
  c.threads = get_int(j, "", "threads", c.threads);
  c.out_dir = get_string(j, "", "out_dir", c.out_dir);
  if (c.runs < 1) bad_field("runs", "must be at least 1");

  if (const json* g = find(j, "grid")) {
    if (!g->is_object()) bad_field("grid", "must be an object");
    c.grid = parse_grid(*g);
  }
  if (const json* d = find(j, "data")) {
    if (!d->is_object()) bad_field("data", "must be an object");
    c.data = parse_data(*d);
  }
  if (const json* r = find(j, "reflector")) {
    if (!r->is_object()) bad_field("reflector", "must be an object");
    c.reflector = parse_reflector(*r);
  }
  if (const json* o = find(j, "ode")) {
    if (!o->is_object()) bad_field("ode", "must be an object");
    c.ode = parse_ode(*o);
  }
  if (const json* s = find(j, "solver")) {
    if (!s->is_object()) bad_field("solver", "must be an object");
    c.solver = parse_solver(*s);
  }
  if (const json* s = find(j, "scaling")) {
    if (!s->is_object()) bad_field("scaling", "must be an object");
    c.scaling = parse_scaling(*s);
  }
  if (const json* d = find(j, "drop_search")) {
    if (!d->is_object()) bad_field("drop_search", "must be an object");
    c.drop_search = parse_drop_search(*d);
  }
  if (const json* w = find(j, "weight_sweep")) {
    if (!w->is_object()) bad_field("weight_sweep", "must be an object");
    c.weight_sweep = parse_weight_sweep(*w);
  }
  if (const json* k = find(j, "kaczmarz")) {
    if (!k->is_object()) bad_field("kaczmarz", "must be an object");
    c.kaczmarz = parse_kaczmarz(*k);
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = problem_name(c.problem);
  j["mode"] = run_mode_name(c.mode);
  j["runs"] = c.runs;
  j["master_seed"] = c.master_seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;

  j["grid"] = {{"n_x", c.grid.n_x},     {"n_t", c.grid.n_t}, {"x_min", c.grid.x_min},
               {"x_max", c.grid.x_max}, {"t_max", c.grid.t_max}, {"c", c.grid.c}};
  if (c.data)
    j["data"] = {{"t_lo", c.data->t_lo},
                 {"t_hi", c.data->t_hi},
                 {"x_anchor", c.data->x_anchor},
                 {"slant", c.data->slant},
                 {"width", c.data->width}};
  if (c.reflector)
    j["reflector"] = {{"t_begin", c.reflector->t_begin},
                      {"t_end", c.reflector->t_end}};

  json cs = json::array();
  for (const ConstraintPoint& p : c.ode.constraints)
    cs.push_back({{"kind", value_to_name(kConstraintKindNames,
                                         static_cast<int>(p.kind))},
                  {"t", p.t},
                  {"value", p.value}});
  j["ode"] = {{"n", c.ode.n},   {"t_max", c.ode.t_max}, {"omega", c.ode.omega},
              {"constraints", cs}, {"n1", c.ode.n1},    {"n2", c.ode.n2}};

  j["solver"] = {{"sigma", c.solver.sigma},
                 {"max_iters", c.solver.max_iters},
                 {"grad_tol", c.solver.grad_tol},
                 {"res_atol", c.solver.res_atol},
                 {"tol_feasible", c.solver.tol_feasible},
                 {"rank_tol", c.solver.rank_tol}};

  json centers = json::array();
  for (const ScalingCenter& sc : c.scaling.centers)
    centers.push_back({{"label", sc.label}, {"x", sc.x}, {"t", sc.t}});
  j["scaling"] = {{"centers", centers},
                  {"radii", c.scaling.radii},
                  {"tau_rel", c.scaling.tau_rel},
                  {"noise_floor_rel", c.scaling.noise_floor_rel}};

  json droppable = json::array();
  for (RowKind k : c.drop_search.droppable) droppable.push_back(row_kind_name(k));
  j["drop_search"] = {{"max_drop", c.drop_search.max_drop},
                      {"budget", c.drop_search.budget},
                      {"droppable", droppable}};

  j["weight_sweep"] = {{"weights", c.weight_sweep.weights}};

  j["kaczmarz"] = {{"variant", kaczmarz_variant_name(c.kaczmarz.variant)},
                   {"q", c.kaczmarz.q},
                   {"max_iters", c.kaczmarz.max_iters},
                   {"sample_size", c.kaczmarz.sample_size},
                   {"sigma", c.kaczmarz.sigma},
                   {"tol", c.kaczmarz.tol},
                   {"trace_every", c.kaczmarz.trace_every}};
  return j;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& config) {
  const std::string dump = config_to_json(config).dump();
  std::uint64_t h = detail::kFnvOffset;
  detail::fnv_bytes(h, dump.data(), dump.size());
  return h;
}

// ---------------------------------------------------------------------------
// Problem assembly

namespace {

GridSpec effective_grid(const ExperimentConfig& config) {
  GridSpec g = config.grid;
  if (g.t_max <= 0) g.t_max = (g.n_t - 1) * g.dx() / g.c;
  return g;
}

}  // namespace

ProblemInstance assemble_problem(const ExperimentConfig& config) {
  switch (config.problem) {
    case Problem::WaveWellPosed: {
      const GridSpec g = effective_grid(config);
      return {assemble_wave_wellposed(g), g, wave_reference_solution(g),
              {},                         std::nullopt, std::nullopt};
    }
    case Problem::WaveCaseStudy1: {
      const GridSpec g = effective_grid(config);
      const ParallelogramSpec d =
          config.data ? *config.data : ParallelogramSpec::default_for(g);
      return {assemble_wave_case_study(g, d, std::nullopt),
              g,
              wave_reference_solution(g),
              {},
              d,
              std::nullopt};
    }
    case Problem::WaveCaseStudy2: {
      const GridSpec g = effective_grid(config);
      const ParallelogramSpec d =
          config.data ? *config.data : ParallelogramSpec::default_for(g);
      const ReflectorSpec r =
          config.reflector ? *config.reflector : ReflectorSpec::default_for(g);
      return {assemble_wave_case_study(g, d, r), g, wave_reference_solution(g),
              {},                                d, r};
    }
    case Problem::LineODE:
      return {assemble_line_ode(config.ode.n, config.ode.constraints),
              std::nullopt,
              std::nullopt,
              {},
              std::nullopt,
              std::nullopt};
    case Problem::HarmonicOscillator:
      return {assemble_harmonic_oscillator(config.ode.n, config.ode.t_max,
                                           config.ode.constraints, config.ode.omega),
              std::nullopt,
              std::nullopt,
              {},
              std::nullopt,
              std::nullopt};
    case Problem::TwoLineFixture: {
      TwoLineFixture fixture =
          make_two_line_fixture(config.ode.n, config.ode.n1, config.ode.n2);
      return {std::move(fixture.system),
              std::nullopt,
              std::nullopt,
              {std::move(fixture.line1), std::move(fixture.line2)},
              std::nullopt,
              std::nullopt};
    }
  }
  throw ConfigError("config: unhandled problem");
}

// ---------------------------------------------------------------------------
// Mode runners

namespace {

void run_ensemble_mode(const ExperimentConfig& config, const ProblemInstance& inst,
                       OutputDir& out, json& metrics) {
  EnsembleOptions eopts;
  eopts.runs = config.runs;
  eopts.master_seed = config.master_seed;
  eopts.solver = config.solver;
  eopts.threads = config.threads;

  const SolutionEnsemble ensemble = run_ensemble(inst.system, eopts);

  write_ensemble_csv(out.path("ensemble.csv"), ensemble);
  out.record("ensemble.csv");

  int feasible = 0, least_squares = 0, iteration_limit = 0;
  double iterations = 0;
  for (const Solution& run : ensemble.runs) {
    iterations += static_cast<double>(run.iterations);
    switch (run.status) {
      case SolveStatus::Feasible: ++feasible; break;
      case SolveStatus::LeastSquares: ++least_squares; break;
      case SolveStatus::IterationLimit: ++iteration_limit; break;
    }
  }
  metrics["runs_total"] = ensemble.size();
  metrics["runs_feasible"] = feasible;
  metrics["runs_least_squares"] = least_squares;
  metrics["runs_iteration_limit"] = iteration_limit;
  metrics["mean_iterations"] = iterations / std::max(1, ensemble.size());

  StatsReport stats;
  try {
    stats = compute_stats(ensemble, false, inst.reference);
  } catch (const InvalidArgument& e) {
    metrics["stats_error"] = e.what();
    return;
  }
  metrics["included_runs"] = stats.included_runs;
  metrics["peak_variance"] = stats.variance.maxCoeff();

  const std::vector<std::uint8_t> mask = low_variance_mask(stats.variance);
  long low_var_nodes = 0;
  for (std::uint8_t m : mask) low_var_nodes += m;
  metrics["low_variance_nodes"] = low_var_nodes;
  metrics["low_variance_fraction"] =
      static_cast<double>(low_var_nodes) / static_cast<double>(mask.size());
  if (stats.error_of_mean)
    metrics["max_abs_error_of_mean"] = stats.error_of_mean->cwiseAbs().maxCoeff();

  const GridShape shape =
      inst.grid ? inst.grid->shape() : ode_shape(static_cast<int>(stats.mean.size()));
  write_grid_csv(out, "mean.csv", shape, stats.mean);
  write_grid_csv(out, "variance.csv", shape, stats.variance);
  if (stats.error_of_mean)
    write_grid_csv(out, "error_of_mean.csv", shape, *stats.error_of_mean);

  if (inst.grid) {
    HeatmapOptions linear;
    HeatmapOptions log;
    log.scale = HeatmapScale::Log;
    write_heatmap_ppm(out.path("mean.ppm"),
                      field_from_values(shape, stats.mean), linear);
    out.record("mean.ppm");
    write_heatmap_ppm(out.path("variance.ppm"),
                      field_from_values(shape, stats.variance), log);
    out.record("variance.ppm");
    if (stats.error_of_mean) {
      write_heatmap_ppm(out.path("error_of_mean.ppm"),
                        field_from_values(shape, stats.error_of_mean->cwiseAbs()),
                        log);
      out.record("error_of_mean.ppm");
    }

    Eigen::VectorXd mask_values(stats.variance.size());
    for (int i = 0; i < mask_values.size(); ++i) mask_values[i] = mask[i];
    write_grid_csv(out, "low_variance.csv", shape, mask_values);

    if (inst.data) {
      try {
        const std::vector<NodeClass> classes = determined_region_oracle(
            *inst.grid, *inst.data, inst.reflector);
        Eigen::VectorXd class_values(static_cast<long>(classes.size()));
        long determined = 0, one_char = 0;
        long agree = 0;
        for (std::size_t i = 0; i < classes.size(); ++i) {
          class_values[static_cast<long>(i)] = static_cast<double>(classes[i]);
          determined += classes[i] == NodeClass::Determined;
          one_char += classes[i] == NodeClass::OneCharacteristic;
          const bool empirically_pinned = mask[i] != 0;
          agree += (classes[i] == NodeClass::Determined) == empirically_pinned;
        }
        write_grid_csv(out, "oracle_classes.csv", shape, class_values);
        metrics["oracle_determined_nodes"] = determined;
        metrics["oracle_one_characteristic_nodes"] = one_char;
        metrics["oracle_agreement"] =
            static_cast<double>(agree) / static_cast<double>(classes.size());
      } catch (const UnsupportedConfiguration&) {
        metrics["oracle_agreement"] = nullptr;  // oracle needs Courant number 1
      }
    }
  }
}

void run_scaling_mode(const ExperimentConfig& config, const ProblemInstance& inst,
                      OutputDir& out, json& metrics) {
  if (!inst.grid)
    throw ConfigError("config: perimeter_scaling requires a wave problem");
  if (config.scaling.centers.empty())
    bad_field("scaling.centers", "must list at least one center");

  EnsembleOptions eopts;
  eopts.runs = config.runs;
  eopts.master_seed = config.master_seed;
  eopts.solver = config.solver;
  eopts.threads = config.threads;
  const SolutionEnsemble ensemble = run_ensemble(inst.system, eopts);

  const GridSpec& grid = *inst.grid;
  std::vector<double> radii;
  for (double r : config.scaling.radii) radii.push_back(r * grid.dx());

  json slopes, intercepts;
  std::vector<double> slope_list;
  for (const ScalingCenter& center : config.scaling.centers) {
    const double x = grid.x_min + center.x * grid.dx();
    const double t = center.t * grid.dt();
    const ScalingFit fit =
        perimeter_scaling(grid, ensemble, x, t, radii, config.scaling.tau_rel,
                          config.scaling.noise_floor_rel);

    const std::string name = "scaling_" + sanitize_label(center.label) + ".csv";
    CsvFile csv(out.path(name), "r,perimeter,n_nodes,dimension");
    for (const ScalingSample& s : fit.samples)
      csv.line(fmt(s.r) + "," + fmt(s.perimeter) + "," + std::to_string(s.n_nodes) +
               "," + std::to_string(s.dimension));
    csv.close();
    out.record(name);

    slopes[center.label] = fit.slope;
    intercepts[center.label] = fit.intercept;
    slope_list.push_back(fit.slope);
  }
  metrics["slopes"] = slopes;
  metrics["intercepts"] = intercepts;
  if (slope_list.size() >= 2 && std::abs(slope_list[1]) > 1e-300)
    metrics["slope_ratio_first_over_second"] = slope_list[0] / slope_list[1];
}

void run_drop_search_mode(const ExperimentConfig& config, const ProblemInstance& inst,
                          OutputDir& out, json& metrics) {
  const MaxfsReport report =
      exhaustive_drop_search(inst.system, config.drop_search.max_drop,
                             config.drop_search.droppable, -1.0,
                             config.drop_search.budget);

  CsvFile csv(out.path("candidates.csv"),
              "candidate,dropped_rows,residual_on_kept,satisfied_constraints");
  int idx = 0;
  int max_satisfied = 0;
  for (const DropCandidate& cand : report.candidates) {
    std::string rows;
    for (int r : cand.dropped_rows) {
      if (!rows.empty()) rows += ';';
      rows += std::to_string(r);
    }
    csv.line(std::to_string(idx++) + "," + rows + "," + fmt(cand.residual_on_kept) +
             "," + std::to_string(cand.satisfied_constraints));
    max_satisfied = std::max(max_satisfied, cand.satisfied_constraints);
  }
  csv.close();
  out.record("candidates.csv");

  metrics["n_candidates"] = report.candidates.size();
  metrics["subsets_examined"] = report.subsets_examined;
  metrics["tol"] = report.tol;
  metrics["max_satisfied_constraints"] = max_satisfied;
}

void run_weight_sweep_mode(const ExperimentConfig& config,
                           const ProblemInstance& inst, OutputDir& out,
                           json& metrics) {
  if (config.weight_sweep.weights.empty())
    bad_field("weight_sweep.weights", "must list at least one weight");

  CsvFile csv(out.path("weight_sweep.csv"),
              "weight,law_residual,constraint_residual,total_residual");
  std::vector<double> law, constraint;
  for (double w : config.weight_sweep.weights) {
    const WeightedSolveResult res = weighted_solve(inst.system, w, config.solver);
    law.push_back(res.breakdown.law());
    constraint.push_back(res.breakdown.constraints());
    csv.line(fmt(w) + "," + fmt(res.breakdown.law()) + "," +
             fmt(res.breakdown.constraints()) + "," + fmt(res.breakdown.total));
  }
  csv.close();
  out.record("weight_sweep.csv");

  bool c_noninc = true, l_nondec = true, c_strict = false, l_strict = false;
  for (std::size_t k = 1; k < law.size(); ++k) {
    c_noninc = c_noninc && constraint[k] <= constraint[k - 1] + 1e-12;
    l_nondec = l_nondec && law[k] >= law[k - 1] - 1e-12;
    c_strict = c_strict || constraint[k] < constraint[k - 1] - 1e-12;
    l_strict = l_strict || law[k] > law[k - 1] + 1e-12;
  }
  metrics["constraint_nonincreasing"] = c_noninc;
  metrics["law_nondecreasing"] = l_nondec;
  metrics["constraint_strictly_decreased"] = c_strict;
  metrics["law_strictly_increased"] = l_strict;
}

KaczmarzConfig kaczmarz_config_for(const ExperimentConfig& config,
                                   std::uint64_t seed) {
  KaczmarzConfig kc;
  kc.variant = config.kaczmarz.variant;
  kc.max_iters = config.kaczmarz.max_iters;
  kc.q = config.kaczmarz.q;
  kc.sample_size = config.kaczmarz.sample_size;
  kc.seed = seed;
  kc.sigma = config.kaczmarz.sigma;
  kc.tol = config.kaczmarz.tol;
  kc.trace_every = config.kaczmarz.trace_every;
  return kc;
}

void run_kaczmarz_mode(const ExperimentConfig& config, const ProblemInstance& inst,
                       OutputDir& out, json& metrics) {
  metrics["variant"] = kaczmarz_variant_name(config.kaczmarz.variant);

  if (config.runs == 1) {
    const KaczmarzResult res = run_kaczmarz(
        inst.system, kaczmarz_config_for(config, config.master_seed), inst.line_refs);

    std::string header = "iteration,law_residual,constraint_quantile,constraint_max";
    for (std::size_t k = 0; k < inst.line_refs.size(); ++k)
      header += ",dist_ref_" + std::to_string(k);
    CsvFile csv(out.path("trace.csv"), header);
    for (const KaczmarzTraceRow& row : res.trace) {
      std::string line = std::to_string(row.iteration) + "," +
                         fmt(row.law_residual) + "," + fmt(row.constraint_quantile) +
                         "," + fmt(row.constraint_max);
      for (double d : row.ref_distances) line += "," + fmt(d);
      csv.line(line);
    }
    csv.close();
    out.record("trace.csv");

    metrics["converged"] = res.converged;
    metrics["iterations"] = res.solution.iterations;
    metrics["final_residual"] = res.solution.residual_norm;
    metrics["skipped_rows"] = res.skipped_rows;
    metrics["status"] = solve_status_name(res.solution.status);
    if (!res.trace.empty() && !res.trace.back().ref_distances.empty())
      metrics["final_ref_distances"] = res.trace.back().ref_distances;
    return;
  }

  std::string header =
      "run,seed,converged,iterations,max_law_residual,final_constraint_quantile";
  if (!inst.line_refs.empty()) header += ",nearest_ref,nearest_ref_distance";
  CsvFile csv(out.path("kaczmarz_runs.csv"), header);

  int converged_runs = 0;
  long skipped = 0;
  std::vector<long> refs_hit(inst.line_refs.size(), 0);
  for (int k = 0; k < config.runs; ++k) {
    const std::uint64_t seed = child_seed(config.master_seed, k);
    const KaczmarzResult res =
        run_kaczmarz(inst.system, kaczmarz_config_for(config, seed), inst.line_refs);
    converged_runs += res.converged;
    skipped += res.skipped_rows;

    double max_law = 0.0;
    for (const KaczmarzTraceRow& row : res.trace)
      max_law = std::max(max_law, row.law_residual);
    std::string line = std::to_string(k) + "," + std::to_string(seed) + "," +
                       std::to_string(res.converged ? 1 : 0) + "," +
                       std::to_string(res.solution.iterations) + "," + fmt(max_law) +
                       "," + fmt(res.trace.back().constraint_quantile);
    if (!inst.line_refs.empty()) {
      const std::vector<double>& dists = res.trace.back().ref_distances;
      const std::size_t nearest =
          std::min_element(dists.begin(), dists.end()) - dists.begin();
      line += "," + std::to_string(nearest) + "," + fmt(dists[nearest]);
      if (res.converged && dists[nearest] <= 1e-6) ++refs_hit[nearest];
    }
    csv.line(line);
  }
  csv.close();
  out.record("kaczmarz_runs.csv");

  metrics["converged_runs"] = converged_runs;
  metrics["convergence_fraction"] =
      static_cast<double>(converged_runs) / config.runs;
  metrics["total_skipped_rows"] = skipped;
  if (!inst.line_refs.empty()) metrics["refs_hit"] = refs_hit;
}

}  // namespace

// ---------------------------------------------------------------------------

RunSummary run_experiment(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.out_dir);

  const ProblemInstance inst = assemble_problem(config);

  RunSummary summary;
  summary.out_dir = config.out_dir;
  summary.config_hash = config_hash(config);
  summary.metrics["n_rows"] = inst.system.n_rows();
  summary.metrics["n_cols"] = inst.system.n_cols();

  OutputDir out(config.out_dir, summary.files);
  switch (config.mode) {
    case RunMode::Ensemble:
      run_ensemble_mode(config, inst, out, summary.metrics);
      break;
    case RunMode::PerimeterScaling:
      run_scaling_mode(config, inst, out, summary.metrics);
      break;
    case RunMode::DropSearch:
      run_drop_search_mode(config, inst, out, summary.metrics);
      break;
    case RunMode::WeightSweep:
      run_weight_sweep_mode(config, inst, out, summary.metrics);
      break;
    case RunMode::Kaczmarz:
      run_kaczmarz_mode(config, inst, out, summary.metrics);
      break;
  }

  // Every referenced file must exist and be non-empty before we publish the
  // summary that points at it.
  for (const std::string& name : summary.files) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(out.path(name), ec);
    if (ec || size == 0)
      throw Error("run_experiment: emitted file missing or empty: " + name);
  }

  char hash_hex[19];
  std::snprintf(hash_hex, sizeof(hash_hex), "0x%016llx",
                static_cast<unsigned long long>(summary.config_hash));
  json doc;
  doc["schema_version"] = 1;
  doc["config_hash"] = hash_hex;
  doc["config"] = config_to_json(config);
  doc["metrics"] = summary.metrics;
  doc["files"] = summary.files;

  std::ofstream sj(out.path("summary.json"), std::ios::binary);
  if (!sj) throw Error("run_experiment: cannot open summary.json");
  sj << doc.dump(2) << '\n';
  sj.close();
  if (sj.fail()) throw Error("run_experiment: short write to summary.json");

  return summary;
}

}  // namespace wellprobe
