#include "wellprobe/ensemble.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <thread>

#include "wellprobe/detail/fnv.hpp"
#include "wellprobe/rng.hpp"

namespace wellprobe {

namespace {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("WELLPROBE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

std::uint64_t options_digest(const EnsembleOptions& opts) {
  std::uint64_t h = detail::kFnvOffset;
  detail::fnv_value(h, opts.runs);
  detail::fnv_value(h, opts.master_seed);
  detail::fnv_value(h, opts.solver.sigma);
  detail::fnv_value(h, opts.solver.max_iters);
  detail::fnv_value(h, opts.solver.grad_tol);
  detail::fnv_value(h, opts.solver.res_atol);
  detail::fnv_value(h, opts.solver.tol_feasible);
  detail::fnv_value(h, opts.solver.rank_tol);
  return h;
}

constexpr char kCacheMagic[8] = {'W', 'P', 'E', 'N', 'S', '0', '1', '\0'};

}  // namespace

SolutionEnsemble run_ensemble(const TaggedSystem& system, const EnsembleOptions& opts) {
  if (opts.runs < 1) throw InvalidArgument("run_ensemble: need at least one run");

  SolutionEnsemble out;
  out.n_cols = system.n_cols();
  out.master_seed = opts.master_seed;
  out.system_hash = system.content_hash();
  out.runs.resize(opts.runs);

  const int threads = std::min(resolve_threads(opts.threads), opts.runs);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= opts.runs) return;
      out.runs[k] =
          solve_from_seed(system, child_seed(opts.master_seed, k), opts.solver);
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return out;
}

StatsReport compute_stats(const SolutionEnsemble& ensemble, bool include_nonfeasible,
                          const std::optional<Eigen::VectorXd>& ground_truth) {
  StatsReport report;
  report.total_runs = ensemble.size();
  for (const Solution& s : ensemble.runs)
    if (s.feasible()) ++report.feasible_runs;

  std::vector<const Solution*> included;
  included.reserve(ensemble.runs.size());
  for (const Solution& s : ensemble.runs)
    if (include_nonfeasible || s.feasible()) included.push_back(&s);

  report.included_runs = static_cast<int>(included.size());
  if (report.included_runs < 2)
    throw InvalidArgument(
        "compute_stats: fewer than two included runs, variance unavailable (" +
        std::to_string(report.included_runs) + " of " +
        std::to_string(report.total_runs) + ")");

  const int n = ensemble.n_cols;
  report.mean = Eigen::VectorXd::Zero(n);
  for (const Solution* s : included) report.mean += s->values;
  report.mean /= static_cast<double>(report.included_runs);

  report.variance = Eigen::VectorXd::Zero(n);
  for (const Solution* s : included) {
    const Eigen::VectorXd d = s->values - report.mean;
    report.variance += d.cwiseProduct(d);
  }
  report.variance /= static_cast<double>(report.included_runs);

  if (ground_truth) {
    if (ground_truth->size() != n)
      throw InvalidArgument("compute_stats: ground truth length mismatch");
    report.error_of_mean = report.mean - *ground_truth;
  }
  return report;
}

std::vector<std::uint8_t> low_variance_mask(const Eigen::VectorXd& variance,
                                            double rel_tol) {
  const double cutoff = rel_tol * variance.maxCoeff();
  std::vector<std::uint8_t> mask(variance.size());
  for (int i = 0; i < variance.size(); ++i) mask[i] = variance[i] <= cutoff ? 1 : 0;
  return mask;
}

void write_ensemble_csv(const std::string& path, const SolutionEnsemble& ensemble) {
  std::ofstream out(path);
  if (!out) throw Error("write_ensemble_csv: cannot open " + path);
  for (int j = 0; j < ensemble.n_cols; ++j) {
    if (j) out << ',';
    out << 'v' << j;
  }
  out << '\n';
  char buf[32];
  for (const Solution& s : ensemble.runs) {
    for (int j = 0; j < ensemble.n_cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", s.values[j]);
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw Error("write_ensemble_csv: write failed for " + path);
}

void save_ensemble_cache(const std::string& path, const SolutionEnsemble& ensemble,
                         const EnsembleOptions& opts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_ensemble_cache: cannot open " + path);

  auto put = [&out](const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  };
  put(kCacheMagic, sizeof(kCacheMagic));
  put(&ensemble.system_hash, sizeof(ensemble.system_hash));
  put(&ensemble.master_seed, sizeof(ensemble.master_seed));
  const std::uint64_t digest = options_digest(opts);
  put(&digest, sizeof(digest));
  const std::int32_t m = ensemble.size();
  const std::int32_t n = ensemble.n_cols;
  put(&m, sizeof(m));
  put(&n, sizeof(n));

  for (const Solution& s : ensemble.runs) {
    const std::uint64_t seed = s.seed.value_or(0);
    const std::uint8_t has_seed = s.seed.has_value() ? 1 : 0;
    const std::uint8_t status = static_cast<std::uint8_t>(s.status);
    const std::int64_t iters = s.iterations;
    put(&seed, sizeof(seed));
    put(&has_seed, sizeof(has_seed));
    put(&status, sizeof(status));
    put(&iters, sizeof(iters));
    put(&s.residual_norm, sizeof(s.residual_norm));
    put(s.values.data(), sizeof(double) * ensemble.n_cols);
  }
  if (!out) throw Error("save_ensemble_cache: write failed for " + path);
}

std::optional<SolutionEnsemble> load_ensemble_cache(const std::string& path,
                                                    const TaggedSystem& system,
                                                    const EnsembleOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;

  auto get = [&in](void* p, std::size_t n) -> bool {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<bool>(in);
  };

  char magic[8];
  std::uint64_t system_hash = 0, master_seed = 0, digest = 0;
  std::int32_t m = 0, n = 0;
  if (!get(magic, sizeof(magic)) || std::memcmp(magic, kCacheMagic, 8) != 0)
    return std::nullopt;
  if (!get(&system_hash, 8) || !get(&master_seed, 8) || !get(&digest, 8) ||
      !get(&m, 4) || !get(&n, 4))
    return std::nullopt;

  if (system_hash != system.content_hash() || master_seed != opts.master_seed ||
      digest != options_digest(opts) || m != opts.runs || n != system.n_cols())
    return std::nullopt;

  SolutionEnsemble out;
  out.n_cols = n;
  out.master_seed = master_seed;
  out.system_hash = system_hash;
  out.runs.resize(m);
  for (Solution& s : out.runs) {
    std::uint64_t seed = 0;
    std::uint8_t has_seed = 0, status = 0;
    std::int64_t iters = 0;
    s.values.resize(n);
    if (!get(&seed, 8) || !get(&has_seed, 1) || !get(&status, 1) ||
        !get(&iters, 8) || !get(&s.residual_norm, 8) ||
        !get(s.values.data(), sizeof(double) * n))
      return std::nullopt;
    if (status > 2) return std::nullopt;
    if (has_seed) s.seed = seed;
    s.status = static_cast<SolveStatus>(status);
    s.iterations = iters;
  }
  return out;
}

}  // namespace wellprobe
