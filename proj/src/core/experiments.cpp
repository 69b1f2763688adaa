#include "core/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "core/io.hpp"
#include "core/models.hpp"
#include "core/rng.hpp"
#include "core/solver.hpp"
#include "core/theory.hpp"

namespace lvggm::experiments {

namespace {

using Clock = std::chrono::steady_clock;

// Latent coupling scale for the chain scaling study: 0.6 / sqrt(p) keeps the
// latent block's spectral contribution comparable across p and safely inside
// the assembly's PD margin, so the coupling is never silently capped.
constexpr double kChainCouplingCoef = 0.6;

std::int64_t elapsed_ms(Clock::time_point start) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() -
                                                               start)
      .count();
}

// Runs cell jobs [0, count) with deterministic per-cell outputs. Cells are
// independent, so scheduling order cannot affect results; each worker writes
// only to its own record slots.
void run_cells(int count, const std::function<void(int)>& job) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(count));
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        job(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void EffRankStudyConfig::validate() const {
  if (p_values.empty() || ratios.empty() || reps_per_cell < 1) {
    throw std::invalid_argument("EffRankStudyConfig: empty grid");
  }
  if (r_latent < 1 || conditional_density <= 0.0) {
    throw std::invalid_argument("EffRankStudyConfig: r_latent and density must be positive");
  }
  if (!std::is_sorted(ratios.begin(), ratios.end())) {
    throw std::invalid_argument("EffRankStudyConfig: ratios must be ascending");
  }
  for (double q : ratios) {
    if (q <= 0.0) throw std::invalid_argument("EffRankStudyConfig: ratios must be positive");
  }
}

void ErrorScalingConfig::validate() const {
  if (p_values.empty() || r_fractions.empty() || n_grid.empty() || reps < 1) {
    throw std::invalid_argument("ErrorScalingConfig: empty grid");
  }
  if (Ca <= 0.0 || Cb <= 0.0 || chain_diag <= 0.0) {
    throw std::invalid_argument("ErrorScalingConfig: constants must be positive");
  }
  if (!std::is_sorted(n_grid.begin(), n_grid.end())) {
    throw std::invalid_argument("ErrorScalingConfig: n_grid must be ascending");
  }
  for (int p : p_values) {
    for (double f : r_fractions) {
      if (std::lround(f * p) < 1) {
        throw std::invalid_argument(
            "ErrorScalingConfig: r_fraction * p must round to at least 1");
      }
    }
  }
}

double rescaled_sample_size(double n, double s, double p, double r) {
  const double denom = s * std::log(p) + r * std::log(2.0 * p);
  if (denom <= 0.0) {
    throw std::invalid_argument("rescaled_sample_size: nonpositive denominator");
  }
  return n / denom;
}

std::vector<ExperimentRecord> run_effrank_study(const EffRankStudyConfig& cfg) {
  cfg.validate();
  const int cells = static_cast<int>(cfg.p_values.size() * cfg.ratios.size() *
                                     cfg.reps_per_cell);
  std::vector<ExperimentRecord> records(cells);

  run_cells(cells, [&](int idx) {
    const int reps = cfg.reps_per_cell;
    const int n_ratios = static_cast<int>(cfg.ratios.size());
    const int rep = idx % reps;
    const int ratio_idx = (idx / reps) % n_ratios;
    const int p_idx = idx / (reps * n_ratios);
    const int p = cfg.p_values[p_idx];
    const double target = cfg.ratios[ratio_idx];
    const std::uint64_t cell_seed =
        mix_seed(cfg.base_seed, {static_cast<std::uint64_t>(p),
                                 static_cast<std::uint64_t>(ratio_idx),
                                 static_cast<std::uint64_t>(rep)});

    const auto start = Clock::now();
    auto [S, support] =
        models::random_sparse_precision(p, cfg.conditional_density, cell_seed);
    models::JointModel jm =
        models::assemble_joint(S, cfg.r_latent, 1.0, mix_seed(cell_seed, {1}));

    ExperimentRecord rec;
    rec.study = "effrank";
    rec.p = p;
    rec.r = cfg.r_latent;
    rec.ratio = target;
    rec.seed = cell_seed;
    try {
      jm = models::scale_to_energy_ratio(jm, target);
      rec.converged = true;
    } catch (const std::domain_error&) {
      // Target beyond the PD-feasible range: keep the closest achievable
      // coupling and flag the record instead of dropping it.
      rec.converged = false;
    }
    const models::MarginalModel mm = models::marginalize(jm);
    rec.metric = effective_rank(mm.Sigma_star);
    rec.wall_time_ms = elapsed_ms(start);
    records[idx] = std::move(rec);
  });
  return records;
}

std::vector<ExperimentRecord> run_error_scaling_study(
    const ErrorScalingConfig& cfg) {
  cfg.validate();
  const int n_p = static_cast<int>(cfg.p_values.size());
  const int n_f = static_cast<int>(cfg.r_fractions.size());
  const int n_n = static_cast<int>(cfg.n_grid.size());
  const int cells = n_p * n_f * n_n * cfg.reps;
  std::vector<ExperimentRecord> records(cells);

  run_cells(cells, [&](int idx) {
    int rest = idx;
    const int rep = rest % cfg.reps;
    rest /= cfg.reps;
    const int n_idx = rest % n_n;
    rest /= n_n;
    const int f_idx = rest % n_f;
    const int p_idx = rest / n_f;

    const int p = cfg.p_values[p_idx];
    const int r = static_cast<int>(std::lround(cfg.r_fractions[f_idx] * p));
    const int n = cfg.n_grid[n_idx];
    const std::uint64_t cell_seed =
        mix_seed(cfg.base_seed, {static_cast<std::uint64_t>(p),
                                 static_cast<std::uint64_t>(r),
                                 static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(rep)});

    const auto start = Clock::now();
    const Mat S0 = models::chain_precision(p, cfg.chain_diag);
    const models::JointModel jm = models::assemble_joint(
        S0, r, kChainCouplingCoef / std::sqrt(static_cast<double>(p)),
        cell_seed);
    const models::MarginalModel mm = models::marginalize(jm);

    const Mat X = models::sample(mm.Sigma_star, n, mix_seed(cell_seed, {2}));
    const Mat Sigma_hat = sample_covariance(X);

    theory::ScheduleConstants consts;
    consts.Ca = cfg.Ca;
    consts.Cb = cfg.Cb;
    const auto [lambda, mu] = theory::select_regularization(
        Sigma_hat, n, theory::Regime::Practical, consts);

    solver::SolverConfig scfg;
    scfg.lambda = lambda;
    scfg.mu = mu;
    const solver::Estimate est = solver::lvggm_admm(Sigma_hat, scfg);

    ExperimentRecord rec;
    rec.study = "scaling";
    rec.p = p;
    rec.r = r;
    rec.n = n;
    rec.rescaled_n = rescaled_sample_size(
        n, static_cast<double>(mm.support_E.size()), p, r);
    rec.metric = (est.Theta_hat - mm.Theta_star).norm();
    rec.converged = est.converged;
    rec.seed = cell_seed;
    rec.wall_time_ms = elapsed_ms(start);
    records[idx] = std::move(rec);
  });
  return records;
}

SlopeFit fit_loglog_slope(const std::vector<ExperimentRecord>& records) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& rec : records) {
    if (!rec.converged) continue;
    if (rec.rescaled_n <= 0.0 || rec.metric <= 0.0) continue;
    pts.emplace_back(std::log(rec.rescaled_n), std::log(rec.metric));
  }
  if (pts.size() < 2) {
    throw std::invalid_argument("fit_loglog_slope: need at least two usable records");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-12) {
    throw std::invalid_argument("fit_loglog_slope: degenerate abscissae");
  }
  SlopeFit fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  double ss = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - fit.slope * x - fit.intercept;
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / m);
  fit.used = static_cast<int>(pts.size());
  return fit;
}

TuneResult tune_constants(const ErrorScalingConfig& cfg, int tune_reps) {
  cfg.validate();
  if (tune_reps < 1) {
    throw std::invalid_argument("tune_constants: tune_reps must be positive");
  }
  const std::array<double, 5> steps = {0.25, 0.5, 1.0, 2.0, 4.0};
  TuneResult best;
  best.mean_error = std::numeric_limits<double>::infinity();

  ErrorScalingConfig probe = cfg;
  probe.reps = tune_reps;
  // Held-out seed stream, disjoint from the reporting runs.
  probe.base_seed = mix_seed(cfg.base_seed, {0x48454C44454F5554ull});

  for (double fa : steps) {
    for (double fb : steps) {
      probe.Ca = cfg.Ca * fa;
      probe.Cb = cfg.Cb * fb;
      const auto records = run_error_scaling_study(probe);
      double total = 0.0;
      int used = 0;
      for (const auto& rec : records) {
        if (!rec.converged) continue;
        total += rec.metric;
        ++used;
      }
      if (used == 0) continue;
      const double mean = total / used;
      if (mean < best.mean_error) {
        best = {probe.Ca, probe.Cb, mean};
      }
    }
  }
  if (!std::isfinite(best.mean_error)) {
    throw std::runtime_error("tune_constants: no grid point produced converged runs");
  }
  return best;
}

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records) {
  std::ostringstream out;
  out << "study,p,r,n,ratio,rescaled_n,metric,converged,seed,wall_time_ms\n";
  for (const auto& rec : records) {
    out << rec.study << ',' << rec.p << ',' << rec.r << ',' << rec.n << ','
        << format_double(rec.ratio) << ',' << format_double(rec.rescaled_n)
        << ',' << format_double(rec.metric) << ',' << (rec.converged ? 1 : 0)
        << ',' << rec.seed << ',' << rec.wall_time_ms << '\n';
  }
  io::atomic_write_text(path, out.str());
}

std::vector<ExperimentRecord> read_records_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("read_records_csv: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("read_records_csv: " + path + " is empty");
  }
  std::vector<ExperimentRecord> records;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    std::array<std::string, 10> fields;
    int count = 0;
    while (std::getline(ss, field, ',')) {
      if (count >= 10) break;
      fields[count++] = field;
    }
    if (count != 10) {
      throw std::runtime_error("read_records_csv: " + path + " line " +
                               std::to_string(line_no) + ": expected 10 fields");
    }
    try {
      ExperimentRecord rec;
      rec.study = fields[0];
      rec.p = std::stoi(fields[1]);
      rec.r = std::stoi(fields[2]);
      rec.n = std::stoi(fields[3]);
      rec.ratio = std::stod(fields[4]);
      rec.rescaled_n = std::stod(fields[5]);
      rec.metric = std::stod(fields[6]);
      rec.converged = std::stoi(fields[7]) != 0;
      rec.seed = std::stoull(fields[8]);
      rec.wall_time_ms = std::stoll(fields[9]);
      records.push_back(std::move(rec));
    } catch (const std::exception&) {
      throw std::runtime_error("read_records_csv: " + path + " line " +
                               std::to_string(line_no) + ": malformed value");
    }
  }
  return records;
}

}  // namespace lvggm::experiments
