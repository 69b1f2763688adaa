#include "lvggm/lvggm.h"

#include <cstring>
#include <stdexcept>
#include <string>

#include "core/experiments.hpp"
#include "core/io.hpp"
#include "core/models.hpp"
#include "core/numeric.hpp"
#include "core/rng.hpp"
#include "core/solver.hpp"
#include "core/theory.hpp"

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

// Runs a callable, translating C++ exceptions to status codes. runtime_error
// maps to `runtime_status` so I/O entry points can report LVGGM_ERR_IO while
// numerical ones report LVGGM_ERR_NUMERIC.
template <typename Fn>
lvggm_status guarded(lvggm_status runtime_status, Fn&& fn) {
  try {
    fn();
    return LVGGM_OK;
  } catch (const std::domain_error& e) {
    set_error(e.what());
    return LVGGM_ERR_UNATTAINABLE;
  } catch (const std::invalid_argument& e) {
    set_error(e.what());
    return LVGGM_ERR_INVALID_ARG;
  } catch (const std::exception& e) {
    set_error(e.what());
    return runtime_status;
  }
}

lvggm_status require(bool cond, const char* msg) {
  if (!cond) {
    set_error(msg);
    return LVGGM_ERR_INVALID_ARG;
  }
  return LVGGM_OK;
}

}  // namespace

struct lvggm_mat {
  lvggm::Mat m;
};

struct lvggm_model {
  lvggm::models::JointModel joint;
  lvggm::models::MarginalModel marginal;
};

struct lvggm_estimate {
  lvggm::solver::Estimate est;
};

extern "C" {

const char* lvggm_version(void) { return "1.0.0"; }

const char* lvggm_last_error(void) { return g_last_error.c_str(); }

/* ------------------------------------------------------------- matrices */

lvggm_status lvggm_mat_create(int rows, int cols, const double* data,
                              lvggm_mat** out) {
  if (auto st = require(out && rows >= 0 && cols >= 0,
                        "lvggm_mat_create: bad arguments"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    auto* h = new lvggm_mat;
    if (data) {
      h->m = Eigen::Map<const lvggm::Mat>(data, rows, cols);
    } else {
      h->m = lvggm::Mat::Zero(rows, cols);
    }
    *out = h;
  });
}

lvggm_status lvggm_mat_read_csv(const char* path, lvggm_mat** out) {
  if (auto st = require(path && out, "lvggm_mat_read_csv: null argument"))
    return st;
  return guarded(LVGGM_ERR_IO,
                 [&] { *out = new lvggm_mat{lvggm::io::read_matrix(path)}; });
}

lvggm_status lvggm_mat_write_csv(const lvggm_mat* m, const char* path) {
  if (auto st = require(m && path, "lvggm_mat_write_csv: null argument"))
    return st;
  return guarded(LVGGM_ERR_IO, [&] { lvggm::io::write_matrix(path, m->m); });
}

int lvggm_mat_rows(const lvggm_mat* m) {
  return m ? static_cast<int>(m->m.rows()) : 0;
}

int lvggm_mat_cols(const lvggm_mat* m) {
  return m ? static_cast<int>(m->m.cols()) : 0;
}

double lvggm_mat_get(const lvggm_mat* m, int i, int j) {
  if (!m || i < 0 || j < 0 || i >= m->m.rows() || j >= m->m.cols()) return 0.0;
  return m->m(i, j);
}

const double* lvggm_mat_data(const lvggm_mat* m) {
  return m ? m->m.data() : nullptr;
}

void lvggm_mat_free(lvggm_mat* m) { delete m; }

lvggm_status lvggm_cov_from_data(const lvggm_mat* X, int center,
                                 lvggm_mat** out) {
  if (auto st = require(X && out, "lvggm_cov_from_data: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    *out = new lvggm_mat{lvggm::sample_covariance(X->m, center != 0)};
  });
}

lvggm_status lvggm_effective_rank(const lvggm_mat* m, double* out) {
  if (auto st = require(m && out, "lvggm_effective_rank: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC,
                 [&] { *out = lvggm::effective_rank(m->m); });
}

lvggm_status lvggm_matrix_norm(const lvggm_mat* m, lvggm_norm_kind kind,
                               double* out) {
  if (auto st = require(m && out, "lvggm_matrix_norm: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    *out = lvggm::matrix_norm(m->m, static_cast<lvggm::NormKind>(kind));
  });
}

/* ------------------------------------------------------ synthetic models */

lvggm_status lvggm_model_chain(int p, double diag, int r, double latent_scale,
                               uint64_t seed, lvggm_model** out) {
  if (auto st = require(out != nullptr, "lvggm_model_chain: null output"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    const lvggm::Mat S = lvggm::models::chain_precision(p, diag);
    auto jm = lvggm::models::assemble_joint(S, r, latent_scale, seed);
    auto mm = lvggm::models::marginalize(jm);
    *out = new lvggm_model{std::move(jm), std::move(mm)};
  });
}

lvggm_status lvggm_model_random(int p, double density, int r,
                                double latent_scale, uint64_t seed,
                                lvggm_model** out) {
  if (auto st = require(out != nullptr, "lvggm_model_random: null output"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    auto [S, support] = lvggm::models::random_sparse_precision(p, density, seed);
    auto jm = lvggm::models::assemble_joint(S, r, latent_scale,
                                            lvggm::mix_seed(seed, {1}));
    auto mm = lvggm::models::marginalize(jm);
    *out = new lvggm_model{std::move(jm), std::move(mm)};
  });
}

lvggm_status lvggm_model_from_joint(const lvggm_mat* J, int p_observed,
                                    lvggm_model** out) {
  if (auto st = require(J && out, "lvggm_model_from_joint: null argument"))
    return st;
  if (auto st = require(p_observed >= 1 && p_observed <= J->m.rows(),
                        "lvggm_model_from_joint: p_observed out of range"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    auto jm = lvggm::models::joint_from_matrix(J->m, p_observed);
    auto mm = lvggm::models::marginalize(jm);
    *out = new lvggm_model{std::move(jm), std::move(mm)};
  });
}

lvggm_status lvggm_model_set_energy_ratio(lvggm_model* m, double target) {
  if (auto st = require(m != nullptr, "lvggm_model_set_energy_ratio: null model"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    auto jm = lvggm::models::scale_to_energy_ratio(m->joint, target);
    m->marginal = lvggm::models::marginalize(jm);
    m->joint = std::move(jm);
  });
}

lvggm_status lvggm_model_part_matrix(const lvggm_model* m,
                                     lvggm_model_part part, lvggm_mat** out) {
  if (auto st = require(m && out, "lvggm_model_part_matrix: null argument"))
    return st;
  switch (part) {
    case LVGGM_PART_S_STAR:
      *out = new lvggm_mat{m->marginal.S_star};
      return LVGGM_OK;
    case LVGGM_PART_L_STAR:
      *out = new lvggm_mat{m->marginal.L_star};
      return LVGGM_OK;
    case LVGGM_PART_THETA_STAR:
      *out = new lvggm_mat{m->marginal.Theta_star};
      return LVGGM_OK;
    case LVGGM_PART_SIGMA_STAR:
      *out = new lvggm_mat{m->marginal.Sigma_star};
      return LVGGM_OK;
    case LVGGM_PART_JOINT:
      *out = new lvggm_mat{m->joint.J};
      return LVGGM_OK;
  }
  set_error("lvggm_model_part_matrix: unknown part");
  return LVGGM_ERR_INVALID_ARG;
}

lvggm_status lvggm_model_energy_ratio(const lvggm_model* m, double* out) {
  if (auto st = require(m && out, "lvggm_model_energy_ratio: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC,
                 [&] { *out = lvggm::models::energy_ratio(m->marginal); });
}

lvggm_status lvggm_model_info(const lvggm_model* m, int* p, int* r,
                              int* support_size, int* rank,
                              double* coupling_factor) {
  if (auto st = require(m != nullptr, "lvggm_model_info: null model")) return st;
  if (p) *p = m->joint.p;
  if (r) *r = m->joint.r;
  if (support_size) *support_size = static_cast<int>(m->marginal.support_E.size());
  if (rank) *rank = m->marginal.rank_r;
  if (coupling_factor) *coupling_factor = m->joint.coupling_factor;
  return LVGGM_OK;
}

lvggm_status lvggm_model_sample(const lvggm_model* m, int n, uint64_t seed,
                                lvggm_mat** out) {
  if (auto st = require(m && out, "lvggm_model_sample: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    *out = new lvggm_mat{lvggm::models::sample(m->marginal.Sigma_star, n, seed)};
  });
}

void lvggm_model_free(lvggm_model* m) { delete m; }

/* ---------------------------------------------------------------- solver */

void lvggm_solver_opts_init(lvggm_solver_opts* opts) {
  if (!opts) return;
  const lvggm::solver::SolverConfig defaults;
  opts->lambda = defaults.lambda;
  opts->mu = defaults.mu;
  opts->rho = defaults.rho;
  opts->max_iters = defaults.max_iters;
  opts->eps_abs = defaults.eps_abs;
  opts->eps_rel = defaults.eps_rel;
  opts->latent_enabled = defaults.latent_enabled ? 1 : 0;
  opts->adaptive_rho = defaults.adaptive_rho ? 1 : 0;
}

lvggm_status lvggm_estimate_run(const lvggm_mat* sigma_hat,
                                const lvggm_solver_opts* opts,
                                lvggm_estimate** out) {
  if (auto st = require(sigma_hat && opts && out,
                        "lvggm_estimate_run: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    lvggm::solver::SolverConfig cfg;
    cfg.lambda = opts->lambda;
    cfg.mu = opts->mu;
    cfg.rho = opts->rho;
    cfg.max_iters = opts->max_iters;
    cfg.eps_abs = opts->eps_abs;
    cfg.eps_rel = opts->eps_rel;
    cfg.latent_enabled = opts->latent_enabled != 0;
    cfg.adaptive_rho = opts->adaptive_rho != 0;
    *out = new lvggm_estimate{lvggm::solver::lvggm_admm(sigma_hat->m, cfg)};
  });
}

lvggm_status lvggm_estimate_part_matrix(const lvggm_estimate* e,
                                        lvggm_estimate_part part,
                                        lvggm_mat** out) {
  if (auto st = require(e && out, "lvggm_estimate_part_matrix: null argument"))
    return st;
  switch (part) {
    case LVGGM_PART_S_HAT:
      *out = new lvggm_mat{e->est.S_hat};
      return LVGGM_OK;
    case LVGGM_PART_L_HAT:
      *out = new lvggm_mat{e->est.L_hat};
      return LVGGM_OK;
    case LVGGM_PART_THETA_HAT:
      *out = new lvggm_mat{e->est.Theta_hat};
      return LVGGM_OK;
  }
  set_error("lvggm_estimate_part_matrix: unknown part");
  return LVGGM_ERR_INVALID_ARG;
}

lvggm_status lvggm_estimate_stats(const lvggm_estimate* e, int* iterations,
                                  double* primal_residual,
                                  double* dual_residual, double* objective,
                                  int* converged) {
  if (auto st = require(e != nullptr, "lvggm_estimate_stats: null estimate"))
    return st;
  if (iterations) *iterations = e->est.iterations;
  if (primal_residual) *primal_residual = e->est.primal_residual;
  if (dual_residual) *dual_residual = e->est.dual_residual;
  if (objective) *objective = e->est.objective_value;
  if (converged) *converged = e->est.converged ? 1 : 0;
  return LVGGM_OK;
}

void lvggm_estimate_free(lvggm_estimate* e) { delete e; }

lvggm_status lvggm_objective(const lvggm_mat* sigma_hat, const lvggm_mat* S,
                             const lvggm_mat* L, double lambda, double mu,
                             double* out) {
  if (auto st = require(sigma_hat && S && L && out,
                        "lvggm_objective: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    *out = lvggm::solver::objective(sigma_hat->m, S->m, L->m, lambda, mu);
  });
}

/* ------------------------------------------------------------ diagnostics */

void lvggm_schedule_constants_init(lvggm_schedule_constants* c) {
  if (!c) return;
  const lvggm::theory::ScheduleConstants defaults;
  c->C1 = defaults.C1;
  c->C2 = defaults.C2;
  c->C4 = defaults.C4;
  c->Ca = defaults.Ca;
  c->Cb = defaults.Cb;
}

lvggm_status lvggm_select_regularization(const lvggm_mat* sigma, int n,
                                         lvggm_schedule_regime regime,
                                         const lvggm_schedule_constants* constants,
                                         double* lambda_out, double* mu_out) {
  if (auto st = require(sigma && lambda_out && mu_out,
                        "lvggm_select_regularization: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    lvggm::theory::ScheduleConstants c;
    if (constants) {
      c.C1 = constants->C1;
      c.C2 = constants->C2;
      c.C4 = constants->C4;
      c.Ca = constants->Ca;
      c.Cb = constants->Cb;
    }
    const auto [lambda, mu] = lvggm::theory::select_regularization(
        sigma->m, n, static_cast<lvggm::theory::Regime>(regime), c);
    *lambda_out = lambda;
    *mu_out = mu;
  });
}

lvggm_status lvggm_diagnose(const lvggm_mat* S_star, const lvggm_mat* L_star,
                            double lambda, double mu, double M_const,
                            lvggm_diag_report* out) {
  if (auto st = require(S_star && L_star && out, "lvggm_diagnose: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    namespace th = lvggm::theory;
    namespace md = lvggm::models;
    const lvggm::Mat& S = S_star->m;
    const lvggm::Mat& L = L_star->m;
    const int p = static_cast<int>(S.rows());
    if (L.rows() != p || L.cols() != p || S.cols() != p) {
      throw std::invalid_argument("lvggm_diagnose: S and L must be p x p");
    }

    const lvggm::Mat Theta = S + L;
    const auto theta_eig = lvggm::eigh(Theta);
    if (theta_eig.values(0) <= 0.0) {
      throw std::runtime_error("lvggm_diagnose: S + L is not positive definite");
    }
    lvggm::Mat Sigma = Theta.llt().solve(lvggm::Mat::Identity(p, p));
    Sigma = 0.5 * (Sigma + Sigma.transpose());

    std::memset(out, 0, sizeof(*out));
    out->lambda = lambda;
    out->mu = mu;
    out->sigma_bar = Sigma.diagonal().maxCoeff();
    out->rho_star = lvggm::matrix_norm(Sigma, lvggm::NormKind::Spectral);
    out->r_eff = lvggm::effective_rank(Sigma);
    out->rfe_lower_bound = th::rfe_lower_bound(Theta);

    // Support and column-space from the supplied ground truth.
    md::SupportSet E;
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) {
        if (i != j && std::abs(S(i, j)) > 1e-12) E.emplace_back(i, j);
      }
    }
    const auto L_eig = lvggm::eigh(L);
    const double l_spectral = L_eig.values.cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < p; ++i) {
      if (l_spectral > 0.0 && std::abs(L_eig.values(i)) > 1e-10 * l_spectral) {
        keep.push_back(i);
      }
    }
    lvggm::Mat U(p, static_cast<int>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
      U.col(static_cast<int>(k)) = L_eig.vectors.col(keep[k]);
    }
    out->support_size = static_cast<int>(E.size());
    out->rank = static_cast<int>(keep.size());

    th::TheoryParams params;
    params.kappa_min = out->rfe_lower_bound;
    params.M_const = M_const;
    params.sigma_bar = out->sigma_bar;
    params.rho_star = out->rho_star;
    params.r_eff = out->r_eff;
    out->error_bound = th::error_bound(params, lambda, mu,
                                      static_cast<double>(E.size()),
                                      static_cast<double>(keep.size()));

    if (p <= 64) {
      th::SubspaceSpec spec{std::move(E), std::move(U)};
      const th::SfiReport sfi = th::sfi_singular_values(
          Theta, spec, lambda, mu, M_const, params.kappa_min);
      for (int i = 0; i < 4; ++i) out->sfi[i] = sfi.sigmas[i];
      out->Lambda = sfi.Lambda;
      out->sfi_threshold = sfi.threshold;
      out->sfi_computed = 1;
      out->sfi_defined = sfi.lambda_defined ? 1 : 0;
      out->sfi_satisfied = sfi.satisfied ? 1 : 0;
    }
  });
}

lvggm_status lvggm_deviation_check(const lvggm_mat* sigma_star, int n,
                                   int trials, uint64_t seed, double C1,
                                   double C2, double* rate_elementwise,
                                   double* rate_spectral) {
  if (auto st = require(sigma_star && rate_elementwise && rate_spectral,
                        "lvggm_deviation_check: null argument"))
    return st;
  return guarded(LVGGM_ERR_NUMERIC, [&] {
    const auto report =
        lvggm::theory::deviation_check(sigma_star->m, n, trials, seed, C1, C2);
    *rate_elementwise = report.rate_elementwise;
    *rate_spectral = report.rate_spectral;
  });
}

/* ------------------------------------------------------------ experiments */

lvggm_status lvggm_experiment_run(lvggm_experiment_kind kind,
                                  const char* config_path,
                                  const char* output_csv,
                                  int has_seed_override, uint64_t seed_override,
                                  int* record_count) {
  if (auto st = require(config_path && output_csv,
                        "lvggm_experiment_run: null path"))
    return st;
  return guarded(LVGGM_ERR_IO, [&] {
    namespace ex = lvggm::experiments;
    std::vector<ex::ExperimentRecord> records;
    if (kind == LVGGM_EXPERIMENT_EFFRANK) {
      auto cfg = lvggm::io::read_effrank_config(config_path);
      if (has_seed_override) cfg.base_seed = seed_override;
      records = ex::run_effrank_study(cfg);
    } else if (kind == LVGGM_EXPERIMENT_SCALING) {
      auto cfg = lvggm::io::read_scaling_config(config_path);
      if (has_seed_override) cfg.base_seed = seed_override;
      records = ex::run_error_scaling_study(cfg);
    } else {
      throw std::invalid_argument("lvggm_experiment_run: unknown study kind");
    }
    ex::write_records_csv(output_csv, records);
    if (record_count) *record_count = static_cast<int>(records.size());
  });
}

lvggm_status lvggm_experiment_tune(const char* config_path, int tune_reps,
                                   int has_seed_override, uint64_t seed_override,
                                   double* Ca_out, double* Cb_out,
                                   double* mean_error_out) {
  if (auto st = require(config_path && Ca_out && Cb_out,
                        "lvggm_experiment_tune: null argument"))
    return st;
  return guarded(LVGGM_ERR_IO, [&] {
    auto cfg = lvggm::io::read_scaling_config(config_path);
    if (has_seed_override) cfg.base_seed = seed_override;
    const auto best = lvggm::experiments::tune_constants(cfg, tune_reps);
    *Ca_out = best.Ca;
    *Cb_out = best.Cb;
    if (mean_error_out) *mean_error_out = best.mean_error;
  });
}

lvggm_status lvggm_fit_loglog(const char* records_csv, double* slope,
                              double* intercept, double* residual, int* used) {
  if (auto st = require(records_csv && slope, "lvggm_fit_loglog: null argument"))
    return st;
  return guarded(LVGGM_ERR_IO, [&] {
    const auto records = lvggm::experiments::read_records_csv(records_csv);
    const auto fit = lvggm::experiments::fit_loglog_slope(records);
    *slope = fit.slope;
    if (intercept) *intercept = fit.intercept;
    if (residual) *residual = fit.residual;
    if (used) *used = fit.used;
  });
}

lvggm_status lvggm_plot(const char* records_csv, const char* x_field,
                        const char* y_field, int log_axes, int with_fit,
                        const char* svg_path, int* points, int* excluded) {
  if (auto st = require(records_csv && x_field && y_field && svg_path,
                        "lvggm_plot: null argument"))
    return st;
  return guarded(LVGGM_ERR_IO, [&] {
    const auto records = lvggm::experiments::read_records_csv(records_csv);
    const auto result = lvggm::io::emit_scatter_svg(
        records, x_field, y_field, log_axes != 0, svg_path, with_fit != 0);
    if (points) *points = result.points;
    if (excluded) *excluded = result.excluded;
  });
}

uint64_t lvggm_config_digest(const char* text) {
  return text ? lvggm::io::config_digest(text) : 0;
}

} /* extern "C" */
