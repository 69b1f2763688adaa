#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/numeric.hpp"

namespace lvggm::experiments {

struct EffRankStudyConfig {
  std::vector<int> p_values;
  int r_latent = 10;
  std::vector<double> ratios;  // ascending, log-spaced in practice
  int reps_per_cell = 10;
  std::uint64_t base_seed = 1;
  double conditional_density = 0.05;

  void validate() const;
};

struct ErrorScalingConfig {
  std::vector<int> p_values;
  std::vector<double> r_fractions;  // latent count = round(fraction * p)
  std::vector<int> n_grid;          // ascending
  int reps = 10;
  std::uint64_t base_seed = 1;
  double Ca = 0.5;  // practical lambda constant
  double Cb = 1.0;  // practical mu constant
  double chain_diag = 1.0;

  void validate() const;
};

struct ExperimentRecord {
  std::string study;  // "effrank" or "scaling"
  int p = 0;
  int r = 0;
  int n = 0;
  double ratio = 0.0;       // target energy ratio (effrank study)
  double rescaled_n = 0.0;  // n / (s ln p + r ln 2p) (scaling study)
  double metric = 0.0;      // effective rank, or ||Theta_hat - Theta*||_F
  bool converged = true;    // solver convergence / target-ratio attainability
  std::uint64_t seed = 0;
  std::int64_t wall_time_ms = 0;
};

// n / (s ln p + r ln 2p), natural logarithms.
double rescaled_sample_size(double n, double s, double p, double r);

// Effective rank of the true marginal covariance across energy ratios.
// One record per (p, ratio, rep); cells with unattainable target ratios are
// recorded at the closest achievable coupling with converged=false.
std::vector<ExperimentRecord> run_effrank_study(const EffRankStudyConfig& cfg);

// Frobenius estimation error against rescaled sample size on chain models
// with a latent block; regularization follows the practical schedule
// computed from sample quantities.
std::vector<ExperimentRecord> run_error_scaling_study(const ErrorScalingConfig& cfg);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square residual in log space
  int used = 0;           // records entering the regression
};

// OLS of log(metric) on log(rescaled_n), excluding non-converged records.
SlopeFit fit_loglog_slope(const std::vector<ExperimentRecord>& records);

struct TuneResult {
  double Ca = 0.0;
  double Cb = 0.0;
  double mean_error = 0.0;
};

// Coarse 5x5 log-grid search around (cfg.Ca, cfg.Cb), minimizing the mean
// error over a held-out seed set with `tune_reps` repetitions per cell.
TuneResult tune_constants(const ErrorScalingConfig& cfg, int tune_reps);

void write_records_csv(const std::string& path,
                       const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_records_csv(const std::string& path);

}  // namespace lvggm::experiments
