// lvggm-cli: command-line front end for the lvggm shared library. Talks to
// the library exclusively through the public C API; everything here is
// argument parsing, JSON/manifest plumbing, and file-path bookkeeping.

#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lvggm/lvggm.h"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kToolVersion = "1.0.0";

// Salt for deriving the sampling stream from the model seed, so the sample
// draws never replay the generator stream that built the model coupling.
constexpr std::uint64_t kSampleSeedSalt = 0xD1B54A32D192ED03ULL;

/* ----------------------------------------------------------- small utils */

std::string iso_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& text) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
  }
  fs::rename(tmp, p);
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/* -------------------------------------------------------- error handling */

struct CliError {
  int exit_code;  // 1 usage, 2 numerical
  std::string message;
};

int status_to_exit(lvggm_status st) {
  switch (st) {
    case LVGGM_OK:
      return 0;
    case LVGGM_ERR_INVALID_ARG:
    case LVGGM_ERR_IO:
      return 1;
    case LVGGM_ERR_NUMERIC:
    case LVGGM_ERR_UNATTAINABLE:
    default:
      return 2;
  }
}

void check(lvggm_status st, const std::string& what) {
  if (st == LVGGM_OK) return;
  throw CliError{status_to_exit(st), what + ": " + lvggm_last_error()};
}

/* --------------------------------------------------------- handle guards */

struct MatDeleter {
  void operator()(lvggm_mat* m) const { lvggm_mat_free(m); }
};
struct ModelDeleter {
  void operator()(lvggm_model* m) const { lvggm_model_free(m); }
};
struct EstimateDeleter {
  void operator()(lvggm_estimate* e) const { lvggm_estimate_free(e); }
};
using MatPtr = std::unique_ptr<lvggm_mat, MatDeleter>;
using ModelPtr = std::unique_ptr<lvggm_model, ModelDeleter>;
using EstimatePtr = std::unique_ptr<lvggm_estimate, EstimateDeleter>;

MatPtr read_mat(const std::string& path) {
  lvggm_mat* m = nullptr;
  check(lvggm_mat_read_csv(path.c_str(), &m), "reading " + path);
  return MatPtr(m);
}

/* --------------------------------------------------------------- manifest */

// Run record written before the work starts (status "running") and finalized
// afterwards; the config digest is the 64-bit hash of the canonicalized
// parameter text, so whitespace-only config edits do not change it.
class Manifest {
 public:
  Manifest(std::string path, std::string command, std::uint64_t base_seed,
           std::uint64_t config_digest)
      : path_(std::move(path)) {
    j_["command"] = std::move(command);
    j_["tool_version"] = kToolVersion;
    j_["library_version"] = lvggm_version();
    j_["base_seed"] = base_seed;
    j_["config_digest"] = hex64(config_digest);
    j_["start_time"] = iso_now();
    j_["end_time"] = nullptr;
    j_["status"] = "running";
    j_["outputs"] = json::array();
    j_["warnings"] = json::array();
    write();
  }

  void add_output(const std::string& p) {
    j_["outputs"].push_back(p);
  }
  void warn(const std::string& w) { j_["warnings"].push_back(w); }

  void finalize_ok() {
    j_["end_time"] = iso_now();
    j_["status"] = "ok";
    write();
  }
  void finalize_error(const std::string& message) {
    j_["end_time"] = iso_now();
    j_["status"] = "error";
    j_["error"] = message;
    write();
  }

  const std::string& path() const { return path_; }

 private:
  void write() const { atomic_write_file(path_, j_.dump(2) + "\n"); }

  std::string path_;
  json j_;
};

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

// Runs the body with a live manifest; finalizes it on both success and
// failure so interrupted runs are distinguishable from completed ones.
template <typename Fn>
int with_manifest(Manifest& man, Fn&& body) {
  try {
    body();
    man.finalize_ok();
    return 0;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    man.finalize_error(e.message);
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    man.finalize_error(e.what());
    return 2;
  }
}

/* ------------------------------------------------------------- subcommands */

struct GenerateOpts {
  int p = 40;
  int r = 2;
  std::string type = "chain";
  double density = 0.05;
  double chain_diag = 1.0;
  double latent_scale = 1.0;
  double ratio = -1.0;  // <0: keep the drawn coupling
  int n = 0;            // 0: skip sample emission
  std::uint64_t seed = 1;
  std::string output_dir;
  std::string manifest_path;
};

int run_generate(const GenerateOpts& o, const std::string& command) {
  std::ostringstream cfg;
  cfg << "type = " << o.type << "\np = " << o.p << "\nr = " << o.r
      << "\ndensity = " << o.density << "\nchain_diag = " << o.chain_diag
      << "\nlatent_scale = " << o.latent_scale << "\nratio = " << o.ratio
      << "\nn = " << o.n << "\n";
  const std::string manifest_path =
      o.manifest_path.empty() ? (fs::path(o.output_dir) / "manifest.json").string()
                              : o.manifest_path;
  Manifest man(manifest_path, command, o.seed,
               lvggm_config_digest(cfg.str().c_str()));

  return with_manifest(man, [&] {
    lvggm_model* raw = nullptr;
    if (o.type == "chain") {
      check(lvggm_model_chain(o.p, o.chain_diag, o.r, o.latent_scale, o.seed, &raw),
            "building chain model");
    } else {
      check(lvggm_model_random(o.p, o.density, o.r, o.latent_scale, o.seed, &raw),
            "building random sparse model");
    }
    ModelPtr model(raw);

    if (o.ratio >= 0.0) {
      check(lvggm_model_set_energy_ratio(model.get(), o.ratio),
            "scaling to energy ratio");
    }

    const struct {
      lvggm_model_part part;
      const char* name;
    } parts[] = {
        {LVGGM_PART_S_STAR, "S_star.csv"},
        {LVGGM_PART_L_STAR, "L_star.csv"},
        {LVGGM_PART_THETA_STAR, "theta_star.csv"},
        {LVGGM_PART_SIGMA_STAR, "sigma_star.csv"},
    };
    fs::create_directories(o.output_dir);
    for (const auto& spec : parts) {
      lvggm_mat* part = nullptr;
      check(lvggm_model_part_matrix(model.get(), spec.part, &part),
            "extracting model part");
      MatPtr guard(part);
      const std::string path = (fs::path(o.output_dir) / spec.name).string();
      check(lvggm_mat_write_csv(part, path.c_str()), "writing " + path);
      man.add_output(path);
    }

    if (o.n > 0) {
      lvggm_mat* X = nullptr;
      check(lvggm_model_sample(model.get(), o.n, o.seed ^ kSampleSeedSalt, &X),
            "sampling");
      MatPtr guard(X);
      const std::string path = (fs::path(o.output_dir) / "X.csv").string();
      check(lvggm_mat_write_csv(X, path.c_str()), "writing " + path);
      man.add_output(path);
    }

    int p = 0, r = 0, support = 0, rank = 0;
    double coupling = 0.0, ratio = 0.0;
    check(lvggm_model_info(model.get(), &p, &r, &support, &rank, &coupling),
          "model info");
    check(lvggm_model_energy_ratio(model.get(), &ratio), "energy ratio");
    if (coupling < 1.0 && o.ratio < 0.0) {
      man.warn("latent coupling shrunk by factor " + std::to_string(coupling) +
               " to keep the joint precision positive definite");
    }
    std::cout << "model: p=" << p << " r=" << r << " support=" << support
              << " rank=" << rank << " coupling_factor=" << coupling
              << " energy_ratio=" << ratio << "\n"
              << "wrote " << o.output_dir << " (manifest " << man.path() << ")\n";
  });
}

struct EstimateOpts {
  std::string input;
  bool is_covariance = false;
  bool center = false;
  double lambda = 0.1;
  double mu = 0.1;
  double rho = 1.0;
  int max_iters = 2000;
  double tol_abs = 1e-7;
  double tol_rel = 1e-6;
  bool use_glasso = false;
  bool adaptive_rho = false;
  std::uint64_t seed = 1;
  std::string output_prefix;
  std::string manifest_path;
};

int run_estimate(const EstimateOpts& o, const std::string& command) {
  std::ostringstream cfg;
  cfg << "input = " << o.input << "\nis_covariance = " << o.is_covariance
      << "\ncenter = " << o.center << "\nlambda = " << o.lambda
      << "\nmu = " << o.mu << "\nrho = " << o.rho
      << "\nmax_iters = " << o.max_iters << "\ntol_abs = " << o.tol_abs
      << "\ntol_rel = " << o.tol_rel << "\nglasso = " << o.use_glasso
      << "\nadaptive_rho = " << o.adaptive_rho << "\n";
  const std::string manifest_path = o.manifest_path.empty()
                                        ? o.output_prefix + "manifest.json"
                                        : o.manifest_path;
  Manifest man(manifest_path, command, o.seed,
               lvggm_config_digest(cfg.str().c_str()));

  return with_manifest(man, [&] {
    MatPtr input = read_mat(o.input);
    MatPtr cov;
    int n_samples = 0;
    if (o.is_covariance) {
      if (o.center) man.warn("--center has no effect with --is-covariance");
      cov = std::move(input);
    } else {
      n_samples = lvggm_mat_cols(input.get());
      lvggm_mat* c = nullptr;
      check(lvggm_cov_from_data(input.get(), o.center ? 1 : 0, &c),
            "sample covariance");
      cov.reset(c);
    }

    lvggm_solver_opts opts;
    lvggm_solver_opts_init(&opts);
    opts.lambda = o.lambda;
    opts.mu = o.use_glasso ? 0.0 : o.mu;
    opts.rho = o.rho;
    opts.max_iters = o.max_iters;
    opts.eps_abs = o.tol_abs;
    opts.eps_rel = o.tol_rel;
    opts.latent_enabled = o.use_glasso ? 0 : 1;
    opts.adaptive_rho = o.adaptive_rho ? 1 : 0;

    lvggm_estimate* raw = nullptr;
    check(lvggm_estimate_run(cov.get(), &opts, &raw), "estimation");
    EstimatePtr est(raw);

    const struct {
      lvggm_estimate_part part;
      const char* name;
    } parts[] = {
        {LVGGM_PART_S_HAT, "S_hat.csv"},
        {LVGGM_PART_L_HAT, "L_hat.csv"},
        {LVGGM_PART_THETA_HAT, "theta_hat.csv"},
    };
    for (const auto& spec : parts) {
      lvggm_mat* part = nullptr;
      check(lvggm_estimate_part_matrix(est.get(), spec.part, &part),
            "extracting estimate part");
      MatPtr guard(part);
      const std::string path = o.output_prefix + spec.name;
      check(lvggm_mat_write_csv(part, path.c_str()), "writing " + path);
      man.add_output(path);
    }

    int iters = 0, converged = 0;
    double primal = 0.0, dual = 0.0, objective = 0.0;
    check(lvggm_estimate_stats(est.get(), &iters, &primal, &dual, &objective,
                               &converged),
          "estimate stats");

    json diag;
    diag["mode"] = o.use_glasso ? "glasso" : "lvggm";
    diag["p"] = lvggm_mat_rows(cov.get());
    diag["n"] = o.is_covariance ? json(nullptr) : json(n_samples);
    diag["lambda"] = o.lambda;
    diag["mu"] = o.use_glasso ? 0.0 : o.mu;
    diag["rho"] = o.rho;
    diag["max_iters"] = o.max_iters;
    diag["eps_abs"] = o.tol_abs;
    diag["eps_rel"] = o.tol_rel;
    diag["adaptive_rho"] = o.adaptive_rho;
    diag["iterations"] = iters;
    diag["primal_residual"] = primal;
    diag["dual_residual"] = dual;
    diag["objective"] = objective;
    diag["converged"] = converged != 0;
    const std::string diag_path = o.output_prefix + "diagnostics.json";
    atomic_write_file(diag_path, diag.dump(2) + "\n");
    man.add_output(diag_path);
    if (!converged) {
      man.warn("solver stopped at max_iters without meeting tolerances");
    }

    std::cout << "estimate: iterations=" << iters << " converged="
              << (converged ? "yes" : "no") << " objective=" << objective
              << "\nwrote " << o.output_prefix << "{S_hat,L_hat,theta_hat}.csv"
              << " and " << diag_path << "\n";
  });
}

struct DiagnoseOpts {
  std::string joint_csv;
  int p_observed = 0;
  std::string S_csv;
  std::string L_csv;
  double lambda = 0.0;
  double mu = 0.0;
  double M_const = 7.0;
  std::uint64_t seed = 1;
  std::string output;
  std::string manifest_path;
};

int run_diagnose(const DiagnoseOpts& o, const std::string& command) {
  std::ostringstream cfg;
  cfg << "joint = " << o.joint_csv << "\np_observed = " << o.p_observed
      << "\nS = " << o.S_csv << "\nL = " << o.L_csv
      << "\nlambda = " << o.lambda << "\nmu = " << o.mu
      << "\nM = " << o.M_const << "\n";
  const std::string manifest_path =
      o.manifest_path.empty()
          ? (o.output.empty() ? "diagnose.manifest.json"
                              : o.output + ".manifest.json")
          : o.manifest_path;
  Manifest man(manifest_path, command, o.seed,
               lvggm_config_digest(cfg.str().c_str()));

  return with_manifest(man, [&] {
    MatPtr S, L;
    if (!o.joint_csv.empty()) {
      MatPtr J = read_mat(o.joint_csv);
      lvggm_model* raw = nullptr;
      check(lvggm_model_from_joint(J.get(), o.p_observed, &raw),
            "marginalizing joint model");
      ModelPtr model(raw);
      lvggm_mat* s = nullptr;
      lvggm_mat* l = nullptr;
      check(lvggm_model_part_matrix(model.get(), LVGGM_PART_S_STAR, &s),
            "extracting S*");
      S.reset(s);
      check(lvggm_model_part_matrix(model.get(), LVGGM_PART_L_STAR, &l),
            "extracting L*");
      L.reset(l);
    } else {
      S = read_mat(o.S_csv);
      L = read_mat(o.L_csv);
    }

    lvggm_diag_report rep;
    check(lvggm_diagnose(S.get(), L.get(), o.lambda, o.mu, o.M_const, &rep),
          "diagnostics");

    json out;
    out["p"] = lvggm_mat_rows(S.get());
    out["support_size"] = rep.support_size;
    out["rank"] = rep.rank;
    out["sigma_bar"] = rep.sigma_bar;
    out["rho_star"] = rep.rho_star;
    out["r_eff"] = rep.r_eff;
    out["rfe_lower_bound"] = rep.rfe_lower_bound;
    out["lambda"] = rep.lambda;
    out["mu"] = rep.mu;
    out["M"] = o.M_const;
    out["error_bound"] = rep.error_bound;
    if (rep.sfi_computed) {
      out["sfi"] = json::array({rep.sfi[0], rep.sfi[1], rep.sfi[2], rep.sfi[3]});
    } else {
      out["sfi"] = nullptr;
      man.warn("incoherence singular values skipped (p > 64)");
    }
    out["Lambda"] = rep.sfi_defined ? json(rep.Lambda) : json(nullptr);
    out["sfi_threshold"] =
        rep.sfi_defined ? json(rep.sfi_threshold) : json(nullptr);
    out["sfi_satisfied"] = (rep.sfi_computed && rep.sfi_defined)
                               ? json(rep.sfi_satisfied != 0)
                               : json(nullptr);

    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    if (!o.output.empty()) {
      atomic_write_file(o.output, text);
      man.add_output(o.output);
    }
  });
}

struct ExperimentOpts {
  std::string kind;  // effrank | scaling | tune
  std::string config;
  std::string output;
  int tune_reps = 3;
  bool seed_given = false;
  std::uint64_t seed = 0;
  std::string manifest_path;
};

std::uint64_t config_base_seed(const std::string& config_text) {
  // Flat key=value scan; mirrors the library default of base_seed = 1.
  std::istringstream in(config_text);
  std::string line;
  std::uint64_t seed = 1;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    key.erase(0, key.find_first_not_of(" \t"));
    key.erase(key.find_last_not_of(" \t") + 1);
    if (key == "base_seed") {
      try {
        seed = std::stoull(line.substr(eq + 1));
      } catch (...) {
      }
    }
  }
  return seed;
}

int run_experiment(const ExperimentOpts& o, const std::string& command) {
  const std::string config_text = [&] {
    try {
      return read_file(o.config);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      std::exit(1);
    }
  }();
  const std::uint64_t base_seed =
      o.seed_given ? o.seed : config_base_seed(config_text);
  std::string output = o.output;
  if (output.empty()) output = o.kind + "_records.csv";
  const std::string manifest_path =
      o.manifest_path.empty() ? output + ".manifest.json" : o.manifest_path;
  Manifest man(manifest_path, command, base_seed,
               lvggm_config_digest(config_text.c_str()));

  return with_manifest(man, [&] {
    if (o.kind == "tune") {
      double Ca = 0.0, Cb = 0.0, mean_error = 0.0;
      check(lvggm_experiment_tune(o.config.c_str(), o.tune_reps,
                                  o.seed_given ? 1 : 0, o.seed, &Ca, &Cb,
                                  &mean_error),
            "constant tuning");
      json out;
      out["Ca"] = Ca;
      out["Cb"] = Cb;
      out["mean_error"] = mean_error;
      out["tune_reps"] = o.tune_reps;
      std::cout << out.dump(2) << "\n";
      return;
    }
    const lvggm_experiment_kind kind = o.kind == "effrank"
                                           ? LVGGM_EXPERIMENT_EFFRANK
                                           : LVGGM_EXPERIMENT_SCALING;
    int records = 0;
    check(lvggm_experiment_run(kind, o.config.c_str(), output.c_str(),
                               o.seed_given ? 1 : 0, o.seed, &records),
          "running study");
    man.add_output(output);
    std::cout << "study " << o.kind << ": " << records << " records -> "
              << output << "\n";
  });
}

struct PlotOpts {
  std::string input;
  std::string x_field = "rescaled_n";
  std::string y_field = "metric";
  bool log_axes = false;
  bool with_fit = false;
  std::uint64_t seed = 1;
  std::string output;
  std::string manifest_path;
};

int run_plot(const PlotOpts& o, const std::string& command) {
  std::ostringstream cfg;
  cfg << "input = " << o.input << "\nx = " << o.x_field << "\ny = " << o.y_field
      << "\nlog = " << o.log_axes << "\nfit = " << o.with_fit << "\n";
  const std::string manifest_path =
      o.manifest_path.empty() ? o.output + ".manifest.json" : o.manifest_path;
  Manifest man(manifest_path, command, o.seed,
               lvggm_config_digest(cfg.str().c_str()));

  return with_manifest(man, [&] {
    int points = 0, excluded = 0;
    check(lvggm_plot(o.input.c_str(), o.x_field.c_str(), o.y_field.c_str(),
                     o.log_axes ? 1 : 0, o.with_fit ? 1 : 0, o.output.c_str(),
                     &points, &excluded),
          "rendering plot");
    man.add_output(o.output);
    const std::string dat =
        (fs::path(o.output).parent_path() /
         fs::path(o.output).stem().concat(".dat"))
            .string();
    man.add_output(dat);
    if (excluded > 0) {
      man.warn(std::to_string(excluded) +
               " record(s) excluded by the log-domain or finiteness guard");
    }
    std::cout << "plot: " << points << " points (" << excluded
              << " excluded) -> " << o.output << "\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Latent-variable Gaussian graphical model estimation: synthetic model "
      "generation, sparse-plus-low-rank precision fitting, theory "
      "diagnostics, and Monte-Carlo studies."};
  app.set_version_flag(
      "--version", std::string("lvggm-cli ") + kToolVersion + " (liblvggm " +
                       lvggm_version() + ")");
  app.require_subcommand(1);

  GenerateOpts gen;
  auto* cmd_gen = app.add_subcommand(
      "generate", "Emit a synthetic model's S*, L*, Theta*, Sigma* (and "
                  "optionally samples) as CSV files.");
  cmd_gen->add_option("--p", gen.p, "Observed dimension")->required();
  cmd_gen->add_option("--r", gen.r, "Latent dimension");
  cmd_gen->add_option("--type", gen.type, "Conditional graph type")
      ->check(CLI::IsMember({"chain", "random"}))
      ->capture_default_str();
  cmd_gen->add_option("--density", gen.density,
                      "Off-diagonal density for --type random");
  cmd_gen->add_option("--chain-diag", gen.chain_diag,
                      "Diagonal value for --type chain");
  cmd_gen->add_option("--latent-scale", gen.latent_scale,
                      "Scale of the drawn latent coupling entries");
  cmd_gen->add_option("--ratio", gen.ratio,
                      "Target latent-to-conditional energy ratio (rescales "
                      "the coupling; error if unattainable)");
  cmd_gen->add_option("--n", gen.n, "Also draw n samples into X.csv");
  cmd_gen->add_option("--seed", gen.seed, "Random seed");
  cmd_gen->add_option("--output-dir", gen.output_dir, "Output directory")
      ->required();
  cmd_gen->add_option("--manifest", gen.manifest_path,
                      "Manifest path (default: <output-dir>/manifest.json)");

  EstimateOpts est;
  auto* cmd_est = app.add_subcommand(
      "estimate", "Fit a sparse-plus-low-rank precision matrix to data or to "
                  "a covariance matrix.");
  cmd_est->add_option("--input", est.input,
                      "Matrix CSV: variables in rows, samples in columns "
                      "(or a covariance with --is-covariance)")
      ->required();
  cmd_est->add_flag("--is-covariance", est.is_covariance,
                    "Input is already a covariance matrix");
  cmd_est->add_flag("--center", est.center,
                    "Subtract empirical row means before the covariance");
  cmd_est->add_option("--lambda", est.lambda, "Elementwise l1 weight")
      ->capture_default_str();
  cmd_est->add_option("--mu", est.mu, "Nuclear-norm weight")
      ->capture_default_str();
  cmd_est->add_option("--rho", est.rho, "Augmented-Lagrangian penalty")
      ->capture_default_str();
  cmd_est->add_option("--max-iters", est.max_iters, "Iteration cap")
      ->capture_default_str();
  cmd_est->add_option("--tol-abs", est.tol_abs, "Absolute stopping tolerance")
      ->capture_default_str();
  cmd_est->add_option("--tol-rel", est.tol_rel, "Relative stopping tolerance")
      ->capture_default_str();
  cmd_est->add_flag("--glasso", est.use_glasso,
                    "Sparse-only mode: pin the low-rank term to zero");
  cmd_est->add_flag("--adaptive-rho", est.adaptive_rho,
                    "Rebalance the penalty when one residual dominates");
  cmd_est->add_option("--seed", est.seed,
                      "Random seed (accepted for interface uniformity; the "
                      "solver is deterministic)");
  cmd_est->add_option("--output-prefix", est.output_prefix,
                      "Prefix for S_hat.csv, L_hat.csv, theta_hat.csv, "
                      "diagnostics.json")
      ->required();
  cmd_est->add_option("--manifest", est.manifest_path,
                      "Manifest path (default: <output-prefix>manifest.json)");

  DiagnoseOpts diag;
  auto* cmd_diag = app.add_subcommand(
      "diagnose", "Report spectra, incoherence singular values, and the "
                  "error-bound evaluation for a ground-truth model.");
  auto* opt_joint = cmd_diag->add_option(
      "--model", diag.joint_csv, "Joint precision CSV (use with --p)");
  auto* opt_p = cmd_diag->add_option(
      "--p", diag.p_observed, "Observed dimension of the joint matrix");
  auto* opt_S = cmd_diag->add_option("--S", diag.S_csv,
                                     "Sparse conditional precision CSV");
  auto* opt_L =
      cmd_diag->add_option("--L", diag.L_csv, "Low-rank term CSV (NSD)");
  opt_joint->needs(opt_p);
  opt_S->needs(opt_L);
  opt_S->excludes(opt_joint);
  cmd_diag->add_option("--lambda", diag.lambda, "l1 weight to evaluate at")
      ->required();
  cmd_diag->add_option("--mu", diag.mu, "Nuclear-norm weight to evaluate at")
      ->required();
  cmd_diag->add_option("--M", diag.M_const, "Burn-in constant (> 6)")
      ->capture_default_str();
  cmd_diag->add_option("--seed", diag.seed,
                       "Random seed (accepted for interface uniformity)");
  cmd_diag->add_option("--output", diag.output,
                       "Also write the JSON report to this path");
  cmd_diag->add_option("--manifest", diag.manifest_path, "Manifest path");

  ExperimentOpts exp;
  auto* cmd_exp = app.add_subcommand(
      "experiment", "Run a Monte-Carlo study from a flat key=value config.");
  cmd_exp->require_subcommand(1);
  auto* cmd_eff = cmd_exp->add_subcommand(
      "effrank", "Effective rank of the marginal covariance vs energy ratio");
  auto* cmd_scal = cmd_exp->add_subcommand(
      "scaling", "Frobenius estimation error vs rescaled sample size");
  auto* cmd_tune = cmd_exp->add_subcommand(
      "tune", "Grid-search the practical schedule constants on held-out seeds");
  for (CLI::App* sub : {cmd_eff, cmd_scal, cmd_tune}) {
    sub->add_option("--config", exp.config, "Flat key=value config file")
        ->required();
    sub->add_option("--seed", exp.seed, "Override the config's base_seed")
        ->trigger_on_parse()
        ->each([&exp](const std::string&) { exp.seed_given = true; });
    sub->add_option("--manifest", exp.manifest_path, "Manifest path");
  }
  for (CLI::App* sub : {cmd_eff, cmd_scal}) {
    sub->add_option("--output", exp.output,
                    "Records CSV path (default: <study>_records.csv)");
  }
  cmd_tune->add_option("--reps", exp.tune_reps,
                       "Repetitions per grid point")
      ->capture_default_str();

  PlotOpts plot;
  auto* cmd_plot = app.add_subcommand(
      "plot", "Render a records CSV as a standalone SVG scatter (plus a "
              "sibling .dat file).");
  cmd_plot->add_option("--input", plot.input, "Records CSV")->required();
  cmd_plot->add_option("--x", plot.x_field, "X field")
      ->check(CLI::IsMember({"ratio", "rescaled_n", "metric", "n"}))
      ->capture_default_str();
  cmd_plot->add_option("--y", plot.y_field, "Y field")
      ->check(CLI::IsMember({"ratio", "rescaled_n", "metric", "n"}))
      ->capture_default_str();
  cmd_plot->add_flag("--log", plot.log_axes, "Log-log axes");
  cmd_plot->add_flag("--fit", plot.with_fit,
                     "Overlay the least-squares reference line");
  cmd_plot->add_option("--seed", plot.seed,
                       "Random seed (accepted for interface uniformity)");
  cmd_plot->add_option("--output", plot.output, "SVG path")->required();
  cmd_plot->add_option("--manifest", plot.manifest_path, "Manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n\n";
    // Usage errors list the valid option set of the deepest matched command.
    const CLI::App* active = &app;
    while (!active->get_subcommands().empty())
      active = active->get_subcommands().front();
    std::cerr << active->help();
    return 1;
  }

  const std::string command = join_args(argc, argv);
  if (app.got_subcommand(cmd_gen)) return run_generate(gen, command);
  if (app.got_subcommand(cmd_est)) return run_estimate(est, command);
  if (app.got_subcommand(cmd_diag)) return run_diagnose(diag, command);
  if (app.got_subcommand(cmd_exp)) {
    exp.kind = cmd_exp->get_subcommands().front()->get_name();
    return run_experiment(exp, command);
  }
  if (app.got_subcommand(cmd_plot)) return run_plot(plot, command);
  return 1;  // unreachable: require_subcommand(1)
}
