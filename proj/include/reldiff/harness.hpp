#pragma once
#include <map>
#include <string>
#include <vector>

#include "reldiff/kruskal.hpp"
#include "reldiff/minkowski.hpp"
#include "reldiff/stats.hpp"

namespace reldiff {

struct EnsembleConfig {
  std::string space = "schwarzschild";  // or "minkowski"
  double sigma = 1.0;
  double R = 1.0;
  // initial reduced state; a0 from the constraint (positive) unless a0_set
  double r0 = 3.0;
  double T0 = 0.0;
  double b0 = 1.0;
  double a0 = 0.0;
  bool a0_set = false;
  // minkowski start
  int d = 2;
  double rapidity = 1.0;
  double p0_stop = 1e3;

  long N = 100;
  double horizon = 100.0;
  double h0 = 1e-3;
  double h_min = 1e-14;
  double step_exponent = 1.0;
  double kappa = 0.01;
  double M_escape = 50.0;
  double r_stop = 1e-6;
  double eps_b = 1e-8;
  double eps_T = 1e-3;
  std::uint64_t seed = 1;
  int max_excursions = -1;
  long max_steps = 20'000'000;
  bool stop_at_horizon = false;

  double tail_fraction = 0.5;
  int n_min = 5;
  double theta_tol = 0.05;
  double band_tol = 0.02;

  std::string output_dir;
};

// key=value lines (# comments) or a JSON object; unknown keys throw.
EnsembleConfig load_config(const std::string& path);
EnsembleConfig parse_config(const std::string& text);
void set_config_value(EnsembleConfig& c, const std::string& key, const std::string& value);
std::map<std::string, std::string> config_values(const EnsembleConfig& c);
void validate(const EnsembleConfig& c);
// Output directory: explicit value, else RELDIFF_OUTPUT_DIR, else ".".
std::string output_directory(const EnsembleConfig& c);

ReducedState initial_state(const EnsembleConfig& c);
ExtendPolicy make_policy(const EnsembleConfig& c);

struct Fate {
  std::string tag = "undecided";  // escape, confined, undecided
  Vec3 theta_inf = Vec3::Zero();
  double a_final = 0.0;
  double rho_hat = kNaN;
  double ell_hat = kNaN;
  Vec3 plane = Vec3::Zero();
  int crossings = 0;       // singularity crossings over the whole run
  int tail_crossings = 0;  // in the tail window
  double plane_drift = kNaN;  // max angle between plane directions at tops in the tail window
  std::string diagnostics;
};
Fate classify_fate(const TrajectoryResult& t, const EnsembleConfig& c);

struct EnsembleSummary {
  long N = 0;
  long escaped = 0, confined = 0, undecided = 0, failed = 0, captured = 0, truncated = 0;
  Interval escape_ci{0, 0}, confined_ci{0, 0}, capture_ci{0, 0};
  // singularity hits
  long hits = 0;
  long timing_violations = 0;    // not D < D' <= D + pi R/2
  long half_violations = 0;      // D_out - D' > pi R/2
  long duration_violations = 0;  // D_out - D > 3 pi R^2 / (4 min b)
  double slope_min = kNaN, slope_max = kNaN, slope_mean = kNaN;
  double T_scaling_max = kNaN;
  long slope_fits = 0;
  double max_orth_defect = 0.0;
  double max_series_diff = 0.0;
  long series_violations = 0;
  // confinement
  std::vector<double> rho_hat, ell_rel_residual, plane_drift, swing_rel_dev, swing_down;
  long ell_bound_samples = 0, ell_bound_violations = 0;
  std::vector<std::string> failures;
};

struct EnsembleRun {
  EnsembleSummary summary;
  std::vector<Fate> fates;
};
EnsembleRun run_ensemble(const EnsembleConfig& c);

// Minkowski ensembles: exit angles (d = 2) of N paths from the boosted start along e1.
std::vector<double> scatter_angles(const EnsembleConfig& c);
// One such path, every record_every-th step plus the last.
std::vector<MinkowskiState> minkowski_path(const EnsembleConfig& c, std::uint64_t index, int record_every = 1);

struct ConfinementPoint {
  double b0;
  long runs, confined, near;  // near: confined with |rho_hat - r0| < eps
  Interval ci;
};
std::vector<ConfinementPoint> confinement_target_test(EnsembleConfig c, const std::vector<double>& b0s, double eps);

}  // namespace reldiff
