#pragma once
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "reldiff/geometry.hpp"
#include "reldiff/rng.hpp"
#include "reldiff/schwarzschild.hpp"

namespace reldiff {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct KsPoint {
  double u = 0.0;
  double v = 0.0;
};

KsPoint ks_from_schwarzschild(double t, double r, double R);  // r > R
KsPoint ks_from_interior(double t, double r, double R);       // 0 < r < R, future interior
// Inverse of r -> (r/R - 1) e^{r/R} on r >= 0.
double r_of_w(double w, double R);
double tortoise(double r, double R);  // r + R log|r/R - 1|

struct EfCoords {
  double u_minus = kNaN;  // NaN where undefined (u + v = 0)
  double u_plus = kNaN;   // NaN where undefined (u - v = 0)
};
EfCoords ef_coordinates(double u, double v, double R);

// Four regions of the Kruskal plane, named by the sign pattern of (u+v, u-v).
enum class Region { exterior, exterior_mirror, future_interior, past_interior };
std::string region_name(Region g);
Region region_of(double r, double a, double T, double R);
// (u, v) from EF data and the region; the other orientation is (-u, -v).
KsPoint ks_from_ef(double u_minus, double u_plus, Region g, double R);

// EF bookkeeping along a reduced path. Only the coordinate that stays finite
// (u- when a T <= 0, u+ otherwise) is integrated; the other follows from
// u- - u+ = 2 tortoise(r) away from r = R.
struct EfState {
  ReducedState red;
  double u_reg = 0.0;
  bool reg_minus = true;

  EfCoords coords(double R) const;
  void choose_regular(double R);
};
EfState ef_start(const ReducedState& red, double t0, double R);

// du-/ds and du+/ds written in the forms regular across the horizon.
double ef_rate(const ReducedState& st, bool minus);

struct EfStepOutcome {
  EfState state;
  double pre_residual = 0.0;
  double omega = 0.0;  // rotation angle of theta in the orbital plane
  bool a_corrected = false;
  bool sign_flip_a = false;
};
// noise: (w, beta, gamma, angular beta)
EfStepOutcome ef_step(const EfState& st, double sigma, double R, double h, const std::array<double, 4>& noise,
                      double eps_T = 1e-3);

// Radial-clock legs inside the hole.
struct RadialSample {
  double s = 0.0, r = 0.0, a = 0.0, b = 0.0, T = 0.0;
  double ds = 0.0;       // proper time of the step ending here
  double omega = 0.0;    // integral of b/r^2 ds over the step ending here
  double chi_var = 0.0;  // integral of r^2/b^2 ds over the step ending here
  double du = 0.0;       // increment of the regular EF coordinate
  double xi = 0.0;       // angular normal used for the step
};

struct LegOptions {
  double sigma = 1.0;
  double R = 1.0;
  StepRule rule;
  double r_target = 1e-6;
  bool reg_minus = true;
};
// Integrates (a, b) with r as the clock from st to r_target; the first sample is st.
std::vector<RadialSample> radial_leg(const ReducedState& st, const LegOptions& opt, const CounterRng& rng,
                                     std::uint64_t& step);

// Exact rotation-group integration of dV = V o dA~ along a leg.
std::vector<Mat3> angular_transport_solve(const std::vector<RadialSample>& leg, const Mat3& V_start, double sigma);
// Truncated series V_start (1 + sum_{k<=K} J_k) with left-point (Ito) iterated sums.
std::vector<Mat3> angular_series(const std::vector<RadialSample>& leg, const Mat3& V_start, double sigma, int K);
// Constant C of the series tail bound measured from the leg, and the bound itself.
// offset is the proper time from the singularity to the first sample of the leg.
double series_constant(const std::vector<RadialSample>& leg, double offset, double sigma);
double series_tail_bound(double C, int K);

// Shell (0, r_stop] integrals with (a, b) frozen.
struct ShellIntegrals {
  double ds = 0.0;
  double omega = 0.0;
  double chi_var = 0.0;
  double du_minus = 0.0;  // increment of u- (inbound) over the shell
  double du_plus = 0.0;
};
ShellIntegrals shell_integrals(double a, double b, double r_stop, double R, bool inbound);

struct BoundaryPoint {
  double a = 0.0;
  double b = 0.0;
  Vec3 theta = Vec3::UnitX();
  Vec3 n = Vec3::UnitY();
  Vec3 plane = Vec3::UnitZ();
  double u_minus = 0.0;
  double D_prime = 0.0;
};

struct SingularityFit {
  BoundaryPoint bp;
  ShellIntegrals shell;
  double slope = kNaN;         // d log r / d log(D' - s) over the last decade
  double T_scaling_dev = kNaN; // |T r^{3/2} + b sqrt(R)| / (b sqrt(R)) at r_stop
  double semi_tangent_u = kNaN; // du-/dr at r_stop
  double semi_tangent_x = kNaN; // |d(r theta)/dr - theta| at r_stop
  int tail_samples = 0;
};
// inbound leg ending at r_stop; V_end is the angular frame at r_stop.
SingularityFit detect_singularity(const std::vector<RadialSample>& leg, const Mat3& V_end, double u_minus_end,
                                  double R);

struct RegenerationResult {
  std::vector<RadialSample> leg;  // starts at r_stop, ends at r = R
  std::vector<Mat3> V;
  ReducedState exit_state;
  ShellIntegrals shell;
  double u_reg_exit = 0.0;
  bool reg_minus = false;
};
RegenerationResult regenerate(const BoundaryPoint& bp, double r_stop, const LegOptions& opt, const CounterRng& rng,
                              std::uint64_t& step);

// ---- orchestration ----

enum class EventKind { horizon_first, horizon_in, singularity, horizon_out, escape_declared };
std::string event_name(EventKind k);

struct Event {
  EventKind kind;
  double s, r, a, b, T;
};
using EventLog = std::vector<Event>;

struct PathSample {
  double s, r, a, b, T;
  Vec3 theta, n;
  std::string chart;
  std::string event;
  double u, v, u_alt, v_alt, u_minus, u_plus;
};
using ExtendedPath = std::vector<PathSample>;

struct ExtendPolicy {
  double R = 1.0;
  double sigma = 1.0;
  double horizon = 100.0;
  StepRule rule;
  double r_stop = 1e-6;
  double M_escape = 50.0;
  double escape_margin = 0.0;  // require a^2 - 1 > margin
  double eps_T = 1e-3;
  double eps_b = 1e-8;
  long max_steps = 20'000'000;
  int max_excursions = -1;  // stop after this many completed excursions (horizon-out); -1 = unlimited
  bool stop_at_horizon = false;
  int record_every = 0;     // decimation of the recorded path; 0 records events only
  bool keep_legs = false;   // keep angular data of regenerated legs for rotation checks
};

struct HitRecord {
  double D = kNaN, D_prime = kNaN, D_out = kNaN;
  double a = kNaN, b = kNaN;
  double min_b = kNaN;  // over [D, D_out]
  SingularityFit fit;
  double max_orth_defect = 0.0;  // ||V^T V - I|| along both legs
  double series_diff = kNaN;     // series vs rotation solution on s - D' <= 0.1, K = 8
  double series_bound = kNaN;
};

struct OrbitRecord {
  double s_singular = kNaN;
  double s_top = kNaN;
  double r_top = kNaN;
  double ell_top = kNaN;     // a/b at the top
  Vec3 plane_top = Vec3::Zero();
  double swing_up = kNaN;    // singularity -> top
  double swing_down = kNaN;  // top -> next singularity
};

struct TrajectoryResult {
  EventLog events;
  ExtendedPath path;
  std::vector<HitRecord> hits;
  std::vector<OrbitRecord> orbits;
  ReducedState final_state;
  bool escaped = false;
  bool captured = false;  // reached r = R
  bool truncated = false; // step or excursion budget ended the run before the horizon
  bool failed = false;
  std::string failure;
  Vec3 theta_limit = Vec3::Zero();
  double theta_tail = kNaN;  // remaining swing estimate at escape declaration
  double max_residual = 0.0;
  long steps = 0;
  long ell_bound_samples = 0;
  long ell_bound_violations = 0;
  long a_corrections = 0;
  long sign_flips = 0;
};

TrajectoryResult extend_trajectory(const ReducedState& initial, const ExtendPolicy& pol, std::uint64_t seed,
                                   std::uint64_t index, double t0 = 0.0);

}  // namespace reldiff
