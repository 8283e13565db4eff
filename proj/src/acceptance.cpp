#include "reldiff/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>

#include "reldiff/frame_flow.hpp"
#include "reldiff/geodesics.hpp"
#include "reldiff/harness.hpp"
#include "reldiff/minkowski.hpp"
#include "reldiff/stats.hpp"

namespace reldiff {

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  std::ostringstream o;
  o.precision(4);
  o << x;
  return o.str();
}

std::array<double, 3> normals3(const CounterRng& rng, std::uint64_t step) {
  return {rng.normal(step, 0), rng.normal(step, 1), rng.normal(step, 2)};
}

// ---- 1: constraint conservation ----
Outcome constraint_conservation() {
  EnsembleConfig c;
  c.r0 = 3.0;
  c.T0 = 0.5;
  c.b0 = 1.0;
  c.horizon = 20.0;
  c.h0 = 1e-3;
  c.seed = 101;
  const ReducedState st0 = initial_state(c);
  const ExtendPolicy pol = make_policy(c);
  double worst = 0.0;
  long failed = 0;
  std::vector<ReducedState> probes;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const TrajectoryResult t = extend_trajectory(st0, pol, c.seed, i);
    failed += t.failed;
    worst = std::max(worst, t.max_residual);
    worst = std::max(worst, std::abs(pseudo_norm_residual(t.final_state, c.R)));
    if (t.final_state.r > 1.2 * c.R && probes.size() < 50) probes.push_back(t.final_state);
  }
  // order of the residual before correction, same noise at h and h/2
  double d1 = 0.0, d2 = 0.0;
  const CounterRng rng(102, 0);
  std::uint64_t k = 0;
  for (const ReducedState& st : probes)
    for (int j = 0; j < 40; ++j, ++k) {
      const auto z = normals3(rng, k);
      d1 += std::abs(reduced_step(st, c.sigma, c.R, 1e-3, z).pre_residual);
      d2 += std::abs(reduced_step(st, c.sigma, c.R, 5e-4, z).pre_residual);
    }
  const double ratio = d1 / d2;
  const bool pass = failed == 0 && worst <= 1e-10 && std::abs(ratio - 2.0) <= 0.2 && probes.size() >= 20;
  return {pass, "max residual " + fmt(worst) + ", pre-correction ratio h/(h/2) " + fmt(ratio) + " over " +
                    std::to_string(probes.size()) + " states, failures " + std::to_string(failed)};
}

// ---- 2: covariation law ----
Outcome covariation_law() {
  ReducedState st;
  st.r = 3.0;
  st.b = 1.5;
  st.T = 0.4;
  st.a = constraint_a(st.r, st.b, st.T, 1.0, 1.0);
  const double sigma = 1.0, h = 1e-4;
  const int N = 100000;
  const CounterRng rng(201, 0);
  Eigen::MatrixXd rows(N, 3);
  for (int i = 0; i < N; ++i) {
    const ReducedState n = reduced_step(st, sigma, 1.0, h, normals3(rng, static_cast<std::uint64_t>(i))).state;
    rows(i, 0) = n.a - st.a;
    rows(i, 1) = n.b - st.b;
    rows(i, 2) = n.T - st.T;
  }
  const Mat C = sample_covariance(rows), SE = covariance_se(rows);
  const Mat3 K = covariation(st, 1.0, sigma) * h;
  double worst = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(C(i, j) - K(i, j)) / SE(i, j));
  return {worst <= 3.0, "max |cov - K'h| / SE = " + fmt(worst)};
}

// ---- 3: geodesic regression ----
struct Representative {
  std::string tag;
  double a, b, r0;
  int dir;
};

std::vector<Representative> representatives() {
  const double R = 1.0;
  const auto c4 = *critical_points(4.0, R), c19 = *critical_points(1.9, R), c175 = *critical_points(1.75, R);
  return {
      {"1.1", 1.2, 1.0, 2.0, 1},
      {"1.2", 0.9, 1.0, 2.0, 1},
      {"1.3", std::sqrt(8.0 / 9.0), std::sqrt(3.0), 2.0, 1},
      {"2.1", 1.8, 4.0, 2.0, 1},
      {"2.2.1", 0.9, 4.0, 0.5, -1},
      {"2.2.2", std::sqrt(0.98), 1.9, 3.0, 1},
      {"2.3", std::sqrt(c4.P1), 4.0, 3.0, 1},
      {"2.4", std::sqrt(1.5), 4.0, 40.0, -1},
      {"2.5.1", std::sqrt(c19.P1), 1.9, 4.0, -1},
      {"2.5.2", std::sqrt(c19.P2), 1.9, 1.0 / c19.u2, 1},
      {"2.6", std::sqrt(0.5 * (c175.P1 + c175.P2)), 1.75, 3.0, 1},
  };
}

Outcome geodesic_regression() {
  const double R = 1.0, h = 1e-4, floor_r = 0.3 * R;
  const int every = 100;
  std::ostringstream det;
  bool pass = true;
  MetricProvider ef;
  ef.chart = Chart::ef_inward;
  ef.R = R;
  for (const Representative& rep : representatives()) {
    if (case_name(classify_timelike(rep.a, rep.b, rep.r0, R).tag) != rep.tag) {
      pass = false;
      det << rep.tag << ": misclassified; ";
      continue;
    }
    const TimelikeOrbit orb(rep.a, rep.b, rep.r0, rep.dir, R);
    const double s_max = orb.periodic() ? orb.period() : 50.0;

    ReducedState red;
    red.r = rep.r0;
    red.a = rep.a;
    red.b = rep.b;
    red.T = orb.circular() ? 0.0 : constraint_T(rep.r0, rep.a, rep.b, R, rep.dir);

    Vec x(4), v(4);
    x << 0.0, rep.r0, pi / 2, 0.0;
    v << (1.0 + rep.b * rep.b / (rep.r0 * rep.r0)) / (rep.a - red.T), red.T, 0.0, rep.b / (rep.r0 * rep.r0);
    FrameState fs = make_frame_state(ef, frame_from_velocity(ef, x, v));

    long steps = std::lround(s_max / h);
    if (orb.singular())
      for (long i = every; i <= steps; i += every)
        if (orb.r_at(i * h) < floor_r) {
          steps = i - every;
          break;
        }
    double err_red = 0.0, err_ff = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      for (long i = 1; i <= steps; ++i) {
        red = reduced_step(red, 0.0, R, h, {0.0, 0.0, 0.0}).state;
        fs = ito_frame_step(fs, ef, 0.0, h, Vec::Zero(3)).state;
        if (i % every != 0 && i != steps) continue;
        const double r_exact = orb.r_at(i * h);
        err_red = std::max(err_red, std::abs(red.r - r_exact) / r_exact);
        err_ff = std::max(err_ff, std::abs(fs.frame.x(1) - r_exact) / r_exact);
      }
    } catch (const std::exception& e) {
      pass = false;
      det << rep.tag << ": " << e.what() << "; ";
      continue;
    }
    const bool ok = err_red <= 1e-5 && err_ff <= 1e-5;
    pass = pass && ok;
    det << rep.tag << " " << fmt(err_red) << "/" << fmt(err_ff) << (ok ? "" : " FAIL") << " ["
        << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()) << "s]; ";
  }
  return {pass, "max relative r error reduced/frame: " + det.str()};
}

// ---- shared schwarzschild ensembles ----

EnsembleConfig escape_config() {
  EnsembleConfig c;
  c.sigma = 1.0;
  c.R = 1.0;
  c.r0 = 3.0;
  c.T0 = 4.0 + 4.0 / (c.R * c.sigma * c.sigma);
  c.b0 = 1.0;
  c.N = 2000;
  c.horizon = 200.0;
  c.stop_at_horizon = true;
  c.seed = 401;
  return c;
}

EnsembleConfig capture_config() {
  EnsembleConfig c;
  c.sigma = 1.0;
  c.R = 1.0;
  c.r0 = 1.4;
  c.T0 = -2.0;
  c.b0 = 1.0;
  c.N = 2000;
  c.horizon = 200.0;
  c.max_excursions = 1;
  c.seed = 501;
  return c;
}

const EnsembleSummary& capture_summary() {
  static std::optional<EnsembleSummary> s;
  if (!s) s = run_ensemble(capture_config()).summary;
  return *s;
}

// ---- 4, 5 ----
Outcome escape_bound() {
  const EnsembleConfig c = escape_config();
  const ReducedState st0 = initial_state(c);
  const ExtendPolicy pol = make_policy(c);
  long esc = 0, failed = 0, settled = 0;
  for (long i = 0; i < c.N; ++i) {
    const TrajectoryResult t = extend_trajectory(st0, pol, c.seed, static_cast<std::uint64_t>(i));
    failed += t.failed;
    esc += t.escaped;
    settled += classify_fate(t, c).tag == "escape";
  }
  const double frac = static_cast<double>(esc) / c.N;
  const double thr = 0.5 - 3.0 * std::sqrt(0.25 / c.N);
  return {frac >= thr && failed == 0, "escape fraction " + fmt(frac) + " (threshold " + fmt(thr) +
                                          "), angle settled in " + std::to_string(settled) + ", failures " +
                                          std::to_string(failed)};
}

Outcome capture_bound() {
  const EnsembleSummary& s = capture_summary();
  const double p = static_cast<double>(s.captured) / s.N;
  const double thr = 1.0 / std::sqrt(2.0) - 3.0 * binomial_se(1.0 / std::sqrt(2.0), s.N);
  return {p >= thr && s.failed == 0, "capture fraction " + fmt(p) + " (threshold " + fmt(thr) + "), failures " +
                                         std::to_string(s.failed)};
}

// ---- 6 - 9 ----
Outcome singularity_timing() {
  const EnsembleSummary& s = capture_summary();
  return {s.hits >= 500 && s.timing_violations == 0,
          std::to_string(s.hits) + " captures, " + std::to_string(s.timing_violations) + " violations of D < D' <= D + pi R/2"};
}

Outcome singularity_exponent() {
  const EnsembleSummary& s = capture_summary();
  const bool pass = s.slope_fits >= 100 && s.slope_min >= 0.38 && s.slope_max <= 0.42 && s.T_scaling_max <= 5e-3;
  return {pass, std::to_string(s.slope_fits) + " fits, slope in [" + fmt(s.slope_min) + ", " + fmt(s.slope_max) +
                    "] mean " + fmt(s.slope_mean) + ", max |T r^1.5 + b sqrt R|/(b sqrt R) " + fmt(s.T_scaling_max)};
}

Outcome excursion_bounds() {
  const EnsembleSummary& s = capture_summary();
  const bool pass = s.hits > 0 && s.timing_violations == 0 && s.half_violations == 0 && s.duration_violations == 0;
  return {pass, std::to_string(s.hits) + " excursions; violations: in->singularity " + std::to_string(s.timing_violations) +
                    ", singularity->out " + std::to_string(s.half_violations) + ", duration " +
                    std::to_string(s.duration_violations)};
}

Outcome rotation_transport() {
  const EnsembleSummary& s = capture_summary();
  const bool pass = s.hits > 0 && s.max_orth_defect <= 1e-12 && s.series_violations == 0;
  return {pass, "max ||V^T V - I|| " + fmt(s.max_orth_defect) + ", series K=8 max diff " + fmt(s.max_series_diff) +
                    ", bound violations " + std::to_string(s.series_violations)};
}

// ---- 10: confinement ----
Outcome confinement_physics() {
  EnsembleConfig c;
  c.sigma = 1.0;
  c.R = 1.0;
  c.r0 = 1.2;
  c.T0 = 0.0;
  c.b0 = 1e4;
  c.N = 200;
  c.horizon = 500.0;
  c.max_excursions = 400;
  c.seed = 1001;
  const EnsembleRun run = run_ensemble(c);
  const EnsembleSummary& s = run.summary;
  auto worst = [](const std::vector<double>& v) {
    double w = 0.0;
    for (double x : v) w = std::isnan(x) ? INFINITY : std::max(w, x);
    return w;
  };
  const double ell = worst(s.ell_rel_residual), drift = worst(s.plane_drift), swing = worst(s.swing_rel_dev);
  const bool pass = s.confined > 0 && s.failed == 0 && ell <= 0.05 && drift <= 0.05 && swing <= 0.10 &&
                    s.swing_rel_dev.size() == static_cast<size_t>(s.confined);
  std::string down;
  if (!s.swing_down.empty()) down = ", median downcrossing swing " + fmt(median(s.swing_down));
  return {pass, std::to_string(s.confined) + "/" + std::to_string(s.N) + " confined; max ell residual " + fmt(ell) +
                    ", max plane drift " + fmt(drift) + ", max swing deviation from Psi " + fmt(swing) +
                    (s.swing_rel_dev.empty() ? "" : " (median " + fmt(median(s.swing_rel_dev)) + ")") + down +
                    ", failures " + std::to_string(s.failed)};
}

// ---- 11: deflection ----
Outcome deflection() {
  const double R = 1.0;
  const double psi_R = deflection_integral(R, R);
  bool mono = true;
  double prev = -INFINITY;
  std::vector<double> grid;
  for (int k = 0; k <= 4; ++k) grid.push_back(1.0 + 0.1 * k);
  grid.push_back(1.49);
  for (double rho : grid) {
    const double v = deflection_integral(rho * R, R);
    mono = mono && v > prev;
    prev = v;
  }
  const bool value = std::abs(psi_R - pi / 2) <= 1e-6;
  return {value && mono, "Psi(R) = " + fmt(psi_R) + " (expected pi/2), strictly increasing on grid: " +
                             std::string(mono ? "yes" : "no")};
}

// ---- 12: minkowski scattering ----
Outcome minkowski_scattering() {
  EnsembleConfig c;
  c.space = "minkowski";
  c.d = 2;
  c.sigma = 1.0;
  c.rapidity = 1.0;
  c.N = 10000;
  c.h0 = 2e-3;
  c.p0_stop = 1e3;
  c.horizon = 1e6;
  c.seed = 1201;
  const std::vector<double> ang = scatter_angles(c);
  Vec dir = Vec::Zero(2);
  dir(0) = 1.0;
  const Vec p0 = minkowski_start(2, c.rapidity, dir).p;
  const double D = ks_statistic(ang, [&](double x) { return scattering_cdf_2d(p0, x); });
  const double p = ks_pvalue(D, c.N);
  return {p > 0.01, "KS D = " + fmt(D) + ", p = " + fmt(p) + " over " + std::to_string(c.N) + " paths"};
}

// ---- 13: ricci ----
Outcome ricci_vanishing() {
  std::mt19937_64 gen(1301);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double R = 1.0;
  double worst = 0.0;
  std::ostringstream det;
  for (Chart ch : {Chart::spherical, Chart::ef_inward, Chart::ef_outward, Chart::kruskal, Chart::minkowski}) {
    MetricProvider p;
    p.chart = ch;
    p.R = R;
    double w = 0.0;
    for (int i = 0; i < 100; ++i) {
      const double th = 0.3 + (pi - 0.6) * U(gen), ps = 2 * pi * U(gen);
      Vec x(4);
      switch (ch) {
        case Chart::spherical: x << 20 * U(gen) - 10, 1.2 + 8.8 * U(gen), th, ps; break;
        case Chart::ef_inward:
        case Chart::ef_outward: x << 20 * U(gen) - 10, 0.3 + 9.7 * U(gen), th, ps; break;
        case Chart::kruskal: {
          const double r = 0.3 + 4.7 * U(gen), t = 4 * U(gen) - 2;
          const KsPoint k = r > R ? ks_from_schwarzschild(t, r, R) : ks_from_interior(t, r, R);
          x << k.v, k.u, th, ps;
          break;
        }
        case Chart::minkowski: x << U(gen), U(gen), U(gen), U(gen); break;
      }
      w = std::max(w, ricci(p, x, 1e-5).cwiseAbs().maxCoeff());
    }
    det << chart_name(ch) << " " << fmt(w) << "; ";
    worst = std::max(worst, w);
  }
  return {worst <= 1e-6, "max |Ric| per chart: " + det.str()};
}

struct Entry {
  const char* name;
  std::function<Outcome()> run;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = {
      {"constraint conservation", constraint_conservation},
      {"covariation law", covariation_law},
      {"geodesic regression", geodesic_regression},
      {"escape lower bound", escape_bound},
      {"capture lower bound", capture_bound},
      {"singularity timing", singularity_timing},
      {"singularity exponent", singularity_exponent},
      {"excursion bounds", excursion_bounds},
      {"rotation-group transport", rotation_transport},
      {"confinement physics", confinement_physics},
      {"deflection integral", deflection},
      {"minkowski scattering", minkowski_scattering},
      {"ricci vanishing", ricci_vanishing},
  };
  return e;
}

}  // namespace

CriterionResult run_criterion(int id) {
  if (id < 1 || id > kCriteria) throw std::out_of_range("run_criterion: id in 1.." + std::to_string(kCriteria));
  const Entry& e = entries()[static_cast<size_t>(id - 1)];
  CriterionResult r;
  r.id = id;
  r.name = e.name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Outcome o = e.run();
    r.pass = o.pass;
    r.detail = o.detail;
  } catch (const std::exception& ex) {
    r.pass = false;
    r.detail = std::string("exception: ") + ex.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace reldiff
