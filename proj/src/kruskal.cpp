#include "reldiff/kruskal.hpp"

#include "reldiff/quadrature.hpp"
#include <boost/math/special_functions/lambert_w.hpp>
#include <cmath>
#include <stdexcept>

namespace reldiff {

namespace {

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

double abs_T(double r, double a, double b, double R) {
  return std::sqrt(std::max(0.0, a * a - horizon_factor(r, R) * (1.0 + b * b / (r * r))));
}

template <class F>
double gk(F f, double lo, double hi) {
  return integrate_gk(f, lo, hi, 12);
}

Mat3 frame_of(const Vec3& theta, const Vec3& n) { return orthonormal_frame(theta, n); }

double orth_defect(const Mat3& V) { return (V.transpose() * V - Mat3::Identity()).norm(); }

}  // namespace

double r_of_w(double w, double R) {
  if (!(w >= -1.0)) throw std::domain_error("r_of_w: w below -1 (beyond r = 0)");
  if (w == -1.0) return 0.0;
  double x = 1.0 + boost::math::lambert_w0(w / std::exp(1.0));
  for (int i = 0; i < 3 && x > 0.0; ++i) {
    const double ex = std::exp(x);
    const double g = (x - 1.0) * ex - w;
    const double dg = x * ex;
    if (dg == 0.0) break;
    x -= g / dg;
  }
  return R * std::max(0.0, x);
}

double tortoise(double r, double R) { return r + R * std::log(std::abs(r / R - 1.0)); }

KsPoint ks_from_schwarzschild(double t, double r, double R) {
  if (!(r > R)) throw std::domain_error("ks_from_schwarzschild: needs r > R");
  const double m = std::sqrt(r / R - 1.0) * std::exp(r / (2.0 * R));
  return {m * std::cosh(t / (2.0 * R)), m * std::sinh(t / (2.0 * R))};
}

KsPoint ks_from_interior(double t, double r, double R) {
  if (!(r > 0.0 && r < R)) throw std::domain_error("ks_from_interior: needs 0 < r < R");
  const double m = std::sqrt(1.0 - r / R) * std::exp(r / (2.0 * R));
  return {m * std::sinh(t / (2.0 * R)), m * std::cosh(t / (2.0 * R))};
}

EfCoords ef_coordinates(double u, double v, double R) {
  EfCoords c;
  if (u + v != 0.0) c.u_minus = 2.0 * R * std::log(std::abs(u + v));
  if (u - v != 0.0) c.u_plus = -2.0 * R * std::log(std::abs(u - v));
  return c;
}

std::string region_name(Region g) {
  switch (g) {
    case Region::exterior: return "exterior";
    case Region::exterior_mirror: return "exterior-mirror";
    case Region::future_interior: return "future-interior";
    case Region::past_interior: return "past-interior";
  }
  return "";
}

Region region_of(double r, double a, double T, double R) {
  if (r >= R) return a >= 0.0 ? Region::exterior : Region::exterior_mirror;
  return T < 0.0 ? Region::future_interior : Region::past_interior;
}

KsPoint ks_from_ef(double u_minus, double u_plus, Region g, double R) {
  double sp = 1.0, sm = 1.0;
  switch (g) {
    case Region::exterior: break;
    case Region::exterior_mirror: sp = sm = -1.0; break;
    case Region::future_interior: sm = -1.0; break;
    case Region::past_interior: sp = -1.0; break;
  }
  const double P = std::isnan(u_minus) ? 0.0 : sp * std::exp(u_minus / (2.0 * R));
  const double M = std::isnan(u_plus) ? 0.0 : sm * std::exp(-u_plus / (2.0 * R));
  return {0.5 * (P + M), 0.5 * (P - M)};
}

EfCoords EfState::coords(double R) const {
  EfCoords c;
  const bool on_h = red.r == R;
  if (reg_minus) {
    c.u_minus = u_reg;
    if (!on_h) c.u_plus = u_reg - 2.0 * tortoise(red.r, R);
  } else {
    c.u_plus = u_reg;
    if (!on_h) c.u_minus = u_reg + 2.0 * tortoise(red.r, R);
  }
  return c;
}

void EfState::choose_regular(double R) {
  const bool want = red.a * red.T <= 0.0;
  if (want == reg_minus || red.r == R) return;
  const double rs = 2.0 * tortoise(red.r, R);
  u_reg = want ? u_reg + rs : u_reg - rs;
  reg_minus = want;
}

EfState ef_start(const ReducedState& red, double t0, double R) {
  if (red.r == R) throw std::domain_error("ef_start: start off the horizon");
  EfState e;
  e.red = red;
  e.reg_minus = red.a * red.T <= 0.0;
  const double rs = tortoise(red.r, R);
  e.u_reg = e.reg_minus ? t0 + rs : t0 - rs;
  return e;
}

double ef_rate(const ReducedState& st, bool minus) {
  const double num = 1.0 + st.b * st.b / (st.r * st.r);
  return num / (minus ? st.a - st.T : st.a + st.T);
}

EfStepOutcome ef_step(const EfState& st, double sigma, double R, double h, const std::array<double, 4>& noise,
                      double eps_T) {
  const StepOutcome o = reduced_step(st.red, sigma, R, h, {noise[0], noise[1], noise[2]}, eps_T);
  EfStepOutcome out;
  out.pre_residual = o.pre_residual;
  out.a_corrected = o.a_corrected;
  out.sign_flip_a = o.sign_flip_a;
  EfState& n = out.state;
  n = st;
  n.red = o.state;

  const double r0 = st.red.r, r1 = n.red.r;
  const double rate0 = ef_rate(st.red, st.reg_minus);
  double rate1 = ef_rate(n.red, st.reg_minus);
  if (!std::isfinite(rate1)) rate1 = rate0;
  n.u_reg = st.u_reg + 0.5 * h * (rate0 + rate1);

  const double rm = 0.5 * (r0 + r1), bm = 0.5 * (st.red.b + n.red.b);
  out.omega = bm / (rm * rm) * h;
  const double chi = bm > 0.0 ? sigma * rm / bm * std::sqrt(h) * noise[3] : 0.0;
  const Mat3 V = frame_of(st.red.theta, st.red.n) * angular_rotation(out.omega, chi);
  n.red.theta = V.col(0);
  n.red.n = V.col(1);
  n.choose_regular(R);
  return out;
}

std::vector<RadialSample> radial_leg(const ReducedState& st, const LegOptions& opt, const CounterRng& rng,
                                     std::uint64_t& step) {
  const double R = opt.R;
  const double dir = sgn(st.T);
  if ((opt.r_target - st.r) * dir < 0.0) throw std::invalid_argument("radial_leg: target behind the direction of T");
  std::vector<RadialSample> leg;
  leg.push_back({st.s, st.r, st.a, st.b, st.T, 0.0, 0.0, 0.0, 0.0, 0.0});
  ReducedState cur = st;
  while (true) {
    const double remaining = std::abs(opt.r_target - cur.r);
    if (remaining <= 1e-15 * std::max(cur.r, opt.r_target)) break;
    double dr = std::min({opt.rule.kappa * cur.r, std::abs(cur.T) * opt.rule.h0, remaining});
    if (remaining - dr < 1e-3 * dr) dr = remaining;
    const bool land = dr == remaining;
    const std::array<double, 3> z{rng.normal(step, 0), rng.normal(step, 1), rng.normal(step, 2)};
    const double xi = rng.normal(step, 3);
    ++step;

    // frozen-coefficient integrals over [r0, r1]
    const double r0 = cur.r, r1 = land ? opt.r_target : cur.r + dir * dr, rm = 0.5 * (r0 + r1);
    const double a = cur.a, b = cur.b;
    double w_ds = 0.0, w_om = 0.0, w_cv = 0.0, w_du = 0.0;
    const double rr[3] = {r0, rm, r1}, wt[3] = {1.0, 4.0, 1.0};
    for (int k = 0; k < 3; ++k) {
      const double T = abs_T(rr[k], a, b, R);
      const double Ts = dir * T;
      const ReducedState tmp{rr[k], a, b, Ts, Vec3::UnitX(), Vec3::UnitY(), 0.0};
      w_ds += wt[k] / T;
      w_om += wt[k] * b / (rr[k] * rr[k] * T);
      w_cv += wt[k] * rr[k] * rr[k] / (b * b * T);
      w_du += wt[k] * ef_rate(tmp, opt.reg_minus) / T;
    }
    const double c = dr / 6.0;

    const StepOutcome o = radial_step(cur, opt.sigma, R, dir * dr, z);
    ReducedState n = o.state;
    if (land) {
      n.r = opt.r_target;
      n.T = constraint_T(n.r, n.a, n.b, R, dir);
    }
    if (!(n.b > 0.0)) throw std::domain_error("radial_leg: b reached zero");
    leg.push_back({n.s, n.r, n.a, n.b, n.T, c * w_ds, c * w_om, c * w_cv, c * w_du, xi});
    cur = n;
    if (land) break;
  }
  return leg;
}

std::vector<Mat3> angular_transport_solve(const std::vector<RadialSample>& leg, const Mat3& V_start, double sigma) {
  std::vector<Mat3> V;
  V.reserve(leg.size());
  V.push_back(V_start);
  for (size_t i = 1; i < leg.size(); ++i) {
    const double chi = sigma * std::sqrt(leg[i].chi_var) * leg[i].xi;
    V.push_back(V.back() * angular_rotation(leg[i].omega, chi));
  }
  return V;
}

std::vector<Mat3> angular_series(const std::vector<RadialSample>& leg, const Mat3& V_start, double sigma, int K) {
  std::vector<Mat3> J(K + 1, Mat3::Zero());
  J[0] = Mat3::Identity();
  std::vector<Mat3> out;
  out.reserve(leg.size());
  out.push_back(V_start);
  for (size_t i = 1; i < leg.size(); ++i) {
    const double om = leg[i].omega;
    const double chi = sigma * std::sqrt(leg[i].chi_var) * leg[i].xi;
    const double ito = 0.5 * sigma * sigma * leg[i].chi_var;
    Mat3 dA;
    dA << 0.0, -om, 0.0, om, -ito, -chi, 0.0, chi, -ito;
    for (int k = K; k >= 1; --k) J[k] += J[k - 1] * dA;
    Mat3 S = Mat3::Zero();
    for (int k = 0; k <= K; ++k) S += J[k];
    out.push_back(V_start * S);
  }
  return out;
}

double series_constant(const std::vector<RadialSample>& leg, double offset, double sigma) {
  double C = 1.0;
  double x = offset;
  for (const RadialSample& p : leg) {
    x += p.ds;
    if (!(x > 0.0) || x > 1.0) continue;
    C = std::max(C, p.b / (p.r * p.r) * std::pow(x, 0.8));
    if (sigma != 0.0) {
      C = std::max(C, sigma * p.r / p.b / std::pow(x, 0.4));
      C = std::max(C, sigma * sigma * p.r * p.r / (p.b * p.b));
    }
  }
  return C;
}

double series_tail_bound(double C, int K) {
  double sum = 0.0;
  for (int k = K + 1; k < K + 400; ++k) {
    const double lt = k * std::log(5.0 * C) - 0.5 * std::lgamma(k + 1.0);
    const double t = std::exp(lt);
    sum += t;
    if (k > 25.0 * C * C + K && t < 1e-17 * sum) break;
  }
  return 2.0 * sum;
}

ShellIntegrals shell_integrals(double a, double b, double r_stop, double R, bool inbound) {
  const double Ts = inbound ? -1.0 : 1.0;
  const double ys = std::sqrt(r_stop);
  ShellIntegrals s;
  s.ds = gk([&](double y) { return 2.0 * y / abs_T(y * y, a, b, R); }, 0.0, ys);
  s.omega = gk([&](double y) { return 2.0 * b / (y * y * y * abs_T(y * y, a, b, R)); }, 0.0, ys);
  s.chi_var = gk([&](double y) { return 2.0 * y * y * y * y * y / (b * b * abs_T(y * y, a, b, R)); }, 0.0, ys);
  auto du = [&](bool minus) {
    return gk(
        [&](double y) {
          const double r = y * y, T = abs_T(r, a, b, R);
          const ReducedState tmp{r, a, b, Ts * T, Vec3::UnitX(), Vec3::UnitY(), 0.0};
          return 2.0 * y * ef_rate(tmp, minus) / T;
        },
        0.0, ys);
  };
  s.du_minus = du(true);
  s.du_plus = du(false);
  return s;
}

SingularityFit detect_singularity(const std::vector<RadialSample>& leg, const Mat3& V_end, double u_minus_end,
                                  double R) {
  if (leg.empty() || !(leg.back().T < 0.0) || !(leg.back().r < R))
    throw std::invalid_argument("detect_singularity: path has not entered r < R with T < 0");
  const RadialSample& e = leg.back();
  SingularityFit fit;
  const ShellIntegrals sh = shell_integrals(e.a, e.b, e.r, R, true);
  fit.bp.a = e.a;
  fit.bp.b = e.b;
  fit.bp.D_prime = e.s + sh.ds;
  const Mat3 V = V_end * angular_rotation(sh.omega, 0.0);
  fit.bp.theta = V.col(0);
  fit.bp.n = V.col(1);
  fit.bp.plane = V.col(2);
  fit.bp.u_minus = u_minus_end + sh.du_minus;
  fit.shell = sh;

  // regression of log r on log(D' - s) over the final decade
  // time to go D' - s is accumulated backwards from the step sizes, since it
  // falls far below the resolution of s itself
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  double to_go = sh.ds;
  for (size_t i = leg.size(); i-- > 0;) {
    const RadialSample& p = leg[i];
    if (i + 1 < leg.size()) to_go += leg[i + 1].ds;
    if (p.r > 10.0 * e.r * (1.0 + 1e-12)) break;
    const double x = std::log(to_go), y = std::log(p.r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  fit.tail_samples = n;
  if (n >= 3) fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double ref = e.b * std::sqrt(R);
  fit.T_scaling_dev = std::abs(e.T * std::pow(e.r, 1.5) + ref) / ref;
  const ReducedState tmp{e.r, e.a, e.b, e.T, Vec3::UnitX(), Vec3::UnitY(), 0.0};
  fit.semi_tangent_u = std::abs(ef_rate(tmp, true) / e.T);
  fit.semi_tangent_x = e.b / (e.r * std::abs(e.T));
  return fit;
}

RegenerationResult regenerate(const BoundaryPoint& bp, double r_stop, const LegOptions& opt, const CounterRng& rng,
                              std::uint64_t& step) {
  if (!(bp.b > 0.0)) throw std::invalid_argument("regenerate: b must be positive");
  const double R = opt.R;
  RegenerationResult g;
  g.shell = shell_integrals(bp.a, bp.b, r_stop, R, false);
  ReducedState st;
  st.r = r_stop;
  st.a = bp.a;
  st.b = bp.b;
  st.T = abs_T(r_stop, bp.a, bp.b, R);
  st.s = bp.D_prime + g.shell.ds;
  const Mat3 V0 = frame_of(bp.theta, bp.n) * angular_rotation(g.shell.omega, 0.0);
  st.theta = V0.col(0);
  st.n = V0.col(1);

  g.reg_minus = st.a * st.T <= 0.0;
  const double u_minus = bp.u_minus + g.shell.du_minus;
  double u = g.reg_minus ? u_minus : u_minus - 2.0 * tortoise(r_stop, R);

  LegOptions o = opt;
  o.r_target = R;
  o.reg_minus = g.reg_minus;
  g.leg = radial_leg(st, o, rng, step);
  g.V = angular_transport_solve(g.leg, V0, opt.sigma);
  for (size_t i = 1; i < g.leg.size(); ++i) u += g.leg[i].du;
  g.u_reg_exit = u;
  const RadialSample& e = g.leg.back();
  g.exit_state.r = e.r;
  g.exit_state.a = e.a;
  g.exit_state.b = e.b;
  g.exit_state.T = e.T;
  g.exit_state.s = e.s;
  g.exit_state.theta = g.V.back().col(0);
  g.exit_state.n = g.V.back().col(1);
  return g;
}

std::string event_name(EventKind k) {
  switch (k) {
    case EventKind::horizon_first: return "horizon-first";
    case EventKind::horizon_in: return "horizon-in";
    case EventKind::singularity: return "singularity";
    case EventKind::horizon_out: return "horizon-out";
    case EventKind::escape_declared: return "escape-declared";
  }
  return "";
}

namespace {

// integral of b/(r^2 sqrt(V)) over (r, inf) with (a, b) frozen; NaN when a turning point lies ahead
double remaining_swing(double r, double a, double b, double R) {
  auto V = [&](double x) { return a * a - (1.0 - R * x) * (1.0 + b * b * x * x); };
  const double x1 = 1.0 / r;
  for (int i = 0; i <= 400; ++i)
    if (!(V(x1 * i / 400.0) > 0.0)) return kNaN;
  return gk([&](double x) { return b / std::sqrt(V(x)); }, 0.0, x1);
}

class Orchestrator {
public:
  Orchestrator(const ExtendPolicy& pol, std::uint64_t seed, std::uint64_t index)
      : pol_(pol), rng_(seed, index) {}

  TrajectoryResult run(const ReducedState& initial, double t0) {
    try {
      drive(initial, t0);
    } catch (const std::exception& e) {
      res_.failed = true;
      res_.failure = e.what();
    }
    res_.final_state = ef_.red;
    res_.steps = static_cast<long>(step_);
    return std::move(res_);
  }

private:
  const ExtendPolicy& pol_;
  CounterRng rng_;
  std::uint64_t step_ = 0;
  TrajectoryResult res_;
  EfState ef_;
  bool orbit_open_ = false;
  OrbitRecord orbit_;
  int completed_ = 0;
  bool crossed_ = false;

  void record(const ReducedState& st, const EfCoords& c, const std::string& chart, const std::string& event,
              Region g) {
    PathSample p;
    p.s = st.s;
    p.r = st.r;
    p.a = st.a;
    p.b = st.b;
    p.T = st.T;
    p.theta = st.theta;
    p.n = st.n;
    p.chart = chart;
    p.event = event;
    p.u_minus = c.u_minus;
    p.u_plus = c.u_plus;
    const KsPoint k = ks_from_ef(c.u_minus, c.u_plus, g, pol_.R);
    p.u = k.u;
    p.v = k.v;
    p.u_alt = -k.u;
    p.v_alt = -k.v;
    res_.path.push_back(p);
  }

  void record_ef(const std::string& event) {
    const double R = pol_.R;
    const std::string chart = ef_.red.r > 1.5 * R ? chart_name(Chart::spherical)
                              : ef_.red.T >= 0.0  ? chart_name(Chart::ef_outward)
                                                  : chart_name(Chart::ef_inward);
    record(ef_.red, ef_.coords(R), chart, event, region_of(ef_.red.r, ef_.red.a, ef_.red.T, R));
  }

  void event(EventKind k, double s, const ReducedState& st, double T) {
    res_.events.push_back({k, s, st.r, st.a, st.b, T});
  }

  bool out_of_budget() {
    if (ef_.red.s >= pol_.horizon) return true;
    if (static_cast<long>(step_) >= pol_.max_steps) {
      res_.truncated = true;
      return true;
    }
    return false;
  }

  void drive(const ReducedState& initial, double t0) {
    const double R = pol_.R;
    if (initial.r <= R) {
      // start inside the hole: hand to the interior legs
      ef_.red = initial;
      ef_.reg_minus = initial.a * initial.T <= 0.0;
      if (initial.r == R) throw std::domain_error("extend_trajectory: start off the horizon");
      const double rs = tortoise(initial.r, R);
      ef_.u_reg = ef_.reg_minus ? t0 + rs : t0 - rs;
    } else {
      ef_ = ef_start(initial, t0, R);
    }
    if (pol_.record_every > 0) record_ef("start");
    while (!out_of_budget()) {
      if (ef_.red.r > R) {
        if (!exterior()) return;
      } else if (ef_.red.T < 0.0) {
        inbound();
        if (out_of_budget()) return;
        if (!outbound_after_singularity()) return;
      } else {
        outbound_plain();
      }
    }
  }

  // returns false when the run ends (escape or stop at horizon)
  bool exterior() {
    const double R = pol_.R;
    long k = 0;
    while (!out_of_budget()) {
      double h = adaptive_h(ef_.red, R, pol_.rule);
      if (ef_.red.s + h > pol_.horizon) h = pol_.horizon - ef_.red.s;
      if (!(h > 0.0)) return false;
      const std::array<double, 4> z{rng_.normal(step_, 0), rng_.normal(step_, 1), rng_.normal(step_, 2),
                                    rng_.normal(step_, 3)};
      ++step_;
      const ReducedState prev = ef_.red;
      const EfStepOutcome o = ef_step(ef_, pol_.sigma, R, h, z, pol_.eps_T);
      ef_ = o.state;
      const ReducedState& n = ef_.red;
      if (o.a_corrected) ++res_.a_corrections;
      if (o.sign_flip_a) ++res_.sign_flips;
      res_.max_residual = std::max(res_.max_residual, std::abs(pseudo_norm_residual(n, R)));
      if (std::abs(n.a) < 1e-12 && std::abs(n.T) < 1e-12 && std::abs(n.r - R) < 1e-9)
        throw std::domain_error("extend_trajectory: approached u = v = 0");

      if (n.r >= R) {
        ++res_.ell_bound_samples;
        const double fr = std::sqrt(horizon_factor(n.r, R)) / n.r;
        if (fr > std::abs(n.a / n.b) * (1.0 + 1e-9) + 1e-14) ++res_.ell_bound_violations;
      }
      if (orbit_open_) {
        if (std::isnan(orbit_.s_top)) {
          orbit_.swing_up += o.omega;
          if (prev.T > 0.0 && n.T <= 0.0) {
            orbit_.s_top = n.s;
            orbit_.r_top = std::max(prev.r, n.r);
            orbit_.ell_top = n.a / n.b;
            orbit_.plane_top = n.plane();
            orbit_.swing_down = 0.0;
          }
        } else {
          orbit_.swing_down += o.omega;
        }
      }
      ++k;
      if (n.r <= R) {
        const double sD = prev.s + (n.s - prev.s) * (prev.r - R) / (prev.r - n.r);
        const EventKind kind = crossed_ ? EventKind::horizon_in : EventKind::horizon_first;
        crossed_ = true;
        res_.captured = true;
        HitRecord hit;
        hit.D = sD;
        res_.hits.push_back(hit);
        event(kind, sD, n, n.T);
        record_ef(event_name(kind));
        return !pol_.stop_at_horizon;
      }
      if (n.r > pol_.M_escape && n.T > 0.0 && n.a * n.a - 1.0 > pol_.escape_margin) {
        const double sw = remaining_swing(n.r, n.a, n.b, R);
        if (!std::isnan(sw)) {
          res_.escaped = true;
          res_.theta_tail = sw;
          const Mat3 V = frame_of(n.theta, n.n) * angular_rotation(sw, 0.0);
          res_.theta_limit = V.col(0);
          event(EventKind::escape_declared, n.s, n, n.T);
          record_ef("escape-declared");
          return false;
        }
      }
      if (pol_.record_every > 0 && k % pol_.record_every == 0) record_ef("");
    }
    return false;
  }

  LegOptions leg_options(double target) const {
    LegOptions o;
    o.sigma = pol_.sigma;
    o.R = pol_.R;
    o.rule = pol_.rule;
    o.r_target = target;
    o.reg_minus = ef_.reg_minus;
    return o;
  }

  void leg_records(const std::vector<RadialSample>& leg, const std::vector<Mat3>& V, double u0, bool reg_minus,
                   const std::string& chart) {
    if (pol_.record_every <= 0) return;
    const double R = pol_.R;
    double u = u0;
    for (size_t i = 1; i < leg.size(); ++i) {
      u += leg[i].du;
      if (i % pol_.record_every != 0 && i + 1 != leg.size()) continue;
      const RadialSample& p = leg[i];
      const ReducedState st{p.r, p.a, p.b, p.T, V[i].col(0), V[i].col(1), p.s};
      EfCoords c;
      const bool on_h = p.r == R;
      if (reg_minus) {
        c.u_minus = u;
        if (!on_h) c.u_plus = u - 2.0 * tortoise(p.r, R);
      } else {
        c.u_plus = u;
        if (!on_h) c.u_minus = u + 2.0 * tortoise(p.r, R);
      }
      record(st, c, chart, "", region_of(p.r, p.a, p.T, R));
    }
  }

  void inbound() {
    const double R = pol_.R;
    if (res_.hits.empty()) {
      HitRecord hit;  // started inside
      res_.hits.push_back(hit);
    }
    HitRecord& hit = res_.hits.back();
    ef_.choose_regular(R);
    const LegOptions opt = leg_options(pol_.r_stop);
    const std::vector<RadialSample> leg = radial_leg(ef_.red, opt, rng_, step_);
    const std::vector<Mat3> V = angular_transport_solve(leg, frame_of(ef_.red.theta, ef_.red.n), pol_.sigma);
    leg_records(leg, V, ef_.u_reg, ef_.reg_minus, chart_name(Chart::ef_inward));
    double u = ef_.u_reg, om = 0.0, min_b = INFINITY;
    for (size_t i = 0; i < leg.size(); ++i) {
      if (i) u += leg[i].du;
      om += leg[i].omega;
      min_b = std::min(min_b, leg[i].b);
      hit.max_orth_defect = std::max(hit.max_orth_defect, orth_defect(V[i]));
    }
    const RadialSample& e = leg.back();
    const double u_minus_end = ef_.reg_minus ? u : u + 2.0 * tortoise(e.r, R);
    const SingularityFit fit = detect_singularity(leg, V.back(), u_minus_end, R);
    hit.fit = fit;
    hit.D_prime = fit.bp.D_prime;
    hit.a = fit.bp.a;
    hit.b = fit.bp.b;
    hit.min_b = min_b;
    if (orbit_open_) {
      if (std::isnan(orbit_.s_top)) orbit_.swing_up += om + fit.shell.omega;
      else orbit_.swing_down += om + fit.shell.omega;
      res_.orbits.push_back(orbit_);
      orbit_open_ = false;
    }
    ReducedState at0{0.0, fit.bp.a, fit.bp.b, e.T, fit.bp.theta, fit.bp.n, fit.bp.D_prime};
    ef_.red = at0;
    ef_.red.r = e.r;  // keep r > 0 in the live state; the singular point is only recorded
    ef_.reg_minus = true;
    ef_.u_reg = fit.bp.u_minus;
    event(EventKind::singularity, fit.bp.D_prime, at0, kNaN);
    EfCoords c;
    c.u_minus = fit.bp.u_minus;
    c.u_plus = fit.bp.u_minus;  // u- - u+ = 2 tortoise(0) = 0
    record(at0, c, chart_name(Chart::kruskal), "singularity", Region::future_interior);
    bp_ = fit.bp;
  }

  BoundaryPoint bp_;

  bool outbound_after_singularity() {
    const double R = pol_.R;
    HitRecord& hit = res_.hits.back();
    const LegOptions opt = leg_options(R);
    const RegenerationResult g = regenerate(bp_, pol_.r_stop, opt, rng_, step_);
    double om = g.shell.omega, min_b = hit.min_b;
    for (size_t i = 0; i < g.leg.size(); ++i) {
      om += g.leg[i].omega;
      min_b = std::min(min_b, g.leg[i].b);
      hit.max_orth_defect = std::max(hit.max_orth_defect, orth_defect(g.V[i]));
    }
    hit.min_b = min_b;
    // series oracle over s - D' <= 0.1
    {
      size_t m = 1;
      while (m < g.leg.size() && g.leg[m].s - bp_.D_prime <= 0.1) ++m;
      const std::vector<RadialSample> part(g.leg.begin(), g.leg.begin() + m);
      const std::vector<Mat3> ser = angular_series(part, g.V.front(), pol_.sigma, 8);
      double d = 0.0;
      for (size_t i = 0; i < part.size(); ++i) d = std::max(d, (ser[i] - g.V[i]).norm());
      hit.series_diff = d;
      hit.series_bound = series_tail_bound(series_constant(part, g.shell.ds, pol_.sigma), 8);
    }
    const double u_start =
        g.reg_minus ? bp_.u_minus + g.shell.du_minus : bp_.u_minus + g.shell.du_minus - 2.0 * tortoise(pol_.r_stop, R);
    leg_records(g.leg, g.V, u_start, g.reg_minus, chart_name(Chart::ef_outward));

    orbit_ = OrbitRecord{};
    orbit_.s_singular = bp_.D_prime;
    orbit_.swing_up = om;
    orbit_open_ = true;

    ef_.red = g.exit_state;
    ef_.u_reg = g.u_reg_exit;
    ef_.reg_minus = g.reg_minus;
    hit.D_out = ef_.red.s;
    event(EventKind::horizon_out, ef_.red.s, ef_.red, ef_.red.T);
    record_ef("horizon-out");
    ++completed_;
    if (pol_.max_excursions >= 0 && completed_ >= pol_.max_excursions) {
      if (ef_.red.s < pol_.horizon) res_.truncated = true;
      return false;
    }
    // leave the horizon with one proper-time step
    return exterior_from_horizon();
  }

  bool exterior_from_horizon() {
    // exterior() requires r > R; a first step from r = R is taken here
    const double R = pol_.R;
    if (out_of_budget()) return false;
    double h = adaptive_h(ef_.red, R, pol_.rule);
    const std::array<double, 4> z{rng_.normal(step_, 0), rng_.normal(step_, 1), rng_.normal(step_, 2),
                                  rng_.normal(step_, 3)};
    ++step_;
    const EfStepOutcome o = ef_step(ef_, pol_.sigma, R, h, z, pol_.eps_T);
    ef_ = o.state;
    if (orbit_open_) orbit_.swing_up += o.omega;
    if (ef_.red.r <= R && ef_.red.T < 0.0) {
      // immediate re-entry
      const EventKind kind = EventKind::horizon_in;
      HitRecord hit;
      hit.D = ef_.red.s;
      res_.hits.push_back(hit);
      event(kind, ef_.red.s, ef_.red, ef_.red.T);
    }
    return true;
  }

  void outbound_plain() {
    const double R = pol_.R;
    ef_.choose_regular(R);
    const LegOptions opt = leg_options(R);
    const std::vector<RadialSample> leg = radial_leg(ef_.red, opt, rng_, step_);
    const std::vector<Mat3> V = angular_transport_solve(leg, frame_of(ef_.red.theta, ef_.red.n), pol_.sigma);
    leg_records(leg, V, ef_.u_reg, ef_.reg_minus, chart_name(Chart::ef_outward));
    double u = ef_.u_reg;
    for (size_t i = 1; i < leg.size(); ++i) u += leg[i].du;
    const RadialSample& e = leg.back();
    ef_.red = ReducedState{e.r, e.a, e.b, e.T, V.back().col(0), V.back().col(1), e.s};
    ef_.u_reg = u;
    event(EventKind::horizon_out, e.s, ef_.red, e.T);
    record_ef("horizon-out");
    exterior_from_horizon();
  }
};

}  // namespace

TrajectoryResult extend_trajectory(const ReducedState& initial, const ExtendPolicy& pol, std::uint64_t seed,
                                   std::uint64_t index, double t0) {
  Orchestrator o(pol, seed, index);
  return o.run(initial, t0);
}

}  // namespace reldiff
