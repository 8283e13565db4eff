#include "reldiff/geodesics.hpp"
#include "reldiff/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace reldiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class F>
double gk(F f, double lo, double hi) {
  return integrate_gk(f, lo, hi);
}

template <class F>
double bracket_root(F f, double lo, double hi) {
  boost::uintmax_t it = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), it);
  return 0.5 * (r.first + r.second);
}

struct Cubic {
  double c3, c2, c1, c0;
  double operator()(double r) const { return ((c3 * r + c2) * r + c1) * r + c0; }
  double d1(double r) const { return (3.0 * c3 * r + 2.0 * c2) * r + c1; }
  double d2(double r) const { return 6.0 * c3 * r + 2.0 * c2; }
  double scale(double r) const {
    return std::abs(c3) * r * r * r + std::abs(c2) * r * r + std::abs(c1) * r + std::abs(c0);
  }
};

Cubic radial_cubic(double a, double b, double R) { return {a * a - 1.0, R, -b * b, R * b * b}; }

// g(r) / (r - rho)^m by synthetic division; coefficients highest first
std::vector<double> deflate(const Cubic& g, double rho, int m) {
  std::vector<double> c{g.c3, g.c2, g.c1, g.c0};
  for (int k = 0; k < m; ++k) {
    std::vector<double> q(c.size() - 1);
    double acc = 0.0;
    for (size_t i = 0; i + 1 < c.size(); ++i) {
      acc = acc * rho + c[i];
      q[i] = acc;
    }
    c = q;
  }
  return c;
}

double horner(const std::vector<double>& c, double r) {
  double acc = 0.0;
  for (double x : c) acc = acc * r + x;
  return acc;
}

bool tie(double x, double y, double tol) { return std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)}); }

}  // namespace

double effective_potential(double u, double b, double R) {
  if (u < 0.0) throw std::domain_error("effective_potential: u must be non-negative");
  return (1.0 - R * u) * (1.0 + b * b * u * u);
}

std::optional<CriticalPoints> critical_points(double b, double R) {
  if (!(b > 0.0)) throw std::domain_error("critical_points: b must be positive");
  double x = 1.0 - 3.0 * R * R / (b * b);
  if (x < -1e-14) return std::nullopt;
  const double sq = std::sqrt(std::max(x, 0.0));
  CriticalPoints c;
  c.u1 = (1.0 + sq) / (3.0 * R);
  c.u2 = (1.0 - sq) / (3.0 * R);
  c.P1 = effective_potential(c.u1, b, R);
  c.P2 = effective_potential(c.u2, b, R);
  return c;
}

std::string case_name(TimelikeCase c) {
  switch (c) {
    case TimelikeCase::c1_1: return "1.1";
    case TimelikeCase::c1_2: return "1.2";
    case TimelikeCase::c1_3: return "1.3";
    case TimelikeCase::c2_1: return "2.1";
    case TimelikeCase::c2_2_1: return "2.2.1";
    case TimelikeCase::c2_2_2: return "2.2.2";
    case TimelikeCase::c2_3: return "2.3";
    case TimelikeCase::c2_4: return "2.4";
    case TimelikeCase::c2_5_1: return "2.5.1";
    case TimelikeCase::c2_5_2: return "2.5.2";
    case TimelikeCase::c2_6: return "2.6";
    case TimelikeCase::infeasible: return "infeasible";
  }
  return "";
}

std::vector<RadialRoot> radial_roots(double a, double b, double R) {
  const Cubic g = radial_cubic(a, b, R);
  // stationary points of g on (0, inf)
  std::vector<double> sp;
  if (g.c3 == 0.0) {
    if (b > 0.0) sp.push_back(b * b / (2.0 * R));
  } else {
    const double A = 3.0 * g.c3, B = 2.0 * g.c2, C = g.c1;
    double disc = B * B - 4.0 * A * C;
    const double dscale = B * B + 4.0 * std::abs(A * C);
    if (disc < 0.0 && -disc <= 1e-10 * dscale) disc = 0.0;
    if (disc >= 0.0) {
      const double q = -0.5 * (B + std::copysign(std::sqrt(disc), B));
      std::vector<double> c;
      if (q != 0.0) c.push_back(C / q);
      c.push_back(q / A);
      for (double x : c)
        if (x > 0.0) sp.push_back(x);
    }
  }
  std::sort(sp.begin(), sp.end());
  if (sp.size() == 2 && sp[1] - sp[0] <= 1e-6 * sp[1]) sp = {0.5 * (sp[0] + sp[1])};

  std::vector<RadialRoot> roots;
  std::vector<bool> is_zero(sp.size(), false);
  for (size_t i = 0; i < sp.size(); ++i) {
    const double x = sp[i];
    if (std::abs(g(x)) <= 1e-9 * g.scale(x)) {
      is_zero[i] = true;
      const int m = std::abs(g.d2(x)) * x * x <= 1e-6 * g.scale(x) ? 3 : 2;
      roots.push_back({x, m});
    }
  }
  // bracketing points
  std::vector<double> pts{1e-12 * R};
  std::vector<bool> zero{false};
  for (size_t i = 0; i < sp.size(); ++i) {
    pts.push_back(sp[i]);
    zero.push_back(is_zero[i]);
  }
  double top = std::max(4.0 * R, 2.0 * (sp.empty() ? R : sp.back()));
  while (g(top) * (g.c3 < 0.0 ? 1.0 : 0.0) > 0.0 && top < 1e300) top *= 2.0;
  pts.push_back(top);
  zero.push_back(false);
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    if (zero[i] || zero[i + 1]) continue;
    const double ga = g(pts[i]), gb = g(pts[i + 1]);
    if ((ga < 0.0) != (gb < 0.0) && ga != 0.0 && gb != 0.0) {
      const double r = bracket_root([&](double x) { return g(x); }, pts[i], pts[i + 1]);
      roots.push_back({r, 1});
    }
  }
  std::sort(roots.begin(), roots.end(), [](const RadialRoot& x, const RadialRoot& y) { return x.r < y.r; });
  return roots;
}

TimelikeClass classify_timelike(double a, double b, double r0, double R, double tol) {
  TimelikeClass out;
  if (!(R > 0.0) || b < 0.0) throw std::invalid_argument("classify_timelike: need R > 0 and b >= 0");
  out.roots = radial_roots(a, b, R);
  const Cubic g = radial_cubic(a, b, R);
  if (!(r0 > 0.0) || g(r0) < -1e-12 * (g.scale(r0) + (a * a + 1.0) * r0 * r0 * r0)) return out;
  const double A = a * a;
  const double bc = R * std::sqrt(3.0);
  if (b <= bc || tie(b, bc, tol)) {
    if (tie(b, bc, tol)) out.crit = critical_points(bc, R);
    if (tie(b, bc, tol) && tie(A, 8.0 / 9.0, tol)) out.tag = TimelikeCase::c1_3;
    else if (A >= 1.0 || tie(A, 1.0, tol)) out.tag = TimelikeCase::c1_1;
    else out.tag = TimelikeCase::c1_2;
    return out;
  }
  const CriticalPoints c = *critical_points(b, R);
  out.crit = c;
  const bool ge1 = A >= 1.0 || tie(A, 1.0, tol);
  if (tie(A, c.P1, tol)) out.tag = c.P1 >= 1.0 ? TimelikeCase::c2_3 : TimelikeCase::c2_5_1;
  else if (tie(A, c.P2, tol)) out.tag = TimelikeCase::c2_5_2;
  else if (ge1) out.tag = A > c.P1 ? TimelikeCase::c2_1 : TimelikeCase::c2_4;
  else if (A < c.P2) out.tag = TimelikeCase::c2_2_1;
  else if (A > c.P1) out.tag = TimelikeCase::c2_2_2;
  else out.tag = TimelikeCase::c2_6;
  return out;
}

// ---- TimelikeOrbit ----

TimelikeOrbit::TimelikeOrbit(double a, double b, double r0, int direction, double R)
    : a_(a), b_(b), R_(R), r0_(r0), dir_(direction < 0 ? -1 : 1) {
  const Cubic gc = radial_cubic(a, b, R);
  // a^2 - 1 carries an absolute rounding error of order a^2 eps
  const double slack = 1e-12 * (gc.scale(r0) + (a * a + 1.0) * r0 * r0 * r0);
  if (!(r0 > 0.0) || gc(r0) < -slack) throw std::domain_error("TimelikeOrbit: r0 not admissible");
  const std::vector<RadialRoot> roots = radial_roots(a, b, R);
  lo_ = 0.0;
  hi_ = kInf;
  for (const RadialRoot& x : roots) {
    if (std::abs(x.r - r0) <= 1e-10 * r0) {
      if (x.multiplicity >= 2) {
        circular_ = true;
        lo_ = hi_ = r0;
        s_end_ = kInf;
        return;
      }
      // start on a turning point: move into the admissible side
      const double d = 1e-6 * r0;
      if (gc(r0 + d) > 0.0) {
        lo_ = x.r;
        lo_kind_ = End::root;
        lo_mult_ = 1;
        dir_ = 1;
      } else {
        hi_ = x.r;
        hi_kind_ = End::root;
        hi_mult_ = 1;
        dir_ = -1;
      }
      r0_ = x.r;
      continue;
    }
    if (x.r < r0 && !(lo_kind_ == End::root && lo_ == r0_)) {
      lo_ = x.r;
      lo_kind_ = End::root;
      lo_mult_ = x.multiplicity;
    }
    if (x.r > r0 && hi_kind_ == End::infinity) {
      hi_ = x.r;
      hi_kind_ = End::root;
      hi_mult_ = x.multiplicity;
    }
  }
  if (hi_kind_ == End::root && hi_ == r0_) {
    // started on the upper turning point: the lower end is the largest root below
    lo_ = 0.0;
    lo_kind_ = End::zero;
    lo_mult_ = 0;
    for (const RadialRoot& x : roots)
      if (x.r < r0_ * (1.0 - 1e-10)) {
        lo_ = x.r;
        lo_kind_ = End::root;
        lo_mult_ = x.multiplicity;
      }
  }

  auto end_info = [&](int d, double& where, End& kind, int& mult) {
    where = d > 0 ? hi_ : lo_;
    kind = d > 0 ? hi_kind_ : lo_kind_;
    mult = d > 0 ? hi_mult_ : lo_mult_;
  };
  double B, C;
  End kb, kc;
  int mb, mc;
  end_info(dir_, B, kb, mb);
  end_info(-dir_, C, kc, mc);
  auto span = [&](double x, double y) { return integral(std::min(x, y), std::max(x, y), 0); };

  s_end_ = kInf;
  if (kb == End::infinity) {
    unbounded_ = true;
    first_leg_ = kInf;
  } else if (kb == End::root && mb >= 2) {
    asymptotic_ = true;
    first_leg_ = kInf;
  } else if (kb == End::zero) {
    singular_ = true;
    first_leg_ = span(r0_, B);
    s_end_ = first_leg_;
  } else {
    first_leg_ = span(r0_, B);
    if (kc == End::root && mc == 1) {
      periodic_ = true;
      period_ = 2.0 * span(lo_, hi_);
    } else if (kc == End::root) {
      asymptotic_ = true;
    } else if (kc == End::zero) {
      singular_ = true;
      s_end_ = first_leg_ + span(lo_, hi_);
    } else {
      unbounded_ = true;
    }
  }
}

double TimelikeOrbit::g(double r) const { return radial_cubic(a_, b_, R_)(r); }

double TimelikeOrbit::integral(double x, double y, int weight) const {
  if (y <= x) return 0.0;
  const Cubic gc = radial_cubic(a_, b_, R_);
  auto w = [&](double r) { return weight == 0 ? 1.0 : b_ / (r * r); };
  const bool lo_root = lo_kind_ == End::root, hi_root = hi_kind_ == End::root;
  double cl = lo_, ch = hi_;
  if (std::isfinite(hi_)) {
    if (lo_root) cl = lo_ + 0.25 * (hi_ - lo_);
    if (hi_root) ch = hi_ - 0.25 * (hi_ - lo_);
  } else if (lo_root) {
    cl = 1.5 * lo_;
  }
  double sum = 0.0;
  // lower end piece
  if (lo_root && x < cl) {
    const double yy = std::min(y, cl);
    const std::vector<double> q = deflate(gc, lo_, lo_mult_);
    if (lo_mult_ == 1) {
      sum += gk(
          [&](double t) {
            const double r = lo_ + t * t;
            return 2.0 * w(r) * std::pow(r, 1.5) / std::sqrt(std::abs(horner(q, r)));
          },
          std::sqrt(std::max(0.0, x - lo_)), std::sqrt(yy - lo_));
    } else {
      const double m = lo_mult_;
      sum += gk(
          [&](double t) {
            const double d = std::exp(-t), r = lo_ + d;
            return w(r) * std::pow(r, 1.5) * std::pow(d, 1.0 - 0.5 * m) / std::sqrt(std::abs(horner(q, r)));
          },
          -std::log(yy - lo_), -std::log(x - lo_));
    }
  }
  // middle piece
  {
    const double xx = std::max(x, cl), yy = std::min(y, ch);
    if (yy > xx)
      sum += gk([&](double r) { return w(r) * std::pow(r, 1.5) / std::sqrt(std::max(0.0, gc(r))); }, xx, yy);
  }
  // upper end piece
  if (hi_root && y > ch) {
    const double xx = std::max(x, ch);
    const std::vector<double> q = deflate(gc, hi_, hi_mult_);
    if (hi_mult_ == 1) {
      sum += gk(
          [&](double t) {
            const double r = hi_ - t * t;
            return 2.0 * w(r) * std::pow(r, 1.5) / std::sqrt(std::abs(horner(q, r)));
          },
          std::sqrt(std::max(0.0, hi_ - y)), std::sqrt(hi_ - xx));
    } else {
      const double m = hi_mult_;
      sum += gk(
          [&](double t) {
            const double d = std::exp(-t), r = hi_ - d;
            return w(r) * std::pow(r, 1.5) * std::pow(d, 1.0 - 0.5 * m) / std::sqrt(std::abs(horner(q, r)));
          },
          -std::log(hi_ - xx), -std::log(hi_ - y));
    }
  }
  return sum;
}

double TimelikeOrbit::solve_leg(double from, int dir, double ds) const {
  if (ds <= 0.0) return from;
  auto I = [&](double r) { return integral(std::min(from, r), std::max(from, r), 0); };
  const double B = dir > 0 ? hi_ : lo_;
  const bool finite_end = dir > 0 ? (hi_kind_ == End::root && hi_mult_ == 1) : (lo_kind_ != End::root || lo_mult_ == 1);
  double end;
  if (std::isfinite(B) && finite_end) {
    end = B;
  } else if (!std::isfinite(B)) {
    double step = std::max(1.0, from);
    end = from + step;
    while (I(end) < ds) {
      step *= 2.0;
      end = from + step;
    }
  } else {
    double gap = 0.5 * std::abs(B - from);
    end = B - dir * gap;
    while (I(end) < ds) {
      gap *= 0.5;
      end = B - dir * gap;
      if (gap < 1e-15 * B) break;
    }
  }
  if (I(end) <= ds) return end;
  return bracket_root([&](double r) { return I(r) - ds; }, std::min(from, end), std::max(from, end));
}

void TimelikeOrbit::locate(double s, double& r, double* phi) const {
  if (s < 0.0) throw std::domain_error("TimelikeOrbit: s must be non-negative");
  if (s > s_end_) throw std::domain_error("TimelikeOrbit: s beyond the singularity");
  if (circular_) {
    r = r0_;
    if (phi) *phi = b_ / (r0_ * r0_) * s;
    return;
  }
  auto Phi = [&](double x, double y) { return phi ? integral(std::min(x, y), std::max(x, y), 1) : 0.0; };
  double acc = 0.0;
  if (s <= first_leg_) {
    r = solve_leg(r0_, dir_, s);
    if (phi) *phi = Phi(r0_, r);
    return;
  }
  const double B = dir_ > 0 ? hi_ : lo_;
  const double C = dir_ > 0 ? lo_ : hi_;
  acc = Phi(r0_, B);
  double rest = s - first_leg_;
  if (periodic_) {
    const double half = 0.5 * period_;
    const double n = std::floor(rest / half);
    rest -= n * half;
    acc += n * Phi(lo_, hi_);
    const bool at_B = std::fmod(n, 2.0) == 0.0;
    const double from = at_B ? B : C;
    const int d = at_B ? -dir_ : dir_;
    r = solve_leg(from, d, rest);
    if (phi) *phi = acc + Phi(from, r);
    return;
  }
  r = solve_leg(B, -dir_, rest);
  if (phi) *phi = acc + Phi(B, r);
}

double TimelikeOrbit::r_at(double s) const {
  double r;
  locate(s, r, nullptr);
  return r;
}

double TimelikeOrbit::phi_at(double s) const {
  double r, phi;
  locate(s, r, &phi);
  return phi;
}

// ---- null geodesics ----

NullClass classify_null(double alpha, double R, double tol) {
  const double ac = 2.0 / (3.0 * std::sqrt(3.0) * R);
  const double A = std::abs(alpha);
  NullClass c;
  if (tie(A, ac, tol)) {
    c.tag = NullCase::c0;
    c.rho = c.rho_prime = 1.5 * R;
    return c;
  }
  if (A > ac) {
    c.tag = NullCase::c1;
    return c;
  }
  c.tag = NullCase::c2;
  if (A == 0.0) {
    c.rho = R;
    c.rho_prime = kInf;
    return c;
  }
  auto h = [&](double x) { return A * A * x * x * x - x + R; };
  c.rho = bracket_root(h, R, 1.5 * R);
  double top = 3.0 * R;
  while (h(top) < 0.0) top *= 2.0;
  c.rho_prime = bracket_root(h, 1.5 * R, top);
  return c;
}

double deflection_integral(double rho, double R) {
  if (!(rho >= R)) throw std::domain_error("deflection_integral: rho below R");
  if (rho >= 1.5 * R) throw std::domain_error("deflection_integral: divergent for rho >= 3R/2");
  const double l2 = (1.0 - R / rho) / (rho * rho);
  auto k = [&](double r) { return 1.0 - l2 * (r * r + r * rho + rho * rho); };
  return gk(
      [&](double tau) {
        const double s = std::sin(tau);
        return 2.0 / std::sqrt(k(rho * s * s));
      },
      0.0, 0.5 * M_PI);
}

double deflection_integral_direct(double rho, double R) {
  if (!(rho >= R)) throw std::domain_error("deflection_integral: rho below R");
  if (rho >= 1.5 * R) throw std::domain_error("deflection_integral: divergent for rho >= 3R/2");
  const double l2 = (1.0 - R / rho) / (rho * rho);
  boost::math::quadrature::tanh_sinh<double> ts;
  // xc is the signed distance to the nearest end point
  return ts.integrate(
      [&](double r, double xc) {
        const double to_rho = xc > 0.0 ? xc : rho - r;
        const double from0 = xc < 0.0 ? -xc : r;
        const double k = 1.0 - l2 * (r * r + r * rho + rho * rho);
        return 1.0 / std::sqrt(to_rho * k * from0);
      },
      0.0, rho, 1e-14);
}

double horizon_cylinder_geodesic(double b, double k, double s, double R, double s0, int sign) {
  if (!(std::abs(k) < b) || k == 0.0) throw std::domain_error("horizon_cylinder_geodesic: need 0 < |k| < b");
  const double c = std::sqrt(1.0 - k * k / (b * b));
  return std::acos(c * std::sin((sign < 0 ? -1.0 : 1.0) * b * (s - s0) / (R * R)));
}

}  // namespace reldiff
