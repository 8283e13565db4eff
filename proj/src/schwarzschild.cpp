#include "reldiff/schwarzschild.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace reldiff {

namespace {

double sgn(double x) { return x < 0.0 ? -1.0 : 1.0; }

Mat3 skew(const Vec3& k) {
  Mat3 K;
  K << 0.0, -k(2), k(1), k(2), 0.0, -k(0), -k(1), k(0), 0.0;
  return K;
}

// drift of y = (r, T, a, q) with q = b^2
Eigen::Vector4d drift_q(const Eigen::Vector4d& y, double sigma, double R) {
  const double r = y(0), T = y(1), a = y(2), q = y(3);
  const double s2 = sigma * sigma;
  const double r2 = r * r;
  return {T, 1.5 * s2 * T + (r - 1.5 * R) * q / (r2 * r2) - R / (2.0 * r2), 1.5 * s2 * a, s2 * (4.0 * q + 2.0 * r2)};
}

}  // namespace

double horizon_factor(double r, double R) { return 1.0 - R / r; }

double pseudo_norm_residual(const ReducedState& st, double R) {
  const double f = horizon_factor(st.r, R);
  return st.T * st.T - st.a * st.a + f * (1.0 + st.b * st.b / (st.r * st.r));
}

double constraint_T(double r, double a, double b, double R, double sign) {
  const double disc = a * a - horizon_factor(r, R) * (1.0 + b * b / (r * r));
  return sgn(sign) * std::sqrt(std::max(0.0, disc));
}

double constraint_a(double r, double b, double T, double R, double sign) {
  const double v = T * T + horizon_factor(r, R) * (1.0 + b * b / (r * r));
  return sgn(sign) * std::sqrt(std::max(0.0, v));
}

Mat3 covariation(const ReducedState& st, double R, double sigma) {
  const double r = st.r, a = st.a, b = st.b, T = st.T;
  const double f = horizon_factor(r, R);
  Mat3 K;
  K << a * a - f, a * b, a * T, a * b, b * b + r * r, b * T, a * T, b * T, T * T + f;
  return sigma * sigma * K;
}

Mat3 noise_factor(const ReducedState& st, double R, double sigma) {
  const double r = st.r, a = st.a, b = st.b, T = st.T;
  const double f = horizon_factor(r, R);
  Mat3 B = Mat3::Zero();
  B(1, 0) = b;
  B(1, 1) = r;
  if (f >= 0.0) {
    const double sf = std::sqrt(f);
    B(0, 0) = (a * a - f) / a;
    B(0, 1) = f * b / (r * a);
    B(0, 2) = T * sf / a;
    B(2, 0) = T;
    B(2, 2) = sf;
  } else {
    const double sf = std::sqrt(-f);
    B(0, 0) = a;
    B(0, 2) = sf;
    B(2, 0) = (T * T + f) / T;
    B(2, 1) = -f * b / (r * T);
    B(2, 2) = a * sf / T;
  }
  return sigma * B;
}

StepOutcome reduced_step(const ReducedState& st, double sigma, double R, double h, const std::array<double, 3>& noise,
                         double eps_T) {
  if (!(st.r > 0.0)) throw std::domain_error("reduced_step: r must be positive");
  if (!(h > 0.0)) throw std::invalid_argument("reduced_step: h must be positive");
  const double f0 = horizon_factor(st.r, R);
  const double var_a = st.a * st.a - f0;
  if (var_a < -1e-8 * (1.0 + st.a * st.a)) throw std::domain_error("reduced_step: covariation not positive (constraint drift)");

  Eigen::Vector3d dM = Eigen::Vector3d::Zero();
  if (sigma != 0.0) {
    const double sh = std::sqrt(h);
    dM = noise_factor(st, R, sigma) * Eigen::Vector3d(noise[0] * sh, noise[1] * sh, noise[2] * sh);
  }

  const Eigen::Vector4d y(st.r, st.T, st.a, st.b * st.b);
  const Eigen::Vector4d k1 = drift_q(y, sigma, R);
  const Eigen::Vector4d k2 = drift_q(y + 0.5 * h * k1, sigma, R);
  const Eigen::Vector4d k3 = drift_q(y + 0.5 * h * k2, sigma, R);
  const Eigen::Vector4d k4 = drift_q(y + h * k3, sigma, R);
  Eigen::Vector4d y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  y1(1) += dM(2);
  y1(2) += dM(0);
  y1(3) += 2.0 * st.b * dM(1);

  StepOutcome out;
  out.dMa = dM(0);
  ReducedState& n = out.state;
  n = st;
  n.s = st.s + h;
  n.r = y1(0);
  if (!(n.r > 0.0)) throw std::domain_error("reduced_step: r left (0, inf)");
  n.T = y1(1);
  n.a = y1(2);
  n.b = std::sqrt(std::abs(y1(3)));
  out.pre_residual = pseudo_norm_residual(n, R);

  const double f = horizon_factor(n.r, R);
  const double F = f * (1.0 + n.b * n.b / (n.r * n.r));
  const double disc = n.a * n.a - F;
  if (f < 0.0 || disc >= eps_T * eps_T) {
    const double s = n.T != 0.0 ? n.T : st.T;
    n.T = sgn(s) * std::sqrt(std::max(0.0, disc));
  } else {
    n.a = sgn(n.a) * std::sqrt(std::max(0.0, n.T * n.T + F));
    out.a_corrected = true;
  }
  out.sign_flip_a = sgn(n.a) != sgn(st.a);
  return out;
}

StepOutcome radial_step(const ReducedState& st, double sigma, double R, double dr, const std::array<double, 3>& noise) {
  if (dr == 0.0) return {st, 0.0, 0.0, false, false};
  if (sgn(dr) != sgn(st.T)) throw std::invalid_argument("radial_step: dr must follow the sign of T");
  const double r0 = st.r, r1 = st.r + dr, rm = st.r + 0.5 * dr;
  if (!(r1 > 0.0) || r0 > R * (1.0 + 1e-12) || r1 > R * (1.0 + 1e-12))
    throw std::domain_error("radial_step: only valid inside the hole");
  const double q = st.b * st.b;
  auto absT = [&](double r) {
    return std::sqrt(std::max(0.0, st.a * st.a - horizon_factor(r, R) * (1.0 + q / (r * r))));
  };
  const double T0 = absT(r0), Tm = absT(rm), T1 = absT(r1);
  if (!(T0 > 0.0 && Tm > 0.0 && T1 > 0.0)) throw std::domain_error("radial_step: T vanished");
  const double ds = std::abs(dr) / 6.0 * (1.0 / T0 + 4.0 / Tm + 1.0 / T1);

  StepOutcome out;
  ReducedState& n = out.state;
  n = st;
  const double s2 = sigma * sigma;
  const double fm = horizon_factor(rm, R);
  const double sd = std::sqrt(ds);
  const double dMa = sigma * (st.a * noise[0] + std::sqrt(std::max(0.0, -fm)) * noise[2]) * sd;
  const double dMb = sigma * (st.b * noise[0] + rm * noise[1]) * sd;
  n.a = st.a + 1.5 * s2 * st.a * ds + dMa;
  const double q1 = q + s2 * (4.0 * q + 2.0 * rm * rm) * ds + 2.0 * st.b * dMb;
  n.b = std::sqrt(std::abs(q1));
  n.r = r1;
  n.s = st.s + ds;
  n.T = constraint_T(n.r, n.a, n.b, R, st.T);
  out.dMa = dMa;
  out.sign_flip_a = sgn(n.a) != sgn(st.a);
  return out;
}

Mat3 angular_rotation(double omega, double chi) {
  const Vec3 k(chi, 0.0, omega);
  const double th = k.norm();
  if (th == 0.0) return Mat3::Identity();
  const Mat3 K = skew(k);
  return Mat3::Identity() + (std::sin(th) / th) * K + ((1.0 - std::cos(th)) / (th * th)) * (K * K);
}

Mat3 orthonormal_frame(const Vec3& theta, const Vec3& n) {
  Mat3 V;
  V.col(0) = theta.normalized();
  V.col(1) = (n - n.dot(V.col(0)) * V.col(0)).normalized();
  V.col(2) = V.col(0).cross(V.col(1));
  return V;
}

void angular_step(Vec3& theta, Vec3& n, double r, double b, double sigma, double ds, double noise_beta,
                  double b_floor) {
  if (!(b > b_floor)) throw std::domain_error("angular_step: b below floor");
  const double omega = b / (r * r) * ds;
  const double chi = sigma * r / b * std::sqrt(ds) * noise_beta;
  const Mat3 V = orthonormal_frame(theta, n) * angular_rotation(omega, chi);
  theta = V.col(0);
  n = V.col(1);
}

double adaptive_h(const ReducedState& st, double R, const StepRule& rule) {
  const double rate = 1.0 + std::abs(st.T) + st.b / (st.r * st.r) + R / (st.r * st.r);
  return std::max(rule.h_min, rule.h0 / std::pow(rate, rule.exponent));
}

EnergyDecomposition log_energy_decomposition(const std::vector<ReducedState>& path, const std::vector<double>& dMa,
                                             double sigma, double R) {
  EnergyDecomposition out;
  if (path.empty()) return out;
  if (dMa.size() + 1 < path.size()) throw std::invalid_argument("log_energy_decomposition: missing increments");
  out.w.resize(path.size());
  out.eta.resize(path.size());
  double w = 0.0;
  for (size_t i = 0; i < path.size(); ++i) {
    const ReducedState& p = path[i];
    out.w[i] = w;
    out.eta[i] = std::log(std::abs(p.a)) - sigma * sigma * p.s - sigma * w;
    if (i + 1 < path.size() && sigma != 0.0) {
      const double v = p.a * p.a - horizon_factor(p.r, R);
      if (!(v > 0.0)) throw std::domain_error("log_energy_decomposition: a^2 - (1 - R/r) <= 0");
      w += dMa[i] / (sigma * std::sqrt(v));
    }
  }
  const double s_mid = 0.5 * (path.front().s + path.back().s);
  double lo = INFINITY, hi = -INFINITY;
  for (size_t i = 0; i < path.size(); ++i)
    if (path[i].s >= s_mid) {
      lo = std::min(lo, out.eta[i]);
      hi = std::max(hi, out.eta[i]);
    }
  out.tail_oscillation = hi - lo;
  return out;
}

double generator(const TestFunction& f, const ReducedState& st, double sigma, double R) {
  const double r = st.r, a = st.a, b = st.b, T = st.T;
  const double s2 = sigma * sigma;
  const Eigen::Vector4d x(r, a, b, T);
  const Eigen::Vector4d mu(T, 1.5 * s2 * a, 1.5 * s2 * b + s2 * r * r / (2.0 * b),
                           1.5 * s2 * T + (r - 1.5 * R) * b * b / (r * r * r * r) - R / (2.0 * r * r));
  Eigen::Matrix4d S = Eigen::Matrix4d::Zero();
  S.block<3, 3>(1, 1) = covariation(st, R, sigma);
  return mu.dot(f.grad(x)) + 0.5 * (S.cwiseProduct(f.hess(x))).sum();
}

GeneratorCheck generator_residual(const TestFunction& f, const ReducedState& st, double sigma, double R, double h,
                                  int N, std::uint64_t seed) {
  const CounterRng rng(seed, 0);
  const Eigen::Vector4d x0(st.r, st.a, st.b, st.T);
  const double f0 = f.f(x0);
  std::vector<double> d(static_cast<size_t>(N));
  for (int i = 0; i < N; ++i) {
    const std::array<double, 3> z{rng.normal(i, 0), rng.normal(i, 1), rng.normal(i, 2)};
    const ReducedState n = reduced_step(st, sigma, R, h, z).state;
    d[static_cast<size_t>(i)] = (f.f(Eigen::Vector4d(n.r, n.a, n.b, n.T)) - f0) / h;
  }
  GeneratorCheck g;
  double sum = 0.0;
  for (double v : d) sum += v;
  g.estimate = sum / N;
  double ss = 0.0;
  for (double v : d) ss += (v - g.estimate) * (v - g.estimate);
  g.std_error = std::sqrt(ss / (static_cast<double>(N) * std::max(1, N - 1)));
  g.exact = generator(f, st, sigma, R);
  g.residual = std::abs(g.estimate - g.exact);
  return g;
}

ReducedState reduced_from_spherical(const Eigen::Vector4d& x, const Eigen::Vector4d& xdot, double R) {
  const double r = x(1), ph = x(2), ps = x(3);
  const double sp = std::sin(ph), cp = std::cos(ph), sq = std::sin(ps), cq = std::cos(ps);
  ReducedState st;
  st.r = r;
  st.a = horizon_factor(r, R) * xdot(0);
  st.T = xdot(1);
  st.theta = Vec3(sp * cq, sp * sq, cp);
  const Vec3 e_phi(cp * cq, cp * sq, -sp), e_psi(-sp * sq, sp * cq, 0.0);
  const Vec3 thdot = e_phi * xdot(2) + e_psi * xdot(3);
  const double U = thdot.norm();
  st.b = r * r * U;
  if (U > 0.0) {
    st.n = thdot / U;
  } else {
    st.n = e_phi;
  }
  return st;
}

}  // namespace reldiff
