#pragma once
#include <Eigen/Dense>
#include <array>
#include <functional>
#include <vector>

#include "reldiff/rng.hpp"

namespace reldiff {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct ReducedState {
  double r = 3.0;
  double a = 1.0;
  double b = 1.0;
  double T = 0.0;
  Vec3 theta = Vec3::UnitX();
  Vec3 n = Vec3::UnitY();
  double s = 0.0;

  Vec3 plane() const { return theta.cross(n); }  // direction of the angular momentum vector
};

double horizon_factor(double r, double R);  // 1 - R/r
double pseudo_norm_residual(const ReducedState& st, double R);

// T (with the given sign) or a (same sign as before) re-solved from the constraint.
double constraint_T(double r, double a, double b, double R, double sign);
double constraint_a(double r, double b, double T, double R, double sign);

// K' in the order (a, b, T)
Mat3 covariation(const ReducedState& st, double R, double sigma);
// B with B B^T = K' on the constraint surface; columns act on (w, beta, gamma).
Mat3 noise_factor(const ReducedState& st, double R, double sigma);

struct StepOutcome {
  ReducedState state;
  double pre_residual = 0.0;  // constraint residual before correction
  double dMa = 0.0;           // martingale increment of a over the step
  bool a_corrected = false;
  bool sign_flip_a = false;
};

// One step in proper time: RK4 on the drift, Euler-Maruyama noise, constraint fix.
// noise = (w, beta, gamma) standard normals.
StepOutcome reduced_step(const ReducedState& st, double sigma, double R, double h,
                         const std::array<double, 3>& noise, double eps_T = 1e-3);

// One step with r as the clock, only where T cannot vanish (r < R). dr is signed
// and must agree with the sign of T. The angular pair is not touched.
StepOutcome radial_step(const ReducedState& st, double sigma, double R, double dr,
                        const std::array<double, 3>& noise);

// Exact rotation of (theta, n): rate b/r^2 in the (theta, n) plane and
// (sigma r / b) dbeta about theta. r and b are the values to freeze over the step.
void angular_step(Vec3& theta, Vec3& n, double r, double b, double sigma, double ds, double noise_beta,
                  double b_floor = 1e-300);
// [theta, n, theta^n] after Gram-Schmidt, so rounding does not accumulate.
Mat3 orthonormal_frame(const Vec3& theta, const Vec3& n);
// Same rotation as a 3x3 factor acting on V = [theta, n, theta^n] from the right.
Mat3 angular_rotation(double omega, double chi);

struct StepRule {
  double h0 = 1e-3;
  double h_min = 1e-14;
  double exponent = 1.0;
  double kappa = 0.01;  // relative radial step inside the hole
};
double adaptive_h(const ReducedState& st, double R, const StepRule& rule);

struct EnergyDecomposition {
  std::vector<double> w;
  std::vector<double> eta;
  double tail_oscillation = 0.0;
};
// dMa[i] is the martingale increment over [path[i], path[i+1]].
EnergyDecomposition log_energy_decomposition(const std::vector<ReducedState>& path, const std::vector<double>& dMa,
                                             double sigma, double R);

// Test function of (r, a, b, T) with gradient and Hessian.
struct TestFunction {
  std::function<double(const Eigen::Vector4d&)> f;
  std::function<Eigen::Vector4d(const Eigen::Vector4d&)> grad;
  std::function<Eigen::Matrix4d(const Eigen::Vector4d&)> hess;
};
// Generator of the reduced diffusion (r, a, b, T) applied to f.
double generator(const TestFunction& f, const ReducedState& st, double sigma, double R);

struct GeneratorCheck {
  double estimate = 0.0;   // E[f(step) - f(point)]/h
  double exact = 0.0;      // generator value
  double residual = 0.0;   // |estimate - exact|
  double std_error = 0.0;  // Monte Carlo standard error of estimate
};
GeneratorCheck generator_residual(const TestFunction& f, const ReducedState& st, double sigma, double R, double h,
                                  int N, std::uint64_t seed);

ReducedState reduced_from_spherical(const Eigen::Vector4d& x, const Eigen::Vector4d& xdot, double R);

}  // namespace reldiff
