#pragma once
#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace reldiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Coordinate orderings:
//   minkowski           (x0, x1, ..., xd)
//   spherical           (t, r, phi, psi)
//   ef_inward           (u-, r, phi, psi)
//   ef_outward          (u+, r, phi, psi)
//   kruskal             (v, u, phi, psi)
enum class Chart { minkowski, spherical, ef_inward, ef_outward, kruskal };

std::string chart_name(Chart c);
Chart chart_from_name(const std::string& s);

struct ChartDomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct MetricProvider {
  Chart chart = Chart::spherical;
  double R = 1.0;
  int d = 3;  // spatial dimension, only free for minkowski

  int dim() const { return chart == Chart::minkowski ? d + 1 : 4; }
};

constexpr double kHorizonGuard = 1e-9;
constexpr double kPoleGuard = 1e-9;

double minkowski_inner(const Vec& x, const Vec& y);

// Areal radius at a chart point (0 for minkowski).
double areal_radius(const MetricProvider& p, const Vec& x);
void check_domain(const MetricProvider& p, const Vec& x);

Mat metric(const MetricProvider& p, const Vec& x);
Mat inverse_metric(const MetricProvider& p, const Vec& x);
// dg[k](i,j) = d g_ij / d x^k
std::vector<Mat> metric_derivatives(const MetricProvider& p, const Vec& x);

struct Christoffel {
  int n = 0;
  std::vector<double> v;  // v[(k*n + i)*n + j] = Gamma^k_ij
  explicit Christoffel(int n_ = 4) : n(n_), v(static_cast<size_t>(n_ * n_ * n_), 0.0) {}
  double& operator()(int k, int i, int j) { return v[(k * n + i) * n + j]; }
  double operator()(int k, int i, int j) const { return v[(k * n + i) * n + j]; }
};

Christoffel christoffel(const MetricProvider& p, const Vec& x);

// Riemann tensor R^rho_{sigma mu nu}, flattened [((rho*n+sigma)*n+mu)*n+nu],
// from central differences of the Christoffel symbols.
std::vector<double> riemann(const MetricProvider& p, const Vec& x, double h = 1e-5);
Mat ricci(const MetricProvider& p, const Vec& x, double h = 1e-5);

// Frame: columns e_0 ... e_d at base point x.
struct Frame {
  Vec x;
  Mat e;
};

// Pseudo-orthonormality defect: max |e^T g e - eta|.
double frame_defect(const MetricProvider& p, const Frame& f);
Frame renormalize_frame(const Frame& f, const MetricProvider& p);

// One midpoint step of d/ds M^i_l = M^i_q Gamma^q_{lm} v^m.
Mat transport_inverse_step(const Mat& M, const MetricProvider& p, const Vec& x, const Vec& v, double h);
// Projects M so that M^T g(x0) M = g(x), using pseudo-orthonormal frames at both ends.
Mat restore_transport(const Mat& M, const Mat& frame_x, const Mat& frame_0);

Mat eta(int n);

}  // namespace reldiff
