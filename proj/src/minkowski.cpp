#include "reldiff/minkowski.hpp"

#include "reldiff/quadrature.hpp"
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace reldiff {

MinkowskiState minkowski_start(int d, double rapidity, const Vec& direction) {
  if (direction.size() != d) throw std::invalid_argument("minkowski_start: direction must have d components");
  MinkowskiState st;
  st.xi = Vec::Zero(d + 1);
  st.p = Vec::Zero(d + 1);
  st.p(0) = std::cosh(rapidity);
  const double nrm = direction.norm();
  if (nrm > 0.0) st.p.tail(d) = std::sinh(rapidity) * direction / nrm;
  return st;
}

std::vector<Mat> boost_generators(int d) {
  std::vector<Mat> E;
  for (int j = 1; j <= d; ++j) {
    Mat m = Mat::Zero(d + 1, d + 1);
    m(0, j) = m(j, 0) = 1.0;
    E.push_back(m);
  }
  return E;
}

Mat boost_to(const Vec& p) {
  const int n = static_cast<int>(p.size());
  const Vec v = p.tail(n - 1);
  Mat L = Mat::Identity(n, n);
  L(0, 0) = p(0);
  L.block(0, 1, 1, n - 1) = v.transpose();
  L.block(1, 0, n - 1, 1) = v;
  L.block(1, 1, n - 1, n - 1) += v * v.transpose() / (1.0 + p(0));
  return L;
}

MinkowskiState step_minkowski(const MinkowskiState& st, double sigma, double h, const Vec& noise) {
  const int n = static_cast<int>(st.p.size());
  const int d = n - 1;
  if (noise.size() != d) throw std::invalid_argument("step_minkowski: need d normals");
  MinkowskiState out = st;
  Vec p = st.p * (1.0 + 0.5 * d * sigma * sigma * h);
  if (sigma != 0.0) p += sigma * std::sqrt(h) * boost_to(st.p).rightCols(d) * noise;
  const double nn = minkowski_inner(p, p);
  if (!(nn > 0.0) || p(0) <= 0.0) throw std::runtime_error("step_minkowski: velocity left the hyperboloid");
  p.tail(d) /= std::sqrt(nn);
  p(0) = std::sqrt(1.0 + p.tail(d).squaredNorm());
  out.xi = st.xi + 0.5 * h * (st.p + p);
  out.p = p;
  out.s = st.s + h;
  return out;
}

AsymptoticDirection asymptotic_direction(const std::vector<MinkowskiState>& path, double p0_threshold) {
  if (path.empty()) throw std::invalid_argument("asymptotic_direction: empty path");
  const MinkowskiState& last = path.back();
  const int d = static_cast<int>(last.p.size()) - 1;
  AsymptoticDirection out;
  const Vec v = last.p.tail(d);
  out.theta = v / v.norm();
  out.mean_velocity = last.xi.tail(d) / last.xi(0);
  out.undecided = last.p(0) < p0_threshold;
  return out;
}

double scattering_density(const Vec& p0, const Vec& theta) {
  const int d = static_cast<int>(theta.size());
  const Vec y = p0.tail(d) / (1.0 + p0(0));  // Poincare ball point
  const double k = (1.0 - y.squaredNorm()) / (y - theta).squaredNorm();
  const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  return std::pow(k, d - 1) / area;
}

double scattering_cdf_2d(const Vec& p0, double angle) {
  if (p0.size() != 3) throw std::invalid_argument("scattering_cdf_2d: d must be 2");
  auto dens = [&](double phi) {
    Vec th(2);
    th << std::cos(phi), std::sin(phi);
    return scattering_density(p0, th);
  };
  return integrate_gk<61>(dens, -std::numbers::pi, angle);
}

}  // namespace reldiff
