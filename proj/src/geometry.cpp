#include "reldiff/geometry.hpp"

#include <cmath>

#include "reldiff/kruskal.hpp"

namespace reldiff {

std::string chart_name(Chart c) {
  switch (c) {
    case Chart::minkowski: return "minkowski";
    case Chart::spherical: return "schwarzschild-spherical";
    case Chart::ef_inward: return "eddington-finkelstein-inward";
    case Chart::ef_outward: return "eddington-finkelstein-outward";
    case Chart::kruskal: return "kruskal";
  }
  return "unknown";
}

Chart chart_from_name(const std::string& s) {
  for (Chart c : {Chart::minkowski, Chart::spherical, Chart::ef_inward, Chart::ef_outward, Chart::kruskal})
    if (chart_name(c) == s) return c;
  throw std::invalid_argument("unknown chart: " + s);
}

double minkowski_inner(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() < 1) throw std::invalid_argument("minkowski_inner: dimension mismatch");
  return x(0) * y(0) - x.tail(x.size() - 1).dot(y.tail(y.size() - 1));
}

Mat eta(int n) {
  Mat m = -Mat::Identity(n, n);
  m(0, 0) = 1.0;
  return m;
}

double areal_radius(const MetricProvider& p, const Vec& x) {
  switch (p.chart) {
    case Chart::minkowski: return 0.0;
    case Chart::kruskal: return r_of_w(x(1) * x(1) - x(0) * x(0), p.R);
    default: return x(1);
  }
}

void check_domain(const MetricProvider& p, const Vec& x) {
  if (x.size() != p.dim()) throw std::invalid_argument("chart point has wrong dimension");
  if (p.chart == Chart::minkowski) return;
  if (std::abs(std::sin(x(2))) < kPoleGuard) throw ChartDomainError("pole guard: sin(phi) too small");
  switch (p.chart) {
    case Chart::spherical:
      if (x(1) <= p.R * (1.0 + kHorizonGuard)) throw ChartDomainError("spherical chart requires r > R");
      break;
    case Chart::ef_inward:
    case Chart::ef_outward:
      if (x(1) <= 0.0) throw ChartDomainError("EF chart requires r > 0");
      break;
    case Chart::kruskal:
      if (x(1) * x(1) - x(0) * x(0) <= -1.0) throw ChartDomainError("Kruskal chart requires v^2 - u^2 < 1");
      break;
    default: break;
  }
}

namespace {

struct KsRadius {
  double r, F, dF, G;  // F = 4R^3 e^{-r/R}/r, dF = dF/dr, G = dr/dw
};

KsRadius ks_radius(const MetricProvider& p, const Vec& x) {
  const double R = p.R;
  const double r = r_of_w(x(1) * x(1) - x(0) * x(0), R);
  const double e = std::exp(-r / R);
  const double F = 4.0 * R * R * R * e / r;
  return {r, F, -F * (1.0 / r + 1.0 / R), R * R * e / r};
}

}  // namespace

Mat metric(const MetricProvider& p, const Vec& x) {
  check_domain(p, x);
  const int n = p.dim();
  if (p.chart == Chart::minkowski) return eta(n);
  Mat g = Mat::Zero(4, 4);
  const double s = std::sin(x(2));
  const double R = p.R;
  double r = x(1);
  switch (p.chart) {
    case Chart::spherical: {
      const double f = 1.0 - R / r;
      g(0, 0) = f;
      g(1, 1) = -1.0 / f;
      break;
    }
    case Chart::ef_inward:
    case Chart::ef_outward: {
      const double eps = p.chart == Chart::ef_inward ? -1.0 : 1.0;
      g(0, 0) = 1.0 - R / r;
      g(0, 1) = g(1, 0) = eps;
      break;
    }
    case Chart::kruskal: {
      const KsRadius k = ks_radius(p, x);
      r = k.r;
      g(0, 0) = k.F;
      g(1, 1) = -k.F;
      break;
    }
    default: break;
  }
  g(2, 2) = -r * r;
  g(3, 3) = -r * r * s * s;
  return g;
}

Mat inverse_metric(const MetricProvider& p, const Vec& x) {
  check_domain(p, x);
  if (p.chart == Chart::minkowski) return eta(p.dim());
  if (p.chart == Chart::ef_inward || p.chart == Chart::ef_outward) {
    const double eps = p.chart == Chart::ef_inward ? -1.0 : 1.0;
    const double r = x(1), s = std::sin(x(2));
    Mat gi = Mat::Zero(4, 4);
    gi(0, 1) = gi(1, 0) = eps;
    gi(1, 1) = -(1.0 - p.R / r);
    gi(2, 2) = -1.0 / (r * r);
    gi(3, 3) = -1.0 / (r * r * s * s);
    return gi;
  }
  Mat g = metric(p, x);
  Mat gi = Mat::Zero(4, 4);
  for (int i = 0; i < 4; ++i) gi(i, i) = 1.0 / g(i, i);
  return gi;
}

std::vector<Mat> metric_derivatives(const MetricProvider& p, const Vec& x) {
  check_domain(p, x);
  const int n = p.dim();
  std::vector<Mat> dg(n, Mat::Zero(n, n));
  if (p.chart == Chart::minkowski) return dg;
  const double R = p.R;
  const double s = std::sin(x(2)), c = std::cos(x(2));
  switch (p.chart) {
    case Chart::spherical: {
      const double r = x(1), f = 1.0 - R / r;
      dg[1](0, 0) = R / (r * r);
      dg[1](1, 1) = R / (r * r * f * f);
      dg[1](2, 2) = -2.0 * r;
      dg[1](3, 3) = -2.0 * r * s * s;
      dg[2](3, 3) = -2.0 * r * r * s * c;
      break;
    }
    case Chart::ef_inward:
    case Chart::ef_outward: {
      const double r = x(1);
      dg[1](0, 0) = R / (r * r);
      dg[1](2, 2) = -2.0 * r;
      dg[1](3, 3) = -2.0 * r * s * s;
      dg[2](3, 3) = -2.0 * r * r * s * c;
      break;
    }
    case Chart::kruskal: {
      const KsRadius k = ks_radius(p, x);
      const double rv = -2.0 * x(0) * k.G, ru = 2.0 * x(1) * k.G;
      const double dr[2] = {rv, ru};
      for (int m = 0; m < 2; ++m) {
        dg[m](0, 0) = k.dF * dr[m];
        dg[m](1, 1) = -k.dF * dr[m];
        dg[m](2, 2) = -2.0 * k.r * dr[m];
        dg[m](3, 3) = -2.0 * k.r * dr[m] * s * s;
      }
      dg[2](3, 3) = -2.0 * k.r * k.r * s * c;
      break;
    }
    default: break;
  }
  return dg;
}

Christoffel christoffel(const MetricProvider& p, const Vec& x) {
  check_domain(p, x);
  const int n = p.dim();
  Christoffel G(n);
  if (p.chart == Chart::minkowski) return G;
  if (p.chart == Chart::spherical) {
    const double R = p.R, r = x(1);
    const double s = std::sin(x(2)), c = std::cos(x(2));
    const double a = R / (2.0 * r * (r - R));
    G(0, 0, 1) = G(0, 1, 0) = a;
    G(1, 1, 1) = -a;
    G(1, 0, 0) = R * (r - R) / (2.0 * r * r * r);
    G(1, 2, 2) = R - r;
    G(1, 3, 3) = (R - r) * s * s;
    G(2, 1, 2) = G(2, 2, 1) = 1.0 / r;
    G(3, 1, 3) = G(3, 3, 1) = 1.0 / r;
    G(2, 3, 3) = -s * c;
    G(3, 2, 3) = G(3, 3, 2) = c / s;
    return G;
  }
  const Mat gi = inverse_metric(p, x);
  const std::vector<Mat> dg = metric_derivatives(p, x);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l) {
          if (gi(k, l) == 0.0) continue;
          acc += gi(k, l) * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
        }
        G(k, i, j) = G(k, j, i) = 0.5 * acc;
      }
  return G;
}

namespace {

// dG[m] = d Gamma / d x^m by the five-point central stencil
std::vector<Christoffel> christoffel_derivatives(const MetricProvider& p, const Vec& x, double h) {
  const int n = p.dim();
  std::vector<Christoffel> dG;
  dG.reserve(n);
  auto at = [&](int m, double off) {
    Vec y = x;
    y(m) += off;
    return christoffel(p, y);
  };
  for (int m = 0; m < n; ++m) {
    const Christoffel G2 = at(m, 2 * h), G1 = at(m, h), M1 = at(m, -h), M2 = at(m, -2 * h);
    Christoffel d(n);
    for (size_t q = 0; q < d.v.size(); ++q) d.v[q] = (8.0 * (G1.v[q] - M1.v[q]) - (G2.v[q] - M2.v[q])) / (12.0 * h);
    dG.push_back(std::move(d));
  }
  return dG;
}

}  // namespace

std::vector<double> riemann(const MetricProvider& p, const Vec& x, double h) {
  const int n = p.dim();
  std::vector<double> Rm(static_cast<size_t>(n * n * n * n), 0.0);
  if (p.chart == Chart::minkowski) return Rm;
  const Christoffel G = christoffel(p, x);
  const auto dG = christoffel_derivatives(p, x, h);
  for (int rho = 0; rho < n; ++rho)
    for (int sg = 0; sg < n; ++sg)
      for (int mu = 0; mu < n; ++mu)
        for (int nu = 0; nu < n; ++nu) {
          double v = dG[mu](rho, nu, sg) - dG[nu](rho, mu, sg);
          for (int l = 0; l < n; ++l) v += G(rho, mu, l) * G(l, nu, sg) - G(rho, nu, l) * G(l, mu, sg);
          Rm[((rho * n + sg) * n + mu) * n + nu] = v;
        }
  return Rm;
}

Mat ricci(const MetricProvider& p, const Vec& x, double h) {
  const int n = p.dim();
  Mat Ric = Mat::Zero(n, n);
  if (p.chart == Chart::minkowski) return Ric;
  const Christoffel G = christoffel(p, x);
  const auto dG = christoffel_derivatives(p, x, h);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) {
        v += dG[k](k, i, j) - dG[j](k, i, k);
        for (int l = 0; l < n; ++l) v += G(k, k, l) * G(l, i, j) - G(k, j, l) * G(l, i, k);
      }
      Ric(i, j) = v;
    }
  return Ric;
}

double frame_defect(const MetricProvider& p, const Frame& f) {
  const Mat g = metric(p, f.x);
  return (f.e.transpose() * g * f.e - eta(static_cast<int>(f.e.cols()))).cwiseAbs().maxCoeff();
}

namespace {

// Gram-Schmidt of the columns of E in the form G, starting from column 0
// (timelike) and treating the rest as spacelike.
Mat pseudo_gram_schmidt(const Mat& E, const Mat& G) {
  Mat Q = E;
  const int n = static_cast<int>(E.cols());
  for (int j = 0; j < n; ++j) {
    for (int pass = 0; pass < 2; ++pass)
      for (int i = 0; i < j; ++i) {
        const double sgn = i == 0 ? 1.0 : -1.0;
        Q.col(j) -= sgn * Q.col(j).dot(G * Q.col(i)) * Q.col(i);
      }
    const double nn = Q.col(j).dot(G * Q.col(j));
    if (j == 0 ? nn <= 0.0 : nn >= 0.0) throw std::runtime_error("degenerate frame");
    Q.col(j) /= std::sqrt(std::abs(nn));
  }
  return Q;
}

}  // namespace

Frame renormalize_frame(const Frame& f, const MetricProvider& p) {
  return {f.x, pseudo_gram_schmidt(f.e, metric(p, f.x))};
}

Mat transport_inverse_step(const Mat& M, const MetricProvider& p, const Vec& x, const Vec& v, double h) {
  if (h == 0.0 || p.chart == Chart::minkowski) return M;
  const int n = p.dim();
  auto A = [&](const Vec& y) {
    const Christoffel G = christoffel(p, y);
    Mat a = Mat::Zero(n, n);
    for (int q = 0; q < n; ++q)
      for (int l = 0; l < n; ++l) {
        double acc = 0.0;
        for (int m = 0; m < n; ++m) acc += G(q, l, m) * v(m);
        a(q, l) = acc;
      }
    return a;
  };
  const Mat k1 = M * A(x);
  const Mat Mmid = M + 0.5 * h * k1;
  return M + h * (Mmid * A(x + 0.5 * h * v));
}

Mat restore_transport(const Mat& M, const Mat& frame_x, const Mat& frame_0) {
  const int n = static_cast<int>(M.rows());
  const Mat Q = frame_0.partialPivLu().solve(M * frame_x);
  const Mat L = pseudo_gram_schmidt(Q, eta(n));
  return frame_0 * L * frame_x.inverse();
}

}  // namespace reldiff
