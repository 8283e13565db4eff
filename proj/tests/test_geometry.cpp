#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "reldiff/frame_flow.hpp"
#include "reldiff/geometry.hpp"
#include "reldiff/kruskal.hpp"

using namespace reldiff;

namespace {

Vec vec(std::initializer_list<double> v) {
  Vec x(static_cast<int>(v.size()));
  int i = 0;
  for (double c : v) x(i++) = c;
  return x;
}

MetricProvider provider(Chart c, double R = 1.0) {
  MetricProvider p;
  p.chart = c;
  p.R = R;
  return p;
}

struct ChartPoint {
  Chart chart;
  Vec x;
};

std::vector<ChartPoint> sample_points() {
  return {{Chart::spherical, vec({0.3, 3.0, 1.0, 0.4})},
          {Chart::ef_inward, vec({0.2, 0.5, 1.0, 0.7})},
          {Chart::ef_inward, vec({0.2, 2.5, 0.8, 0.7})},
          {Chart::ef_outward, vec({-0.4, 2.5, 1.3, 2.0})},
          {Chart::ef_outward, vec({-0.4, 0.6, 1.3, 2.0})},
          {Chart::kruskal, vec({0.3, 0.8, 1.1, 0.2})},
          {Chart::kruskal, vec({0.9, 0.3, 1.1, 0.2})}};
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("minkowski inner product") {
  CHECK(minkowski_inner(vec({1, 0, 0, 0}), vec({1, 0, 0, 0})) == 1.0);
  CHECK(minkowski_inner(vec({1, 1, 0, 0}), vec({1, 1, 0, 0})) == 0.0);
  CHECK(minkowski_inner(vec({0, 1, 0, 0}), vec({0, 1, 0, 0})) == -1.0);
  CHECK_THROWS(minkowski_inner(vec({1, 0, 0}), vec({1, 0, 0, 0})));
}

TEST_CASE("spherical christoffel closed forms") {
  const auto p = provider(Chart::spherical);
  const Christoffel G = christoffel(p, vec({0.0, 2.0, std::numbers::pi / 2, 0.3}));
  CHECK(G(1, 2, 2) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(G(0, 1, 0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(G(0, 0, 1) == G(0, 1, 0));
}

TEST_CASE("minkowski christoffel and ricci vanish exactly") {
  MetricProvider p = provider(Chart::minkowski);
  p.d = 3;
  const Vec x = vec({1.0, -2.0, 0.5, 3.0});
  const Christoffel G = christoffel(p, x);
  for (double g : G.v) CHECK(g == 0.0);
  CHECK(max_abs(ricci(p, x)) == 0.0);
}

TEST_CASE("chart domains are enforced") {
  CHECK_THROWS_AS(christoffel(provider(Chart::spherical), vec({0, 1.0, 1.0, 0})), ChartDomainError);
  CHECK_THROWS_AS(christoffel(provider(Chart::spherical), vec({0, 0.5, 1.0, 0})), ChartDomainError);
  CHECK_THROWS_AS(christoffel(provider(Chart::spherical), vec({0, 3.0, 0.0, 0})), ChartDomainError);
  CHECK_THROWS_AS(metric(provider(Chart::ef_inward), vec({0, -0.1, 1.0, 0})), ChartDomainError);
  CHECK_THROWS_AS(metric(provider(Chart::kruskal), vec({1.5, 0.1, 1.0, 0})), ChartDomainError);
}

TEST_CASE("christoffel symbols are symmetric in the lower indices") {
  for (const auto& cp : sample_points()) {
    const auto p = provider(cp.chart);
    const Christoffel G = christoffel(p, cp.x);
    for (int k = 0; k < 4; ++k)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(G(k, i, j) == G(k, j, i));
  }
}

TEST_CASE("metric compatibility by finite differences") {
  const double h = 1e-5;
  for (const auto& cp : sample_points()) {
    CAPTURE(chart_name(cp.chart));
    CAPTURE(cp.x.transpose());
    const auto p = provider(cp.chart);
    const Christoffel G = christoffel(p, cp.x);
    const Mat g = metric(p, cp.x);
    double worst = 0.0;
    for (int i = 0; i < 4; ++i) {
      Vec xp = cp.x, xm = cp.x;
      xp(i) += h;
      xm(i) -= h;
      const Mat dg = (metric(p, xp) - metric(p, xm)) / (2 * h);
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
          double c = dg(j, k);
          for (int l = 0; l < 4; ++l) c -= G(l, i, j) * g(l, k) + G(l, i, k) * g(j, l);
          worst = std::max(worst, std::abs(c));
        }
    }
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("metric times inverse metric is the identity") {
  for (const auto& cp : sample_points()) {
    const auto p = provider(cp.chart);
    CHECK(max_abs(metric(p, cp.x) * inverse_metric(p, cp.x) - Mat::Identity(4, 4)) <= 1e-13);
  }
}

TEST_CASE("ricci vanishes at the documented points") {
  CHECK(max_abs(ricci(provider(Chart::spherical), vec({0.0, 3.0, 1.0, 0.2}))) <= 1e-6);
  CHECK(max_abs(ricci(provider(Chart::ef_inward), vec({0.0, 0.5, 1.0, 0.2}))) <= 1e-6);
  CHECK(max_abs(ricci(provider(Chart::ef_outward), vec({0.0, 0.5, 1.0, 0.2}))) <= 1e-6);
  CHECK(max_abs(ricci(provider(Chart::kruskal), vec({0.4, 0.7, 1.0, 0.2}))) <= 1e-6);
}

TEST_CASE("chart changes preserve the pseudo-norm") {
  const double R = 1.0;
  const double t = 0.7, r = 2.6, ph = 1.1, ps = 0.3;
  const Vec xs = vec({t, r, ph, ps});
  const Vec vs = vec({1.9, -0.8, 0.12, 0.21});
  const double f = 1.0 - R / r;
  const double ns = vs.dot(metric(provider(Chart::spherical), xs) * vs);

  SUBCASE("eddington-finkelstein") {
    for (int sgn : {+1, -1}) {
      const Chart c = sgn > 0 ? Chart::ef_inward : Chart::ef_outward;
      const Vec x = vec({t + sgn * tortoise(r, R), r, ph, ps});
      const Vec v = vec({vs(0) + sgn * vs(1) / f, vs(1), vs(2), vs(3)});
      CHECK(v.dot(metric(provider(c), x) * v) == doctest::Approx(ns).epsilon(1e-10));
    }
  }
  SUBCASE("kruskal") {
    const KsPoint k = ks_from_schwarzschild(t, r, R);
    const double m = std::sqrt(r / R - 1.0) * std::exp(r / (2 * R));
    const double dm = m * (0.5 / (r - R) + 0.5 / R);
    const double tau = t / (2 * R);
    const double udot = dm * vs(1) * std::cosh(tau) + m * std::sinh(tau) * vs(0) / (2 * R);
    const double vdot = dm * vs(1) * std::sinh(tau) + m * std::cosh(tau) * vs(0) / (2 * R);
    const Vec x = vec({k.v, k.u, ph, ps});
    const Vec v = vec({vdot, udot, vs(2), vs(3)});
    CHECK(areal_radius(provider(Chart::kruskal), x) == doctest::Approx(r).epsilon(1e-13));
    CHECK(v.dot(metric(provider(Chart::kruskal), x) * v) == doctest::Approx(ns).epsilon(1e-10));
  }
}

TEST_CASE("transport: identity on flat space, unchanged at h = 0") {
  MetricProvider flat = provider(Chart::minkowski);
  flat.d = 3;
  Mat M = Mat::Identity(4, 4);
  Vec x = vec({0, 0, 0, 0});
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 50; ++i) {
    const Vec v = vec({1.5, nd(gen), nd(gen), nd(gen)});
    M = transport_inverse_step(M, flat, x, v, 0.1);
    x += 0.1 * v;
  }
  CHECK(max_abs(M - Mat::Identity(4, 4)) == 0.0);

  const auto sph = provider(Chart::spherical);
  Mat A = Mat::Random(4, 4);
  CHECK(max_abs(transport_inverse_step(A, sph, vec({0, 3, 1, 0}), vec({1, 0.2, 0.1, 0}), 0.0) - A) == 0.0);
}

TEST_CASE("holonomy of a small coordinate loop matches the curvature") {
  // Loop in the (r, phi) plane; the holonomy defect divided by the area is R^rho_{sigma r phi}.
  const auto p = provider(Chart::spherical);
  const Vec x0 = vec({0.0, 3.0, 1.0, 0.5});
  const int mu = 1, nu = 2;
  const double eps = 2e-3;
  const int n = 200;
  const double h = eps / n;
  Mat M = Mat::Identity(4, 4);
  Vec x = x0;
  const std::array<std::pair<int, double>, 4> legs{{{mu, 1.0}, {nu, 1.0}, {mu, -1.0}, {nu, -1.0}}};
  for (auto [dir, sgn] : legs) {
    Vec v = Vec::Zero(4);
    v(dir) = sgn;
    for (int i = 0; i < n; ++i) {
      M = transport_inverse_step(M, p, x, v, h);
      x += h * v;
    }
  }
  const std::vector<double> Rm = riemann(p, x0);
  Mat Riem(4, 4);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) Riem(a, b) = Rm[((a * 4 + b) * 4 + mu) * 4 + nu];
  const Mat H = (M - Mat::Identity(4, 4)) / (eps * eps);
  REQUIRE(max_abs(Riem) > 0.01);
  CHECK(max_abs(H - Riem) <= 0.02 * max_abs(Riem));
}

TEST_CASE("renormalize_frame") {
  const auto p = provider(Chart::spherical);
  const Vec x = vec({0.0, 3.0, 1.0, 0.3});
  const Vec vel = [&] {
    Vec v = vec({1.4, 0.3, 0.05, 0.1});
    const double nn = v.dot(metric(p, x) * v);
    return Vec(v / std::sqrt(nn));
  }();
  const Frame f = frame_from_velocity(p, x, vel);
  REQUIRE(frame_defect(p, f) <= 1e-14);

  SUBCASE("idempotent on an orthonormal frame") {
    const Frame g = renormalize_frame(f, p);
    CHECK(max_abs(g.e - f.e) <= 1e-14);
  }
  SUBCASE("scaled e0 is brought back to unit pseudo-norm") {
    Frame g = f;
    g.e.col(0) *= 1.0 + 1e-6;
    const Frame h = renormalize_frame(g, p);
    CHECK(max_abs(h.e.col(0) - f.e.col(0)) <= 1e-14);
    CHECK(frame_defect(p, h) <= 1e-14);
  }
  SUBCASE("random perturbations") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> nd;
    for (int k = 0; k < 200; ++k) {
      Frame g = f;
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g.e(i, j) += 1e-4 * nd(gen);
      const Frame h = renormalize_frame(g, p);
      CHECK(frame_defect(p, h) <= 1e-14);
      CHECK(h.e.col(0)(0) > 0.0);
    }
  }
  SUBCASE("degenerate frame is rejected") {
    Frame g = f;
    g.e.col(0) = g.e.col(1);
    CHECK_THROWS(renormalize_frame(g, p));
  }
}
