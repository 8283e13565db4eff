#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "reldiff/minkowski.hpp"
#include "reldiff/rng.hpp"
#include "reldiff/stats.hpp"

using namespace reldiff;
using boost::math::quadrature::gauss_kronrod;

namespace {

Vec noise_vec(const CounterRng& rng, std::uint64_t step, int d) {
  Vec z(d);
  for (int j = 0; j < d; ++j) z(j) = rng.normal(step, static_cast<std::uint32_t>(j));
  return z;
}

Vec unit(int d, int k) {
  Vec e = Vec::Zero(d);
  e(k) = 1.0;
  return e;
}

// runs one path from st until p0 >= p0_stop and returns it
std::vector<MinkowskiState> run_until(MinkowskiState st, double sigma, double h, double p0_stop, const CounterRng& rng) {
  const int d = static_cast<int>(st.p.size()) - 1;
  std::vector<MinkowskiState> path{st};
  std::uint64_t k = 0;
  while (st.p(0) < p0_stop) {
    st = step_minkowski(st, sigma, h, noise_vec(rng, k++, d));
    path.push_back(st);
  }
  return path;
}

}  // namespace

TEST_CASE("boost generators are antisymmetric for the minkowski form") {
  for (int d : {2, 3, 4}) {
    const Mat n = eta(d + 1);
    for (const Mat& E : boost_generators(d)) CHECK((E.transpose() * n + n * E).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("sigma = 0 is a straight line at constant velocity") {
  MinkowskiState st = minkowski_start(3, 0.7, Vec::Ones(3));
  const Vec p0 = st.p;
  for (int i = 0; i < 100; ++i) st = step_minkowski(st, 0.0, 0.01, Vec::Zero(3));
  CHECK((st.p - p0).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((st.xi - st.s * p0).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("drift along p is (d sigma^2 / 2) h p") {
  const int d = 3;
  const double sigma = 1.0, h = 1e-3;
  const CounterRng rng(5, 0);
  const MinkowskiState st = minkowski_start(d, 0.0, unit(d, 0));
  const int N = 100000;
  Eigen::MatrixXd inc(N, 1);
  for (int i = 0; i < N; ++i) inc(i, 0) = step_minkowski(st, sigma, h, noise_vec(rng, i, d)).p(0) - 1.0;
  const double mean = inc.mean();
  const double se = std::sqrt(sample_covariance(inc)(0, 0) / N);
  CHECK(std::abs(mean - 0.5 * d * sigma * sigma * h) <= 3.0 * se);
}

TEST_CASE("covariation of dp matches sigma^2 (p p^T - eta^{-1}) h") {
  const int d = 3;
  const double sigma = 1.0, h = 1e-4;
  const CounterRng rng(6, 0);
  Vec dir(3);
  dir << 1.0, -0.5, 0.25;
  const MinkowskiState st = minkowski_start(d, 0.8, dir);
  const int N = 100000;
  Eigen::MatrixXd rows(N, d + 1);
  for (int i = 0; i < N; ++i) rows.row(i) = (step_minkowski(st, sigma, h, noise_vec(rng, i, d)).p - st.p).transpose();
  const Mat C = sample_covariance(rows);
  const Mat SE = covariance_se(rows);
  const Mat K = sigma * sigma * (st.p * st.p.transpose() - eta(d + 1)) * h;
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j) {
      CAPTURE(i);
      CAPTURE(j);
      CHECK(std::abs(C(i, j) - K(i, j)) <= 3.0 * SE(i, j));
    }
}

TEST_CASE("velocity stays on the hyperboloid") {
  const CounterRng rng(7, 0);
  MinkowskiState st = minkowski_start(3, 1.0, unit(3, 0));
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    st = step_minkowski(st, 1.0, 1e-3, noise_vec(rng, i, 3));
    worst = std::max(worst, std::abs(minkowski_inner(st.p, st.p) - 1.0));
    CHECK(st.p(0) >= 1.0);
  }
  CHECK(worst <= 1e-14);
}

TEST_CASE("asymptotic direction") {
  SUBCASE("sigma = 0 from (sqrt 2, 1, 0, 0)") {
    MinkowskiState st;
    st.xi = Vec::Zero(4);
    st.p = Vec::Zero(4);
    st.p(0) = std::sqrt(2.0);
    st.p(1) = 1.0;
    std::vector<MinkowskiState> path{st};
    for (int i = 0; i < 10; ++i) path.push_back(step_minkowski(path.back(), 0.0, 0.1, Vec::Zero(3)));
    const AsymptoticDirection a = asymptotic_direction(path, 1.0);
    CHECK(a.theta(0) == 1.0);
    CHECK(a.theta(1) == 0.0);
    CHECK(a.theta(2) == 0.0);
    CHECK_FALSE(a.undecided);
    CHECK(asymptotic_direction(path, 10.0).undecided);
  }
  SUBCASE("long paths move at nearly the speed of light") {
    // Z(t)/t at the first passage of p0 through 1e3 (median over paths) and 1e4 (every path)
    std::vector<double> dev3;
    for (std::uint64_t k = 0; k < 40; ++k) {
      const auto path = run_until(minkowski_start(3, 0.0, unit(3, 0)), 1.0, 1e-3, 1e4, CounterRng(8, k));
      size_t i3 = 0;
      while (path[i3].p(0) < 1e3) ++i3;
      const std::vector<MinkowskiState> head(path.begin(), path.begin() + static_cast<long>(i3) + 1);
      dev3.push_back(std::abs(asymptotic_direction(head, 1e3).mean_velocity.norm() - 1.0));
      const AsymptoticDirection a = asymptotic_direction(path, 1e3);
      CHECK_FALSE(a.undecided);
      CHECK(std::abs(a.mean_velocity.norm() - 1.0) <= 1e-2);
      std::vector<MinkowskiState> sparse;
      for (size_t i = 0; i < path.size(); i += 10) sparse.push_back(path[i]);
      if ((path.size() - 1) % 10 != 0) sparse.push_back(path.back());
      CHECK((asymptotic_direction(sparse, 1e3).theta - a.theta).norm() <= 1e-6);
    }
    CHECK(median(dev3) <= 1e-2);
  }
}

TEST_CASE("mean p0 grows and the rapidity drifts at (d - 1) sigma^2 / 2") {
  const int d = 3, N = 400;
  const double h = 2e-3, S = 4.0;
  double p0_start = 0.0, p0_end = 0.0, drho = 0.0;
  for (int k = 0; k < N; ++k) {
    const CounterRng rng(9, k);
    MinkowskiState st = minkowski_start(d, 3.0, unit(d, 1));
    p0_start += st.p(0);
    const double rho0 = std::acosh(st.p(0));
    const int steps = static_cast<int>(S / h);
    for (int i = 0; i < steps; ++i) st = step_minkowski(st, 1.0, h, noise_vec(rng, i, d));
    p0_end += st.p(0);
    drho += std::acosh(st.p(0)) - rho0;
  }
  CHECK(p0_end > p0_start);
  CHECK(drho / (N * S) == doctest::Approx(0.5 * (d - 1)).epsilon(0.10));
}

TEST_CASE("scattering density") {
  SUBCASE("uniform at the ball centre") {
    Vec th2(2);
    th2 << 0.6, 0.8;
    CHECK(scattering_density(unit(3, 0), th2) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-14));
    Vec th3(3);
    th3 << 0.0, 0.6, 0.8;
    CHECK(scattering_density(unit(4, 0), th3) == doctest::Approx(0.25 / std::numbers::pi).epsilon(1e-14));
  }
  SUBCASE("normalised on the circle and the sphere") {
    Vec d2(2);
    d2 << 0.3, -0.7;
    const MinkowskiState s2 = minkowski_start(2, 1.3, d2);
    CHECK(std::abs(scattering_cdf_2d(s2.p, std::numbers::pi) - 1.0) <= 1e-8);

    Vec d3(3);
    d3 << 0.2, 0.5, -0.4;
    const MinkowskiState s3 = minkowski_start(3, 1.1, d3);
    auto inner = [&](double th) {
      return gauss_kronrod<double, 61>::integrate(
          [&](double ph) {
            Vec t(3);
            t << std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th);
            return scattering_density(s3.p, t) * std::sin(th);
          },
          0.0, 2 * std::numbers::pi, 10, 1e-13);
    };
    const double total = gauss_kronrod<double, 61>::integrate(inner, 0.0, std::numbers::pi, 10, 1e-13);
    CHECK(std::abs(total - 1.0) <= 1e-8);
  }
}

TEST_CASE("d = 3 exit directions follow the hyperbolic harmonic measure") {
  const int d = 3, N = 2000;
  const MinkowskiState start = minkowski_start(d, 1.0, unit(d, 0));
  std::vector<double> c;
  for (int k = 0; k < N; ++k) {
    MinkowskiState st = start;
    const CounterRng rng(10, k);
    std::uint64_t i = 0;
    while (st.p(0) < 1e3) st = step_minkowski(st, 1.0, 2e-3, noise_vec(rng, i++, d));
    c.push_back(st.p(1) / st.p.tail(d).norm());
  }
  // density of cos(angle to e1): 2 pi * density(theta)
  auto pdf = [&](double x) {
    Vec t(3);
    t << x, std::sqrt(std::max(0.0, 1.0 - x * x)), 0.0;
    return 2 * std::numbers::pi * scattering_density(start.p, t);
  };
  auto cdf = [&](double x) { return gauss_kronrod<double, 61>::integrate(pdf, -1.0, std::min(1.0, x), 15, 1e-12); };
  const double D = ks_statistic(c, cdf);
  const double p = ks_pvalue(D, N);
  CAPTURE(D);
  CHECK(p > 0.01);
}
