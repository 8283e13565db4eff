#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "reldiff/geodesics.hpp"

using namespace reldiff;

namespace {

constexpr double pi = std::numbers::pi;

double g_of(double a, double b, double r, double R) { return (a * a - 1) * r * r * r + R * r * r - b * b * r + R * b * b; }

// number of sign changes of g on a dense grid, as an independent root count
int sign_changes(double a, double b, double R) {
  int n = 0;
  double prev = g_of(a, b, 1e-9, R);
  for (double r = 1e-3; r < 1e4; r *= 1.0005) {
    const double v = g_of(a, b, r, R);
    if ((v < 0) != (prev < 0)) ++n;
    prev = v;
  }
  return n;
}

}  // namespace

TEST_CASE("effective potential") {
  CHECK(effective_potential(0.0, 2.0, 1.0) == 1.0);
  CHECK(effective_potential(1.0 / 3.0, std::sqrt(3.0), 1.0) == doctest::Approx(8.0 / 9.0).epsilon(1e-15));
  CHECK(effective_potential(1.0, 5.0, 1.0) == 0.0);
  CHECK(effective_potential(0.5, 5.0, 2.0) == 0.0);
}

TEST_CASE("critical points") {
  const auto c = critical_points(std::sqrt(3.0), 1.0);
  REQUIRE(c.has_value());
  CHECK(c->u1 == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(c->u2 == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(c->P1 == doctest::Approx(8.0 / 9.0).epsilon(1e-12));
  const auto d = critical_points(2.0, 1.0);
  REQUIRE(d.has_value());
  CHECK(d->u1 == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(d->u2 == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK_FALSE(critical_points(1.7, 1.0).has_value());
  // displayed closed form for P(u1)
  const double b = 5.0, R = 1.3;
  const auto e = critical_points(b, R);
  const double sq = std::sqrt(1 - 3 * R * R / (b * b));
  CHECK(e->P1 == doctest::Approx(8.0 / 9.0 + 2.0 / (27 * R * R) * (b * b - 3 * R * R) * (1 + sq)).epsilon(1e-13));
}

TEST_CASE("timelike classification examples") {
  const double R = 1.0;
  CHECK(classify_timelike(1.2, R, 2 * R, R).tag == TimelikeCase::c1_1);

  const TimelikeClass c13 = classify_timelike(std::sqrt(8.0 / 9.0), std::sqrt(3.0), 2 * R, R);
  CHECK(c13.tag == TimelikeCase::c1_3);
  REQUIRE(c13.roots.size() == 1);
  CHECK(c13.roots[0].multiplicity == 3);
  CHECK(c13.roots[0].r == doctest::Approx(3.0).epsilon(1e-6));

  const double b = 2 * R * std::sqrt(3.0);
  const auto cp = critical_points(b, R);
  double a2 = 0.5 * (cp->P1 + cp->P2);
  if (a2 >= 1.0) a2 = 0.5 * (cp->P2 + std::min(cp->P1, 1.0));
  const double a = std::sqrt(a2);
  const auto roots = radial_roots(a, b, R);
  REQUIRE(roots.size() == 3);
  CHECK(sign_changes(a, b, R) == 3);
  const double r0 = 0.5 * (roots[1].r + roots[2].r);
  const TimelikeClass c26 = classify_timelike(a, b, r0, R);
  CHECK(c26.tag == TimelikeCase::c2_6);
  const TimelikeOrbit orb(a, b, r0, 1, R);
  CHECK(orb.periodic());
  CHECK(orb.lower() == doctest::Approx(roots[1].r).epsilon(1e-12));
  CHECK(orb.upper() == doctest::Approx(roots[2].r).epsilon(1e-12));
  CHECK(orb.r_at(orb.period()) == doctest::Approx(r0).epsilon(1e-7));
  // between R0 and R1 is forbidden
  CHECK(classify_timelike(a, b, 0.5 * (roots[0].r + roots[1].r), R).tag == TimelikeCase::infeasible);
}

TEST_CASE("every case has a representative") {
  const double R = 1.0;
  auto cp = [&](double b) { return *critical_points(b, R); };
  const auto c4 = cp(4.0), c19 = cp(1.9), c175 = cp(1.75);
  struct Rep {
    double a, b, r0;
    TimelikeCase tag;
  };
  const std::vector<Rep> reps{
      {1.2, 1.0, 2.0, TimelikeCase::c1_1},
      {0.9, 1.0, 2.0, TimelikeCase::c1_2},
      {std::sqrt(8.0 / 9.0), std::sqrt(3.0), 2.0, TimelikeCase::c1_3},
      {1.8, 4.0, 2.0, TimelikeCase::c2_1},
      {0.9, 4.0, 0.5, TimelikeCase::c2_2_1},
      {std::sqrt(0.98), 1.9, 3.0, TimelikeCase::c2_2_2},
      {std::sqrt(c4.P1), 4.0, 3.0, TimelikeCase::c2_3},
      {std::sqrt(1.5), 4.0, 40.0, TimelikeCase::c2_4},
      {std::sqrt(c19.P1), 1.9, 4.0, TimelikeCase::c2_5_1},
      {std::sqrt(c19.P2), 1.9, 1.0 / c19.u2, TimelikeCase::c2_5_2},
      {std::sqrt(0.5 * (c175.P1 + c175.P2)), 1.75, 3.0, TimelikeCase::c2_6},
  };
  for (const Rep& r : reps) {
    CAPTURE(case_name(r.tag));
    CHECK(classify_timelike(r.a, r.b, r.r0, R).tag == r.tag);
  }
}

TEST_CASE("integration asymptotics") {
  const double R = 1.0;
  SUBCASE("|a| = 1, b = 0: r ~ (9 R s^2 / 4)^(1/3)") {
    const TimelikeOrbit o(1.0, 0.0, 2.0, 1, R);
    CHECK(o.unbounded());
    const double e4 = std::abs(o.r_at(1e4) / std::cbrt(9 * R * 1e8 / 4) - 1);
    const double e6 = std::abs(o.r_at(1e6) / std::cbrt(9 * R * 1e12 / 4) - 1);
    CHECK(e6 < e4);
    CHECK(e6 <= 1e-2);
  }
  SUBCASE("case 2.4 unbounded branch: r/s -> sqrt(a^2 - 1)") {
    const double a = std::sqrt(1.5);
    const TimelikeOrbit o(a, 4.0, 40.0, -1, R);
    CHECK(o.unbounded());
    CHECK(o.r_at(1e6) / 1e6 == doctest::Approx(std::sqrt(a * a - 1)).epsilon(1e-4));
  }
  SUBCASE("circular orbit on a double root") {
    const double b = 4.0;
    const auto c = *critical_points(b, R);
    const double rc = 1.0 / c.u1;
    const TimelikeOrbit o(std::sqrt(c.P1), b, rc, 1, R);
    CHECK(o.circular());
    const double g = g_of(std::sqrt(c.P1), b, rc, R);
    const double dg = 3 * (c.P1 - 1) * rc * rc + 2 * R * rc - b * b;
    CHECK(std::abs(g) <= 1e-12 * b * b);
    CHECK(std::abs(dg) <= 1e-12 * b * b);
    CHECK(o.r_at(10.0) == rc);
    CHECK(o.phi_at(10.0) == doctest::Approx(b / (rc * rc) * 10.0).epsilon(1e-15));
  }
  SUBCASE("double root is approached in infinite time") {
    const auto c = *critical_points(4.0, R);
    const TimelikeOrbit o(std::sqrt(c.P1), 4.0, 3.0, -1, R);
    CHECK(o.asymptotic());
    CHECK(o.r_at(100.0) > 1.0 / c.u1);
    CHECK(o.r_at(100.0) < o.r_at(10.0));
  }
}

TEST_CASE("classification and integration agree over a parameter grid") {
  const double R = 1.0;
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> ua(0.8, 2.0), ub(0.2, 6.0), ur(0.2, 12.0);
  int checked = 0;
  while (checked < 1000) {
    const double a = ua(gen), b = ub(gen), r0 = ur(gen);
    const TimelikeClass c = classify_timelike(a, b, r0, R);
    if (c.tag == TimelikeCase::infeasible) continue;
    const int dir = checked % 2 == 0 ? 1 : -1;
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(r0);
    CAPTURE(case_name(c.tag));
    const TimelikeOrbit o(a, b, r0, dir, R);
    int simple = 0;
    for (const auto& x : c.roots) simple += x.multiplicity == 1;
    CHECK(simple == sign_changes(a, b, R));
    switch (c.tag) {
      case TimelikeCase::c1_1:
      case TimelikeCase::c2_1:
        CHECK(c.roots.empty());
        CHECK((dir > 0 ? o.unbounded() : o.singular()));
        break;
      case TimelikeCase::c1_2:
      case TimelikeCase::c2_2_1:
      case TimelikeCase::c2_2_2:
        CHECK(c.roots.size() == 1);
        CHECK(o.singular());
        CHECK(o.upper() >= r0);
        break;
      case TimelikeCase::c2_4:
        CHECK(c.roots.size() == 2);
        CHECK((r0 >= c.roots[1].r ? o.unbounded() : o.singular()));
        break;
      case TimelikeCase::c2_6:
        CHECK(c.roots.size() == 3);
        CHECK((r0 >= c.roots[1].r ? o.periodic() : o.singular()));
        break;
      default: FAIL("tie case drawn at random");
    }
    // r stays inside the admissible interval
    const double s = std::isfinite(o.s_end()) ? 0.7 * o.s_end() : 5.0;
    const double r = o.r_at(s);
    CHECK(r >= o.lower() * (1 - 1e-12));
    CHECK(r <= o.upper() * (1 + 1e-12));
    CHECK(g_of(a, b, r, R) >= -1e-9 * (1 + b * b) * r * r * r);
    ++checked;
  }
}

TEST_CASE("circular orbits fill (3R/2, infinity) and never go below") {
  const double R = 1.0;
  double lo = 1e300, hi = 0.0;
  for (double b = std::sqrt(3.0) + 1e-3; b < 200.0; b *= 1.05) {
    const auto c = *critical_points(b, R);
    for (double u : {c.u1, c.u2}) {
      const double rc = 1.0 / u;
      const double a = std::sqrt(effective_potential(u, b, R));
      CHECK(TimelikeOrbit(a, b, rc, 1, R).circular());
      CHECK(rc > 1.5 * R);
      lo = std::min(lo, rc);
      hi = std::max(hi, rc);
    }
  }
  CHECK(lo < 1.5 * R * 1.001);
  CHECK(hi > 1e4 * R);
}

TEST_CASE("null classification") {
  const double R = 1.0;
  CHECK(classify_null(2.0 / (3.0 * std::sqrt(3.0) * R), R).tag == NullCase::c0);
  CHECK(classify_null(1.0 / R, R).tag == NullCase::c1);
  const NullClass c = classify_null(0.2 / R, R);
  CHECK(c.tag == NullCase::c2);
  CHECK(c.rho > R);
  CHECK(c.rho < 1.5 * R);
  CHECK(0.04 * c.rho * c.rho + R / c.rho == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(c.rho_prime > 1.5 * R);
  CHECK(0.04 * c.rho_prime * c.rho_prime + R / c.rho_prime == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("deflection at rho = R") {
  CHECK(std::abs(deflection_integral(1.0, 1.0) - pi / 2) <= 1e-6);
}

TEST_CASE("deflection integral") {
  const double R = 1.0;
  double prev = 0.0;
  for (int k = 0; k <= 49; ++k) {
    const double rho = R * (1.0 + 0.01 * k);
    const double v = deflection_integral(rho, R);
    if (k > 0) CHECK(v > prev);
    prev = v;
  }
  CHECK(deflection_integral(1.49, R) > deflection_integral(1.4, R));
  CHECK(deflection_integral(1.4, R) > deflection_integral(1.2, R));
  CHECK(deflection_integral(1.499, R) > deflection_integral(1.49, R) + 1.0);
  CHECK(std::abs(deflection_integral(1.25, R) - deflection_integral_direct(1.25, R)) <= 1e-8);
  CHECK_THROWS(deflection_integral(1.5, R));
  CHECK_THROWS(deflection_integral(0.9, R));
  // scaling: Psi depends on rho / R only
  CHECK(deflection_integral(2.6, 2.0) == doctest::Approx(deflection_integral(1.3, 1.0)).epsilon(1e-12));
}

TEST_CASE("horizon cylinder closed form") {
  const double R = 1.0, b = 3.0;
  CHECK(horizon_cylinder_geodesic(b, b * (1 - 1e-14), 0.37, R) == doctest::Approx(pi / 2).epsilon(1e-6));
  const double period = 2 * pi * R * R / b;
  for (double s : {0.1, 0.5, 1.3})
    CHECK(horizon_cylinder_geodesic(b, 1.2, s + period, R) == doctest::Approx(horizon_cylinder_geodesic(b, 1.2, s, R)).epsilon(1e-12));
  CHECK_THROWS(horizon_cylinder_geodesic(b, b, 0.1, R));
  CHECK_THROWS(horizon_cylinder_geodesic(b, 0.0, 0.1, R));
}
