#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "reldiff/export.hpp"
#include "reldiff/geodesics.hpp"
#include "reldiff/harness.hpp"

using namespace reldiff;

namespace {

nlohmann::json load_schema() {
  std::ifstream f(std::string(RELDIFF_SOURCE_DIR) + "/schemas/summary.schema.json");
  REQUIRE(f.good());
  return nlohmann::json::parse(f);
}

bool same(double x, double y) { return (std::isnan(x) && std::isnan(y)) || x == y; }

EnsembleConfig small_capture_config() {
  EnsembleConfig c;
  c.r0 = 1.4;
  c.T0 = -2.0;
  c.b0 = 1.0;
  c.N = 4;
  c.horizon = 30.0;
  c.max_excursions = 3;
  c.seed = 9;
  return c;
}

}  // namespace

TEST_CASE("configuration files") {
  SUBCASE("key=value with comments") {
    const EnsembleConfig c = parse_config("# run\nsigma = 0.5\nR=2\nr0 = 3.5  # start\nN=10\nstop_at_horizon=true\n");
    CHECK(c.sigma == 0.5);
    CHECK(c.R == 2.0);
    CHECK(c.r0 == 3.5);
    CHECK(c.N == 10);
    CHECK(c.stop_at_horizon);
  }
  SUBCASE("json object") {
    const EnsembleConfig c = parse_config(R"({"sigma": 0.25, "N": 7, "space": "minkowski", "a0": 1.5})");
    CHECK(c.sigma == 0.25);
    CHECK(c.N == 7);
    CHECK(c.space == "minkowski");
    CHECK(c.a0_set);
    CHECK(c.a0 == 1.5);
  }
  SUBCASE("values round-trip through the key=value form") {
    EnsembleConfig c;
    c.sigma = 0.1 + 0.2;
    c.seed = 12345;
    c.horizon = 1.0 / 3.0;
    std::string text;
    for (const auto& [k, v] : config_values(c)) text += k + "=" + v + "\n";
    const EnsembleConfig d = parse_config(text);
    CHECK(config_values(d) == config_values(c));
  }
  SUBCASE("errors") {
    CHECK_THROWS(parse_config("simga=1\n"));
    CHECK_THROWS(parse_config(R"({"bogus": 1})"));
    CHECK_THROWS(parse_config("sigma=fast\n"));
    CHECK_THROWS(parse_config("N=0\n"));
    CHECK_THROWS(parse_config("N=2.5\n"));
    CHECK_THROWS(parse_config("R=-1\n"));
    CHECK_THROWS(parse_config("just text\n"));
    CHECK_THROWS(load_config("/nonexistent/reldiff.cfg"));
  }
  SUBCASE("output directory") {
    EnsembleConfig c;
    ::setenv("RELDIFF_OUTPUT_DIR", "/tmp/reldiff-env", 1);
    CHECK(output_directory(c) == "/tmp/reldiff-env");
    c.output_dir = "/tmp/explicit";
    CHECK(output_directory(c) == "/tmp/explicit");
    ::unsetenv("RELDIFF_OUTPUT_DIR");
    c.output_dir.clear();
    CHECK(output_directory(c) == ".");
  }
}

TEST_CASE("path csv") {
  SUBCASE("empty path is a header") {
    std::ostringstream o;
    write_path_csv(o, {});
    const std::string s = o.str();
    CHECK(std::count(s.begin(), s.end(), '\n') == 2);
    CHECK(s.rfind("# ", 0) == 0);
    std::istringstream in(s);
    CHECK(read_path_csv(in).empty());
  }
  SUBCASE("round trip at full precision") {
    EnsembleConfig c = small_capture_config();
    ExtendPolicy pol = make_policy(c);
    pol.record_every = 7;
    const TrajectoryResult t = extend_trajectory(initial_state(c), pol, 3, 0);
    REQUIRE(t.path.size() > 20);
    std::ostringstream o;
    write_path_csv(o, t.path);
    std::istringstream in(o.str());
    const ExtendedPath back = read_path_csv(in);
    REQUIRE(back.size() == t.path.size());
    int undefined = 0;
    for (size_t i = 0; i < back.size(); ++i) {
      const PathSample &x = t.path[i], &y = back[i];
      CHECK((x.s == y.s && x.r == y.r && x.a == y.a && x.b == y.b && x.T == y.T));
      CHECK((x.theta == y.theta && x.n == y.n));
      CHECK((x.chart == y.chart && x.event == y.event));
      CHECK((same(x.u, y.u) && same(x.v, y.v) && same(x.u_alt, y.u_alt) && same(x.v_alt, y.v_alt)));
      CHECK((same(x.u_minus, y.u_minus) && same(x.u_plus, y.u_plus)));
      undefined += std::isnan(x.u_minus) || std::isnan(x.u_plus);
    }
    std::ostringstream o2;
    write_path_csv(o2, back);
    CHECK(o2.str() == o.str());
    CAPTURE(undefined);
  }
  SUBCASE("malformed input") {
    std::istringstream bad("# other/1\ns,r\n");
    CHECK_THROWS(read_path_csv(bad));
    std::istringstream none("");
    CHECK_THROWS(read_path_csv(none));
  }
}

TEST_CASE("summary json") {
  const EnsembleConfig c = small_capture_config();
  const EnsembleRun run = run_ensemble(c);
  const nlohmann::json j = summary_json(run.summary, c);
  const nlohmann::json schema = load_schema();
  CHECK(schema_errors(j, schema) == "");
  nlohmann::json broken = j;
  broken.erase("counts");
  CHECK(schema_errors(broken, schema) != "");
  broken = j;
  broken["N"] = -3;
  CHECK(schema_errors(broken, schema) != "");
  broken = j;
  broken["schema"] = "something-else";
  CHECK(schema_errors(broken, schema) != "");

  SUBCASE("identical inputs give identical bytes") {
    const EnsembleRun again = run_ensemble(c);
    CHECK(summary_json(again.summary, c).dump(2) == j.dump(2));
  }
  SUBCASE("trajectories do not depend on the ensemble they run in") {
    EnsembleConfig one = c;
    one.N = 1;
    const EnsembleRun r1 = run_ensemble(one);
    const ExtendPolicy pol = make_policy(c);
    const TrajectoryResult t0 = extend_trajectory(initial_state(c), pol, c.seed, 0);
    CHECK(nlohmann::json(events_json(t0.events)).dump() ==
          events_json(extend_trajectory(initial_state(one), make_policy(one), one.seed, 0).events).dump());
    CHECK(r1.fates[0].tag == run.fates[0].tag);
    CHECK(r1.fates[0].crossings == run.fates[0].crossings);
  }
}

TEST_CASE("fate classification at sigma = 0") {
  SUBCASE("case 1.1 escapes with the geodesic limit direction") {
    EnsembleConfig c;
    c.sigma = 0.0;
    c.r0 = 3.0;
    c.b0 = 1.0;
    c.a0 = 1.2;
    c.a0_set = true;
    c.T0 = 1.0;
    c.N = 1;
    c.horizon = 1e4;
    REQUIRE(classify_timelike(1.2, 1.0, 3.0, 1.0).tag == TimelikeCase::c1_1);
    const ExtendPolicy pol = make_policy(c);
    const TrajectoryResult t = extend_trajectory(initial_state(c), pol, 1, 0);
    const Fate f = classify_fate(t, c);
    CHECK(f.tag == "escape");
    CHECK(f.a_final == 1.2);
    // total swing from r0 to infinity, x = 1/r
    const double a = 1.2, b = 1.0;
    const double swing = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return b / std::sqrt(a * a - effective_potential(x, b, 1.0)); }, 0.0, 1.0 / 3.0, 10, 1e-14);
    CHECK(f.theta_inf(0) == doctest::Approx(std::cos(swing)).epsilon(1e-6));
    CHECK(f.theta_inf(1) == doctest::Approx(std::sin(swing)).epsilon(1e-6));
    CHECK(std::abs(f.theta_inf(2)) <= 1e-12);
    const EnsembleRun run = run_ensemble(c);
    CHECK(run.summary.escaped == 1);
  }
  SUBCASE("case 1.2 crosses the singularity again and again") {
    // a^2 = P(1/R0) with R0 = 1.4 R, so the turning radius lies inside the confinement band
    const double b = 1.5, R0 = 1.4;
    const double a = std::sqrt(effective_potential(1.0 / R0, b, 1.0));
    REQUIRE(classify_timelike(a, b, 1.2, 1.0).tag == TimelikeCase::c1_2);
    EnsembleConfig c;
    c.sigma = 0.0;
    c.r0 = 1.2;
    c.b0 = b;
    c.a0 = a;
    c.a0_set = true;
    c.T0 = 1.0;
    c.N = 1;
    c.horizon = 60.0;
    const TrajectoryResult t = extend_trajectory(initial_state(c), make_policy(c), 1, 0);
    const Fate f = classify_fate(t, c);
    CHECK(f.tag == "confined");
    CHECK(f.crossings >= 10);
    CHECK(f.rho_hat == doctest::Approx(R0).epsilon(1e-3));
    CHECK(f.plane_drift <= 1e-9);
  }
}

TEST_CASE("energy ratio bound along confined runs") {
  EnsembleConfig c;
  c.r0 = 1.2;
  c.T0 = 0.0;
  c.b0 = 100.0;
  c.N = 2;
  c.horizon = 3.0;
  c.seed = 5;
  const EnsembleRun run = run_ensemble(c);
  long samples = 0, viol = 0;
  // count over every run, confined or not
  for (long i = 0; i < c.N; ++i) {
    const TrajectoryResult t = extend_trajectory(initial_state(c), make_policy(c), c.seed, static_cast<std::uint64_t>(i));
    REQUIRE_FALSE(t.failed);
    samples += t.ell_bound_samples;
    viol += t.ell_bound_violations;
  }
  CHECK(samples > 1000);
  CHECK(static_cast<double>(viol) < 0.01 * static_cast<double>(samples));
  CHECK(run.summary.failed == 0);
}

TEST_CASE("statistics helpers") {
  const Interval w = wilson_interval(5, 10);
  CHECK(w.lo == doctest::Approx(0.2366).epsilon(1e-3));
  CHECK(w.hi == doctest::Approx(0.7634).epsilon(1e-3));
  CHECK(binomial_se(0.5, 2000) == doctest::Approx(std::sqrt(0.25 / 2000)).epsilon(1e-15));
  const LinearFit f = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}

TEST_CASE("minkowski scattering ensemble is reproducible") {
  EnsembleConfig c;
  c.space = "minkowski";
  c.N = 20;
  c.p0_stop = 1e2;
  c.h0 = 2e-3;
  const std::vector<double> a = scatter_angles(c), b = scatter_angles(c);
  CHECK(a == b);
  for (double x : a) CHECK(std::abs(x) <= M_PI);
  c.d = 3;
  CHECK_THROWS(scatter_angles(c));
}

TEST_CASE("minkowski path export") {
  EnsembleConfig c;
  c.space = "minkowski";
  c.d = 3;
  c.p0_stop = 20.0;
  c.h0 = 1e-3;
  const auto full = minkowski_path(c, 4, 1);
  const auto thin = minkowski_path(c, 4, 10);
  REQUIRE(full.size() > 20);
  CHECK(thin.size() == (full.size() - 1) / 10 + 1 + ((full.size() - 1) % 10 != 0));
  CHECK(thin.back().s == full.back().s);
  CHECK(thin[1].s == full[10].s);
  CHECK(full.back().p(0) >= c.p0_stop);
  std::ostringstream o;
  write_minkowski_csv(o, thin);
  std::istringstream in(o.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == std::string("# ") + kMinkowskiPathSchema);
  std::getline(in, line);
  CHECK(line == "s,xi0,xi1,xi2,xi3,p0,p1,p2,p3");
  long rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == static_cast<long>(thin.size()));
}

TEST_CASE("confinement target test preconditions") {
  EnsembleConfig c;
  c.r0 = 1.2;
  c.T0 = 0.5;
  CHECK_THROWS(confinement_target_test(c, {100.0}, 0.05));
  c.T0 = 0.0;
  c.r0 = 2.0;
  CHECK_THROWS(confinement_target_test(c, {100.0}, 0.05));
}
