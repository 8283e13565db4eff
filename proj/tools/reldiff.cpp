#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "reldiff/acceptance.hpp"
#include "reldiff/export.hpp"
#include "reldiff/geodesics.hpp"
#include "reldiff/harness.hpp"

using namespace reldiff;
namespace fs = std::filesystem;

namespace {

// Config file plus one flag per config key; flags win over the file.
struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key=value or JSON config file")->check(CLI::ExistingFile);
    for (const auto& [key, def] : config_values(EnsembleConfig{}))
      app->add_option("--" + key, values[key], "config value (default " + def + ")");
  }

  EnsembleConfig resolve() const {
    EnsembleConfig c = file.empty() ? EnsembleConfig{} : load_config(file);
    for (const auto& [key, v] : values)
      if (!v.empty()) set_config_value(c, key, v);
    validate(c);
    return c;
  }
};

std::string target(const std::string& explicit_path, const EnsembleConfig& c, const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  const fs::path dir = output_directory(c);
  fs::create_directories(dir);
  return (dir / name).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  return f;
}

void print_json(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relativistic diffusions in Minkowski and Schwarzschild space-times"};
  app.require_subcommand(1);

  // simulate
  ConfigFlags sim_cfg;
  std::uint64_t sim_index = 0;
  int sim_every = 1;
  std::string sim_out, sim_events;
  CLI::App* sim = app.add_subcommand("simulate", "one trajectory: path CSV, event log JSON, fate on stdout");
  sim_cfg.attach(sim);
  sim->add_option("--index", sim_index, "trajectory index within the seed");
  sim->add_option("--record-every", sim_every, "keep every k-th step")->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "path CSV (default <output_dir>/path.csv)");
  sim->add_option("--events", sim_events, "event log JSON (default <output_dir>/events.json)");

  // ensemble
  ConfigFlags ens_cfg;
  std::string ens_out;
  std::vector<double> sweep;
  double sweep_eps = 0.05;
  CLI::App* ens = app.add_subcommand("ensemble", "N trajectories: summary JSON");
  ens_cfg.attach(ens);
  ens->add_option("--out", ens_out, "summary JSON (default <output_dir>/summary.json)");
  ens->add_option("--target-sweep", sweep, "b0 values for the confinement target test (CSV on stdout)")->delimiter(',');
  ens->add_option("--eps", sweep_eps, "radius tolerance for the target test");

  // scatter
  ConfigFlags sc_cfg;
  std::string sc_out;
  CLI::App* sc = app.add_subcommand("scatter", "Minkowski exit angles (d = 2) with a KS test against the exit law");
  sc_cfg.attach(sc);
  sc->add_option("--out", sc_out, "angles CSV (default <output_dir>/scatter.csv)");

  // geodesic
  double ga = 1.0, gb = 1.0, gr0 = 3.0, gR = 1.0, g_smax = 50.0, g_ds = 0.1;
  int g_dir = 1;
  double b_lo = 0.5, b_hi = 5.0, a_lo = 0.5, a_hi = 1.5;
  int nb = 10, na = 10;
  CLI::App* geo = app.add_subcommand("geodesic", "timelike geodesics at sigma = 0");
  geo->require_subcommand(1);
  CLI::App* g_cls = geo->add_subcommand("classify", "case of (a, b, r0)");
  CLI::App* g_int = geo->add_subcommand("integrate", "r(s), phi(s) by quadrature (CSV)");
  CLI::App* g_atl = geo->add_subcommand("atlas", "case tags over an (a, b) grid at fixed r0 (CSV)");
  for (CLI::App* s : {g_cls, g_int}) {
    s->add_option("--a", ga)->required();
    s->add_option("--b", gb)->required();
  }
  for (CLI::App* s : {g_cls, g_int, g_atl}) {
    s->add_option("--r0", gr0)->required();
    s->add_option("--R", gR)->check(CLI::PositiveNumber);
  }
  g_int->add_option("--direction", g_dir, "sign of dr/ds at s = 0")->check(CLI::IsMember({-1, 1}));
  g_int->add_option("--s-max", g_smax)->check(CLI::PositiveNumber);
  g_int->add_option("--ds", g_ds)->check(CLI::PositiveNumber);
  g_atl->add_option("--a-min", a_lo);
  g_atl->add_option("--a-max", a_hi);
  g_atl->add_option("--na", na)->check(CLI::PositiveNumber);
  g_atl->add_option("--b-min", b_lo);
  g_atl->add_option("--b-max", b_hi);
  g_atl->add_option("--nb", nb)->check(CLI::PositiveNumber);

  // null
  double alpha = 0.0, nR = 1.0;
  std::vector<double> rhos;
  CLI::App* nul = app.add_subcommand("null", "null geodesics");
  nul->require_subcommand(1);
  CLI::App* n_cls = nul->add_subcommand("classify", "case of a ray with impact parameter 1/alpha");
  CLI::App* n_def = nul->add_subcommand("deflection", "confined-ray swing Psi(rho) (CSV)");
  n_cls->add_option("--alpha", alpha)->required();
  n_def->add_option("--rho", rhos, "one or more radii in [R, 3R/2)")->required()->delimiter(',');
  for (CLI::App* s : {n_cls, n_def}) s->add_option("--R", nR)->check(CLI::PositiveNumber);

  // acceptance
  int only = 0;
  CLI::App* acc = app.add_subcommand("acceptance", "acceptance criteria, one PASS/FAIL line each");
  acc->add_option("--only", only, "run a single criterion")->check(CLI::Range(1, kCriteria));

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const EnsembleConfig c = sim_cfg.resolve();
      if (c.space == "minkowski") {
        std::ofstream f = open_out(target(sim_out, c, "path.csv"));
        write_minkowski_csv(f, minkowski_path(c, sim_index, sim_every));
        return 0;
      }
      ExtendPolicy pol = make_policy(c);
      pol.record_every = sim_every;
      const TrajectoryResult t = extend_trajectory(initial_state(c), pol, c.seed, sim_index);
      {
        std::ofstream f = open_out(target(sim_out, c, "path.csv"));
        write_path_csv(f, t.path);
      }
      {
        std::ofstream f = open_out(target(sim_events, c, "events.json"));
        f << events_json(t.events).dump(2) << "\n";
      }
      nlohmann::json j = fate_json(classify_fate(t, c));
      j["failed"] = t.failed;
      if (t.failed) j["failure"] = t.failure;
      print_json(j);
      return t.failed ? 2 : 0;
    }

    if (ens->parsed()) {
      const EnsembleConfig c = ens_cfg.resolve();
      if (!sweep.empty()) {
        std::printf("b0,runs,confined,near,ci_lo,ci_hi\n");
        for (const ConfinementPoint& p : confinement_target_test(c, sweep, sweep_eps))
          std::printf("%s,%ld,%ld,%ld,%s,%s\n", format_number(p.b0).c_str(), p.runs, p.confined, p.near,
                      format_number(p.ci.lo).c_str(), format_number(p.ci.hi).c_str());
        return 0;
      }
      const EnsembleRun run = run_ensemble(c);
      const nlohmann::json j = summary_json(run.summary, c);
      std::ofstream f = open_out(target(ens_out, c, "summary.json"));
      f << j.dump(2) << "\n";
      print_json(j);
      return 0;
    }

    if (sc->parsed()) {
      EnsembleConfig c = sc_cfg.resolve();
      c.space = "minkowski";
      const std::vector<double> ang = scatter_angles(c);
      {
        std::ofstream f = open_out(target(sc_out, c, "scatter.csv"));
        f << "index,angle\n";
        for (size_t i = 0; i < ang.size(); ++i) f << i << ',' << format_number(ang[i]) << "\n";
      }
      Vec dir = Vec::Zero(2);
      dir(0) = 1.0;
      const Vec p0 = minkowski_start(2, c.rapidity, dir).p;
      const double D = ks_statistic(ang, [&](double x) { return scattering_cdf_2d(p0, x); });
      print_json({{"N", c.N}, {"ks_D", D}, {"ks_p", ks_pvalue(D, c.N)}});
      return 0;
    }

    if (g_cls->parsed()) {
      const TimelikeClass k = classify_timelike(ga, gb, gr0, gR);
      nlohmann::json roots = nlohmann::json::array();
      for (const RadialRoot& r : k.roots) roots.push_back({{"r", r.r}, {"multiplicity", r.multiplicity}});
      nlohmann::json j = {{"case", case_name(k.tag)}, {"roots", roots}};
      if (k.crit) j["critical"] = {{"u1", k.crit->u1}, {"u2", k.crit->u2}, {"P1", k.crit->P1}, {"P2", k.crit->P2}};
      print_json(j);
      return 0;
    }

    if (g_int->parsed()) {
      const TimelikeOrbit orb(ga, gb, gr0, g_dir, gR);
      std::printf("s,r,phi\n");
      const double end = std::min(g_smax, orb.s_end());
      const long n = static_cast<long>(std::floor(end / g_ds));
      auto row = [&](double s) {
        std::printf("%s,%s,%s\n", format_number(s).c_str(), format_number(orb.r_at(s)).c_str(),
                    format_number(orb.phi_at(s)).c_str());
      };
      for (long i = 0; i <= n; ++i) row(i * g_ds);
      if (orb.singular() && end == orb.s_end() && n * g_ds < end) row(end);
      return 0;
    }

    if (g_atl->parsed()) {
      std::printf("a,b,r0,case\n");
      for (int i = 0; i < nb; ++i) {
        const double b = nb == 1 ? b_lo : b_lo + (b_hi - b_lo) * i / (nb - 1);
        for (int j = 0; j < na; ++j) {
          const double a = na == 1 ? a_lo : a_lo + (a_hi - a_lo) * j / (na - 1);
          std::printf("%s,%s,%s,%s\n", format_number(a).c_str(), format_number(b).c_str(), format_number(gr0).c_str(),
                      case_name(classify_timelike(a, b, gr0, gR).tag).c_str());
        }
      }
      return 0;
    }

    if (n_cls->parsed()) {
      const NullClass k = classify_null(alpha, nR);
      const char* names[] = {"0", "1", "2"};
      nlohmann::json j = {{"case", names[static_cast<int>(k.tag)]}};
      if (k.tag == NullCase::c2) j.update({{"rho", k.rho}, {"rho_prime", k.rho_prime}});
      print_json(j);
      return 0;
    }

    if (n_def->parsed()) {
      std::printf("rho,psi\n");
      for (double rho : rhos)
        std::printf("%s,%s\n", format_number(rho).c_str(), format_number(deflection_integral(rho, nR)).c_str());
      return 0;
    }

    if (acc->parsed()) {
      int failed = 0;
      for (int id = 1; id <= kCriteria; ++id) {
        if (only && id != only) continue;
        const CriterionResult r = run_criterion(id);
        std::printf("[%s] %2d %s: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        std::fflush(stdout);
        failed += !r.pass;
      }
      return failed ? 1 : 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "reldiff: %s\n", e.what());
    return 1;
  }
  return 0;
}
