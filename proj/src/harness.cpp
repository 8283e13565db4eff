#include "reldiff/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "reldiff/geodesics.hpp"
#include "reldiff/minkowski.hpp"

namespace reldiff {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& k, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (trim(v.substr(pos)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw std::invalid_argument("config: " + k + " expects a number, got '" + v + "'");
}

long to_long(const std::string& k, const std::string& v) {
  const double x = to_double(k, v);
  if (x != std::floor(x)) throw std::invalid_argument("config: " + k + " expects an integer");
  return static_cast<long>(x);
}

bool to_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: " + k + " expects a boolean");
}

std::string num(double x) {
  std::ostringstream o;
  o.precision(17);
  o << x;
  return o.str();
}

struct Field {
  std::function<void(EnsembleConfig&, const std::string&)> set;
  std::function<std::string(const EnsembleConfig&)> get;
};

#define DBL(name) \
  {#name, {[](EnsembleConfig& c, const std::string& v) { c.name = to_double(#name, v); }, [](const EnsembleConfig& c) { return num(c.name); }}}
#define LNG(name) \
  {#name, {[](EnsembleConfig& c, const std::string& v) { c.name = to_long(#name, v); }, [](const EnsembleConfig& c) { return std::to_string(c.name); }}}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = {
      {"space", {[](EnsembleConfig& c, const std::string& v) { c.space = v; }, [](const EnsembleConfig& c) { return c.space; }}},
      DBL(sigma), DBL(R), DBL(r0), DBL(T0), DBL(b0),
      {"a0", {[](EnsembleConfig& c, const std::string& v) {
                c.a0 = to_double("a0", v);
                c.a0_set = true;
              },
              [](const EnsembleConfig& c) { return c.a0_set ? num(c.a0) : std::string("auto"); }}},
      LNG(d), DBL(rapidity), DBL(p0_stop), LNG(N), DBL(horizon), DBL(h0), DBL(h_min), DBL(step_exponent), DBL(kappa),
      DBL(M_escape), DBL(r_stop), DBL(eps_b), DBL(eps_T),
      {"seed", {[](EnsembleConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_long("seed", v)); },
                [](const EnsembleConfig& c) { return std::to_string(c.seed); }}},
      LNG(max_excursions), LNG(max_steps),
      {"stop_at_horizon", {[](EnsembleConfig& c, const std::string& v) { c.stop_at_horizon = to_bool("stop_at_horizon", v); },
                           [](const EnsembleConfig& c) { return std::string(c.stop_at_horizon ? "true" : "false"); }}},
      DBL(tail_fraction), LNG(n_min), DBL(theta_tol), DBL(band_tol),
      {"output_dir", {[](EnsembleConfig& c, const std::string& v) { c.output_dir = v; }, [](const EnsembleConfig& c) { return c.output_dir; }}},
  };
  return f;
}

#undef DBL
#undef LNG

}  // namespace

void set_config_value(EnsembleConfig& c, const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw std::invalid_argument("config: unknown key '" + key + "'");
  if (key == "a0" && value == "auto") {
    c.a0_set = false;
    return;
  }
  it->second.set(c, trim(value));
}

std::map<std::string, std::string> config_values(const EnsembleConfig& c) {
  std::map<std::string, std::string> m;
  for (const auto& [k, f] : fields()) m[k] = f.get(c);
  return m;
}

EnsembleConfig parse_config(const std::string& text) {
  EnsembleConfig c;
  const std::string t = trim(text);
  if (!t.empty() && t.front() == '{') {
    const nlohmann::json j = nlohmann::json::parse(t);
    for (const auto& [k, v] : j.items()) {
      if (v.is_string()) set_config_value(c, k, v.get<std::string>());
      else if (v.is_boolean()) set_config_value(c, k, v.get<bool>() ? "true" : "false");
      else if (v.is_number_integer()) set_config_value(c, k, std::to_string(v.get<long long>()));
      else if (v.is_number()) set_config_value(c, k, num(v.get<double>()));
      else throw std::invalid_argument("config: unsupported value for '" + k + "'");
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
      ++no;
      const std::string l = trim(line.substr(0, line.find('#')));
      if (l.empty()) continue;
      const auto eq = l.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(no) + ": expected key=value");
      set_config_value(c, trim(l.substr(0, eq)), trim(l.substr(eq + 1)));
    }
  }
  validate(c);
  return c;
}

EnsembleConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate(const EnsembleConfig& c) {
  auto pos = [](double x, const char* n) {
    if (!(x > 0.0)) throw std::invalid_argument(std::string("config: ") + n + " must be positive");
  };
  if (c.space != "schwarzschild" && c.space != "minkowski") throw std::invalid_argument("config: space must be schwarzschild or minkowski");
  if (!(c.sigma >= 0.0)) throw std::invalid_argument("config: sigma must be non-negative");
  pos(c.R, "R");
  pos(c.r0, "r0");
  pos(c.horizon, "horizon");
  pos(c.h0, "h0");
  pos(c.h_min, "h_min");
  pos(c.kappa, "kappa");
  pos(c.M_escape, "M_escape");
  pos(c.r_stop, "r_stop");
  pos(c.eps_b, "eps_b");
  pos(c.eps_T, "eps_T");
  pos(c.p0_stop, "p0_stop");
  if (c.N < 1) throw std::invalid_argument("config: N must be at least 1");
  if (c.d < 1) throw std::invalid_argument("config: d must be at least 1");
  if (!(c.tail_fraction > 0.0 && c.tail_fraction <= 1.0)) throw std::invalid_argument("config: tail_fraction in (0, 1]");
  if (c.b0 < 0.0) throw std::invalid_argument("config: b0 must be non-negative");
  if (c.r0 == c.R) throw std::invalid_argument("config: r0 must be off the horizon");
}

std::string output_directory(const EnsembleConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* e = std::getenv("RELDIFF_OUTPUT_DIR")) return e;
  return ".";
}

ReducedState initial_state(const EnsembleConfig& c) {
  ReducedState st;
  st.r = c.r0;
  st.T = c.T0;
  st.b = std::max(c.b0, c.eps_b);
  st.theta = Vec3::UnitX();
  st.n = Vec3::UnitY();
  if (c.a0_set) {
    st.a = c.a0;
    st.T = constraint_T(st.r, st.a, st.b, c.R, c.T0 < 0.0 ? -1.0 : 1.0);
  } else {
    st.a = constraint_a(st.r, st.b, st.T, c.R, 1.0);
  }
  if (std::abs(pseudo_norm_residual(st, c.R)) > 1e-9 * (1.0 + st.a * st.a))
    throw std::invalid_argument("initial state violates the pseudo-norm relation");
  return st;
}

ExtendPolicy make_policy(const EnsembleConfig& c) {
  ExtendPolicy p;
  p.R = c.R;
  p.sigma = c.sigma;
  p.horizon = c.horizon;
  p.rule.h0 = c.h0;
  p.rule.h_min = c.h_min;
  p.rule.exponent = c.step_exponent;
  p.rule.kappa = c.kappa;
  p.r_stop = c.r_stop * c.R;
  p.M_escape = c.M_escape * c.R;
  p.eps_T = c.eps_T;
  p.eps_b = c.eps_b;
  p.max_steps = c.max_steps;
  p.max_excursions = c.max_excursions;
  p.stop_at_horizon = c.stop_at_horizon;
  return p;
}

Fate classify_fate(const TrajectoryResult& t, const EnsembleConfig& c) {
  Fate f;
  f.a_final = t.final_state.a;
  for (const HitRecord& h : t.hits)
    if (std::isfinite(h.D_prime)) ++f.crossings;
  if (t.failed) {
    f.diagnostics = "failed: " + t.failure;
    return f;
  }
  if (t.escaped) {
    if (t.theta_tail < c.theta_tol) {
      f.tag = "escape";
      f.theta_inf = t.theta_limit;
      return f;
    }
    f.diagnostics = "escape declared, angle not settled";
    return f;
  }
  const double s_end = t.final_state.s;
  const double tail = (1.0 - c.tail_fraction) * s_end;
  for (const HitRecord& h : t.hits)
    if (std::isfinite(h.D_prime) && h.D_prime >= tail) ++f.tail_crossings;
  double rho = -INFINITY;
  Vec3 first = Vec3::Zero();
  double drift = 0.0;
  for (const OrbitRecord& o : t.orbits) {
    if (!(o.s_top >= tail)) continue;
    rho = std::max(rho, o.r_top);
    if (first.isZero()) first = o.plane_top;
    else drift = std::max(drift, std::acos(std::clamp(first.dot(o.plane_top), -1.0, 1.0)));
  }
  f.plane = t.final_state.plane();
  f.ell_hat = t.final_state.a / t.final_state.b;
  if (std::isfinite(rho)) {
    f.rho_hat = rho;
    f.plane_drift = drift;
  }
  const double R = c.R;
  const bool band = std::isfinite(rho) && rho >= R * (1.0 - c.band_tol) && rho <= 1.5 * R * (1.0 + c.band_tol);
  if (f.tail_crossings >= c.n_min && band) f.tag = "confined";
  else f.diagnostics = "tail crossings " + std::to_string(f.tail_crossings);
  return f;
}

EnsembleRun run_ensemble(const EnsembleConfig& c) {
  validate(c);
  if (c.space != "schwarzschild") throw std::invalid_argument("run_ensemble: use scatter_angles for minkowski");
  EnsembleRun run;
  EnsembleSummary& S = run.summary;
  S.N = c.N;
  const ReducedState st0 = initial_state(c);
  const ExtendPolicy pol = make_policy(c);
  const double R = c.R;
  double slope_sum = 0.0;
  for (long i = 0; i < c.N; ++i) {
    const TrajectoryResult t = extend_trajectory(st0, pol, c.seed, static_cast<std::uint64_t>(i));
    const Fate f = classify_fate(t, c);
    if (t.failed) {
      ++S.failed;
      if (S.failures.size() < 20) S.failures.push_back(std::to_string(i) + ": " + t.failure);
    }
    if (t.captured) ++S.captured;
    if (t.truncated) ++S.truncated;
    if (f.tag == "escape") ++S.escaped;
    else if (f.tag == "confined") ++S.confined;
    else ++S.undecided;

    for (const HitRecord& h : t.hits) {
      if (!std::isfinite(h.D_prime)) continue;
      ++S.hits;
      if (std::isfinite(h.D) && !(h.D < h.D_prime && h.D_prime <= h.D + 0.5 * M_PI * R)) ++S.timing_violations;
      if (std::isfinite(h.D_out)) {
        if (h.D_out - h.D_prime > 0.5 * M_PI * R) ++S.half_violations;
        if (std::isfinite(h.D) && h.D_out - h.D > 0.75 * M_PI * R * R / h.min_b) ++S.duration_violations;
      }
      if (h.fit.tail_samples >= 3 && std::isfinite(h.fit.slope)) {
        ++S.slope_fits;
        slope_sum += h.fit.slope;
        S.slope_min = std::isnan(S.slope_min) ? h.fit.slope : std::min(S.slope_min, h.fit.slope);
        S.slope_max = std::isnan(S.slope_max) ? h.fit.slope : std::max(S.slope_max, h.fit.slope);
      }
      if (std::isfinite(h.fit.T_scaling_dev))
        S.T_scaling_max = std::isnan(S.T_scaling_max) ? h.fit.T_scaling_dev : std::max(S.T_scaling_max, h.fit.T_scaling_dev);
      S.max_orth_defect = std::max(S.max_orth_defect, h.max_orth_defect);
      if (std::isfinite(h.series_diff)) {
        S.max_series_diff = std::max(S.max_series_diff, h.series_diff);
        if (!(h.series_diff <= h.series_bound)) ++S.series_violations;
      }
    }
    if (f.tag == "confined") {
      S.rho_hat.push_back(f.rho_hat);
      const double l2 = f.ell_hat * f.ell_hat;
      S.ell_rel_residual.push_back(std::abs(l2 - horizon_factor(f.rho_hat, R) / (f.rho_hat * f.rho_hat)) / l2);
      S.plane_drift.push_back(f.plane_drift);
      if (f.rho_hat < 1.5 * R && f.rho_hat >= R) {
        const double psi = deflection_integral(f.rho_hat, R);
        std::vector<double> dev, down;
        for (auto it = t.orbits.rbegin(); it != t.orbits.rend() && dev.size() < 5; ++it) {
          if (std::isnan(it->swing_up) || std::isnan(it->s_top)) continue;
          dev.push_back(std::abs(it->swing_up - psi) / psi);
          if (std::isfinite(it->swing_down)) down.push_back(it->swing_down);
        }
        if (!dev.empty()) S.swing_rel_dev.push_back(median(dev));
        if (!down.empty()) S.swing_down.push_back(median(down));
      }
      S.ell_bound_samples += t.ell_bound_samples;
      S.ell_bound_violations += t.ell_bound_violations;
    }
    run.fates.push_back(f);
  }
  if (S.slope_fits > 0) S.slope_mean = slope_sum / S.slope_fits;
  S.escape_ci = wilson_interval(S.escaped, S.N);
  S.confined_ci = wilson_interval(S.confined, S.N);
  S.capture_ci = wilson_interval(S.captured, S.N);
  return run;
}

namespace {

// Runs one Minkowski path from the boosted start along e1 until p0 >= p0_stop or s >= horizon.
template <class Visit>
MinkowskiState run_minkowski(const EnsembleConfig& c, std::uint64_t index, Visit visit) {
  Vec dir = Vec::Zero(c.d);
  dir(0) = 1.0;
  const CounterRng rng(c.seed, index);
  MinkowskiState st = minkowski_start(c.d, c.rapidity, dir);
  visit(st);
  std::uint64_t k = 0;
  Vec z(c.d);
  while (st.p(0) < c.p0_stop && st.s < c.horizon) {
    for (int j = 0; j < c.d; ++j) z(j) = rng.normal(k, j);
    ++k;
    st = step_minkowski(st, c.sigma, c.h0, z);
    visit(st);
  }
  return st;
}

}  // namespace

std::vector<double> scatter_angles(const EnsembleConfig& c) {
  if (c.d != 2) throw std::invalid_argument("scatter_angles: d = 2 only");
  std::vector<double> out;
  out.reserve(c.N);
  for (long i = 0; i < c.N; ++i) {
    const MinkowskiState st = run_minkowski(c, static_cast<std::uint64_t>(i), [](const MinkowskiState&) {});
    out.push_back(std::atan2(st.p(2), st.p(1)));
  }
  return out;
}

std::vector<MinkowskiState> minkowski_path(const EnsembleConfig& c, std::uint64_t index, int record_every) {
  if (record_every < 1) throw std::invalid_argument("minkowski_path: record_every >= 1");
  std::vector<MinkowskiState> path;
  long n = 0;
  const MinkowskiState last = run_minkowski(c, index, [&](const MinkowskiState& st) {
    if (n++ % record_every == 0) path.push_back(st);
  });
  if (path.back().s != last.s) path.push_back(last);
  return path;
}

std::vector<ConfinementPoint> confinement_target_test(EnsembleConfig c, const std::vector<double>& b0s, double eps) {
  if (c.T0 != 0.0) throw std::invalid_argument("confinement_target_test: T0 must be 0");
  if (!(c.r0 > c.R && c.r0 < 1.5 * c.R)) throw std::invalid_argument("confinement_target_test: r0 in (R, 3R/2)");
  std::vector<ConfinementPoint> out;
  for (double b0 : b0s) {
    c.b0 = b0;
    const EnsembleRun run = run_ensemble(c);
    ConfinementPoint p{b0, c.N, 0, 0, {0, 0}};
    for (const Fate& f : run.fates) {
      if (f.tag != "confined") continue;
      ++p.confined;
      if (std::abs(f.rho_hat - c.r0) < eps) ++p.near;
    }
    p.ci = wilson_interval(p.near, p.runs);
    out.push_back(p);
  }
  return out;
}

}  // namespace reldiff
