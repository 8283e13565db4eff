#include "reldiff/export.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace reldiff {

namespace {

const char* kColumns[] = {"s",     "r",     "a",     "b",     "T",     "theta_x", "theta_y", "theta_z",
                          "n_x",   "n_y",   "n_z",   "chart", "event", "u",       "v",       "u_alt",
                          "v_alt", "u_minus", "u_plus"};
constexpr int kNumColumns = sizeof(kColumns) / sizeof(kColumns[0]);

std::string field(double x) { return std::isnan(x) ? std::string() : format_number(x); }

double parse_field(const std::string& s) {
  if (s.empty()) return kNaN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::runtime_error("path csv: bad number '" + s + "'");
  return x;
}

nlohmann::json jnum(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

void write_minkowski_csv(std::ostream& out, const std::vector<MinkowskiState>& path) {
  out << "# " << kMinkowskiPathSchema << "\n";
  const long n = path.empty() ? 0 : path.front().xi.size();
  out << "s";
  for (long i = 0; i < n; ++i) out << ",xi" << i;
  for (long i = 0; i < n; ++i) out << ",p" << i;
  out << "\n";
  for (const MinkowskiState& st : path) {
    out << format_number(st.s);
    for (long i = 0; i < n; ++i) out << ',' << format_number(st.xi(i));
    for (long i = 0; i < n; ++i) out << ',' << format_number(st.p(i));
    out << "\n";
  }
}

void write_path_csv(std::ostream& out, const ExtendedPath& path) {
  out << "# " << kPathSchema << "\n";
  for (int i = 0; i < kNumColumns; ++i) out << (i ? "," : "") << kColumns[i];
  out << "\n";
  for (const PathSample& p : path) {
    out << field(p.s) << ',' << field(p.r) << ',' << field(p.a) << ',' << field(p.b) << ',' << field(p.T);
    for (int k = 0; k < 3; ++k) out << ',' << field(p.theta(k));
    for (int k = 0; k < 3; ++k) out << ',' << field(p.n(k));
    out << ',' << p.chart << ',' << p.event;
    out << ',' << field(p.u) << ',' << field(p.v) << ',' << field(p.u_alt) << ',' << field(p.v_alt) << ','
        << field(p.u_minus) << ',' << field(p.u_plus) << "\n";
  }
}

ExtendedPath read_path_csv(std::istream& in) {
  ExtendedPath path;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find(kPathSchema) == std::string::npos) throw std::runtime_error("path csv: unknown schema");
      continue;
    }
    const std::vector<std::string> f = split(line);
    if (!header) {
      if (static_cast<int>(f.size()) != kNumColumns) throw std::runtime_error("path csv: bad header");
      for (int i = 0; i < kNumColumns; ++i)
        if (f[i] != kColumns[i]) throw std::runtime_error("path csv: unexpected column " + f[i]);
      header = true;
      continue;
    }
    if (static_cast<int>(f.size()) != kNumColumns) throw std::runtime_error("path csv: bad row");
    PathSample p;
    p.s = parse_field(f[0]);
    p.r = parse_field(f[1]);
    p.a = parse_field(f[2]);
    p.b = parse_field(f[3]);
    p.T = parse_field(f[4]);
    for (int k = 0; k < 3; ++k) p.theta(k) = parse_field(f[5 + k]);
    for (int k = 0; k < 3; ++k) p.n(k) = parse_field(f[8 + k]);
    p.chart = f[11];
    p.event = f[12];
    p.u = parse_field(f[13]);
    p.v = parse_field(f[14]);
    p.u_alt = parse_field(f[15]);
    p.v_alt = parse_field(f[16]);
    p.u_minus = parse_field(f[17]);
    p.u_plus = parse_field(f[18]);
    path.push_back(p);
  }
  if (!header) throw std::runtime_error("path csv: missing header");
  return path;
}

nlohmann::json events_json(const EventLog& log) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Event& e : log)
    arr.push_back({{"kind", event_name(e.kind)}, {"s", jnum(e.s)}, {"r", jnum(e.r)}, {"a", jnum(e.a)},
                   {"b", jnum(e.b)}, {"T", jnum(e.T)}});
  return arr;
}

nlohmann::json fate_json(const Fate& f) {
  auto vec = [](const Vec3& v) { return nlohmann::json::array({v(0), v(1), v(2)}); };
  return {{"tag", f.tag},
          {"theta_inf", vec(f.theta_inf)},
          {"a_final", jnum(f.a_final)},
          {"rho_hat", jnum(f.rho_hat)},
          {"ell_hat", jnum(f.ell_hat)},
          {"plane", vec(f.plane)},
          {"crossings", f.crossings},
          {"tail_crossings", f.tail_crossings},
          {"plane_drift", jnum(f.plane_drift)},
          {"diagnostics", f.diagnostics}};
}

nlohmann::json summary_json(const EnsembleSummary& s, const EnsembleConfig& c) {
  auto ci = [](const Interval& i) { return nlohmann::json::array({i.lo, i.hi}); };
  auto arr = [](const std::vector<double>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : v) a.push_back(jnum(x));
    return a;
  };
  nlohmann::json cfg = nlohmann::json::object();
  for (const auto& [k, v] : config_values(c)) cfg[k] = v;
  nlohmann::json j;
  j["schema"] = kSummarySchema;
  j["config"] = cfg;
  j["N"] = s.N;
  j["counts"] = {{"escaped", s.escaped},   {"confined", s.confined}, {"undecided", s.undecided},
                 {"failed", s.failed},     {"captured", s.captured}, {"truncated", s.truncated}};
  j["intervals"] = {{"escape", ci(s.escape_ci)}, {"confined", ci(s.confined_ci)}, {"capture", ci(s.capture_ci)}};
  j["singularity"] = {{"hits", s.hits},
                      {"timing_violations", s.timing_violations},
                      {"half_violations", s.half_violations},
                      {"duration_violations", s.duration_violations},
                      {"slope_fits", s.slope_fits},
                      {"slope_min", jnum(s.slope_min)},
                      {"slope_max", jnum(s.slope_max)},
                      {"slope_mean", jnum(s.slope_mean)},
                      {"T_scaling_max", jnum(s.T_scaling_max)},
                      {"max_orth_defect", jnum(s.max_orth_defect)},
                      {"max_series_diff", jnum(s.max_series_diff)},
                      {"series_violations", s.series_violations}};
  j["confinement"] = {{"rho_hat", arr(s.rho_hat)},
                      {"ell_rel_residual", arr(s.ell_rel_residual)},
                      {"plane_drift", arr(s.plane_drift)},
                      {"swing_rel_dev", arr(s.swing_rel_dev)},
                      {"swing_down", arr(s.swing_down)},
                      {"ell_bound_samples", s.ell_bound_samples},
                      {"ell_bound_violations", s.ell_bound_violations}};
  nlohmann::json fl = nlohmann::json::array();
  for (const auto& x : s.failures) fl.push_back(x);
  j["failures"] = fl;
  return j;
}

namespace {

bool has_type(const nlohmann::json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "boolean") return v.is_boolean();
  if (t == "null") return v.is_null();
  return false;
}

void check(const nlohmann::json& v, const nlohmann::json& sc, const std::string& at, std::ostringstream& err) {
  if (sc.contains("type")) {
    bool ok = false;
    if (sc["type"].is_array()) {
      for (const auto& t : sc["type"]) ok = ok || has_type(v, t.get<std::string>());
    } else {
      ok = has_type(v, sc["type"].get<std::string>());
    }
    if (!ok) {
      err << at << ": wrong type\n";
      return;
    }
  }
  if (sc.contains("enum")) {
    bool ok = false;
    for (const auto& e : sc["enum"]) ok = ok || e == v;
    if (!ok) err << at << ": value not in enum\n";
  }
  if (sc.contains("minimum") && v.is_number() && v.get<double>() < sc["minimum"].get<double>())
    err << at << ": below minimum\n";
  if (v.is_object()) {
    if (sc.contains("required"))
      for (const auto& k : sc["required"])
        if (!v.contains(k.get<std::string>())) err << at << ": missing " << k.get<std::string>() << "\n";
    if (sc.contains("properties"))
      for (const auto& [k, sub] : sc["properties"].items())
        if (v.contains(k)) check(v[k], sub, at + "." + k, err);
  }
  if (v.is_array() && sc.contains("items"))
    for (size_t i = 0; i < v.size(); ++i) check(v[i], sc["items"], at + "[" + std::to_string(i) + "]", err);
}

}  // namespace

std::string schema_errors(const nlohmann::json& doc, const nlohmann::json& schema) {
  std::ostringstream err;
  check(doc, schema, "$", err);
  return err.str();
}

}  // namespace reldiff
