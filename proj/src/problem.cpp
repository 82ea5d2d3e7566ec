#include "gaugeopt/problem.hpp"

#include "gaugeopt/errors.hpp"
#include "gaugeopt/io.hpp"
#include "gaugeopt/pde.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

namespace gaugeopt {

namespace fs = std::filesystem;

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string s = "invalid problem document:";
  for (const auto& i : issues) s += "\n  " + i;
  return s;
}

// Collects validation issues with JSON paths instead of stopping at the first.
class Reader {
 public:
  std::vector<std::string> issues;

  void fail(const std::string& path, const std::string& msg) { issues.push_back(path + ": " + msg); }

  bool object(const Json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items())
      if (!ok.count(key)) fail(path + "." + key, "unknown field");
    return true;
  }

  // JSON number or decimal string.
  std::optional<double> number(const Json& j, const std::string& path) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
      const auto s = j.get<std::string>();
      double v = 0.0;
      const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec == std::errc() && end == s.data() + s.size() && std::isfinite(v)) return v;
      fail(path, "'" + s + "' is not a decimal number");
      return std::nullopt;
    }
    fail(path, "expected a number or decimal string");
    return std::nullopt;
  }

  void read(const Json& parent, const char* key, const std::string& path, double& out, bool positive = false) {
    if (!parent.contains(key)) return;
    const std::string p = path + "." + key;
    if (auto v = number(parent.at(key), p)) {
      if (positive && !(*v > 0.0)) fail(p, "must be positive");
      else out = *v;
    }
  }

  void read(const Json& parent, const char* key, const std::string& path, int& out, int min_value) {
    if (!parent.contains(key)) return;
    const std::string p = path + "." + key;
    auto v = number(parent.at(key), p);
    if (!v) return;
    if (std::floor(*v) != *v || *v < min_value || *v > 1e9) {
      fail(p, "must be an integer >= " + std::to_string(min_value));
      return;
    }
    out = static_cast<int>(*v);
  }

  void read(const Json& parent, const char* key, const std::string& path, bool& out) {
    if (!parent.contains(key)) return;
    if (!parent.at(key).is_boolean()) fail(path + "." + key, "expected true or false");
    else out = parent.at(key).get<bool>();
  }

  void read(const Json& parent, const char* key, const std::string& path, std::string& out) {
    if (!parent.contains(key)) return;
    if (!parent.at(key).is_string() || parent.at(key).get<std::string>().empty())
      fail(path + "." + key, "expected a non-empty string");
    else out = parent.at(key).get<std::string>();
  }

  std::optional<BoundSpec> bound(const Json& j, const std::string& path) {
    if (j.is_null()) return std::nullopt;
    BoundSpec b;
    if (j.is_array()) {
      for (std::size_t i = 0; i < j.size(); ++i)
        if (auto v = number(j[i], path + "[" + std::to_string(i) + "]")) b.samples.push_back(*v);
      return b;
    }
    if (auto v = number(j, path)) b.constant = *v;
    return b;
  }

  std::vector<std::pair<int, double>> modes(const Json& j, const std::string& path) {
    std::vector<std::pair<int, double>> out;
    if (!j.is_array()) {
      fail(path, "expected an array of [mode, amplitude] pairs");
      return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string p = path + "[" + std::to_string(i) + "]";
      if (!j[i].is_array() || j[i].size() != 2) {
        fail(p, "expected [mode, amplitude]");
        continue;
      }
      auto k = number(j[i][0], p + "[0]");
      auto a = number(j[i][1], p + "[1]");
      if (!k || !a) continue;
      if (std::floor(*k) != *k || *k < 1 || *k > 1e6) {
        fail(p + "[0]", "mode must be a positive integer");
        continue;
      }
      out.emplace_back(static_cast<int>(*k), *a);
    }
    return out;
  }
};

Json bound_json(const std::optional<BoundSpec>& b) {
  if (!b) return nullptr;
  if (b->constant) return *b->constant;
  return Json(b->samples);
}

std::string gradient_name(GradientMode m) { return m == GradientMode::Hadamard ? "hadamard" : "discrete"; }

std::string init_kind_name(InitSpec::Kind k) {
  switch (k) {
    case InitSpec::Kind::Constant: return "constant";
    case InitSpec::Kind::Fourier: return "fourier";
    case InitSpec::Kind::Csv: return "csv";
  }
  return "?";
}

Json modes_json(const std::vector<std::pair<int, double>>& m) {
  Json a = Json::array();
  for (const auto& [k, v] : m) a.push_back(Json::array({k, v}));
  return a;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json kkt_json(const KKTReport& k, const std::vector<Atom>& atoms, const PeriodicField& u, const AtomThresholds& thr,
              bool mu_sign) {
  Json j;
  j["stationarity_residual"] = k.stationarity_residual;
  j["complementarity_residual"] = k.complementarity_residual;
  j["has_equality"] = k.has_equality;
  j["mu_eq"] = k.mu_eq;
  if (mu_sign) j["mu_sign"] = k.mu_eq > 0.0 ? "+" : (k.mu_eq < 0.0 ? "-" : "0");
  j["eta_min"] = k.eta.size() ? k.eta.minCoeff() : 0.0;
  j["eta_max"] = k.eta.size() ? k.eta.maxCoeff() : 0.0;

  // Largest multiplier on nodes carrying atom mass.
  const CurvatureMeasure m = curvature_measure(u);
  const double floor = 0.1 * thr.tau_abs * m.total_mass;
  double at_atoms = 0.0;
  for (const auto& a : atoms)
    for (int j2 = 0; j2 < u.size(); ++j2) {
      const double d = std::abs(std::remainder(u.angle(j2) - a.theta, 2.0 * std::numbers::pi));
      if (d <= 1.5 * u.spacing() && m.node_masses[static_cast<std::size_t>(j2)] >= floor)
        at_atoms = std::max(at_atoms, k.eta[j2]);
    }
  j["eta_at_atoms_max"] = at_atoms;
  j["active_cone_rows"] = k.active_cone_rows;
  j["active_box_nodes"] = k.active_box_nodes;
  j["inside_nodes"] = static_cast<int>(std::count(k.inside_set.begin(), k.inside_set.end(), true));
  return j;
}

Json result_json(const OptimizationResult& r, const FunctionalSpec& spec) {
  Json j;
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  j["grid"] = r.u_star.size();
  j["iterations"] = r.iterations;
  j["objective"] = r.objective;
  const GaugeBody body(r.u_star);
  FunctionalSpec s = spec;
  s.mesh_levels = r.mesh_levels;
  Json terms;
  for (const auto& [k, v] : evaluate(s, body, false).per_term_values) terms[k] = v;
  j["terms"] = terms;
  j["area"] = area(body);
  j["perimeter"] = perimeter(body);
  j["u_min"] = r.u_star.min();
  j["u_max"] = r.u_star.max();
  j["cone_violation"] = r.cone_violation;
  j["box_violation"] = r.box_violation;
  j["eq_residual"] = r.eq_residual;
  j["mesh_levels"] = r.mesh_levels;
  return j;
}

Json skipped(const std::string& reason) { return Json{{"skipped", true}, {"reason", reason}}; }

int status_exit(OptStatus s) { return s == OptStatus::Converged ? kExitOk : kExitNotConverged; }

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << content;
}

// Midpoint of the widest angular gap between consecutive atoms.
double widest_gap_center(const std::vector<Atom>& atoms) {
  double best = -1.0, center = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double a = atoms[i].theta;
    double b = atoms[(i + 1) % atoms.size()].theta;
    if (b <= a) b += 2.0 * std::numbers::pi;
    if (b - a > best) {
      best = b - a;
      center = 0.5 * (a + b);
    }
  }
  return std::fmod(center, 2.0 * std::numbers::pi);
}

// Levels are frozen at the start of a solve; re-solve while the optimum
// needs a finer mesh than the one it was computed on.
OptimizationResult minimize_meshed(const FunctionalSpec& spec, const ConstraintSpec& cons,
                                   const OptimizerConfig& config, const PeriodicField& u0) {
  OptimizationResult res = minimize(spec, cons, config, u0);
  if (!spec.has_pde_terms() || spec.mesh_levels >= 0) return res;
  for (int round = 0; round < 3; ++round) {
    const int levels = mesh_levels_for(GaugeBody(res.u_star), spec.mesh_h);
    if (levels <= res.mesh_levels) break;
    FunctionalSpec fine = spec;
    fine.mesh_levels = levels;
    OptimizationResult next = minimize(fine, cons, config, res.u_star);
    for (auto& row : next.history) row.iter += res.iterations;
    next.history.insert(next.history.begin(), res.history.begin(), res.history.end());
    next.iterations += res.iterations;
    res = std::move(next);
  }
  return res;
}

}  // namespace

SchemaError::SchemaError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

PeriodicField BoundSpec::field(int n) const {
  if (constant) return PeriodicField::constant(n, *constant);
  return PeriodicField(Eigen::Map<const Eigen::VectorXd>(samples.data(), static_cast<Eigen::Index>(samples.size())));
}

ConstraintSpec ProblemDocument::constraints(int grid) const {
  ConstraintSpec c;
  const auto on_grid = [&](const BoundSpec& b) {
    PeriodicField f = b.field(static_cast<int>(b.constant ? grid : static_cast<int>(b.samples.size())));
    return f.size() == grid ? f : resample(f, grid);
  };
  if (lower) c.lower = on_grid(*lower);
  if (upper) c.upper = on_grid(*upper);
  c.equality = equality;
  return c;
}

ProblemDocument parse_problem(const Json& doc) {
  Reader r;
  ProblemDocument d;
  if (!r.object(doc, "$", {"name", "objective", "constraints", "discretization", "optimizer", "init", "analysis",
                           "outputs"}))
    throw SchemaError(r.issues);
  r.read(doc, "name", "$", d.name);

  if (!doc.contains("objective")) {
    r.fail("$.objective", "required field missing");
  } else if (const Json& o = doc.at("objective"); r.object(o, "$.objective", {"terms", "source", "gradient"})) {
    if (!o.contains("terms") || !o.at("terms").is_array() || o.at("terms").empty()) {
      r.fail("$.objective.terms", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < o.at("terms").size(); ++i) {
        const Json& t = o.at("terms")[i];
        const std::string p = "$.objective.terms[" + std::to_string(i) + "]";
        if (!r.object(t, p, {"kind", "coefficient", "exponent"})) continue;
        Term term{TermKind::Area, 1.0, 1.0};
        if (!t.contains("kind") || !t.at("kind").is_string()) {
          r.fail(p + ".kind", "expected one of Area, Energy, Lambda1, Perimeter");
        } else {
          try {
            term.kind = term_kind_from_string(t.at("kind").get<std::string>());
          } catch (const std::invalid_argument&) {
            r.fail(p + ".kind", "expected one of Area, Energy, Lambda1, Perimeter");
          }
        }
        r.read(t, "coefficient", p, term.coefficient);
        r.read(t, "exponent", p, term.exponent);
        d.objective.terms.push_back(term);
      }
    }
    if (o.contains("source") && r.object(o.at("source"), "$.objective.source", {"c0", "cx", "cy", "cr2"})) {
      const Json& s = o.at("source");
      r.read(s, "c0", "$.objective.source", d.objective.source.c0);
      r.read(s, "cx", "$.objective.source", d.objective.source.cx);
      r.read(s, "cy", "$.objective.source", d.objective.source.cy);
      r.read(s, "cr2", "$.objective.source", d.objective.source.cr2);
    }
    if (o.contains("gradient")) {
      const Json& g = o.at("gradient");
      if (g == "discrete") d.objective.gradient = GradientMode::Discrete;
      else if (g == "hadamard") d.objective.gradient = GradientMode::Hadamard;
      else r.fail("$.objective.gradient", "expected \"discrete\" or \"hadamard\"");
    }
  }

  if (doc.contains("constraints")) {
    const Json& c = doc.at("constraints");
    if (r.object(c, "$.constraints", {"lower", "upper", "equality"})) {
      if (c.contains("lower")) d.lower = r.bound(c.at("lower"), "$.constraints.lower");
      if (c.contains("upper")) d.upper = r.bound(c.at("upper"), "$.constraints.upper");
      if (c.contains("equality") && !c.at("equality").is_null() &&
          r.object(c.at("equality"), "$.constraints.equality", {"kind", "target"})) {
        const Json& e = c.at("equality");
        EqualityConstraint eq;
        if (e.contains("kind") && e.at("kind") == "Area") eq.kind = TermKind::Area;
        else if (e.contains("kind") && e.at("kind") == "Perimeter") eq.kind = TermKind::Perimeter;
        else r.fail("$.constraints.equality.kind", "expected \"Area\" or \"Perimeter\"");
        if (!e.contains("target")) r.fail("$.constraints.equality.target", "required field missing");
        r.read(e, "target", "$.constraints.equality", eq.target, true);
        d.equality = eq;
      }
    }
  }

  int eigen_iter = d.objective.eigen.max_iter;
  if (doc.contains("discretization")) {
    const Json& x = doc.at("discretization");
    if (r.object(x, "$.discretization", {"N", "mesh_h", "mesh_levels", "eigen_tol", "eigen_max_iter"})) {
      r.read(x, "N", "$.discretization", d.n, 16);
      if (d.n % 4 != 0) r.fail("$.discretization.N", "must be a multiple of 4");
      r.read(x, "mesh_h", "$.discretization", d.objective.mesh_h, true);
      r.read(x, "mesh_levels", "$.discretization", d.objective.mesh_levels, -1);
      r.read(x, "eigen_tol", "$.discretization", d.objective.eigen.tol, true);
      r.read(x, "eigen_max_iter", "$.discretization", eigen_iter, 1);
      d.objective.eigen.max_iter = eigen_iter;
    }
  }

  if (doc.contains("optimizer")) {
    const Json& o = doc.at("optimizer");
    const std::string p = "$.optimizer";
    if (r.object(o, p, {"max_iter", "tol_kkt", "tol_cone", "tol_eq", "tol_comp", "u_min", "sigma", "step0", "armijo",
                        "step_min", "rho0", "active_tol", "inside_delta"})) {
      auto& c = d.optimizer;
      r.read(o, "max_iter", p, c.max_iter, 1);
      r.read(o, "tol_kkt", p, c.tol_kkt, true);
      r.read(o, "tol_cone", p, c.tol_cone, true);
      r.read(o, "tol_eq", p, c.tol_eq, true);
      r.read(o, "tol_comp", p, c.tol_comp, true);
      r.read(o, "u_min", p, c.u_min, true);
      r.read(o, "sigma", p, c.sigma);
      if (c.sigma < 0.0) r.fail(p + ".sigma", "must be >= 0");
      r.read(o, "step0", p, c.step0, true);
      r.read(o, "armijo", p, c.armijo, true);
      if (c.armijo >= 1.0) r.fail(p + ".armijo", "must be below 1");
      r.read(o, "step_min", p, c.step_min, true);
      r.read(o, "rho0", p, c.rho0, true);
      r.read(o, "active_tol", p, c.active_tol, true);
      r.read(o, "inside_delta", p, c.inside_delta, true);
    }
  }

  if (doc.contains("init")) {
    const Json& i = doc.at("init");
    if (r.object(i, "$.init", {"type", "value", "cos", "sin", "path"})) {
      std::string type = "constant";
      r.read(i, "type", "$.init", type);
      if (type == "constant") d.init.kind = InitSpec::Kind::Constant;
      else if (type == "fourier") d.init.kind = InitSpec::Kind::Fourier;
      else if (type == "csv") d.init.kind = InitSpec::Kind::Csv;
      else r.fail("$.init.type", "expected \"constant\", \"fourier\" or \"csv\"");
      r.read(i, "value", "$.init", d.init.value, true);
      if (i.contains("cos")) d.init.cos_modes = r.modes(i.at("cos"), "$.init.cos");
      if (i.contains("sin")) d.init.sin_modes = r.modes(i.at("sin"), "$.init.sin");
      r.read(i, "path", "$.init", d.init.path);
      if (d.init.kind == InitSpec::Kind::Csv && d.init.path.empty()) r.fail("$.init.path", "required for csv init");
    }
  }

  if (doc.contains("analysis")) {
    const Json& a = doc.at("analysis");
    if (r.object(a, "$.analysis", {"classify", "refine", "derivative_check", "report_mu_sign"})) {
      r.read(a, "classify", "$.analysis", d.analysis.classify);
      r.read(a, "refine", "$.analysis", d.analysis.refine);
      r.read(a, "report_mu_sign", "$.analysis", d.analysis.report_mu_sign);
      if (a.contains("derivative_check") &&
          r.object(a.at("derivative_check"), "$.analysis.derivative_check", {"directions", "seed"})) {
        const Json& dc = a.at("derivative_check");
        r.read(dc, "directions", "$.analysis.derivative_check", d.analysis.check_directions, 0);
        int seed = static_cast<int>(d.analysis.seed);
        r.read(dc, "seed", "$.analysis.derivative_check", seed, 0);
        d.analysis.seed = static_cast<std::uint64_t>(seed);
      }
    }
  }

  if (doc.contains("outputs")) {
    const Json& o = doc.at("outputs");
    const std::string p = "$.outputs";
    if (r.object(o, p, {"dir", "report", "history", "svg", "gauge", "mesh", "timings"})) {
      r.read(o, "dir", p, d.outputs.dir);
      r.read(o, "report", p, d.outputs.report);
      r.read(o, "history", p, d.outputs.history);
      r.read(o, "svg", p, d.outputs.svg);
      r.read(o, "gauge", p, d.outputs.gauge);
      r.read(o, "mesh", p, d.outputs.mesh);
      r.read(o, "timings", p, d.outputs.timings);
    }
  }

  // Cross-field checks.
  for (const auto* b : {&d.lower, &d.upper}) {
    if (!*b || (*b)->constant) continue;
    const std::string p = b == &d.lower ? "$.constraints.lower" : "$.constraints.upper";
    const auto m = static_cast<int>((*b)->samples.size());
    if (m < 8 || m % 2 != 0) r.fail(p, "sampled bound needs an even number (>= 8) of values");
  }
  if (d.upper && d.upper->constant && !(*d.upper->constant > 0.0))
    r.fail("$.constraints.upper", "upper gauge bound must be positive");
  if (d.lower && d.upper && d.lower->constant && d.upper->constant && *d.lower->constant > *d.upper->constant)
    r.fail("$.constraints", "lower bound exceeds upper bound");
  if (r.issues.empty()) {
    try {
      d.constraints(d.n).validate(d.n);
    } catch (const std::invalid_argument& e) {
      r.fail("$.constraints", e.what());
    }
  }
  if (!r.issues.empty()) throw SchemaError(r.issues);
  return d;
}

ProblemDocument load_problem(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw SchemaError({path.string() + ": cannot open file"});
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    const auto last_nl = text.rfind('\n', upto > 0 ? upto - 1 : 0);
    const std::size_t col = last_nl == std::string::npos || upto == 0 ? upto + 1 : upto - last_nl;
    throw SchemaError({path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON syntax error"});
  }
  return parse_problem(doc);
}

Json to_json(const ProblemDocument& d) {
  Json j;
  j["name"] = d.name;
  Json terms = Json::array();
  for (const auto& t : d.objective.terms)
    terms.push_back({{"kind", to_string(t.kind)}, {"coefficient", t.coefficient}, {"exponent", t.exponent}});
  j["objective"] = {{"terms", terms},
                    {"source",
                     {{"c0", d.objective.source.c0},
                      {"cx", d.objective.source.cx},
                      {"cy", d.objective.source.cy},
                      {"cr2", d.objective.source.cr2}}},
                    {"gradient", gradient_name(d.objective.gradient)}};
  Json eq = nullptr;
  if (d.equality) eq = {{"kind", to_string(d.equality->kind)}, {"target", d.equality->target}};
  j["constraints"] = {{"lower", bound_json(d.lower)}, {"upper", bound_json(d.upper)}, {"equality", eq}};
  j["discretization"] = {{"N", d.n},
                         {"mesh_h", d.objective.mesh_h},
                         {"mesh_levels", d.objective.mesh_levels},
                         {"eigen_tol", d.objective.eigen.tol},
                         {"eigen_max_iter", d.objective.eigen.max_iter}};
  const auto& c = d.optimizer;
  j["optimizer"] = {{"max_iter", c.max_iter},     {"tol_kkt", c.tol_kkt},       {"tol_cone", c.tol_cone},
                    {"tol_eq", c.tol_eq},         {"tol_comp", c.tol_comp},     {"u_min", c.u_min},
                    {"sigma", c.sigma},           {"step0", c.step0},           {"armijo", c.armijo},
                    {"step_min", c.step_min},     {"rho0", c.rho0},             {"active_tol", c.active_tol},
                    {"inside_delta", c.inside_delta}};
  Json init = {{"type", init_kind_name(d.init.kind)}, {"value", d.init.value}};
  if (d.init.kind == InitSpec::Kind::Fourier) {
    init["cos"] = modes_json(d.init.cos_modes);
    init["sin"] = modes_json(d.init.sin_modes);
  }
  if (d.init.kind == InitSpec::Kind::Csv) init["path"] = d.init.path;
  j["init"] = init;
  j["analysis"] = {{"classify", d.analysis.classify},
                   {"refine", d.analysis.refine},
                   {"derivative_check", {{"directions", d.analysis.check_directions}, {"seed", d.analysis.seed}}},
                   {"report_mu_sign", d.analysis.report_mu_sign}};
  const auto& o = d.outputs;
  j["outputs"] = {{"dir", o.dir},     {"report", o.report}, {"history", o.history}, {"svg", o.svg},
                  {"gauge", o.gauge}, {"mesh", o.mesh},     {"timings", o.timings}};
  return j;
}

PeriodicField initial_gauge(const ProblemDocument& d, const fs::path& base_dir) {
  const auto& i = d.init;
  switch (i.kind) {
    case InitSpec::Kind::Constant: return PeriodicField::constant(d.n, i.value);
    case InitSpec::Kind::Fourier:
      return PeriodicField::sample(d.n, [&](double t) {
        double v = i.value;
        for (const auto& [k, a] : i.cos_modes) v += a * std::cos(k * t);
        for (const auto& [k, b] : i.sin_modes) v += b * std::sin(k * t);
        return v;
      });
    case InitSpec::Kind::Csv: {
      const fs::path p = fs::path(i.path).is_absolute() ? fs::path(i.path) : base_dir / i.path;
      std::ifstream is(p);
      if (!is) throw SchemaError({"$.init.path: cannot open " + p.string()});
      try {
        PeriodicField u = read_gauge_csv(is);
        return u.size() == d.n ? u : resample(u, d.n);
      } catch (const std::invalid_argument& e) {
        throw SchemaError({std::string("$.init.path: ") + e.what()});
      }
    }
  }
  throw std::logic_error("unreachable");
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"isoperimetric", "ex1",        "ex2",        "ex3",
                                              "ex-prime-1",    "ex-prime-2", "ex-prime-3", "maxE"};
  return names;
}

ProblemDocument preset(const std::string& name) {
  ProblemDocument d;
  d.name = name;
  d.n = 128;
  d.init.kind = InitSpec::Kind::Fourier;
  d.init.value = 1.0;
  d.init.cos_modes = {{2, 0.1}};
  d.init.sin_modes = {{3, 0.05}};
  const double pi = std::numbers::pi;
  const auto box = [&](double lo, double hi) {
    d.lower = BoundSpec{lo, {}};
    d.upper = BoundSpec{hi, {}};
  };
  using K = TermKind;
  if (name == "isoperimetric") {
    d.objective.terms = {{K::Perimeter, 1.0, 1.0}};
    d.equality = EqualityConstraint{K::Area, pi};
    box(1.0 / 3.0, 3.0);
    d.init.cos_modes = {{3, 0.2}};
    d.init.sin_modes = {};
  } else if (name == "ex1") {
    d.objective.terms = {{K::Lambda1, 1.0, 1.0}, {K::Perimeter, 1.0, 1.0}};
    box(0.5, 2.0);
  } else if (name == "ex2") {
    d.objective.terms = {{K::Lambda1, 1.0, 1.0}, {K::Perimeter, 1.0, 1.0}};
    d.equality = EqualityConstraint{K::Area, pi};
    box(1.0 / 3.0, 3.0);
  } else if (name == "ex3") {
    d.objective.terms = {{K::Lambda1, 1.0, 1.0}};
    d.equality = EqualityConstraint{K::Perimeter, 2.0 * pi};
    box(1.0 / 3.0, 3.0);
    d.analysis.report_mu_sign = true;
  } else if (name == "ex-prime-1") {
    d.objective.terms = {{K::Lambda1, 1.0, 1.0}, {K::Area, 3.0, 1.0}, {K::Perimeter, -1.0, 1.0}};
    box(0.5, 2.0);
  } else if (name == "ex-prime-2") {
    d.objective.terms = {{K::Lambda1, 1.0, 1.0}, {K::Perimeter, -1.0, 1.0}};
    d.equality = EqualityConstraint{K::Area, pi};
    box(1.0 / 3.0, 3.0);
  } else if (name == "ex-prime-3") {
    d.objective.terms = {{K::Area, 1.0, 1.0}};
    d.equality = EqualityConstraint{K::Perimeter, 5.0};
    d.upper = BoundSpec{2.0, {}};
    d.analysis.report_mu_sign = true;
  } else if (name == "maxE") {
    d.objective.terms = {{K::Energy, -1.0, 1.0}};
    d.equality = EqualityConstraint{K::Area, pi};
    d.lower = BoundSpec{0.5, {}};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  d.outputs.dir = name;
  return d;
}

Json verdict_json(const RegularityVerdict& v) {
  Json atoms = Json::array(), fine = Json::array();
  for (const auto& a : v.atoms) atoms.push_back({{"theta", a.theta}, {"mass", a.mass}});
  for (const auto& a : v.atoms_fine) fine.push_back({{"theta", a.theta}, {"mass", a.mass}});
  Json j;
  j["kind"] = to_string(v.kind);
  j["atoms"] = atoms;
  j["atoms_fine"] = fine;
  j["stability"] = v.stability;
  j["max_density"] = v.max_density;
  j["atom_mass_fraction"] = v.atom_mass_fraction;
  j["top_node_fraction"] = v.top_node_fraction;
  j["inside_mass"] = v.inside_mass;
  j["inside_nodes"] = v.inside_nodes;
  return j;
}

RunOutcome run_problem(const ProblemDocument& doc, const fs::path& base_dir, bool write_outputs) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  RunOutcome out;
  Json& rep = out.report;
  rep["problem"] = to_json(doc);
  out.timings = Json::object();

  const PeriodicField u0 = initial_gauge(doc, base_dir);
  const ConstraintSpec cons = doc.constraints(doc.n);
  const AtomThresholds thr;

  std::string failure;
  try {
    auto t0 = clock::now();
    out.result = minimize_meshed(doc.objective, cons, doc.optimizer, u0);
    out.timings["minimize"] = seconds_since(t0);
  } catch (const InfeasibleError& e) {
    out.exit_code = kExitInfeasible;
    failure = e.what();
  } catch (const SolverError& e) {
    out.exit_code = kExitNotConverged;
    failure = e.what();
  } catch (const DomainError& e) {
    out.exit_code = kExitNotConverged;
    failure = e.what();
  }

  if (!out.result) {
    rep["result"] = {{"status", out.exit_code == kExitInfeasible ? "infeasible" : "solver_error"}, {"message", failure}};
    for (const char* k : {"kkt", "refined", "verdict", "derivative_check", "corner_gap"}) rep[k] = skipped(failure);
  } else {
    const auto& res = *out.result;
    out.exit_code = status_exit(res.status);
    rep["result"] = result_json(res, doc.objective);

    if (doc.analysis.refine) {
      try {
        auto t0 = clock::now();
        FunctionalSpec fine_spec = doc.objective;
        if (fine_spec.mesh_levels >= 0) fine_spec.mesh_levels += 1;
        out.refined = minimize_meshed(fine_spec, doc.constraints(2 * doc.n), doc.optimizer, resample(res.u_star, 2 * doc.n));
        out.timings["refine"] = seconds_since(t0);
        rep["refined"] = result_json(*out.refined, fine_spec);
        rep["refined"]["kkt"] = {{"stationarity_residual", out.refined->kkt.stationarity_residual},
                                 {"complementarity_residual", out.refined->kkt.complementarity_residual},
                                 {"mu_eq", out.refined->kkt.mu_eq}};
        out.exit_code = std::max(out.exit_code, status_exit(out.refined->status));
      } catch (const std::exception& e) {
        rep["refined"] = skipped(std::string("refinement failed: ") + e.what());
        out.exit_code = std::max<int>(out.exit_code, kExitNotConverged);
      }
    } else {
      rep["refined"] = skipped("analysis.refine is false");
    }

    if (doc.analysis.classify) {
      auto t0 = clock::now();
      const std::vector<bool> inside(res.kkt.inside_set.begin(), res.kkt.inside_set.end());
      out.verdict = out.refined ? classify(curvature_measure(res.u_star), curvature_measure(out.refined->u_star), inside)
                                : classify(res.u_star, inside);
      out.timings["classify"] = seconds_since(t0);
      rep["verdict"] = verdict_json(*out.verdict);
    } else {
      rep["verdict"] = skipped("analysis.classify is false");
    }
    rep["kkt"] = kkt_json(res.kkt, out.verdict ? out.verdict->atoms : std::vector<Atom>{}, res.u_star, thr,
                          doc.analysis.report_mu_sign);

    // Corner-gap bound from a coercivity fit on the widest edge of a polygonal optimum.
    if (out.verdict && out.verdict->kind == VerdictKind::Polygonal) {
      try {
        auto t0 = clock::now();
        const OptimizationResult& best = out.refined ? *out.refined : res;
        const GaugeBody body(best.u_star);
        FunctionalSpec spec = doc.objective;
        spec.mesh_levels = best.mesh_levels;
        const double center = widest_gap_center(out.verdict->atoms);
        const CoercivityFit fit = coercivity_probe(spec, body, center, {0.8, 0.4, 0.2, 0.1});
        const CornerGapCheck gap = check_corner_gap(out.verdict->atoms, fit);
        out.timings["corner_gap"] = seconds_since(t0);
        Json g;
        g["center"] = center;
        g["epsilons"] = fit.epsilons;
        g["q_values"] = fit.q_values;
        g["alpha"] = fit.alpha;
        g["beta"] = fit.beta;
        g["gamma"] = fit.gamma;
        g["s"] = fit.s;
        g["fit_residual"] = fit.residual;
        g["fit_condition"] = fit.condition;
        // The bump is not cone-tangent; record which signs stay convex.
        Json feasible = Json::array();
        const double h = 1e-3 * best.u_star.min();
        for (double eps : fit.epsilons) {
          const PeriodicField v = bump_direction(center, eps, best.u_star.size());
          const auto convex = [&](double sign) {
            const auto m = curvature_measure(best.u_star + (sign * h) * v).node_masses;
            return *std::min_element(m.begin(), m.end()) >= -doc.optimizer.tol_cone;
          };
          feasible.push_back({{"plus", convex(1.0)}, {"minus", convex(-1.0)}});
        }
        g["probe_cone_feasible"] = feasible;
        g["fit_ok"] = gap.fit_ok;
        g["fit_note"] = gap.fit_note;
        g["at_most_two_atoms"] = gap.bound.at_most_two_atoms;
        g["gap_bound"] = gap.bound.gap ? Json(*gap.bound.gap) : Json(nullptr);
        g["min_span"] = gap.min_span;
        g["passed"] = gap.passed;
        rep["corner_gap"] = g;
      } catch (const std::exception& e) {
        rep["corner_gap"] = skipped(std::string("probe failed: ") + e.what());
      }
    } else {
      rep["corner_gap"] = skipped("verdict is not Polygonal");
    }

    if (doc.analysis.check_directions > 0) {
      auto t0 = clock::now();
      FunctionalSpec spec = doc.objective;
      spec.mesh_levels = -1;
      const auto dc = check_gradient(spec, GaugeBody(res.u_star), doc.analysis.check_directions, doc.analysis.seed);
      out.timings["derivative_check"] = seconds_since(t0);
      rep["derivative_check"] = {{"directions", dc.direction_count},
                                 {"max_rel_error_grad", dc.max_rel_error_grad},
                                 {"max_rel_error_hess", dc.hessian_checked ? Json(dc.max_rel_error_hess) : Json(nullptr)},
                                 {"refinement_trend", dc.refinement_trend},
                                 {"mesh_h", dc.mesh_h}};
    } else {
      rep["derivative_check"] = skipped("analysis.derivative_check.directions is 0");
    }
  }
  rep["exit_code"] = out.exit_code;
  out.timings["total"] = seconds_since(t_start);

  if (write_outputs) {
    const fs::path dir = fs::path(doc.outputs.dir).is_absolute() ? fs::path(doc.outputs.dir) : base_dir / doc.outputs.dir;
    fs::create_directories(dir);
    write_file(dir / doc.outputs.report, rep.dump(2) + "\n");
    write_file(dir / doc.outputs.timings, out.timings.dump(2) + "\n");
    if (out.result) {
      const OptimizationResult& final_res = out.refined ? *out.refined : *out.result;
      std::ostringstream hist, gauge, svg, off;
      write_history_csv(hist, out.result->history);
      write_file(dir / doc.outputs.history, hist.str());
      write_gauge_csv(gauge, final_res.u_star);
      write_file(dir / doc.outputs.gauge, gauge.str());
      write_shape_svg(svg, out.result->u_star, out.verdict ? out.verdict->atoms : std::vector<Atom>{},
                      out.result->kkt.eta);
      write_file(dir / doc.outputs.svg, svg.str());
      if (doc.objective.has_pde_terms()) {
        const GaugeBody body(final_res.u_star);
        const Mesh mesh = mesh_convex(body, doc.objective.mesh_h, final_res.mesh_levels);
        write_off(off, mesh);
        write_file(dir / doc.outputs.mesh, off.str());
      }
    }
  }
  return out;
}

Json verify_problem(const ProblemDocument& doc, const fs::path& base_dir) {
  const PeriodicField u0 = initial_gauge(doc, base_dir);
  const int directions = std::max(doc.analysis.check_directions, 1);
  const auto dc = check_gradient(doc.objective, GaugeBody(u0), directions, doc.analysis.seed);
  Json j;
  j["problem"] = doc.name;
  j["grid"] = doc.n;
  j["directions"] = dc.direction_count;
  j["seed"] = doc.analysis.seed;
  j["gradient_mode"] = gradient_name(doc.objective.gradient);
  j["max_rel_error_grad"] = dc.max_rel_error_grad;
  j["max_rel_error_hess"] = dc.hessian_checked ? Json(dc.max_rel_error_hess) : Json(nullptr);
  j["refinement_trend"] = dc.refinement_trend;
  j["mesh_h"] = dc.mesh_h;
  return j;
}

void set_path(Json& doc, const std::string& dotted, const Json& value) {
  if (dotted.empty()) throw std::invalid_argument("set_path: empty path");
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw std::invalid_argument("set_path: empty segment in '" + dotted + "'");
    Json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
      if (ec != std::errc() || end != key.data() + key.size() || idx >= node->size())
        throw std::invalid_argument("set_path: bad array index '" + key + "' in '" + dotted + "'");
      next = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null())
        throw std::invalid_argument("set_path: '" + key + "' addresses into a scalar in '" + dotted + "'");
      next = &(*node)[key];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

std::vector<SweepItem> sweep(const Json& base_doc, const std::string& param, const std::vector<std::string>& values,
                             const fs::path& base_dir, int workers) {
  std::vector<ProblemDocument> docs;
  std::vector<SweepItem> items(values.size());
  const std::string base_out =
      base_doc.contains("outputs") && base_doc.at("outputs").contains("dir") && base_doc.at("outputs").at("dir").is_string()
          ? base_doc.at("outputs").at("dir").get<std::string>()
          : std::string("sweep");
  // Validate everything before any run starts.
  std::vector<std::string> issues;
  for (std::size_t k = 0; k < values.size(); ++k) {
    Json doc = base_doc;
    Json v;
    try {
      v = Json::parse(values[k]);
    } catch (const Json::parse_error&) {
      v = values[k];
    }
    items[k].value = values[k];
    try {
      set_path(doc, param, v);
      set_path(doc, "outputs.dir", (fs::path(base_out) / ("run_" + std::to_string(k))).string());
      docs.push_back(parse_problem(doc));
    } catch (const SchemaError& e) {
      for (const auto& i : e.issues()) issues.push_back("value " + values[k] + ": " + i);
    } catch (const std::invalid_argument& e) {
      issues.push_back("value " + values[k] + ": " + e.what());
    }
  }
  if (!issues.empty()) throw SchemaError(issues);

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t pool = std::min<std::size_t>(docs.size(), workers > 0 ? static_cast<std::size_t>(workers) : hw);
  std::mutex mu;
  std::size_t next = 0;
  const auto worker = [&]() {
    while (true) {
      std::size_t k;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (next >= docs.size()) return;
        k = next++;
      }
      try {
        RunOutcome r = run_problem(docs[k], base_dir, true);
        items[k].exit_code = r.exit_code;
        items[k].summary = {{"dir", docs[k].outputs.dir}, {"result", r.report["result"]}};
        if (r.report.contains("verdict") && r.report["verdict"].contains("kind"))
          items[k].summary["verdict"] = r.report["verdict"]["kind"];
      } catch (const SchemaError& e) {
        items[k].exit_code = kExitSchema;
        items[k].summary = {{"error", e.what()}};
      } catch (const std::exception& e) {
        items[k].exit_code = kExitNotConverged;
        items[k].summary = {{"error", e.what()}};
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < pool; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return items;
}

}  // namespace gaugeopt
