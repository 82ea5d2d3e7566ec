#include "gaugeopt/functional.hpp"

#include "gaugeopt/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace gaugeopt {

namespace {

bool is_integer(double p) { return std::floor(p) == p; }

double power(double x, double p) {
  if (p == 1.0) return x;
  if (x <= 0.0 && !is_integer(p))
    throw DomainError("functional: base " + std::to_string(x) + " with non-integer exponent " + std::to_string(p));
  return std::pow(x, p);
}

// d/dX (X^p)
double power_slope(double x, double p) {
  if (p == 1.0) return 1.0;
  return p * power(x, p - 1.0);
}

double power_curvature(double x, double p) {
  if (p == 1.0 || p == 0.0) return 0.0;
  return p * (p - 1.0) * power(x, p - 2.0);
}

bool is_pde(TermKind k) { return k == TermKind::Energy || k == TermKind::Lambda1; }

}  // namespace

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::Area: return "Area";
    case TermKind::Energy: return "Energy";
    case TermKind::Lambda1: return "Lambda1";
    case TermKind::Perimeter: return "Perimeter";
  }
  return "?";
}

TermKind term_kind_from_string(const std::string& name) {
  if (name == "Area") return TermKind::Area;
  if (name == "Energy") return TermKind::Energy;
  if (name == "Lambda1") return TermKind::Lambda1;
  if (name == "Perimeter") return TermKind::Perimeter;
  throw std::invalid_argument("unknown term kind '" + name + "'");
}

bool FunctionalSpec::has_pde_terms() const {
  for (const auto& t : terms)
    if (is_pde(t.kind)) return true;
  return false;
}

double FunctionalSpec::perimeter_coefficient() const {
  double c = 0.0;
  for (const auto& t : terms)
    if (t.kind == TermKind::Perimeter) c += t.coefficient;
  return c;
}

FunctionalSpec FunctionalSpec::with_fixed_mesh(const GaugeBody& body) const {
  FunctionalSpec out = *this;
  if (out.mesh_levels < 0 && has_pde_terms()) out.mesh_levels = mesh_levels_for(body, mesh_h);
  return out;
}

double directional(const PeriodicField& g, const PeriodicField& v) { return g.spacing() * g.values().dot(v.values()); }

EvalReport evaluate(const FunctionalSpec& spec, const GaugeBody& body, bool with_gradient) {
  if (spec.terms.empty()) throw std::invalid_argument("evaluate: functional has no terms");
  EvalReport r;
  r.gradient = PeriodicField(Eigen::VectorXd::Zero(body.size()));

  std::optional<FemSolution> energy;
  std::optional<EigenPair> eigen;
  bool need_energy = false, need_eigen = false;
  for (const auto& t : spec.terms) {
    need_energy |= t.kind == TermKind::Energy;
    need_eigen |= t.kind == TermKind::Lambda1;
  }
  if (need_energy || need_eigen) {
    r.mesh = std::make_shared<const Mesh>(mesh_convex(body, spec.mesh_h, spec.mesh_levels));
    if (need_energy) energy = dirichlet_energy(r.mesh, spec.source);
    if (need_eigen) eigen = lambda1(r.mesh, spec.eigen);
  }

  for (std::size_t i = 0; i < spec.terms.size(); ++i) {
    const auto& t = spec.terms[i];
    double x = 0.0;
    switch (t.kind) {
      case TermKind::Area: x = area(body); break;
      case TermKind::Perimeter: x = perimeter(body); break;
      case TermKind::Energy: x = energy->energy; break;
      case TermKind::Lambda1: x = eigen->lambda; break;
    }
    const double contribution = t.coefficient * power(x, t.exponent);
    r.base_values.push_back(x);
    r.per_term_values[std::to_string(i) + ":" + to_string(t.kind)] = contribution;
    r.value += contribution;
    if (!with_gradient) continue;

    PeriodicField dx = [&] {
      const bool hadamard = spec.gradient == GradientMode::Hadamard;
      switch (t.kind) {
        case TermKind::Area: return area_gradient(body);
        case TermKind::Perimeter: return perimeter_gradient(body);
        case TermKind::Energy:
          return hadamard ? hadamard_gradient(*energy, 0.5) : energy_discrete_gradient(*energy, spec.source);
        case TermKind::Lambda1:
          return hadamard ? hadamard_gradient(eigen->eigenfunction, 1.0) : lambda1_discrete_gradient(*eigen);
      }
      throw std::logic_error("unreachable");
    }();
    dx *= t.coefficient * power_slope(x, t.exponent);
    r.gradient += dx;
    r.term_gradients.push_back(std::move(dx));
  }
  return r;
}

void ConstraintSpec::validate(int n) const {
  if (lower && lower->size() != n) throw std::invalid_argument("constraints: lower bound has wrong grid size");
  if (upper && upper->size() != n) throw std::invalid_argument("constraints: upper bound has wrong grid size");
  if (lower && upper)
    for (int j = 0; j < n; ++j)
      if ((*lower)[j] > (*upper)[j]) throw std::invalid_argument("constraints: k1 > k2 at node " + std::to_string(j));
  if (equality) {
    if (equality->kind != TermKind::Area && equality->kind != TermKind::Perimeter)
      throw std::invalid_argument("constraints: equality must be Area or Perimeter");
    if (!(equality->target > 0.0)) throw std::invalid_argument("constraints: equality target must be positive");
  }
}

ConstraintEval constraint_eval(const ConstraintSpec& cons, const GaugeBody& body) {
  ConstraintEval r;
  r.gradient = PeriodicField(Eigen::VectorXd::Zero(body.size()));
  if (cons.equality) {
    if (cons.equality->kind == TermKind::Area) {
      r.value = area(body) - cons.equality->target;
      r.gradient = area_gradient(body);
    } else {
      r.value = perimeter(body) - cons.equality->target;
      r.gradient = perimeter_gradient(body);
    }
  }
  const auto& u = body.u();
  for (int j = 0; j < u.size(); ++j) {
    if (cons.lower) r.box_violation = std::max(r.box_violation, (*cons.lower)[j] - u[j]);
    if (cons.upper) r.box_violation = std::max(r.box_violation, u[j] - (*cons.upper)[j]);
  }
  return r;
}

double second_form(const FunctionalSpec& spec_in, const GaugeBody& body, const PeriodicField& v, double step) {
  const FunctionalSpec spec = spec_in.with_fixed_mesh(body);
  double total = 0.0;

  FunctionalSpec pde_part = spec;
  pde_part.terms.clear();
  for (const auto& t : spec.terms) {
    if (is_pde(t.kind)) {
      pde_part.terms.push_back(t);
      continue;
    }
    const bool is_area = t.kind == TermKind::Area;
    const double x = is_area ? area(body) : perimeter(body);
    const double dx = directional(is_area ? area_gradient(body) : perimeter_gradient(body), v);
    const double d2x = is_area ? area_hessian_form(body, v) : perimeter_hessian_form(body, v);
    total += t.coefficient * (power_curvature(x, t.exponent) * dx * dx + power_slope(x, t.exponent) * d2x);
  }
  if (pde_part.terms.empty()) return total;

  const double vmax = v.max_abs();
  if (vmax == 0.0) return total;
  const double h = step > 0.0 ? step : 1e-3 * body.u().max_abs() / vmax;
  const auto value_at = [&](double t) {
    if (t == 0.0) return evaluate(pde_part, body, false).value;
    PeriodicField moved = body.u() + t * v;
    if (moved.min() < kDefaultUMin) throw DomainError("second_form: perturbation u + t v leaves u > 0");
    return evaluate(pde_part, GaugeBody(std::move(moved)), false).value;
  };
  const double f0 = value_at(0.0);
  const auto second_difference = [&](double s) { return (value_at(s) - 2.0 * f0 + value_at(-s)) / (s * s); };
  const double coarse = second_difference(h);
  const double fine = second_difference(0.5 * h);
  return total + (4.0 * fine - coarse) / 3.0;
}

}  // namespace gaugeopt
