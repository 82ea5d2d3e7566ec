#pragma once

// Composite objectives J = sum_i c_i X_i^{p_i} over area, Dirichlet energy,
// first eigenvalue and perimeter, with chain-rule gradients and constraints.

#include "gaugeopt/body.hpp"
#include "gaugeopt/pde.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gaugeopt {

enum class TermKind { Area, Energy, Lambda1, Perimeter };

std::string to_string(TermKind kind);
TermKind term_kind_from_string(const std::string& name);

struct Term {
  TermKind kind;
  double coefficient = 1.0;
  double exponent = 1.0;
};

/// Hadamard: boundary-integral formulas fed by the flux trace.
/// Discrete: exact derivative of the discretized PDE functional.
enum class GradientMode { Hadamard, Discrete };

struct FunctionalSpec {
  std::vector<Term> terms;
  SourceField source;
  double mesh_h = 0.1;
  int mesh_levels = -1;  // < 0: chosen from mesh_h on each body
  GradientMode gradient = GradientMode::Discrete;
  EigenOptions eigen;

  bool has_pde_terms() const;
  /// Sum of perimeter coefficients (sign drives the smooth/polygon expectation).
  double perimeter_coefficient() const;
  /// Pins mesh_levels to the value chosen for `body` when unset.
  FunctionalSpec with_fixed_mesh(const GaugeBody& body) const;
};

struct EvalReport {
  double value = 0.0;
  PeriodicField gradient{Eigen::VectorXd::Zero(8)};
  std::map<std::string, double> per_term_values;  // "i:Kind" -> c X^p
  std::vector<double> base_values;                // X_i
  std::vector<PeriodicField> term_gradients;      // d(c X^p)
  std::shared_ptr<const Mesh> mesh;               // when PDE terms are present
};

EvalReport evaluate(const FunctionalSpec& spec, const GaugeBody& body, bool with_gradient = true);

struct EqualityConstraint {
  TermKind kind = TermKind::Area;  // Area or Perimeter
  double target = 0.0;
};

struct ConstraintSpec {
  std::optional<PeriodicField> lower;  // k1
  std::optional<PeriodicField> upper;  // k2
  std::optional<EqualityConstraint> equality;

  /// Throws std::invalid_argument on size mismatch, k1 > k2 or target <= 0.
  void validate(int n) const;
};

struct ConstraintEval {
  double value = 0.0;  // m(u) - M0, zero without an equality
  PeriodicField gradient{Eigen::VectorXd::Zero(8)};
  double box_violation = 0.0;
};

ConstraintEval constraint_eval(const ConstraintSpec& cons, const GaugeBody& body);

/// j''(u)(v, v): analytic for Area and Perimeter terms, Richardson-extrapolated
/// central second differences for PDE terms. step <= 0 selects
/// 1e-3 * max|u| / max|v|.
double second_form(const FunctionalSpec& spec, const GaugeBody& body, const PeriodicField& v, double step = 0.0);

/// Directional derivative dtheta * sum_j g_j v_j.
double directional(const PeriodicField& g, const PeriodicField& v);

}  // namespace gaugeopt
