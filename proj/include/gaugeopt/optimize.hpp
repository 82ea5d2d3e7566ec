#pragma once

// Minimization over the discrete convexity cone {D u >= 0}, the box
// k1 <= u <= k2 and an optional equality m(u) = M0, with KKT multiplier recovery.

#include "gaugeopt/functional.hpp"

#include <Eigen/SparseCore>

#include <iosfwd>
#include <string>
#include <vector>

namespace gaugeopt {

/// Row j: (u_{j-1} - 2 cos(dtheta) u_j + u_{j+1}) / dtheta. Symmetric, with the
/// grid samples of cos and sin in its kernel exactly.
struct ConeConstraint {
  Eigen::SparseMatrix<double> d;
  double tol_cone = 1e-10;
  int size() const { return static_cast<int>(d.rows()); }
};

ConeConstraint cone_matrix(int n, double tol_cone = 1e-10);

struct OptimizerConfig {
  int max_iter = 400;
  double tol_kkt = 1e-4;
  double tol_cone = 1e-10;
  double tol_eq = 1e-8;
  double tol_comp = 1e-6;
  double u_min = kDefaultUMin;
  double sigma = 1.0;         // metric M = dtheta (I + sigma L), L the periodic -d^2/dtheta^2
  double step0 = 1.0;         // initial metric step t
  double armijo = 1e-4;
  double step_min = 1e-14;    // smallest accepted max |alpha d|
  double rho0 = 10.0;         // augmented Lagrangian penalty
  double active_tol = 1e-9;   // constraint activity for multiplier recovery
  double inside_delta = 1e-7; // margin defining the inside set
};

struct KKTReport {
  Eigen::VectorXd eta;        // cone multiplier per node, >= 0
  double mu_eq = 0.0;         // grad j + mu grad m = D' eta + nu_lo - nu_hi
  Eigen::VectorXd box_mult;   // nu_lo - nu_hi per node
  double stationarity_residual = 0.0;
  double complementarity_residual = 0.0;
  std::vector<bool> inside_set;
  std::vector<bool> cone_active;
  int active_cone_rows = 0;
  int active_box_nodes = 0;
  bool has_equality = false;
};

enum class OptStatus { Converged, MaxIterations, LineSearchFailure };
std::string to_string(OptStatus s);

struct HistoryRow {
  int iter = 0;
  double objective = 0.0;
  double merit = 0.0;
  double eq_residual = 0.0;
  double stationarity = 0.0;  // scaled projected-gradient residual
  double step = 0.0;          // accepted alpha
  double metric_step = 0.0;   // t
  int active = 0;
};

struct OptimizationResult {
  PeriodicField u_star{Eigen::VectorXd::Ones(8)};
  double objective = 0.0;
  int iterations = 0;
  OptStatus status = OptStatus::MaxIterations;
  KKTReport kkt;
  std::vector<HistoryRow> history;
  double cone_violation = 0.0;  // max(0, -min D u)
  double box_violation = 0.0;
  double eq_residual = 0.0;
  int mesh_levels = -1;
  std::string message;
};

/// Lower bound actually enforced: max(k1, u_min) nodewise.
Eigen::VectorXd effective_lower(const ConstraintSpec& cons, int n, double u_min);
Eigen::VectorXd effective_upper(const ConstraintSpec& cons, int n);

/// Euclidean projection onto {D u >= 0, max(k1, u_min) <= u <= k2}.
/// Throws InfeasibleError when neither the lower bound nor a constant is feasible.
PeriodicField project_feasible(const PeriodicField& u_raw, const ConeConstraint& cone, const ConstraintSpec& cons,
                               double u_min = kDefaultUMin);

OptimizationResult minimize(const FunctionalSpec& spec, const ConstraintSpec& cons, const OptimizerConfig& config,
                            const PeriodicField& u_init);

/// NNLS multiplier recovery at u (equality multiplier eliminated by projection).
KKTReport recover_multipliers(const PeriodicField& u, const EvalReport& eval, const ConeConstraint& cone,
                              const ConstraintSpec& cons, const OptimizerConfig& config);
KKTReport recover_multipliers(const OptimizationResult& result, const FunctionalSpec& spec, const ConeConstraint& cone,
                              const ConstraintSpec& cons, const OptimizerConfig& config = {});

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history);

}  // namespace gaugeopt
