#include "gaugeopt/optimize.hpp"

#include "gaugeopt/errors.hpp"
#include "gaugeopt/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>

namespace gaugeopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// M = dtheta (I + sigma L), L the periodic second difference -d^2/dtheta^2.
Eigen::SparseMatrix<double> metric(int n, double sigma) {
  const double h = 2.0 * std::numbers::pi / n;
  const double w = sigma / (h * h);
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < n; ++j) {
    t.emplace_back(j, j, h * (1.0 + 2.0 * w));
    t.emplace_back(j, (j + 1) % n, -h * w);
    t.emplace_back(j, (j + n - 1) % n, -h * w);
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

struct Point {
  PeriodicField u;
  EvalReport eval;
  ConstraintEval cons;
  Eigen::VectorXd g;  // Euclidean gradient of j
  Eigen::VectorXd n;  // Euclidean gradient of m (zero without equality)
};

Point make_point(const FunctionalSpec& spec, const ConstraintSpec& cons, PeriodicField u) {
  GaugeBody body(u);
  Point p{u, evaluate(spec, body), constraint_eval(cons, body), {}, {}};
  const double h = u.spacing();
  p.g = h * p.eval.gradient.values();
  p.n = h * p.cons.gradient.values();
  return p;
}

bool feasible(const PeriodicField& u, const ConeConstraint& cone, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  const Eigen::VectorXd du = cone.d * u.values();
  if (du.minCoeff() < -cone.tol_cone) return false;
  for (int j = 0; j < u.size(); ++j)
    if (u[j] < lo[j] || u[j] > hi[j]) return false;
  return true;
}

}  // namespace

std::string to_string(OptStatus s) {
  switch (s) {
    case OptStatus::Converged: return "converged";
    case OptStatus::MaxIterations: return "max_iterations";
    case OptStatus::LineSearchFailure: return "line_search_failure";
  }
  return "?";
}

ConeConstraint cone_matrix(int n, double tol_cone) {
  if (n < 8 || n % 2 != 0) throw std::invalid_argument("cone_matrix: N must be even and >= 8");
  const double h = 2.0 * std::numbers::pi / n;
  std::vector<Eigen::Triplet<double>> t;
  for (int j = 0; j < n; ++j) {
    t.emplace_back(j, (j + n - 1) % n, 1.0 / h);
    t.emplace_back(j, j, -2.0 * std::cos(h) / h);
    t.emplace_back(j, (j + 1) % n, 1.0 / h);
  }
  ConeConstraint c;
  c.d.resize(n, n);
  c.d.setFromTriplets(t.begin(), t.end());
  c.tol_cone = tol_cone;
  return c;
}

Eigen::VectorXd effective_lower(const ConstraintSpec& cons, int n, double u_min) {
  Eigen::VectorXd lo = Eigen::VectorXd::Constant(n, u_min);
  if (cons.lower) lo = lo.cwiseMax(cons.lower->values());
  return lo;
}

Eigen::VectorXd effective_upper(const ConstraintSpec& cons, int n) {
  return cons.upper ? cons.upper->values() : Eigen::VectorXd::Constant(n, kInf);
}

PeriodicField project_feasible(const PeriodicField& u_raw, const ConeConstraint& cone, const ConstraintSpec& cons,
                               double u_min) {
  const int n = u_raw.size();
  if (cone.size() != n) throw std::invalid_argument("project_feasible: cone size mismatch");
  cons.validate(n);
  const Eigen::VectorXd lo = effective_lower(cons, n, u_min);
  const Eigen::VectorXd hi = effective_upper(cons, n);
  if ((lo.array() > hi.array()).any()) throw InfeasibleError("project_feasible: max(k1, u_min) exceeds k2");
  if (feasible(u_raw, cone, lo, hi)) return u_raw;

  Eigen::VectorXd start;
  if ((cone.d * lo).minCoeff() >= -cone.tol_cone) {
    start = lo;
  } else if (lo.maxCoeff() <= hi.minCoeff()) {
    start = Eigen::VectorXd::Constant(n, lo.maxCoeff());
  } else {
    throw InfeasibleError("project_feasible: neither k1 nor any constant satisfies the cone and box constraints");
  }

  QpProblem qp;
  qp.h.resize(n, n);
  qp.h.setIdentity();
  qp.q = start - u_raw.values();
  qp.a = cone.d;
  qp.b = -(cone.d * start);
  qp.lo = lo - start;
  qp.hi = hi - start;
  const auto res = solve_qp(qp, Eigen::VectorXd::Zero(n));
  return PeriodicField(start + res.x);
}

KKTReport recover_multipliers(const PeriodicField& u, const EvalReport& eval, const ConeConstraint& cone,
                              const ConstraintSpec& cons, const OptimizerConfig& config) {
  const int n = u.size();
  const double h = u.spacing();
  GaugeBody body(u, 0.0);
  const ConstraintEval ce = constraint_eval(cons, body);
  const Eigen::VectorXd g = h * eval.gradient.values();
  const Eigen::VectorXd nm = h * ce.gradient.values();
  const Eigen::VectorXd lo = effective_lower(cons, n, config.u_min);
  const Eigen::VectorXd hi = effective_upper(cons, n);
  const Eigen::VectorXd du = cone.d * u.values();

  KKTReport r;
  r.has_equality = cons.equality.has_value();
  r.cone_active.assign(static_cast<std::size_t>(n), false);
  struct Column {
    int kind;  // 0 cone, 1 lower, 2 upper
    int node;
  };
  std::vector<Column> cols;
  for (int j = 0; j < n; ++j)
    if (du[j] <= config.active_tol) {
      cols.push_back({0, j});
      r.cone_active[static_cast<std::size_t>(j)] = true;
      ++r.active_cone_rows;
    }
  for (int j = 0; j < n; ++j) {
    const double tol = config.active_tol * std::max(1.0, std::abs(u[j]));
    if (u[j] - lo[j] <= tol) cols.push_back({1, j});
    if (std::isfinite(hi[j]) && hi[j] - u[j] <= tol) cols.push_back({2, j});
    if (u[j] - lo[j] <= tol || (std::isfinite(hi[j]) && hi[j] - u[j] <= tol)) ++r.active_box_nodes;
  }

  const Eigen::MatrixXd dd = Eigen::MatrixXd(cone.d.transpose());
  Eigen::MatrixXd b(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    b.col(col).setZero();
    if (cols[c].kind == 0) b.col(col) = dd.col(cols[c].node);
    else b(cols[c].node, col) = cols[c].kind == 1 ? 1.0 : -1.0;
  }

  Eigen::MatrixXd e = b;
  Eigen::VectorXd f = g;
  const double nn = nm.squaredNorm();
  if (r.has_equality && nn > 0.0) {
    e -= nm * (nm.transpose() * b) / nn;
    f -= nm * (nm.dot(g) / nn);
  }
  const NnlsResult sol = nnls(e, f);
  const Eigen::VectorXd bx = b * sol.x;
  r.mu_eq = (r.has_equality && nn > 0.0) ? nm.dot(bx - g) / nn : 0.0;

  r.eta = Eigen::VectorXd::Zero(n);
  r.box_mult = Eigen::VectorXd::Zero(n);
  r.complementarity_residual = 0.0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const double x = sol.x[static_cast<Eigen::Index>(c)];
    const int j = cols[c].node;
    if (cols[c].kind == 0) {
      r.eta[j] = x;
      r.complementarity_residual += x * std::abs(du[j]);
    } else if (cols[c].kind == 1) {
      r.box_mult[j] += x;
      r.complementarity_residual += x * std::abs(u[j] - lo[j]);
    } else {
      r.box_mult[j] -= x;
      r.complementarity_residual += x * std::abs(hi[j] - u[j]);
    }
  }

  const Eigen::VectorXd resid = g + r.mu_eq * nm - bx;
  double denom = std::max({g.norm(), std::abs(r.mu_eq) * nm.norm(), bx.norm()});
  double term_sum = 0.0;
  for (const auto& tg : eval.term_gradients) term_sum += h * tg.values().norm();
  denom = std::max({denom, term_sum, std::numeric_limits<double>::min()});
  r.stationarity_residual = resid.norm() / denom;

  r.inside_set.assign(static_cast<std::size_t>(n), true);
  for (int j = 0; j < n; ++j) {
    const double k1 = cons.lower ? (*cons.lower)[j] : -kInf;
    const double k2 = cons.upper ? (*cons.upper)[j] : kInf;
    r.inside_set[static_cast<std::size_t>(j)] = (k1 + config.inside_delta < u[j]) && (u[j] < k2 - config.inside_delta);
  }
  return r;
}

KKTReport recover_multipliers(const OptimizationResult& result, const FunctionalSpec& spec, const ConeConstraint& cone,
                              const ConstraintSpec& cons, const OptimizerConfig& config) {
  FunctionalSpec s = spec;
  if (result.mesh_levels >= 0) s.mesh_levels = result.mesh_levels;
  const GaugeBody body(result.u_star);
  return recover_multipliers(result.u_star, evaluate(s, body), cone, cons, config);
}

OptimizationResult minimize(const FunctionalSpec& spec_in, const ConstraintSpec& cons, const OptimizerConfig& config,
                            const PeriodicField& u_init) {
  const int n = u_init.size();
  cons.validate(n);
  const ConeConstraint cone = cone_matrix(n, config.tol_cone);
  const Eigen::VectorXd lo = effective_lower(cons, n, config.u_min);
  const Eigen::VectorXd hi = effective_upper(cons, n);
  const Eigen::SparseMatrix<double> m = metric(n, config.sigma);
  const bool has_eq = cons.equality.has_value();

  PeriodicField u0 = project_feasible(u_init, cone, cons, config.u_min);
  const FunctionalSpec spec = spec_in.with_fixed_mesh(GaugeBody(u0));

  OptimizationResult out;
  out.mesh_levels = spec.mesh_levels;
  Point cur = make_point(spec, cons, u0);

  double mu = 0.0, rho = has_eq ? config.rho0 : 0.0;
  if (has_eq && cur.n.squaredNorm() > 0.0) mu = -cur.n.dot(cur.g) / cur.n.squaredNorm();
  double omega = 1.0 / std::max(config.rho0, 1.0);
  const double omega_final = 1e-2 * config.tol_kkt;
  double last_c = std::abs(cur.cons.value);
  double t = config.step0;
  std::vector<int> warm;
  std::optional<KKTReport> kkt;

  const auto merit = [&](const Point& p) { return p.eval.value + mu * p.cons.value + 0.5 * rho * p.cons.value * p.cons.value; };

  const auto direction = [&](const Point& p, const Eigen::VectorXd& gl, double step) {
    QpProblem qp;
    qp.h = m / step;
    if (rho > 0.0) {
      // Exact curvature of the penalty term rho/2 c^2 along grad m.
      const Eigen::MatrixXd nn = rho * p.n * p.n.transpose();
      qp.h += nn.sparseView();
    }
    qp.q = gl;
    qp.a = cone.d;
    qp.b = -(cone.d * p.u.values());
    qp.lo = lo - p.u.values();
    qp.hi = hi - p.u.values();
    return solve_qp(qp, Eigen::VectorXd::Zero(n), warm);
  };
  const auto proximity = [&](const Point& p, const Eigen::VectorXd& d, double step) {
    const double scale = std::max({p.g.norm(), std::abs(mu + rho * p.cons.value) * p.n.norm(),
                                   std::numeric_limits<double>::min()});
    return ((m * d) / step + rho * p.n * p.n.dot(d)).norm() / scale;
  };

  out.status = OptStatus::MaxIterations;
  int it = 0;
  for (; it < config.max_iter; ++it) {
    const Eigen::VectorXd gl = cur.g + (mu + rho * cur.cons.value) * cur.n;
    const double phi = merit(cur);
    QpResult dir = direction(cur, gl, t);
    double prox = proximity(cur, dir.x, t);
    if (t > 1.0 && prox <= std::max(omega, omega_final)) prox = proximity(cur, direction(cur, gl, 1.0).x, 1.0);
    warm = dir.working_set;

    HistoryRow row;
    row.iter = it;
    row.objective = cur.eval.value;
    row.merit = phi;
    row.eq_residual = cur.cons.value;
    row.stationarity = prox;
    row.metric_step = t;
    row.active = static_cast<int>(dir.working_set.size());

    if (has_eq && prox <= omega && std::abs(cur.cons.value) > config.tol_eq) {
      mu += rho * cur.cons.value;
      if (std::abs(cur.cons.value) > 0.25 * last_c) rho *= 10.0;
      last_c = std::abs(cur.cons.value);
      omega = std::max(0.1 * omega, omega_final);
      out.history.push_back(row);
      continue;
    }
    if (prox <= omega_final && (!has_eq || std::abs(cur.cons.value) <= config.tol_eq)) {
      kkt = recover_multipliers(cur.u, cur.eval, cone, cons, config);
      out.history.push_back(row);
      if (kkt->stationarity_residual <= config.tol_kkt && kkt->complementarity_residual <= config.tol_comp) {
        out.status = OptStatus::Converged;
        break;
      }
    }

    // Backtracking along the scaled projected-gradient direction.
    double slope = gl.dot(dir.x);
    double alpha = 1.0;
    std::optional<Point> next;
    for (int shrink = 0; shrink < 6 && !next; ++shrink) {
      alpha = 1.0;
      while (alpha * dir.x.cwiseAbs().maxCoeff() >= config.step_min) {
        PeriodicField trial(cur.u.values() + alpha * dir.x);
        try {
          Point p = make_point(spec, cons, std::move(trial));
          if (merit(p) <= phi + config.armijo * alpha * slope) {
            next = std::move(p);
            break;
          }
        } catch (const DomainError&) {
        }
        alpha *= 0.5;
      }
      if (!next) {
        t *= 0.1;
        dir = direction(cur, gl, t);
        slope = gl.dot(dir.x);
      }
    }
    if (!next) {
      out.status = OptStatus::LineSearchFailure;
      out.message = "no sufficient decrease along the projected direction";
      out.history.push_back(row);
      break;
    }
    row.step = alpha;
    if (out.history.empty() || out.history.back().iter != it) out.history.push_back(row);
    // Barzilai-Borwein step in the metric; the penalty curvature is already in H.
    const Eigen::VectorXd s = next->u.values() - cur.u.values();
    const Eigen::VectorXd gl_next = next->g + (mu + rho * next->cons.value) * next->n;
    const double sy = s.dot(gl_next - gl) - rho * std::pow(next->n.dot(s), 2);
    const double sms = s.dot(m * s);
    t = sy > 0.0 ? sms / sy : 2.0 * t;
    t = std::clamp(t, 1e-8, 1e3 * config.step0);
    cur = std::move(*next);
    kkt.reset();
  }

  if (!kkt) kkt = recover_multipliers(cur.u, cur.eval, cone, cons, config);
  out.u_star = cur.u;
  out.objective = cur.eval.value;
  out.iterations = it;
  out.kkt = *kkt;
  out.cone_violation = std::max(0.0, -(cone.d * cur.u.values()).minCoeff());
  out.box_violation = cur.cons.box_violation;
  out.eq_residual = cur.cons.value;
  if (out.status != OptStatus::Converged && out.kkt.stationarity_residual <= config.tol_kkt &&
      out.kkt.complementarity_residual <= config.tol_comp && std::abs(out.eq_residual) <= config.tol_eq) {
    out.status = OptStatus::Converged;
  }
  if (out.status == OptStatus::MaxIterations) out.message = "iteration limit reached";
  return out;
}

void write_history_csv(std::ostream& os, const std::vector<HistoryRow>& history) {
  os.precision(12);
  os << "iter,objective,merit,eq_residual,stationarity,step,metric_step,active\n";
  for (const auto& r : history)
    os << r.iter << ',' << r.objective << ',' << r.merit << ',' << r.eq_residual << ',' << r.stationarity << ','
       << r.step << ',' << r.metric_step << ',' << r.active << '\n';
}

}  // namespace gaugeopt
