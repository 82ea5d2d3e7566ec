#include "gaugeopt/qp.hpp"

#include "gaugeopt/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gaugeopt {

namespace {

using SpRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;

class Constraints {
 public:
  explicit Constraints(const QpProblem& p) : p_(p), m_(static_cast<int>(p.a.rows())), n_(static_cast<int>(p.q.size())) {}

  int count() const { return m_ + 2 * n_; }
  int rows() const { return m_; }
  int vars() const { return n_; }

  bool present(int id) const {
    if (id < m_) return true;
    if (id < m_ + n_) return std::isfinite(p_.lo[id - m_]);
    return std::isfinite(p_.hi[id - m_ - n_]);
  }

  double rhs(int id) const {
    if (id < m_) return p_.b[id];
    if (id < m_ + n_) return p_.lo[id - m_];
    return -p_.hi[id - m_ - n_];
  }

  // a_id . x, given A x precomputed.
  double apply(int id, const Eigen::VectorXd& x, const Eigen::VectorXd& ax) const {
    if (id < m_) return ax[id];
    if (id < m_ + n_) return x[id - m_];
    return -x[id - m_ - n_];
  }

  template <class F>
  void for_each_entry(int id, F&& f) const {
    if (id < m_) {
      for (SpRow::InnerIterator it(p_.a, id); it; ++it) f(static_cast<int>(it.col()), it.value());
    } else if (id < m_ + n_) {
      f(id - m_, 1.0);
    } else {
      f(id - m_ - n_, -1.0);
    }
  }

  Eigen::VectorXd dense_row(int id) const {
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n_);
    for_each_entry(id, [&](int c, double v) { r[c] += v; });
    return r;
  }

 private:
  const QpProblem& p_;
  int m_, n_;
};

// Keeps the subset of `ids` (in order) whose rows are linearly independent.
std::vector<int> independent_subset(const Constraints& c, const std::vector<int>& ids) {
  std::vector<Eigen::VectorXd> basis;
  std::vector<int> kept;
  for (int id : ids) {
    Eigen::VectorXd r = c.dense_row(id);
    const double norm = r.norm();
    for (const auto& q : basis) r -= q.dot(r) * q;
    for (const auto& q : basis) r -= q.dot(r) * q;
    const double res = r.norm();
    if (res > 1e-9 * norm) {
      basis.push_back(r / res);
      kept.push_back(id);
    }
  }
  return kept;
}

bool depends_on(const Constraints& c, const std::vector<int>& work, int id) {
  if (work.empty()) return false;
  Eigen::MatrixXd rows(c.vars(), static_cast<Eigen::Index>(work.size()));
  for (std::size_t w = 0; w < work.size(); ++w) rows.col(static_cast<Eigen::Index>(w)) = c.dense_row(work[w]);
  const Eigen::VectorXd a = c.dense_row(id);
  const Eigen::VectorXd coef = rows.colPivHouseholderQr().solve(a);
  return (rows * coef - a).norm() <= 1e-9 * a.norm();
}

}  // namespace

QpResult solve_qp(const QpProblem& p, const Eigen::VectorXd& x0, const std::vector<int>& warm, int max_iter) {
  const Constraints cons(p);
  const int n = cons.vars();
  if (max_iter < 0) max_iter = 10 * cons.count() + 100;

  Eigen::VectorXd x = x0;
  Eigen::VectorXd ax = p.a * x;
  const double scale = std::max(1.0, x.cwiseAbs().maxCoeff());

  std::vector<int> candidates;
  for (int id : warm)
    if (id >= 0 && id < cons.count() && cons.present(id) &&
        std::abs(cons.apply(id, x, ax) - cons.rhs(id)) <= 1e-12 * scale)
      candidates.push_back(id);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  std::vector<int> work = independent_subset(cons, candidates);

  std::vector<double> row_scale(static_cast<std::size_t>(cons.count()), 1.0);
  for (int id = 0; id < cons.rows(); ++id) {
    double acc = 0.0;
    cons.for_each_entry(id, [&](int, double v) { acc += std::abs(v); });
    row_scale[static_cast<std::size_t>(id)] = acc;
  }

  QpResult out;
  Eigen::VectorXd lambda;
  for (int it = 0;; ++it) {
    if (it >= max_iter) throw SolverError("solve_qp: active-set iteration limit reached", static_cast<double>(it));
    out.iterations = it + 1;

    // Equality-constrained subproblem on the working set:
    //   H x - C' lam = -q,  C x = b_W.
    const int k = static_cast<int>(work.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(p.h.nonZeros()) + 6u * static_cast<std::size_t>(k));
    for (int col = 0; col < p.h.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator itr(p.h, col); itr; ++itr)
        trip.emplace_back(static_cast<int>(itr.row()), static_cast<int>(itr.col()), itr.value());
    Eigen::VectorXd rhs(n + k);
    rhs.head(n) = -p.q;
    for (int w = 0; w < k; ++w) {
      cons.for_each_entry(work[static_cast<std::size_t>(w)], [&](int c, double v) {
        trip.emplace_back(n + w, c, v);
        trip.emplace_back(c, n + w, -v);
      });
      rhs[n + w] = cons.rhs(work[static_cast<std::size_t>(w)]);
    }
    Eigen::SparseMatrix<double> kkt(n + k, n + k);
    kkt.setFromTriplets(trip.begin(), trip.end());
    kkt.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(kkt);
    if (lu.info() != Eigen::Success) throw SolverError("solve_qp: singular KKT system", static_cast<double>(k));
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd target = sol.head(n);
    lambda = sol.tail(k);

    const Eigen::VectorXd step = target - x;
    const double xscale = std::max(1.0, x.cwiseAbs().maxCoeff());
    if (step.cwiseAbs().maxCoeff() <= 1e-12 * xscale) {
      x = target;
      const double lscale = std::max(1.0, k > 0 ? lambda.cwiseAbs().maxCoeff() : 0.0);
      int drop = -1;
      for (int w = 0; w < k; ++w)
        if (lambda[w] < -1e-12 * lscale) {
          drop = w;  // work is sorted, so this is the smallest id
          break;
        }
      if (drop < 0) break;
      work.erase(work.begin() + drop);
      continue;
    }

    const Eigen::VectorXd astep = p.a * step;
    const double step_norm = step.cwiseAbs().maxCoeff();
    double alpha = 1.0;
    int blocking = -1;
    std::vector<int> skip;
    while (true) {
      alpha = 1.0;
      blocking = -1;
      for (int id = 0; id < cons.count(); ++id) {
        if (!cons.present(id) || std::binary_search(work.begin(), work.end(), id) ||
            std::find(skip.begin(), skip.end(), id) != skip.end())
          continue;
        const double rate = cons.apply(id, step, astep);
        if (rate >= -1e-11 * row_scale[static_cast<std::size_t>(id)] * step_norm) continue;
        const double slack = std::max(0.0, cons.apply(id, x, ax) - cons.rhs(id));
        const double ratio = slack / -rate;
        if (ratio < alpha || (blocking < 0 && ratio <= alpha)) {
          alpha = ratio;
          blocking = id;
        }
      }
      // A row dependent on the working set can only block through roundoff.
      if (blocking < 0 || !depends_on(cons, work, blocking)) break;
      skip.push_back(blocking);
    }
    x += alpha * step;
    ax = p.a * x;
    if (blocking >= 0) work.insert(std::upper_bound(work.begin(), work.end(), blocking), blocking);
  }

  out.x = x;
  out.working_set = work;
  out.row_multipliers = Eigen::VectorXd::Zero(cons.rows());
  out.lower_multipliers = Eigen::VectorXd::Zero(n);
  out.upper_multipliers = Eigen::VectorXd::Zero(n);
  for (std::size_t w = 0; w < work.size(); ++w) {
    const int id = work[w];
    const double l = std::max(0.0, lambda[static_cast<Eigen::Index>(w)]);
    if (id < cons.rows()) out.row_multipliers[id] = l;
    else if (id < cons.rows() + n) out.lower_multipliers[id - cons.rows()] = l;
    else out.upper_multipliers[id - cons.rows() - n] = l;
  }
  return out;
}

NnlsResult nnls(const Eigen::MatrixXd& e, const Eigen::VectorXd& f, int max_iter) {
  const Eigen::Index n = e.cols();
  if (max_iter < 0) max_iter = static_cast<int>(3 * n + 10);
  NnlsResult r;
  r.x = Eigen::VectorXd::Zero(n);
  if (n == 0) {
    r.residual_norm = f.norm();
    return r;
  }
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * e.cwiseAbs().colwise().sum().maxCoeff() *
                     static_cast<double>(std::max(e.rows(), n));
  std::vector<bool> passive(static_cast<std::size_t>(n), false);

  const auto solve_passive = [&]() {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd ep(e.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ep.col(static_cast<Eigen::Index>(k)) = e.col(idx[k]);
    const Eigen::VectorXd sp = ep.colPivHouseholderQr().solve(f);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[static_cast<Eigen::Index>(k)];
    return s;
  };

  Eigen::VectorXd w = e.transpose() * (f - e * r.x);
  int outer = 0;
  while (true) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w[j] > tol && (best < 0 || w[j] > w[best])) best = j;
    if (best < 0) break;
    if (++outer > max_iter) throw SolverError("nnls: iteration limit reached", (f - e * r.x).norm());
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner <= n; ++inner) {
      const Eigen::VectorXd s = solve_passive();
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && s[j] <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, r.x[j] / (r.x[j] - s[j]));
        }
      if (feasible) {
        r.x = s;
        break;
      }
      r.x += alpha * (s - r.x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && r.x[j] <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          r.x[j] = 0.0;
        }
    }
    w = e.transpose() * (f - e * r.x);
  }
  r.iterations = outer;
  r.residual_norm = (f - e * r.x).norm();
  return r;
}

}  // namespace gaugeopt
