#include "gaugeopt/errors.hpp"
#include "gaugeopt/pde.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <string>

namespace gaugeopt {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

Eigen::Vector2d rot(const Eigen::Vector2d& p) { return {-p.y(), p.x()}; }     // J
Eigen::Vector2d rot_t(const Eigen::Vector2d& p) { return {p.y(), -p.x()}; }   // J^T

struct Element {
  std::array<Eigen::Vector2d, 3> p;
  double area;
  std::array<Eigen::Vector2d, 3> grad;  // gradients of the hat functions

  Element(const Mesh& mesh, const std::array<int, 3>& t) {
    for (int k = 0; k < 3; ++k) p[static_cast<std::size_t>(k)] = mesh.vertices[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])];
    area = 0.5 * ((p[1] - p[0]).x() * (p[2] - p[0]).y() - (p[1] - p[0]).y() * (p[2] - p[0]).x());
    for (int k = 0; k < 3; ++k) {
      const auto& a = p[static_cast<std::size_t>((k + 1) % 3)];
      const auto& b = p[static_cast<std::size_t>((k + 2) % 3)];
      grad[static_cast<std::size_t>(k)] = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) / (2.0 * area);
    }
  }

  Eigen::Vector2d centroid() const { return (p[0] + p[1] + p[2]) / 3.0; }
  // dA / dp_k
  Eigen::Vector2d area_derivative(int k) const {
    return 0.5 * rot_t(p[static_cast<std::size_t>((k + 1) % 3)] - p[static_cast<std::size_t>((k + 2) % 3)]);
  }
};

struct System {
  SpMat stiffness, mass;  // full vertex numbering
  Eigen::VectorXd load;
  std::vector<int> dof;   // vertex -> interior index or -1
  std::vector<int> vertex_of_dof;
  SpMat k_ii, m_ii;
};

System assemble(const Mesh& mesh, const SourceField* f) {
  const int nv = mesh.num_vertices();
  System s;
  s.dof.assign(static_cast<std::size_t>(nv), -1);
  for (int v = 0; v < nv; ++v)
    if (!mesh.on_boundary[static_cast<std::size_t>(v)]) {
      s.dof[static_cast<std::size_t>(v)] = static_cast<int>(s.vertex_of_dof.size());
      s.vertex_of_dof.push_back(v);
    }
  std::vector<Triplet> kt, mt;
  kt.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 9);
  mt.reserve(kt.capacity());
  s.load = Eigen::VectorXd::Zero(nv);
  for (const auto& t : mesh.triangles) {
    const Element e(mesh, t);
    const double fc = f ? (*f)(e.centroid()) : 0.0;
    for (int a = 0; a < 3; ++a) {
      const int va = t[static_cast<std::size_t>(a)];
      s.load[va] += fc * e.area / 3.0;
      for (int b = 0; b < 3; ++b) {
        const int vb = t[static_cast<std::size_t>(b)];
        kt.emplace_back(va, vb, e.area * e.grad[static_cast<std::size_t>(a)].dot(e.grad[static_cast<std::size_t>(b)]));
        mt.emplace_back(va, vb, e.area / 12.0 * (a == b ? 2.0 : 1.0));
      }
    }
  }
  s.stiffness.resize(nv, nv);
  s.stiffness.setFromTriplets(kt.begin(), kt.end());
  s.mass.resize(nv, nv);
  s.mass.setFromTriplets(mt.begin(), mt.end());

  std::vector<Triplet> ki, mi;
  const auto restrict = [&](const SpMat& full, std::vector<Triplet>& out) {
    for (int c = 0; c < full.outerSize(); ++c)
      for (SpMat::InnerIterator it(full, c); it; ++it) {
        const int r = s.dof[static_cast<std::size_t>(it.row())], cc = s.dof[static_cast<std::size_t>(it.col())];
        if (r >= 0 && cc >= 0) out.emplace_back(r, cc, it.value());
      }
  };
  restrict(s.stiffness, ki);
  restrict(s.mass, mi);
  const int ni = static_cast<int>(s.vertex_of_dof.size());
  s.k_ii.resize(ni, ni);
  s.k_ii.setFromTriplets(ki.begin(), ki.end());
  s.m_ii.resize(ni, ni);
  s.m_ii.setFromTriplets(mi.begin(), mi.end());
  return s;
}

Eigen::VectorXd scatter(const System& s, const Eigen::VectorXd& interior, int nv) {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(nv);
  for (std::size_t d = 0; d < s.vertex_of_dof.size(); ++d) full[s.vertex_of_dof[d]] = interior[static_cast<Eigen::Index>(d)];
  return full;
}

// Squared normal flux at the theta-grid vertices from the weak residual.
// Flux averaged against the theta-grid hat function of each node. Boundary
// vertices between grid nodes sit where the interpolated curve has kinks,
// so a single vertex value is not representative once levels exceed the snap level.
Eigen::VectorXd boundary_flux_sq(const Mesh& mesh, const Eigen::VectorXd& residual) {
  Eigen::VectorXd lumped = Eigen::VectorXd::Zero(mesh.num_vertices());
  for (const auto& e : mesh.boundary_edges) {
    const double len = (mesh.vertices[static_cast<std::size_t>(e.a)] - mesh.vertices[static_cast<std::size_t>(e.b)]).norm();
    lumped[e.a] += 0.5 * len;
    lumped[e.b] += 0.5 * len;
  }
  const int n = static_cast<int>(mesh.boundary_map.size());
  const int m = static_cast<int>(mesh.boundary_loop.size());
  std::vector<int> pos(static_cast<std::size_t>(mesh.num_vertices()), -1);
  for (int i = 0; i < m; ++i) pos[static_cast<std::size_t>(mesh.boundary_loop[static_cast<std::size_t>(i)])] = i;
  const double dtheta = mesh.u.spacing();
  Eigen::VectorXd out(n);
  for (int j = 0; j < n; ++j) {
    const int center = mesh.boundary_map[static_cast<std::size_t>(j)];
    const int p0 = pos[static_cast<std::size_t>(mesh.boundary_map[static_cast<std::size_t>((j + n - 1) % n)])];
    const int p1 = pos[static_cast<std::size_t>(mesh.boundary_map[static_cast<std::size_t>((j + 1) % n)])];
    double num = 0.0, den = 0.0;
    for (int i = (p0 + 1) % m; i != p1; i = (i + 1) % m) {
      const int v = mesh.boundary_loop[static_cast<std::size_t>(i)];
      double w = 1.0;
      if (v != center) {
        const auto& x = mesh.vertices[static_cast<std::size_t>(v)];
        const double off = std::remainder(std::atan2(x.y(), x.x()) - mesh.u.angle(j), 2.0 * std::numbers::pi);
        w = std::max(0.0, 1.0 - std::abs(off) / dtheta);
      }
      num += w * residual[v];
      den += w * lumped[v];
    }
    const double flux = num / den;
    out[j] = flux * flux;
  }
  return out;
}

void check_factor(const Eigen::SimplicialLDLT<SpMat>& solver) {
  if (solver.info() != Eigen::Success) throw SolverError("stiffness factorization failed", 0.0);
}

// Vertex forces -> derivative with respect to u_j, returned as an L2 gradient.
PeriodicField pull_back(const Mesh& mesh, const std::vector<Eigen::Vector2d>& force) {
  const auto& u = mesh.u;
  const int n = u.size();
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const auto& fv = force[static_cast<std::size_t>(v)];
    if (fv.isZero(0.0)) continue;
    for (const auto& [a, w] : mesh.control[static_cast<std::size_t>(v)]) {
      const auto jet = mesh.anchor(a);
      g[jet.j] += w * fv.dot(jet.d_lo);
      g[(jet.j + 1) % n] += w * fv.dot(jet.d_hi);
    }
  }
  return PeriodicField(g / u.spacing());
}

}  // namespace

FemSolution dirichlet_energy(std::shared_ptr<const Mesh> mesh, const SourceField& f) {
  const System s = assemble(*mesh, &f);
  Eigen::SimplicialLDLT<SpMat> solver(s.k_ii);
  check_factor(solver);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(s.vertex_of_dof.size()));
  for (std::size_t d = 0; d < s.vertex_of_dof.size(); ++d) rhs[static_cast<Eigen::Index>(d)] = s.load[s.vertex_of_dof[d]];
  const Eigen::VectorXd ui = solver.solve(rhs);

  FemSolution sol;
  sol.nodal_values = scatter(s, ui, mesh->num_vertices());
  const Eigen::VectorXd ku = s.stiffness * sol.nodal_values;
  sol.energy = -0.5 * sol.nodal_values.dot(ku);
  sol.energy_source_form = -0.5 * s.load.dot(sol.nodal_values);
  sol.boundary_grad_sq = boundary_flux_sq(*mesh, ku - s.load);
  sol.mesh = std::move(mesh);
  return sol;
}

FemSolution dirichlet_energy(const GaugeBody& body, const SourceField& f, double target_h, int levels) {
  return dirichlet_energy(std::make_shared<const Mesh>(mesh_convex(body, target_h, levels)), f);
}

EigenPair lambda1(std::shared_ptr<const Mesh> mesh, const EigenOptions& opts) {
  const System s = assemble(*mesh, nullptr);
  Eigen::SimplicialLDLT<SpMat> solver(s.k_ii);
  check_factor(solver);

  Eigen::VectorXd x = Eigen::VectorXd::Ones(s.k_ii.rows());
  x /= std::sqrt(x.dot(s.m_ii * x));
  double lambda = x.dot(s.k_ii * x);
  double change = 1.0;
  int it = 0;
  // Iterate past the requested tolerance toward round-off so that finite
  // differences of lambda stay smooth.
  const double target = std::min(opts.tol, 1e-13);
  while (it < opts.max_iter && change > target) {
    Eigen::VectorXd y = solver.solve(s.m_ii * x);
    const double norm = std::sqrt(y.dot(s.m_ii * y));
    y /= norm;
    const double next = y.dot(s.k_ii * y);
    change = std::abs(next - lambda) / std::abs(next);
    lambda = next;
    x = std::move(y);
    ++it;
  }
  if (change > opts.tol) throw SolverError("lambda1: inverse iteration did not converge", change);
  if (x.sum() < 0) x = -x;

  EigenPair pair;
  pair.lambda = lambda;
  pair.iterations = it;
  pair.relative_change = change;
  auto& sol = pair.eigenfunction;
  sol.nodal_values = scatter(s, x, mesh->num_vertices());
  const Eigen::VectorXd ku = s.stiffness * sol.nodal_values;
  sol.energy = -0.5 * sol.nodal_values.dot(ku);
  sol.energy_source_form = sol.energy;
  sol.boundary_grad_sq = boundary_flux_sq(*mesh, ku - lambda * (s.mass * sol.nodal_values));
  sol.mesh = std::move(mesh);
  return pair;
}

EigenPair lambda1(const GaugeBody& body, double target_h, int levels, const EigenOptions& opts) {
  return lambda1(std::make_shared<const Mesh>(mesh_convex(body, target_h, levels)), opts);
}

PeriodicField hadamard_gradient(const FemSolution& sol, double factor) {
  const auto& u = sol.mesh->u.values();
  Eigen::VectorXd g = factor * sol.boundary_grad_sq.array() / u.array().cube();
  return PeriodicField(std::move(g));
}

PeriodicField energy_shape_gradient(const GaugeBody& body, const SourceField& f, double target_h, int levels) {
  return hadamard_gradient(dirichlet_energy(body, f, target_h, levels), 0.5);
}

PeriodicField lambda1_shape_gradient(const GaugeBody& body, double target_h, int levels) {
  return hadamard_gradient(lambda1(body, target_h, levels).eigenfunction, 1.0);
}

PeriodicField energy_discrete_gradient(const FemSolution& sol, const SourceField& f) {
  const Mesh& mesh = *sol.mesh;
  const auto& uv = sol.nodal_values;
  std::vector<Eigen::Vector2d> force(static_cast<std::size_t>(mesh.num_vertices()), Eigen::Vector2d::Zero());
  for (const auto& t : mesh.triangles) {
    const Element e(mesh, t);
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    std::array<double, 3> c{};
    double sum = 0.0;
    for (int k = 0; k < 3; ++k) {
      c[static_cast<std::size_t>(k)] = uv[t[static_cast<std::size_t>((k + 1) % 3)]] - uv[t[static_cast<std::size_t>((k + 2) % 3)]];
      w += rot(e.p[static_cast<std::size_t>(k)]) * c[static_cast<std::size_t>(k)];
      sum += uv[t[static_cast<std::size_t>(k)]];
    }
    if (w.isZero(0.0) && sum == 0.0) continue;
    const double a = e.area, w2 = w.squaredNorm();
    const Eigen::Vector2d cen = e.centroid();
    const double fc = f(cen);
    const Eigen::Vector2d gf = f.gradient(cen);
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d da = e.area_derivative(k);
      const Eigen::Vector2d dstiff = c[static_cast<std::size_t>(k)] * rot_t(w) / (2.0 * a) - w2 / (4.0 * a * a) * da;
      const Eigen::Vector2d dload = sum / 3.0 * (fc * da + a * gf / 3.0);
      force[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] += 0.5 * dstiff - dload;
    }
  }
  return pull_back(mesh, force);
}

PeriodicField lambda1_discrete_gradient(const EigenPair& pair) {
  const auto& sol = pair.eigenfunction;
  const Mesh& mesh = *sol.mesh;
  const auto& uv = sol.nodal_values;
  std::vector<Eigen::Vector2d> force(static_cast<std::size_t>(mesh.num_vertices()), Eigen::Vector2d::Zero());
  for (const auto& t : mesh.triangles) {
    const Element e(mesh, t);
    Eigen::Vector2d w = Eigen::Vector2d::Zero();
    std::array<double, 3> c{};
    double sum = 0.0, sumsq = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double uk = uv[t[static_cast<std::size_t>(k)]];
      c[static_cast<std::size_t>(k)] = uv[t[static_cast<std::size_t>((k + 1) % 3)]] - uv[t[static_cast<std::size_t>((k + 2) % 3)]];
      w += rot(e.p[static_cast<std::size_t>(k)]) * c[static_cast<std::size_t>(k)];
      sum += uk;
      sumsq += uk * uk;
    }
    if (sumsq == 0.0) continue;
    const double a = e.area, w2 = w.squaredNorm();
    const double mass_factor = (sumsq + sum * sum) / 12.0;
    for (int k = 0; k < 3; ++k) {
      const Eigen::Vector2d da = e.area_derivative(k);
      const Eigen::Vector2d dstiff = c[static_cast<std::size_t>(k)] * rot_t(w) / (2.0 * a) - w2 / (4.0 * a * a) * da;
      force[static_cast<std::size_t>(t[static_cast<std::size_t>(k)])] += dstiff - pair.lambda * mass_factor * da;
    }
  }
  return pull_back(mesh, force);
}

}  // namespace gaugeopt
