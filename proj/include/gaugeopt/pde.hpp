#pragma once

// P1 finite elements on Omega_u: Dirichlet energy, first Dirichlet eigenvalue,
// boundary flux traces and shape gradients.

#include "gaugeopt/body.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

namespace gaugeopt {

/// Triangulation of Omega_u whose vertices are fixed linear combinations of
/// anchor points on the curve r = 1 / u(theta), u linearly interpolated
/// between grid nodes. Anchor a sits at angle (a / 2^kAnchorBits) * dtheta.
struct Mesh {
  static constexpr int kAnchorBits = 20;
  using Weights = std::vector<std::pair<long long, double>>;  // (anchor, weight)

  struct BoundaryEdge {
    int a, b;          // vertex indices, counterclockwise
    double theta_mid;  // polar angle of the edge midpoint
  };

  PeriodicField u{Eigen::VectorXd::Ones(8)};
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<BoundaryEdge> boundary_edges;
  std::vector<int> boundary_loop;  // boundary vertices in counterclockwise order
  std::vector<int> boundary_map;   // theta-grid node -> boundary vertex
  std::vector<bool> on_boundary;
  std::vector<Weights> control;    // vertex -> combination of anchor points
  int coarse_sides = 0;
  int levels = 0;

  /// Anchor position and its derivatives with respect to u_j and u_{j+1},
  /// the samples bracketing its angle.
  struct AnchorJet {
    int j;
    Eigen::Vector2d point, d_lo, d_hi;
  };
  AnchorJet anchor(long long a) const;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  double triangle_area(int t) const;
  double area() const;
  double max_edge() const;
};

/// Fan triangulation of a coarse inscribed polygon from its centroid, then
/// uniform red refinement with boundary midpoints placed on the curve at the
/// middle angle. Every theta-grid point becomes a boundary vertex. With
/// levels < 0 the count is the smallest reaching max edge <= target_h.
Mesh mesh_convex(const GaugeBody& body, double target_h, int levels = -1);

/// Number of refinement levels mesh_convex would choose.
int mesh_levels_for(const GaugeBody& body, double target_h);

/// f(x, y) = c0 + cx x + cy y + cr2 (x^2 + y^2).
struct SourceField {
  double c0 = 1.0, cx = 0.0, cy = 0.0, cr2 = 0.0;
  double operator()(const Eigen::Vector2d& p) const { return c0 + cx * p.x() + cy * p.y() + cr2 * p.squaredNorm(); }
  Eigen::Vector2d gradient(const Eigen::Vector2d& p) const {
    return {cx + 2.0 * cr2 * p.x(), cy + 2.0 * cr2 * p.y()};
  }
};

struct FemSolution {
  std::shared_ptr<const Mesh> mesh;
  Eigen::VectorXd nodal_values;
  double energy = 0.0;             // -1/2 int |grad U|^2
  double energy_source_form = 0.0; // -1/2 int U f
  /// (d_n U)^2 at each theta-grid boundary vertex, from the consistent flux.
  Eigen::VectorXd boundary_grad_sq;
};

struct EigenPair {
  double lambda = 0.0;
  FemSolution eigenfunction;  // int U^2 = 1, U > 0 inside
  int iterations = 0;
  double relative_change = 0.0;
};

struct EigenOptions {
  double tol = 1e-10;
  int max_iter = 500;
};

FemSolution dirichlet_energy(const GaugeBody& body, const SourceField& f, double target_h, int levels = -1);
FemSolution dirichlet_energy(std::shared_ptr<const Mesh> mesh, const SourceField& f);

EigenPair lambda1(const GaugeBody& body, double target_h, int levels = -1, const EigenOptions& opts = {});
EigenPair lambda1(std::shared_ptr<const Mesh> mesh, const EigenOptions& opts = {});

/// Boundary-integral shape gradients g_j = c |grad U|^2_j / u_j^3, with c = 1/2
/// for the energy and c = 1 for lambda_1.
PeriodicField energy_shape_gradient(const GaugeBody& body, const SourceField& f, double target_h, int levels = -1);
PeriodicField lambda1_shape_gradient(const GaugeBody& body, double target_h, int levels = -1);
PeriodicField hadamard_gradient(const FemSolution& sol, double factor);

/// Exact derivatives of the discrete energy / eigenvalue with respect to the
/// samples u_j, through the vertex positions of the mesh.
PeriodicField energy_discrete_gradient(const FemSolution& sol, const SourceField& f);
PeriodicField lambda1_discrete_gradient(const EigenPair& pair);

/// OFF-style text: header, vertex count and triangle count, "x y z" rows,
/// "3 a b c" rows. z carries nodal values when given.
void write_off(std::ostream& os, const Mesh& mesh, const Eigen::VectorXd* values = nullptr);

}  // namespace gaugeopt
