#pragma once

// Convex bodies through their gauge u (boundary at r = 1/u(theta)) or their
// support function h, with area/perimeter and their derivatives.

#include "gaugeopt/periodic.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace gaugeopt {

inline constexpr double kDefaultUMin = 1e-6;

/// Gauge function of a star-shaped body around the origin. Construction only
/// checks positivity; convexity is reported by convexity_violation().
class GaugeBody {
 public:
  explicit GaugeBody(PeriodicField u, double u_min = kDefaultUMin);

  const PeriodicField& u() const { return u_; }
  int size() const { return u_.size(); }
  double spacing() const { return u_.spacing(); }

  /// Boundary point e^{i theta_j} / u_j.
  Eigen::Vector2d boundary_point(int j) const;

 private:
  PeriodicField u_;
};

/// max(0, -min_j m_j) for the node masses of u'' + u.
double convexity_violation(const PeriodicField& u);

class SupportBody {
 public:
  explicit SupportBody(PeriodicField h);
  const PeriodicField& h() const { return h_; }

 private:
  PeriodicField h_;
};

/// Counterclockwise convex polygon with the origin strictly inside.
class PolygonBody {
 public:
  explicit PolygonBody(std::vector<Eigen::Vector2d> vertices);

  const std::vector<Eigen::Vector2d>& vertices() const { return vertices_; }
  int size() const { return static_cast<int>(vertices_.size()); }
  double shoelace_area() const;

  static PolygonBody regular(int k, double circumradius, double phase = 0.0);

 private:
  std::vector<Eigen::Vector2d> vertices_;
};

double area(const GaugeBody& body);
/// Midpoint rule on the staggered grid theta_{j+1/2}, with u there the average of
/// its neighbours and u' the forward difference. The staggering keeps the
/// alternating mode (-1)^j visible to the quadrature.
double perimeter(const GaugeBody& body);

/// Nodal L2 gradients: dJ(u)[v] = dtheta * sum_j g_j v_j.
PeriodicField area_gradient(const GaugeBody& body);
PeriodicField perimeter_gradient(const GaugeBody& body);

/// Second derivatives a''(u)(v, v) and p''(u)(v, v) of the sampled functionals.
double area_hessian_form(const GaugeBody& body, const PeriodicField& v);
double perimeter_hessian_form(const GaugeBody& body, const PeriodicField& v);

struct SupportFunctionals {
  double area;
  double perimeter;
};

/// |Omega| = 1/2 int (h^2 - h'^2), P = int h.
SupportFunctionals support_functionals(const SupportBody& body);

/// h(theta) = max_j cos(theta - theta_j) / u_j over the sampled boundary.
SupportBody gauge_to_support(const GaugeBody& body);

/// The polar body has gauge h and support function u.
GaugeBody polar(const SupportBody& body);

/// Vertices at the intersections of edge lines fitted between consecutive atoms.
PolygonBody gauge_to_polygon(const GaugeBody& body, const CurvatureMeasure& atoms);

/// u(theta) = max_k n_k . e^{i theta} where n_k . x = 1 on edge k.
GaugeBody polygon_to_gauge(const PolygonBody& poly, int n);

/// Gauge of [-a, a]^2, i.e. max(|cos|, |sin|) / a.
PeriodicField square_gauge(int n, double half_side = 1.0);

/// Polygon CSV: one "x,y" line per vertex, counterclockwise.
void write_polygon_csv(std::ostream& os, const PolygonBody& poly);
PolygonBody read_polygon_csv(std::istream& is);

}  // namespace gaugeopt
