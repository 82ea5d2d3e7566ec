#include "gaugeopt/body.hpp"

#include "gaugeopt/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

namespace gaugeopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

Eigen::Vector2d direction(double theta) { return {std::cos(theta), std::sin(theta)}; }

// Staggered samples at theta_{j+1/2}: midpoint value and forward difference.
double mid_value(const PeriodicField& f, int j) { return 0.5 * (f[j] + f[j + 1]); }
double forward_diff(const PeriodicField& f, int j) { return (f[j + 1] - f[j]) / f.spacing(); }

// Perimeter integrand G(u, q) = sqrt(u^2 + q^2) / u^2 and its partial derivatives.
struct PerimeterIntegrand {
  double g, gu, gq, guu, guq, gqq;

  PerimeterIntegrand(double u, double q) {
    const double s = std::sqrt(u * u + q * q);
    const double u2 = u * u, u3 = u2 * u;
    g = s / u2;
    gu = 1.0 / (u * s) - 2.0 * s / u3;
    gq = q / (u2 * s);
    guu = -(s * s + u2) / (u2 * s * s * s) - 2.0 / (u2 * s) + 6.0 * s / (u3 * u);
    guq = -q / (u * s * s * s) - 2.0 * q / (u3 * s);
    gqq = 1.0 / (s * s * s);
  }
};

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw DomainError(std::string(what) + ": non-finite result (u nearly vanishes)");
}

}  // namespace

GaugeBody::GaugeBody(PeriodicField u, double u_min) : u_(std::move(u)) {
  if (u_.min() < u_min)
    throw DomainError("GaugeBody: min u = " + std::to_string(u_.min()) + " below u_min = " + std::to_string(u_min));
}

Eigen::Vector2d GaugeBody::boundary_point(int j) const { return direction(u_.angle(u_.wrap(j))) / u_[j]; }

double convexity_violation(const PeriodicField& u) {
  const auto m = curvature_measure(u);
  double worst = 0.0;
  for (double mj : m.node_masses) worst = std::max(worst, -mj);
  return worst;
}

SupportBody::SupportBody(PeriodicField h) : h_(std::move(h)) {
  if (h_.min() <= 0.0) throw DomainError("SupportBody: support function must be positive (origin interior)");
}

PolygonBody::PolygonBody(std::vector<Eigen::Vector2d> vertices) : vertices_(std::move(vertices)) {
  const int k = size();
  if (k < 3) throw DomainError("PolygonBody: need at least 3 vertices");
  for (int i = 0; i < k; ++i) {
    const auto& a = vertices_[static_cast<std::size_t>(i)];
    const auto& b = vertices_[static_cast<std::size_t>((i + 1) % k)];
    const auto& c = vertices_[static_cast<std::size_t>((i + 2) % k)];
    if (cross(b - a, c - b) <= 0.0) throw DomainError("PolygonBody: vertices not strictly convex counterclockwise");
    if (cross(b - a, -a) <= 0.0) throw DomainError("PolygonBody: origin not strictly inside");
  }
}

double PolygonBody::shoelace_area() const {
  double acc = 0.0;
  for (int i = 0; i < size(); ++i)
    acc += cross(vertices_[static_cast<std::size_t>(i)], vertices_[static_cast<std::size_t>((i + 1) % size())]);
  return 0.5 * acc;
}

PolygonBody PolygonBody::regular(int k, double circumradius, double phase) {
  std::vector<Eigen::Vector2d> v;
  for (int i = 0; i < k; ++i) v.push_back(circumradius * direction(phase + kTwoPi * i / k));
  return PolygonBody(std::move(v));
}

double area(const GaugeBody& body) {
  const auto& u = body.u().values();
  return body.spacing() * (0.5 / u.array().square()).sum();
}

double perimeter(const GaugeBody& body) {
  const auto& u = body.u();
  double acc = 0.0;
  for (int j = 0; j < u.size(); ++j) acc += PerimeterIntegrand(mid_value(u, j), forward_diff(u, j)).g;
  return body.spacing() * acc;
}

PeriodicField area_gradient(const GaugeBody& body) {
  Eigen::VectorXd g = -body.u().values().array().cube().inverse();
  require_finite(g, "area_gradient");
  return PeriodicField(std::move(g));
}

PeriodicField perimeter_gradient(const GaugeBody& body) {
  const auto& u = body.u();
  const int n = u.size();
  Eigen::VectorXd gu(n), gq(n);
  for (int j = 0; j < n; ++j) {
    const PerimeterIntegrand p(mid_value(u, j), forward_diff(u, j));
    gu[j] = p.gu;
    gq[j] = p.gq;
  }
  // Exact gradient of the staggered quadrature; index j holds theta_{j+1/2}.
  Eigen::VectorXd g(n);
  for (int j = 0; j < n; ++j) {
    const int prev = (j + n - 1) % n;
    g[j] = 0.5 * (gu[j] + gu[prev]) - (gq[j] - gq[prev]) / u.spacing();
  }
  require_finite(g, "perimeter_gradient");
  return PeriodicField(std::move(g));
}

double area_hessian_form(const GaugeBody& body, const PeriodicField& v) {
  const auto& u = body.u().values();
  return body.spacing() * (3.0 * v.values().array().square() / u.array().pow(4)).sum();
}

double perimeter_hessian_form(const GaugeBody& body, const PeriodicField& v) {
  const auto& u = body.u();
  double acc = 0.0;
  for (int j = 0; j < u.size(); ++j) {
    const PerimeterIntegrand p(mid_value(u, j), forward_diff(u, j));
    const double m = mid_value(v, j), w = forward_diff(v, j);
    acc += p.guu * m * m + 2.0 * p.guq * m * w + p.gqq * w * w;
  }
  return body.spacing() * acc;
}

SupportFunctionals support_functionals(const SupportBody& body) {
  const auto& h = body.h();
  double a = 0.0;
  for (int j = 0; j < h.size(); ++j) {
    const double dh = forward_diff(h, j);
    a += h[j] * h[j] - dh * dh;
  }
  return {0.5 * h.spacing() * a, h.integral()};
}

SupportBody gauge_to_support(const GaugeBody& body) {
  const int n = body.size();
  std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) pts[static_cast<std::size_t>(j)] = body.boundary_point(j);
  Eigen::VectorXd h(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d e = direction(body.u().angle(i));
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts) best = std::max(best, e.dot(p));
    h[i] = best;
  }
  return SupportBody(PeriodicField(std::move(h)));
}

GaugeBody polar(const SupportBody& body) { return GaugeBody(body.h()); }

PolygonBody gauge_to_polygon(const GaugeBody& body, const CurvatureMeasure& measure) {
  const auto& atoms = measure.atoms;
  const int k = static_cast<int>(atoms.size());
  if (k < 3) throw DomainError("gauge_to_polygon: need at least 3 atoms, got " + std::to_string(k));
  const auto& u = body.u();
  const double h = u.spacing();

  // Edge k runs from atom k to atom k+1; on it u = n_k . e^{i theta}.
  std::vector<Eigen::Vector2d> normals(static_cast<std::size_t>(k));
  for (int e = 0; e < k; ++e) {
    const double a = atoms[static_cast<std::size_t>(e)].theta;
    double b = atoms[static_cast<std::size_t>((e + 1) % k)].theta;
    if (b <= a) b += kTwoPi;
    std::vector<double> thetas;
    for (double margin : {1.5 * h, 0.0}) {
      thetas.clear();
      const int j0 = static_cast<int>(std::ceil((a + margin) / h));
      for (int j = j0; j * h < b - margin; ++j)
        if (j * h > a + margin) thetas.push_back(j * h);
      if (thetas.size() >= 2) break;
    }
    if (thetas.size() < 2) thetas = {a, b};
    Eigen::MatrixXd design(static_cast<Eigen::Index>(thetas.size()), 2);
    Eigen::VectorXd rhs(design.rows());
    for (Eigen::Index r = 0; r < design.rows(); ++r) {
      const double t = thetas[static_cast<std::size_t>(r)];
      design.row(r) = direction(t).transpose();
      rhs[r] = interpolate(u, std::fmod(t, kTwoPi));
    }
    normals[static_cast<std::size_t>(e)] = design.colPivHouseholderQr().solve(rhs);
  }

  std::vector<Eigen::Vector2d> vertices;
  for (int v = 0; v < k; ++v) {
    Eigen::Matrix2d lines;
    lines.row(0) = normals[static_cast<std::size_t>((v + k - 1) % k)].transpose();
    lines.row(1) = normals[static_cast<std::size_t>(v)].transpose();
    vertices.emplace_back(lines.fullPivLu().solve(Eigen::Vector2d::Ones()));
  }
  return PolygonBody(std::move(vertices));
}

GaugeBody polygon_to_gauge(const PolygonBody& poly, int n) {
  std::vector<Eigen::Vector2d> normals;
  const auto& v = poly.vertices();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& a = v[i];
    const auto& b = v[(i + 1) % v.size()];
    // n . a = n . b = 1
    Eigen::Matrix2d m;
    m.row(0) = a.transpose();
    m.row(1) = b.transpose();
    normals.emplace_back(m.fullPivLu().solve(Eigen::Vector2d::Ones()));
  }
  return GaugeBody(PeriodicField::sample(n, [&](double theta) {
    const Eigen::Vector2d e = direction(theta);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& nk : normals) best = std::max(best, nk.dot(e));
    return best;
  }));
}

PeriodicField square_gauge(int n, double half_side) {
  return PeriodicField::sample(n, [&](double t) { return std::max(std::abs(std::cos(t)), std::abs(std::sin(t))) / half_side; });
}

void write_polygon_csv(std::ostream& os, const PolygonBody& poly) {
  os.precision(17);
  for (const auto& p : poly.vertices()) os << p.x() << ',' << p.y() << '\n';
}

PolygonBody read_polygon_csv(std::istream& is) {
  std::vector<Eigen::Vector2d> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) {
      if (pts.empty() && lineno == 1) continue;  // header
      throw std::runtime_error("polygon csv: bad line " + std::to_string(lineno));
    }
    pts.emplace_back(x, y);
  }
  return PolygonBody(std::move(pts));
}

}  // namespace gaugeopt
