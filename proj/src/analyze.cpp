#include "gaugeopt/analyze.hpp"

#include "gaugeopt/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace gaugeopt {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double atom_mass(const std::vector<Atom>& atoms) {
  double m = 0.0;
  for (const auto& a : atoms) m += a.mass;
  return m;
}

}  // namespace

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Smooth: return "Smooth";
    case VerdictKind::Polygonal: return "Polygonal";
    case VerdictKind::Mixed: return "Mixed";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "?";
}

RegularityVerdict classify(const CurvatureMeasure& coarse, const CurvatureMeasure& fine, const std::vector<bool>& inside,
                           const ClassifyConfig& config) {
  const int n = coarse.size();
  if (fine.size() != 2 * n) throw std::invalid_argument("classify: fine measure must have twice the coarse resolution");
  if (!inside.empty() && static_cast<int>(inside.size()) != n)
    throw std::invalid_argument("classify: inside mask has wrong size");

  const auto in = [&](int j) { return inside.empty() || inside[static_cast<std::size_t>(j % n)]; };
  std::vector<bool> mask(static_cast<std::size_t>(n)), mask_fine(static_cast<std::size_t>(2 * n));
  for (int j = 0; j < n; ++j) {
    mask[static_cast<std::size_t>(j)] = in(j);
    mask_fine[static_cast<std::size_t>(2 * j)] = in(j);
    mask_fine[static_cast<std::size_t>(2 * j + 1)] = in(j) && in(j + 1);
  }

  const CurvatureMeasure dc = decompose(coarse, config.thresholds, mask);
  const CurvatureMeasure df = decompose(fine, config.thresholds, mask_fine);

  RegularityVerdict v;
  v.atoms = dc.atoms;
  v.atoms_fine = df.atoms;
  v.stability = dc.atoms.size() == df.atoms.size();

  std::vector<double> masses;
  for (int j = 0; j < n; ++j) {
    if (!in(j)) continue;
    const double m = coarse.node_masses[static_cast<std::size_t>(j)];
    masses.push_back(m);
    v.inside_mass += m;
    v.max_density = std::max(v.max_density, dc.density[static_cast<std::size_t>(j)]);
  }
  v.inside_nodes = static_cast<int>(masses.size());
  if (v.inside_nodes == 0 || v.inside_mass <= 0.0) {
    v.kind = VerdictKind::Inconclusive;
    return v;
  }
  std::sort(masses.begin(), masses.end(), std::greater<>());
  const auto top = std::min<std::size_t>(masses.size(), static_cast<std::size_t>(std::max(config.top_nodes, 0)));
  double top_mass = 0.0;
  for (std::size_t k = 0; k < top; ++k) top_mass += masses[k];
  v.top_node_fraction = top_mass / v.inside_mass;
  v.atom_mass_fraction = atom_mass(dc.atoms) / v.inside_mass;

  if (dc.atoms.empty() && df.atoms.empty()) {
    v.kind = VerdictKind::Smooth;
  } else if (dc.atoms.size() >= 3 && v.atom_mass_fraction >= config.frac_min && v.stability) {
    v.kind = VerdictKind::Polygonal;
  } else if (v.atom_mass_fraction < config.frac_min) {
    v.kind = VerdictKind::Mixed;
  } else {
    v.kind = VerdictKind::Inconclusive;
  }
  return v;
}

RegularityVerdict classify(const PeriodicField& u, const std::vector<bool>& inside, const ClassifyConfig& config) {
  const int n = u.size();
  if (n % 4 != 0 || n < 16) throw std::invalid_argument("classify: grid size must be a multiple of 4 and >= 16");
  if (!inside.empty() && static_cast<int>(inside.size()) != n)
    throw std::invalid_argument("classify: inside mask has wrong size");
  Eigen::VectorXd half(n / 2);
  std::vector<bool> inside_half;
  for (int j = 0; j < n / 2; ++j) {
    half[j] = u[2 * j];
    if (!inside.empty())
      inside_half.push_back(inside[static_cast<std::size_t>(2 * j)] && inside[static_cast<std::size_t>(2 * j + 1)] &&
                            inside[static_cast<std::size_t>((2 * j + n - 1) % n)]);
  }
  return classify(curvature_measure(PeriodicField(std::move(half))), curvature_measure(u), inside_half, config);
}

double CornerGap::count_bound(double interval_length) const {
  if (at_most_two_atoms) return 2.0;
  return 2.0 * interval_length / *gap + 2.0;
}

CornerGap corner_gap_bound(double alpha, double beta, double gamma, double s) {
  if (!(alpha > 0.0)) throw std::invalid_argument("corner_gap_bound: alpha must be positive");
  if (!(beta >= 0.0) || !(gamma >= 0.0)) throw std::invalid_argument("corner_gap_bound: beta and gamma must be >= 0");
  if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("corner_gap_bound: s must lie in [0, 1)");
  const double c = std::pow(std::numbers::pi, s - 1.0);
  CornerGap r;
  double base;
  if (beta > 0.0) {
    base = (-gamma + std::sqrt(gamma * gamma + 4.0 * alpha * beta)) / (2.0 * beta * c);
  } else if (gamma > 0.0) {
    base = alpha / (c * gamma);
  } else {
    r.at_most_two_atoms = true;
    return r;
  }
  r.gap = std::pow(base, 1.0 / (1.0 - s));
  return r;
}

CornerGapCheck check_corner_gap(const std::vector<Atom>& atoms, const CoercivityFit& fit, double max_residual) {
  CornerGapCheck r;
  if (!(fit.alpha > 0.0)) {
    r.fit_note = "fitted alpha is not positive";
  } else if (!(fit.residual <= max_residual)) {
    r.fit_note = "fit residual above threshold";
  } else {
    r.fit_ok = true;
    r.bound = corner_gap_bound(fit.alpha, std::max(fit.beta, 0.0), std::max(fit.gamma, 0.0), fit.s);
  }
  const auto k = atoms.size();
  r.min_span = kTwoPi;
  if (k >= 3) {
    for (std::size_t i = 0; i < k; ++i) {
      double span = atoms[(i + 2) % k].theta - atoms[i].theta;
      if (span <= 0.0) span += kTwoPi;
      r.min_span = std::min(r.min_span, span);
    }
  }
  if (r.fit_ok) {
    const double need = r.bound.at_most_two_atoms ? std::numbers::pi : std::min(*r.bound.gap, std::numbers::pi);
    r.passed = k < 3 || r.min_span >= need;
  }
  return r;
}

PeriodicField localized_direction(double theta1, double theta2, double theta3, int n) {
  const double a = theta2 - theta1, b = theta3 - theta2;
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("localized_direction: need theta1 < theta2 < theta3");
  if (!(a + b < std::numbers::pi))
    throw std::invalid_argument("localized_direction: theta3 - theta1 must be below pi");
  const double denom = std::sin(a + b);
  const double ca = -std::sin(b) / denom;
  const double cb = -std::sin(a) / denom;
  return PeriodicField::sample(n, [&](double theta) {
    double phi = std::fmod(theta - theta1, kTwoPi);
    if (phi < 0.0) phi += kTwoPi;
    if (phi < a) return ca * std::sin(phi);
    if (phi < a + b) return cb * std::sin(a + b - phi);
    return 0.0;
  });
}

PeriodicField bump_direction(double center, double eps, int n) {
  if (!(eps > 0.0 && eps < kTwoPi)) throw std::invalid_argument("bump_direction: width must lie in (0, 2pi)");
  return PeriodicField::sample(n, [&](double theta) {
    double phi = std::remainder(theta - center, kTwoPi) + 0.5 * eps;
    if (phi <= 0.0 || phi >= eps) return 0.0;
    const double s = std::sin(std::numbers::pi * phi / eps);
    return s * s;
  });
}

CoercivityFit coercivity_probe(const FunctionalSpec& spec_in, const GaugeBody& body, double center,
                               const std::vector<double>& eps_list, const std::vector<double>& s_grid) {
  if (eps_list.size() < 3) throw std::invalid_argument("coercivity_probe: need at least three widths");
  if (s_grid.empty()) throw std::invalid_argument("coercivity_probe: empty s grid");
  const FunctionalSpec spec = spec_in.with_fixed_mesh(body);
  const int n = body.size();

  CoercivityFit fit;
  fit.epsilons = eps_list;
  for (double eps : eps_list) {
    const PeriodicField v = bump_direction(center, eps, n);
    const double h1 = kTwoPi * std::pow(sobolev_seminorm(v, 1.0), 2);
    const double q = second_form(spec, body, v) / h1;
    if (!std::isfinite(q)) throw DomainError("coercivity_probe: non-finite quadratic form");
    fit.q_values.push_back(q);
  }

  const auto m = static_cast<Eigen::Index>(eps_list.size());
  Eigen::VectorXd q(m);
  for (Eigen::Index i = 0; i < m; ++i) q[i] = fit.q_values[static_cast<std::size_t>(i)];
  const double qscale = std::max(q.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());

  // Fits with alpha > 0 take precedence; s is weakly identifiable from a few widths.
  double best = std::numeric_limits<double>::infinity();
  bool best_positive = false;
  for (double s : s_grid) {
    if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("coercivity_probe: s must lie in [0, 1)");
    Eigen::MatrixXd x(m, 3);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double e = std::pow(eps_list[static_cast<std::size_t>(i)], 1.0 - s);
      x(i, 0) = -1.0;
      x(i, 1) = e;
      x(i, 2) = e * e;
    }
    const Eigen::VectorXd coef = x.colPivHouseholderQr().solve(q);
    const double res = (x * coef - q).norm() / std::sqrt(static_cast<double>(m)) / qscale;
    const bool positive = coef[0] > 0.0;
    if ((positive && !best_positive) || (positive == best_positive && res < best - 1e-14)) {
      best = res;
      best_positive = positive;
      const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(x.transpose() * x).eigenvalues();
      fit.condition = ev[0] > 0.0 ? std::sqrt(ev[2] / ev[0]) : std::numeric_limits<double>::infinity();
      fit.alpha = coef[0];
      fit.c1 = coef[1];
      fit.c2 = coef[2];
      fit.s = s;
      fit.residual = res;
    }
  }
  const double c = std::pow(std::numbers::pi, fit.s - 1.0);
  fit.gamma = fit.c1 / c;
  fit.beta = fit.c2 / (c * c);
  fit.concave_limit = fit.alpha > 0.0;
  return fit;
}

double fd_second_form(const FunctionalSpec& spec_in, const GaugeBody& body, const PeriodicField& v, double h) {
  const FunctionalSpec spec = spec_in.with_fixed_mesh(body);
  const auto value = [&](double t) {
    PeriodicField moved = body.u() + t * v;
    if (moved.min() < kDefaultUMin) throw DomainError("fd_second_form: perturbation leaves u > 0");
    return evaluate(spec, GaugeBody(std::move(moved)), false).value;
  };
  return (value(h) - 2.0 * evaluate(spec, body, false).value + value(-h)) / (h * h);
}

PeriodicField random_direction(int n, int max_mode, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(max_mode + 1)), b(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    a[k] = coef(rng) / (1.0 + static_cast<double>(k));
    b[k] = k == 0 ? 0.0 : coef(rng) / (1.0 + static_cast<double>(k));
  }
  PeriodicField v = PeriodicField::sample(n, [&](double theta) {
    double x = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      x += a[k] * std::cos(static_cast<double>(k) * theta) + b[k] * std::sin(static_cast<double>(k) * theta);
    return x;
  });
  const double scale = v.max_abs();
  return scale > 0.0 ? v * (1.0 / scale) : PeriodicField::constant(n, 1.0);
}

DerivativeCheckReport check_gradient(const FunctionalSpec& spec, const GaugeBody& body, int directions,
                                     std::uint64_t seed) {
  if (directions <= 0) throw std::invalid_argument("check_gradient: need at least one direction");
  const int n = body.size();
  const double h = 1e-5 * body.u().min();
  DerivativeCheckReport r;
  r.direction_count = directions;

  std::vector<PeriodicField> dirs;
  for (int d = 0; d < directions; ++d) dirs.push_back(random_direction(n, 6, seed + static_cast<std::uint64_t>(d)));

  // The refined level halves the mesh size and doubles the grid, since the
  // boundary-integral gradient carries quadrature error in dtheta as well.
  const int level_count = spec.has_pde_terms() ? 2 : 1;
  for (int level = 0; level < level_count; ++level) {
    const GaugeBody b = level == 0 ? body : GaugeBody(resample(body.u(), 2 * n));
    FunctionalSpec s = spec;
    s.mesh_h = spec.mesh_h / (1 << level);
    s.mesh_levels = -1;
    s = s.with_fixed_mesh(b);
    const EvalReport ev = evaluate(s, b);
    double worst = 0.0;
    for (int d = 0; d < directions; ++d) {
      const PeriodicField v = level == 0 ? dirs[static_cast<std::size_t>(d)]
                                         : random_direction(b.size(), 6, seed + static_cast<std::uint64_t>(d));
      const double analytic = directional(ev.gradient, v);
      const double plus = evaluate(s, GaugeBody(b.u() + h * v), false).value;
      const double minus = evaluate(s, GaugeBody(b.u() - h * v), false).value;
      const double fd = (plus - minus) / (2.0 * h);
      const double scale = b.spacing() * (ev.gradient.values().cwiseProduct(v.values())).cwiseAbs().sum();
      worst = std::max(worst, std::abs(analytic - fd) / std::max(scale, std::numeric_limits<double>::min()));
    }
    r.refinement_trend.push_back(worst);
    r.mesh_h.push_back(s.mesh_h);
  }
  r.max_rel_error_grad = r.refinement_trend.front();

  FunctionalSpec geometric = spec;
  geometric.terms.clear();
  for (const auto& t : spec.terms)
    if (t.kind == TermKind::Area || t.kind == TermKind::Perimeter) geometric.terms.push_back(t);
  if (!geometric.terms.empty()) {
    r.hessian_checked = true;
    const double hh = 1e-4 * body.u().min();
    for (const auto& v : dirs) {
      const double a = second_form(geometric, body, v);
      const double b = fd_second_form(geometric, body, v, hh);
      const double scale = std::max({std::abs(a), std::abs(b), std::numeric_limits<double>::min()});
      r.max_rel_error_hess = std::max(r.max_rel_error_hess, std::abs(a - b) / scale);
    }
  }
  return r;
}

}  // namespace gaugeopt
