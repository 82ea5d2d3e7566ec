#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gaugeopt/analyze.hpp"
#include "gaugeopt/errors.hpp"

#include <cmath>
#include <numbers>

using namespace gaugeopt;
using std::numbers::pi;

namespace {

FunctionalSpec make(std::vector<Term> terms, double mesh_h = 0.1) {
  FunctionalSpec s;
  s.terms = std::move(terms);
  s.mesh_h = mesh_h;
  return s;
}

GaugeBody disk(int n) { return GaugeBody(PeriodicField::constant(n, 1.0)); }

PeriodicField ellipse(int n) {
  return PeriodicField::sample(n, [](double t) { return std::hypot(std::cos(t) / 1.4, std::sin(t) / 0.8); });
}

PeriodicField k_gon(int k, int n) { return polygon_to_gauge(PolygonBody::regular(k, 1.0, 0.1), n).u(); }

}  // namespace

TEST_CASE("classify: square, disk and regular 12-gon") {
  const RegularityVerdict sq = classify(square_gauge(256));
  CHECK(sq.kind == VerdictKind::Polygonal);
  REQUIRE(sq.atoms.size() == 4);
  for (const auto& a : sq.atoms) CHECK(a.mass == doctest::Approx(std::sqrt(2.0)).epsilon(0.05));
  CHECK(sq.stability);

  const RegularityVerdict d = classify(PeriodicField::constant(256, 1.0));
  CHECK(d.kind == VerdictKind::Smooth);
  CHECK(d.atoms.empty());
  CHECK(d.max_density == doctest::Approx(d.inside_mass / (2 * pi)).epsilon(1e-12));
  CHECK(d.max_density == doctest::Approx(1.0).epsilon(1e-12));

  const RegularityVerdict g = classify(k_gon(12, 256));
  CHECK(g.kind == VerdictKind::Polygonal);
  CHECK(g.atoms.size() == 12);
}

TEST_CASE("classify matches ground truth on the reference library at two resolutions") {
  for (int n : {256, 512}) {  // coarse resolutions 128 and 256
    CHECK(classify(PeriodicField::constant(n, 1.0)).kind == VerdictKind::Smooth);
    CHECK(classify(ellipse(n)).kind == VerdictKind::Smooth);
    for (int k = 3; k <= 12; ++k) {
      const RegularityVerdict v = classify(k_gon(k, n));
      CHECK(v.kind == VerdictKind::Polygonal);
      CHECK(v.atoms.size() == static_cast<std::size_t>(k));
      CHECK(v.stability);
      CHECK(v.atom_mass_fraction >= 0.7);
      const RegularityVerdict again = classify(k_gon(k, n));
      CHECK(again.kind == v.kind);
      CHECK(again.atoms.size() == v.atoms.size());
    }
  }
}

TEST_CASE("classify restricted to the inside set") {
  // Atoms outside the mask are ignored: masking three corners of a square leaves one.
  const int n = 256;
  std::vector<bool> inside(n, false);
  for (int j = 16; j < 48; ++j) inside[static_cast<std::size_t>(j)] = true;
  const RegularityVerdict v = classify(square_gauge(n), inside);
  CHECK(v.atoms.size() == 1);
  CHECK(v.kind != VerdictKind::Polygonal);
  CHECK_THROWS_AS(classify(square_gauge(n), std::vector<bool>(10, true)), std::invalid_argument);
  CHECK_THROWS_AS(classify(PeriodicField::constant(18, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(classify(curvature_measure(square_gauge(64)), curvature_measure(square_gauge(64))),
                  std::invalid_argument);
}

TEST_CASE("corner gap bound examples") {
  const CornerGap g = corner_gap_bound(1.0, 1.0, 0.0, 0.0);
  REQUIRE(g.gap);
  CHECK(*g.gap == doctest::Approx(pi).epsilon(1e-12));
  CHECK(g.count_bound(2 * pi) == doctest::Approx(6.0).epsilon(1e-12));

  const CornerGap two = corner_gap_bound(1.0, 0.0, 0.0, 0.5);
  CHECK(two.at_most_two_atoms);
  CHECK_FALSE(two.gap);
  CHECK(two.count_bound(2 * pi) == 2.0);

  // Homogeneity: with beta = 0 the gap is linear in alpha at s = 0; with
  // gamma = 0 it scales like sqrt(alpha / beta).
  CHECK(*corner_gap_bound(2.0, 0.0, 0.7, 0.0).gap == doctest::Approx(2.0 * *corner_gap_bound(1.0, 0.0, 0.7, 0.0).gap));
  CHECK(*corner_gap_bound(2.0, 1.0, 0.0, 0.0).gap ==
        doctest::Approx(std::sqrt(2.0) * *corner_gap_bound(1.0, 1.0, 0.0, 0.0).gap));

  CHECK_THROWS_AS(corner_gap_bound(0.0, 1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(corner_gap_bound(1.0, -1.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(corner_gap_bound(1.0, 1.0, -1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(corner_gap_bound(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("corner gap bound is monotone in its parameters") {
  const std::vector<double> grid{0.1, 0.3, 1.0, 3.0};
  for (double s : {0.0, 0.25, 0.5, 0.75})
    for (double a : grid)
      for (double b : grid)
        for (double c : grid) {
          const double base = *corner_gap_bound(a, b, c, s).gap;
          CHECK(*corner_gap_bound(1.5 * a, b, c, s).gap > base);
          CHECK(*corner_gap_bound(a, 1.5 * b, c, s).gap < base);
          CHECK(*corner_gap_bound(a, b, 1.5 * c, s).gap < base);
        }
}

TEST_CASE("localized direction: closed form, symmetry and curvature atoms") {
  const int n = 1024;
  const PeriodicField v = localized_direction(0.0, pi / 4, pi / 2, n);
  const double h = 2 * pi / n;
  const int j2 = n / 8;
  CHECK(v[j2] == doctest::Approx(-0.5).epsilon(1e-12));
  // Slopes on either side give A = B = -sqrt(2)/2.
  CHECK((v[1] - v[0]) / h == doctest::Approx(-std::sqrt(2.0) / 2).epsilon(1e-4));
  CHECK((v[n / 4 - 1] - v[n / 4]) / h == doctest::Approx(-std::sqrt(2.0) / 2).epsilon(1e-4));
  for (int k = 1; k < n / 8; ++k) CHECK(v[j2 + k] == doctest::Approx(v[j2 - k]).epsilon(1e-12));
  CHECK(sobolev_seminorm(v, 1.0) > 0.0);

  const CurvatureMeasure m = curvature_measure(v);
  std::vector<int> heavy;
  for (int j = 0; j < n; ++j)
    if (std::abs(m.node_masses[static_cast<std::size_t>(j)]) > 1e-3) heavy.push_back(j);
  REQUIRE(heavy.size() == 3);
  CHECK(heavy[0] == 0);
  CHECK(heavy[1] == j2);
  CHECK(heavy[2] == n / 4);
  CHECK(m.node_masses[static_cast<std::size_t>(j2)] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(m.node_masses[0] == doctest::Approx(-std::sqrt(2.0) / 2).epsilon(1e-3));

  CHECK_THROWS_AS(localized_direction(0.0, 2.0, 3.5, 64), std::invalid_argument);
  CHECK_THROWS_AS(localized_direction(0.0, 0.0, 1.0, 64), std::invalid_argument);
}

TEST_CASE("coercivity probe of minus and plus perimeter at the disk") {
  // Each bump spans at least 16 grid nodes.
  const int n = 2048;
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const CoercivityFit minus = coercivity_probe(make({{TermKind::Perimeter, -1, 1}}), disk(n), 1.0, eps);
  CHECK(minus.concave_limit);
  CHECK(minus.alpha >= 0.8);
  CHECK(minus.alpha <= 1.2);
  for (double q : minus.q_values) CHECK(q == doctest::Approx(-1.0).epsilon(0.05));

  const CoercivityFit plus = coercivity_probe(make({{TermKind::Perimeter, 1, 1}}), disk(n), 1.0, eps);
  CHECK_FALSE(plus.concave_limit);
  for (std::size_t i = 0; i < eps.size(); ++i) CHECK(plus.q_values[i] == doctest::Approx(-minus.q_values[i]));
  // Q -> -1 as eps -> 0: the L2 part vanishes relative to the H1 seminorm.
  CHECK(std::abs(minus.q_values.back() + 1.0) < std::abs(minus.q_values.front() + 1.0));

  CHECK_THROWS_AS(coercivity_probe(make({{TermKind::Perimeter, 1, 1}}), disk(64), 0.0, {0.2, 0.1}),
                  std::invalid_argument);
}

TEST_CASE("coercivity probe of the energy at the disk decays with the width") {
  // Q(0.8) and Q(0.4) are close at every mesh; decay sets in below 0.4.
  const GaugeBody body = disk(256);
  const FunctionalSpec spec = make({{TermKind::Energy, 1, 1}}, 0.05);
  const CoercivityFit fit = coercivity_probe(spec, body, 0.3, {0.8, 0.4, 0.2, 0.1});
  MESSAGE("Q = " << fit.q_values[0] << " " << fit.q_values[1] << " " << fit.q_values[2] << " " << fit.q_values[3]);
  CHECK(fit.q_values[2] < fit.q_values[1]);
  CHECK(fit.q_values[3] < fit.q_values[2]);
  CHECK(fit.q_values[3] < 0.5 * fit.q_values[0]);
  CHECK(fit.q_values[2] / fit.q_values[3] >= 1.5);
}

TEST_CASE("check_corner_gap on synthetic atoms") {
  CoercivityFit fit;
  fit.alpha = 1.0;
  fit.beta = 1.0;
  fit.gamma = 0.0;
  fit.s = 0.0;
  fit.residual = 0.01;
  // Bound gap = pi: a triangle's spans are 4 pi / 3, a square's are exactly pi.
  std::vector<Atom> tri{{0.0, 1.0}, {2 * pi / 3, 1.0}, {4 * pi / 3, 1.0}};
  CornerGapCheck c = check_corner_gap(tri, fit);
  CHECK(c.fit_ok);
  CHECK(c.passed);
  CHECK(c.min_span == doctest::Approx(4 * pi / 3));

  fit.alpha = 0.25;  // gap pi / 2
  std::vector<Atom> close{{0.0, 1.0}, {0.2, 1.0}, {0.4, 1.0}, {3.0, 1.0}};
  c = check_corner_gap(close, fit);
  CHECK(c.fit_ok);
  CHECK_FALSE(c.passed);
  CHECK(c.min_span == doctest::Approx(0.4));

  fit.residual = 0.2;
  c = check_corner_gap(close, fit);
  CHECK_FALSE(c.fit_ok);
  CHECK_FALSE(c.fit_note.empty());

  fit.residual = 0.01;
  fit.alpha = -0.1;
  c = check_corner_gap(close, fit);
  CHECK_FALSE(c.fit_ok);

  fit.alpha = 1.0;
  fit.gamma = -5.0;  // clamped to zero
  c = check_corner_gap(tri, fit);
  REQUIRE(c.fit_ok);
  CHECK(*c.bound.gap == doctest::Approx(pi));
}

TEST_CASE("check_gradient: geometric spec is exact to round-off") {
  const GaugeBody body(ellipse(128));
  const DerivativeCheckReport r =
      check_gradient(make({{TermKind::Area, 1.0, 2.0}, {TermKind::Perimeter, -1.0, 1.0}}), body, 5, 1);
  CHECK(r.direction_count == 5);
  CHECK(r.max_rel_error_grad <= 1e-6);
  CHECK(r.hessian_checked);
  CHECK(r.max_rel_error_hess <= 1e-4);
  CHECK(r.refinement_trend.size() == 1);
}

TEST_CASE("check_gradient: energy at the disk improves under refinement") {
  FunctionalSpec spec = make({{TermKind::Energy, 1, 1}}, 0.05);
  spec.gradient = GradientMode::Hadamard;
  const DerivativeCheckReport r = check_gradient(spec, disk(128), 5, 7);
  REQUIRE(r.refinement_trend.size() == 2);
  MESSAGE("trend " << r.refinement_trend[0] << " -> " << r.refinement_trend[1]);
  CHECK(r.max_rel_error_grad <= 5e-2);
  CHECK(r.refinement_trend[1] <= 0.5 * r.refinement_trend[0]);
  CHECK(r.mesh_h[1] == doctest::Approx(0.025));
  CHECK_FALSE(r.hessian_checked);
}

TEST_CASE("check_gradient: lambda1 is critical for translations of the disk") {
  const FunctionalSpec spec = make({{TermKind::Lambda1, 1, 1}}, 0.05);
  const EvalReport ev = evaluate(spec, disk(128));
  for (auto f : {+[](double t) { return std::cos(t); }, +[](double t) { return std::sin(t); }})
    CHECK(std::abs(directional(ev.gradient, PeriodicField::sample(128, f))) <= 1e-3);
  CHECK_THROWS_AS(check_gradient(spec, disk(128), 0, 1), std::invalid_argument);
}

TEST_CASE("fd_second_form agrees with the analytic geometric Hessian") {
  const GaugeBody body(ellipse(256));
  const FunctionalSpec spec = make({{TermKind::Perimeter, 1, 1}});
  const PeriodicField v = random_direction(256, 6, 3);
  CHECK(fd_second_form(spec, body, v, 1e-4) == doctest::Approx(second_form(spec, body, v)).epsilon(1e-4));
  CHECK(random_direction(256, 6, 3).max_abs() == doctest::Approx(1.0));
}
