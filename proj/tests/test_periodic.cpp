#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gaugeopt/body.hpp"
#include "gaugeopt/errors.hpp"
#include "gaugeopt/periodic.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace gaugeopt;
using std::numbers::pi;

namespace {

PeriodicField random_band_limited(int n, int modes, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(modes + 1)), b(a.size());
  for (auto& x : a) x = g(rng);
  for (auto& x : b) x = g(rng);
  return PeriodicField::sample(n, [&](double t) {
    double v = 0.0;
    for (int k = 0; k <= modes; ++k) v += a[k] * std::cos(k * t) + b[k] * std::sin(k * t);
    return v;
  });
}

// Compactly supported random field on [c, c + eps]: a random sine series times a sin bump.
PeriodicField random_compact(int n, double c, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double a1 = u(rng), a2 = u(rng), a3 = u(rng);
  return PeriodicField::sample(n, [&](double t) {
    const double x = std::remainder(t - c, 2.0 * pi);
    if (x <= 0.0 || x >= eps) return 0.0;
    const double y = pi * x / eps;
    return std::sin(y) * (1.0 + 0.5 * a1 * std::sin(y) + 0.3 * a2 * std::cos(2 * y) + 0.2 * a3 * std::sin(3 * y));
  });
}

}  // namespace

TEST_CASE("fields reject bad sizes and wrap indices") {
  CHECK_THROWS_AS(PeriodicField(Eigen::VectorXd::Ones(7)), std::invalid_argument);
  CHECK_THROWS_AS(PeriodicField(Eigen::VectorXd::Ones(6)), std::invalid_argument);
  Eigen::VectorXd nan = Eigen::VectorXd::Ones(8);
  nan[3] = std::nan("");
  CHECK_THROWS_AS(PeriodicField{nan}, DomainError);
  const PeriodicField u = PeriodicField::sample(8, [](double t) { return t; });
  CHECK(u[-1] == doctest::Approx(u[7]));
  CHECK(u[9] == doctest::Approx(u[1]));
  CHECK(u.rotated(2)[2] == doctest::Approx(u[0]));
}

TEST_CASE("spectral coefficients of simple fields") {
  const auto one = spectral_coeffs(PeriodicField::constant(32, 1.0));
  CHECK(std::abs(one(0) - 1.0) < 1e-14);
  for (int k = one.min_mode(); k <= one.max_mode(); ++k)
    if (k != 0) CHECK(std::abs(one(k)) < 1e-14);

  const auto c = spectral_coeffs(PeriodicField::sample(32, [](double t) { return std::cos(t); }));
  CHECK(std::abs(c(1) - 0.5) < 1e-14);
  CHECK(std::abs(c(-1) - 0.5) < 1e-14);
  for (int k = c.min_mode(); k <= c.max_mode(); ++k)
    if (std::abs(k) != 1) CHECK(std::abs(c(k)) < 1e-14);
}

TEST_CASE("spectral roundtrip and conjugate symmetry") {
  const PeriodicField u = PeriodicField::sample(64, [](double t) { return std::exp(std::sin(t)); });
  const auto c = spectral_coeffs(u);
  const PeriodicField back = c.inverse();
  CHECK((back.values() - u.values()).cwiseAbs().maxCoeff() <= 1e-12 * u.max_abs());
  for (int k = 1; k < 32; ++k) CHECK(std::abs(c(-k) - std::conj(c(k))) < 1e-14);
}

TEST_CASE("sobolev seminorm values") {
  const auto cos1 = PeriodicField::sample(64, [](double t) { return std::cos(t); });
  CHECK(sobolev_seminorm(cos1, 1.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-13));
  CHECK(sobolev_seminorm(PeriodicField::constant(64, 3.0), 0.5) == doctest::Approx(0.0).epsilon(1e-14));
  const auto cos3 = PeriodicField::sample(64, [](double t) { return std::cos(3 * t); });
  CHECK(sobolev_seminorm(cos3, 0.5) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-13));
  CHECK_THROWS_AS(sobolev_seminorm(cos1, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(sobolev_seminorm(cos1, -0.1), std::invalid_argument);
}

TEST_CASE("Parseval and interpolation inequality on random fields") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const PeriodicField u = random_band_limited(128, 10, rng);
    const double quad = (u.values().array().square().sum()) / u.size();
    const double l2 = l2_norm_spectral(u);
    CHECK(l2 * l2 == doctest::Approx(quad).epsilon(1e-10));
    for (double s : {0.25, 0.5, 0.75}) {
      const double lhs = sobolev_seminorm(u, s);
      const double rhs = std::pow(sobolev_seminorm(u, 1.0), s) * std::pow(l2, 1.0 - s);
      CHECK(lhs <= rhs * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("curvature measure of constant, kernel and square fields") {
  const auto one = curvature_measure(PeriodicField::constant(64, 1.0));
  const double dt = 2 * pi / 64;
  for (double m : one.node_masses) CHECK(m == doctest::Approx(dt).epsilon(1e-12));
  CHECK(one.total_mass == doctest::Approx(2 * pi).epsilon(1e-12));

  // cos is not exactly in the kernel of the centered second difference, so uniformity holds to O(dtheta^2).
  const auto k = curvature_measure(PeriodicField::sample(256, [](double t) { return 1.0 + 0.5 * std::cos(t); }));
  CHECK(k.total_mass == doctest::Approx(2 * pi).epsilon(1e-12));
  const double dk = 2 * pi / 256;
  for (double m : k.node_masses) CHECK(std::abs(m - dk) <= 0.5 * dk * dk * dk);

  const auto sq = curvature_measure(square_gauge(256));
  const auto dec = decompose(sq, AtomThresholds{});
  REQUIRE(dec.atoms.size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(dec.atoms[static_cast<std::size_t>(i)].theta == doctest::Approx(pi / 4 + i * pi / 2).epsilon(0.02));
    CHECK(dec.atoms[static_cast<std::size_t>(i)].mass == doctest::Approx(std::sqrt(2.0)).epsilon(0.01));
  }
  CHECK(sq.total_mass == doctest::Approx(4 * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("atom masses converge to sqrt 2 under refinement") {
  double prev = 1.0;
  for (int n : {64, 256, 1024}) {
    const auto dec = decompose(curvature_measure(square_gauge(n)), AtomThresholds{});
    REQUIRE(dec.atoms.size() == 4);
    const double err = std::abs(dec.atoms[0].mass - std::sqrt(2.0));
    CHECK(err <= prev);
    prev = err;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("telescoping identity holds for every field") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const PeriodicField u = random_band_limited(96, 40, rng);
    const auto m = curvature_measure(u);
    double sum = 0.0;
    for (double x : m.node_masses) sum += x;
    CHECK(m.total_mass == doctest::Approx(u.spacing() * u.values().sum()).epsilon(1e-12));
    CHECK(sum == doctest::Approx(m.total_mass).epsilon(1e-10));
  }
}

TEST_CASE("decomposed atoms are positive and sorted") {
  const auto dec = decompose(curvature_measure(polygon_to_gauge(PolygonBody::regular(7, 1.0, 0.3), 256).u()),
                             AtomThresholds{});
  REQUIRE(dec.atoms.size() == 7);
  for (std::size_t i = 0; i < dec.atoms.size(); ++i) {
    CHECK(dec.atoms[i].mass > 0.0);
    CHECK(dec.atoms[i].theta >= 0.0);
    CHECK(dec.atoms[i].theta < 2 * pi);
    if (i > 0) CHECK(dec.atoms[i].theta > dec.atoms[i - 1].theta);
  }
}

TEST_CASE("poincare ratio: equality case, hat function and the bound") {
  const int n = 1024;
  const double eps = 0.5;
  const PeriodicField half_sine = PeriodicField::sample(n, [&](double t) {
    return t > 0.0 && t < eps ? std::sin(pi * t / eps) : 0.0;
  });
  CHECK(std::abs(poincare_ratio(half_sine, 0.0) / (eps / pi) - 1.0) <= 1e-3);
  const PeriodicField fine = PeriodicField::sample(16384, [&](double t) {
    return t > 0.0 && t < eps ? std::sin(pi * t / eps) : 0.0;
  });
  CHECK(std::abs(poincare_ratio(fine, 0.0) / (eps / pi) - 1.0) <= 1e-4);

  const PeriodicField hat = PeriodicField::sample(n, [&](double t) {
    if (t <= 0.0 || t >= eps) return 0.0;
    return t < eps / 2 ? 2 * t / eps : 2 * (eps - t) / eps;
  });
  CHECK(poincare_ratio(hat, 0.0) == doctest::Approx(eps / std::sqrt(12.0)).epsilon(2e-3));
  CHECK(poincare_ratio(hat, 0.0) < eps / pi);

  const PeriodicField narrow = PeriodicField::sample(n, [&](double t) {
    return t > 0.0 && t < 0.1 ? std::sin(pi * t / 0.1) : 0.0;
  });
  CHECK(poincare_ratio(narrow, 0.5) <= std::sqrt(0.1) / std::sqrt(pi) * 1.01);

  CHECK_THROWS_AS(poincare_ratio(PeriodicField::sample(64, [](double t) { return 2 + std::cos(t); }), 0.0),
                  DomainError);
}

TEST_CASE("poincare inequality on random compact fields, slack shrinking with N") {
  for (double s : {0.0, 0.5}) {
    double worst_prev = std::numeric_limits<double>::infinity();
    for (int n : {256, 1024}) {
      std::mt19937_64 rng(2024);
      std::uniform_real_distribution<double> ue(0.05, 2.5), uc(0.0, 2 * pi);
      double worst = -1.0;
      for (int trial = 0; trial < 100; ++trial) {
        const double eps = ue(rng), c = uc(rng);
        const PeriodicField v = random_compact(n, c, eps, rng);
        const double arc = support_arc_length(v);
        const double ratio = poincare_ratio(v, s);
        const double bound = std::pow(pi, s - 1.0) * std::pow(arc, 1.0 - s);
        worst = std::max(worst, ratio / bound - 1.0);
      }
      // Only the excess over the bound has to vanish under refinement.
      const double excess = std::max(worst, 0.0);
      CHECK(excess <= 0.05);
      CHECK(excess <= worst_prev + 1e-12);
      worst_prev = excess;
    }
  }
}

TEST_CASE("interpolate and resample") {
  const PeriodicField u = PeriodicField::sample(512, [](double t) { return std::cos(2 * t); });
  CHECK(interpolate(u, 0.3) == doctest::Approx(std::cos(0.6)).epsilon(1e-4));
  CHECK(interpolate(u, 0.3 + 2 * pi) == doctest::Approx(interpolate(u, 0.3)));
  const PeriodicField r = resample(u, 1024);
  CHECK(r.size() == 1024);
  CHECK(r[2] == doctest::Approx(u[1]));
}
