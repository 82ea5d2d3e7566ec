#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gaugeopt/body.hpp"
#include "gaugeopt/errors.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace gaugeopt;
using std::numbers::pi;

namespace {

PeriodicField smooth_convex(int n, double a2, double b3, double phase = 0.0) {
  return PeriodicField::sample(n, [&](double t) { return 1.0 + a2 * std::cos(2 * t + phase) + b3 * std::sin(3 * t); });
}

PeriodicField random_direction(int n, int k_min, int k_max, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  std::vector<double> a(static_cast<std::size_t>(k_max + 1)), b(a.size());
  for (int k = k_min; k <= k_max; ++k) {
    a[k] = c(rng) / (1 + k);
    b[k] = c(rng) / (1 + k);
  }
  return PeriodicField::sample(n, [&](double t) {
    double v = 0.0;
    for (int k = k_min; k <= k_max; ++k) v += a[k] * std::cos(k * t) + b[k] * std::sin(k * t);
    return v;
  });
}

double fd(const std::function<double(const PeriodicField&)>& j, const PeriodicField& u, const PeriodicField& v,
          double h) {
  return (j(u + h * v) - j(u - h * v)) / (2 * h);
}

}  // namespace

TEST_CASE("area closed forms") {
  CHECK(area(GaugeBody(PeriodicField::constant(64, 1.0))) == doctest::Approx(pi).epsilon(1e-14));
  CHECK(area(GaugeBody(PeriodicField::constant(64, 2.0))) == doctest::Approx(pi / 4).epsilon(1e-14));
  CHECK(std::abs(area(GaugeBody(square_gauge(512))) - 4.0) <= 1e-3 * 4.0);
}

TEST_CASE("perimeter closed forms") {
  CHECK(perimeter(GaugeBody(PeriodicField::constant(64, 1.0))) == doctest::Approx(2 * pi).epsilon(1e-14));
  CHECK(perimeter(GaugeBody(PeriodicField::constant(64, 0.25))) == doctest::Approx(8 * pi).epsilon(1e-14));
  CHECK(std::abs(perimeter(GaugeBody(square_gauge(512))) - 8.0) <= 1e-2);
}

TEST_CASE("bodies reject gauges below u_min") {
  CHECK_THROWS_AS(GaugeBody(PeriodicField::constant(16, 1e-9)), DomainError);
  CHECK_THROWS_AS(GaugeBody(PeriodicField::constant(16, -1.0)), DomainError);
}

TEST_CASE("scaling laws") {
  const PeriodicField u = smooth_convex(128, 0.1, 0.05);
  const GaugeBody b(u);
  for (double c : {0.5, 2.0, 3.7}) {
    const GaugeBody scaled(u * (1.0 / c));
    CHECK(area(scaled) == doctest::Approx(c * c * area(b)).epsilon(1e-13));
    CHECK(perimeter(scaled) == doctest::Approx(c * perimeter(b)).epsilon(1e-13));
  }
}

TEST_CASE("gradients at the unit disk") {
  const GaugeBody disk(PeriodicField::constant(64, 1.0));
  const PeriodicField g = area_gradient(disk);
  for (int j = 0; j < 64; ++j) CHECK(g[j] == doctest::Approx(-1.0).epsilon(1e-14));
  const PeriodicField one = PeriodicField::constant(64, 1.0);
  const double dt = disk.spacing();
  CHECK(dt * g.values().dot(one.values()) == doctest::Approx(-2 * pi).epsilon(1e-13));
  CHECK(dt * perimeter_gradient(disk).values().dot(one.values()) == doctest::Approx(-2 * pi).epsilon(1e-13));
}

TEST_CASE("gradient consistency along random directions") {
  std::mt19937_64 rng(5);
  const double h = 1e-5;
  for (int trial = 0; trial < 10; ++trial) {
    const PeriodicField u = smooth_convex(128, 0.05 * trial / 10.0, 0.03, 0.1 * trial);
    const PeriodicField v = random_direction(128, 0, 8, rng);
    const GaugeBody b(u);
    const double dt = b.spacing();
    const auto a = [](const PeriodicField& w) { return area(GaugeBody(w)); };
    const auto p = [](const PeriodicField& w) { return perimeter(GaugeBody(w)); };
    const double ga = dt * area_gradient(b).values().dot(v.values());
    const double gp = dt * perimeter_gradient(b).values().dot(v.values());
    CHECK(std::abs(ga - fd(a, u, v, h)) <= 1e-6 * (1 + std::abs(area(b))));
    CHECK(std::abs(gp - fd(p, u, v, h)) <= 1e-6 * (1 + std::abs(perimeter(b))));
  }
}

TEST_CASE("Hessian forms at the unit disk") {
  const int n = 256;
  const GaugeBody disk(PeriodicField::constant(n, 1.0));
  const PeriodicField one = PeriodicField::constant(n, 1.0);
  const PeriodicField cos2 = PeriodicField::sample(n, [](double t) { return std::cos(2 * t); });
  CHECK(area_hessian_form(disk, one) == doctest::Approx(6 * pi).epsilon(1e-13));
  CHECK(perimeter_hessian_form(disk, one) == doctest::Approx(4 * pi).epsilon(1e-13));
  CHECK(perimeter_hessian_form(disk, cos2) == doctest::Approx(6 * pi).epsilon(1e-3));
}

TEST_CASE("Hessian forms match second differences") {
  std::mt19937_64 rng(9);
  const double h = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    const PeriodicField u = smooth_convex(128, 0.08, 0.04, 0.3 * trial);
    const PeriodicField v = random_direction(128, 0, 6, rng);
    const GaugeBody b(u);
    const auto second = [&](auto&& j) { return (j(u + h * v) - 2 * j(u) + j(u - h * v)) / (h * h); };
    const double fa = second([](const PeriodicField& w) { return area(GaugeBody(w)); });
    const double fp = second([](const PeriodicField& w) { return perimeter(GaugeBody(w)); });
    CHECK(area_hessian_form(b, v) == doctest::Approx(fa).epsilon(1e-4));
    CHECK(perimeter_hessian_form(b, v) == doctest::Approx(fp).epsilon(1e-4));
  }
}

TEST_CASE("perimeter Hessian is coercive at the disk off the kernel modes") {
  std::mt19937_64 rng(13);
  const int n = 256;
  const GaugeBody disk(PeriodicField::constant(n, 1.0));
  for (int trial = 0; trial < 100; ++trial) {
    const PeriodicField v = random_direction(n, 2, 24, rng);
    const double h1 = 2 * pi * std::pow(sobolev_seminorm(v, 1.0), 2);  // int v'^2
    CHECK(perimeter_hessian_form(disk, v) >= h1);
  }
}

TEST_CASE("support functionals") {
  const auto disk = support_functionals(SupportBody(PeriodicField::constant(64, 1.0)));
  CHECK(disk.area == doctest::Approx(pi).epsilon(1e-13));
  CHECK(disk.perimeter == doctest::Approx(2 * pi).epsilon(1e-13));
  const auto big = support_functionals(SupportBody(PeriodicField::constant(64, 2.5)));
  CHECK(big.area == doctest::Approx(pi * 6.25).epsilon(1e-13));
  CHECK(big.perimeter == doctest::Approx(5 * pi).epsilon(1e-13));
  const auto sq = support_functionals(
      SupportBody(PeriodicField::sample(512, [](double t) { return std::abs(std::cos(t)) + std::abs(std::sin(t)); })));
  CHECK(std::abs(sq.area - 4.0) <= 1e-2);
  CHECK(std::abs(sq.perimeter - 8.0) <= 1e-2);
}

TEST_CASE("gauge to support") {
  const auto h1 = gauge_to_support(GaugeBody(PeriodicField::constant(64, 1.0))).h();
  for (int j = 0; j < 64; ++j) CHECK(h1[j] == doctest::Approx(1.0).epsilon(1e-14));
  const auto hr = gauge_to_support(GaugeBody(PeriodicField::constant(64, 0.4))).h();
  for (int j = 0; j < 64; ++j) CHECK(hr[j] == doctest::Approx(2.5).epsilon(1e-14));

  const int n = 256;
  const auto hs = gauge_to_support(GaugeBody(square_gauge(n))).h();
  const double dt = 2 * pi / n;
  for (int j = 0; j < n; ++j) {
    const double t = hs.angle(j);
    CHECK(std::abs(hs[j] - (std::abs(std::cos(t)) + std::abs(std::sin(t)))) <= 2 * dt);
  }
  const GaugeBody body(smooth_convex(n, 0.1, 0.05));
  CHECK(support_functionals(gauge_to_support(body)).area == doctest::Approx(area(body)).epsilon(1e-3));
}

TEST_CASE("duality roundtrip on smooth strictly convex bodies") {
  for (int n : {128, 512}) {
    const PeriodicField u = smooth_convex(n, 0.1, 0.05);
    const SupportBody h = gauge_to_support(GaugeBody(u));
    const PeriodicField back = gauge_to_support(polar(h)).h();
    const double dt = 2 * pi / n;
    CHECK((back.values() - u.values()).cwiseAbs().maxCoeff() <= 2 * dt * u.max());
  }
}

TEST_CASE("polygon gauges") {
  const PolygonBody square({{1, -1}, {1, 1}, {-1, 1}, {-1, -1}});
  const GaugeBody g = polygon_to_gauge(square, 512);
  CHECK(g.u()[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(g.u()[64] == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK((g.u().values() - square_gauge(512).values()).cwiseAbs().maxCoeff() < 1e-12);

  const auto tri = decompose(curvature_measure(polygon_to_gauge(PolygonBody::regular(3, 1.0), 384).u()), {});
  REQUIRE(tri.atoms.size() == 3);
  CHECK(tri.atoms[1].mass == doctest::Approx(tri.atoms[0].mass).epsilon(1e-9));
  CHECK(tri.atoms[2].mass == doctest::Approx(tri.atoms[0].mass).epsilon(1e-9));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> jitter(-0.15, 0.15);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Eigen::Vector2d> v;
    const int k = 3 + trial % 6;
    for (int i = 0; i < k; ++i) {
      const double t = 2 * pi * (i + 0.5 + jitter(rng)) / k;
      v.emplace_back(std::cos(t), std::sin(t));
    }
    const PolygonBody poly(v);
    CHECK(area(polygon_to_gauge(poly, 512)) == doctest::Approx(oracle::shoelace(v)).epsilon(1e-3));
  }
}

TEST_CASE("polygon roundtrip through atoms") {
  const int n = 512;
  const PolygonBody poly = PolygonBody::regular(5, 1.3, 0.2);
  const GaugeBody g = polygon_to_gauge(poly, n);
  const auto atoms = decompose(curvature_measure(g.u()), {});
  const PolygonBody back = gauge_to_polygon(g, atoms);
  REQUIRE(back.size() == 5);
  const double tol = 2 * (2 * pi / n) * 1.3;
  for (const auto& p : poly.vertices()) {
    double best = 1e9;
    for (const auto& q : back.vertices()) best = std::min(best, (p - q).norm());
    CHECK(best <= tol);
  }
}

TEST_CASE("polygon preconditions") {
  CHECK_THROWS_AS(PolygonBody({{1, 1}, {2, 1}, {2, 2}}), DomainError);  // origin outside
  CHECK_THROWS_AS(PolygonBody({{1, 0}, {0, 1}, {-1, 0}, {-0.2, 0.1}, {0, -1}}), DomainError);
  const GaugeBody disk(PeriodicField::constant(64, 1.0));
  CHECK_THROWS_AS(gauge_to_polygon(disk, decompose(curvature_measure(disk.u()), {})), DomainError);
}

TEST_CASE("polygon csv roundtrip") {
  const PolygonBody p = PolygonBody::regular(6, 2.0, 0.1);
  std::stringstream ss;
  write_polygon_csv(ss, p);
  const PolygonBody q = read_polygon_csv(ss);
  REQUIRE(q.size() == 6);
  for (int i = 0; i < 6; ++i) CHECK((p.vertices()[i] - q.vertices()[i]).norm() < 1e-12);
  CHECK(q.shoelace_area() == doctest::Approx(oracle::shoelace(p.vertices())));
}
