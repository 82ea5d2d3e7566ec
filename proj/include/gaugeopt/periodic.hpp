#pragma once

// Sampled 2pi-periodic scalar fields, their Fourier coefficients, Sobolev
// seminorms and the discrete curvature measure u'' + u.

#include <Eigen/Core>

#include <complex>
#include <numbers>
#include <vector>

namespace gaugeopt {

/// Samples of a 2pi-periodic function on the uniform grid theta_j = 2 pi j / N.
/// N is even and at least 8; indices wrap modulo N.
class PeriodicField {
 public:
  explicit PeriodicField(Eigen::VectorXd samples);

  static PeriodicField constant(int n, double value);

  template <class F>
  static PeriodicField sample(int n, F&& f) {
    Eigen::VectorXd v(n);
    for (int j = 0; j < n; ++j) v[j] = f(2.0 * std::numbers::pi * j / n);
    return PeriodicField(std::move(v));
  }

  int size() const { return static_cast<int>(values_.size()); }
  double spacing() const { return 2.0 * std::numbers::pi / size(); }
  double angle(int j) const { return spacing() * j; }

  double operator[](int j) const { return values_[wrap(j)]; }
  int wrap(int j) const {
    const int n = size();
    return ((j % n) + n) % n;
  }

  const Eigen::VectorXd& values() const { return values_; }
  double min() const { return values_.minCoeff(); }
  double max() const { return values_.maxCoeff(); }
  double max_abs() const { return values_.cwiseAbs().maxCoeff(); }

  /// Circular shift: result[j] = (*this)[j - shift].
  PeriodicField rotated(int shift) const;

  /// Trapezoid quadrature of the samples over one period (un-normalized d theta).
  double integral() const { return spacing() * values_.sum(); }

  PeriodicField& operator+=(const PeriodicField& other);
  PeriodicField& operator-=(const PeriodicField& other);
  PeriodicField& operator*=(double s);

 private:
  Eigen::VectorXd values_;
};

PeriodicField operator+(PeriodicField a, const PeriodicField& b);
PeriodicField operator-(PeriodicField a, const PeriodicField& b);
PeriodicField operator*(double s, PeriodicField a);
PeriodicField operator*(PeriodicField a, double s);

/// Fourier coefficients with the convention c(n) = (1/2pi) int u e^{-in theta}.
/// Stores modes -N/2 .. N/2-1.
class SpectralCoeffs {
 public:
  SpectralCoeffs(int n, std::vector<std::complex<double>> by_fft_index);

  int size() const { return n_; }
  int min_mode() const { return -n_ / 2; }
  int max_mode() const { return n_ / 2 - 1; }
  std::complex<double> operator()(int mode) const;

  PeriodicField inverse() const;

 private:
  int n_;
  std::vector<std::complex<double>> coeffs_;  // indexed by mode mod N
};

SpectralCoeffs spectral_coeffs(const PeriodicField& field);

/// (sum_n |n|^{2s} |c(n)|^2)^{1/2}, the n = 0 term excluded. Requires 0 <= s <= 1.
double sobolev_seminorm(const PeriodicField& field, double s);

/// (sum_n |c(n)|^2)^{1/2} = ((1/2pi) int u^2)^{1/2}.
double l2_norm_spectral(const PeriodicField& field);

/// (||u||^2_{L2,spec} + |u|^2_{H^s})^{1/2}.
double sobolev_norm(const PeriodicField& field, double s);

struct Atom {
  double theta;  // radians in [0, 2pi)
  double mass;
};

/// Discrete curvature measure mu = u'' + u: one mass per grid node.
struct CurvatureMeasure {
  std::vector<double> node_masses;
  std::vector<Atom> atoms;       // filled by decompose()
  std::vector<double> density;   // per d theta; node_masses / d theta until decompose() removes atoms
  double total_mass = 0.0;
  double spacing = 0.0;

  int size() const { return static_cast<int>(node_masses.size()); }
};

/// m_j = (u_{j-1} - 2 u_j + u_{j+1}) / dtheta + u_j dtheta.
/// The second differences telescope, so total_mass = dtheta * sum_j u_j exactly.
CurvatureMeasure curvature_measure(const PeriodicField& field);

struct AtomThresholds {
  double tau_abs = 0.05;  // atom mass >= tau_abs * total_mass
  double kappa = 10.0;    // candidate node mass >= kappa * median(node mass)
};

/// Splits a measure into atoms and a density. Candidate nodes exceed
/// kappa * median; contiguous candidates merge into one atom placed at their
/// mass-weighted centroid, kept when the merged mass reaches tau_abs * total.
/// When `mask` is non-empty only nodes with mask[j] set are considered.
CurvatureMeasure decompose(CurvatureMeasure measure, const AtomThresholds& thresholds,
                           const std::vector<bool>& mask = {});

/// Length of the arc carrying the support of a field with an exact-zero tail.
/// Throws DomainError when no circular zero run of length >= pi exists.
double support_arc_length(const PeriodicField& field);

/// |u|_{H^s} / |u|_{H^1} for a field supported in an arc of length eps < pi,
/// with |u|_{H^0} read as the full L2 norm. Compare against pi^{s-1} eps^{1-s}.
double poincare_ratio(const PeriodicField& field, double s);

/// Periodic linear interpolation at an arbitrary angle.
double interpolate(const PeriodicField& field, double theta);

/// Resample to a new grid size by periodic linear interpolation.
PeriodicField resample(const PeriodicField& field, int n);

}  // namespace gaugeopt
