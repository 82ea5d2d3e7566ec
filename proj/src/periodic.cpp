#include "gaugeopt/periodic.hpp"

#include "gaugeopt/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <string>

namespace gaugeopt {

PeriodicField::PeriodicField(Eigen::VectorXd samples) : values_(std::move(samples)) {
  const auto n = values_.size();
  if (n < 8 || n % 2 != 0)
    throw std::invalid_argument("PeriodicField: grid size must be even and >= 8, got " + std::to_string(n));
  if (!values_.allFinite()) throw DomainError("PeriodicField: non-finite sample");
}

PeriodicField PeriodicField::constant(int n, double value) {
  return PeriodicField(Eigen::VectorXd::Constant(n, value));
}

PeriodicField PeriodicField::rotated(int shift) const {
  Eigen::VectorXd out(size());
  for (int j = 0; j < size(); ++j) out[j] = (*this)[j - shift];
  return PeriodicField(std::move(out));
}

PeriodicField& PeriodicField::operator+=(const PeriodicField& other) {
  if (other.size() != size()) throw std::invalid_argument("PeriodicField: size mismatch");
  values_ += other.values_;
  return *this;
}

PeriodicField& PeriodicField::operator-=(const PeriodicField& other) {
  if (other.size() != size()) throw std::invalid_argument("PeriodicField: size mismatch");
  values_ -= other.values_;
  return *this;
}

PeriodicField& PeriodicField::operator*=(double s) {
  values_ *= s;
  return *this;
}

PeriodicField operator+(PeriodicField a, const PeriodicField& b) { return a += b; }
PeriodicField operator-(PeriodicField a, const PeriodicField& b) { return a -= b; }
PeriodicField operator*(double s, PeriodicField a) { return a *= s; }
PeriodicField operator*(PeriodicField a, double s) { return a *= s; }

SpectralCoeffs::SpectralCoeffs(int n, std::vector<std::complex<double>> by_fft_index)
    : n_(n), coeffs_(std::move(by_fft_index)) {}

std::complex<double> SpectralCoeffs::operator()(int mode) const {
  if (mode < min_mode() || mode > max_mode()) return {0.0, 0.0};
  return coeffs_[static_cast<std::size_t>(((mode % n_) + n_) % n_)];
}

PeriodicField SpectralCoeffs::inverse() const {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> freq(coeffs_.begin(), coeffs_.end());
  for (auto& c : freq) c *= static_cast<double>(n_);
  std::vector<std::complex<double>> time;
  fft.inv(time, freq);
  Eigen::VectorXd out(n_);
  for (int j = 0; j < n_; ++j) out[j] = time[static_cast<std::size_t>(j)].real();
  return PeriodicField(std::move(out));
}

SpectralCoeffs spectral_coeffs(const PeriodicField& field) {
  Eigen::FFT<double> fft;
  const int n = field.size();
  std::vector<double> in(field.values().data(), field.values().data() + n);
  std::vector<std::complex<double>> out;
  fft.fwd(out, in);
  for (auto& c : out) c /= static_cast<double>(n);
  return SpectralCoeffs(n, std::move(out));
}

namespace {

double weighted_energy(const PeriodicField& field, double s, bool include_zero) {
  const auto c = spectral_coeffs(field);
  double acc = 0.0;
  for (int m = c.min_mode(); m <= c.max_mode(); ++m) {
    if (m == 0 && !include_zero) continue;
    const double w = (m == 0) ? 1.0 : std::pow(std::abs(static_cast<double>(m)), 2.0 * s);
    acc += w * std::norm(c(m));
  }
  return acc;
}

}  // namespace

double sobolev_seminorm(const PeriodicField& field, double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("sobolev_seminorm: s must lie in [0, 1]");
  return std::sqrt(weighted_energy(field, s, false));
}

double l2_norm_spectral(const PeriodicField& field) { return std::sqrt(weighted_energy(field, 0.0, true)); }

double sobolev_norm(const PeriodicField& field, double s) {
  const double l2 = l2_norm_spectral(field);
  const double semi = sobolev_seminorm(field, s);
  return std::sqrt(l2 * l2 + semi * semi);
}

CurvatureMeasure curvature_measure(const PeriodicField& field) {
  const int n = field.size();
  const double h = field.spacing();
  CurvatureMeasure m;
  m.spacing = h;
  m.node_masses.resize(static_cast<std::size_t>(n));
  m.density.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double mass = (field[j - 1] - 2.0 * field[j] + field[j + 1]) / h + field[j] * h;
    m.node_masses[static_cast<std::size_t>(j)] = mass;
    m.density[static_cast<std::size_t>(j)] = mass / h;
  }
  m.total_mass = h * field.values().sum();
  return m;
}

CurvatureMeasure decompose(CurvatureMeasure measure, const AtomThresholds& thresholds,
                           const std::vector<bool>& mask) {
  const int n = measure.size();
  const auto in_mask = [&](int j) { return mask.empty() || mask[static_cast<std::size_t>(j)]; };

  std::vector<double> masked;
  for (int j = 0; j < n; ++j)
    if (in_mask(j)) masked.push_back(measure.node_masses[static_cast<std::size_t>(j)]);
  measure.atoms.clear();
  if (masked.empty()) return measure;

  auto mid = masked.begin() + static_cast<std::ptrdiff_t>(masked.size() / 2);
  std::nth_element(masked.begin(), mid, masked.end());
  const double median = *mid;
  const double accept = thresholds.tau_abs * measure.total_mass;
  // Candidates need a floor so that round-off masses cannot bridge two corners.
  const double candidate = std::max(thresholds.kappa * median, 0.1 * accept);

  std::vector<bool> is_candidate(static_cast<std::size_t>(n));
  int start = -1;
  for (int j = 0; j < n; ++j) {
    is_candidate[static_cast<std::size_t>(j)] = in_mask(j) && measure.node_masses[static_cast<std::size_t>(j)] >= candidate;
    if (!is_candidate[static_cast<std::size_t>(j)] && start < 0) start = j;
  }
  if (start < 0) return measure;  // every node is a candidate: no separable atoms

  const double h = measure.spacing;
  for (int step = 1; step <= n; ++step) {
    const int j0 = (start + step) % n;
    if (!is_candidate[static_cast<std::size_t>(j0)]) continue;
    const int prev = (j0 - 1 + n) % n;
    if (is_candidate[static_cast<std::size_t>(prev)] && step != 1) continue;  // not a cluster head
    double mass = 0.0, moment = 0.0;
    std::vector<int> members;
    for (int k = 0; k < n; ++k) {
      const int j = (j0 + k) % n;
      if (!is_candidate[static_cast<std::size_t>(j)]) break;
      const double mj = measure.node_masses[static_cast<std::size_t>(j)];
      mass += mj;
      moment += mj * (j0 + k);  // unwrapped index
      members.push_back(j);
    }
    if (mass < accept || mass <= 0.0) continue;
    double theta = h * (moment / mass);
    theta = std::fmod(theta, 2.0 * std::numbers::pi);
    if (theta < 0) theta += 2.0 * std::numbers::pi;
    measure.atoms.push_back({theta, mass});
    for (int j : members) measure.density[static_cast<std::size_t>(j)] = 0.0;
  }
  std::sort(measure.atoms.begin(), measure.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.theta < b.theta; });
  return measure;
}

double support_arc_length(const PeriodicField& field) {
  const int n = field.size();
  int best = 0;
  int first_nonzero = -1;
  for (int j = 0; j < n; ++j)
    if (field[j] != 0.0) {
      first_nonzero = j;
      break;
    }
  if (first_nonzero < 0) throw DomainError("support_arc_length: field vanishes identically");
  int run = 0;
  for (int k = 1; k <= n; ++k) {
    if (field[first_nonzero + k] == 0.0) {
      best = std::max(best, ++run);
    } else {
      run = 0;
    }
  }
  const double h = field.spacing();
  if ((best - 1) * h < std::numbers::pi)
    throw DomainError("support_arc_length: no zero run of length >= pi; support arc not identifiable");
  return 2.0 * std::numbers::pi - (best - 1) * h;
}

double poincare_ratio(const PeriodicField& field, double s) {
  if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument("poincare_ratio: s must lie in [0, 1)");
  (void)support_arc_length(field);
  const double h1 = sobolev_seminorm(field, 1.0);
  const double top = (s == 0.0) ? l2_norm_spectral(field) : sobolev_seminorm(field, s);
  return top / h1;
}

double interpolate(const PeriodicField& field, double theta) {
  const double x = theta / field.spacing();
  const double fl = std::floor(x);
  const int j = static_cast<int>(fl);
  const double t = x - fl;
  return (1.0 - t) * field[j] + t * field[j + 1];
}

PeriodicField resample(const PeriodicField& field, int n) {
  return PeriodicField::sample(n, [&](double theta) { return interpolate(field, theta); });
}

}  // namespace gaugeopt
