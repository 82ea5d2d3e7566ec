#pragma once

// Regularity diagnostics for computed optima: atom-based classification,
// corner-gap bounds, localized test directions, the coercivity probe and
// finite-difference derivative checks.

#include "gaugeopt/functional.hpp"
#include "gaugeopt/periodic.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gaugeopt {

enum class VerdictKind { Smooth, Polygonal, Mixed, Inconclusive };
std::string to_string(VerdictKind kind);

struct ClassifyConfig {
  AtomThresholds thresholds;
  double frac_min = 0.7;  // atom share of the inside mass for Polygonal
  int top_nodes = 12;     // node count for the concentration diagnostic
};

struct RegularityVerdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::vector<Atom> atoms;       // coarse resolution, inside set only
  std::vector<Atom> atoms_fine;
  double max_density = 0.0;      // largest non-atom density on the inside set
  bool stability = false;        // atom count unchanged from N to 2N
  double atom_mass_fraction = 0.0;
  double top_node_fraction = 0.0;  // share of inside mass on the top_nodes heaviest nodes
  double inside_mass = 0.0;
  int inside_nodes = 0;
};

/// `fine` must come from the same body at twice the resolution. An empty
/// `inside` means every node; otherwise it is indexed on the coarse grid.
RegularityVerdict classify(const CurvatureMeasure& coarse, const CurvatureMeasure& fine,
                           const std::vector<bool>& inside = {}, const ClassifyConfig& config = {});

/// Convenience overload for a single sampled gauge: the coarse measure comes
/// from every other sample, so both resolutions see the same body.
RegularityVerdict classify(const PeriodicField& u, const std::vector<bool>& inside = {},
                           const ClassifyConfig& config = {});

struct CornerGap {
  std::optional<double> gap;  // minimal angular extent theta3 - theta1 of three consecutive atoms
  bool at_most_two_atoms = false;

  /// Upper bound on the number of atoms on an arc of the given length.
  double count_bound(double interval_length) const;
};

/// C = pi^{s-1}. Requires alpha > 0, beta >= 0, gamma >= 0, 0 <= s < 1.
CornerGap corner_gap_bound(double alpha, double beta, double gamma, double s);

/// v'' + v = delta at theta2 on (theta1, theta3), v = 0 elsewhere.
/// Requires 0 < theta2 - theta1, 0 < theta3 - theta2 and theta3 - theta1 < pi.
PeriodicField localized_direction(double theta1, double theta2, double theta3, int n);

struct CoercivityFit {
  std::vector<double> epsilons;
  std::vector<double> q_values;
  double alpha = 0.0;  // Q(eps) ~ -alpha + c1 eps^{1-s} + c2 eps^{2(1-s)}
  double c1 = 0.0;
  double c2 = 0.0;
  double s = 0.0;
  double gamma = 0.0;  // c1 / C
  double beta = 0.0;   // c2 / C^2
  double residual = 0.0;   // RMS fit residual relative to max |Q|
  double condition = 0.0;  // of the selected design matrix
  bool concave_limit = false;
};

struct CornerGapCheck {
  bool fit_ok = false;      // residual below threshold and fitted alpha > 0
  std::string fit_note;     // why the fit was rejected
  CornerGap bound;
  double min_span = 0.0;    // smallest theta_{k+2} - theta_k over consecutive atoms
  bool passed = false;      // every span >= min(gap, pi); meaningful only when fit_ok
};

/// Compares the atom spacing with the bound from a coercivity fit. Negative
/// fitted c1, c2 are replaced by zero, which keeps the fitted curve an upper
/// bound. Spans of at least pi are exempt since the localized direction
/// argument needs theta3 - theta1 < pi.
CornerGapCheck check_corner_gap(const std::vector<Atom>& atoms, const CoercivityFit& fit,
                                double max_residual = 0.05);

/// sin^2 bump of width eps centred at `center`.
PeriodicField bump_direction(double center, double eps, int n);

/// Q(eps) = j''(u)(v, v) / int v'^2 d theta for bumps v of each width.
/// Among the s values, the best residual with alpha > 0 is kept if any exists.
CoercivityFit coercivity_probe(const FunctionalSpec& spec, const GaugeBody& body, double center,
                               const std::vector<double>& eps_list,
                               const std::vector<double>& s_grid = {0.0, 0.25, 0.5, 0.75});

struct DerivativeCheckReport {
  int direction_count = 0;
  double max_rel_error_grad = 0.0;
  double max_rel_error_hess = 0.0;
  bool hessian_checked = false;          // false when the spec has no Area or Perimeter terms
  std::vector<double> refinement_trend;  // max gradient error per mesh level
  std::vector<double> mesh_h;            // mesh size of each level (grid doubles with it)
};

/// Central second difference [j(u+hv) - 2 j(u) + j(u-hv)] / h^2.
double fd_second_form(const FunctionalSpec& spec, const GaugeBody& body, const PeriodicField& v, double h);

/// Gradient against central differences along seeded random band-limited
/// directions. With PDE terms a second level uses mesh_h / 2 on the body
/// resampled to twice the grid size.
DerivativeCheckReport check_gradient(const FunctionalSpec& spec, const GaugeBody& body, int directions,
                                     std::uint64_t seed);

/// Seeded band-limited direction with max |v| = 1, modes 0..max_mode.
PeriodicField random_direction(int n, int max_mode, std::uint64_t seed);

}  // namespace gaugeopt
