#pragma once

#include "gaugeopt/periodic.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <vector>

namespace gaugeopt {

/// "theta,u" header, one row per grid node.
void write_gauge_csv(std::ostream& os, const PeriodicField& u);

/// Reads the format above. Angles must sit on the uniform grid of the row
/// count; throws std::invalid_argument naming the offending line otherwise.
PeriodicField read_gauge_csv(std::istream& is);

/// Boundary polyline with atom markers, plus a strip plotting the cone
/// multiplier against theta on its own axis when `eta` is non-empty.
void write_shape_svg(std::ostream& os, const PeriodicField& u, const std::vector<Atom>& atoms,
                     const Eigen::VectorXd& eta = {});

}  // namespace gaugeopt
