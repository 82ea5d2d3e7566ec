#pragma once

#include <stdexcept>
#include <string>

namespace gaugeopt {

/// Input lies outside the domain of an operation (u too small, bad exponent base, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Constraint set admits no feasible gauge.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An iterative solver stopped without meeting its tolerance.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

}  // namespace gaugeopt
