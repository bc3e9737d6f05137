#pragma once

#include <stdexcept>
#include <string>

namespace eklab {

// A candidate potential left the space of Kahler metrics: the metric built
// from it stopped being positive definite (or came within the safety floor).
struct AdmissibilityError : std::runtime_error {
  AdmissibilityError(const std::string& msg, int node, double eig)
      : std::runtime_error(msg), worst_node(node), min_eigenvalue(eig) {}
  int worst_node = -1;
  double min_eigenvalue = 0.0;
};

// Smallest metric eigenvalue tolerated before a state is rejected.
inline constexpr double admissibility_floor = 1e-8;

}  // namespace eklab
