#pragma once

#include <string>
#include <vector>

namespace flexsyn {

/// Geometry and material of one uniform flexible link. Endpoint offsets are
/// measured along the body x axis from the body frame origin.
struct LinkParameters {
  double rho = 2700.0;  // kg/m^3
  double E = 7e10;      // Pa
  double A = 1e-4;      // m^2
  double l1 = 0.0;      // m
  double l2 = 1.0;      // m
  double Iy = 1e-9;     // m^4
  double Iz = 1e-9;     // m^4

  double length() const { return l2 - l1; }
  double rho_a() const { return rho * A; }
  double mass() const { return rho * A * (l2 - l1); }

  /// Every violated invariant, as "field: message".
  std::vector<std::string> validate() const;
};

}  // namespace flexsyn
