#pragma once

#include "flexsyn/link_params.hpp"
#include "flexsyn/quadrature.hpp"
#include "flexsyn/screw_algebra.hpp"

#include <array>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexsyn {

enum class BasisKind { ClampedFree, FreeFreeElastic };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& name);

class RootFindingError : public std::runtime_error {
 public:
  RootFindingError(const std::string& what, double lo, double hi)
      : std::runtime_error(what), lo_(lo), hi_(hi) {}
  double bracket_lo() const { return lo_; }
  double bracket_hi() const { return hi_; }

 private:
  double lo_, hi_;
};

/// One scalar mode shape on [l1, l1 + L], written as
///   N * (a e^{k s} + b e^{-k s} + c cos(k s) + d sin(k s)),  s = xi - l1
/// for bending modes, and N * (c cos(k s) + d sin(k s)) for axial modes.
/// The growing exponential coefficient is stored pre-scaled so that no
/// cosh/sinh cancellation happens for high modes.
struct ModeShape {
  double wavenumber = 0.0;  // beta_p (bending) or k_p (axial), 1/m
  double scale = 1.0;       // unit L2 normalization
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  double l1 = 0.0;
  double length = 1.0;

  double value(double xi, int order) const;
};

struct ModeSet {
  std::vector<ModeShape> shapes;
  std::vector<double> wavenumbers;
};

/// Dimensionless roots beta_p * l of cos(x)cosh(x) = -1 (clamped-free) or +1
/// (free-free, rigid modes excluded).
std::vector<double> characteristic_roots(BasisKind kind, int r);

ModeSet generate_bending_modes(const LinkParameters& params, BasisKind kind, int r);
ModeSet generate_axial_modes(const LinkParameters& params, BasisKind kind, int r);

/// Per-link spatial basis: r modes per axis, phi(xi) is 3 x 3r with mode p in
/// columns 3p..3p+2 as blockdiag(phi_x, phi_y, phi_z).
class BasisSet {
 public:
  BasisSet() = default;
  BasisSet(const LinkParameters& params, BasisKind kind, int r);

  BasisKind kind() const { return kind_; }
  int modes() const { return r_; }
  int dof() const { return 3 * r_; }
  double l1() const { return l1_; }
  double l2() const { return l2_; }

  const ModeSet& axial() const { return axial_; }
  const ModeSet& bending() const { return bending_; }

  /// Analytic derivative of order 0..4 of phi at xi.
  Eigen::Matrix<double, 3, Eigen::Dynamic> evaluate(double xi, int order) const;

 private:
  BasisKind kind_ = BasisKind::ClampedFree;
  int r_ = 0;
  double l1_ = 0.0, l2_ = 1.0;
  ModeSet axial_;
  ModeSet bending_;
};

/// Free-function form of BasisSet::evaluate.
Eigen::Matrix<double, 3, Eigen::Dynamic> evaluate(const BasisSet& basis, double xi, int order);

using Mat3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

/// Precomputed integrals and node samples of one link's basis.
struct ModalIntegralCache {
  Mat3X phi_integral;       // ∫ phi dxi                    (3 x 3r)
  Mat3X skew_rb_phi;        // ∫ skew(r_b) phi dxi          (3 x 3r)
  MatX gram;                // ∫ phi^T phi dxi              (3r x 3r)
  MatX k4;                  // ∫ phi^T phi'''' dxi          (3r x 3r)
  MatX k2;                  // ∫ phi^T phi'' dxi            (3r x 3r)
  MatX k22;                 // ∫ phi''^T phi'' dxi          (3r x 3r)
  MatX k11;                 // ∫ phi'^T phi' dxi            (3r x 3r)
  MatX stiffness;           // Iv2-weighted k4 - Iv1-weighted k2 (N/m)
  std::array<Mat3X, 4> at_l1;  // phi^(k)(l1), k = 0..3
  std::array<Mat3X, 4> at_l2;  // phi^(k)(l2), k = 0..3

  // Samples on the link quadrature rule used by assembly.
  QuadratureRule rule;
  std::vector<Mat3X> phi_nodes;
  std::vector<Mat3X> phi1_nodes;  // phi' at the same nodes
  std::vector<Mat3X> phi2_nodes;  // phi''
};

/// Builds all integrals on a 64-point composite rule (8 panels x 8 points),
/// checked against a refined rule; node samples use `assembly_points`
/// Gauss–Legendre points. Throws std::runtime_error when the refined check
/// disagrees by more than 1e-8 relative.
ModalIntegralCache build_cache(const BasisSet& basis, const LinkParameters& params,
                               int assembly_points = 16);

/// r_xi(xi) = phi(xi) eta, v_xi(xi) = phi(xi) eta_dot and their derivatives.
struct DeformationField {
  std::function<Vec3(double xi, int order)> displacement;
  std::function<Vec3(double xi)> rate;

  static DeformationField zero();
};

DeformationField reconstruct_deformation(const BasisSet& basis, const VecX& eta,
                                         const VecX& eta_dot);

}  // namespace flexsyn
