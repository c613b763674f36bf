#pragma once

#include "flexsyn/link_params.hpp"
#include "flexsyn/modal_basis.hpp"
#include "flexsyn/quadrature.hpp"
#include "flexsyn/screw_algebra.hpp"

#include <functional>
#include <vector>

namespace flexsyn {

struct LinkOptions {
  // Rotary inertia of the cross-section, J = rho * l * diag(Iy + Iz, Iy, Iz).
  bool section_inertia = false;
  // Moments of the internal elastic forces in the link balance.
  bool elastic_moment_terms = false;
};

struct LinkKinematicState {
  Mat3 R = Mat3::Identity();  // body -> inertial
  Vec3 r = Vec3::Zero();      // body-frame coordinates of the body origin
  Twist z;                    // (v, w) in body axes

  LinkKinematicState() { z.frame = FrameId::body(1); }
};

struct ElasticityMatrices {
  Mat3 Iv1;
  Mat3 Iv2;
  Mat3 H;
};

ElasticityMatrices elasticity(const LinkParameters& params);

/// Deformation sampled on a quadrature rule. Derivative samples are optional
/// and only needed for the elastic moment terms.
struct LinkSamples {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<Vec3> r_xi;   // displacement
  std::vector<Vec3> v_xi;   // displacement rate
  std::vector<Vec3> r1_xi;  // r_xi'
  std::vector<Vec3> r2_xi;  // r_xi''

  std::size_t size() const { return nodes.size(); }
  bool has_derivatives() const { return r1_xi.size() == nodes.size(); }
};

LinkSamples sample(const QuadratureRule& rule, const DeformationField& field,
                   bool derivatives = true);
LinkSamples sample(const ModalIntegralCache& cache, const VecX& eta, const VecX& eta_dot,
                   bool derivatives = false);

/// r_ob = r_i + [xi, 0, 0] + r_xi(xi). Throws std::out_of_range off [l1, l2].
Vec3 centerline_position(const LinkParameters& params, const LinkKinematicState& state,
                         const DeformationField& deformation, double xi);

Mat3 section_inertia(const LinkParameters& params);

Mat6 mass_matrix(const LinkParameters& params, const LinkKinematicState& state,
                 const LinkSamples& samples, const LinkOptions& options = {});

/// [rhoA ∫ a dxi; rhoA ∫ skew(r_ob) a dxi] for the element acceleration
/// a = v_xi' sampled at the nodes.
Vec6 coupling_vector(const LinkParameters& params, const LinkKinematicState& state,
                     const LinkSamples& samples, const std::vector<Vec3>& vdot_xi);

/// Modal form of coupling_vector: G* = coupling_matrix * eta_ddot (6 x 3r).
MatX coupling_matrix(const LinkParameters& params, const LinkKinematicState& state,
                     const LinkSamples& samples, const std::vector<Mat3X>& phi_nodes);

/// ∫ skew(r') Iv1 r' + skew(r'') Iv2 r'' dxi.
Vec3 elastic_moment_terms(const LinkParameters& params, const LinkSamples& samples);

Vec6 bias_vector(const LinkParameters& params, const LinkKinematicState& state,
                 const LinkSamples& samples, const Vec3& gravity,
                 const LinkOptions& options = {});

/// Base and tip wrenches in body axes, r_base = r_ob(l1), r_tip = r_ob(l2).
Vec6 end_wrench_vector(const Wrench& base, const Wrench& tip, const Vec3& r_base,
                       const Vec3& r_tip);

struct LinkAccelerations {
  Vec3 vdot = Vec3::Zero();
  Vec3 wdot = Vec3::Zero();
  std::function<Vec3(double xi)> vdot_xi;
};

/// Pointwise residual of the displacement equation; zero for exact motion.
Vec3 displacement_residual(const LinkParameters& params, const LinkKinematicState& state,
                           const DeformationField& deformation, const LinkAccelerations& acc,
                           const Vec3& gravity, double xi);

struct BoundaryResiduals {
  Vec3 base_force;
  Vec3 tip_force;
  Vec3 base_moment;
  Vec3 tip_moment;
};

BoundaryResiduals boundary_residuals(const LinkParameters& params,
                                     const DeformationField& deformation, const Wrench& base,
                                     const Wrench& tip);

/// Kinetic energy of the link, including section rotary inertia when enabled.
double kinetic_energy(const LinkParameters& params, const LinkKinematicState& state,
                      const LinkSamples& samples, const LinkOptions& options = {});

}  // namespace flexsyn
