#pragma once

#include "flexsyn/link_model.hpp"
#include "flexsyn/modal_basis.hpp"
#include "flexsyn/screw_algebra.hpp"

#include <string>

namespace flexsyn {

enum class JointKind { Fixed, Revolute, Free };

std::string to_string(JointKind kind);
JointKind joint_kind_from_string(const std::string& name);

/// Joint between link `parent` (0 = ground) and link `child`. Axis columns
/// are unit vectors in the child body frame.
struct JointSpec {
  JointKind kind = JointKind::Fixed;
  Mat3X axes = Mat3X::Zero(3, 0);
  int parent = 0;
  int child = 1;
};

/// Normalizes `axis`; throws std::invalid_argument for a zero axis on a
/// revolute joint.
JointSpec make_joint(JointKind kind, const Vec3& axis, int parent, int child);

struct ProjectionMatrix {
  Mat6 P = Mat6::Identity();
  Mat6 Q = Mat6::Zero();
};

/// P and dP/dt for the child orientation R and body rate w.
ProjectionMatrix projection(const JointSpec& joint, const Mat3& R_child, const Vec3& w_child);

enum class LinkEnd { Base, Tip };

/// Body-frame endpoint screw (position; rotation vector of the link).
Screw endpoint_screw(const LinkKinematicState& state, const LinkParameters& params,
                     const DeformationField& deformation, LinkEnd end);

/// Body-frame endpoint twist (v + v_xi(end); w).
Twist endpoint_twist(const LinkKinematicState& state, const LinkParameters& params,
                     const DeformationField& deformation, LinkEnd end);

/// Inertial description of one link end.
struct EndpointMotion {
  Mat6 C = Mat6::Zero();      // twist map: inertial endpoint twist = C (z + (v_xi; 0))
  Vec6 twist = Vec6::Zero();  // inertial endpoint twist
  Vec6 bias = Vec6::Zero();   // endpoint acceleration at zero link accelerations
  Vec3 position = Vec3::Zero();
  MatX modal;                 // 6 x 3r, [R phi(xi); 0]
  bool ground = false;
};

/// Endpoint at body coordinate xi; r_xi, v_xi and phi are the deformation,
/// its rate and the basis at xi.
EndpointMotion endpoint_motion(const LinkKinematicState& state, double xi, const Vec3& r_xi,
                               const Vec3& v_xi, const Mat3X& phi);

/// Stationary ground attachment point.
EndpointMotion ground_endpoint(const Vec3& anchor);

struct BaumgarteGains {
  bool enabled = false;
  double alpha = 20.0;   // velocity feedback, 1/s
  double beta = 100.0;   // position feedback, 1/s^2
};

/// P (V_parent_tip - V_child_base).
Vec6 velocity_constraint_residual(const ProjectionMatrix& proj, const EndpointMotion& parent_tip,
                                  const EndpointMotion& child_base);

/// Position drift: translational gap of the joint points and the relative
/// rotation change (from `initial_relative`) with the free axis removed.
Vec6 position_constraint_residual(const JointSpec& joint, const Mat3& R_parent,
                                  const Mat3& R_child, const Vec3& parent_point,
                                  const Vec3& child_point, const Mat3& initial_relative);

/// Coefficient blocks of one joint's acceleration-level row.
/// child_twist * zdot_child + parent_twist * zdot_parent + child_modal * etadd_child
/// + parent_modal * etadd_parent + reaction * F_J + bias = 0.
struct ConstraintRows {
  Mat6 child_twist = Mat6::Zero();
  Mat6 parent_twist = Mat6::Zero();
  MatX child_modal;
  MatX parent_modal;
  Mat6 reaction = Mat6::Zero();
  Vec6 bias = Vec6::Zero();
};

ConstraintRows acceleration_constraint_rows(const ProjectionMatrix& proj,
                                            const EndpointMotion& parent_tip,
                                            const EndpointMotion& child_base,
                                            const BaumgarteGains& gains = {});

}  // namespace flexsyn
