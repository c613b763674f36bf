#include "flexsyn/joints.hpp"

#include <cmath>
#include <stdexcept>

namespace flexsyn {

std::string to_string(JointKind kind) {
  switch (kind) {
    case JointKind::Fixed: return "fixed";
    case JointKind::Revolute: return "revolute";
    default: return "free";
  }
}

JointKind joint_kind_from_string(const std::string& name) {
  if (name == "fixed") return JointKind::Fixed;
  if (name == "revolute") return JointKind::Revolute;
  if (name == "free") return JointKind::Free;
  throw std::invalid_argument("unknown joint type '" + name + "'");
}

JointSpec make_joint(JointKind kind, const Vec3& axis, int parent, int child) {
  JointSpec j;
  j.kind = kind;
  j.parent = parent;
  j.child = child;
  if (kind == JointKind::Revolute) {
    const double n = axis.norm();
    if (!(n > 1e-12) || !std::isfinite(n)) {
      throw std::invalid_argument("revolute joint axis must be nonzero");
    }
    j.axes = axis / n;
  }
  return j;
}

ProjectionMatrix projection(const JointSpec& joint, const Mat3& R_child, const Vec3& w_child) {
  ProjectionMatrix pm;
  if (joint.kind == JointKind::Free) {
    pm.P.setZero();
    return pm;
  }
  Mat3 prot = Mat3::Identity();
  Mat3 qrot = Mat3::Zero();
  for (Eigen::Index k = 0; k < joint.axes.cols(); ++k) {
    const Vec3 A = joint.axes.col(k);
    const Vec3 a = R_child * A;
    const Vec3 adot = R_child * w_child.cross(A);
    prot -= a * a.transpose();
    qrot -= adot * a.transpose() + a * adot.transpose();
  }
  pm.P.bottomRightCorner<3, 3>() = prot;
  pm.Q.bottomRightCorner<3, 3>() = qrot;
  return pm;
}

namespace {

double end_coordinate(const LinkParameters& params, LinkEnd end) {
  return end == LinkEnd::Base ? params.l1 : params.l2;
}

}  // namespace

Screw endpoint_screw(const LinkKinematicState& state, const LinkParameters& params,
                     const DeformationField& deformation, LinkEnd end) {
  const double xi = end_coordinate(params, end);
  Screw s;
  s.frame = state.z.frame;
  s.lin = state.r + Vec3(xi, 0.0, 0.0) + deformation.displacement(xi, 0);
  s.ang = rotation_log(state.R);
  return s;
}

Twist endpoint_twist(const LinkKinematicState& state, const LinkParameters& params,
                     const DeformationField& deformation, LinkEnd end) {
  Twist t = state.z;
  t.lin += deformation.rate(end_coordinate(params, end));
  return t;
}

EndpointMotion endpoint_motion(const LinkKinematicState& state, double xi, const Vec3& r_xi,
                               const Vec3& v_xi, const Mat3X& phi) {
  const Mat3& R = state.R;
  const Vec3& v = state.z.lin;
  const Vec3& w = state.z.ang;
  const Vec3 re = state.r + Vec3(xi, 0.0, 0.0) + r_xi;

  EndpointMotion m;
  m.C.topLeftCorner<3, 3>() = R;
  m.C.topRightCorner<3, 3>() = -R * skew(re);
  m.C.bottomRightCorner<3, 3>() = R;
  m.twist.head<3>() = R * (v + v_xi + w.cross(re));
  m.twist.tail<3>() = R * w;
  m.bias.head<3>() = R * (2.0 * w.cross(v + v_xi) + w.cross(w.cross(re)));
  m.position = R * re;
  m.modal = MatX::Zero(6, phi.cols());
  m.modal.topRows<3>() = R * phi;
  return m;
}

EndpointMotion ground_endpoint(const Vec3& anchor) {
  EndpointMotion m;
  m.position = anchor;
  m.ground = true;
  return m;
}

Vec6 velocity_constraint_residual(const ProjectionMatrix& proj, const EndpointMotion& parent_tip,
                                  const EndpointMotion& child_base) {
  return proj.P * (parent_tip.twist - child_base.twist);
}

Vec6 position_constraint_residual(const JointSpec& joint, const Mat3& R_parent,
                                  const Mat3& R_child, const Vec3& parent_point,
                                  const Vec3& child_point, const Mat3& initial_relative) {
  Vec6 res = Vec6::Zero();
  res.head<3>() = parent_point - child_point;
  if (joint.kind == JointKind::Free) return Vec6::Zero();
  const Mat3 rel = R_parent.transpose() * R_child;
  Vec3 drift = rotation_log(initial_relative.transpose() * rel);
  for (Eigen::Index k = 0; k < joint.axes.cols(); ++k) {
    const Vec3 A = joint.axes.col(k);
    drift -= A * A.dot(drift);
  }
  res.tail<3>() = R_child * drift;
  return res;
}

ConstraintRows acceleration_constraint_rows(const ProjectionMatrix& proj,
                                            const EndpointMotion& parent_tip,
                                            const EndpointMotion& child_base,
                                            const BaumgarteGains& gains) {
  const Mat6& P = proj.P;
  ConstraintRows rows;
  rows.child_twist = P * child_base.C;
  rows.child_modal = P * child_base.modal;
  if (!parent_tip.ground) {
    rows.parent_twist = -P * parent_tip.C;
    rows.parent_modal = -P * parent_tip.modal;
  }
  rows.reaction = Mat6::Identity() - P;
  const Vec6 dv = child_base.twist - parent_tip.twist;
  rows.bias = P * (child_base.bias - parent_tip.bias) + proj.Q * dv;
  if (gains.enabled) {
    Vec6 dx = Vec6::Zero();
    dx.head<3>() = child_base.position - parent_tip.position;
    rows.bias += P * (gains.alpha * dv + gains.beta * dx);
  }
  return rows;
}

}  // namespace flexsyn
