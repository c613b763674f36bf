#include "flexsyn/joints.hpp"

#include <doctest.h>

using namespace flexsyn;

namespace {

struct MovingLink {
  LinkParameters p;
  BasisSet basis;
  Mat3 R0;
  Vec3 r0, v0, a, w;
  VecX eta0, eta_dot0, eta_ddot;

  MovingLink() : basis(p, BasisKind::FreeFreeElastic, 2) {
    R0 = rotation_exp(Vec3(0.3, -0.5, 0.2));
    r0 = Vec3(0.1, 0.2, -0.3);
    v0 = Vec3(0.4, -0.1, 0.3);
    a = Vec3(-0.7, 0.5, 0.2);
    w = Vec3(0.6, -0.4, 0.9);
    eta0 = VecX(6);
    eta_dot0 = VecX(6);
    eta_ddot = VecX(6);
    eta0 << 0.01, -0.02, 0.015, 0.001, 0.003, -0.002;
    eta_dot0 << 0.1, 0.05, -0.2, 0.02, -0.01, 0.03;
    eta_ddot << 1.0, -2.0, 0.5, 0.3, 0.7, -0.4;
  }

  LinkKinematicState state(double t) const {
    LinkKinematicState s;
    s.R = R0 * rotation_exp(t * w);
    s.r = r0 + v0 * t + 0.5 * a * t * t;
    s.z.lin = v0 + a * t;
    s.z.ang = w;
    return s;
  }
  VecX eta(double t) const { return eta0 + eta_dot0 * t + 0.5 * eta_ddot * t * t; }
  VecX eta_dot(double t) const { return eta_dot0 + eta_ddot * t; }

  EndpointMotion base(double t) const {
    const Mat3X phi = basis.evaluate(p.l1, 0);
    return endpoint_motion(state(t), p.l1, phi * eta(t), phi * eta_dot(t), phi);
  }
};

}  // namespace

TEST_CASE("joint kinds") {
  CHECK(joint_kind_from_string("revolute") == JointKind::Revolute);
  CHECK(to_string(JointKind::Free) == "free");
  CHECK_THROWS_AS(joint_kind_from_string("prismatic"), std::invalid_argument);
  CHECK_THROWS_AS(make_joint(JointKind::Revolute, Vec3::Zero(), 0, 1), std::invalid_argument);
  const JointSpec j = make_joint(JointKind::Revolute, Vec3(0, 0, 2), 0, 1);
  CHECK(j.axes.col(0).norm() == doctest::Approx(1.0));
}

TEST_CASE("projection matrices") {
  const JointSpec fixed = make_joint(JointKind::Fixed, Vec3::UnitZ(), 0, 1);
  ProjectionMatrix pm = projection(fixed, Mat3::Identity(), Vec3(1, 2, 3));
  CHECK((pm.P - Mat6::Identity()).norm() == 0.0);
  CHECK(pm.Q.norm() == 0.0);

  const JointSpec rev = make_joint(JointKind::Revolute, Vec3::UnitZ(), 0, 1);
  pm = projection(rev, Mat3::Identity(), Vec3::Zero());
  CHECK((pm.P.topLeftCorner<3, 3>() - Mat3::Identity()).norm() == 0.0);
  CHECK((pm.P.bottomRightCorner<3, 3>() - Vec3(1, 1, 0).asDiagonal().toDenseMatrix()).norm() < 1e-15);
  CHECK(pm.Q.norm() == 0.0);

  // Q is the rate of P as the child rotates
  const Mat3 R = rotation_exp(Vec3(0.2, 0.7, -0.4));
  const Vec3 w(0.5, -0.3, 0.8);
  const double h = 1e-5;
  const Mat6 fd = (projection(rev, R * rotation_exp(h * w), w).P - projection(rev, R * rotation_exp(-h * w), w).P) / (2 * h);
  CHECK((fd - projection(rev, R, w).Q).norm() < 1e-8);

  const JointSpec free = make_joint(JointKind::Free, Vec3::UnitZ(), 0, 1);
  CHECK(projection(free, R, w).P.norm() == 0.0);
}

TEST_CASE("endpoint screws and twists") {
  LinkParameters p;
  LinkKinematicState st;
  Screw s = endpoint_screw(st, p, DeformationField::zero(), LinkEnd::Tip);
  CHECK((s.lin - Vec3(1, 0, 0)).norm() < 1e-15);
  CHECK(s.ang.norm() < 1e-15);
  DeformationField f = DeformationField::zero();
  f.displacement = [](double xi, int k) { return k == 0 && xi == 1.0 ? Vec3(0, 0.01, 0) : Vec3::Zero(); };
  s = endpoint_screw(st, p, f, LinkEnd::Tip);
  CHECK((s.lin - Vec3(1, 0.01, 0)).norm() < 1e-15);
  st.r = Vec3(0.3, -0.2, 0.5);
  s = endpoint_screw(st, p, DeformationField::zero(), LinkEnd::Base);
  CHECK((s.lin - st.r).norm() < 1e-15);

  LinkKinematicState still;
  const Twist t0 = endpoint_twist(still, p, DeformationField::zero(), LinkEnd::Tip);
  CHECK(t0.lin.norm() + t0.ang.norm() == 0.0);
  still.z.lin = Vec3(1, 0, 0);
  const Twist t1 = endpoint_twist(still, p, DeformationField::zero(), LinkEnd::Tip);
  CHECK((t1.lin - Vec3(1, 0, 0)).norm() == 0.0);

  const BasisSet b(p, BasisKind::FreeFreeElastic, 2);
  VecX eta_dot(6);
  eta_dot << 0.1, 0.2, -0.3, 0.05, 0.02, -0.01;
  const DeformationField field = reconstruct_deformation(b, VecX::Zero(6), eta_dot);
  const Twist tb = endpoint_twist(LinkKinematicState(), p, field, LinkEnd::Base);
  CHECK((tb.lin - b.evaluate(p.l1, 0) * eta_dot).norm() < 1e-12);
}

TEST_CASE("velocity constraint residual") {
  const JointSpec rev = make_joint(JointKind::Revolute, Vec3::UnitZ(), 0, 1);
  const EndpointMotion ground = ground_endpoint(Vec3::Zero());
  LinkKinematicState still;
  const Mat3X phi = Mat3X::Zero(3, 6);
  EndpointMotion child = endpoint_motion(still, 0.0, Vec3::Zero(), Vec3::Zero(), phi);
  CHECK(velocity_constraint_residual(projection(rev, still.R, still.z.ang), ground, child).norm() == 0.0);

  // spinning about the joint axis is allowed
  LinkKinematicState spin;
  spin.z.ang = Vec3(0, 0, 1);
  child = endpoint_motion(spin, 0.0, Vec3::Zero(), Vec3::Zero(), phi);
  CHECK(velocity_constraint_residual(projection(rev, spin.R, spin.z.ang), ground, child).norm() < 1e-15);
  const JointSpec fixed = make_joint(JointKind::Fixed, Vec3::UnitZ(), 0, 1);
  CHECK(velocity_constraint_residual(projection(fixed, spin.R, spin.z.ang), ground, child).norm() ==
        doctest::Approx(1.0));

  // fixed joint between rigid links with a consistently chained child twist
  LinkParameters p;
  LinkKinematicState parent;
  parent.R = rotation_exp(Vec3(0.4, 0.1, -0.6));
  parent.r = Vec3(0.2, 0.3, -0.1);
  parent.z.lin = Vec3(0.5, -0.2, 0.7);
  parent.z.ang = Vec3(-0.3, 0.9, 0.4);
  const EndpointMotion tip = endpoint_motion(parent, p.l2, Vec3::Zero(), Vec3::Zero(), phi);
  LinkKinematicState c;
  c.R = parent.R;
  c.r = c.R.transpose() * tip.position;
  c.z.ang = parent.z.ang;
  c.z.lin = c.R.transpose() * tip.twist.head<3>() - c.z.ang.cross(c.r);
  const EndpointMotion base = endpoint_motion(c, 0.0, Vec3::Zero(), Vec3::Zero(), phi);
  CHECK(velocity_constraint_residual(projection(fixed, c.R, c.z.ang), tip, base).norm() < 1e-12);
}

TEST_CASE("acceleration constraint rows") {
  const JointSpec rev = make_joint(JointKind::Revolute, Vec3(0.3, 0.2, 1.0), 0, 1);
  const EndpointMotion ground = ground_endpoint(Vec3::Zero());
  LinkKinematicState still;
  const EndpointMotion rest = endpoint_motion(still, 0.0, Vec3::Zero(), Vec3::Zero(), Mat3X::Zero(3, 6));
  const ProjectionMatrix p0 = projection(rev, still.R, still.z.ang);
  ConstraintRows rows = acceleration_constraint_rows(p0, ground, rest);
  CHECK(rows.bias.norm() == 0.0);
  CHECK((rows.child_twist - p0.P * rest.C).norm() < 1e-15);
  CHECK((rows.reaction - (Mat6::Identity() - p0.P)).norm() < 1e-15);

  // rows applied to the accelerations give the rate of P (V_child - V_parent)
  const MovingLink m;
  auto residual = [&](double t) {
    const LinkKinematicState s = m.state(t);
    return Vec6(-velocity_constraint_residual(projection(rev, s.R, s.z.ang), ground, m.base(t)));
  };
  const double t = 0.2, h = 1e-4;
  const Vec6 fd = (residual(t + h) - residual(t - h)) / (2 * h);
  const LinkKinematicState s = m.state(t);
  rows = acceleration_constraint_rows(projection(rev, s.R, s.z.ang), ground, m.base(t));
  Vec6 zdot;
  zdot << m.a, Vec3::Zero();
  const Vec6 predicted = rows.child_twist * zdot + rows.child_modal * m.eta_ddot + rows.bias;
  CHECK((predicted - fd).norm() < 1e-6 * std::max(1.0, fd.norm()));
}

TEST_CASE("position constraint residual") {
  const JointSpec rev = make_joint(JointKind::Revolute, Vec3::UnitZ(), 0, 1);
  const Mat3 Rp = rotation_exp(Vec3(0.1, 0.2, 0.3));
  const Mat3 rel = rotation_exp(Vec3(0, 0, 0.4));
  CHECK(position_constraint_residual(rev, Rp, Rp * rel, Vec3(1, 0, 0), Vec3(1, 0, 0), rel).norm() < 1e-14);
  // rotation about the joint axis is free
  const Mat3 turned = Rp * rel * rotation_exp(Vec3(0, 0, 0.5));
  CHECK(position_constraint_residual(rev, Rp, turned, Vec3(1, 0, 0), Vec3(1, 0, 0), rel).norm() < 1e-12);
  const Vec6 gap = position_constraint_residual(rev, Rp, Rp * rel, Vec3(1, 0, 0), Vec3(1, 0.001, 0), rel);
  CHECK(gap.head<3>().norm() == doctest::Approx(0.001).epsilon(1e-9));
  const JointSpec free = make_joint(JointKind::Free, Vec3::UnitZ(), 0, 1);
  CHECK(position_constraint_residual(free, Rp, Rp, Vec3::Zero(), Vec3::Ones(), rel).norm() == 0.0);
}
