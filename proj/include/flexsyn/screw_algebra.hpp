#pragma once

#include <Eigen/Dense>

#include <cassert>

namespace flexsyn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Coordinate frame tag. Index 0 is the inertial frame, i >= 1 the body frame
/// of link i.
struct FrameId {
  int index = 0;

  static constexpr FrameId inertial() { return {0}; }
  static constexpr FrameId body(int i) { return {i}; }

  friend constexpr bool operator==(FrameId a, FrameId b) { return a.index == b.index; }
};

namespace detail {

/// Common storage for the three Plücker-style 6-vectors. Arithmetic between
/// different frames is a contract violation (asserted in debug builds).
template <class Derived>
struct SixVector {
  Vec3 lin = Vec3::Zero();
  Vec3 ang = Vec3::Zero();
  FrameId frame = FrameId::inertial();

  Vec6 stacked() const {
    Vec6 out;
    out << lin, ang;
    return out;
  }

  static Derived from_stacked(const Vec6& x, FrameId f) {
    Derived d;
    d.lin = x.head<3>();
    d.ang = x.tail<3>();
    d.frame = f;
    return d;
  }

  friend Derived operator+(const Derived& a, const Derived& b) {
    assert(a.frame == b.frame && "screw arithmetic across frames");
    Derived d;
    d.lin = a.lin + b.lin;
    d.ang = a.ang + b.ang;
    d.frame = a.frame;
    return d;
  }

  friend Derived operator-(const Derived& a, const Derived& b) {
    assert(a.frame == b.frame && "screw arithmetic across frames");
    Derived d;
    d.lin = a.lin - b.lin;
    d.ang = a.ang - b.ang;
    d.frame = a.frame;
    return d;
  }

  bool all_finite() const { return lin.allFinite() && ang.allFinite(); }
};

}  // namespace detail

/// Pose screw (position; rotation vector).
struct Screw : detail::SixVector<Screw> {};

/// Velocity screw (linear velocity; angular velocity).
struct Twist : detail::SixVector<Twist> {};

/// Force screw (force; torque).
struct Wrench : detail::SixVector<Wrench> {};

Mat3 skew(const Vec3& v);

/// Ad_z = [[skew(w), skew(v)], [0, skew(w)]].
Mat6 twist_adjoint(const Twist& z);
Mat6 twist_adjoint(const Vec6& z);

/// X = [[R, skew(r0) R], [0, R]]. Throws std::invalid_argument when R is not a
/// rotation within 1e-6.
Mat6 adjoint_transform(const Mat3& R, const Vec3& r0);

/// d/dt of a body-frame vector seen from the inertial frame: v + w x r.
Vec3 inertial_derivative_vec(const Vec3& r, const Vec3& v_body, const Vec3& w);

/// Second inertial derivative of a body-frame vector:
/// vd - skew(r) wd + 2 w x v + w x (w x r).
Vec3 inertial_second_derivative(const Vec3& r, const Vec3& v, const Vec3& w, const Vec3& vd,
                                const Vec3& wd);

/// -X Ad_z. Exact for the frame flow X(t) = X(0) exp(-t ad_z), i.e. when z is
/// read as the twist of the inertial frame observed from frame i.
Mat6 transform_dot(const Mat6& X, const Twist& z);

/// X Ad_z, the rate of X(R, R r) when R' = R skew(w) and the body origin
/// moves with the body-frame twist z.
Mat6 transform_rate(const Mat6& X, const Twist& z);

bool is_rotation(const Mat3& R, double tol = 1e-9);

/// Closest rotation in the Frobenius sense (polar factor).
Mat3 orthonormalize(const Mat3& M);

Mat3 rotation_exp(const Vec3& theta);
Vec3 rotation_log(const Mat3& R);

}  // namespace flexsyn
