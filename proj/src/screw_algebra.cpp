#include "flexsyn/screw_algebra.hpp"

#include <cmath>
#include <stdexcept>

namespace flexsyn {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat6 twist_adjoint(const Vec6& z) {
  Mat6 ad = Mat6::Zero();
  const Mat3 wx = skew(z.tail<3>());
  ad.topLeftCorner<3, 3>() = wx;
  ad.topRightCorner<3, 3>() = skew(z.head<3>());
  ad.bottomRightCorner<3, 3>() = wx;
  return ad;
}

Mat6 twist_adjoint(const Twist& z) { return twist_adjoint(z.stacked()); }

Mat6 adjoint_transform(const Mat3& R, const Vec3& r0) {
  if (!is_rotation(R, 1e-6)) {
    throw std::invalid_argument("adjoint_transform: matrix is not a rotation");
  }
  Mat6 X = Mat6::Zero();
  X.topLeftCorner<3, 3>() = R;
  X.topRightCorner<3, 3>() = skew(r0) * R;
  X.bottomRightCorner<3, 3>() = R;
  return X;
}

Vec3 inertial_derivative_vec(const Vec3& r, const Vec3& v_body, const Vec3& w) {
  return v_body + w.cross(r);
}

Vec3 inertial_second_derivative(const Vec3& r, const Vec3& v, const Vec3& w, const Vec3& vd,
                                const Vec3& wd) {
  return vd - r.cross(wd) + 2.0 * w.cross(v) + w.cross(w.cross(r));
}

Mat6 transform_dot(const Mat6& X, const Twist& z) { return -X * twist_adjoint(z); }

Mat6 transform_rate(const Mat6& X, const Twist& z) { return X * twist_adjoint(z); }

bool is_rotation(const Mat3& R, double tol) {
  if (!R.allFinite()) return false;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(R.determinant() - 1.0) <= tol;
}

Mat3 orthonormalize(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  if ((U * V.transpose()).determinant() < 0.0) U.col(2) *= -1.0;
  return U * V.transpose();
}

Mat3 rotation_exp(const Vec3& theta) {
  const double angle = theta.norm();
  if (angle < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(angle, theta / angle).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

}  // namespace flexsyn
