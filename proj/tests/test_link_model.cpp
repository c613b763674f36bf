#include "flexsyn/link_model.hpp"

#include <doctest.h>

#include <cmath>

using namespace flexsyn;

namespace {

LinkParameters unit_density(double l1, double l2) {
  LinkParameters p;
  p.rho = 1.0;
  p.A = 1.0;
  p.l1 = l1;
  p.l2 = l2;
  return p;
}

LinkSamples rigid_samples(const LinkParameters& p) {
  return sample(gauss_legendre(8, p.l1, p.l2), DeformationField::zero());
}

DeformationField cubic_cantilever(const LinkParameters& p, double F) {
  const double l = p.length(), c = F / (6.0 * p.E * p.Iz);
  DeformationField f;
  f.displacement = [=](double xi, int k) {
    const double s = xi - p.l1;
    switch (k) {
      case 0: return Vec3(0, c * (3 * l * s * s - s * s * s), 0);
      case 1: return Vec3(0, c * (6 * l * s - 3 * s * s), 0);
      case 2: return Vec3(0, c * (6 * l - 6 * s), 0);
      case 3: return Vec3(0, -6 * c, 0);
      default: return Vec3(0, 0, 0);
    }
  };
  f.rate = [](double) { return Vec3::Zero(); };
  return f;
}

}  // namespace

TEST_CASE("link parameter validation") {
  LinkParameters p;
  CHECK(p.validate().empty());
  p.l2 = p.l1;
  CHECK_FALSE(p.validate().empty());
  p = LinkParameters();
  p.E = -1.0;
  CHECK_FALSE(p.validate().empty());
}

TEST_CASE("centerline position") {
  const LinkParameters p = unit_density(0.0, 1.0);
  LinkKinematicState st;
  CHECK((centerline_position(p, st, DeformationField::zero(), 0.4) - Vec3(0.4, 0, 0)).norm() < 1e-15);
  st.r = Vec3(1, 0, 0);
  DeformationField f = DeformationField::zero();
  f.displacement = [](double, int k) { return k == 0 ? Vec3(0, 0.01, 0) : Vec3::Zero(); };
  CHECK((centerline_position(p, st, f, 0.5) - Vec3(1.5, 0.01, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(centerline_position(p, st, f, 1.5), std::out_of_range);
}

TEST_CASE("mass matrix of a rigid uniform rod") {
  LinkKinematicState st;
  {
    const LinkParameters p = unit_density(-0.5, 0.5);
    const Mat6 M = mass_matrix(p, st, rigid_samples(p));
    Vec6 d;
    d << 1, 1, 1, 0, 1.0 / 12, 1.0 / 12;
    CHECK((M - Mat6(d.asDiagonal())).cwiseAbs().maxCoeff() < 1e-14);
  }
  {
    const LinkParameters p = unit_density(0.0, 1.0);
    const Mat6 M = mass_matrix(p, st, rigid_samples(p));
    CHECK((M.topRightCorner<3, 3>() + skew(Vec3(0.5, 0, 0))).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((M.bottomRightCorner<3, 3>() - Vec3(0, 1.0 / 3, 1.0 / 3).asDiagonal().toDenseMatrix())
              .cwiseAbs()
              .maxCoeff() < 1e-14);
  }
  {
    LinkParameters p = unit_density(0.0, 1.0);
    LinkOptions opt;
    opt.section_inertia = true;
    const Mat6 M = mass_matrix(p, st, rigid_samples(p), opt);
    CHECK(M(3, 3) == doctest::Approx(p.rho * (p.Iy + p.Iz)));
  }
}

TEST_CASE("mass matrix symmetry on deformed states") {
  LinkParameters p;
  const BasisSet b(p, BasisKind::ClampedFree, 2);
  const ModalIntegralCache c = build_cache(b, p);
  LinkKinematicState st;
  st.R = rotation_exp(Vec3(0.3, -0.2, 1.0));
  st.r = Vec3(0.2, -0.4, 0.1);
  VecX eta(6);
  eta << 0.01, 0.03, -0.02, 0.001, 0.004, 0.002;
  const Mat6 M = mass_matrix(p, st, sample(c, eta, VecX::Zero(6)));
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-10 * M.cwiseAbs().maxCoeff());
}

TEST_CASE("coupling vector") {
  const LinkParameters p = unit_density(0.0, 1.0);
  const LinkKinematicState st;
  const LinkSamples s = rigid_samples(p);
  CHECK(coupling_vector(p, st, s, std::vector<Vec3>(s.size(), Vec3::Zero())).norm() == 0.0);
  const double a = 0.7;
  const Vec6 g = coupling_vector(p, st, s, std::vector<Vec3>(s.size(), Vec3(0, a, 0)));
  Vec6 expected;
  expected << 0, a, 0, 0, 0, a / 2;
  CHECK((g - expected).norm() < 1e-14);

  // modal form agrees with the pointwise form
  LinkParameters q;
  const BasisSet b(q, BasisKind::ClampedFree, 2);
  const ModalIntegralCache c = build_cache(b, q);
  LinkKinematicState st2;
  st2.r = Vec3(0.1, 0.2, -0.1);
  VecX eta(6), eta_ddot(6);
  eta << 0.01, 0.02, -0.01, 0.0, 0.003, 0.001;
  eta_ddot << 0.5, -1.0, 2.0, 0.3, 0.1, -0.4;
  const LinkSamples s2 = sample(c, eta, VecX::Zero(6));
  std::vector<Vec3> acc;
  for (const Mat3X& phi : c.phi_nodes) acc.push_back(phi * eta_ddot);
  const Vec6 direct = coupling_vector(q, st2, s2, acc);
  const Vec6 modal = coupling_matrix(q, st2, s2, c.phi_nodes) * eta_ddot;
  CHECK((direct - modal).norm() < 1e-9 * direct.norm());
}

TEST_CASE("bias vector") {
  const LinkParameters p = unit_density(-0.5, 0.5);
  LinkKinematicState st;
  const Vec3 g(0, -9.81, 0);
  Vec6 h = bias_vector(p, st, rigid_samples(p), g);
  CHECK((h.head<3>() - Vec3(0, 9.81, 0)).norm() < 1e-13);
  CHECK(h.tail<3>().norm() < 1e-13);

  st.z.ang = Vec3(0, 0, 1);
  h = bias_vector(p, st, rigid_samples(p), Vec3::Zero());
  CHECK(h.norm() < 1e-13);

  // rod spinning about its end: mass-weighted centripetal acceleration points at the pivot
  const LinkParameters q = unit_density(0.0, 1.0);
  h = bias_vector(q, st, rigid_samples(q), Vec3::Zero());
  CHECK((h.head<3>() - Vec3(-0.5, 0, 0)).norm() < 1e-13);
}

TEST_CASE("end wrench vector") {
  Wrench zero, fb, ft;
  CHECK(end_wrench_vector(zero, zero, Vec3::Zero(), Vec3(1, 0, 0)).norm() == 0.0);
  fb.lin = Vec3(0, 1, 0);
  Vec6 e;
  e << 0, 1, 0, 0, 0, 0;
  CHECK((end_wrench_vector(fb, zero, Vec3::Zero(), Vec3(1, 0, 0)) - e).norm() == 0.0);
  ft.lin = -fb.lin;
  const Vec6 both = end_wrench_vector(fb, ft, Vec3(-0.5, 0, 0), Vec3(0.5, 0, 0));
  CHECK((both.head<3>() - Vec3(0, 2, 0)).norm() == 0.0);
  CHECK(both.tail<3>().norm() < 1e-15);
}

TEST_CASE("displacement residual") {
  LinkParameters p;
  LinkKinematicState st;
  LinkAccelerations acc;
  CHECK(displacement_residual(p, st, DeformationField::zero(), acc, Vec3::Zero(), 0.3).norm() == 0.0);

  const Vec3 g(0, -9.81, 0);
  st.R = rotation_exp(Vec3(0.1, 0.4, -0.3));
  acc.vdot = st.R.transpose() * g;
  CHECK(displacement_residual(p, st, DeformationField::zero(), acc, g, 0.7).norm() < 1e-14);

  // first clamped-free bending mode in free vibration
  const BasisSet b(p, BasisKind::ClampedFree, 1);
  const double beta = b.bending().wavenumbers[0];
  const double w2 = std::pow(beta, 4) * p.E * p.Iz / p.rho_a();
  VecX eta = VecX::Zero(3);
  eta(1) = 1e-3;
  const DeformationField f = reconstruct_deformation(b, eta, VecX::Zero(3));
  LinkAccelerations modal;
  modal.vdot_xi = [&](double xi) { return Vec3(-w2 * f.displacement(xi, 0)); };
  for (double xi : {0.1, 0.5, 0.9}) {
    const Vec3 res = displacement_residual(p, LinkKinematicState(), f, modal, Vec3::Zero(), xi);
    CHECK(res.norm() <= 1e-6 * w2 * f.displacement(xi, 0).norm());
  }
}

TEST_CASE("boundary residuals") {
  LinkParameters p;
  const BasisSet ff(p, BasisKind::FreeFreeElastic, 2);
  VecX eta(6);
  eta << 0.01, 0.02, 0.03, 0.004, 0.005, 0.006;
  const Wrench zero;
  BoundaryResiduals r = boundary_residuals(p, reconstruct_deformation(ff, VecX::Zero(6), VecX::Zero(6)), zero, zero);
  CHECK(r.base_force.norm() + r.tip_force.norm() + r.base_moment.norm() + r.tip_moment.norm() == 0.0);
  r = boundary_residuals(p, reconstruct_deformation(ff, eta, VecX::Zero(6)), zero, zero);
  CHECK(r.base_moment.norm() < 1e-9);
  CHECK(r.tip_moment.norm() < 1e-9);

  const BasisSet cf(p, BasisKind::ClampedFree, 2);
  r = boundary_residuals(p, reconstruct_deformation(cf, eta, VecX::Zero(6)), zero, zero);
  CHECK(r.tip_moment.norm() < 1e-9);
  CHECK(r.base_moment.norm() > 1e-6);

  // static cantilever with a tip force F (applied) and the clamp reaction at the base
  const double F = 2.0;
  Wrench base, tip;
  base.lin = Vec3(0, -F, 0);
  base.ang = Vec3(0, 0, -F * p.length());
  tip.lin = Vec3(0, -F, 0);
  r = boundary_residuals(p, cubic_cantilever(p, F), base, tip);
  CHECK(r.base_force.norm() < 1e-9);
  CHECK(r.tip_force.norm() < 1e-9);
  CHECK(r.base_moment.norm() < 1e-9);
  CHECK(r.tip_moment.norm() < 1e-9);
}

TEST_CASE("kinetic energy of a spinning rod") {
  const LinkParameters p = unit_density(0.0, 1.0);
  LinkKinematicState st;
  st.z.ang = Vec3(0, 0, 2.0);
  CHECK(kinetic_energy(p, st, rigid_samples(p)) == doctest::Approx(0.5 * (1.0 / 3.0) * 4.0).epsilon(1e-13));
}
