#include "flexsyn/assembly.hpp"

#include <doctest.h>

#include <Eigen/LU>

#include <random>

using namespace flexsyn;

namespace {

ChainModel chain(int n, JointKind kind, int r = 2) {
  std::vector<LinkParameters> links(n);
  std::vector<JointSpec> joints;
  for (int i = 0; i < n; ++i) joints.push_back(make_joint(kind, Vec3::UnitZ(), i, i + 1));
  ChainModel m = make_chain(links, joints, BasisKind::ClampedFree, r);
  return m;
}

ChainState prepared(ChainModel& m) {
  ChainState s = rest_state(m);
  set_reference(m, s);
  return s;
}

}  // namespace

TEST_CASE("single clamped link layout") {
  ChainModel m = chain(1, JointKind::Fixed);
  const ChainState s = prepared(m);
  const SystemMatrices mats = assemble(m, s, ExternalLoads::zero(1));
  REQUIRE(mats.Mq.rows() == 12);
  const LinkEvaluation ev = evaluate_link(m, s, 1);
  CHECK(mats.Mq.block<6, 6>(0, 0).norm() == 0.0);
  CHECK((mats.Mq.block<6, 6>(0, 6) - ev.base.C).norm() < 1e-15);
  CHECK((mats.Mq.block<6, 6>(6, 0) - ev.base.C.transpose()).norm() < 1e-15);
  CHECK((mats.Mq.block<6, 6>(6, 6) - mass_matrix(m.links[0], s.links[0].kin, ev.samples)).norm() < 1e-14);
  CHECK(mats.hq.head<6>().norm() == 0.0);
  CHECK((mats.hq.segment<3>(6) - Vec3(0, m.links[0].mass() * 9.81, 0)).norm() < 1e-12);
  CHECK(mats.MW.topRows(6).norm() < 1e-12);
  CHECK(SystemMatrices::wrench_offset(2) == 24);
  CHECK(SystemMatrices::twist_offset(3) == 30);
}

TEST_CASE("clamped link under gravity: reaction balances weight and modal inertia") {
  ChainModel m = chain(1, JointKind::Fixed);
  const ChainState s = prepared(m);
  const SystemSolution sol = solve(assemble(m, s, ExternalLoads::zero(1)));
  CHECK(sol.residual <= 1e-9);
  CHECK(sol.twist_rates[0].norm() < 1e-9);
  const Vec3 expected = m.links[0].mass() * m.gravity -
                        m.links[0].rho_a() * m.caches[0].phi_integral * sol.modal_accelerations[0];
  CHECK((sol.joint_wrenches[0].head<3>() - expected).norm() < 1e-9);
}

TEST_CASE("homogeneous system has the zero solution") {
  ChainModel m = chain(2, JointKind::Revolute);
  m.gravity = Vec3::Zero();
  const ChainState s = prepared(m);
  const SystemSolution sol = solve(assemble(m, s, ExternalLoads::zero(2)));
  CHECK(sol.q.norm() == 0.0);
  CHECK(sol.eta_ddot.norm() == 0.0);
}

TEST_CASE("free link matches a direct solve of its own equations") {
  ChainModel m = chain(1, JointKind::Free);
  m.options.section_inertia = true;
  ChainState s = prepared(m);
  s.links[0].kin.z.ang = Vec3(0.3, -0.5, 1.0);
  s.links[0].kin.z.lin = Vec3(0.1, 0.2, 0.0);
  s.links[0].eta << 0.01, 0.02, 0.0, 0.0, 0.001, -0.002;
  ExternalLoads loads = ExternalLoads::zero(1);
  loads.tip[0].lin = Vec3(0.0, 0.5, 0.2);
  const SystemMatrices mats = assemble(m, s, loads);
  const SystemSolution sol = solve(mats);

  const int nm = m.modal_dof();
  MatX A(6 + nm, 6 + nm);
  A.topLeftCorner(6, 6) = mats.Mq.block<6, 6>(6, 6);
  A.topRightCorner(6, nm) = mats.MW.middleRows(6, 6);
  A.bottomLeftCorner(nm, 6) = mats.MDphi.middleCols(6, 6);
  A.bottomRightCorner(nm, nm) = mats.MWphi;
  VecX b(6 + nm);
  b.head(6) = mats.Fq.segment<6>(6) - mats.hq.segment<6>(6);
  b.tail(nm) = mats.Fphi - mats.hphi;
  const VecX x = A.partialPivLu().solve(b);
  CHECK((x.head(6) - sol.twist_rates[0]).norm() < 1e-9 * x.norm());
  CHECK((x.tail(nm) - sol.modal_accelerations[0]).norm() < 1e-9 * x.norm());
  CHECK(sol.joint_wrenches[0].norm() < 1e-12);
}

TEST_CASE("extracted solution reproduces the stacked system") {
  ChainModel m = chain(3, JointKind::Revolute);
  ChainState s = prepared(m);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.3);
  for (LinkState& ls : s.links) {
    ls.kin.z.ang = Vec3(n(rng), n(rng), n(rng));
    for (int k = 0; k < ls.eta.size(); ++k) ls.eta(k) = 0.01 * n(rng);
  }
  const SystemMatrices mats = assemble(m, s, ExternalLoads::zero(3));
  const SystemSolution sol = solve(mats);
  VecX x(sol.q.size() + sol.eta_ddot.size());
  x << sol.q, sol.eta_ddot;
  const VecX rhs = mats.rhs();
  CHECK((mats.system_matrix() * x - rhs).norm() <= 1e-12 * rhs.norm());
  for (int k = 0; k < 3; ++k) {
    CHECK((sol.q.segment<6>(SystemMatrices::wrench_offset(k)) - sol.joint_wrenches[k]).norm() == 0.0);
    CHECK((sol.q.segment<6>(SystemMatrices::twist_offset(k + 1)) - sol.twist_rates[k]).norm() == 0.0);
  }
  for (int k = 0; k < 3; ++k) {
    CHECK(mats.MDphi.middleCols(SystemMatrices::wrench_offset(k), 6).norm() == 0.0);
  }
}

TEST_CASE("schur check") {
  ChainModel m = chain(1, JointKind::Revolute);
  const ChainState s = prepared(m);
  SystemMatrices mats = assemble(m, s, ExternalLoads::zero(1));
  const SchurReport rep = schur_check(mats);
  CHECK_FALSE(rep.singular);
  CHECK(rep.condition_schur < 1e6);
  CHECK(rep.det_identity_error < 1e-6);
  CHECK(rep.force_columns_zero);

  mats.Mq.row(1) = mats.Mq.row(0);
  mats.MW.row(1) = mats.MW.row(0);
  CHECK(schur_check(mats).singular);
  CHECK_THROWS_AS(solve(mats), SingularSystem);
}

TEST_CASE("determinant identity on random small systems") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int links = 1; links <= 3; ++links) {
    for (int r = 1; r <= 2; ++r) {
      ChainModel m = chain(links, JointKind::Revolute, r);
      ChainState s = prepared(m);
      for (LinkState& ls : s.links) {
        ls.kin.z.lin = Vec3(n(rng), n(rng), n(rng));
        ls.kin.z.ang = Vec3(n(rng), n(rng), n(rng));
        for (int k = 0; k < ls.eta.size(); ++k) ls.eta(k) = 0.01 * n(rng);
      }
      const SystemMatrices mats = assemble(m, s, ExternalLoads::zero(links));
      const MatX A = mats.system_matrix();
      const double brute = A.partialPivLu().determinant();
      const double split = mats.Mq.partialPivLu().determinant() *
                           (mats.MWphi - mats.MDphi * mats.Mq.partialPivLu().solve(mats.MW)).determinant();
      CHECK(std::abs(brute / split - 1.0) < 1e-6);
      CHECK(schur_check(mats).det_identity_error < 1e-6);
    }
  }
}

TEST_CASE("joint residuals vanish on the rest configuration") {
  ChainModel m = chain(3, JointKind::Revolute);
  const ChainState s = prepared(m);
  for (int j = 1; j <= 3; ++j) {
    CHECK(joint_velocity_residual(m, s, j).norm() == 0.0);
    CHECK(joint_position_residual(m, s, j).norm() < 1e-14);
  }
  CHECK_THROWS_AS(assemble(m, s, ExternalLoads::zero(2)), std::invalid_argument);
}
