#include "flexsyn/integrator.hpp"

#include <doctest.h>

#include <cmath>

using namespace flexsyn;

namespace {

struct Setup {
  ChainModel model;
  ChainState state;
};

Setup single(JointKind kind, bool gravity = true, double l1 = 0.0, double l2 = 1.0, double E = 7e10) {
  LinkParameters p;
  p.E = E;
  p.l1 = l1;
  p.l2 = l2;
  Setup s;
  s.model = make_chain({p}, {make_joint(kind, Vec3::UnitZ(), 0, 1)}, BasisKind::ClampedFree, 2);
  if (!gravity) s.model.gravity = Vec3::Zero();
  s.model.options.section_inertia = kind == JointKind::Free;
  s.state = rest_state(s.model);
  set_reference(s.model, s.state);
  return s;
}

}  // namespace

TEST_CASE("scheme names") {
  CHECK(scheme_from_string("rk4") == Scheme::RK4);
  CHECK(scheme_from_string("gauss4") == Scheme::Gauss4);
  CHECK(to_string(Scheme::ExplicitEuler) == "explicit-euler");
  CHECK_THROWS_AS(scheme_from_string("rk45"), std::invalid_argument);
  IntegratorConfig bad;
  bad.step = 0.0;
  bad.stride = 0;
  CHECK(bad.validate().size() == 2);
}

TEST_CASE("pack and unpack") {
  Setup s = single(JointKind::Revolute);
  s.state.links[0].kin.R = rotation_exp(Vec3(0.1, 0.2, 0.3));
  s.state.links[0].kin.z.lin = Vec3(1, 2, 3);
  s.state.links[0].eta_dot(4) = 0.5;
  const VecX x = pack(s.state);
  CHECK(x.size() == state_size(s.model));
  CHECK((pack(unpack(s.model, x, 0.0)) - x).norm() == 0.0);
  CHECK_THROWS_AS(unpack(s.model, VecX::Zero(3), 0.0), std::invalid_argument);
}

TEST_CASE("free link at rest without gravity has zero rate") {
  const Setup s = single(JointKind::Free, false);
  CHECK(derivative(s.model, s.state, {}).rate.norm() == 0.0);
}

TEST_CASE("torque-free spin about a principal axis") {
  Setup s = single(JointKind::Free, false, -0.5, 0.5);
  s.state.links[0].kin.z.ang = Vec3(0, 0, 2.0);
  const StateRate r = derivative(s.model, s.state, {});
  CHECK(r.solution.twist_rates[0].tail<3>().norm() < 1e-10);
}

TEST_CASE("steps of trivial motions") {
  const Setup rest = single(JointKind::Free, false);
  IntegratorConfig cfg;
  Integrator still(rest.model, cfg, {});
  const ChainState next = still.step(rest.state);
  CHECK((pack(next) - pack(rest.state)).norm() == 0.0);
  CHECK(next.t == doctest::Approx(cfg.step));

  // uniform translation is integrated exactly
  Setup drift = single(JointKind::Free, false);
  drift.state.links[0].kin.z.lin = Vec3(0.3, -0.2, 0.1);
  Integrator integ(drift.model, cfg, {});
  ChainState s = drift.state;
  for (int k = 0; k < 10; ++k) s = integ.step(s);
  CHECK((s.links[0].kin.r - 10 * cfg.step * Vec3(0.3, -0.2, 0.1)).norm() < 1e-15);
}

TEST_CASE("simulate bookkeeping") {
  const Setup s = single(JointKind::Revolute);
  IntegratorConfig cfg;
  cfg.t_end = 0.0;
  Trajectory t = simulate(s.model, s.state, cfg, {});
  REQUIRE(t.records.size() == 1);
  CHECK((pack(t.records[0].state) - pack(s.state)).norm() == 0.0);

  cfg.t_end = 0.01;
  cfg.stride = 10;
  t = simulate(s.model, s.state, cfg, {});
  CHECK(t.records.size() == 11);
  CHECK(t.records.back().state.t == doctest::Approx(0.01));
  CHECK(t.stats.steps == 100);
  CHECK(t.stats.max_solve_residual <= 1e-9);

  // streaming observer replaces storage
  int seen = 0;
  t = simulate(s.model, s.state, cfg, {}, [&](const TrajectoryRecord&) { ++seen; });
  CHECK(seen == 11);
  CHECK(t.records.empty());

  cfg.t_end = 0.00105;  // last step is shortened
  t = simulate(s.model, s.state, cfg, {});
  CHECK(t.records.back().state.t == doctest::Approx(0.00105).epsilon(1e-12));

  cfg.step = -1.0;
  CHECK_THROWS_AS(simulate(s.model, s.state, cfg, {}), std::invalid_argument);
}

TEST_CASE("pendulum energy with rk4 and gauss4") {
  const Setup s = single(JointKind::Revolute);
  const EnergyLedger e0 = energy(s.model, s.state);
  CHECK(e0.kinetic == 0.0);
  CHECK(std::abs(e0.gravitational) < 1e-15);
  for (Scheme scheme : {Scheme::RK4, Scheme::Gauss4}) {
    IntegratorConfig cfg;
    cfg.scheme = scheme;
    cfg.t_end = 0.1;
    cfg.stride = 1000;
    const Trajectory t = simulate(s.model, s.state, cfg, {});
    const EnergyLedger e1 = t.records.back().energy;
    CHECK(e1.kinetic > 1e-3);
    CHECK(std::abs(e1.total() - e0.total()) < 1e-7 * e1.kinetic);
    CHECK(t.stats.max_velocity_residual < 1e-9);
  }
}

TEST_CASE("explicit euler is first order") {
  const Setup s = single(JointKind::Revolute, true, 0.0, 1.0, 7e6);
  auto final_angle = [&](Scheme scheme, double h) {
    IntegratorConfig cfg;
    cfg.scheme = scheme;
    cfg.step = h;
    cfg.t_end = 0.02;
    cfg.stride = 100000;
    const Trajectory t = simulate(s.model, s.state, cfg, {});
    const Mat3& R = t.records.back().state.links[0].kin.R;
    return std::atan2(R(1, 0), R(0, 0));
  };
  const double ref = final_angle(Scheme::RK4, 1e-5);
  const double e1 = std::abs(final_angle(Scheme::ExplicitEuler, 2e-5) - ref);
  const double e2 = std::abs(final_angle(Scheme::ExplicitEuler, 1e-5) - ref);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.2));
}
