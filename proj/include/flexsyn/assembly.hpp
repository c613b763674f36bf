#pragma once

#include "flexsyn/joints.hpp"
#include "flexsyn/link_model.hpp"
#include "flexsyn/modal_basis.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace flexsyn {

class SingularSystem : public std::runtime_error {
 public:
  SingularSystem(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

/// Static description of a serial chain. Joint j (1-based) connects link j-1
/// (0 = ground) to link j and is stored at joints[j - 1].
struct ChainModel {
  std::vector<LinkParameters> links;
  std::vector<BasisSet> bases;
  std::vector<ModalIntegralCache> caches;
  std::vector<JointSpec> joints;
  LinkOptions options;
  BaumgarteGains baumgarte;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  int modes = 2;

  // Set from the initial configuration by set_reference().
  Vec3 anchor = Vec3::Zero();
  std::vector<Mat3> initial_relative;

  int size() const { return static_cast<int>(links.size()); }
  int modal_dof() const { return 3 * modes; }
};

/// Builds bases and integral caches for every link.
ChainModel make_chain(const std::vector<LinkParameters>& links,
                      const std::vector<JointSpec>& joints, BasisKind kind, int modes,
                      int quadrature_points = 16);

struct LinkState {
  LinkKinematicState kin;
  VecX eta;
  VecX eta_dot;
};

struct ChainState {
  double t = 0.0;
  std::vector<LinkState> links;
};

/// Zero-velocity, undeformed state with all links along the inertial x axis,
/// link 1 starting at the origin and each link starting at its parent's tip.
ChainState rest_state(const ChainModel& model);

/// Records the ground anchor and the initial relative joint rotations.
void set_reference(ChainModel& model, const ChainState& state);

/// Base and tip wrenches acting on each link, body axes.
struct ExternalLoads {
  std::vector<Wrench> base;
  std::vector<Wrench> tip;

  static ExternalLoads zero(int n);
};

/// Per-link quantities at the current state.
struct LinkEvaluation {
  LinkSamples samples;
  EndpointMotion base;
  EndpointMotion tip;
};

LinkEvaluation evaluate_link(const ChainModel& model, const ChainState& state, int link);

/// Joint j (1-based): the parent's tip (or the ground anchor) and the child's base.
Vec6 joint_velocity_residual(const ChainModel& model, const ChainState& state, int joint);
Vec6 joint_position_residual(const ChainModel& model, const ChainState& state, int joint);

struct SystemMatrices {
  int n = 0;
  int r = 0;
  MatX Mq;     // 12n x 12n
  MatX MW;     // 12n x 3rn
  MatX MDphi;  // 3rn x 12n
  MatX MWphi;  // 3rn x 3rn
  VecX hq, hphi;
  VecX Fq, Fphi;

  MatX system_matrix() const;
  VecX rhs() const;

  static int wrench_offset(int k) { return 12 * k; }           // F_Jk, k = 0..n-1
  static int twist_offset(int i) { return 12 * (i - 1) + 6; }  // z_i, i = 1..n
};

SystemMatrices assemble(const ChainModel& model, const ChainState& state,
                        const ExternalLoads& loads);

struct SystemSolution {
  VecX q;
  VecX eta_ddot;
  std::vector<Vec6> joint_wrenches;  // F_J0 .. F_J(n-1)
  std::vector<Vec6> twist_rates;     // zdot_1 .. zdot_n
  std::vector<VecX> modal_accelerations;
  double residual = 0.0;   // relative
  double condition = 0.0;  // estimate
};

/// Dense LU solve. Throws SingularSystem when the condition estimate exceeds
/// 1e12 or the relative residual exceeds 1e-9.
SystemSolution solve(const SystemMatrices& mats);

/// Splits the stacked unknowns into wrenches, twist rates and modal blocks.
void extract(SystemSolution& sol, int n, int r);

struct SchurReport {
  double log_det_sys = 0.0;
  double log_det_q = 0.0;
  double log_det_schur = 0.0;
  int sign_sys = 0;
  int sign_q = 0;
  int sign_schur = 0;
  double det_identity_error = 0.0;  // |det(Msys) / (det(Mq) det(S)) - 1|
  double condition_q = 0.0;
  double condition_schur = 0.0;
  bool singular = false;
  bool force_columns_zero = false;
};

SchurReport schur_check(const SystemMatrices& mats);

}  // namespace flexsyn
