#pragma once

#include "flexsyn/assembly.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexsyn {

enum class Scheme { RK4, ExplicitEuler, Gauss4 };

std::string to_string(Scheme scheme);
Scheme scheme_from_string(const std::string& name);

struct IntegratorConfig {
  Scheme scheme = Scheme::RK4;
  double step = 1e-4;
  double t_end = 1.0;
  int stride = 10;
  BaumgarteGains baumgarte;

  std::vector<std::string> validate() const;
};

/// External end wrenches as a function of time.
using LoadSchedule = std::function<ExternalLoads(double t)>;

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Flat state vector, per link: R (column-major, 9), r (3), eta (3r), z (6),
/// eta_dot (3r).
VecX pack(const ChainState& state);
ChainState unpack(const ChainModel& model, const VecX& x, double t);
int state_size(const ChainModel& model);

struct StateRate {
  VecX rate;
  SystemSolution solution;
};

/// Pose rates R' = R skew(w), r' = v, eta' = eta_dot; twist and modal rates
/// from the system solve.
StateRate derivative(const ChainModel& model, const ChainState& state, const LoadSchedule& loads);

struct EnergyLedger {
  double kinetic = 0.0;
  double elastic = 0.0;
  double gravitational = 0.0;
  double total() const { return kinetic + elastic + gravitational; }
};

EnergyLedger energy(const ChainModel& model, const ChainState& state);

struct TrajectoryRecord {
  ChainState state;
  std::vector<Vec6> joint_wrenches;
  std::vector<double> velocity_residuals;  // per joint, norm
  std::vector<double> position_residuals;  // per joint, norm
  EnergyLedger energy;
};

struct SimulationStats {
  long steps = 0;
  double max_solve_residual = 0.0;
  double max_condition = 0.0;
  double max_velocity_residual = 0.0;
  double max_position_residual = 0.0;
  long newton_jacobians = 0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  SimulationStats stats;
};

/// Stepper holding the scheme's working data (the Gauss4 Newton Jacobian is
/// reused across steps).
class Integrator {
 public:
  Integrator(const ChainModel& model, IntegratorConfig config, LoadSchedule loads);

  /// Advances one step of size h (config.step when h <= 0); rotations are
  /// re-orthonormalized.
  ChainState step(const ChainState& state, double h = 0.0);

  const SimulationStats& stats() const { return stats_; }
  const ChainModel& model() const { return model_; }

 private:
  VecX rate(const VecX& x, double t);
  VecX step_gauss4(const VecX& x, double t, double h);
  void refresh_jacobian(const VecX& x, double t);

  ChainModel model_;
  IntegratorConfig config_;
  LoadSchedule loads_;
  SimulationStats stats_;
  MatX jacobian_;
  Eigen::PartialPivLU<MatX> newton_lu_;
  double newton_h_ = 0.0;
};

/// Record of the state at t (joint wrenches from a fresh solve).
TrajectoryRecord make_record(const ChainModel& model, const ChainState& state,
                             const LoadSchedule& loads);

/// Runs from `initial` to config.t_end, recording every `stride` steps and
/// the final state. The model's Baumgarte gains are taken from `config`.
/// With an observer, records are streamed to it instead of being stored.
Trajectory simulate(const ChainModel& model, const ChainState& initial,
                    const IntegratorConfig& config, const LoadSchedule& loads,
                    const std::function<void(const TrajectoryRecord&)>& observer = {});

}  // namespace flexsyn
