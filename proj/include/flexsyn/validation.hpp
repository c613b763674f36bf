#pragma once

#include "flexsyn/scenario.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace flexsyn::validation {

enum class Bound { AtMost, AtLeast };

struct Metric {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  Bound bound = Bound::AtMost;

  bool pass() const;
};

struct OracleReport {
  std::string name;
  std::vector<Metric> metrics;
  double runtime_s = 0.0;
  std::string error;  // set when the suite threw
  std::string detail;

  bool passed() const;
  /// "PASS <name>: metric=value (<= tol) ... [1.23 s]"
  std::string line() const;
};

nlohmann::json to_json(const OracleReport& report);
nlohmann::json to_json(const std::vector<OracleReport>& reports, std::uint64_t seed);

/// Times `body` and turns exceptions into a failed report.
OracleReport run_suite(const std::string& name, const std::function<void(OracleReport&)>& body);

// Oracles. Minimal-coordinate rigid models, angles measured from the
// inertial x axis in the x-y plane, gravity g along -y.

struct PendulumTrace {
  std::vector<double> t;
  std::vector<std::vector<double>> theta;      // per sample, one angle per rod
  std::vector<std::vector<double>> theta_dot;
  std::vector<double> energy;
};

struct Rod {
  double mass = 0.27;
  double length = 1.0;
};

/// Uniform rod pivoted at one end. RK4 with step h.
PendulumTrace rigid_pendulum_oracle(const Rod& rod, double g, double theta0, double omega0,
                                    double t_end, double h);

/// Two uniform rods, the second pivoted at the tip of the first.
PendulumTrace double_pendulum_oracle(const Rod& rod1, const Rod& rod2, double g,
                                     const std::array<double, 2>& theta0,
                                     const std::array<double, 2>& omega0, double t_end, double h);

/// Linear interpolation of angle `k` of a trace at time t.
double sample_angle(const PendulumTrace& trace, double t, int k = 0);

// Energy and momentum audit, recomputed from the state with its own mode
// shapes (long double) and Simpson quadrature.

struct AuditSample {
  double t = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double gravitational = 0.0;
  double external_work = 0.0;  // accumulated from t0
  Vec3 linear_momentum = Vec3::Zero();
  Vec3 angular_momentum = Vec3::Zero();  // about the inertial origin

  double total() const { return kinetic + elastic + gravitational; }
};

struct EnergyAudit {
  std::vector<AuditSample> samples;
  double max_energy_drift = 0.0;    // |E - E0| / scale
  double max_balance_error = 0.0;   // |E - E0 - W| / scale
  double max_linear_drift = 0.0;    // |p - p0| / max(|p0|, scale)
  double max_angular_drift = 0.0;
  double energy_scale = 0.0;
};

AuditSample audit_state(const ChainModel& model, const ChainState& state, int points = 2001);

/// Audit over a sequence of states; external work by trapezoidal power
/// integration, so states should be closely spaced when loads act.
EnergyAudit energy_audit(const ChainModel& model, const std::vector<ChainState>& states,
                         const LoadSchedule& loads, int points = 2001);

// Suites.

using AdjointFn = std::function<Mat6(const Twist&)>;

OracleReport transform_rate_order(std::uint64_t seed, const AdjointFn& ad = {});
OracleReport mass_matrix_structure(std::uint64_t seed, int samples = 1000);
OracleReport modal_frequency();
OracleReport rigid_limit_pendulum();
OracleReport dae_integrity(std::uint64_t seed);
OracleReport constraint_fidelity();
OracleReport conservation();
OracleReport integrator_order();
OracleReport determinism();

/// Acceptance criteria 1..9 in order.
std::vector<OracleReport> acceptance_suites(std::uint64_t seed);

/// Faster oracle and invariant checks (oracle self-checks, mutation
/// sanity, free fall and power balance audits, randomized Schur identity).
std::vector<OracleReport> property_suites(std::uint64_t seed);

// Reference configurations shared by the suites.

LinkParameters canonical_link();

/// One link hanging from a revolute z joint at the origin, initial angle
/// theta0 from the x axis.
Scenario pendulum_scenario(double theta0, double stiffness_scale = 1.0, int modes = 2);

}  // namespace flexsyn::validation
