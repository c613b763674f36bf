#pragma once

#include "flexsyn/assembly.hpp"
#include "flexsyn/integrator.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexsyn {

/// All validation errors of one config document, each "path: message".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct WrenchSchedule {
  enum class Type { Constant, Sinusoid };

  int link = 1;
  LinkEnd end = LinkEnd::Tip;
  Type type = Type::Constant;
  Vec3 force = Vec3::Zero();   // applied to the link, body axes of `link`
  Vec3 torque = Vec3::Zero();
  double frequency = 0.0;      // Hz
  double phase = 0.0;          // rad
  double start = 0.0;
  double stop = std::numeric_limits<double>::infinity();

  /// Active wrench at time t (zero outside [start, stop)).
  Wrench at(double t) const;
};

struct LinkConfig {
  LinkParameters params;
  Vec3 rotation = Vec3::Zero();     // rotation vector, body -> inertial
  std::optional<Vec3> position;     // inertial position of the base point (xi = l1)
  Vec3 v = Vec3::Zero();            // body-frame rate of the body origin
  Vec3 omega = Vec3::Zero();        // body-frame angular velocity
  VecX eta;                         // empty means zero
  VecX eta_dot;
};

struct JointConfig {
  JointKind kind = JointKind::Fixed;
  Vec3 axis = Vec3::UnitZ();
};

struct OutputConfig {
  std::string dir = "out";
  std::string prefix = "run";
};

struct ScenarioConfig {
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  int modes = 2;
  BasisKind basis = BasisKind::ClampedFree;
  int quadrature_points = 16;
  LinkOptions options;
  std::vector<LinkConfig> links;
  std::vector<JointConfig> joints;
  std::vector<WrenchSchedule> wrenches;
  IntegratorConfig integrator;
  OutputConfig output;
  nlohmann::json source;  // the parsed document, echoed in summaries
};

/// Parses and validates a JSON scenario. Throws ConfigError listing every
/// problem found.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

struct Scenario {
  ChainModel model;
  ChainState initial;
  LoadSchedule loads;
  IntegratorConfig integrator;
};

/// Model, initial state (default chain placement when positions are omitted)
/// and load schedule of a parsed config.
Scenario build_scenario(const ScenarioConfig& config);

}  // namespace flexsyn
