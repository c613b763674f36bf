#include "flexsyn/outputs.hpp"
#include "flexsyn/validation.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace flexsyn;
namespace fs = std::filesystem;

namespace {

Scenario two_link() {
  return build_scenario(parse_config(R"({
    "links": [{}, {}],
    "joints": [{"type": "revolute"}, {"type": "revolute"}],
    "integrator": {"t_end": 0.002, "stride": 5}})"));
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

}  // namespace

TEST_CASE("csv layout") {
  const Scenario sc = two_link();
  const std::vector<std::string> header = csv_header(sc.model);
  CHECK(header.size() == 69);
  CHECK(header.front() == "t");
  CHECK(header.back() == "total");

  const std::string path = (fs::temp_directory_path() / "flexsyn_test_empty.csv").string();
  { CsvWriter w(path, sc.model); }
  CHECK(read_lines(path).size() == 1);

  {
    CsvWriter w(path, sc.model);
    simulate(sc.model, sc.initial, sc.integrator, sc.loads, [&](const TrajectoryRecord& r) {
      const std::vector<double> row = csv_row(sc.model, r);
      CHECK(row.size() == 69);
      for (int link = 0; link < 2; ++link) {
        double q2 = 0.0;
        for (int k = 0; k < 4; ++k) q2 += row[1 + 25 * link + 3 + k] * row[1 + 25 * link + 3 + k];
        CHECK(std::abs(std::sqrt(q2) - 1.0) < 1e-8);
        CHECK(row[1 + 25 * link + 3] >= 0.0);
      }
      w.write(r);
    });
    CHECK(w.rows() == 5);
  }
  CHECK(read_lines(path).size() == 6);
  fs::remove(path);
}

TEST_CASE("csv formatting is fixed") {
  CHECK(format_csv_line({1.0, -0.0, 0.5}) == "1.000000000000e+00,0.000000000000e+00,5.000000000000e-01\n");
}

TEST_CASE("summary json") {
  const Scenario sc = two_link();
  const Trajectory t = simulate(sc.model, sc.initial, sc.integrator, sc.loads);
  const nlohmann::json j = summary_json({{"a", 1}}, sc.model, t.records.back(), t.stats, 0.5);
  CHECK(j["config"]["a"] == 1);
  CHECK(j["final_state"]["links"].size() == 2);
  CHECK(j["max_residuals"].contains("velocity_constraint"));
  CHECK(j["steps"] == 20);
}

TEST_CASE("pendulum oracles") {
  using namespace validation;
  const Rod rod{0.27, 1.0};
  const PendulumTrace still = rigid_pendulum_oracle(rod, 9.81, -0.5 * std::numbers::pi, 0.0, 1.0, 1e-3);
  CHECK(std::abs(still.theta.back()[0] + 0.5 * std::numbers::pi) < 1e-15);
  const PendulumTrace swing = rigid_pendulum_oracle(rod, 9.81, 0.0, 0.0, 0.1, 1e-4);
  // early motion follows theta = -(3 g / 4 l) t^2
  CHECK(sample_angle(swing, 0.01) == doctest::Approx(-0.75 * 9.81 * 1e-4).epsilon(1e-4));
  const PendulumTrace dbl = double_pendulum_oracle(rod, rod, 9.81, {-0.5 * std::numbers::pi, -0.5 * std::numbers::pi},
                                                   {0.0, 0.0}, 0.5, 1e-3);
  CHECK(std::abs(dbl.theta.back()[1] + 0.5 * std::numbers::pi) < 1e-14);
}

TEST_CASE("audit agrees with the engine energy on a moving deformed chain") {
  const Scenario sc = two_link();
  ChainState s = sc.initial;
  s.links[0].kin.z.ang = Vec3(0, 0, 0.7);
  s.links[0].eta << 0.001, 0.01, -0.005, 0.0, 0.002, 0.001;
  s.links[0].eta_dot << 0.01, 0.2, -0.1, 0.0, 0.05, 0.02;
  s.links[1].kin.z.lin = Vec3(0.1, -0.2, 0.3);
  const EnergyLedger engine = energy(sc.model, s);
  const validation::AuditSample audit = validation::audit_state(sc.model, s);
  CHECK(audit.kinetic == doctest::Approx(engine.kinetic).epsilon(1e-9));
  CHECK(audit.elastic == doctest::Approx(engine.elastic).epsilon(1e-9));
  CHECK(audit.gravitational == doctest::Approx(engine.gravitational).epsilon(1e-9));
}

TEST_CASE("property suites pass on seed 0") {
  for (const validation::OracleReport& r : validation::property_suites(0)) {
    INFO(r.line());
    CHECK(r.passed());
  }
}

TEST_CASE("report plumbing") {
  using namespace validation;
  const OracleReport bad = run_suite("throws", [](OracleReport&) { throw std::runtime_error("boom"); });
  CHECK_FALSE(bad.passed());
  CHECK(bad.line().find("FAIL throws") == 0);
  const OracleReport nan = run_suite("nan", [](OracleReport& r) {
    r.metrics.push_back({"x", std::nan(""), 1.0, Bound::AtMost});
  });
  CHECK_FALSE(nan.passed());
  const nlohmann::json j = to_json(std::vector<OracleReport>{bad, nan}, 5);
  CHECK(j["seed"] == 5);
  CHECK(j["pass"] == false);
}
