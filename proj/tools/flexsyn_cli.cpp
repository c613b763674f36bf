#include "flexsyn/outputs.hpp"
#include "flexsyn/scenario.hpp"
#include "flexsyn/validation.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <Eigen/LU>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace flexsyn;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kFailed = 1, kConfig = 2, kRuntime = 3 };

struct Options {
  std::string config;
  std::string out;
  double step = 0.0;
  double t_end = -1.0;
  std::uint64_t seed = 0;
  bool acceptance = false;
};

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("FLEXSYN_LOG_LEVEL");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
}

ScenarioConfig load(const Options& opt) {
  ScenarioConfig cfg = load_config(opt.config);
  if (opt.step > 0.0) cfg.integrator.step = opt.step;
  if (opt.t_end >= 0.0) cfg.integrator.t_end = opt.t_end;
  if (!opt.out.empty()) cfg.output.dir = opt.out;
  const std::vector<std::string> errors = cfg.integrator.validate();
  if (!errors.empty()) {
    std::vector<std::string> prefixed;
    for (const std::string& e : errors) prefixed.push_back("integrator." + e);
    throw ConfigError(prefixed);
  }
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << j.dump(2) << '\n';
}

int run_simulate(const Options& opt) {
  const ScenarioConfig cfg = load(opt);
  const Scenario sc = build_scenario(cfg);
  fs::create_directories(cfg.output.dir);
  const fs::path csv = fs::path(cfg.output.dir) / (cfg.output.prefix + ".csv");
  const fs::path summary = fs::path(cfg.output.dir) / (cfg.output.prefix + "_summary.json");
  spdlog::info("simulating {} link(s), {} modes per axis, {} h={} t_end={}", sc.model.size(),
               sc.model.modes, to_string(cfg.integrator.scheme), cfg.integrator.step,
               cfg.integrator.t_end);

  const auto start = std::chrono::steady_clock::now();
  CsvWriter writer(csv.string(), sc.model);
  TrajectoryRecord last;
  const Trajectory traj =
      simulate(sc.model, sc.initial, cfg.integrator, sc.loads, [&](const TrajectoryRecord& rec) {
        writer.write(rec);
        last = rec;
        spdlog::debug("t={:.6f} E={:.9e}", rec.state.t, rec.energy.total());
      });
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json s = summary_json(cfg.source, sc.model, last, traj.stats, wall);
  s["seed"] = opt.seed;
  s["rows"] = writer.rows();
  write_json(summary, s);
  spdlog::info("{} steps, {} rows -> {}", traj.stats.steps, writer.rows(), csv.string());
  spdlog::info("max velocity residual {:.3e}, max solve residual {:.3e}, wall {:.2f} s",
               traj.stats.max_velocity_residual, traj.stats.max_solve_residual, wall);
  return kOk;
}

int run_check(const Options& opt) {
  const ScenarioConfig cfg = load(opt);
  Scenario sc = build_scenario(cfg);
  sc.model.baumgarte = cfg.integrator.baumgarte;
  const SystemMatrices m = assemble(sc.model, sc.initial, sc.loads(sc.initial.t));
  const SchurReport sr = schur_check(m);
  Eigen::FullPivLU<MatX> lu(m.Mq);
  lu.setThreshold(1e-10);
  json joints = json::array();
  for (int j = 1; j <= sc.model.size(); ++j) {
    joints.push_back({{"joint", j},
                      {"type", to_string(sc.model.joints[j - 1].kind)},
                      {"velocity_residual", joint_velocity_residual(sc.model, sc.initial, j).norm()},
                      {"position_residual", joint_position_residual(sc.model, sc.initial, j).norm()}});
  }
  json report = {{"links", sc.model.size()},
                 {"modes_per_axis", sc.model.modes},
                 {"system_size", m.system_matrix().rows()},
                 {"constraint_block_rank", lu.rank()},
                 {"constraint_block_size", m.Mq.rows()},
                 {"condition_q", sr.condition_q},
                 {"condition_schur", sr.condition_schur},
                 {"log_det_sys", sr.log_det_sys},
                 {"log_det_q", sr.log_det_q},
                 {"log_det_schur", sr.log_det_schur},
                 {"det_identity_error", sr.det_identity_error},
                 {"force_columns_zero", sr.force_columns_zero},
                 {"singular", sr.singular},
                 {"joints", joints}};
  bool ok = !sr.singular && lu.rank() == m.Mq.rows();
  try {
    report["solve_residual"] = solve(m).residual;
  } catch (const SingularSystem& e) {
    report["solve_error"] = e.what();
    ok = false;
  }
  report["well_posed"] = ok;
  std::cout << report.dump(2) << '\n';
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_json(fs::path(opt.out) / "check.json", report);
  }
  return ok ? kOk : kFailed;
}

int run_modes(const Options& opt) {
  const ScenarioConfig cfg = load(opt);
  const Scenario sc = build_scenario(cfg);
  std::string table = "link,mode,axis,wavenumber,wavenumber_length,omega_rad_s\n";
  char buf[200];
  for (int i = 0; i < sc.model.size(); ++i) {
    const LinkParameters& p = sc.model.links[i];
    const BasisSet& b = sc.model.bases[i];
    for (int k = 0; k < b.modes(); ++k) {
      const double ka = b.axial().wavenumbers[k], kb = b.bending().wavenumbers[k];
      const double wx = ka * std::sqrt(p.E / p.rho);
      const double wy = kb * kb * std::sqrt(p.E * p.Iz / p.rho_a());
      const double wz = kb * kb * std::sqrt(p.E * p.Iy / p.rho_a());
      const struct {
        const char* axis;
        double beta, omega;
      } rows[] = {{"x", ka, wx}, {"y", kb, wy}, {"z", kb, wz}};
      for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%s,%.10e,%.10e,%.10e\n", i + 1, k + 1, r.axis, r.beta,
                      r.beta * p.length(), r.omega);
        table += buf;
      }
    }
  }
  std::cout << "basis: " << to_string(cfg.basis) << '\n' << table;
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    std::ofstream(fs::path(opt.out) / "modes.csv") << table;
  }
  return kOk;
}

int run_validate(const Options& opt) {
  std::vector<validation::OracleReport> reports = validation::property_suites(opt.seed);
  if (opt.acceptance) {
    for (validation::OracleReport& r : validation::acceptance_suites(opt.seed)) reports.push_back(r);
  }
  if (!opt.config.empty()) {
    const ScenarioConfig cfg = load(opt);
    reports.push_back(validation::run_suite("config energy audit", [&](validation::OracleReport& rep) {
      const Scenario sc = build_scenario(cfg);
      std::vector<ChainState> states;
      IntegratorConfig ic = cfg.integrator;
      ic.stride = 1;
      simulate(sc.model, sc.initial, ic, sc.loads,
               [&](const TrajectoryRecord& rec) { states.push_back(rec.state); });
      const validation::EnergyAudit audit = validation::energy_audit(sc.model, states, sc.loads, 401);
      rep.metrics.push_back({"power_balance_rel_error", audit.max_balance_error, 2e-4,
                             validation::Bound::AtMost});
    }));
  }
  bool all = true;
  for (const validation::OracleReport& r : reports) {
    std::cout << r.line() << '\n';
    all = all && r.passed();
  }
  std::cout << "seed " << opt.seed << ": " << (all ? "all suites passed" : "FAILURES") << '\n';
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_json(fs::path(opt.out) / "validation.json", validation::to_json(reports, opt.seed));
  }
  return all ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Flexible serial-manipulator dynamics"};
  app.require_subcommand(1);
  Options opt;
  auto add_common = [&opt](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config, "scenario JSON file");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--step", opt.step, "override the integrator step (s)")->check(CLI::PositiveNumber);
    sub->add_option("--t-end", opt.t_end, "override the end time (s)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", opt.seed, "seed for randomized suites");
  };
  CLI::App* sim = app.add_subcommand("simulate", "integrate a scenario, write CSV and summary");
  CLI::App* check = app.add_subcommand("check", "well-posedness report at the initial state");
  CLI::App* modes = app.add_subcommand("modes", "basis table");
  CLI::App* val = app.add_subcommand("validate", "run the validation suites");
  add_common(sim, true);
  add_common(check, true);
  add_common(modes, true);
  add_common(val, false);
  val->add_flag("--acceptance", opt.acceptance, "also run the acceptance criteria suites");
  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return run_simulate(opt);
    if (check->parsed()) return run_check(opt);
    if (modes->parsed()) return run_modes(opt);
    return run_validate(opt);
  } catch (const ConfigError& e) {
    for (const std::string& err : e.errors()) spdlog::error("config: {}", err);
    return kConfig;
  } catch (const SimulationError& e) {
    spdlog::error("simulation failed at t={:.6f}: {}", e.time(), e.what());
    return kRuntime;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRuntime;
  }
}
