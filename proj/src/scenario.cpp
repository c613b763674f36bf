#include "flexsyn/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace flexsyn {

using nlohmann::json;

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string out = "invalid config";
  for (const std::string& e : errors) out += "\n  " + e;
  return out;
}

/// Typed field access that records problems instead of throwing.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& msg) { errors_.push_back(path + ": " + msg); }

  void check_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) error(join(path, it.key()), "unknown field");
    }
  }

  double number(const json& obj, const std::string& key, const std::string& path, double def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number()) {
      error(join(path, key), "expected a number");
      return def;
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) error(join(path, key), "must be finite");
    return x;
  }

  int integer(const json& obj, const std::string& key, const std::string& path, int def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
      error(join(path, key), "expected an integer");
      return def;
    }
    return v.get<int>();
  }

  bool boolean(const json& obj, const std::string& key, const std::string& path, bool def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
      error(join(path, key), "expected true or false");
      return def;
    }
    return v.get<bool>();
  }

  std::string string(const json& obj, const std::string& key, const std::string& path,
                     const std::string& def) {
    if (!obj.contains(key)) return def;
    const json& v = obj.at(key);
    if (!v.is_string()) {
      error(join(path, key), "expected a string");
      return def;
    }
    return v.get<std::string>();
  }

  VecX vector(const json& obj, const std::string& key, const std::string& path, int size) {
    const json& v = obj.at(key);
    if (!v.is_array() || (size >= 0 && static_cast<int>(v.size()) != size)) {
      error(join(path, key), size >= 0 ? "expected an array of " + std::to_string(size) + " numbers"
                                       : "expected an array of numbers");
      return VecX();
    }
    VecX out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
        error(join(path, key) + "[" + std::to_string(i) + "]", "expected a finite number");
        return VecX();
      }
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
  }

  Vec3 vec3(const json& obj, const std::string& key, const std::string& path, const Vec3& def) {
    if (!obj.contains(key)) return def;
    const VecX v = vector(obj, key, path, 3);
    return v.size() == 3 ? Vec3(v) : def;
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

 private:
  std::vector<std::string>& errors_;
};

LinkConfig parse_link(Reader& rd, const json& j, const std::string& path, int modal_dof) {
  LinkConfig lc;
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return lc;
  }
  rd.check_keys(j, path, {"rho", "E", "A", "Iy", "Iz", "l1", "l2", "rotation", "position", "v",
                          "omega", "eta", "eta_dot"});
  LinkParameters& p = lc.params;
  p.rho = rd.number(j, "rho", path, p.rho);
  p.E = rd.number(j, "E", path, p.E);
  p.A = rd.number(j, "A", path, p.A);
  p.Iy = rd.number(j, "Iy", path, p.Iy);
  p.Iz = rd.number(j, "Iz", path, p.Iz);
  p.l1 = rd.number(j, "l1", path, p.l1);
  p.l2 = rd.number(j, "l2", path, p.l2);
  for (const std::string& e : p.validate()) {
    const std::size_t colon = e.find(':');
    rd.error(path + "." + e.substr(0, colon), e.substr(colon + 2));
  }
  lc.rotation = rd.vec3(j, "rotation", path, lc.rotation);
  if (j.contains("position")) lc.position = rd.vec3(j, "position", path, Vec3::Zero());
  lc.v = rd.vec3(j, "v", path, lc.v);
  lc.omega = rd.vec3(j, "omega", path, lc.omega);
  if (j.contains("eta")) lc.eta = rd.vector(j, "eta", path, modal_dof);
  if (j.contains("eta_dot")) lc.eta_dot = rd.vector(j, "eta_dot", path, modal_dof);
  return lc;
}

JointConfig parse_joint(Reader& rd, const json& j, const std::string& path) {
  JointConfig jc;
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return jc;
  }
  rd.check_keys(j, path, {"type", "axis"});
  const std::string type = rd.string(j, "type", path, "fixed");
  try {
    jc.kind = joint_kind_from_string(type);
  } catch (const std::invalid_argument&) {
    rd.error(Reader::join(path, "type"), "expected fixed, revolute or free");
  }
  jc.axis = rd.vec3(j, "axis", path, jc.axis);
  if (jc.kind == JointKind::Revolute) {
    if (!(jc.axis.norm() > 1e-12)) {
      rd.error(Reader::join(path, "axis"), "must be nonzero");
    } else {
      jc.axis.normalize();
    }
  }
  return jc;
}

WrenchSchedule parse_wrench(Reader& rd, const json& j, const std::string& path, int n) {
  WrenchSchedule w;
  if (!j.is_object()) {
    rd.error(path, "expected an object");
    return w;
  }
  rd.check_keys(j, path,
                {"link", "end", "type", "force", "torque", "frequency", "phase", "start", "stop"});
  w.link = rd.integer(j, "link", path, 0);
  if (w.link < 1 || w.link > n) {
    rd.error(Reader::join(path, "link"), "must be between 1 and " + std::to_string(n));
  }
  const std::string end = rd.string(j, "end", path, "tip");
  if (end == "tip") {
    w.end = LinkEnd::Tip;
  } else if (end == "base") {
    w.end = LinkEnd::Base;
  } else {
    rd.error(Reader::join(path, "end"), "expected base or tip");
  }
  const std::string type = rd.string(j, "type", path, "constant");
  if (type == "constant") {
    w.type = WrenchSchedule::Type::Constant;
  } else if (type == "sinusoid") {
    w.type = WrenchSchedule::Type::Sinusoid;
  } else {
    rd.error(Reader::join(path, "type"), "expected constant or sinusoid");
  }
  w.force = rd.vec3(j, "force", path, w.force);
  w.torque = rd.vec3(j, "torque", path, w.torque);
  if (w.torque.x() != 0.0) {
    rd.error(Reader::join(path, "torque"),
             "axial torque (x component) is not supported on flexible links");
  }
  w.frequency = rd.number(j, "frequency", path, w.frequency);
  w.phase = rd.number(j, "phase", path, w.phase);
  w.start = rd.number(j, "start", path, w.start);
  if (j.contains("stop")) w.stop = rd.number(j, "stop", path, w.stop);
  if (w.frequency < 0.0) rd.error(Reader::join(path, "frequency"), "must be >= 0");
  if (!(w.stop > w.start)) rd.error(Reader::join(path, "stop"), "must be greater than start");
  return w;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

Wrench WrenchSchedule::at(double t) const {
  Wrench w;
  w.frame = FrameId::body(link);
  if (t < start || t >= stop) return w;
  double s = 1.0;
  if (type == Type::Sinusoid) s = std::sin(2.0 * std::numbers::pi * frequency * (t - start) + phase);
  w.lin = s * force;
  w.ang = s * torque;
  return w;
}

ScenarioConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("document: ") + e.what()});
  }
  std::vector<std::string> errors;
  Reader rd(errors);
  ScenarioConfig cfg;
  cfg.source = doc;
  if (!doc.is_object()) throw ConfigError({"document: expected a JSON object"});
  rd.check_keys(doc, "", {"gravity", "modes_per_axis", "basis", "quadrature_points",
                          "section_inertia", "elastic_moment_terms", "links", "joints",
                          "wrenches", "integrator", "output"});

  cfg.gravity = rd.vec3(doc, "gravity", "", cfg.gravity);
  cfg.modes = rd.integer(doc, "modes_per_axis", "", cfg.modes);
  if (cfg.modes < 1 || cfg.modes > 8) rd.error("modes_per_axis", "must be between 1 and 8");
  try {
    cfg.basis = basis_kind_from_string(rd.string(doc, "basis", "", "clamped-free"));
  } catch (const std::invalid_argument&) {
    rd.error("basis", "expected clamped-free or free-free-elastic");
  }
  cfg.quadrature_points = rd.integer(doc, "quadrature_points", "", cfg.quadrature_points);
  if (cfg.quadrature_points < 2 || cfg.quadrature_points > 64) {
    rd.error("quadrature_points", "must be between 2 and 64");
  }
  cfg.options.section_inertia = rd.boolean(doc, "section_inertia", "", false);
  cfg.options.elastic_moment_terms = rd.boolean(doc, "elastic_moment_terms", "", false);

  const int modal_dof = 3 * std::max(cfg.modes, 1);
  if (!doc.contains("links") || !doc["links"].is_array() || doc["links"].empty()) {
    rd.error("links", "expected a non-empty array");
  } else {
    for (std::size_t i = 0; i < doc["links"].size(); ++i) {
      cfg.links.push_back(
          parse_link(rd, doc["links"][i], "links[" + std::to_string(i) + "]", modal_dof));
    }
  }
  const int n = static_cast<int>(cfg.links.size());
  if (!doc.contains("joints") || !doc["joints"].is_array()) {
    rd.error("joints", "expected an array with one joint per link");
  } else {
    for (std::size_t i = 0; i < doc["joints"].size(); ++i) {
      cfg.joints.push_back(parse_joint(rd, doc["joints"][i], "joints[" + std::to_string(i) + "]"));
    }
    if (static_cast<int>(cfg.joints.size()) != n) {
      rd.error("joints", "expected " + std::to_string(n) + " joints (one per link), got " +
                             std::to_string(cfg.joints.size()));
    }
  }
  if (doc.contains("wrenches")) {
    if (!doc["wrenches"].is_array()) {
      rd.error("wrenches", "expected an array");
    } else {
      for (std::size_t i = 0; i < doc["wrenches"].size(); ++i) {
        cfg.wrenches.push_back(
            parse_wrench(rd, doc["wrenches"][i], "wrenches[" + std::to_string(i) + "]", n));
      }
    }
  }

  if (doc.contains("integrator")) {
    const json& ij = doc["integrator"];
    if (!ij.is_object()) {
      rd.error("integrator", "expected an object");
    } else {
      rd.check_keys(ij, "integrator", {"scheme", "step", "t_end", "stride", "baumgarte"});
      try {
        cfg.integrator.scheme = scheme_from_string(rd.string(ij, "scheme", "integrator", "rk4"));
      } catch (const std::invalid_argument&) {
        rd.error("integrator.scheme", "expected rk4, explicit-euler or gauss4");
      }
      cfg.integrator.step = rd.number(ij, "step", "integrator", cfg.integrator.step);
      cfg.integrator.t_end = rd.number(ij, "t_end", "integrator", cfg.integrator.t_end);
      cfg.integrator.stride = rd.integer(ij, "stride", "integrator", cfg.integrator.stride);
      if (ij.contains("baumgarte")) {
        const json& bj = ij["baumgarte"];
        const std::string bp = "integrator.baumgarte";
        if (!bj.is_object()) {
          rd.error(bp, "expected an object");
        } else {
          rd.check_keys(bj, bp, {"enabled", "alpha", "beta"});
          BaumgarteGains& g = cfg.integrator.baumgarte;
          g.enabled = rd.boolean(bj, "enabled", bp, g.enabled);
          g.alpha = rd.number(bj, "alpha", bp, g.alpha);
          g.beta = rd.number(bj, "beta", bp, g.beta);
        }
      }
      for (const std::string& e : cfg.integrator.validate()) errors.push_back("integrator." + e);
    }
  }
  if (doc.contains("output")) {
    const json& oj = doc["output"];
    if (!oj.is_object()) {
      rd.error("output", "expected an object");
    } else {
      rd.check_keys(oj, "output", {"dir", "prefix"});
      cfg.output.dir = rd.string(oj, "dir", "output", cfg.output.dir);
      cfg.output.prefix = rd.string(oj, "prefix", "output", cfg.output.prefix);
    }
  }

  if (!errors.empty()) throw ConfigError(errors);
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

Scenario build_scenario(const ScenarioConfig& config) {
  std::vector<LinkParameters> params;
  std::vector<JointSpec> joints;
  const int n = static_cast<int>(config.links.size());
  for (int i = 0; i < n; ++i) {
    params.push_back(config.links[i].params);
    joints.push_back(make_joint(config.joints[i].kind, config.joints[i].axis, i, i + 1));
  }
  Scenario sc;
  sc.model = make_chain(params, joints, config.basis, config.modes, config.quadrature_points);
  sc.model.options = config.options;
  sc.model.gravity = config.gravity;
  sc.model.baumgarte = config.integrator.baumgarte;
  sc.integrator = config.integrator;

  const int nm = sc.model.modal_dof();
  std::vector<std::string> errors;
  Vec3 tip = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    const LinkConfig& lc = config.links[i];
    LinkState ls;
    ls.kin.R = rotation_exp(lc.rotation);
    const Vec3 base = lc.position.value_or(tip);
    ls.kin.r = ls.kin.R.transpose() * base - Vec3(lc.params.l1, 0.0, 0.0);
    ls.kin.z.lin = lc.v;
    ls.kin.z.ang = lc.omega;
    ls.kin.z.frame = FrameId::body(i + 1);
    ls.eta = lc.eta.size() == nm ? lc.eta : VecX::Zero(nm);
    ls.eta_dot = lc.eta_dot.size() == nm ? lc.eta_dot : VecX::Zero(nm);
    sc.initial.links.push_back(ls);
    if (i > 0 && lc.position && config.joints[i].kind != JointKind::Free &&
        (base - tip).norm() > 1e-9 * std::max(1.0, tip.norm())) {
      errors.push_back("links[" + std::to_string(i) + "].position: does not coincide with the tip of link " +
                       std::to_string(i));
    }
    tip = evaluate_link(sc.model, sc.initial, i + 1).tip.position;
  }
  if (!errors.empty()) throw ConfigError(errors);
  set_reference(sc.model, sc.initial);

  const std::vector<WrenchSchedule> schedules = config.wrenches;
  sc.loads = [schedules, n](double t) {
    ExternalLoads loads = ExternalLoads::zero(n);
    for (const WrenchSchedule& w : schedules) {
      const Wrench wr = w.at(t);
      // tip slots hold the wrench the link exerts outward
      if (w.end == LinkEnd::Base) {
        loads.base[w.link - 1].lin += wr.lin;
        loads.base[w.link - 1].ang += wr.ang;
      } else {
        loads.tip[w.link - 1].lin -= wr.lin;
        loads.tip[w.link - 1].ang -= wr.ang;
      }
    }
    return loads;
  };
  return sc;
}

}  // namespace flexsyn
