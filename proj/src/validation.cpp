#include "flexsyn/validation.hpp"

#include "flexsyn/outputs.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <limits>
#include <numbers>
#include <random>

namespace flexsyn::validation {

using nlohmann::json;

bool Metric::pass() const {
  if (!std::isfinite(value)) return false;
  return bound == Bound::AtMost ? value <= tolerance : value >= tolerance;
}

bool OracleReport::passed() const {
  if (!error.empty() || metrics.empty()) return false;
  return std::all_of(metrics.begin(), metrics.end(), [](const Metric& m) { return m.pass(); });
}

std::string OracleReport::line() const {
  std::string out = (passed() ? "PASS " : "FAIL ") + name + ":";
  char buf[160];
  for (const Metric& m : metrics) {
    std::snprintf(buf, sizeof buf, " %s=%.3e (%s %.1e)", m.name.c_str(), m.value,
                  m.bound == Bound::AtMost ? "<=" : ">=", m.tolerance);
    out += buf;
  }
  if (!error.empty()) out += " error: " + error;
  std::snprintf(buf, sizeof buf, " [%.2f s]", runtime_s);
  return out + buf;
}

json to_json(const OracleReport& report) {
  json metrics = json::array();
  for (const Metric& m : report.metrics) {
    metrics.push_back({{"name", m.name},
                       {"value", m.value},
                       {"tolerance", m.tolerance},
                       {"bound", m.bound == Bound::AtMost ? "at_most" : "at_least"},
                       {"pass", m.pass()}});
  }
  json j = {{"name", report.name},
            {"pass", report.passed()},
            {"metrics", metrics},
            {"runtime_s", report.runtime_s}};
  if (!report.error.empty()) j["error"] = report.error;
  if (!report.detail.empty()) j["detail"] = report.detail;
  return j;
}

json to_json(const std::vector<OracleReport>& reports, std::uint64_t seed) {
  json list = json::array();
  bool all = true;
  for (const OracleReport& r : reports) {
    list.push_back(to_json(r));
    all = all && r.passed();
  }
  return {{"seed", seed}, {"pass", all}, {"suites", list}};
}

OracleReport run_suite(const std::string& name, const std::function<void(OracleReport&)>& body) {
  OracleReport report;
  report.name = name;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(report);
  } catch (const std::exception& e) {
    report.error = e.what();
  }
  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

namespace {

template <std::size_t N>
using Arr = std::array<double, N>;

/// Classical RK4 on y' = f(y), y = (angles, rates).
template <std::size_t N, class F>
PendulumTrace integrate_rods(const F& accel, const std::function<double(const Arr<2 * N>&)>& energy,
                             Arr<2 * N> y, double t_end, double h) {
  PendulumTrace trace;
  auto push = [&](double t) {
    trace.t.push_back(t);
    trace.theta.emplace_back(y.begin(), y.begin() + N);
    trace.theta_dot.emplace_back(y.begin() + N, y.end());
    trace.energy.push_back(energy(y));
  };
  auto rate = [&](const Arr<2 * N>& s) {
    Arr<2 * N> d{};
    const Arr<N> a = accel(s);
    for (std::size_t k = 0; k < N; ++k) {
      d[k] = s[N + k];
      d[N + k] = a[k];
    }
    return d;
  };
  auto axpy = [](const Arr<2 * N>& x, double c, const Arr<2 * N>& d) {
    Arr<2 * N> out;
    for (std::size_t k = 0; k < 2 * N; ++k) out[k] = x[k] + c * d[k];
    return out;
  };
  const long steps = static_cast<long>(std::llround(t_end / h));
  push(0.0);
  for (long s = 1; s <= steps; ++s) {
    const Arr<2 * N> k1 = rate(y);
    const Arr<2 * N> k2 = rate(axpy(y, 0.5 * h, k1));
    const Arr<2 * N> k3 = rate(axpy(y, 0.5 * h, k2));
    const Arr<2 * N> k4 = rate(axpy(y, h, k3));
    for (std::size_t k = 0; k < 2 * N; ++k) y[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
    push(s * h);
  }
  return trace;
}

}  // namespace

PendulumTrace rigid_pendulum_oracle(const Rod& rod, double g, double theta0, double omega0,
                                    double t_end, double h) {
  const double m = rod.mass, l = rod.length;
  auto accel = [&](const Arr<2>& y) { return Arr<1>{-1.5 * g / l * std::cos(y[0])}; };
  auto energy = [&](const Arr<2>& y) {
    return m * l * l / 6.0 * y[1] * y[1] + 0.5 * m * g * l * std::sin(y[0]);
  };
  return integrate_rods<1>(accel, energy, Arr<2>{theta0, omega0}, t_end, h);
}

PendulumTrace double_pendulum_oracle(const Rod& rod1, const Rod& rod2, double g,
                                     const std::array<double, 2>& theta0,
                                     const std::array<double, 2>& omega0, double t_end, double h) {
  const double m1 = rod1.mass, l1 = rod1.length, m2 = rod2.mass, l2 = rod2.length;
  const double k = 0.5 * m2 * l1 * l2;
  auto accel = [=](const Arr<4>& y) {
    const double s = std::sin(y[0] - y[1]), c = std::cos(y[0] - y[1]);
    const double a11 = m1 * l1 * l1 / 3.0 + m2 * l1 * l1, a22 = m2 * l2 * l2 / 3.0, a12 = k * c;
    const double b1 = -k * s * y[3] * y[3] - (0.5 * m1 + m2) * g * l1 * std::cos(y[0]);
    const double b2 = k * s * y[2] * y[2] - 0.5 * m2 * g * l2 * std::cos(y[1]);
    const double det = a11 * a22 - a12 * a12;
    return Arr<2>{(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
  };
  auto energy = [=](const Arr<4>& y) {
    const double c = std::cos(y[0] - y[1]);
    const double kin = 0.5 * (m1 * l1 * l1 / 3.0 + m2 * l1 * l1) * y[2] * y[2] +
                       0.5 * (m2 * l2 * l2 / 3.0) * y[3] * y[3] + k * c * y[2] * y[3];
    const double pot = (0.5 * m1 + m2) * g * l1 * std::sin(y[0]) + 0.5 * m2 * g * l2 * std::sin(y[1]);
    return kin + pot;
  };
  return integrate_rods<2>(accel, energy, Arr<4>{theta0[0], theta0[1], omega0[0], omega0[1]},
                           t_end, h);
}

double sample_angle(const PendulumTrace& trace, double t, int k) {
  if (trace.t.empty()) throw std::invalid_argument("sample_angle: empty trace");
  if (t <= trace.t.front()) return trace.theta.front()[k];
  if (t >= trace.t.back()) return trace.theta.back()[k];
  const auto it = std::upper_bound(trace.t.begin(), trace.t.end(), t);
  const std::size_t j = static_cast<std::size_t>(it - trace.t.begin());
  const double w = (t - trace.t[j - 1]) / (trace.t[j] - trace.t[j - 1]);
  return (1.0 - w) * trace.theta[j - 1][k] + w * trace.theta[j][k];
}


namespace {

/// Closed-form Euler-Bernoulli and axial shapes, evaluated in long double.
struct AuditBasis {
  int r = 0;
  std::vector<long double> xi;
  std::vector<long double> simpson;
  // per node, per mode p: axial u, u', bending w, w''
  std::vector<std::vector<long double>> u, du, w, ddw;
};

long double bisect(const std::function<long double(long double)>& f, long double lo, long double hi) {
  long double flo = f(lo);
  for (int it = 0; it < 200; ++it) {
    const long double mid = 0.5L * (lo + hi);
    const long double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5L * (lo + hi);
}

AuditBasis audit_basis(const LinkParameters& p, BasisKind kind, int r, int points) {
  if (points % 2 == 0) ++points;
  const long double pi = 3.141592653589793238462643383279502884L;
  const long double L = p.l2 - p.l1;
  AuditBasis b;
  b.r = r;
  const long double dx = L / (points - 1);
  for (int k = 0; k < points; ++k) {
    b.xi.push_back(p.l1 + k * dx);
    const long double c = (k == 0 || k == points - 1) ? 1.0L : (k % 2 ? 4.0L : 2.0L);
    b.simpson.push_back(c * dx / 3.0L);
  }
  b.u.assign(points, std::vector<long double>(r));
  b.du = b.w = b.ddw = b.u;
  const bool cf = kind == BasisKind::ClampedFree;
  for (int m = 0; m < r; ++m) {
    // cos x cosh x = -1 (clamped-free) or +1 (free-free)
    auto f = [cf](long double x) { return std::cos(x) * std::cosh(x) + (cf ? 1.0L : -1.0L); };
    const long double lo = cf ? m * pi : (m + 1) * pi;
    const long double bl = cf && m == 0 ? bisect(f, 1.0L, 3.0L) : bisect(f, lo + 0.1L, lo + pi - 0.1L);
    const long double beta = bl / L;
    const long double sigma = cf ? (std::cosh(bl) + std::cos(bl)) / (std::sinh(bl) + std::sin(bl))
                                 : (std::cosh(bl) - std::cos(bl)) / (std::sinh(bl) - std::sin(bl));
    const long double ka = cf ? (2 * m + 1) * pi / (2 * L) : (m + 1) * pi / L;
    const long double na = std::sqrt(2.0L / L);
    long double norm2 = 0.0L;
    for (int k = 0; k < points; ++k) {
      const long double s = b.xi[k] - p.l1, x = beta * s;
      if (cf) {
        b.w[k][m] = std::cosh(x) - std::cos(x) - sigma * (std::sinh(x) - std::sin(x));
        b.ddw[k][m] = beta * beta * (std::cosh(x) + std::cos(x) - sigma * (std::sinh(x) + std::sin(x)));
        b.u[k][m] = na * std::sin(ka * s);
        b.du[k][m] = na * ka * std::cos(ka * s);
      } else {
        b.w[k][m] = std::cosh(x) + std::cos(x) - sigma * (std::sinh(x) + std::sin(x));
        b.ddw[k][m] = beta * beta * (std::cosh(x) - std::cos(x) - sigma * (std::sinh(x) - std::sin(x)));
        b.u[k][m] = na * std::cos(ka * s);
        b.du[k][m] = -na * ka * std::sin(ka * s);
      }
      norm2 += b.simpson[k] * b.w[k][m] * b.w[k][m];
    }
    const long double n = 1.0L / std::sqrt(norm2);
    for (int k = 0; k < points; ++k) {
      b.w[k][m] *= n;
      b.ddw[k][m] *= n;
    }
  }
  return b;
}

using LVec3 = Eigen::Matrix<long double, 3, 1>;

LVec3 widen(const Vec3& v) { return v.cast<long double>(); }

/// Deflection (x axial, y, z bending) at node k for coordinates q.
LVec3 deflection(const AuditBasis& b, int k, const VecX& q) {
  LVec3 d = LVec3::Zero();
  for (int m = 0; m < b.r; ++m) {
    d(0) += b.u[k][m] * q(3 * m);
    d(1) += b.w[k][m] * q(3 * m + 1);
    d(2) += b.w[k][m] * q(3 * m + 2);
  }
  return d;
}

struct LinkAudit {
  long double kinetic = 0, elastic = 0, gravitational = 0, inertia = 0;
  LVec3 p = LVec3::Zero(), h = LVec3::Zero();
};

LinkAudit audit_link(const LinkParameters& lp, const LinkOptions& opt, const AuditBasis& b,
                     const LinkState& ls, const Vec3& gravity) {
  LinkAudit a;
  const long double rho_a = static_cast<long double>(lp.rho) * lp.A;
  const Eigen::Matrix<long double, 3, 3> R = ls.kin.R.cast<long double>();
  const LVec3 r = widen(ls.kin.r), v = widen(ls.kin.z.lin), w = widen(ls.kin.z.ang);
  const LVec3 g = widen(gravity);
  for (std::size_t k = 0; k < b.xi.size(); ++k) {
    const int kk = static_cast<int>(k);
    const LVec3 rob = r + LVec3(b.xi[k], 0, 0) + deflection(b, kk, ls.eta);
    const LVec3 vob = v + deflection(b, kk, ls.eta_dot) + w.cross(rob);
    const LVec3 R_rob = R * rob, R_vob = R * vob;
    const long double wt = b.simpson[k] * rho_a;
    a.kinetic += 0.5L * wt * vob.squaredNorm();
    a.gravitational -= wt * g.dot(R_rob);
    a.p += wt * R_vob;
    a.h += wt * R_rob.cross(R_vob);
    a.inertia += wt * rob.squaredNorm();
    long double du = 0, wy = 0, wz = 0;
    for (int m = 0; m < b.r; ++m) {
      du += b.du[k][m] * ls.eta(3 * m);
      wy += b.ddw[k][m] * ls.eta(3 * m + 1);
      wz += b.ddw[k][m] * ls.eta(3 * m + 2);
    }
    a.elastic += 0.5L * b.simpson[k] *
                 (static_cast<long double>(lp.E) * lp.A * du * du +
                  static_cast<long double>(lp.E) * lp.Iz * wy * wy +
                  static_cast<long double>(lp.E) * lp.Iy * wz * wz);
  }
  if (opt.section_inertia) {
    const long double c = static_cast<long double>(lp.rho) * (lp.l2 - lp.l1);
    const LVec3 Jw(c * (lp.Iy + lp.Iz) * w(0), c * lp.Iy * w(1), c * lp.Iz * w(2));
    a.kinetic += 0.5L * w.dot(Jw);
    a.h += R * Jw;
  }
  return a;
}

/// Power delivered by the external end wrenches (tip slots hold the
/// outward wrench, so they enter with a minus sign).
double external_power(const ChainModel& model, const std::vector<AuditBasis>& bases,
                      const ChainState& state, const ExternalLoads& loads) {
  long double power = 0;
  for (int i = 0; i < model.size(); ++i) {
    const AuditBasis& b = bases[i];
    const LinkState& ls = state.links[i];
    const LVec3 r = widen(ls.kin.r), v = widen(ls.kin.z.lin), w = widen(ls.kin.z.ang);
    const int last = static_cast<int>(b.xi.size()) - 1;
    for (int end : {0, last}) {
      const LVec3 rob = r + LVec3(b.xi[end], 0, 0) + deflection(b, end, ls.eta);
      const LVec3 vend = v + deflection(b, end, ls.eta_dot) + w.cross(rob);
      const Wrench& wr = end == 0 ? loads.base[i] : loads.tip[i];
      const long double sign = end == 0 ? 1.0L : -1.0L;
      power += sign * (widen(wr.lin).dot(vend) + widen(wr.ang).dot(w));
    }
  }
  return static_cast<double>(power);
}

}  // namespace

AuditSample audit_state(const ChainModel& model, const ChainState& state, int points) {
  AuditSample s;
  s.t = state.t;
  for (int i = 0; i < model.size(); ++i) {
    const AuditBasis b = audit_basis(model.links[i], model.bases[i].kind(), model.modes, points);
    const LinkAudit a = audit_link(model.links[i], model.options, b, state.links[i], model.gravity);
    s.kinetic += static_cast<double>(a.kinetic);
    s.elastic += static_cast<double>(a.elastic);
    s.gravitational += static_cast<double>(a.gravitational);
    s.linear_momentum += a.p.cast<double>();
    s.angular_momentum += a.h.cast<double>();
  }
  return s;
}

EnergyAudit energy_audit(const ChainModel& model, const std::vector<ChainState>& states,
                         const LoadSchedule& loads, int points) {
  EnergyAudit audit;
  if (states.empty()) return audit;
  std::vector<AuditBasis> bases;
  for (int i = 0; i < model.size(); ++i) {
    bases.push_back(audit_basis(model.links[i], model.bases[i].kind(), model.modes, points));
  }
  double prev_power = 0.0;
  double mass = 0.0, inertia = 0.0, max_kin = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const ChainState& st = states[k];
    AuditSample s;
    s.t = st.t;
    for (int i = 0; i < model.size(); ++i) {
      const LinkAudit a = audit_link(model.links[i], model.options, bases[i], st.links[i], model.gravity);
      s.kinetic += static_cast<double>(a.kinetic);
      s.elastic += static_cast<double>(a.elastic);
      s.gravitational += static_cast<double>(a.gravitational);
      s.linear_momentum += a.p.cast<double>();
      s.angular_momentum += a.h.cast<double>();
      if (k == 0) {
        mass += model.links[i].mass();
        inertia += static_cast<double>(a.inertia);
      }
    }
    const double power = loads ? external_power(model, bases, st, loads(st.t)) : 0.0;
    if (k > 0) {
      s.external_work = audit.samples.back().external_work +
                        0.5 * (st.t - audit.samples.back().t) * (power + prev_power);
    }
    prev_power = power;
    max_kin = std::max(max_kin, s.kinetic + s.elastic);
    audit.samples.push_back(s);
  }
  const AuditSample& s0 = audit.samples.front();
  audit.energy_scale = std::max({std::abs(s0.total()), max_kin, 1e-300});
  const double p_scale = std::max(s0.linear_momentum.norm(), std::sqrt(2.0 * mass * max_kin));
  const double h_scale = std::max(s0.angular_momentum.norm(), std::sqrt(2.0 * inertia * max_kin));
  for (const AuditSample& s : audit.samples) {
    const double de = s.total() - s0.total();
    audit.max_energy_drift = std::max(audit.max_energy_drift, std::abs(de) / audit.energy_scale);
    audit.max_balance_error =
        std::max(audit.max_balance_error, std::abs(de - s.external_work) / audit.energy_scale);
    if (p_scale > 0.0) {
      audit.max_linear_drift = std::max(
          audit.max_linear_drift, (s.linear_momentum - s0.linear_momentum).norm() / p_scale);
    }
    if (h_scale > 0.0) {
      audit.max_angular_drift = std::max(
          audit.max_angular_drift, (s.angular_momentum - s0.angular_momentum).norm() / h_scale);
    }
  }
  return audit;
}

LinkParameters canonical_link() {
  LinkParameters p;
  p.rho = 2700.0;
  p.E = 7e10;
  p.A = 1e-4;
  p.Iy = 1e-9;
  p.Iz = 1e-9;
  p.l1 = 0.0;
  p.l2 = 1.0;
  return p;
}

namespace {

ScenarioConfig chain_config(int n, JointKind kind, int modes) {
  ScenarioConfig cfg;
  cfg.modes = modes;
  for (int i = 0; i < n; ++i) {
    LinkConfig lc;
    lc.params = canonical_link();
    cfg.links.push_back(lc);
    JointConfig jc;
    jc.kind = kind;
    jc.axis = Vec3::UnitZ();
    cfg.joints.push_back(jc);
  }
  return cfg;
}

/// Planar angle of a link's x axis, unwrapped against `previous`.
double planar_angle(const Mat3& R, double previous) {
  double a = std::atan2(R(1, 0), R(0, 0));
  while (a - previous > std::numbers::pi) a -= 2.0 * std::numbers::pi;
  while (a - previous < -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

double max_abs_eta(const ChainState& s) {
  double m = 0.0;
  for (const LinkState& ls : s.links) m = std::max(m, ls.eta.lpNorm<Eigen::Infinity>());
  return m;
}

using LMat6 = Eigen::Matrix<long double, 6, 6>;

/// Scaling-and-squaring Taylor exponential of a 6x6 matrix.
LMat6 expm6(const LMat6& A) {
  int squarings = 0;
  long double norm = A.lpNorm<Eigen::Infinity>();
  while (norm > 0.5L) {
    norm *= 0.5L;
    ++squarings;
  }
  const LMat6 B = A / std::pow(2.0L, squarings);
  LMat6 term = LMat6::Identity(), out = LMat6::Identity();
  for (int k = 1; k <= 24; ++k) {
    term = term * B / static_cast<long double>(k);
    out += term;
  }
  for (int k = 0; k < squarings; ++k) out = out * out;
  return out;
}

Mat6 hand_adjoint(const Vec6& z) {
  auto hat = [](const Vec3& a) {
    Mat3 m;
    m << 0, -a(2), a(1), a(2), 0, -a(0), -a(1), a(0), 0;
    return m;
  };
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = hat(z.tail<3>());
  ad.topRightCorner<3, 3>() = hat(z.head<3>());
  ad.bottomRightCorner<3, 3>() = hat(z.tail<3>());
  return ad;
}

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Vec3(n(rng), n(rng), n(rng));
}

}  // namespace

Scenario pendulum_scenario(double theta0, double stiffness_scale, int modes) {
  ScenarioConfig cfg = chain_config(1, JointKind::Revolute, modes);
  cfg.links[0].params.E *= stiffness_scale;
  cfg.links[0].rotation = Vec3(0.0, 0.0, theta0);
  return build_scenario(cfg);
}

OracleReport transform_rate_order(std::uint64_t seed, const AdjointFn& ad) {
  return run_suite("transform rate order", [&](OracleReport& rep) {
    std::mt19937_64 rng(seed);
    const std::array<double, 3> steps{1e-3, 1e-4, 1e-5};
    double min_order = std::numeric_limits<double>::infinity();
    double worst_fine = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Mat6 X0 = adjoint_transform(rotation_exp(random_vec(rng, 1.0)), random_vec(rng, 1.0));
      Twist z;
      z.lin = random_vec(rng, 1.0);
      z.ang = random_vec(rng, 1.0);
      const LMat6 gen = -hand_adjoint(z.stacked()).cast<long double>();
      const LMat6 LX0 = X0.cast<long double>();
      std::uniform_real_distribution<double> ut(0.0, 1.0);
      const long double t = ut(rng);
      const Mat6 X = (LX0 * expm6(t * gen)).cast<double>();
      const Mat6 rate = ad ? Mat6(-X * ad(z)) : transform_dot(X, z);
      std::array<double, 3> err{};
      for (std::size_t k = 0; k < steps.size(); ++k) {
        const long double dt = steps[k];
        const LMat6 fd = (LX0 * expm6((t + dt) * gen) - LX0 * expm6((t - dt) * gen)) / (2.0L * dt);
        err[k] = (fd.cast<double>() - rate).norm();
      }
      for (std::size_t k = 0; k + 1 < steps.size(); ++k) {
        const double order = std::log10(err[k] / std::max(err[k + 1], 1e-300)) /
                             std::log10(steps[k] / steps[k + 1]);
        min_order = std::min(min_order, order);
      }
      worst_fine = std::max(worst_fine, err[2]);
    }
    rep.metrics.push_back({"min_order", min_order, 1.9, Bound::AtLeast});
    rep.metrics.push_back({"residual_at_1e-5", worst_fine, 1e-6, Bound::AtMost});
    rep.detail = "20 random frames, central differences at dt = 1e-3, 1e-4, 1e-5";
  });
}

OracleReport mass_matrix_structure(std::uint64_t seed, int samples) {
  return run_suite("mass matrix structure", [&](OracleReport& rep) {
    ScenarioConfig cfg = chain_config(1, JointKind::Fixed, 2);
    cfg.options.section_inertia = true;
    const Scenario sc = build_scenario(cfg);
    const LinkParameters& p = sc.model.links[0];
    const ModalIntegralCache& c = sc.model.caches[0];
    const int nm = sc.model.modal_dof();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst_sym = 0.0;
    int failures = 0;
    for (int k = 0; k < samples; ++k) {
      LinkKinematicState st;
      st.R = rotation_exp(random_vec(rng, 2.0));
      st.r = random_vec(rng, 1.0);
      st.z.lin = random_vec(rng, 1.0);
      st.z.ang = random_vec(rng, 1.0);
      VecX eta(nm);
      for (int j = 0; j < nm; ++j) eta(j) = nd(rng);
      double peak = 0.0;
      for (const Mat3X& phi : c.phi_nodes) peak = std::max(peak, (phi * eta).norm());
      for (const Mat3X& phi : {c.at_l1[0], c.at_l2[0]}) peak = std::max(peak, (phi * eta).norm());
      eta *= u(rng) * 0.1 * p.length() / std::max(peak, 1e-300);
      const LinkSamples smp = sample(c, eta, VecX::Zero(nm));
      MatX M(6 + nm, 6 + nm);
      M.topLeftCorner<6, 6>() = mass_matrix(p, st, smp, sc.model.options);
      const MatX G = coupling_matrix(p, st, smp, c.phi_nodes);
      M.topRightCorner(6, nm) = G;
      M.bottomLeftCorner(nm, 6) = G.transpose();
      M.bottomRightCorner(nm, nm) = p.rho_a() * c.gram;
      const double scale = M.cwiseAbs().maxCoeff();
      worst_sym = std::max(worst_sym, (M - M.transpose()).cwiseAbs().maxCoeff() / scale);
      Eigen::LLT<MatX> llt(M);
      if (llt.info() != Eigen::Success) ++failures;
    }
    rep.metrics.push_back({"symmetry_residual", worst_sym, 1e-12, Bound::AtMost});
    rep.metrics.push_back({"cholesky_failures", static_cast<double>(failures), 0.0, Bound::AtMost});
    rep.detail = std::to_string(samples) + " random states, link plus modal mass matrix, section inertia on";
  });
}

OracleReport modal_frequency() {
  return run_suite("modal frequency", [&](OracleReport& rep) {
    const double beta1 = characteristic_roots(BasisKind::ClampedFree, 1).front();
    rep.metrics.push_back({"beta1_l_error", std::abs(beta1 - 1.875104), 1e-4, Bound::AtMost});

    ScenarioConfig cfg = chain_config(1, JointKind::Fixed, 2);
    cfg.gravity = Vec3::Zero();
    cfg.links[0].eta = VecX::Zero(6);
    cfg.links[0].eta(1) = 1e-3;
    cfg.integrator.step = 1e-4;
    const Scenario sc = build_scenario(cfg);
    const LinkParameters& p = sc.model.links[0];
    const double predicted = beta1 * beta1 / (p.length() * p.length()) * std::sqrt(p.E * p.Iz / p.rho_a());

    Integrator integ(sc.model, cfg.integrator, sc.loads);
    const Mat3X tip = sc.model.caches[0].at_l2[0];
    ChainState s = sc.initial;
    std::vector<double> crossings;
    double prev = (tip * s.links[0].eta)(1);
    const int steps = 10000;
    for (int k = 0; k < steps; ++k) {
      const double t0 = s.t;
      s = integ.step(s);
      const double y = (tip * s.links[0].eta)(1);
      if (prev < 0.0 && y >= 0.0) crossings.push_back(t0 + (s.t - t0) * prev / (prev - y));
      prev = y;
    }
    if (crossings.size() < 2) throw std::runtime_error("too few oscillations");
    const double measured = 2.0 * std::numbers::pi * (crossings.size() - 1) /
                            (crossings.back() - crossings.front());
    rep.metrics.push_back({"frequency_rel_error", std::abs(measured - predicted) / predicted, 0.01,
                           Bound::AtMost});
    char buf[120];
    std::snprintf(buf, sizeof buf, "tip frequency %.4f rad/s, predicted %.4f rad/s", measured, predicted);
    rep.detail = buf;
  });
}

OracleReport rigid_limit_pendulum() {
  return run_suite("rigid limit pendulum", [&](OracleReport& rep) {
    const double h = 1e-4, t_end = 2.0;
    IntegratorConfig ic;
    ic.scheme = Scheme::Gauss4;
    ic.step = h;
    ic.t_end = t_end;
    ic.stride = 10;

    const Scenario stiff = pendulum_scenario(0.0, 1e6);
    const LinkParameters& p = stiff.model.links[0];
    const PendulumTrace oracle =
        rigid_pendulum_oracle({p.mass(), p.length()}, -stiff.model.gravity.y(), 0.0, 0.0, t_end, h / 10);

    double angle = 0.0, max_dtheta = 0.0, eta_stiff = 0.0;
    simulate(stiff.model, stiff.initial, ic, stiff.loads, [&](const TrajectoryRecord& rec) {
      angle = planar_angle(rec.state.links[0].kin.R, angle);
      max_dtheta = std::max(max_dtheta, std::abs(angle - sample_angle(oracle, rec.state.t)));
      eta_stiff = std::max(eta_stiff, max_abs_eta(rec.state));
    });

    const Scenario nominal = pendulum_scenario(0.0, 1.0);
    double eta_nominal = 0.0;
    simulate(nominal.model, nominal.initial, ic, nominal.loads, [&](const TrajectoryRecord& rec) {
      eta_nominal = std::max(eta_nominal, max_abs_eta(rec.state));
    });
    rep.metrics.push_back({"max_angle_error_rad", max_dtheta, 1e-3, Bound::AtMost});
    rep.metrics.push_back({"eta_ratio", eta_stiff / eta_nominal, 1e-5, Bound::AtMost});
    char buf[160];
    std::snprintf(buf, sizeof buf, "gauss4 h=1e-4, 2 s; max|eta| stiff %.3e, nominal %.3e",
                  eta_stiff, eta_nominal);
    rep.detail = buf;
  });
}

OracleReport dae_integrity(std::uint64_t seed) {
  return run_suite("dae integrity", [&](OracleReport& rep) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst_residual = 0.0, worst_det = 0.0, worst_force = 0.0;
    int singular = 0;
    for (int n = 1; n <= 3; ++n) {
      for (int r = 1; r <= 2; ++r) {
        const Scenario sc = build_scenario(chain_config(n, JointKind::Revolute, r));
        for (int trial = 0; trial < 5; ++trial) {
          ChainState st = sc.initial;
          for (LinkState& ls : st.links) {
            ls.kin.R = rotation_exp(Vec3(0.3 * nd(rng), 0.3 * nd(rng), nd(rng))) * ls.kin.R;
            ls.kin.z.lin = random_vec(rng, 0.5);
            ls.kin.z.ang = random_vec(rng, 0.5);
            for (int j = 0; j < ls.eta.size(); ++j) {
              ls.eta(j) = 1e-3 * nd(rng);
              ls.eta_dot(j) = 1e-2 * nd(rng);
            }
          }
          const SystemMatrices m = assemble(sc.model, st, ExternalLoads::zero(n));
          worst_residual = std::max(worst_residual, solve(m).residual);
          const SchurReport sr = schur_check(m);
          if (sr.singular) ++singular;
          worst_det = std::max(worst_det, sr.det_identity_error);
          for (int k = 0; k < n; ++k) {
            const double f = m.MDphi.middleCols(SystemMatrices::wrench_offset(k), 6).cwiseAbs().maxCoeff();
            worst_force = std::max(worst_force, f);
          }
        }
      }
    }
    // accepted solves along a trajectory
    const Scenario chain = build_scenario(chain_config(2, JointKind::Revolute, 2));
    IntegratorConfig ic;
    ic.step = 5e-5;
    ic.t_end = 0.05;
    ic.stride = 1000;
    const Trajectory traj = simulate(chain.model, chain.initial, ic, chain.loads);
    worst_residual = std::max(worst_residual, traj.stats.max_solve_residual);

    rep.metrics.push_back({"max_solve_residual", worst_residual, 1e-9, Bound::AtMost});
    rep.metrics.push_back({"schur_det_error", worst_det, 1e-6, Bound::AtMost});
    rep.metrics.push_back({"force_column_max", worst_force, 0.0, Bound::AtMost});
    rep.metrics.push_back({"singular_cases", static_cast<double>(singular), 0.0, Bound::AtMost});
    rep.detail = "n in {1,2,3}, r in {1,2}, 5 random states each, plus a 2-link run";
  });
}

namespace {

double max_velocity_residual_2link(bool baumgarte) {
  const Scenario sc = build_scenario(chain_config(2, JointKind::Revolute, 2));
  IntegratorConfig ic;
  ic.step = 5e-5;
  ic.t_end = 5.0;
  ic.stride = 1000;
  ic.baumgarte.enabled = baumgarte;
  const Trajectory traj = simulate(sc.model, sc.initial, ic, sc.loads);
  return traj.stats.max_velocity_residual;
}

}  // namespace

OracleReport constraint_fidelity() {
  return run_suite("constraint fidelity", [&](OracleReport& rep) {
    rep.metrics.push_back(
        {"velocity_residual_baumgarte_on", max_velocity_residual_2link(true), 1e-6, Bound::AtMost});
    rep.metrics.push_back(
        {"velocity_residual_baumgarte_off", max_velocity_residual_2link(false), 1e-3, Bound::AtMost});
    rep.detail = "2-link revolute chain under gravity, rk4 h=5e-5, 5 s, r=2";
  });
}

OracleReport conservation() {
  return run_suite("conservation", [&](OracleReport& rep) {
    ScenarioConfig cfg = chain_config(1, JointKind::Free, 2);
    cfg.gravity = Vec3::Zero();
    cfg.options.section_inertia = true;
    cfg.links[0].eta_dot = VecX::Zero(6);
    cfg.links[0].eta_dot(1) = 0.05;
    cfg.links[0].eta_dot(2) = 0.02;
    cfg.links[0].eta_dot(4) = 0.01;
    cfg.integrator.scheme = Scheme::Gauss4;
    cfg.integrator.step = 1e-4;
    cfg.integrator.t_end = 1.0;
    cfg.integrator.stride = 10;
    const Scenario sc = build_scenario(cfg);
    std::vector<ChainState> states;
    simulate(sc.model, sc.initial, cfg.integrator, sc.loads,
             [&](const TrajectoryRecord& rec) { states.push_back(rec.state); });
    const EnergyAudit audit = energy_audit(sc.model, states, sc.loads);
    rep.metrics.push_back({"linear_momentum_drift", audit.max_linear_drift, 1e-6, Bound::AtMost});
    rep.metrics.push_back({"angular_momentum_drift", audit.max_angular_drift, 1e-6, Bound::AtMost});
    rep.metrics.push_back({"energy_drift", audit.max_energy_drift, 1e-5, Bound::AtMost});
    rep.detail = "free link, section inertia, zero gravity, gauss4 h=1e-4, 1 s, independent audit";
  });
}

OracleReport integrator_order() {
  return run_suite("integrator order", [&](OracleReport& rep) {
    const Scenario sc = pendulum_scenario(0.0, 1e-4, 1);
    const double t_end = 0.2;
    auto run = [&](double h) {
      IntegratorConfig ic;
      ic.step = h;
      ic.t_end = t_end;
      Integrator integ(sc.model, ic, sc.loads);
      ChainState s = sc.initial;
      const long steps = std::lround(t_end / h);
      for (long k = 0; k < steps; ++k) s = integ.step(s);
      return pack(s);
    };
    const double h = 4e-3;
    const VecX a = run(h), b = run(h / 2), c = run(h / 4);
    const double e1 = (a - b).norm(), e2 = (b - c).norm();
    rep.metrics.push_back({"richardson_order", std::log2(e1 / e2), 3.5, Bound::AtLeast});
    char buf[120];
    std::snprintf(buf, sizeof buf, "soft pendulum (E x 1e-4, r=1), h = %.0e/%.0e/%.0e, 0.2 s", h, h / 2,
                  h / 4);
    rep.detail = buf;
  });
}

namespace {

const char* kDeterminismConfig = R"({
  "modes_per_axis": 2,
  "links": [{"rotation": [0, 0, -0.5]}, {}],
  "joints": [{"type": "revolute", "axis": [0, 0, 1]}, {"type": "revolute", "axis": [0, 0, 1]}],
  "wrenches": [{"link": 2, "end": "tip", "type": "sinusoid", "force": [0, 0.05, 0.02],
                "frequency": 3.0}],
  "integrator": {"scheme": "rk4", "step": 5e-5, "t_end": 0.05, "stride": 20}
})";

std::string run_to_csv(const std::string& path) {
  const ScenarioConfig cfg = parse_config(kDeterminismConfig);
  const Scenario sc = build_scenario(cfg);
  {
    CsvWriter writer(path, sc.model);
    simulate(sc.model, sc.initial, cfg.integrator, sc.loads,
             [&](const TrajectoryRecord& rec) { writer.write(rec); });
  }
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

OracleReport determinism() {
  return run_suite("determinism", [&](OracleReport& rep) {
    const std::filesystem::path dir = std::filesystem::temp_directory_path();
    const std::string stem = "flexsyn_det_" + std::to_string(::getpid());
    const std::string p1 = (dir / (stem + "_a.csv")).string(), p2 = (dir / (stem + "_b.csv")).string();
    const std::string a = run_to_csv(p1), b = run_to_csv(p2);
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
    std::size_t differing = a.size() == b.size() ? 0 : std::max(a.size(), b.size());
    if (a.size() == b.size()) {
      for (std::size_t k = 0; k < a.size(); ++k) differing += a[k] != b[k];
    }
    rep.metrics.push_back({"differing_bytes", static_cast<double>(differing), 0.0, Bound::AtMost});
    rep.metrics.push_back({"csv_bytes", static_cast<double>(a.size()), 1.0, Bound::AtLeast});
    rep.detail = "2-link chain with a sinusoidal tip load, two runs";
  });
}

std::vector<OracleReport> acceptance_suites(std::uint64_t seed) {
  return {transform_rate_order(seed), mass_matrix_structure(seed), modal_frequency(),
          rigid_limit_pendulum(),     dae_integrity(seed),         constraint_fidelity(),
          conservation(),             integrator_order(),          determinism()};
}

std::vector<OracleReport> property_suites(std::uint64_t seed) {
  std::vector<OracleReport> out;
  const LinkParameters link = canonical_link();
  const Rod rod{link.mass(), link.length()};
  const double g = 9.81;

  out.push_back(run_suite("pendulum oracle small-angle period", [&](OracleReport& rep) {
    const double down = -0.5 * std::numbers::pi;
    const PendulumTrace tr = rigid_pendulum_oracle(rod, g, down + 0.01, 0.0, 5.0, 1e-4);
    std::vector<double> up;
    for (std::size_t k = 1; k < tr.t.size(); ++k) {
      const double a = tr.theta[k - 1][0] - down, b = tr.theta[k][0] - down;
      if (a < 0.0 && b >= 0.0) up.push_back(tr.t[k - 1] + (tr.t[k] - tr.t[k - 1]) * a / (a - b));
    }
    if (up.size() < 2) throw std::runtime_error("no full period");
    const double period = (up.back() - up.front()) / (up.size() - 1);
    const double expected = 2.0 * std::numbers::pi * std::sqrt(2.0 * rod.length / (3.0 * g));
    rep.metrics.push_back({"period_rel_error", std::abs(period - expected) / expected, 5e-3, Bound::AtMost});
  }));

  out.push_back(run_suite("pendulum oracle rest", [&](OracleReport& rep) {
    const double down = -0.5 * std::numbers::pi;
    const PendulumTrace tr = rigid_pendulum_oracle(rod, g, down, 0.0, 2.0, 1e-4);
    double drift = 0.0;
    for (const auto& th : tr.theta) drift = std::max(drift, std::abs(th[0] - down));
    rep.metrics.push_back({"max_angle_drift", drift, 1e-12, Bound::AtMost});
  }));

  out.push_back(run_suite("oracle energy self-check", [&](OracleReport& rep) {
    auto drift = [](const PendulumTrace& tr, double scale) {
      double d = 0.0;
      for (double e : tr.energy) d = std::max(d, std::abs(e - tr.energy.front()) / scale);
      return d;
    };
    const double scale = rod.mass * g * rod.length;
    rep.metrics.push_back({"single_rel_drift", drift(rigid_pendulum_oracle(rod, g, 0.0, 0.0, 2.0, 1e-5), scale),
                           1e-8, Bound::AtMost});
    rep.metrics.push_back({"double_rel_drift",
                           drift(double_pendulum_oracle(rod, rod, g, {0.0, 0.3}, {0.0, 0.0}, 2.0, 1e-5), scale),
                           1e-8, Bound::AtMost});
  }));

  out.push_back(transform_rate_order(seed));
  out.push_back(run_suite("transform rate mutation", [&](OracleReport& rep) {
    const OracleReport mutated = transform_rate_order(seed, [](const Twist& z) {
      Mat6 ad = twist_adjoint(z);
      ad.topRightCorner<3, 3>() *= -1.0;
      return ad;
    });
    rep.metrics.push_back({"mutated_suite_passes", mutated.passed() ? 1.0 : 0.0, 0.0, Bound::AtMost});
  }));
  out.push_back(mass_matrix_structure(seed, 200));
  out.push_back(dae_integrity(seed));

  out.push_back(run_suite("static clamped link", [&](OracleReport& rep) {
    ScenarioConfig cfg = chain_config(1, JointKind::Fixed, 2);
    cfg.gravity = Vec3::Zero();
    cfg.integrator.t_end = 0.05;
    const Scenario sc = build_scenario(cfg);
    std::vector<ChainState> states;
    simulate(sc.model, sc.initial, cfg.integrator, sc.loads,
             [&](const TrajectoryRecord& rec) { states.push_back(rec.state); });
    double e = 0.0;
    for (const AuditSample& a : energy_audit(sc.model, states, sc.loads).samples) {
      e = std::max({e, std::abs(a.kinetic), std::abs(a.elastic), std::abs(a.gravitational)});
    }
    rep.metrics.push_back({"max_energy_J", e, 0.0, Bound::AtMost});
  }));

  out.push_back(run_suite("free fall energy", [&](OracleReport& rep) {
    ScenarioConfig cfg = chain_config(1, JointKind::Free, 2);
    cfg.options.section_inertia = true;
    cfg.links[0].params.E *= 1e6;
    cfg.integrator.scheme = Scheme::Gauss4;
    cfg.integrator.step = 1e-3;
    cfg.integrator.t_end = 0.5;
    const Scenario sc = build_scenario(cfg);
    std::vector<ChainState> states;
    simulate(sc.model, sc.initial, cfg.integrator, sc.loads,
             [&](const TrajectoryRecord& rec) { states.push_back(rec.state); });
    const AuditSample a = audit_state(sc.model, states.front());
    const AuditSample b = audit_state(sc.model, states.back());
    const double dke = b.kinetic - a.kinetic, dpe = b.gravitational - a.gravitational;
    rep.metrics.push_back({"energy_exchange_rel_error", std::abs(dke + dpe) / std::abs(dpe), 1e-5,
                           Bound::AtMost});
    const double expected_ke = 0.5 * sc.model.links[0].mass() * std::pow(9.81 * 0.5, 2);
    rep.metrics.push_back({"kinetic_rel_error", std::abs(b.kinetic - expected_ke) / expected_ke, 1e-5,
                           Bound::AtMost});
  }));

  out.push_back(run_suite("forced link power balance", [&](OracleReport& rep) {
    ScenarioConfig cfg = chain_config(1, JointKind::Fixed, 2);
    cfg.gravity = Vec3::Zero();
    WrenchSchedule w;
    w.type = WrenchSchedule::Type::Sinusoid;
    w.force = Vec3(0.0, 0.1, 0.05);
    w.frequency = 5.0;
    cfg.wrenches.push_back(w);
    cfg.integrator.step = 1e-4;
    cfg.integrator.t_end = 0.2;
    cfg.integrator.stride = 1;
    const Scenario sc = build_scenario(cfg);
    std::vector<ChainState> states;
    simulate(sc.model, sc.initial, cfg.integrator, sc.loads,
             [&](const TrajectoryRecord& rec) { states.push_back(rec.state); });
    const EnergyAudit audit = energy_audit(sc.model, states, sc.loads, 401);
    rep.metrics.push_back({"balance_rel_error", audit.max_balance_error, 2e-4, Bound::AtMost});
  }));
  return out;
}

}  // namespace flexsyn::validation
