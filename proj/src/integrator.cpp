#include "flexsyn/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexsyn {

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::RK4: return "rk4";
    case Scheme::ExplicitEuler: return "explicit-euler";
    default: return "gauss4";
  }
}

Scheme scheme_from_string(const std::string& name) {
  if (name == "rk4") return Scheme::RK4;
  if (name == "explicit-euler" || name == "euler") return Scheme::ExplicitEuler;
  if (name == "gauss4") return Scheme::Gauss4;
  throw std::invalid_argument("unknown integrator scheme '" + name + "'");
}

std::vector<std::string> IntegratorConfig::validate() const {
  std::vector<std::string> errors;
  if (!(step > 0.0) || !std::isfinite(step)) errors.push_back("step: must be > 0");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) errors.push_back("t_end: must be >= 0");
  if (stride < 1) errors.push_back("stride: must be >= 1");
  if (baumgarte.alpha < 0.0 || baumgarte.beta < 0.0) {
    errors.push_back("baumgarte: gains must be >= 0");
  }
  return errors;
}

int state_size(const ChainModel& model) {
  return model.size() * (18 + 2 * model.modal_dof());
}

VecX pack(const ChainState& state) {
  std::vector<double> buf;
  for (const LinkState& ls : state.links) {
    buf.insert(buf.end(), ls.kin.R.data(), ls.kin.R.data() + 9);
    buf.insert(buf.end(), ls.kin.r.data(), ls.kin.r.data() + 3);
    buf.insert(buf.end(), ls.eta.data(), ls.eta.data() + ls.eta.size());
    buf.insert(buf.end(), ls.kin.z.lin.data(), ls.kin.z.lin.data() + 3);
    buf.insert(buf.end(), ls.kin.z.ang.data(), ls.kin.z.ang.data() + 3);
    buf.insert(buf.end(), ls.eta_dot.data(), ls.eta_dot.data() + ls.eta_dot.size());
  }
  return Eigen::Map<VecX>(buf.data(), static_cast<Eigen::Index>(buf.size()));
}

ChainState unpack(const ChainModel& model, const VecX& x, double t) {
  if (x.size() != state_size(model)) throw std::invalid_argument("unpack: state size mismatch");
  const int nm = model.modal_dof();
  ChainState s;
  s.t = t;
  Eigen::Index k = 0;
  for (int i = 1; i <= model.size(); ++i) {
    LinkState ls;
    ls.kin.R = Eigen::Map<const Mat3>(x.data() + k);
    k += 9;
    ls.kin.r = x.segment<3>(k);
    k += 3;
    ls.eta = x.segment(k, nm);
    k += nm;
    ls.kin.z.lin = x.segment<3>(k);
    ls.kin.z.ang = x.segment<3>(k + 3);
    ls.kin.z.frame = FrameId::body(i);
    k += 6;
    ls.eta_dot = x.segment(k, nm);
    k += nm;
    s.links.push_back(ls);
  }
  return s;
}

StateRate derivative(const ChainModel& model, const ChainState& state, const LoadSchedule& loads) {
  const ExternalLoads ext = loads ? loads(state.t) : ExternalLoads::zero(model.size());
  StateRate out;
  out.solution = solve(assemble(model, state, ext));
  const int nm = model.modal_dof();
  out.rate = VecX::Zero(state_size(model));
  Eigen::Index k = 0;
  for (int i = 0; i < model.size(); ++i) {
    const LinkState& ls = state.links[i];
    const Mat3 Rdot = ls.kin.R * skew(ls.kin.z.ang);
    out.rate.segment<9>(k) = Eigen::Map<const VecX>(Rdot.data(), 9);
    k += 9;
    out.rate.segment<3>(k) = ls.kin.z.lin;
    k += 3;
    out.rate.segment(k, nm) = ls.eta_dot;
    k += nm;
    out.rate.segment<6>(k) = out.solution.twist_rates[i];
    k += 6;
    out.rate.segment(k, nm) = out.solution.modal_accelerations[i];
    k += nm;
  }
  return out;
}

EnergyLedger energy(const ChainModel& model, const ChainState& state) {
  EnergyLedger e;
  for (int i = 0; i < model.size(); ++i) {
    const LinkParameters& p = model.links[i];
    const ModalIntegralCache& c = model.caches[i];
    const LinkState& ls = state.links[i];
    const LinkSamples s = sample(c, ls.eta, ls.eta_dot);
    e.kinetic += kinetic_energy(p, ls.kin, s, model.options);
    e.elastic += 0.5 * ls.eta.dot(c.stiffness * ls.eta);
    const Vec3 g_body = ls.kin.R.transpose() * model.gravity;
    double pot = 0.0;
    for (std::size_t q = 0; q < s.size(); ++q) {
      const Vec3 rob = ls.kin.r + Vec3(s.nodes[q], 0.0, 0.0) + s.r_xi[q];
      pot -= s.weights[q] * g_body.dot(rob);
    }
    e.gravitational += p.rho_a() * pot;
  }
  return e;
}

namespace {

void orthonormalize_rotations(const ChainModel& model, VecX& x) {
  const Eigen::Index stride = 18 + 2 * model.modal_dof();
  for (int i = 0; i < model.size(); ++i) {
    Eigen::Map<Mat3> R(x.data() + i * stride);
    R = orthonormalize(R);
  }
}

}  // namespace

Integrator::Integrator(const ChainModel& model, IntegratorConfig config, LoadSchedule loads)
    : model_(model), config_(config), loads_(std::move(loads)) {
  model_.baumgarte = config_.baumgarte;
}

VecX Integrator::rate(const VecX& x, double t) {
  const StateRate r = derivative(model_, unpack(model_, x, t), loads_);
  stats_.max_solve_residual = std::max(stats_.max_solve_residual, r.solution.residual);
  stats_.max_condition = std::max(stats_.max_condition, r.solution.condition);
  return r.rate;
}

void Integrator::refresh_jacobian(const VecX& x, double t) {
  const Eigen::Index n = x.size();
  const VecX f0 = rate(x, t);
  jacobian_.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    VecX xp = x;
    const double d = 1e-7 * std::max(1.0, std::abs(x(j)));
    xp(j) += d;
    jacobian_.col(j) = (rate(xp, t) - f0) / d;
  }
  newton_h_ = 0.0;
  ++stats_.newton_jacobians;
}

VecX Integrator::step_gauss4(const VecX& x, double t, double h) {
  static const double s3 = std::sqrt(3.0);
  const double a11 = 0.25, a12 = 0.25 - s3 / 6.0, a21 = 0.25 + s3 / 6.0, a22 = 0.25;
  const double c1 = 0.5 - s3 / 6.0, c2 = 0.5 + s3 / 6.0;
  const Eigen::Index n = x.size();

  for (int attempt = 0; attempt < 2; ++attempt) {
    if (jacobian_.rows() != n || attempt == 1) refresh_jacobian(x, t);
    if (newton_h_ != h) {
      MatX N = MatX::Identity(2 * n, 2 * n);
      N.topLeftCorner(n, n) -= h * a11 * jacobian_;
      N.topRightCorner(n, n) -= h * a12 * jacobian_;
      N.bottomLeftCorner(n, n) -= h * a21 * jacobian_;
      N.bottomRightCorner(n, n) -= h * a22 * jacobian_;
      newton_lu_.compute(N);
      newton_h_ = h;
    }
    const VecX f0 = rate(x, t);
    VecX k1 = f0, k2 = f0;
    bool converged = false;
    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 12; ++it) {
      VecX g(2 * n);
      g.head(n) = k1 - rate(x + h * (a11 * k1 + a12 * k2), t + c1 * h);
      g.tail(n) = k2 - rate(x + h * (a21 * k1 + a22 * k2), t + c2 * h);
      const VecX dk = -newton_lu_.solve(g);
      k1 += dk.head(n);
      k2 += dk.tail(n);
      double err = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = 1e-13 + 1e-12 * std::abs(x(i));
        err = std::max(err, h * std::max(std::abs(dk(i)), std::abs(dk(n + i))) / scale);
      }
      if (!std::isfinite(err) || (it > 2 && err > prev)) break;
      prev = err;
      if (err <= 1.0) {
        converged = true;
        break;
      }
    }
    if (converged) return x + 0.5 * h * (k1 + k2);
  }
  throw SimulationError("gauss4: Newton iteration did not converge", t);
}

ChainState Integrator::step(const ChainState& state, double h) {
  if (h <= 0.0) h = config_.step;
  const double t = state.t;
  const VecX x = pack(state);
  VecX next;
  switch (config_.scheme) {
    case Scheme::ExplicitEuler:
      next = x + h * rate(x, t);
      break;
    case Scheme::RK4: {
      const VecX k1 = rate(x, t);
      const VecX k2 = rate(x + 0.5 * h * k1, t + 0.5 * h);
      const VecX k3 = rate(x + 0.5 * h * k2, t + 0.5 * h);
      const VecX k4 = rate(x + h * k3, t + h);
      next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      break;
    }
    case Scheme::Gauss4:
      next = step_gauss4(x, t, h);
      break;
  }
  if (!next.allFinite()) throw SimulationError("non-finite state", t + h);
  orthonormalize_rotations(model_, next);
  ++stats_.steps;
  return unpack(model_, next, t + h);
}

TrajectoryRecord make_record(const ChainModel& model, const ChainState& state,
                             const LoadSchedule& loads) {
  TrajectoryRecord rec;
  rec.state = state;
  rec.joint_wrenches = derivative(model, state, loads).solution.joint_wrenches;
  for (int j = 1; j <= model.size(); ++j) {
    rec.velocity_residuals.push_back(joint_velocity_residual(model, state, j).norm());
    rec.position_residuals.push_back(joint_position_residual(model, state, j).norm());
  }
  rec.energy = energy(model, state);
  return rec;
}

Trajectory simulate(const ChainModel& model, const ChainState& initial,
                    const IntegratorConfig& config, const LoadSchedule& loads,
                    const std::function<void(const TrajectoryRecord&)>& observer) {
  const std::vector<std::string> errors = config.validate();
  if (!errors.empty()) throw std::invalid_argument("integrator config: " + errors.front());
  Integrator integ(model, config, loads);
  const ChainModel& m = integ.model();
  Trajectory traj;
  auto emit = [&](const ChainState& s) {
    TrajectoryRecord rec = make_record(m, s, loads);
    if (observer) {
      observer(rec);
    } else {
      traj.records.push_back(std::move(rec));
    }
  };

  const double t0 = initial.t;
  const long steps = static_cast<long>(std::ceil(config.t_end / config.step - 1e-9));
  ChainState state = initial;
  emit(state);
  for (long k = 1; k <= steps; ++k) {
    try {
      const double h = std::min(config.step, t0 + config.t_end - state.t);
      state = integ.step(state, h);
    } catch (const SimulationError&) {
      throw;
    } catch (const std::exception& e) {
      throw SimulationError(e.what(), state.t);
    }
    state.t = std::min(t0 + k * config.step, t0 + config.t_end);
    for (int j = 1; j <= m.size(); ++j) {
      traj.stats.max_velocity_residual = std::max(traj.stats.max_velocity_residual,
                                                  joint_velocity_residual(m, state, j).norm());
      traj.stats.max_position_residual = std::max(traj.stats.max_position_residual,
                                                  joint_position_residual(m, state, j).norm());
    }
    if (k % config.stride == 0 || k == steps) emit(state);
  }
  const SimulationStats& s = integ.stats();
  traj.stats.steps = s.steps;
  traj.stats.max_solve_residual = s.max_solve_residual;
  traj.stats.max_condition = s.max_condition;
  traj.stats.newton_jacobians = s.newton_jacobians;
  return traj;
}

}  // namespace flexsyn
