#include "flexsyn/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flexsyn {

ChainModel make_chain(const std::vector<LinkParameters>& links,
                      const std::vector<JointSpec>& joints, BasisKind kind, int modes,
                      int quadrature_points) {
  if (links.empty()) throw std::invalid_argument("make_chain: at least one link required");
  if (joints.size() != links.size()) {
    throw std::invalid_argument("make_chain: one joint per link required");
  }
  if (modes < 1) throw std::invalid_argument("make_chain: modes must be >= 1");
  ChainModel model;
  model.links = links;
  model.joints = joints;
  model.modes = modes;
  for (const LinkParameters& p : links) {
    model.bases.emplace_back(p, kind, modes);
    model.caches.push_back(build_cache(model.bases.back(), p, quadrature_points));
  }
  model.initial_relative.assign(links.size(), Mat3::Identity());
  return model;
}

ChainState rest_state(const ChainModel& model) {
  ChainState s;
  double x = 0.0;
  for (const LinkParameters& p : model.links) {
    LinkState ls;
    ls.kin.r = Vec3(x - p.l1, 0.0, 0.0);
    ls.kin.z.frame = FrameId::body(static_cast<int>(s.links.size()) + 1);
    ls.eta = VecX::Zero(model.modal_dof());
    ls.eta_dot = VecX::Zero(model.modal_dof());
    s.links.push_back(ls);
    x += p.length();
  }
  return s;
}

LinkEvaluation evaluate_link(const ChainModel& model, const ChainState& state, int link) {
  const LinkParameters& p = model.links[link - 1];
  const ModalIntegralCache& c = model.caches[link - 1];
  const LinkState& ls = state.links[link - 1];
  LinkEvaluation ev;
  ev.samples = sample(c, ls.eta, ls.eta_dot, model.options.elastic_moment_terms);
  ev.base = endpoint_motion(ls.kin, p.l1, c.at_l1[0] * ls.eta, c.at_l1[0] * ls.eta_dot, c.at_l1[0]);
  ev.tip = endpoint_motion(ls.kin, p.l2, c.at_l2[0] * ls.eta, c.at_l2[0] * ls.eta_dot, c.at_l2[0]);
  return ev;
}

void set_reference(ChainModel& model, const ChainState& state) {
  model.anchor = evaluate_link(model, state, 1).base.position;
  model.initial_relative.assign(model.links.size(), Mat3::Identity());
  for (int j = 1; j <= model.size(); ++j) {
    const Mat3& Rc = state.links[j - 1].kin.R;
    const Mat3 Rp = j == 1 ? Mat3::Identity() : state.links[j - 2].kin.R;
    model.initial_relative[j - 1] = Rp.transpose() * Rc;
  }
}

ExternalLoads ExternalLoads::zero(int n) {
  ExternalLoads l;
  for (int i = 1; i <= n; ++i) {
    Wrench w;
    w.frame = FrameId::body(i);
    l.base.push_back(w);
    l.tip.push_back(w);
  }
  return l;
}

namespace {

EndpointMotion parent_tip(const ChainModel& model, const ChainState& state, int joint) {
  if (joint == 1) return ground_endpoint(model.anchor);
  return evaluate_link(model, state, joint - 1).tip;
}

ProjectionMatrix joint_projection(const ChainModel& model, const ChainState& state, int joint) {
  const LinkKinematicState& kin = state.links[joint - 1].kin;
  return projection(model.joints[joint - 1], kin.R, kin.z.ang);
}

}  // namespace

Vec6 joint_velocity_residual(const ChainModel& model, const ChainState& state, int joint) {
  return velocity_constraint_residual(joint_projection(model, state, joint),
                                      parent_tip(model, state, joint),
                                      evaluate_link(model, state, joint).base);
}

Vec6 joint_position_residual(const ChainModel& model, const ChainState& state, int joint) {
  const Mat3 Rp = joint == 1 ? Mat3::Identity() : state.links[joint - 2].kin.R;
  return position_constraint_residual(
      model.joints[joint - 1], Rp, state.links[joint - 1].kin.R,
      parent_tip(model, state, joint).position, evaluate_link(model, state, joint).base.position,
      model.initial_relative[joint - 1]);
}

MatX SystemMatrices::system_matrix() const {
  const int a = 12 * n;
  const int b = 3 * r * n;
  MatX m(a + b, a + b);
  m << Mq, MW, MDphi, MWphi;
  return m;
}

VecX SystemMatrices::rhs() const {
  VecX v(12 * n + 3 * r * n);
  v << Fq - hq, Fphi - hphi;
  return v;
}

SystemMatrices assemble(const ChainModel& model, const ChainState& state,
                        const ExternalLoads& loads) {
  const int n = model.size();
  const int r = model.modes;
  const int nm = 3 * r;
  if (static_cast<int>(state.links.size()) != n || static_cast<int>(loads.base.size()) != n ||
      static_cast<int>(loads.tip.size()) != n) {
    throw std::invalid_argument("assemble: dimension mismatch");
  }
  SystemMatrices m;
  m.n = n;
  m.r = r;
  m.Mq = MatX::Zero(12 * n, 12 * n);
  m.MW = MatX::Zero(12 * n, nm * n);
  m.MDphi = MatX::Zero(nm * n, 12 * n);
  m.MWphi = MatX::Zero(nm * n, nm * n);
  m.hq = VecX::Zero(12 * n);
  m.Fq = VecX::Zero(12 * n);
  m.hphi = VecX::Zero(nm * n);
  m.Fphi = VecX::Zero(nm * n);

  std::vector<LinkEvaluation> evals;
  evals.reserve(n);
  for (int i = 1; i <= n; ++i) {
    const LinkParameters& p = model.links[i - 1];
    const ModalIntegralCache& c = model.caches[i - 1];
    const LinkState& ls = state.links[i - 1];
    if (ls.eta.size() != nm || ls.eta_dot.size() != nm) {
      throw std::invalid_argument("assemble: modal coordinate size mismatch");
    }
    evals.push_back(evaluate_link(model, state, i));
    const LinkEvaluation& ev = evals.back();
    const int d = SystemMatrices::twist_offset(i);
    const int mi = nm * (i - 1);

    const MatX coupling = coupling_matrix(p, ls.kin, ev.samples, c.phi_nodes);
    m.Mq.block<6, 6>(d, d) = mass_matrix(p, ls.kin, ev.samples, model.options);
    m.MW.block(d, mi, 6, nm) = coupling;
    m.hq.segment<6>(d) = bias_vector(p, ls.kin, ev.samples, model.gravity, model.options);
    const Mat3& R = ls.kin.R;
    m.Fq.segment<6>(d) = end_wrench_vector(loads.base[i - 1], loads.tip[i - 1],
                                           R.transpose() * ev.base.position,
                                           R.transpose() * ev.tip.position);
    m.Mq.block<6, 6>(d, SystemMatrices::wrench_offset(i - 1)) = ev.base.C.transpose();
    if (i < n) m.Mq.block<6, 6>(d, SystemMatrices::wrench_offset(i)) = -ev.tip.C.transpose();

    // Modal equations, scaled by rho*A.
    m.MDphi.block(mi, d, nm, 6) = coupling.transpose();
    m.MWphi.block(mi, mi, nm, nm) = p.rho_a() * c.gram;
    const Vec3 g_body = R.transpose() * model.gravity;
    const Vec3& w = ls.kin.z.ang;
    VecX h = VecX::Zero(nm);
    for (std::size_t q = 0; q < ev.samples.size(); ++q) {
      const Vec3 rob = ls.kin.r + Vec3(ev.samples.nodes[q], 0.0, 0.0) + ev.samples.r_xi[q];
      const Vec3 vob = ls.kin.z.lin + ev.samples.v_xi[q];
      const Vec3 a = 2.0 * w.cross(vob) + w.cross(w.cross(rob)) - g_body;
      h += ev.samples.weights[q] * c.phi_nodes[q].transpose() * a;
    }
    m.hphi.segment(mi, nm) = c.stiffness * ls.eta + p.rho_a() * h;
  }

  for (int j = 1; j <= n; ++j) {
    const int row = SystemMatrices::wrench_offset(j - 1);
    const EndpointMotion tip = j == 1 ? ground_endpoint(model.anchor) : evals[j - 2].tip;
    const ConstraintRows rows = acceleration_constraint_rows(
        joint_projection(model, state, j), tip, evals[j - 1].base, model.baumgarte);
    m.Mq.block<6, 6>(row, row) = rows.reaction;
    m.Mq.block<6, 6>(row, SystemMatrices::twist_offset(j)) = rows.child_twist;
    m.MW.block(row, nm * (j - 1), 6, nm) = rows.child_modal;
    if (j > 1) {
      m.Mq.block<6, 6>(row, SystemMatrices::twist_offset(j - 1)) = rows.parent_twist;
      m.MW.block(row, nm * (j - 2), 6, nm) = rows.parent_modal;
    }
    m.hq.segment<6>(row) = rows.bias;
  }

  // End loads do virtual work on the modes. The joint wrench part is then
  // replaced by the linear momentum balance of the outboard links, so the
  // modal rows keep no interaction-wrench columns.
  const int cols = 12 * n;
  std::vector<MatX> outboard_q(n + 2, MatX::Zero(3, cols));
  std::vector<MatX> outboard_w(n + 2, MatX::Zero(3, nm * n));
  std::vector<Vec3> outboard_h(n + 2, Vec3::Zero());
  std::vector<Vec3> outboard_f(n + 2, Vec3::Zero());
  for (int k = n; k >= 1; --k) {
    // Inverse of R^T rather than R, so the cancellation is exact for stage
    // states that are not quite orthonormal.
    const Mat3 R = state.links[k - 1].kin.R.transpose().inverse();
    const int d = SystemMatrices::twist_offset(k);
    outboard_q[k] = outboard_q[k + 1] + R * m.Mq.middleRows(d, 3);
    outboard_w[k] = outboard_w[k + 1] + R * m.MW.middleRows(d, 3);
    outboard_h[k] = outboard_h[k + 1] + R * m.hq.segment<3>(d);
    outboard_f[k] = outboard_f[k + 1] + R * m.Fq.segment<3>(d);
  }
  for (int i = 1; i <= n; ++i) {
    const ModalIntegralCache& c = model.caches[i - 1];
    const int mi = nm * (i - 1);
    const MatX base = evals[i - 1].base.modal.topRows(3).transpose();
    const MatX tip = evals[i - 1].tip.modal.topRows(3).transpose();
    m.Fphi.segment(mi, nm) += c.at_l1[0].transpose() * loads.base[i - 1].lin -
                              c.at_l2[0].transpose() * loads.tip[i - 1].lin;
    m.MDphi.block(mi, 0, nm, cols) += tip * outboard_q[i + 1] - base * outboard_q[i];
    m.MWphi.middleRows(mi, nm) += tip * outboard_w[i + 1] - base * outboard_w[i];
    m.hphi.segment(mi, nm) += tip * outboard_h[i + 1] - base * outboard_h[i];
    m.Fphi.segment(mi, nm) += tip * outboard_f[i + 1] - base * outboard_f[i];
    // The wrench columns cancel exactly: +base at F_J(i-1), -tip at F_J(i).
    m.MDphi.block(mi, SystemMatrices::wrench_offset(i - 1), nm, 3) += base;
    if (i < n) m.MDphi.block(mi, SystemMatrices::wrench_offset(i), nm, 3) -= tip;
  }
  const double scale = std::max(1.0, m.MDphi.cwiseAbs().maxCoeff());
  for (int k = 0; k < n; ++k) {
    auto block = m.MDphi.middleCols(SystemMatrices::wrench_offset(k), 6);
    if (block.cwiseAbs().maxCoeff() > 1e-10 * scale) {
      throw std::logic_error("assemble: interaction wrench elimination failed");
    }
    block.setZero();
  }

  if (!m.Mq.allFinite() || !m.MW.allFinite() || !m.MDphi.allFinite() || !m.MWphi.allFinite() ||
      !m.hq.allFinite() || !m.hphi.allFinite() || !m.Fq.allFinite()) {
    throw std::runtime_error("assemble: non-finite entries");
  }
  return m;
}

void extract(SystemSolution& sol, int n, int r) {
  sol.joint_wrenches.clear();
  sol.twist_rates.clear();
  sol.modal_accelerations.clear();
  for (int k = 0; k < n; ++k) {
    sol.joint_wrenches.push_back(sol.q.segment<6>(SystemMatrices::wrench_offset(k)));
    sol.twist_rates.push_back(sol.q.segment<6>(SystemMatrices::twist_offset(k + 1)));
    sol.modal_accelerations.push_back(sol.eta_ddot.segment(3 * r * k, 3 * r));
  }
}

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kMaxResidual = 1e-9;

double relative_residual(const MatX& A, const VecX& x, const VecX& b) {
  const double num = (A * x - b).norm();
  const double den = b.norm();
  return den > 0.0 ? num / den : num;
}

}  // namespace

SystemSolution solve(const SystemMatrices& mats) {
  const MatX A = mats.system_matrix();
  const VecX b = mats.rhs();
  if (!A.allFinite() || !b.allFinite()) throw SingularSystem("solve: non-finite system", 0.0);
  const Eigen::PartialPivLU<MatX> lu(A);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= kMaxCondition)) {
    throw SingularSystem("solve: system matrix singular or ill-conditioned", cond);
  }
  VecX x = lu.solve(b);
  double res = relative_residual(A, x, b);
  if (res > kMaxResidual) {
    x += lu.solve(b - A * x);
    res = relative_residual(A, x, b);
  }
  if (!(res <= kMaxResidual)) throw SingularSystem("solve: residual check failed", cond);

  SystemSolution sol;
  sol.q = x.head(12 * mats.n);
  sol.eta_ddot = x.tail(3 * mats.r * mats.n);
  sol.residual = res;
  sol.condition = cond;
  extract(sol, mats.n, mats.r);
  return sol;
}

namespace {

struct LogDet {
  double log_abs = -std::numeric_limits<double>::infinity();
  int sign = 0;
};

LogDet log_det(const MatX& A) {
  LogDet out;
  if (A.rows() == 0) return {0.0, 1};
  const Eigen::PartialPivLU<MatX> lu(A);
  const MatX& LU = lu.matrixLU();
  double sum = 0.0;
  int sign = static_cast<int>(lu.permutationP().determinant());
  for (Eigen::Index i = 0; i < LU.rows(); ++i) {
    const double u = LU(i, i);
    if (u == 0.0) return out;
    if (u < 0.0) sign = -sign;
    sum += std::log(std::abs(u));
  }
  out.log_abs = sum;
  out.sign = sign;
  return out;
}

double condition_number(const MatX& A) {
  if (A.rows() == 0) return 1.0;
  const Eigen::JacobiSVD<MatX> svd(A);
  const auto& s = svd.singularValues();
  const double smin = s(s.size() - 1);
  return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
}

}  // namespace

SchurReport schur_check(const SystemMatrices& mats) {
  SchurReport rep;
  rep.force_columns_zero = true;
  for (int k = 0; k < mats.n; ++k) {
    if ((mats.MDphi.middleCols(SystemMatrices::wrench_offset(k), 6).array() != 0.0).any()) {
      rep.force_columns_zero = false;
    }
  }
  rep.condition_q = condition_number(mats.Mq);
  if (!(rep.condition_q <= kMaxCondition)) {
    rep.singular = true;
    rep.condition_schur = std::numeric_limits<double>::infinity();
    rep.det_identity_error = std::numeric_limits<double>::infinity();
    return rep;
  }
  const Eigen::PartialPivLU<MatX> lu(mats.Mq);
  const MatX S = mats.MWphi - mats.MDphi * lu.solve(mats.MW);
  rep.condition_schur = condition_number(S);
  rep.singular = !(rep.condition_schur <= kMaxCondition);

  const LogDet ds = log_det(mats.system_matrix());
  const LogDet dq = log_det(mats.Mq);
  const LogDet dS = log_det(S);
  rep.log_det_sys = ds.log_abs;
  rep.log_det_q = dq.log_abs;
  rep.log_det_schur = dS.log_abs;
  rep.sign_sys = ds.sign;
  rep.sign_q = dq.sign;
  rep.sign_schur = dS.sign;
  if (ds.sign == 0 || dq.sign == 0 || dS.sign == 0) {
    rep.singular = true;
    rep.det_identity_error = std::numeric_limits<double>::infinity();
  } else if (ds.sign != dq.sign * dS.sign) {
    rep.det_identity_error = 2.0;
  } else {
    rep.det_identity_error = std::abs(std::expm1(ds.log_abs - dq.log_abs - dS.log_abs));
  }
  return rep;
}

}  // namespace flexsyn
