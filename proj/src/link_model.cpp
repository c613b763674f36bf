#include "flexsyn/link_model.hpp"

#include <cmath>
#include <stdexcept>

namespace flexsyn {

std::vector<std::string> LinkParameters::validate() const {
  std::vector<std::string> errors;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) errors.push_back(std::string(name) + ": must be > 0");
  };
  positive("rho", rho);
  positive("E", E);
  positive("A", A);
  positive("Iy", Iy);
  positive("Iz", Iz);
  if (!std::isfinite(l1) || !std::isfinite(l2) || !(l2 > l1)) {
    errors.push_back("l2: must be greater than l1");
  }
  return errors;
}

ElasticityMatrices elasticity(const LinkParameters& params) {
  ElasticityMatrices m;
  m.Iv1 = Vec3(params.E * params.A, 0.0, 0.0).asDiagonal();
  m.Iv2 = Vec3(0.0, params.E * params.Iz, params.E * params.Iy).asDiagonal();
  m.H << 0, 0, 0,
         0, 0, 1,
         0, 1, 0;
  return m;
}

LinkSamples sample(const QuadratureRule& rule, const DeformationField& field, bool derivatives) {
  LinkSamples s;
  s.nodes = rule.nodes;
  s.weights = rule.weights;
  for (double xi : rule.nodes) {
    s.r_xi.push_back(field.displacement(xi, 0));
    s.v_xi.push_back(field.rate(xi));
    if (derivatives) {
      s.r1_xi.push_back(field.displacement(xi, 1));
      s.r2_xi.push_back(field.displacement(xi, 2));
    }
  }
  return s;
}

LinkSamples sample(const ModalIntegralCache& cache, const VecX& eta, const VecX& eta_dot,
                   bool derivatives) {
  LinkSamples s;
  s.nodes = cache.rule.nodes;
  s.weights = cache.rule.weights;
  const std::size_t n = cache.rule.size();
  s.r_xi.resize(n);
  s.v_xi.resize(n);
  for (std::size_t q = 0; q < n; ++q) {
    s.r_xi[q] = cache.phi_nodes[q] * eta;
    s.v_xi[q] = cache.phi_nodes[q] * eta_dot;
  }
  if (derivatives) {
    s.r1_xi.resize(n);
    s.r2_xi.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
      s.r1_xi[q] = cache.phi1_nodes[q] * eta;
      s.r2_xi[q] = cache.phi2_nodes[q] * eta;
    }
  }
  return s;
}

namespace {

void check_range(const LinkParameters& params, double xi) {
  const double tol = 1e-12 * std::max(1.0, params.length());
  if (xi < params.l1 - tol || xi > params.l2 + tol) {
    throw std::out_of_range("xi outside [l1, l2]");
  }
}

Vec3 element_position(const LinkKinematicState& state, double xi, const Vec3& r_xi) {
  return state.r + Vec3(xi, 0.0, 0.0) + r_xi;
}

// 2 w x v_ob + w x (w x r_ob)
Vec3 velocity_terms(const LinkKinematicState& state, const Vec3& r_ob, const Vec3& v_xi) {
  const Vec3& w = state.z.ang;
  return 2.0 * w.cross(state.z.lin + v_xi) + w.cross(w.cross(r_ob));
}

void require_finite(const Vec3& v) {
  if (!v.allFinite()) throw std::runtime_error("non-finite integrand in link quadrature");
}

}  // namespace

Vec3 centerline_position(const LinkParameters& params, const LinkKinematicState& state,
                         const DeformationField& deformation, double xi) {
  check_range(params, xi);
  return element_position(state, xi, deformation.displacement(xi, 0));
}

Mat3 section_inertia(const LinkParameters& params) {
  return (params.rho * params.length() * Vec3(params.Iy + params.Iz, params.Iy, params.Iz))
      .asDiagonal();
}

Mat6 mass_matrix(const LinkParameters& params, const LinkKinematicState& state,
                 const LinkSamples& samples, const LinkOptions& options) {
  Mat3 s1 = Mat3::Zero();
  Mat3 s2 = Mat3::Zero();
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3 r = element_position(state, samples.nodes[q], samples.r_xi[q]);
    require_finite(r);
    const Mat3 rx = skew(r);
    s1 += samples.weights[q] * rx;
    s2 += samples.weights[q] * rx * rx.transpose();
  }
  const double rho_a = params.rho_a();
  Mat6 m = Mat6::Zero();
  m.topLeftCorner<3, 3>() = params.mass() * Mat3::Identity();
  m.topRightCorner<3, 3>() = -rho_a * s1;
  m.bottomLeftCorner<3, 3>() = rho_a * s1;
  m.bottomRightCorner<3, 3>() = rho_a * s2;
  if (options.section_inertia) m.bottomRightCorner<3, 3>() += section_inertia(params);
  return m;
}

Vec6 coupling_vector(const LinkParameters& params, const LinkKinematicState& state,
                     const LinkSamples& samples, const std::vector<Vec3>& vdot_xi) {
  if (vdot_xi.size() != samples.size()) {
    throw std::invalid_argument("coupling_vector: sample count mismatch");
  }
  Vec6 g = Vec6::Zero();
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3 r = element_position(state, samples.nodes[q], samples.r_xi[q]);
    g.head<3>() += samples.weights[q] * vdot_xi[q];
    g.tail<3>() += samples.weights[q] * r.cross(vdot_xi[q]);
  }
  return params.rho_a() * g;
}

MatX coupling_matrix(const LinkParameters& params, const LinkKinematicState& state,
                     const LinkSamples& samples, const std::vector<Mat3X>& phi_nodes) {
  if (phi_nodes.size() != samples.size()) {
    throw std::invalid_argument("coupling_matrix: sample count mismatch");
  }
  const Eigen::Index cols = phi_nodes.empty() ? 0 : phi_nodes.front().cols();
  MatX g = MatX::Zero(6, cols);
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3 r = element_position(state, samples.nodes[q], samples.r_xi[q]);
    g.topRows<3>() += samples.weights[q] * phi_nodes[q];
    g.bottomRows<3>() += samples.weights[q] * skew(r) * phi_nodes[q];
  }
  return params.rho_a() * g;
}

Vec3 elastic_moment_terms(const LinkParameters& params, const LinkSamples& samples) {
  if (!samples.has_derivatives()) {
    throw std::invalid_argument("elastic_moment_terms: derivative samples missing");
  }
  const ElasticityMatrices e = elasticity(params);
  Vec3 out = Vec3::Zero();
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3& d1 = samples.r1_xi[q];
    const Vec3& d2 = samples.r2_xi[q];
    out += samples.weights[q] * (d1.cross(e.Iv1 * d1) + d2.cross(e.Iv2 * d2));
  }
  return out;
}

Vec6 bias_vector(const LinkParameters& params, const LinkKinematicState& state,
                 const LinkSamples& samples, const Vec3& gravity, const LinkOptions& options) {
  const Vec3 g_body = state.R.transpose() * gravity;
  Vec3 lin = Vec3::Zero();
  Vec3 ang = Vec3::Zero();
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3 r = element_position(state, samples.nodes[q], samples.r_xi[q]);
    const Vec3 a = velocity_terms(state, r, samples.v_xi[q]) - g_body;
    require_finite(a);
    lin += samples.weights[q] * a;
    ang += samples.weights[q] * r.cross(a);
  }
  Vec6 h;
  h << params.rho_a() * lin, params.rho_a() * ang;
  if (options.section_inertia) {
    const Vec3& w = state.z.ang;
    h.tail<3>() += w.cross(section_inertia(params) * w);
  }
  if (options.elastic_moment_terms) h.tail<3>() += elastic_moment_terms(params, samples);
  return h;
}

Vec6 end_wrench_vector(const Wrench& base, const Wrench& tip, const Vec3& r_base,
                       const Vec3& r_tip) {
  Vec6 f;
  f.head<3>() = base.lin - tip.lin;
  f.tail<3>() = base.ang - tip.ang + r_base.cross(base.lin) - r_tip.cross(tip.lin);
  return f;
}

Vec3 displacement_residual(const LinkParameters& params, const LinkKinematicState& state,
                           const DeformationField& deformation, const LinkAccelerations& acc,
                           const Vec3& gravity, double xi) {
  check_range(params, xi);
  const ElasticityMatrices e = elasticity(params);
  const Vec3 r = element_position(state, xi, deformation.displacement(xi, 0));
  const Vec3 vdot_xi = acc.vdot_xi ? acc.vdot_xi(xi) : Vec3::Zero().eval();
  const Vec3 a = acc.vdot + vdot_xi - r.cross(acc.wdot) +
                 velocity_terms(state, r, deformation.rate(xi));
  const Vec3 elastic =
      (e.Iv2 * deformation.displacement(xi, 4) - e.Iv1 * deformation.displacement(xi, 2)) /
      params.rho_a();
  return a + elastic - state.R.transpose() * gravity;
}

BoundaryResiduals boundary_residuals(const LinkParameters& params,
                                     const DeformationField& deformation, const Wrench& base,
                                     const Wrench& tip) {
  const ElasticityMatrices e = elasticity(params);
  auto d = [&](double xi, int k) { return deformation.displacement(xi, k); };
  BoundaryResiduals out;
  out.base_force = e.Iv2 * d(params.l1, 3) - e.Iv1 * d(params.l1, 1) - base.lin;
  out.tip_force = e.Iv2 * d(params.l2, 3) - e.Iv1 * d(params.l2, 1) - tip.lin;
  out.base_moment = -e.Iv2 * d(params.l1, 2) - e.H * base.ang;
  out.tip_moment = -e.Iv2 * d(params.l2, 2) - e.H * tip.ang;
  return out;
}

double kinetic_energy(const LinkParameters& params, const LinkKinematicState& state,
                      const LinkSamples& samples, const LinkOptions& options) {
  const Vec3& w = state.z.ang;
  double ke = 0.0;
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const Vec3 r = element_position(state, samples.nodes[q], samples.r_xi[q]);
    const Vec3 u = state.z.lin + samples.v_xi[q] + w.cross(r);
    ke += samples.weights[q] * u.squaredNorm();
  }
  ke *= 0.5 * params.rho_a();
  if (options.section_inertia) ke += 0.5 * w.dot(section_inertia(params) * w);
  return ke;
}

}  // namespace flexsyn
