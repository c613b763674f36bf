#include "flexsyn/modal_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace flexsyn {

namespace {

constexpr double kPi = std::numbers::pi;

double cos_derivative(double x, int k) {
  switch (k % 4) {
    case 0: return std::cos(x);
    case 1: return -std::sin(x);
    case 2: return -std::cos(x);
    default: return std::sin(x);
  }
}

double sin_derivative(double x, int k) {
  switch (k % 4) {
    case 0: return std::sin(x);
    case 1: return std::cos(x);
    case 2: return -std::sin(x);
    default: return -std::cos(x);
  }
}

double characteristic(BasisKind kind, double x) {
  // cos(x)cosh(x) = -+1 divided through by cosh(x).
  const double sech = 1.0 / std::cosh(x);
  return kind == BasisKind::ClampedFree ? std::cos(x) + sech : std::cos(x) - sech;
}

double bisect_root(BasisKind kind, double lo, double hi) {
  double flo = characteristic(kind, lo);
  const double fhi = characteristic(kind, hi);
  if (flo * fhi > 0.0) {
    throw RootFindingError("characteristic root not bracketed", lo, hi);
  }
  const double lo0 = lo, hi0 = hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = characteristic(kind, mid);
    if (fmid == 0.0) return mid;
    if (flo * fmid < 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fmid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return 0.5 * (lo + hi);
  }
  throw RootFindingError("characteristic root bisection did not converge", lo0, hi0);
}

ModeShape bending_shape(BasisKind kind, double beta_l, double l1, double length) {
  ModeShape m;
  m.wavenumber = beta_l / length;
  m.l1 = l1;
  m.length = length;
  const double x = beta_l;
  const double em = std::exp(-x);
  const double em2 = em * em;
  const double s = std::sin(x), c = std::cos(x);
  double sigma = 0.0;
  if (kind == BasisKind::ClampedFree) {
    // cosh - cos - sigma (sinh - sin)
    const double den = 1.0 - em2 + 2.0 * s * em;
    sigma = (1.0 + em2 + 2.0 * c * em) / den;
    m.a = 0.5 * (-em + s - c) * (2.0 / den);
    m.c = -1.0;
    m.d = sigma;
  } else {
    // cosh + cos - sigma (sinh + sin)
    const double den = 1.0 - em2 - 2.0 * s * em;
    sigma = (1.0 + em2 - 2.0 * c * em) / den;
    m.a = 0.5 * (-em - s + c) * (2.0 / den);
    m.c = 1.0;
    m.d = -sigma;
  }
  m.b = 0.5 * (1.0 + sigma);

  const QuadratureRule rule = composite_gauss_legendre(16, 12, l1, l1 + length);
  double norm2 = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double v = m.value(rule.nodes[q], 0);
    norm2 += rule.weights[q] * v * v;
  }
  m.scale = 1.0 / std::sqrt(norm2);
  return m;
}

}  // namespace

std::string to_string(BasisKind kind) {
  return kind == BasisKind::ClampedFree ? "clamped-free" : "free-free-elastic";
}

BasisKind basis_kind_from_string(const std::string& name) {
  if (name == "clamped-free") return BasisKind::ClampedFree;
  if (name == "free-free-elastic" || name == "free-free") return BasisKind::FreeFreeElastic;
  throw std::invalid_argument("unknown basis kind '" + name + "'");
}

double ModeShape::value(double xi, int order) const {
  const double s = xi - l1;
  const double x = wavenumber * s;
  const double sign = (order % 2 == 0) ? 1.0 : -1.0;
  double out = 0.0;
  if (a != 0.0) out += a * std::exp(wavenumber * (s - length));
  if (b != 0.0) out += sign * b * std::exp(-x);
  out += c * cos_derivative(x, order) + d * sin_derivative(x, order);
  return scale * std::pow(wavenumber, order) * out;
}

std::vector<double> characteristic_roots(BasisKind kind, int r) {
  if (r < 1) throw std::invalid_argument("characteristic_roots: r must be >= 1");
  std::vector<double> roots;
  roots.reserve(r);
  for (int p = 1; p <= r; ++p) {
    const double lo = kind == BasisKind::ClampedFree ? (p - 1) * kPi : p * kPi;
    roots.push_back(bisect_root(kind, lo, lo + kPi));
  }
  return roots;
}

ModeSet generate_bending_modes(const LinkParameters& params, BasisKind kind, int r) {
  ModeSet set;
  for (double beta_l : characteristic_roots(kind, r)) {
    set.shapes.push_back(bending_shape(kind, beta_l, params.l1, params.length()));
    set.wavenumbers.push_back(beta_l / params.length());
  }
  return set;
}

ModeSet generate_axial_modes(const LinkParameters& params, BasisKind kind, int r) {
  if (r < 1) throw std::invalid_argument("generate_axial_modes: r must be >= 1");
  ModeSet set;
  const double L = params.length();
  for (int p = 1; p <= r; ++p) {
    ModeShape m;
    m.l1 = params.l1;
    m.length = L;
    m.scale = std::sqrt(2.0 / L);
    if (kind == BasisKind::ClampedFree) {
      m.wavenumber = (2.0 * p - 1.0) * kPi / (2.0 * L);
      m.d = 1.0;
    } else {
      m.wavenumber = p * kPi / L;
      m.c = 1.0;
    }
    set.shapes.push_back(m);
    set.wavenumbers.push_back(m.wavenumber);
  }
  return set;
}

BasisSet::BasisSet(const LinkParameters& params, BasisKind kind, int r)
    : kind_(kind),
      r_(r),
      l1_(params.l1),
      l2_(params.l2),
      axial_(generate_axial_modes(params, kind, r)),
      bending_(generate_bending_modes(params, kind, r)) {}

Mat3X BasisSet::evaluate(double xi, int order) const {
  const double tol = 1e-12 * std::max(1.0, std::abs(l2_ - l1_));
  if (xi < l1_ - tol || xi > l2_ + tol) {
    throw std::out_of_range("basis evaluated outside [l1, l2]");
  }
  if (order < 0 || order > 4) throw std::out_of_range("basis derivative order must be 0..4");
  Mat3X phi = Mat3X::Zero(3, 3 * r_);
  for (int p = 0; p < r_; ++p) {
    phi(0, 3 * p) = axial_.shapes[p].value(xi, order);
    const double bend = bending_.shapes[p].value(xi, order);
    phi(1, 3 * p + 1) = bend;
    phi(2, 3 * p + 2) = bend;
  }
  return phi;
}

Mat3X evaluate(const BasisSet& basis, double xi, int order) { return basis.evaluate(xi, order); }

namespace {

struct RawIntegrals {
  Mat3X phi_integral, skew_rb_phi;
  MatX gram, k4, k2, k22, k11;
};

RawIntegrals integrate(const BasisSet& basis, const QuadratureRule& rule) {
  const int n = basis.dof();
  RawIntegrals out{Mat3X::Zero(3, n), Mat3X::Zero(3, n), MatX::Zero(n, n), MatX::Zero(n, n),
                   MatX::Zero(n, n),  MatX::Zero(n, n),  MatX::Zero(n, n)};
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double xi = rule.nodes[q];
    const double w = rule.weights[q];
    const Mat3X p0 = basis.evaluate(xi, 0);
    const Mat3X p1 = basis.evaluate(xi, 1);
    const Mat3X p2 = basis.evaluate(xi, 2);
    const Mat3X p4 = basis.evaluate(xi, 4);
    out.phi_integral += w * p0;
    out.skew_rb_phi += w * skew(Vec3(xi, 0.0, 0.0)) * p0;
    out.gram += w * p0.transpose() * p0;
    out.k4 += w * p0.transpose() * p4;
    out.k2 += w * p0.transpose() * p2;
    out.k22 += w * p2.transpose() * p2;
    out.k11 += w * p1.transpose() * p1;
  }
  return out;
}

double rel_diff(const MatX& a, const MatX& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

}  // namespace

ModalIntegralCache build_cache(const BasisSet& basis, const LinkParameters& params,
                               int assembly_points) {
  const QuadratureRule rule = composite_gauss_legendre(8, 8, basis.l1(), basis.l2());
  const QuadratureRule fine = composite_gauss_legendre(16, 8, basis.l1(), basis.l2());
  RawIntegrals raw = integrate(basis, rule);
  const RawIntegrals ref = integrate(basis, fine);
  if (rel_diff(raw.gram, ref.gram) > 1e-8 || rel_diff(raw.k4, ref.k4) > 1e-8 ||
      rel_diff(raw.k2, ref.k2) > 1e-8) {
    throw std::runtime_error("build_cache: modal integrals not converged");
  }

  ModalIntegralCache cache;
  cache.phi_integral = raw.phi_integral;
  cache.skew_rb_phi = raw.skew_rb_phi;
  cache.gram = raw.gram;
  cache.k4 = raw.k4;
  cache.k2 = raw.k2;
  cache.k22 = raw.k22;
  cache.k11 = raw.k11;

  const int n = basis.dof();
  const Vec3 iv1(params.E * params.A, 0.0, 0.0);
  const Vec3 iv2(0.0, params.E * params.Iz, params.E * params.Iy);
  cache.stiffness = MatX::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i % 3 != j % 3) continue;
      const int axis = i % 3;
      cache.stiffness(i, j) = iv2(axis) * raw.k4(i, j) - iv1(axis) * raw.k2(i, j);
    }
  }
  for (int k = 0; k < 4; ++k) {
    cache.at_l1[k] = basis.evaluate(basis.l1(), k);
    cache.at_l2[k] = basis.evaluate(basis.l2(), k);
  }

  cache.rule = gauss_legendre(assembly_points, basis.l1(), basis.l2());
  cache.phi_nodes.reserve(cache.rule.size());
  for (double xi : cache.rule.nodes) {
    cache.phi_nodes.push_back(basis.evaluate(xi, 0));
    cache.phi1_nodes.push_back(basis.evaluate(xi, 1));
    cache.phi2_nodes.push_back(basis.evaluate(xi, 2));
  }
  return cache;
}

DeformationField DeformationField::zero() {
  return {[](double, int) { return Vec3::Zero().eval(); }, [](double) { return Vec3::Zero().eval(); }};
}

DeformationField reconstruct_deformation(const BasisSet& basis, const VecX& eta,
                                         const VecX& eta_dot) {
  if (eta.size() != basis.dof() || eta_dot.size() != basis.dof()) {
    throw std::invalid_argument("reconstruct_deformation: modal coordinate size mismatch");
  }
  return {[basis, eta](double xi, int order) -> Vec3 { return basis.evaluate(xi, order) * eta; },
          [basis, eta_dot](double xi) -> Vec3 { return basis.evaluate(xi, 0) * eta_dot; }};
}

}  // namespace flexsyn
