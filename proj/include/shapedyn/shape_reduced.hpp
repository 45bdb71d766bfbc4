#pragma once

// Three-body shape space: the angle chart (s1, s2) with scale lambda = |x2 - x1|,
// closed-form reduced metric and potential, reduced equations of motion for the
// nonrotating case, and projection of absolute trajectories.
//
// Reduced runs use the internal time tau with dtau = dt / lambda. In these
// units the dynamics of (s, s', sigma') does not involve lambda, where
// sigma' is the scale connection rate (sum r.r' / sum |r|^2 per unit tau).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "shapedyn/dynamics_absolute.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/fiber_bundle.hpp"
#include "shapedyn/finite_difference.hpp"
#include "shapedyn/geometry.hpp"
#include "shapedyn/integrate.hpp"
#include "shapedyn/potential.hpp"

namespace shapedyn {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

struct ShapeCoordinates {
  double s1 = 0.0;
  double s2 = 0.0;
  double lambda = 1.0;
};

/// Velocities are per unit internal time. lamdot is d(ln lambda)/dtau, which
/// equals lambda-dot in absolute units when lambda = 1. D and L are the
/// dilational and angular momenta divided by lambda.
struct ShapeState3 {
  double s1 = 0.0;
  double s2 = 0.0;
  double lambda = 1.0;
  double s1dot = 0.0;
  double s2dot = 0.0;
  double lamdot = 0.0;
  Vec3 L = Vec3::Zero();
  double D = 0.0;
  EulerAngles euler;
};

// ---------------------------------------------------------------------------
// Chart

inline bool three_body_in_domain(double s1, double s2) {
  if (!(s1 > 0.0) || !(s2 > 0.0) || !(s1 + s2 < M_PI)) return false;
  const double s = std::sin(s1 + s2);
  return std::sin(s1) < s - 1e-6 && std::sin(s2) < s - 1e-6;
}

namespace detail {
inline double angle_between(const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); }
inline void require_three(std::size_t n) {
  if (n != 3) throw Error(ErrorKind::InvalidArgument, "three-body operation needs N = 3");
}
}  // namespace detail

/// Angles at x1 and x2, and the largest pairwise distance.
inline ShapeCoordinates shape_coordinates(std::span<const Vec3> x) {
  detail::require_three(x.size());
  detail::require_separated(x);
  return {detail::angle_between(x[1] - x[0], x[2] - x[0]), detail::angle_between(x[2] - x[1], x[0] - x[1]),
          diameter(x)};
}

inline AbsoluteConfiguration shape_lift(double s1, double s2, double lambda) {
  if (!three_body_in_domain(s1, s2)) throw Error(ErrorKind::ChartDomain, "shape point outside chart domain");
  const double rho = std::sin(s2) / std::sin(s1 + s2);
  return {{Vec3::Zero(), Vec3(lambda, 0.0, 0.0), lambda * rho * Vec3(std::cos(s1), std::sin(s1), 0.0)}};
}

namespace detail {
/// d x3 / d s_i of the unit-scale lift.
inline Vec3 lift_derivative(double s1, double s2, Eigen::Index i) {
  const double sn = std::sin(s1 + s2);
  const Vec3 e(std::cos(s1), std::sin(s1), 0.0);
  if (i == 0) {
    const Vec3 eperp(-std::sin(s1), std::cos(s1), 0.0);
    return -std::sin(s2) * std::cos(s1 + s2) / (sn * sn) * e + std::sin(s2) / sn * eperp;
  }
  return std::sin(s1) / (sn * sn) * e;
}
}  // namespace detail

/// Chart with section s -> Jacobi vectors of shape_lift(s, 1), closed-form
/// section derivatives and closed-form inverse.
inline ShapeChart three_body_chart(const MassVector& m) {
  detail::require_three(m.size());
  ShapeChart c;
  c.dim = 2;
  c.in_domain = [](const VecX& s) { return three_body_in_domain(s[0], s[1]); };
  c.section = [m](const VecX& s) { return jacobi_vectors(m, shape_lift(s[0], s[1], 1.0).x); };
  c.section_derivative = [m](const VecX& s, Eigen::Index i) {
    const Points dx{Vec3::Zero(), Vec3::Zero(), detail::lift_derivative(s[0], s[1], i)};
    return jacobi_vectors(m, dx);
  };
  c.locate = [m](std::span<const Vec3> r) {
    const auto x = jacobi_inverse(m, JacobiConfiguration{Points(r.begin(), r.end()), Vec3::Zero()}).x;
    const auto sc = shape_coordinates(x);
    const double lam = (x[1] - x[0]).norm();
    const Vec3 e1 = (x[1] - x[0]) / lam;
    Vec3 e2 = (x[2] - x[0]) - (x[2] - x[0]).dot(e1) * e1;
    e2.normalize();
    Mat3 g;
    g << e1, e2, e1.cross(e2);
    ChartPoint p;
    p.shape = Vec2(sc.s1, sc.s2);
    p.scale = lam;
    p.rotation = Rotation::from_matrix(g, 1e-9);
    return p;
  };
  return c;
}

// ---------------------------------------------------------------------------
// Closed forms at unit scale

namespace detail {
struct TriangleTerms {
  double S, C, rho, mu1, mu2, kappa, I1;
  double d23;  // |x3 - x2|
};

inline TriangleTerms triangle_terms(const MassVector& m, double s1, double s2) {
  require_three(m.size());
  TriangleTerms t{};
  t.S = std::sin(s1 + s2);
  t.C = std::cos(s1 + s2);
  if (!(std::abs(t.S) > 1e-8) || !(std::abs(std::sin(s2)) > 1e-8))
    throw Error(ErrorKind::SingularConfiguration, "collinear configuration");
  t.rho = std::sin(s2) / t.S;
  t.mu1 = m[0] * m[1] / (m[0] + m[1]);
  t.mu2 = (m[0] + m[1]) * m[2] / m.total();
  t.kappa = m[1] / (m[0] + m[1]);
  t.I1 = t.mu1 + t.mu2 * (t.rho * t.rho - 2.0 * t.kappa * t.rho * std::cos(s1) + t.kappa * t.kappa);
  t.d23 = std::sqrt(t.rho * t.rho - 2.0 * t.rho * std::cos(s1) + 1.0);
  return t;
}
}  // namespace detail

/// I_cm of the unit-scale lift (the coefficient of dlambda^2).
inline double scale_inertia_3body(const MassVector& m, double s1, double s2) {
  return detail::triangle_terms(m, s1, s2).I1;
}

/// Metric of horizontal shape motion at lambda = 1: |h(w)|^2 = w^T N w for the
/// horizontal lift h of w. Scales as lambda^2.
inline Mat2 shape_metric_3body(const MassVector& m, double s1, double s2) {
  const auto t = detail::triangle_terms(m, s1, s2);
  const double a = std::sin(s1), b = std::sin(s2);
  Mat2 w;
  w << b * b, -a * b * t.C, -a * b * t.C, a * a;
  return t.mu1 * t.mu2 / (t.I1 * std::pow(t.S, 4)) * w;
}

/// (1/2) grad ln I_cm along the section: the scale connection of d sigma / d s.
inline Vec2 scale_connection_3body(const MassVector& m, double s1, double s2) {
  const auto t = detail::triangle_terms(m, s1, s2);
  const double da = -std::sin(s2) * t.C / (t.S * t.S);  // d rho / d s1
  const double db = std::sin(s1) / (t.S * t.S);         // d rho / d s2
  const double c1 = std::cos(s1);
  const Vec2 di(t.mu2 * (2.0 * t.rho * da - 2.0 * t.kappa * (da * c1 - t.rho * std::sin(s1))),
                t.mu2 * (2.0 * t.rho * db - 2.0 * t.kappa * db * c1));
  return 0.5 * di / t.I1;
}

/// sqrt(I_cm) times the pair sum for the unit-scale lift. Independent of lambda.
inline double shape_potential_3body(const MassVector& m, double s1, double s2) {
  if (!three_body_in_domain(s1, s2)) throw Error(ErrorKind::ChartDomain, "shape point outside chart domain");
  const auto t = detail::triangle_terms(m, s1, s2);
  const double f = m[0] * m[1] + m[0] * m[2] / t.rho + m[1] * m[2] / t.d23;
  return std::sqrt(t.I1) * f;
}

/// Closed-form gradient of shape_potential_3body.
inline Vec2 shape_potential_gradient(const MassVector& m, double s1, double s2) {
  const auto t = detail::triangle_terms(m, s1, s2);
  const double c1 = std::cos(s1), sn1 = std::sin(s1);
  const Vec2 drho(-std::sin(s2) * t.C / (t.S * t.S), sn1 / (t.S * t.S));
  const Vec2 di(t.mu2 * (2.0 * t.rho * drho[0] - 2.0 * t.kappa * (drho[0] * c1 - t.rho * sn1)),
                t.mu2 * (2.0 * t.rho * drho[1] - 2.0 * t.kappa * drho[1] * c1));
  const Vec2 dd2(2.0 * t.rho * drho[0] - 2.0 * (drho[0] * c1 - t.rho * sn1), 2.0 * t.rho * drho[1] - 2.0 * drho[1] * c1);
  const double f = m[0] * m[1] + m[0] * m[2] / t.rho + m[1] * m[2] / t.d23;
  const Vec2 df = -m[0] * m[2] / (t.rho * t.rho) * drho - m[1] * m[2] / (2.0 * std::pow(t.d23, 3)) * dd2;
  const double g = std::sqrt(t.I1);
  return f * di / (2.0 * g) + g * df;
}

/// Central differences of shape_potential_3body with one Richardson step.
// h = 1e-6 leaves a roundoff floor near 1e-9 |V| after extrapolation; 1e-4 keeps
// both truncation and roundoff below 1e-12.
inline Vec2 shape_potential_partials(const MassVector& m, double s1, double s2, double h = 1e-4) {
  if (!three_body_in_domain(s1, s2)) throw Error(ErrorKind::ChartDomain, "shape point outside chart domain");
  const double d1 = fd::richardson([&](double e) { return shape_potential_3body(m, s1 + e, s2); }, h);
  const double d2 = fd::richardson([&](double e) { return shape_potential_3body(m, s1, s2 + e); }, h);
  return {d1, d2};
}

// ---------------------------------------------------------------------------
// Coefficients as printed in the closed-form derivation. Several of these
// disagree with the pullback and lifted-potential oracles; the shipped
// dynamics use the closed forms above. Kept for the validation report.

namespace printed {

struct MetricCoefficients {
  double ds1 = 0.0;
  double ds2 = 0.0;
  double dlambda = 0.0;
  Mat3 A = Mat3::Zero();  // inertia tensor of the lifted configuration
};

inline MetricCoefficients metric_coeffs(const MassVector& m, double s1, double s2, double lambda) {
  detail::require_three(m.size());
  const double sn = std::sin(s1 + s2);
  if (!(std::abs(sn) > 1e-8)) throw Error(ErrorKind::SingularConfiguration, "sin(s1+s2) vanishes");
  const double k = m[2] * (m[0] + m[1]) / (m[0] * m[1] * sn * sn);
  MetricCoefficients c;
  c.ds1 = k * lambda * lambda * std::sin(s2) * std::sin(s2);
  c.ds2 = k * lambda * lambda * std::sin(s1) * std::sin(s1);
  c.dlambda = 1.0 + m[1] / m[0] + k * std::sin(s2) * std::sin(s2);
  const double rho = std::sin(s2) / sn;
  const Points x{Vec3::Zero(), Vec3(lambda, 0, 0), lambda * rho * Vec3(std::cos(s1), std::sin(s1), 0)};
  c.A = inertia_tensor(jacobi_vectors(m, x));
  return c;
}

inline double g_factor(const MassVector& m, double s1, double s2, double lambda) {
  const double M = m.total();
  const double sn = std::sin(s1 + s2);
  const double q = std::sin(s2) / sn;
  const double inner = q * q * (m[2] + m[2] * m[2] * (1.0 - 2.0 / M)) - 2.0 * m[1] * m[2] / M * q * std::cos(s1) +
                       m[1] * (1.0 - m[1] / M);
  return lambda * std::sqrt(inner);
}

inline double f(const MassVector& m, double s1, double s2, double lambda) {
  const double sn = std::sin(s1 + s2);
  const double q = std::sin(s2) / sn;
  return (m[0] * m[1] + m[0] * m[2] * sn / std::sin(s2) + m[1] * m[2] / (q * q - 2.0 * q * std::cos(s1) + 1.0)) /
         lambda;
}

inline double potential(const MassVector& m, double s1, double s2) { return g_factor(m, s1, s2, 1.0) * f(m, s1, s2, 1.0); }

/// Accelerations solved from the printed reduced equations. lamdot is
/// lambda-dot / lambda; dV the shape gradient of the potential. The fragment
/// with unbalanced parentheses is read as (sin^2 s1 - 2 sin^2 s2).
inline Vec2 reduced_rhs(const MassVector& m, double s1, double s2, double s1dot, double s2dot, double lamdot,
                        const Vec2& dV) {
  const double S = std::sin(s1 + s2), C = std::cos(s1 + s2);
  const double a = std::sin(s1), b = std::sin(s2);
  const double lead = b * b * S;
  if (!(std::abs(S) > 1e-8) || !(std::abs(b) > 1e-8) || !(std::abs(lead) > 1e-16))
    throw Error(ErrorKind::SingularConfiguration, "leading coefficient vanishes");
  const double k = m[0] * m[1] / (m[2] * (m[0] + m[1]));
  const double p2 = b * (std::cos(s2) * S - b * C);
  const double p1 = a * (std::cos(s1) * S - a * C);
  const double r1 = -3.0 * b * b * C * s1dot * s1dot + 2.0 * p2 * s2dot * s1dot + 2.0 * lamdot * S * b * b * s1dot +
                    p1 * s2dot * s2dot + 2.0 * lamdot * lamdot * b * b * C + k * dV[0];
  const double r2 = C * (a * a - 2.0 * b * b) * s2dot * s2dot + 2.0 * p2 * s1dot * s2dot +
                    2.0 * lamdot * b * b * S * s2dot + p2 * s1dot * s1dot + 2.0 * lamdot * lamdot * p2 - k * dV[1];
  return {-r1 / lead, -r2 / lead};
}

/// Non-expanding special case.
inline Vec2 reduced_rhs_nonexpanding(const MassVector& m, double s1, double s2, double s1dot, double s2dot,
                                     const Vec2& dV) {
  return reduced_rhs(m, s1, s2, s1dot, s2dot, 0.0, dV);
}

/// Lagrangian with absolute lengths and lamdot = lambda-dot / lambda.
inline double lagrangian(const MassVector& m, double s1, double s2, double lambda, double s1dot, double s2dot,
                         double lamdot, const Vec3& omega, double V) {
  const auto c = metric_coeffs(m, s1, s2, lambda);
  return 0.5 * c.ds1 * s1dot * s1dot + 0.5 * c.ds2 * s2dot * s2dot + c.dlambda * lamdot * lamdot +
         0.5 * omega.dot(c.A * omega) - V;
}

/// Same with the diameter as unit of length.
inline double lagrangian_relational(const MassVector& m, double s1, double s2, double s1dot, double s2dot, double lamdot,
                                    const Vec3& omega, double V) {
  return lagrangian(m, s1, s2, 1.0, s1dot, s2dot, lamdot, omega, V);
}

/// Neither rotating nor expanding; the potential enters with a plus sign.
inline double lagrangian_static(const MassVector& m, double s1, double s2, double s1dot, double s2dot, double V) {
  const auto c = metric_coeffs(m, s1, s2, 1.0);
  return 0.5 * c.ds1 * s1dot * s1dot + 0.5 * c.ds2 * s2dot * s2dot + V;
}

}  // namespace printed

/// The printed coefficient set (see printed::metric_coeffs).
inline printed::MetricCoefficients metric_coeffs_3body(const MassVector& m, double s1, double s2, double lambda) {
  return printed::metric_coeffs(m, s1, s2, lambda);
}

// ---------------------------------------------------------------------------
// Pullback oracle

/// Mass metric pulled back through (s1, s2, lambda) -> g * shape_lift(s, lambda)
/// with the centre of mass held fixed. Richardson central differences.
inline Mat3 pullback_metric_3body(const MassVector& m, double s1, double s2, double lambda, const EulerAngles& e) {
  const Rotation g = euler_to_rotation(e);
  auto embed = [&](const Vec3& q) {
    const auto x = shape_lift(q[0], q[1], q[2]).x;
    const Vec3 c = center_of_mass(m, x);
    Eigen::Matrix<double, 9, 1> out;
    for (int i = 0; i < 3; ++i) out.segment<3>(3 * i) = g * (x[static_cast<std::size_t>(i)] - c);
    return out;
  };
  const Vec3 q(s1, s2, lambda);
  Eigen::Matrix<double, 9, 3> jac;
  for (int k = 0; k < 3; ++k) {
    const double h = fd::relative_step(q[k], 1e-4);
    jac.col(k) = fd::richardson([&](double eps) { Vec3 qq = q; qq[k] += eps; return embed(qq); }, h);
  }
  Mat3 out = Mat3::Zero();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int i = 0; i < 3; ++i)
        out(a, b) += m[static_cast<std::size_t>(i)] * jac.block<3, 1>(3 * i, a).dot(jac.block<3, 1>(3 * i, b));
  return out;
}

// ---------------------------------------------------------------------------
// Reduced dynamics (L = 0)

/// Second derivatives in internal time. `s` is s''; `scale` is the derivative
/// of the scale connection rate sigma'.
struct ReducedAcceleration {
  Vec2 s = Vec2::Zero();
  double scale = 0.0;
};

namespace detail {
/// N / I_cm, the shape block of the kinetic metric written with
/// sigma = ln sqrt(I_cm) as scale coordinate.
inline Mat2 conformal_shape_metric(const MassVector& m, double s1, double s2) {
  return shape_metric_3body(m, s1, s2) / scale_inertia_3body(m, s1, s2);
}

inline double reduced_coupling(const PotentialSpec& pot) {
  switch (pot.kind) {
    case PotentialKind::Mnt: return pot.coupling;
    case PotentialKind::Free: return 0.0;
    case PotentialKind::Newton: break;
  }
  throw Error(ErrorKind::InvalidArgument, "reduced dynamics need a scale-invariant potential");
}

inline ReducedAcceleration reduced_core(const MassVector& m, double s1, double s2, const Vec2& sd, double w,
                                        const PotentialSpec& pot) {
  const Mat2 n = conformal_shape_metric(m, s1, s2);
  const double i1 = scale_inertia_3body(m, s1, s2);
  const Vec2 c = scale_connection_3body(m, s1, s2);
  std::array<Mat2, 2> dn;
  for (int k = 0; k < 2; ++k) {
    const double h = 1e-3;
    dn[static_cast<std::size_t>(k)] = fd::richardson(
        [&](double e) { return conformal_shape_metric(m, k == 0 ? s1 + e : s1, k == 1 ? s2 + e : s2); }, h);
  }
  const Vec2 dv = reduced_coupling(pot) * shape_potential_gradient(m, s1, s2);
  const Mat2 dn_along = sd[0] * dn[0] + sd[1] * dn[1];
  Vec2 rhs = -(w + c.dot(sd)) * (n * sd) - dn_along * sd - dv / i1;
  for (int i = 0; i < 2; ++i) rhs[i] += 0.5 * sd.dot(dn[static_cast<std::size_t>(i)] * sd);
  ReducedAcceleration a;
  a.s = n.ldlt().solve(rhs);
  a.scale = sd.dot(n * sd) - w * c.dot(sd);
  return a;
}
}  // namespace detail

/// sigma' = d(ln lambda)/dtau + c . s'.
inline double scale_rate(const MassVector& m, const ShapeState3& st) {
  return st.lamdot + scale_connection_3body(m, st.s1, st.s2).dot(Vec2(st.s1dot, st.s2dot));
}

inline ReducedAcceleration reduced_rhs_nonrotating(const MassVector& m, const ShapeState3& st,
                                                   const PotentialSpec& pot = {}) {
  if (!st.L.isZero(0.0)) throw Error(ErrorKind::InvalidArgument, "reduced equations need L = 0");
  if (!(std::abs(std::sin(st.s1 + st.s2)) >= 1e-8) || !(std::abs(std::sin(st.s2)) >= 1e-8))
    throw Error(ErrorKind::SingularConfiguration, "collinear configuration");
  return detail::reduced_core(m, st.s1, st.s2, Vec2(st.s1dot, st.s2dot), scale_rate(m, st), pot);
}

/// E = (1/2)(s'^T N s' + I_cm sigma'^2) + V in internal units.
inline double reduced_energy(const MassVector& m, const ShapeState3& st, const PotentialSpec& pot = {}) {
  const Vec2 sd(st.s1dot, st.s2dot);
  const double w = scale_rate(m, st);
  return 0.5 * (sd.dot(shape_metric_3body(m, st.s1, st.s2) * sd) + scale_inertia_3body(m, st.s1, st.s2) * w * w) +
         detail::reduced_coupling(pot) * shape_potential_3body(m, st.s1, st.s2);
}

/// Kinetic minus potential energy in internal units. Does not depend on lambda.
inline double reduced_lagrangian(const ShapeState3& st, const MassVector& m, const PotentialSpec& pot = {}) {
  if (!three_body_in_domain(st.s1, st.s2)) throw Error(ErrorKind::ChartDomain, "shape point outside chart domain");
  const double v = detail::reduced_coupling(pot) * shape_potential_3body(m, st.s1, st.s2);
  return reduced_energy(m, st, pot) - 2.0 * v;
}

struct ShapeTrajectory {
  std::vector<double> tau;  // internal time
  std::vector<double> t;    // absolute time
  std::vector<ShapeState3> states;
  std::vector<double> energy;
  std::size_t steps = 0;

  std::size_t size() const noexcept { return tau.size(); }
};

/// Integrates (s, s', sigma', ln lambda, t) over tau in [0, T]. D is reported
/// per sample; under a degree-0 potential it is not constant.
inline ShapeTrajectory integrate_shape(const MassVector& m, const ShapeState3& state0, double T,
                                       const IntegratorConfig& cfg, const PotentialSpec& pot = {}) {
  detail::require_three(m.size());
  if (!state0.L.isZero(0.0)) throw Error(ErrorKind::InvalidArgument, "reduced integration needs L = 0");
  if (!(state0.lambda > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
  if (!three_body_in_domain(state0.s1, state0.s2))
    throw Error(ErrorKind::ChartExit, "initial shape outside chart domain", 0.0);
  const OdeState y0{state0.s1, state0.s2, state0.s1dot, state0.s2dot, scale_rate(m, state0), std::log(state0.lambda),
                    0.0};
  auto rhs = [&](const OdeState& y, OdeState& dy, double) {
    const Vec2 sd(y[2], y[3]);
    const auto a = detail::reduced_core(m, y[0], y[1], sd, y[4], pot);
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = a.s[0];
    dy[3] = a.s[1];
    dy[4] = a.scale;
    dy[5] = y[4] - scale_connection_3body(m, y[0], y[1]).dot(sd);
    dy[6] = std::exp(y[5]);
  };
  auto guard = [](const OdeState& y, double tau) {
    if (!three_body_in_domain(y[0], y[1]))
      throw Error(ErrorKind::ChartExit, "shape left the chart domain at t=" + std::to_string(y[6]), y[6]);
    (void)tau;
  };
  const OdeSolution sol = solve_ode(rhs, y0, T, cfg, guard);
  ShapeTrajectory tr;
  tr.tau = sol.t;
  tr.steps = sol.steps;
  for (const auto& y : sol.y) {
    ShapeState3 st;
    st.s1 = y[0];
    st.s2 = y[1];
    st.s1dot = y[2];
    st.s2dot = y[3];
    st.lambda = std::exp(y[5]);
    st.lamdot = y[4] - scale_connection_3body(m, y[0], y[1]).dot(Vec2(y[2], y[3]));
    st.D = scale_inertia_3body(m, y[0], y[1]) * y[4];
    st.euler = state0.euler;
    tr.t.push_back(y[6]);
    tr.energy.push_back(reduced_energy(m, st, pot));
    tr.states.push_back(st);
  }
  return tr;
}

// ---------------------------------------------------------------------------
// Projection from absolute space

/// Shape state of an absolute state, velocities converted to internal time.
/// Rates are Richardson-extrapolated directional derivatives along the velocity.
inline ShapeState3 shape_state_from_absolute(const MassVector& m, const AbsoluteState& s) {
  detail::require_three(m.size());
  const AbsoluteState c = to_cm_frame(m, s);
  const auto sc = shape_coordinates(c.config.x);
  const double vmax = [&] {
    double v = 0.0;
    for (const auto& u : c.vel) v = std::max(v, u.norm());
    return v;
  }();
  const double h = vmax > 0.0 ? 1e-4 * sc.lambda / vmax : 1.0;
  auto along = [&](double e) {
    Points x = c.config.x;
    for (std::size_t i = 0; i < 3; ++i) x[i] += e * c.vel[i];
    const auto q = shape_coordinates(x);
    return Vec3(q.s1, q.s2, std::log((x[1] - x[0]).norm()));
  };
  const Vec3 rate = vmax > 0.0 ? Vec3(fd::richardson(along, h)) : Vec3::Zero();
  ShapeState3 st;
  st.s1 = sc.s1;
  st.s2 = sc.s2;
  st.lambda = (c.config[1] - c.config[0]).norm();
  st.s1dot = st.lambda * rate[0];
  st.s2dot = st.lambda * rate[1];
  st.lamdot = st.lambda * rate[2];
  const auto q = conserved(m, c);
  st.L = q.J / st.lambda;
  st.D = q.D / st.lambda;
  const auto chart = three_body_chart(m);
  st.euler = rotation_to_euler(chart.locate(jacobi_vectors(m, c.config.x)).rotation);
  return st;
}

/// Absolute state with centre of mass at rest at the origin whose shape state
/// is `st` (L must be zero).
inline AbsoluteState absolute_from_shape_state(const MassVector& m, const ShapeState3& st) {
  detail::require_three(m.size());
  const auto chart = three_body_chart(m);
  const VecX s = Vec2(st.s1, st.s2);
  require_domain(chart, s);
  const Rotation g = euler_to_rotation(st.euler);
  const Points sec = chart.section(s);
  // internal-time velocities at unit scale; absolute rate divides by lambda
  const Points push = section_pushforward(chart, s, Vec2(st.s1dot, st.s2dot));
  const ConnectionValue w = connection_sim(sec, push);
  const double ell = st.lamdot;
  JacobiConfiguration j;
  JacobiVelocity jv(sec.size());
  j.r.resize(sec.size());
  for (std::size_t k = 0; k < sec.size(); ++k) {
    const Vec3 body = push[k] - w.rot.cross(sec[k]) + ell * sec[k];
    j.r[k] = st.lambda * (g * sec[k]);
    jv[k] = g * body;  // lambda * (body / lambda)
  }
  AbsoluteState out;
  out.config = jacobi_inverse(m, j);
  JacobiConfiguration jvel{jv, Vec3::Zero()};
  const auto v = jacobi_inverse(m, jvel).x;
  out.vel = v;
  return out;
}

struct ProjectedTrajectory {
  std::vector<double> t;
  std::vector<ShapeCoordinates> shape;
  std::vector<Vec2> sdot;       // per unit absolute time
  std::vector<double> lamdot;   // lambda-dot / lambda
};

/// Per-sample shape coordinates and central-difference rates (one-sided at
/// the ends).
inline ProjectedTrajectory project_trajectory(const MassVector& m, const Trajectory& traj) {
  detail::require_three(m.size());
  ProjectedTrajectory p;
  p.t = traj.t;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    try {
      p.shape.push_back(shape_coordinates(traj.states[k].config.x));
    } catch (const Error&) {
      throw Error(ErrorKind::Collision, "collision at sample " + std::to_string(k), traj.t[k]);
    }
  }
  const std::size_t n = traj.size();
  p.sdot.assign(n, Vec2::Zero());
  p.lamdot.assign(n, 0.0);
  if (n < 2) return p;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = k == 0 ? 0 : k - 1;
    const std::size_t b = k + 1 == n ? n - 1 : k + 1;
    const double dt = p.t[b] - p.t[a];
    p.sdot[k] = Vec2(p.shape[b].s1 - p.shape[a].s1, p.shape[b].s2 - p.shape[a].s2) / dt;
    p.lamdot[k] = std::log(p.shape[b].lambda / p.shape[a].lambda) / dt;
  }
  return p;
}

}  // namespace shapedyn
