#pragma once

// Equations of motion in quasi-velocities Y = alpha(q) qdot for a frame of
// vector fields E_s (the columns of E(q) = alpha(q)^-1):
//
//   d/dt dl/dY_s = E_s[l] - gamma^m_{s k} Y^k dl/dY_m,
//   gamma^l_{s k} = alpha^l([E_s, E_k]).
//
// Everything is evaluated numerically from l(q, Y) and E(q).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>

#include "shapedyn/error.hpp"
#include "shapedyn/fiber_bundle.hpp"
#include "shapedyn/finite_difference.hpp"
#include "shapedyn/geometry.hpp"
#include "shapedyn/integrate.hpp"
#include "shapedyn/potential.hpp"
#include "shapedyn/shape_reduced.hpp"
#include "shapedyn/structure_tensor.hpp"

namespace shapedyn {

struct QuasiFrame {
  Eigen::Index n = 0;
  /// Columns are the frame fields E_s(q) in coordinate components.
  std::function<MatX(const VecX&)> E;
  /// Optional dual coframe; E(q)^-1 when empty.
  std::function<MatX(const VecX&)> alpha;

  MatX alpha_at(const VecX& q) const {
    if (alpha) return alpha(q);
    const MatX e = E(q);
    Eigen::FullPivLU<MatX> lu(e);
    if (!lu.isInvertible()) throw Error(ErrorKind::InvalidArgument, "frame is degenerate");
    return lu.inverse();
  }
};

using QuasiLagrangian = std::function<double(const VecX& q, const VecX& Y)>;

struct BhOptions {
  double step = 1e-4;  // relative step for derivatives along q
  bool richardson = true;
};

inline QuasiFrame identity_frame(Eigen::Index n) {
  return {n, [n](const VecX&) { return MatX(MatX::Identity(n, n)); }, [n](const VecX&) { return MatX(MatX::Identity(n, n)); }};
}

inline VecX quasi_velocities(const QuasiFrame& f, const VecX& q, const VecX& qdot) {
  if (q.size() != f.n || qdot.size() != f.n) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  return f.alpha_at(q) * qdot;
}

inline VecX true_velocities(const QuasiFrame& f, const VecX& q, const VecX& Y) {
  if (q.size() != f.n || Y.size() != f.n) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  return f.E(q) * Y;
}

namespace detail {
template <class F>
auto derivative(F&& f, double h, const BhOptions& o) {
  return o.richardson ? fd::richardson(f, h) : fd::central(f, h);
}

inline double step_along(const VecX& q, const VecX& dir, double rel) {
  const double scale = std::max(1.0, q.lpNorm<Eigen::Infinity>());
  const double len = dir.lpNorm<Eigen::Infinity>();
  return len > 0.0 ? rel * scale / len : rel * scale;
}
}  // namespace detail

/// gamma^l_{s k} = sum (d alpha^l_m / dq^n - d alpha^l_n / dq^m) E^m_s E^n_k,
/// with the q-derivatives taken along the frame fields.
inline StructureTensor gamma_numeric(const QuasiFrame& f, const VecX& q, const BhOptions& o = {}) {
  const MatX e = f.E(q);
  const auto n = static_cast<std::size_t>(f.n);
  std::vector<MatX> dalpha(n);  // derivative of alpha along E_k
  for (std::size_t k = 0; k < n; ++k) {
    const VecX dir = e.col(static_cast<Eigen::Index>(k));
    const double h = detail::step_along(q, dir, o.step);
    dalpha[k] = detail::derivative([&](double eps) { return f.alpha_at(q + eps * dir); }, h, o);
  }
  StructureTensor g(n);
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t k = s + 1; k < n; ++k) {
      const VecX v = dalpha[k] * e.col(static_cast<Eigen::Index>(s)) - dalpha[s] * e.col(static_cast<Eigen::Index>(k));
      for (std::size_t l = 0; l < n; ++l) {
        g(l, s, k) = v[static_cast<Eigen::Index>(l)];
        g(l, k, s) = -v[static_cast<Eigen::Index>(l)];
      }
    }
  return g;
}

/// dl/dY by central differences with a step of order |Y|; exact up to
/// rounding when l is quadratic in Y.
inline VecX quasi_momentum(const QuasiLagrangian& l, const VecX& q, const VecX& Y) {
  const double h = std::max(1.0, Y.lpNorm<Eigen::Infinity>());
  VecX p(Y.size());
  for (Eigen::Index s = 0; s < Y.size(); ++s)
    p[s] = fd::central([&](double eps) { VecX y = Y; y[s] += eps; return l(q, y); }, h);
  return p;
}

inline MatX quasi_mass_matrix(const QuasiLagrangian& l, const VecX& q, const VecX& Y) {
  const double h = std::max(1.0, Y.lpNorm<Eigen::Infinity>());
  MatX m(Y.size(), Y.size());
  for (Eigen::Index s = 0; s < Y.size(); ++s)
    m.col(s) = fd::central([&](double eps) { VecX y = Y; y[s] += eps; return quasi_momentum(l, q, y); }, h);
  return 0.5 * (m + m.transpose());
}

/// Ydot at (q, Y). `gamma` may be supplied to skip the numeric evaluation.
inline VecX bh_rhs(const QuasiFrame& f, const QuasiLagrangian& l, const VecX& q, const VecX& Y,
                   const BhOptions& o = {}, const std::optional<StructureTensor>& gamma = std::nullopt) {
  if (q.size() != f.n || Y.size() != f.n) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  const MatX mass = quasi_mass_matrix(l, q, Y);
  Eigen::LDLT<MatX> ldlt(mass);
  const double scale = mass.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(scale > 0.0) ||
      ldlt.vectorD().cwiseAbs().minCoeff() < 1e-12 * scale)
    throw Error(ErrorKind::SingularMass, "quasi-frame kinetic matrix is singular");
  const VecX p = quasi_momentum(l, q, Y);
  const MatX e = f.E(q);
  const VecX qdot = e * Y;
  VecX dp = VecX::Zero(f.n);
  if (qdot.lpNorm<Eigen::Infinity>() > 0.0) {
    const double h = detail::step_along(q, qdot, o.step);
    dp = detail::derivative([&](double eps) { return quasi_momentum(l, q + eps * qdot, Y); }, h, o);
  }
  const StructureTensor g = gamma ? *gamma : gamma_numeric(f, q, o);
  VecX rhs(f.n);
  for (Eigen::Index s = 0; s < f.n; ++s) {
    const VecX dir = e.col(s);
    const double h = detail::step_along(q, dir, o.step);
    double el = detail::derivative([&](double eps) { return l(q + eps * dir, Y); }, h, o);
    for (Eigen::Index m = 0; m < f.n; ++m)
      for (Eigen::Index k = 0; k < f.n; ++k)
        el -= g(static_cast<std::size_t>(m), static_cast<std::size_t>(s), static_cast<std::size_t>(k)) * Y[k] * p[m];
    rhs[s] = el - dp[s];
  }
  return ldlt.solve(rhs);
}

/// sum p_s Y^s - l.
inline double bh_energy(const QuasiLagrangian& l, const VecX& q, const VecX& Y) {
  return quasi_momentum(l, q, Y).dot(Y) - l(q, Y);
}

struct BhTrajectory {
  std::vector<double> t;
  std::vector<VecX> q;
  std::vector<VecX> Y;
  std::vector<double> energy;
};

/// Integrates qdot = E(q) Y together with bh_rhs.
inline BhTrajectory integrate_bh(const QuasiFrame& f, const QuasiLagrangian& l, const VecX& q0, const VecX& Y0,
                                 double T, const IntegratorConfig& cfg, const BhOptions& o = {}) {
  const Eigen::Index n = f.n;
  OdeState y0(static_cast<std::size_t>(2 * n));
  for (Eigen::Index i = 0; i < n; ++i) {
    y0[static_cast<std::size_t>(i)] = q0[i];
    y0[static_cast<std::size_t>(n + i)] = Y0[i];
  }
  auto split = [n](const OdeState& y) {
    VecX q(n), Y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      q[i] = y[static_cast<std::size_t>(i)];
      Y[i] = y[static_cast<std::size_t>(n + i)];
    }
    return std::pair{q, Y};
  };
  auto rhs = [&](const OdeState& y, OdeState& dy, double) {
    const auto [q, Y] = split(y);
    const VecX qd = f.E(q) * Y;
    const VecX yd = bh_rhs(f, l, q, Y, o);
    for (Eigen::Index i = 0; i < n; ++i) {
      dy[static_cast<std::size_t>(i)] = qd[i];
      dy[static_cast<std::size_t>(n + i)] = yd[i];
    }
  };
  const OdeSolution sol = solve_ode(rhs, y0, T, cfg);
  BhTrajectory tr;
  tr.t = sol.t;
  for (const auto& y : sol.y) {
    auto [q, Y] = split(y);
    tr.energy.push_back(bh_energy(l, q, Y));
    tr.q.push_back(std::move(q));
    tr.Y.push_back(std::move(Y));
  }
  return tr;
}

// ---------------------------------------------------------------------------
// SO(3) frames on Euler angles

/// Right-invariant fields: Y is the space-frame angular velocity.
inline QuasiFrame so3_space_frame() {
  return {3, [](const VecX& q) {
            return MatX(euler_rate_matrix_space({q[0], q[1], q[2]}).inverse());
          },
          [](const VecX& q) { return MatX(euler_rate_matrix_space({q[0], q[1], q[2]})); }};
}

/// Left-invariant fields: Y is the body-frame angular velocity.
inline QuasiFrame so3_body_frame() {
  return {3, [](const VecX& q) {
            return MatX(euler_rate_matrix_body({q[0], q[1], q[2]}).inverse());
          },
          [](const VecX& q) { return MatX(euler_rate_matrix_body({q[0], q[1], q[2]})); }};
}

// ---------------------------------------------------------------------------
// Three-body frame
//
// q = (alpha, beta, gamma, lambda, s1, s2), configuration r = lambda g sigma(s).
// Fields: J_a (infinitesimal rotation about e_a), lambda d/dlambda, and the
// horizontal lifts of d/ds_i. The dual coframe is (omega_rot, omega_scale, ds).

struct ThreeBodyFrame {
  MassVector m;
  ShapeChart chart;
  PotentialSpec pot;

  Points configuration(const VecX& q) const {
    const Rotation g = euler_to_rotation({q[0], q[1], q[2]});
    Points r = chart.section(q.tail<2>());
    for (auto& v : r) v = q[3] * (g * v);
    return r;
  }

  QuasiFrame frame() const {
    const ShapeChart c = chart;
    return {6, [c](const VecX& q) {
              const EulerAngles e{q[0], q[1], q[2]};
              const Mat3 tinv = euler_rate_matrix_space(e).inverse();
              const Mat3 g = euler_to_rotation(e).matrix();
              const VecX s = q.tail<2>();
              const Points sec = c.section(s);
              MatX out = MatX::Zero(6, 6);
              out.block<3, 3>(0, 0) = tinv;
              out(3, 3) = q[3];
              for (Eigen::Index i = 0; i < 2; ++i) {
                const Points d = section_tangent(c, s, i);
                const ConnectionValue w = connection_sim(sec, d);
                out.block<3, 1>(0, 4 + i) = -tinv * (g * w.rot);
                out(3, 4 + i) = -w.scale * q[3];
                out(4 + i, 4 + i) = 1.0;
              }
              return out;
            }};
  }

  /// Velocity generated by quasi-velocities Y at q.
  Points velocity(const VecX& q, const VecX& Y) const {
    const Points r = configuration(q);
    const Rotation g = euler_to_rotation({q[0], q[1], q[2]});
    const VecX s = q.tail<2>();
    Points v(r.size(), Vec3::Zero());
    const Vec3 w = Y.head<3>();
    for (std::size_t k = 0; k < r.size(); ++k) v[k] = w.cross(r[k]) + Y[3] * r[k];
    for (Eigen::Index i = 0; i < 2; ++i) {
      Points d = section_tangent(chart, s, i);
      for (auto& x : d) x = q[3] * (g * x);
      const auto h = horizontal_project(r, d);
      for (std::size_t k = 0; k < r.size(); ++k) v[k] += Y[4 + i] * h[k];
    }
    return v;
  }

  QuasiLagrangian lagrangian() const {
    return [self = *this](const VecX& q, const VecX& Y) {
      const Points v = self.velocity(q, Y);
      double k = 0.0;
      for (const auto& x : v) k += x.squaredNorm();
      const auto x = shape_lift(q[4], q[5], q[3]).x;
      return 0.5 * k - potential(self.pot, self.m, x);
    };
  }
};

inline ThreeBodyFrame three_body_frame(const MassVector& m, const PotentialSpec& pot = {}) {
  return {m, three_body_chart(m), pot};
}

/// Reduced accelerations (internal time, lambda = 1) predicted by the
/// quasi-velocity equations for a nonrotating state.
inline ReducedAcceleration reduced_from_bh(const MassVector& m, const ShapeState3& st, const EulerAngles& e,
                                           const PotentialSpec& pot = {}, const BhOptions& o = {}) {
  const ThreeBodyFrame tb = three_body_frame(m, pot);
  VecX q(6), Y(6);
  q << e.alpha, e.beta, e.gamma, 1.0, st.s1, st.s2;
  const double w = scale_rate(m, st);
  Y << 0.0, 0.0, 0.0, w, st.s1dot, st.s2dot;
  const VecX yd = bh_rhs(tb.frame(), tb.lagrangian(), q, Y, o);
  // At lambda = 1: x'' = xddot + lambda-dot xdot, lambda-dot = w - c.sdot.
  const double ldot = st.lamdot;
  ReducedAcceleration a;
  a.s = Vec2(yd[4] + ldot * st.s1dot, yd[5] + ldot * st.s2dot);
  a.scale = yd[3] + ldot * w;
  return a;
}

}  // namespace shapedyn
