#pragma once

// The SO(3) x Sc connection on the centre-of-mass configuration space, its
// horizontal projection and lift, and finite-difference curvature.
//
// Points of Q_cm are represented by their N-1 Jacobi vectors. A ShapeChart
// supplies a local section s -> sigma(s) of the bundle; every configuration in
// the chart's patch is lambda * g * sigma(s).

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shapedyn/error.hpp"
#include "shapedyn/finite_difference.hpp"
#include "shapedyn/geometry.hpp"
#include "shapedyn/structure_tensor.hpp"

namespace shapedyn {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Value of the g_rs connection: rotation part in R^3, scale part in R.
struct ConnectionValue {
  Vec3 rot = Vec3::Zero();
  double scale = 0.0;

  /// hat(rot) + scale * I.
  Mat3 matrix() const { return hat(rot).matrix() + scale * Mat3::Identity(); }
};

// ---------------------------------------------------------------------------
// Flattening helpers (Jacobi vectors <-> R^{3(N-1)})

inline VecX flatten(std::span<const Vec3> r) {
  VecX out(3 * static_cast<Eigen::Index>(r.size()));
  for (std::size_t j = 0; j < r.size(); ++j) out.segment<3>(3 * static_cast<Eigen::Index>(j)) = r[j];
  return out;
}

inline Points unflatten(const VecX& v) {
  Points out(static_cast<std::size_t>(v.size() / 3));
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = v.segment<3>(3 * static_cast<Eigen::Index>(j));
  return out;
}

// ---------------------------------------------------------------------------
// Connection

/// A_x^{-1} (sum r x rdot).
inline Vec3 connection_rot(std::span<const Vec3> r, std::span<const Vec3> rdot) {
  const Mat3 a = inertia_tensor(r);
  if (!is_invertible(a)) throw Error(ErrorKind::SingularInertia, "inertia tensor is singular (collinear configuration)");
  Vec3 l = Vec3::Zero();
  for (std::size_t j = 0; j < r.size(); ++j) l += r[j].cross(rdot[j]);
  return a.ldlt().solve(l);
}

/// (sum r . rdot) / (sum |r|^2).
inline double connection_scale(std::span<const Vec3> r, std::span<const Vec3> rdot) {
  const double d = dilational_tensor(r);
  double s = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) s += r[j].dot(rdot[j]);
  return s / d;
}

inline ConnectionValue connection_sim(std::span<const Vec3> r, std::span<const Vec3> rdot) {
  return {connection_rot(r, rdot), connection_scale(r, rdot)};
}

/// Velocity of the infinitesimal similarity (omega, c): omega x r + c r.
inline JacobiVelocity vertical_velocity(std::span<const Vec3> r, const ConnectionValue& w) {
  JacobiVelocity out(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) out[j] = w.rot.cross(r[j]) + w.scale * r[j];
  return out;
}

/// Removes the vertical part generated by connection_sim(r, rdot).
inline JacobiVelocity horizontal_project(std::span<const Vec3> r, std::span<const Vec3> rdot) {
  const auto vert = vertical_velocity(r, connection_sim(r, rdot));
  JacobiVelocity out(rdot.begin(), rdot.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] -= vert[j];
  return out;
}

// ---------------------------------------------------------------------------
// Charts

/// Fibre coordinates of a configuration in a chart: x = scale * rotation * sigma(shape).
struct ChartPoint {
  VecX shape;
  double scale = 1.0;
  Rotation rotation;
};

struct ShapeChart {
  /// Dimension of shape space (3N - 7).
  Eigen::Index dim = 0;
  /// s -> Jacobi vectors of the section at unit scale and identity orientation.
  std::function<Points(const VecX&)> section;
  /// Optional closed-form d sigma / d s^i. Numerical differentiation is used when empty.
  std::function<Points(const VecX&, Eigen::Index)> section_derivative;
  std::function<bool(const VecX&)> in_domain;
  /// Optional closed-form inverse of (s, scale, g) -> scale * g * sigma(s).
  std::function<ChartPoint(std::span<const Vec3>)> locate;
};

inline void require_domain(const ShapeChart& chart, const VecX& s) {
  if (!chart.in_domain(s)) throw Error(ErrorKind::ChartDomain, "shape point outside chart domain");
}

/// d sigma / d s^i; central differences with step 1e-6 relative when the chart
/// has no closed-form derivative.
inline Points section_tangent(const ShapeChart& chart, const VecX& s, Eigen::Index i) {
  if (chart.section_derivative) return chart.section_derivative(s, i);
  const double h = fd::relative_step(s[i], 1e-6);
  auto f = [&](double eps) {
    VecX sp = s;
    sp[i] += eps;
    return flatten(chart.section(sp));
  };
  return unflatten(fd::central(f, h));
}

inline Points section_pushforward(const ShapeChart& chart, const VecX& s, const VecX& w) {
  Points out(chart.section(s).size(), Vec3::Zero());
  for (Eigen::Index i = 0; i < chart.dim; ++i) {
    if (w[i] == 0.0) continue;
    const auto d = section_tangent(chart, s, i);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w[i] * d[j];
  }
  return out;
}

/// Newton solve of scale * (g_seed exp(theta)) * sigma(s) = r for (s, log scale, theta),
/// starting from `seed`. Used when the chart has no closed-form locate.
inline ChartPoint locate_near(const ShapeChart& chart, std::span<const Vec3> r, const ChartPoint& seed) {
  if (chart.locate) return chart.locate(r);
  const Eigen::Index d = chart.dim;
  const Eigen::Index n = d + 4;
  const VecX target = flatten(r);
  auto assemble = [&](const VecX& u) {
    const VecX s = u.head(d);
    const double scale = seed.scale * std::exp(u[d]);
    const Mat3 g = seed.rotation.matrix() * Eigen::AngleAxisd(u.tail<3>().norm(),
                                                             u.tail<3>().norm() > 0 ? Vec3(u.tail<3>().normalized())
                                                                                    : Vec3::UnitZ())
                                                .toRotationMatrix();
    Points sec = chart.section(s);
    for (auto& v : sec) v = scale * (g * v);
    return flatten(sec);
  };
  VecX u = VecX::Zero(n);
  u.head(d) = seed.shape;
  for (int it = 0; it < 50; ++it) {
    const VecX res = assemble(u) - target;
    if (res.norm() <= 1e-14 * std::max(1.0, target.norm())) break;
    MatX jac(target.size(), n);
    for (Eigen::Index k = 0; k < n; ++k) {
      auto f = [&](double eps) {
        VecX up = u;
        up[k] += eps;
        return assemble(up);
      };
      jac.col(k) = fd::central(f, 1e-7);
    }
    u -= jac.colPivHouseholderQr().solve(res);
  }
  ChartPoint out;
  out.shape = u.head(d);
  out.scale = seed.scale * std::exp(u[d]);
  const Vec3 th = u.tail<3>();
  out.rotation = seed.rotation * (th.norm() > 0 ? Rotation::about_axis(th, th.norm()) : Rotation::identity());
  return out;
}

/// Horizontal lift of the shape tangent w at sigma(s).
inline JacobiVelocity horizontal_lift_shape(const ShapeChart& chart, const VecX& s, const VecX& w) {
  require_domain(chart, s);
  const Points r = chart.section(s);
  if (w.isZero(0.0)) return JacobiVelocity(r.size(), Vec3::Zero());
  return horizontal_project(r, section_pushforward(chart, s, w));
}

/// Projection of a Jacobi velocity at sigma(s) to shape space, obtained by
/// least squares against the section tangents after removing the vertical part.
inline VecX shape_projection(const ShapeChart& chart, const VecX& s, std::span<const Vec3> rdot) {
  const Points r = chart.section(s);
  MatX basis(3 * static_cast<Eigen::Index>(r.size()), chart.dim);
  for (Eigen::Index i = 0; i < chart.dim; ++i) basis.col(i) = flatten(horizontal_project(r, section_tangent(chart, s, i)));
  return basis.colPivHouseholderQr().solve(flatten(horizontal_project(r, rdot)));
}

// ---------------------------------------------------------------------------
// Vector fields and brackets

using VectorField = std::function<VecX(const VecX&)>;

/// [V1, V2] at x by central differences of the fields along each other:
/// DV2 . V1 - DV1 . V2, with one Richardson step.
inline VecX lie_bracket_fd(const VectorField& v1, const VectorField& v2, const VecX& x, double h) {
  const VecX a = v1(x);
  const VecX b = v2(x);
  auto along = [&](const VectorField& field, const VecX& dir) {
    return fd::richardson([&](double eps) { return field(x + eps * dir); }, h);
  };
  return (along(v2, a) - along(v1, b)).eval();
}

/// The invariant horizontal field on the chart's patch whose value projects to
/// the constant shape vector w.
inline VectorField horizontal_field(const ShapeChart& chart, const VecX& w, ChartPoint seed) {
  return [chart, w, seed](const VecX& x) -> VecX {
    const Points r = unflatten(x);
    const ChartPoint p = locate_near(chart, r, seed);
    Points push = section_pushforward(chart, p.shape, w);
    for (auto& v : push) v = p.scale * (p.rotation * v);
    return flatten(horizontal_project(r, push));
  };
}

namespace detail {
inline double characteristic_length(std::span<const Vec3> r) { return std::sqrt(dilational_tensor(r)); }
}  // namespace detail

/// C(w1, w2) = -1/2 omega_s([w1*, w2*]). Base step 1e-4 times the
/// configuration's size, Richardson-extrapolated.
inline double curvature_scale(const ShapeChart& chart, const VecX& s, const VecX& w1, const VecX& w2) {
  require_domain(chart, s);
  const Points r = chart.section(s);
  const ChartPoint seed{s, 1.0, Rotation::identity()};
  const double h = 1e-4 * detail::characteristic_length(r);
  const VecX br = lie_bracket_fd(horizontal_field(chart, w1, seed), horizontal_field(chart, w2, seed), flatten(r), h);
  return -0.5 * connection_scale(r, unflatten(br));
}

/// Same construction for the rotational part: -1/2 omega_r([e_i*, e_j*]).
inline Vec3 curvature_rot_bracket(const ShapeChart& chart, const VecX& s, Eigen::Index i, Eigen::Index j) {
  require_domain(chart, s);
  const Points r = chart.section(s);
  const ChartPoint seed{s, 1.0, Rotation::identity()};
  const double h = 1e-4 * detail::characteristic_length(r);
  const VecX ei = VecX::Unit(chart.dim, i);
  const VecX ej = VecX::Unit(chart.dim, j);
  const VecX br = lie_bracket_fd(horizontal_field(chart, ei, seed), horizontal_field(chart, ej, seed), flatten(r), h);
  return -0.5 * connection_rot(r, unflatten(br));
}

/// beta_i(s) = A^{-1} sum r x d r / d s^i along the section.
inline Vec3 connection_coefficient(const ShapeChart& chart, const VecX& s, Eigen::Index i) {
  return connection_rot(chart.section(s), section_tangent(chart, s, i));
}

/// k^c_ij = d beta^c_j / d s^i - d beta^c_i / d s^j - sum eps_abc beta^a_i beta^b_j.
/// Derivatives by Richardson-extrapolated central differences, step 1e-4.
inline Vec3 curvature_rot(const ShapeChart& chart, const VecX& s, Eigen::Index i, Eigen::Index j) {
  require_domain(chart, s);
  if (i == j) return Vec3::Zero();
  auto dbeta = [&](Eigen::Index along, Eigen::Index comp) -> Vec3 {
    const double h = fd::relative_step(s[along], 1e-4);
    return fd::richardson(
        [&](double eps) -> Vec3 {
          VecX sp = s;
          sp[along] += eps;
          return connection_coefficient(chart, sp, comp);
        },
        h);
  };
  const Vec3 bi = connection_coefficient(chart, s, i);
  const Vec3 bj = connection_coefficient(chart, s, j);
  return dbeta(i, j) - dbeta(j, i) - bi.cross(bj);
}

/// gamma for the frame (omega_r^a, omega_s, ds^i): index 0..2 rotation,
/// 3 scale, 4.. shape. gamma^a_bc = -eps_bca, gamma^a_{4+i,4+j} = -k^a_ij,
/// everything else zero.
inline StructureTensor structure_coefficients(const ShapeChart& chart, const VecX& s) {
  require_domain(chart, s);
  const auto n = static_cast<std::size_t>(4 + chart.dim);
  StructureTensor g(n);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 3; ++c) g(a, b, c) = -levi_civita(b, c, a);
  for (Eigen::Index i = 0; i < chart.dim; ++i)
    for (Eigen::Index j = i + 1; j < chart.dim; ++j) {
      const Vec3 k = curvature_rot(chart, s, i, j);
      for (std::size_t a = 0; a < 3; ++a) {
        g(a, 4 + static_cast<std::size_t>(i), 4 + static_cast<std::size_t>(j)) = -k[static_cast<Eigen::Index>(a)];
        g(a, 4 + static_cast<std::size_t>(j), 4 + static_cast<std::size_t>(i)) = k[static_cast<Eigen::Index>(a)];
      }
    }
  return g;
}

}  // namespace shapedyn
