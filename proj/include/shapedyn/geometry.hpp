#pragma once

// Linear algebra of N point masses: the so(3) hat map, rotations and Euler
// angles, mass-weighted Jacobi coordinates, the mass metric, and the inertia
// and dilational tensors.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapedyn/error.hpp"

namespace shapedyn {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Points = std::vector<Vec3>;
/// A tangent vector at a configuration: one R^3 block per particle.
using Tangent = std::vector<Vec3>;
/// Time derivative of the N-1 Jacobi vectors.
using JacobiVelocity = std::vector<Vec3>;

class MassVector {
 public:
  MassVector() = default;
  explicit MassVector(std::vector<double> m) : m_(std::move(m)) {
    if (m_.size() < 2) throw Error(ErrorKind::InvalidArgument, "at least two masses required");
    for (double mi : m_) {
      if (!(mi > 0.0) || !std::isfinite(mi)) throw Error(ErrorKind::InvalidArgument, "masses must be positive");
    }
  }
  MassVector(std::initializer_list<double> m) : MassVector(std::vector<double>(m)) {}

  std::size_t size() const noexcept { return m_.size(); }
  double operator[](std::size_t i) const { return m_[i]; }
  double total() const {
    double s = 0.0;
    for (double mi : m_) s += mi;
    return s;
  }
  /// mu_j = m_1 + ... + m_j (1-based j, as used by the Jacobi recursion).
  double partial(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += m_[i];
    return s;
  }
  const std::vector<double>& values() const noexcept { return m_; }

 private:
  std::vector<double> m_;
};

struct AbsoluteConfiguration {
  Points x;

  std::size_t size() const noexcept { return x.size(); }
  const Vec3& operator[](std::size_t i) const { return x[i]; }
  Vec3& operator[](std::size_t i) { return x[i]; }
};

struct AbsoluteState {
  AbsoluteConfiguration config;
  Points vel;

  std::size_t size() const noexcept { return config.size(); }
};

struct JacobiConfiguration {
  Points r;  // N-1 mass-weighted Jacobi vectors
  Vec3 cm = Vec3::Zero();
};

struct EulerAngles {
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
};

/// An element of SO(3). Construction from an arbitrary matrix validates
/// orthonormality and orientation.
class Rotation {
 public:
  Rotation() : g_(Mat3::Identity()) {}

  static Rotation from_matrix(const Mat3& g, double tol = 1e-12) {
    if ((g.transpose() * g - Mat3::Identity()).cwiseAbs().maxCoeff() > tol || std::abs(g.determinant() - 1.0) > tol) {
      throw Error(ErrorKind::InvalidArgument, "matrix is not a proper rotation");
    }
    Rotation r;
    r.g_ = g;
    return r;
  }
  static Rotation identity() { return Rotation(); }
  /// Rotation by `angle` about the unit vector `axis` (Rodrigues).
  static Rotation about_axis(const Vec3& axis, double angle) {
    Rotation r;
    r.g_ = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    return r;
  }

  const Mat3& matrix() const noexcept { return g_; }
  Rotation inverse() const {
    Rotation r;
    r.g_ = g_.transpose();
    return r;
  }
  Vec3 operator*(const Vec3& v) const { return g_ * v; }
  Rotation operator*(const Rotation& o) const {
    Rotation r;
    r.g_ = g_ * o.g_;
    return r;
  }

 private:
  Mat3 g_;
};

/// Element of so(3), stored as its R^3 vector; the antisymmetric matrix is
/// produced on demand.
class So3Element {
 public:
  So3Element() : w_(Vec3::Zero()) {}
  explicit So3Element(const Vec3& w) : w_(w) {}

  const Vec3& vector() const noexcept { return w_; }
  Mat3 matrix() const {
    Mat3 m;
    m << 0.0, -w_.z(), w_.y(),
         w_.z(), 0.0, -w_.x(),
        -w_.y(), w_.x(), 0.0;
    return m;
  }

 private:
  Vec3 w_;
};

struct SimilarityVelocity {
  Vec3 v = Vec3::Zero();      // translation rate
  Vec3 omega = Vec3::Zero();  // rotation rate
  double bdot = 0.0;          // scale rate

  /// The 4x4 sim(3) matrix acting on homogeneous coordinates (x, 1).
  Eigen::Matrix4d matrix() const {
    Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
    m.topLeftCorner<3, 3>() = So3Element(omega).matrix() + bdot * Mat3::Identity();
    m.topRightCorner<3, 1>() = v;
    return m;
  }
};

struct FrameVelocities {
  Vec3 space = Vec3::Zero();  // Omega, fixed-frame components
  Vec3 body = Vec3::Zero();   // Omega', body-frame components
};

// ---------------------------------------------------------------------------
// so(3)

inline So3Element hat(const Vec3& w) { return So3Element(w); }

/// Inverse of hat. Reads the vector from the antisymmetric part of `m`.
inline Vec3 unhat(const Mat3& m) {
  return Vec3(0.5 * (m(2, 1) - m(1, 2)), 0.5 * (m(0, 2) - m(2, 0)), 0.5 * (m(1, 0) - m(0, 1)));
}

/// R_a b. Equals a x b.
inline Vec3 apply_hat(const Vec3& a, const Vec3& b) { return hat(a).matrix() * b; }

/// Adjoint action of SO(3) on so(3) in vector form: Ad_g w = g w.
inline Vec3 adjoint_rotate(const Rotation& g, const Vec3& w) { return g * w; }

// ---------------------------------------------------------------------------
// Euler angles (ZYZ)

inline Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0.0,
       std::sin(a), std::cos(a), 0.0,
       0.0, 0.0, 1.0;
  return m;
}

inline Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0.0, std::sin(a),
       0.0, 1.0, 0.0,
      -std::sin(a), 0.0, std::cos(a);
  return m;
}

/// g = Rz(alpha) Ry(beta) Rz(gamma). The only place the convention is fixed.
inline Rotation euler_to_rotation(const EulerAngles& e) {
  return Rotation::from_matrix(rot_z(e.alpha) * rot_y(e.beta) * rot_z(e.gamma), 1e-10);
}

/// Columns map Euler-angle rates to space-frame angular velocity:
/// Omega = T (alpha', beta', gamma').
inline Mat3 euler_rate_matrix_space(const EulerAngles& e) {
  Mat3 t;
  t.col(0) = Vec3::UnitZ();
  t.col(1) = rot_z(e.alpha) * Vec3::UnitY();
  t.col(2) = rot_z(e.alpha) * rot_y(e.beta) * Vec3::UnitZ();
  return t;
}

/// Same for body-frame angular velocity: Omega' = g^T Omega.
inline Mat3 euler_rate_matrix_body(const EulerAngles& e) {
  return euler_to_rotation(e).matrix().transpose() * euler_rate_matrix_space(e);
}

/// Inverse of euler_to_rotation for beta in (0, pi).
inline EulerAngles rotation_to_euler(const Rotation& r) {
  const Mat3& g = r.matrix();
  EulerAngles e;
  e.beta = std::acos(std::clamp(g(2, 2), -1.0, 1.0));
  e.alpha = std::atan2(g(1, 2), g(0, 2));
  e.gamma = std::atan2(g(2, 1), -g(2, 0));
  return e;
}

namespace detail {
inline void require_tangent(const Mat3& xi) {
  const double sym = (xi + xi.transpose()).cwiseAbs().maxCoeff() * 0.5;
  if (sym > 1e-8) throw Error(ErrorKind::NotTangent, "velocity is not tangent to SO(3)");
}
}  // namespace detail

/// Omega' = unhat(g^-1 gdot), the left-invariant (body) angular velocity.
inline Vec3 body_angular_velocity(const Rotation& g, const Mat3& gdot) {
  const Mat3 xi = g.matrix().transpose() * gdot;
  detail::require_tangent(xi);
  return unhat(xi);
}

/// Omega = unhat(gdot g^-1), the right-invariant (space) angular velocity.
inline Vec3 space_angular_velocity(const Rotation& g, const Mat3& gdot) {
  const Mat3 xi = gdot * g.matrix().transpose();
  detail::require_tangent(xi);
  return unhat(xi);
}

// ---------------------------------------------------------------------------
// Jacobi coordinates

namespace detail {
/// (1/mu_j + 1/m_{j+1})^{-1/2}, 1-based j.
inline double jacobi_weight(const MassVector& m, std::size_t j) {
  return 1.0 / std::sqrt(1.0 / m.partial(j) + 1.0 / m[j]);
}
}  // namespace detail

inline Vec3 center_of_mass(const MassVector& m, std::span<const Vec3> x) {
  Vec3 c = Vec3::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) c += m[i] * x[i];
  return c / m.total();
}

/// Jacobi vectors of displacements. Linear; the same map sends velocities to
/// Jacobi velocities.
inline Points jacobi_vectors(const MassVector& m, std::span<const Vec3> x) {
  if (x.size() != m.size()) throw Error(ErrorKind::InvalidArgument, "mass/configuration size mismatch");
  const std::size_t n = m.size();
  Points r(n - 1);
  Vec3 weighted = Vec3::Zero();
  for (std::size_t j = 1; j < n; ++j) {
    weighted += m[j - 1] * x[j - 1];
    r[j - 1] = detail::jacobi_weight(m, j) * (x[j] - weighted / m.partial(j));
  }
  return r;
}

inline JacobiConfiguration jacobi_transform(const MassVector& m, const AbsoluteConfiguration& c) {
  return {jacobi_vectors(m, c.x), center_of_mass(m, c.x)};
}

inline AbsoluteConfiguration jacobi_inverse(const MassVector& m, const JacobiConfiguration& j) {
  const std::size_t n = m.size();
  if (j.r.size() + 1 != n) throw Error(ErrorKind::InvalidArgument, "mass/Jacobi size mismatch");
  Points x(n);
  x[0] = Vec3::Zero();
  Vec3 partial_cm = Vec3::Zero();
  for (std::size_t k = 1; k < n; ++k) {
    const double mu = m.partial(k);
    x[k] = partial_cm + j.r[k - 1] / detail::jacobi_weight(m, k);
    partial_cm = (mu * partial_cm + m[k] * x[k]) / (mu + m[k]);
  }
  const Vec3 shift = j.cm - partial_cm;
  for (auto& xi : x) xi += shift;
  return {std::move(x)};
}

inline JacobiVelocity jacobi_velocity(const MassVector& m, const AbsoluteState& s) { return jacobi_vectors(m, s.vel); }

// ---------------------------------------------------------------------------
// Kinetic energy and mass metric

inline double mass_metric(const MassVector& m, std::span<const Vec3> u, std::span<const Vec3> v) {
  if (u.size() != m.size() || v.size() != m.size()) throw Error(ErrorKind::InvalidArgument, "tangent size mismatch");
  double s = 0.0;
  for (std::size_t k = 0; k < m.size(); ++k) s += m[k] * u[k].dot(v[k]);
  return s;
}

inline double kinetic_energy(const MassVector& m, const AbsoluteState& s) { return 0.5 * mass_metric(m, s.vel, s.vel); }

/// (1/2) sum |r_a'|^2 + (M/2) |R_cm'|^2.
inline double kinetic_energy_jacobi(const MassVector& m, std::span<const Vec3> jvel, const Vec3& vcm) {
  double s = 0.0;
  for (const auto& v : jvel) s += v.squaredNorm();
  return 0.5 * s + 0.5 * m.total() * vcm.squaredNorm();
}

/// M(u, v) / M(w, w) with w the uniform displacement field x_i - x_j. The unit
/// of length is the distance between particles i and j, so the value is
/// invariant under x -> b x with pushed-forward tangents.
inline double measured_mass_metric(const MassVector& m, const AbsoluteConfiguration& c, std::span<const Vec3> u,
                                   std::span<const Vec3> v, std::pair<std::size_t, std::size_t> unit_pair) {
  const auto [i, j] = unit_pair;
  if (i == j || i >= c.size() || j >= c.size()) throw Error(ErrorKind::InvalidArgument, "invalid unit pair");
  const Vec3 d = c[i] - c[j];
  if (d.norm() < 1e-12) throw Error(ErrorKind::DegenerateUnit, "unit particles coincide");
  const Tangent w(c.size(), d);
  return mass_metric(m, u, v) / mass_metric(m, w, w);
}

// ---------------------------------------------------------------------------
// Inertia and dilational tensors

/// A(v) = sum r x (v x r), i.e. sum (|r|^2 I - r r^T).
inline Mat3 inertia_tensor(std::span<const Vec3> r) {
  Mat3 a = Mat3::Zero();
  for (const auto& rj : r) a += rj.squaredNorm() * Mat3::Identity() - rj * rj.transpose();
  return a;
}
inline Mat3 inertia_tensor(const JacobiConfiguration& j) { return inertia_tensor(j.r); }

/// Collinear (or total-collision) configurations have a singular inertia
/// tensor; flagged when the smallest eigenvalue drops below 1e-10 * trace.
inline bool is_invertible(const Mat3& a) {
  const double tr = a.trace();
  if (!(tr > 0.0)) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= 1e-10 * tr;
}

inline double dilational_tensor(std::span<const Vec3> r) {
  double s = 0.0;
  for (const auto& rj : r) s += rj.squaredNorm();
  if (s < 1e-300) throw Error(ErrorKind::DegenerateConfiguration, "total collision");
  return s;
}
inline double dilational_tensor(const JacobiConfiguration& j) { return dilational_tensor(j.r); }

// ---------------------------------------------------------------------------
// Configuration predicates and group actions

inline double diameter(std::span<const Vec3> x) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t k = i + 1; k < x.size(); ++k) d = std::max(d, (x[i] - x[k]).norm());
  return d;
}

/// No two particles coincide and not all are collinear.
inline bool is_nondegenerate(const AbsoluteConfiguration& c, double rel_tol = 1e-10) {
  const double d = diameter(c.x);
  if (!(d > 0.0)) return false;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t k = i + 1; k < c.size(); ++k)
      if ((c[i] - c[k]).norm() < rel_tol * d) return false;
  const MassVector unit(std::vector<double>(c.size(), 1.0));
  return is_invertible(inertia_tensor(jacobi_vectors(unit, c.x)));
}

/// x -> b g x + t applied to every particle.
inline AbsoluteConfiguration similarity_transform(const AbsoluteConfiguration& c, double b, const Rotation& g,
                                                  const Vec3& t) {
  AbsoluteConfiguration out = c;
  for (auto& xi : out.x) xi = b * (g * xi) + t;
  return out;
}

inline Points rotate_all(const Rotation& g, std::span<const Vec3> v) {
  Points out(v.begin(), v.end());
  for (auto& vi : out) vi = g * vi;
  return out;
}

inline Points scale_all(double b, std::span<const Vec3> v) {
  Points out(v.begin(), v.end());
  for (auto& vi : out) vi *= b;
  return out;
}

}  // namespace shapedyn
