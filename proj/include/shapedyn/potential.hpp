#pragma once

// Scale-invariant potential V = G f with G = sqrt(I_cm) and f the Newtonian
// pair sum, plus conformal factors and homogeneity measurement.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "shapedyn/error.hpp"
#include "shapedyn/geometry.hpp"

namespace shapedyn {

enum class PotentialKind {
  Mnt,     // coupling * sqrt(I_cm) * f
  Newton,  // coupling * f
  Free,    // 0
};

/// V = coupling * G * f (or coupling * f for the Newtonian contrast). The
/// default coupling is +1; -1 gives the attractive sign.
struct PotentialSpec {
  PotentialKind kind = PotentialKind::Mnt;
  double coupling = 1.0;
};

namespace detail {
inline void require_separated(std::span<const Vec3> x) {
  const double d = diameter(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (!((x[i] - x[j]).norm() >= 1e-12 * d) || d == 0.0)
        throw Error(ErrorKind::Collision, "particles " + std::to_string(i + 1) + " and " + std::to_string(j + 1) +
                                              " coincide");
}
}  // namespace detail

/// sum_{i<j} m_i m_j / |x_i - x_j|.
inline double pair_sum_f(const MassVector& m, std::span<const Vec3> x) {
  detail::require_separated(x);
  double f = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) f += m[i] * m[j] / (x[i] - x[j]).norm();
  return f;
}

/// sum m_j |x_j - x_cm|^2.
inline double i_cm(const MassVector& m, std::span<const Vec3> x) {
  const Vec3 c = center_of_mass(m, x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += m[i] * (x[i] - c).squaredNorm();
  return s;
}

/// (1/M) sum_{i<j} m_i m_j |x_i - x_j|^2. Same value as i_cm.
inline double i_cm_pairs(const MassVector& m, std::span<const Vec3> x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) s += m[i] * m[j] * (x[i] - x[j]).squaredNorm();
  return s / m.total();
}

inline double g_factor(const MassVector& m, std::span<const Vec3> x) { return std::sqrt(i_cm(m, x)); }

inline double mnt_potential(const MassVector& m, std::span<const Vec3> x) { return g_factor(m, x) * pair_sum_f(m, x); }

inline double potential(const PotentialSpec& p, const MassVector& m, std::span<const Vec3> x) {
  switch (p.kind) {
    case PotentialKind::Mnt: return p.coupling * mnt_potential(m, x);
    case PotentialKind::Newton: return p.coupling * pair_sum_f(m, x);
    case PotentialKind::Free: return 0.0;
  }
  return 0.0;
}

/// sum_{i<j} |x_i - x_j|^-2.
inline double conformal_factor_pairs(std::span<const Vec3> x) {
  detail::require_separated(x);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) s += 1.0 / (x[i] - x[j]).squaredNorm();
  return s;
}

inline double conformal_factor_inertia(const MassVector& m, std::span<const Vec3> x) {
  const double i = i_cm(m, x);
  if (!(i > 0.0)) throw Error(ErrorKind::DegenerateConfiguration, "total collision");
  return 1.0 / i;
}

struct HomogeneityFit {
  double degree = 0.0;
  double residual = 0.0;  // rms of the log-log fit
};

/// Least-squares slope of log|fn(b x)| against log b.
inline HomogeneityFit homogeneity_degree(const std::function<double(std::span<const Vec3>)>& fn,
                                         std::span<const Vec3> x, std::span<const double> b_samples) {
  if (b_samples.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two scale samples");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(b_samples.size()), 2);
  Eigen::VectorXd y(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    const double b = b_samples[static_cast<std::size_t>(k)];
    const double v = fn(scale_all(b, x));
    if (v == 0.0) throw Error(ErrorKind::InvalidArgument, "function vanishes");
    a(k, 0) = std::log(b);
    a(k, 1) = 1.0;
    y[k] = std::log(std::abs(v));
  }
  const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd r = a * c - y;
  return {c[0], std::sqrt(r.squaredNorm() / static_cast<double>(r.size()))};
}

/// Analytic gradient dV/dx_i for the given potential spec.
inline Points grad_potential(const PotentialSpec& p, const MassVector& m, std::span<const Vec3> x) {
  Points g(x.size(), Vec3::Zero());
  if (p.kind == PotentialKind::Free) return g;
  detail::require_separated(x);
  double f = 0.0;
  Points gf(x.size(), Vec3::Zero());
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const Vec3 d = x[i] - x[j];
      const double r = d.norm();
      const double mm = m[i] * m[j];
      f += mm / r;
      const Vec3 t = mm * d / (r * r * r);
      gf[i] -= t;
      gf[j] += t;
    }
  if (p.kind == PotentialKind::Newton) {
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = p.coupling * gf[i];
    return g;
  }
  const Vec3 c = center_of_mass(m, x);
  const double gg = g_factor(m, x);
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = p.coupling * (f * m[i] * (x[i] - c) / gg + gg * gf[i]);
  return g;
}

inline Points grad_potential(const MassVector& m, std::span<const Vec3> x) { return grad_potential({}, m, x); }

}  // namespace shapedyn
