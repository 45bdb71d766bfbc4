#pragma once

// N-body integration in absolute space: m_i a_i = -grad_i V, with energy,
// momentum, angular momentum and dilational momentum monitors.

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <vector>

#include "shapedyn/error.hpp"
#include "shapedyn/geometry.hpp"
#include "shapedyn/integrate.hpp"
#include "shapedyn/potential.hpp"

namespace shapedyn {

struct ConservedQuantities {
  double E = 0.0;
  Vec3 P = Vec3::Zero();
  Vec3 J = Vec3::Zero();
  double D = 0.0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<AbsoluteState> states;
  std::vector<ConservedQuantities> conserved;
  std::vector<double> ephemeris;  // filled by ephemeris_time on request
  std::size_t steps = 0;

  std::size_t size() const noexcept { return t.size(); }
};

inline Points eom_rhs(const MassVector& m, const AbsoluteState& s, const PotentialSpec& pot = {}) {
  Points a = grad_potential(pot, m, s.config.x);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] *= -1.0 / m[i];
  return a;
}

/// Same state with the centre of mass at the origin and at rest.
inline AbsoluteState to_cm_frame(const MassVector& m, const AbsoluteState& s) {
  AbsoluteState out = s;
  const Vec3 c = center_of_mass(m, s.config.x);
  const Vec3 v = center_of_mass(m, s.vel);
  for (auto& x : out.config.x) x -= c;
  for (auto& u : out.vel) u -= v;
  return out;
}

/// E, P, J, D. J and D are taken about the centre of mass.
inline ConservedQuantities conserved(const MassVector& m, const AbsoluteState& s, const PotentialSpec& pot = {}) {
  ConservedQuantities q;
  const Vec3 c = center_of_mass(m, s.config.x);
  const Vec3 vc = center_of_mass(m, s.vel);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Vec3 x = s.config[i] - c;
    const Vec3 v = s.vel[i] - vc;
    q.P += m[i] * s.vel[i];
    q.J += m[i] * x.cross(v);
    q.D += m[i] * x.dot(v);
  }
  q.E = kinetic_energy(m, s) + potential(pot, m, s.config.x);
  return q;
}

namespace detail {
inline OdeState pack(const AbsoluteState& s) {
  OdeState y(6 * s.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      y[3 * i + static_cast<std::size_t>(k)] = s.config[i][k];
      y[3 * (s.size() + i) + static_cast<std::size_t>(k)] = s.vel[i][k];
    }
  return y;
}

inline AbsoluteState unpack(const OdeState& y) {
  const std::size_t n = y.size() / 6;
  AbsoluteState s;
  s.config.x.resize(n);
  s.vel.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    s.config.x[i] = Vec3(y[3 * i], y[3 * i + 1], y[3 * i + 2]);
    s.vel[i] = Vec3(y[3 * (n + i)], y[3 * (n + i) + 1], y[3 * (n + i) + 2]);
  }
  return s;
}

/// Rethrows library collisions raised inside a right-hand side as
/// CollisionDuringIntegration carrying the time.
template <class F>
void with_time(double t, F&& f) {
  try {
    f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Collision)
      throw Error(ErrorKind::CollisionDuringIntegration, "collision at t=" + std::to_string(t), t);
    throw;
  }
}
}  // namespace detail

/// Integrates over [0, T] starting from the centre-of-mass-frame copy of
/// `state0`.
inline Trajectory integrate(const MassVector& m, const AbsoluteState& state0, double T, const IntegratorConfig& cfg,
                            const PotentialSpec& pot = {}) {
  if (state0.size() != m.size() || state0.vel.size() != m.size())
    throw Error(ErrorKind::InvalidArgument, "mass/state size mismatch");
  const AbsoluteState s0 = to_cm_frame(m, state0);
  detail::with_time(0.0, [&] { (void)potential(pot, m, s0.config.x); });
  const std::size_t n = m.size();
  auto rhs = [&](const OdeState& y, OdeState& dy, double t) {
    const AbsoluteState s = detail::unpack(y);
    Points a;
    detail::with_time(t, [&] { a = eom_rhs(m, s, pot); });
    for (std::size_t i = 0; i < 3 * n; ++i) dy[i] = y[3 * n + i];
    for (std::size_t i = 0; i < n; ++i)
      for (int k = 0; k < 3; ++k) dy[3 * (n + i) + static_cast<std::size_t>(k)] = a[i][k];
  };
  auto guard = [&](const OdeState& y, double t) {
    detail::with_time(t, [&] { detail::require_separated(detail::unpack(y).config.x); });
  };
  const OdeSolution sol = solve_ode(rhs, detail::pack(s0), T, cfg, guard);
  Trajectory tr;
  tr.t = sol.t;
  tr.steps = sol.steps;
  tr.states.reserve(sol.y.size());
  tr.conserved.reserve(sol.y.size());
  for (const auto& y : sol.y) {
    tr.states.push_back(detail::unpack(y));
    tr.conserved.push_back(conserved(m, tr.states.back(), pot));
  }
  return tr;
}

namespace detail {
/// dt_e / dt = sqrt(K / (E - V)). At a momentary rest K and E - V vanish
/// together and the ratio tends to one.
inline double ephemeris_rate(const MassVector& m, const AbsoluteState& s, double E, const PotentialSpec& pot,
                             double t, std::size_t k) {
  const double gap = E - potential(pot, m, s.config.x);
  const double kin = kinetic_energy(m, s);
  const double tiny = 1e-12 * (std::abs(E) + kin + 1e-300);
  if (gap > tiny) return std::sqrt(kin / gap);
  if (kin > tiny || gap < -tiny)
    throw Error(ErrorKind::TurningPoint, "E - V <= 0 at sample " + std::to_string(k), t);
  return 1.0;
}
}  // namespace detail

/// Cumulative ephemeris time: the integral of dl / sqrt(E - V) with the
/// kinetic line element dl^2 = (1/2) sum m |dx|^2, so that dl/dt = sqrt(K).
/// Trapezoidal rule on the samples.
inline std::vector<double> ephemeris_time(const Trajectory& traj, const MassVector& m, double E,
                                          const PotentialSpec& pot = {}) {
  std::vector<double> out(traj.size(), 0.0);
  std::vector<double> rate(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) rate[k] = detail::ephemeris_rate(m, traj.states[k], E, pot, traj.t[k], k);
  for (std::size_t k = 1; k < traj.size(); ++k)
    out[k] = out[k - 1] + 0.5 * (rate[k] + rate[k - 1]) * (traj.t[k] - traj.t[k - 1]);
  return out;
}

/// x -> b x, v -> b^{k/2} v, matching t -> b^{1 - k/2} t for a degree-k potential.
inline AbsoluteState mechanical_similarity_map(const AbsoluteState& s, double b, double k) {
  if (!(b > 0.0)) throw Error(ErrorKind::InvalidArgument, "scale factor must be positive");
  AbsoluteState out = s;
  const double vs = std::pow(b, 0.5 * k);
  for (auto& x : out.config.x) x *= b;
  for (auto& v : out.vel) v *= vs;
  return out;
}

/// Characteristic time sqrt(I_cm / |V|) of a configuration.
inline double characteristic_time(const MassVector& m, std::span<const Vec3> x, const PotentialSpec& pot = {}) {
  const double v = std::abs(potential(pot, m, x));
  if (!(v > 0.0)) throw Error(ErrorKind::InvalidArgument, "potential vanishes");
  return std::sqrt(i_cm(m, x) / v);
}

}  // namespace shapedyn
