#pragma once

// Oracle comparison: a full three-body run projected to shape space against
// the reduced run started from the projected initial state, aligned in
// internal time reconstructed from the motion.

#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "shapedyn/dynamics_absolute.hpp"
#include "shapedyn/error.hpp"
#include "shapedyn/shape_reduced.hpp"

namespace shapedyn {

/// Monotone cubic interpolation; needs at least four strictly increasing nodes.
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y) : f_(std::move(x), std::move(y)) {}
  double operator()(double t) const { return f_(t); }

 private:
  boost::math::interpolators::pchip<std::vector<double>> f_;
};

/// Internal time along an absolute run: tau = int (1/lambda) dt_e with the
/// ephemeris increment dt_e = sqrt(K / (E - V)) dt, trapezoidal rule.
inline std::vector<double> internal_time(const Trajectory& traj, const MassVector& m, double E,
                                         const PotentialSpec& pot = {}) {
  std::vector<double> rate(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& x = traj.states[k].config.x;
    rate[k] = detail::ephemeris_rate(m, traj.states[k], E, pot, traj.t[k], k) / (x[1] - x[0]).norm();
  }
  std::vector<double> tau(traj.size(), 0.0);
  for (std::size_t k = 1; k < traj.size(); ++k)
    tau[k] = tau[k - 1] + 0.5 * (rate[k] + rate[k - 1]) * (traj.t[k] - traj.t[k - 1]);
  return tau;
}

struct ComparisonResult {
  double max_s1 = 0.0;
  double max_s2 = 0.0;
  double mean_s1 = 0.0;
  double mean_s2 = 0.0;
  std::size_t samples = 0;
  Trajectory full;
  ShapeTrajectory reduced;
  std::vector<double> tau_full;

  double max_deviation() const { return std::max(max_s1, max_s2); }
};

struct CompareOptions {
  IntegratorConfig integrator;
  std::size_t samples = 2000;  // output samples of the full run
};

/// `m_reduced` normally equals `m`; a different value gives a negative control.
inline ComparisonResult compare_runs(const MassVector& m, const MassVector& m_reduced, const AbsoluteState& state0,
                                     double T, const CompareOptions& opt, const PotentialSpec& pot = {}) {
  if (!(T > 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be positive");
  ComparisonResult res;
  IntegratorConfig cfg = opt.integrator;
  cfg.output_interval = T / static_cast<double>(std::max<std::size_t>(opt.samples, 4));
  res.full = integrate(m, state0, T, cfg, pot);
  const double E = res.full.conserved.front().E;
  res.tau_full = internal_time(res.full, m, E, pot);

  const ShapeState3 st0 = shape_state_from_absolute(m, res.full.states.front());
  const double tau_end = res.tau_full.back();
  IntegratorConfig rcfg = opt.integrator;
  rcfg.output_interval = tau_end / static_cast<double>(std::max<std::size_t>(opt.samples, 4));
  ShapeState3 start = st0;
  start.L = Vec3::Zero();
  res.reduced = integrate_shape(m_reduced, start, tau_end * (1.0 + 1e-9), rcfg, pot);

  std::vector<double> s1, s2;
  for (const auto& s : res.reduced.states) {
    s1.push_back(s.s1);
    s2.push_back(s.s2);
  }
  const Pchip f1(res.reduced.tau, s1), f2(res.reduced.tau, s2);
  double sum1 = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < res.full.size(); ++k) {
    const auto sc = shape_coordinates(res.full.states[k].config.x);
    const double tau = std::min(res.tau_full[k], res.reduced.tau.back());
    const double d1 = std::abs(sc.s1 - f1(tau));
    const double d2 = std::abs(sc.s2 - f2(tau));
    res.max_s1 = std::max(res.max_s1, d1);
    res.max_s2 = std::max(res.max_s2, d2);
    sum1 += d1;
    sum2 += d2;
  }
  res.samples = res.full.size();
  res.mean_s1 = sum1 / static_cast<double>(res.samples);
  res.mean_s2 = sum2 / static_cast<double>(res.samples);
  return res;
}

}  // namespace shapedyn
