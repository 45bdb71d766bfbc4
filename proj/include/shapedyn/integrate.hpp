#pragma once

// Thin wrappers over Boost.Odeint: classical RK4 with a fixed step and
// Dormand-Prince 5(4) with error control and dense output.

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "shapedyn/error.hpp"

namespace shapedyn {

enum class Method { Rk4, Rk45 };

struct IntegratorConfig {
  Method method = Method::Rk45;
  double step = 1e-3;  // rk4 step, or initial step for rk45
  double rtol = 1e-10;
  double atol = 1e-10;
  std::size_t max_steps = 10'000'000;
  double max_step = 0.0;  // rk45 step cap, 0 for none
  /// Spacing of recorded samples. 0 records every accepted step.
  double output_interval = 0.0;
};

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState&, OdeState&, double)>;
/// Called on every accepted state; throws to abort the run.
using OdeGuard = std::function<void(const OdeState&, double)>;

struct OdeSolution {
  std::vector<double> t;
  std::vector<OdeState> y;
  std::size_t steps = 0;
};

namespace detail {
inline void require_finite(const OdeState& y, double t) {
  for (double v : y)
    if (!std::isfinite(v)) throw Error(ErrorKind::StepUnderflow, "state became non-finite", t);
}
}  // namespace detail

inline OdeSolution solve_ode(const OdeRhs& rhs, OdeState y0, double t_end, const IntegratorConfig& cfg,
                             const OdeGuard& guard = {}) {
  namespace ode = boost::numeric::odeint;
  if (!(cfg.step > 0.0) || !(cfg.rtol > 0.0) || !(cfg.atol > 0.0))
    throw Error(ErrorKind::InvalidArgument, "step and tolerances must be positive");
  if (!(t_end >= 0.0)) throw Error(ErrorKind::InvalidArgument, "duration must be nonnegative");

  OdeSolution sol;
  auto check = [&](const OdeState& y, double t) {
    detail::require_finite(y, t);
    if (guard) guard(y, t);
  };
  auto record = [&](const OdeState& y, double t) {
    sol.t.push_back(t);
    sol.y.push_back(y);
  };
  check(y0, 0.0);
  record(y0, 0.0);
  if (t_end == 0.0) return sol;

  auto sys = [&rhs](const OdeState& y, OdeState& dy, double t) { rhs(y, dy, t); };
  const double interval = cfg.output_interval;
  double next_out = interval;

  if (cfg.method == Method::Rk4) {
    ode::runge_kutta4<OdeState> stepper;
    const auto n = static_cast<std::size_t>(std::ceil(t_end / cfg.step - 1e-9));
    if (n > cfg.max_steps) throw Error(ErrorKind::InvalidArgument, "rk4 step count exceeds max_steps");
    const double h = t_end / static_cast<double>(n);
    OdeState y = std::move(y0);
    for (std::size_t k = 0; k < n; ++k) {
      const double t0 = h * static_cast<double>(k);
      stepper.do_step(sys, y, t0, h);
      const double t1 = (k + 1 == n) ? t_end : h * static_cast<double>(k + 1);
      check(y, t1);
      ++sol.steps;
      if (interval <= 0.0 || k + 1 == n || t1 >= next_out - 1e-12 * interval) {
        record(y, t1);
        while (interval > 0.0 && next_out <= t1 + 1e-12 * interval) next_out += interval;
      }
    }
    return sol;
  }

  const double cap = cfg.max_step > 0.0 ? cfg.max_step : 0.0;
  auto stepper = ode::make_dense_output(cfg.atol, cfg.rtol, cap, ode::runge_kutta_dopri5<OdeState>());
  stepper.initialize(y0, 0.0, cap > 0.0 ? std::min({cfg.step, t_end, cap}) : std::min(cfg.step, t_end));
  OdeState buf(y0.size());
  const double t_stop = t_end - 1e-13 * std::max(1.0, t_end);
  while (stepper.current_time() < t_stop) {
    if (sol.steps >= cfg.max_steps) throw Error(ErrorKind::StepUnderflow, "max_steps exceeded", stepper.current_time());
    const double remaining = t_end - stepper.current_time();
    if (stepper.current_time_step() > remaining) stepper.initialize(stepper.current_state(), stepper.current_time(), remaining);
    try {
      stepper.do_step(sys);
    } catch (const ode::step_adjustment_error&) {
      throw Error(ErrorKind::StepUnderflow, "step size control failed", stepper.current_time());
    }
    ++sol.steps;
    const double t = stepper.current_time();
    const double dt = t - stepper.previous_time();
    if (!(dt > 1e-15 * std::max(1.0, std::abs(t))))
      throw Error(ErrorKind::StepUnderflow, "step size underflow", t);
    check(stepper.current_state(), t);
    if (interval <= 0.0) {
      record(stepper.current_state(), std::min(t, t_end));
      continue;
    }
    while (next_out < t && next_out < t_end - 1e-12 * interval) {
      stepper.calc_state(next_out, buf);
      record(buf, next_out);
      next_out += interval;
    }
    if (t >= t_stop) record(stepper.current_state(), t_end);
  }
  return sol;
}

}  // namespace shapedyn
