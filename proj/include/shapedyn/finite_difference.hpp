#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>

namespace shapedyn::fd {

namespace detail {
template <class T>
auto materialize(T&& v) {
  if constexpr (std::is_arithmetic_v<std::decay_t<T>>) {
    return v;
  } else {
    return v.eval();
  }
}
}  // namespace detail

/// Central difference of a one-parameter family `f(eps)` at eps = 0.
/// `f` may return a scalar or an Eigen object.
template <class F>
auto central(F&& f, double h) {
  auto plus = detail::materialize(f(h));
  auto minus = detail::materialize(f(-h));
  return detail::materialize((plus - minus) / (2.0 * h));
}

/// Central difference with one Richardson step, (4 D(h/2) - D(h)) / 3.
/// Truncation error is O(h^4) for smooth f.
template <class F>
auto richardson(F&& f, double h) {
  auto coarse = central(f, h);
  auto fine = central(f, 0.5 * h);
  return detail::materialize((4.0 * fine - coarse) / 3.0);
}

/// Step scaled to the magnitude of the argument: rel * max(|x|, 1).
inline double relative_step(double x, double rel) { return rel * std::max(std::abs(x), 1.0); }

}  // namespace shapedyn::fd
