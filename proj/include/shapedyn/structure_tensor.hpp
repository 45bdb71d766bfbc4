#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace shapedyn {

/// Coefficients gamma^l_{s k} of a frame, stored densely: n^3 entries,
/// upper index first. Antisymmetric in the two lower indices.
class StructureTensor {
 public:
  StructureTensor() = default;
  explicit StructureTensor(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

  std::size_t dim() const noexcept { return n_; }
  double& operator()(std::size_t upper, std::size_t lower1, std::size_t lower2) {
    return data_[(upper * n_ + lower1) * n_ + lower2];
  }
  double operator()(std::size_t upper, std::size_t lower1, std::size_t lower2) const {
    return data_[(upper * n_ + lower1) * n_ + lower2];
  }

  /// Largest |gamma^l_{sk} + gamma^l_{ks}|.
  double antisymmetry_defect() const {
    double worst = 0.0;
    for (std::size_t l = 0; l < n_; ++l)
      for (std::size_t s = 0; s < n_; ++s)
        for (std::size_t k = 0; k < n_; ++k) {
          const double d = (*this)(l, s, k) + (*this)(l, k, s);
          worst = std::max(worst, std::abs(d));
        }
    return worst;
  }

  double max_abs() const {
    double worst = 0.0;
    for (double v : data_) worst = std::max(worst, std::abs(v));
    return worst;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Levi-Civita symbol on {0,1,2}.
constexpr double levi_civita(std::size_t a, std::size_t b, std::size_t c) {
  if (a == b || b == c || a == c) return 0.0;
  if ((a == 0 && b == 1 && c == 2) || (a == 1 && b == 2 && c == 0) || (a == 2 && b == 0 && c == 1)) return 1.0;
  return -1.0;
}

}  // namespace shapedyn
