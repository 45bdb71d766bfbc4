#pragma once

// Seeded property suites behind `shapedyn check`.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shapedyn/boltzmann_hamel.hpp"
#include "shapedyn/dynamics_absolute.hpp"
#include "shapedyn/fiber_bundle.hpp"
#include "shapedyn/geometry.hpp"
#include "shapedyn/potential.hpp"
#include "shapedyn/shape_reduced.hpp"

namespace shapedyn {

struct CheckResult {
  std::string name;
  std::size_t samples = 0;
  double value = 0.0;          // the measured quantity (largest value for maxima)
  double max_violation = 0.0;  // distance from the property, 0 when it holds exactly
  double tolerance = 0.0;
  bool pass = false;
};

struct CheckReport {
  std::string suite;
  std::vector<CheckResult> results;

  bool pass() const {
    for (const auto& r : results)
      if (!r.pass) return false;
    return !results.empty();
  }
};

inline const std::vector<std::string>& check_suites() {
  static const std::vector<std::string> names{"flatness", "homogeneity", "pullback", "gamma", "similarity",
                                              "conservation"};
  return names;
}

namespace sample {

using Rng = std::mt19937_64;

inline double uniform(Rng& g, double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); }

inline Vec3 vec(Rng& g, double scale = 1.0) {
  return Vec3(uniform(g, -scale, scale), uniform(g, -scale, scale), uniform(g, -scale, scale));
}

inline MassVector masses(Rng& g, std::size_t n, double lo = 0.5, double hi = 3.0) {
  std::vector<double> m(n);
  for (auto& v : m) v = uniform(g, lo, hi);
  return MassVector(std::move(m));
}

inline Rotation rotation(Rng& g) {
  const Vec3 axis = vec(g).normalized();
  return Rotation::about_axis(axis, uniform(g, 0.0, M_PI));
}

/// Configuration whose pairwise distances exceed 0.2 and which is far from collinear.
inline Points configuration(Rng& g, std::size_t n) {
  for (;;) {
    Points x(n);
    for (auto& v : x) v = vec(g);
    const MassVector unit(std::vector<double>(n, 1.0));
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      for (std::size_t j = i + 1; j < n && ok; ++j) ok = (x[i] - x[j]).norm() > 0.2;
    if (ok && n < 3) return x;  // two bodies are always collinear
    if (ok && is_invertible(inertia_tensor(jacobi_vectors(unit, x)))) {
      const Mat3 a = inertia_tensor(jacobi_vectors(unit, x));
      Eigen::SelfAdjointEigenSolver<Mat3> es(a);
      if (es.eigenvalues().minCoeff() > 1e-2 * a.trace()) return x;
    }
  }
}

/// Shape point of the three-body chart at least `margin` inside the domain.
inline Vec2 shape(Rng& g, double lo = 0.3, double hi = 1.2, double margin = 0.02) {
  for (;;) {
    const double s1 = uniform(g, lo, hi), s2 = uniform(g, lo, hi);
    const double sn = std::sin(s1 + s2);
    if (s1 + s2 < M_PI - margin && std::sin(s1) < sn - margin && std::sin(s2) < sn - margin) return {s1, s2};
  }
}

}  // namespace sample

namespace detail {
inline CheckResult max_result(std::string name, std::size_t n, double worst, double tol) {
  return {std::move(name), n, worst, worst, tol, worst <= tol};
}
}  // namespace detail

inline CheckReport check_flatness(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"flatness", {}};
  const std::size_t n = 50;
  double worst = 0.0, krot = 0.0, kdiff = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const MassVector m = sample::masses(g, 3);
    const ShapeChart chart = three_body_chart(m);
    const Vec2 s = sample::shape(g);
    const Vec2 w1(sample::uniform(g, -1, 1), sample::uniform(g, -1, 1));
    const Vec2 w2(sample::uniform(g, -1, 1), sample::uniform(g, -1, 1));
    worst = std::max(worst, std::abs(curvature_scale(chart, s, w1, w2)));
    const Vec3 kr = curvature_rot(chart, s, 0, 1);
    krot = std::max(krot, kr.norm());
    kdiff = std::max(kdiff, (kr - 2.0 * curvature_rot_bracket(chart, s, 0, 1)).norm() / std::max(1.0, kr.norm()));
  }
  rep.results.push_back(detail::max_result("scale_curvature_max_abs", n, worst, 1e-6));
  rep.results.push_back({"rotation_curvature_max_norm", n, krot, std::max(0.0, 1e-3 - krot), 1e-3, krot > 1e-3});
  rep.results.push_back(detail::max_result("rotation_curvature_vs_bracket", n, kdiff, 1e-5));
  return rep;
}

inline CheckReport check_homogeneity(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"homogeneity", {}};
  const std::vector<double> bs{0.25, 0.5, 0.9, 1.0, 1.6, 3.0, 8.0};
  struct Item {
    const char* name;
    double expected;
  };
  const Item items[] = {{"f", -1.0}, {"G", 1.0}, {"V", 0.0}, {"cf1", -2.0}, {"cf2", -2.0}};
  const std::size_t n = 20;
  for (const auto& it : items) {
    sample::Rng gi(seed);
    double worst = 0.0, last = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t np = 2 + k % 5;
      const MassVector m = sample::masses(gi, np);
      const Points x = sample::configuration(gi, np);
      const std::string nm = it.name;
      auto fn = [&](std::span<const Vec3> y) -> double {
        if (nm == "f") return pair_sum_f(m, y);
        if (nm == "G") return g_factor(m, y);
        if (nm == "V") return mnt_potential(m, y);
        if (nm == "cf1") return conformal_factor_pairs(y);
        return conformal_factor_inertia(m, y);
      };
      const auto fit = homogeneity_degree(fn, x, bs);
      last = fit.degree;
      worst = std::max(worst, std::abs(fit.degree - it.expected));
    }
    rep.results.push_back({std::string("degree_") + it.name, n, last, worst, 1e-8, worst <= 1e-8});
  }
  (void)g;
  return rep;
}

/// Pullback of the mass metric in (s1, s2, lambda) against the closed forms
/// and against the printed coefficients.
inline CheckReport check_pullback(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"pullback", {}};
  const std::size_t n = 50;
  double closed = 0.0, horizontal = 0.0, printed_rel = 0.0, cross = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const MassVector m = sample::masses(g, 3);
    const Vec2 s = sample::shape(g, 0.4, 1.1, 0.05);
    const double lam = sample::uniform(g, 0.5, 3.0);
    const EulerAngles e{sample::uniform(g, -3, 3), sample::uniform(g, 0.2, 2.9), sample::uniform(g, -3, 3)};
    const Mat3 pb = pullback_metric_3body(m, s[0], s[1], lam, e);

    const ShapeChart chart = three_body_chart(m);
    const Points sec = chart.section(s);
    const Mat3 a = inertia_tensor(sec);
    Eigen::Matrix<double, 3, 2> beta;
    for (Eigen::Index i = 0; i < 2; ++i) beta.col(i) = connection_coefficient(chart, s, i);
    const Vec2 c = scale_connection_3body(m, s[0], s[1]);
    const double i1 = scale_inertia_3body(m, s[0], s[1]);
    const Mat2 nh = shape_metric_3body(m, s[0], s[1]);
    Mat3 model;
    model.topLeftCorner<2, 2>() = lam * lam * (nh + i1 * c * c.transpose() + beta.transpose() * a * beta);
    model.topRightCorner<2, 1>() = lam * i1 * c;
    model.bottomLeftCorner<1, 2>() = lam * i1 * c.transpose();
    model(2, 2) = i1;
    closed = std::max(closed, (model - pb).cwiseAbs().maxCoeff() / pb.cwiseAbs().maxCoeff());

    Mat2 gram;
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        const auto hi = horizontal_lift_shape(chart, s, VecX::Unit(2, i));
        const auto hj = horizontal_lift_shape(chart, s, VecX::Unit(2, j));
        double d = 0.0;
        for (std::size_t q = 0; q < hi.size(); ++q) d += hi[q].dot(hj[q]);
        gram(i, j) = d;
      }
    horizontal = std::max(horizontal, (gram - nh).cwiseAbs().maxCoeff() / nh.cwiseAbs().maxCoeff());

    const auto pc = metric_coeffs_3body(m, s[0], s[1], lam);
    printed_rel = std::max({printed_rel, std::abs(pc.ds1 - pb(0, 0)) / pb(0, 0), std::abs(pc.ds2 - pb(1, 1)) / pb(1, 1),
                            std::abs(pc.dlambda - pb(2, 2)) / pb(2, 2)});
    cross = std::max({cross, std::abs(pb(0, 1)), std::abs(pb(0, 2)), std::abs(pb(1, 2))});
  }
  rep.results.push_back(detail::max_result("closed_form_vs_pullback_rel", n, closed, 1e-6));
  rep.results.push_back(detail::max_result("shape_metric_vs_horizontal_gram_rel", n, horizontal, 1e-10));
  rep.results.push_back(detail::max_result("printed_coefficients_vs_pullback_rel", n, printed_rel, 1e-6));
  rep.results.push_back(detail::max_result("pullback_cross_terms_abs", n, cross, 1e-8));
  return rep;
}

inline CheckReport check_gamma(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"gamma", {}};
  const std::size_t n = 20;
  double ident = 0.0, space = 0.0, body = 0.0, polar = 0.0, antisym = 0.0, three = 0.0;
  const QuasiFrame fs = so3_space_frame(), fb = so3_body_frame();
  // q = (x, y); coframe (dr, dtheta) of polar coordinates
  const QuasiFrame fp{2, [](const VecX& q) {
                        const double r = q.norm();
                        MatX e(2, 2);
                        e << q[0] / r, -q[1], q[1] / r, q[0];
                        return e;
                      }};
  for (std::size_t k = 0; k < n; ++k) {
    const VecX q3 = Vec3(sample::uniform(g, -3, 3), sample::uniform(g, 0.3, 2.8), sample::uniform(g, -3, 3));
    ident = std::max(ident, gamma_numeric(identity_frame(3), q3).max_abs());
    const auto gs = gamma_numeric(fs, q3);
    const auto gb = gamma_numeric(fb, q3);
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b)
        for (std::size_t c = 0; c < 3; ++c) {
          space = std::max(space, std::abs(gs(a, b, c) + levi_civita(b, c, a)));
          body = std::max(body, std::abs(gb(a, b, c) - levi_civita(b, c, a)));
        }
    antisym = std::max({antisym, gs.antisymmetry_defect(), gb.antisymmetry_defect()});
    const VecX qp = Vec2(sample::uniform(g, 0.5, 2), sample::uniform(g, 0.5, 2));
    polar = std::max(polar, gamma_numeric(fp, qp).max_abs());

    if (k < 5) {
      const MassVector m = sample::masses(g, 3);
      const ThreeBodyFrame tb = three_body_frame(m);
      const Vec2 s = sample::shape(g, 0.4, 1.1, 0.05);
      VecX q(6);
      q << q3[0], q3[1], q3[2], sample::uniform(g, 0.5, 2.0), s[0], s[1];
      const auto gn = gamma_numeric(tb.frame(), q);
      const auto expect = structure_coefficients(tb.chart, s);
      const Mat3 rot = euler_to_rotation({q[0], q[1], q[2]}).matrix();
      double err = 0.0;
      for (std::size_t l = 0; l < 6; ++l)
        for (std::size_t a = 0; a < 6; ++a)
          for (std::size_t b = 0; b < 6; ++b) {
            double want = expect(l, a, b);
            if (l < 3 && a >= 4 && b >= 4) {  // curvature block in space components
              Vec3 kb;
              for (std::size_t c = 0; c < 3; ++c) kb[static_cast<Eigen::Index>(c)] = expect(c, a, b);
              want = (rot * kb)[static_cast<Eigen::Index>(l)];
            }
            err = std::max(err, std::abs(gn(l, a, b) - want));
          }
      three = std::max(three, err);
      antisym = std::max(antisym, gn.antisymmetry_defect());
    }
  }
  rep.results.push_back(detail::max_result("identity_frame_max_abs", n, ident, 1e-12));
  rep.results.push_back(detail::max_result("so3_space_frame_vs_minus_epsilon", n, space, 1e-6));
  rep.results.push_back(detail::max_result("so3_body_frame_vs_epsilon", n, body, 1e-6));
  rep.results.push_back(detail::max_result("polar_frame_max_abs", n, polar, 1e-6));
  rep.results.push_back(detail::max_result("three_body_frame_vs_structure_coefficients", 5, three, 1e-5));
  rep.results.push_back(detail::max_result("antisymmetry_defect", n, antisym, 0.0));
  return rep;
}

inline CheckReport check_similarity(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"similarity", {}};
  const std::size_t n = 100;
  double pot = 0.0, mmm = 0.0, crot = 0.0, cscale = 0.0, shape = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t np = 3 + k % 4;
    const MassVector m = sample::masses(g, np);
    const AbsoluteConfiguration c{sample::configuration(g, np)};
    const double b = std::exp(sample::uniform(g, -2, 2));
    const Rotation rot = sample::rotation(g);
    const Vec3 t = sample::vec(g, 5.0);
    const AbsoluteConfiguration c2 = similarity_transform(c, b, rot, t);
    const double v = mnt_potential(m, c.x);
    pot = std::max(pot, std::abs(mnt_potential(m, c2.x) - v) / std::abs(v));

    Tangent u(np), w(np);
    for (std::size_t i = 0; i < np; ++i) {
      u[i] = sample::vec(g);
      w[i] = sample::vec(g);
    }
    const Tangent u2 = scale_all(b, rotate_all(rot, u)), w2 = scale_all(b, rotate_all(rot, w));
    const double mm = measured_mass_metric(m, c, u, w, {0, 1});
    mmm = std::max(mmm, std::abs(measured_mass_metric(m, c2, u2, w2, {0, 1}) - mm) / std::max(std::abs(mm), 1e-300));

    const Points r = jacobi_vectors(m, c.x), r2 = jacobi_vectors(m, c2.x);
    const Points rd = jacobi_vectors(m, u), rd2 = jacobi_vectors(m, u2);
    const Vec3 w0 = connection_rot(r, rd);
    crot = std::max(crot, (connection_rot(r2, rd2) - rot * w0).norm() / std::max(w0.norm(), 1e-300));
    const double s0 = connection_scale(r, rd);
    cscale = std::max(cscale, std::abs(connection_scale(r2, rd2) - s0) / std::max(std::abs(s0), 1e-300));

    if (np == 3) {
      const auto a = shape_coordinates(c.x), a2 = shape_coordinates(c2.x);
      shape = std::max({shape, std::abs(a.s1 - a2.s1), std::abs(a.s2 - a2.s2), std::abs(a2.lambda / a.lambda - b) / b});
    }
  }
  rep.results.push_back(detail::max_result("potential_invariance_rel", n, pot, 1e-10));
  rep.results.push_back(detail::max_result("measured_mass_metric_invariance_rel", n, mmm, 1e-10));
  rep.results.push_back(detail::max_result("connection_rot_equivariance_rel", n, crot, 1e-10));
  rep.results.push_back(detail::max_result("connection_scale_invariance_rel", n, cscale, 1e-10));
  rep.results.push_back(detail::max_result("shape_coordinates_invariance", n / 4, shape, 1e-12));
  return rep;
}

/// Random three-body state with centre of mass at rest, J = 0 and D = 0.
inline AbsoluteState random_reduced_state(sample::Rng& g, const MassVector& m, double speed = 0.3) {
  ShapeState3 st;
  const Vec2 s(sample::uniform(g, 0.45, 0.8), sample::uniform(g, 0.45, 0.8));
  st.s1 = s[0];
  st.s2 = s[1];
  st.lambda = sample::uniform(g, 0.7, 1.5);
  st.s1dot = speed * sample::uniform(g, -1, 1);
  st.s2dot = speed * sample::uniform(g, -1, 1);
  // D = 0 means sigma' = 0, i.e. lamdot = -c . s'
  st.lamdot = -scale_connection_3body(m, s[0], s[1]).dot(Vec2(st.s1dot, st.s2dot));
  st.euler = {sample::uniform(g, -3, 3), sample::uniform(g, 0.3, 2.8), sample::uniform(g, -3, 3)};
  return absolute_from_shape_state(m, st);
}

/// Conservation monitors over a long adaptive run.
inline CheckReport check_conservation(std::uint64_t seed) {
  sample::Rng g(seed);
  CheckReport rep{"conservation", {}};
  const MassVector m = sample::masses(g, 3, 0.8, 1.5);
  const AbsoluteState s0 = random_reduced_state(g, m);
  IntegratorConfig cfg;
  const double T = 10.0 * characteristic_time(m, s0.config.x);
  const Trajectory tr = integrate(m, s0, T, cfg);
  const auto& q0 = tr.conserved.front();
  double e = 0.0, p = 0.0, j = 0.0, d = 0.0, law = 0.0;
  const double length = std::sqrt(i_cm(m, s0.config.x));
  const double speed = std::sqrt(2.0 * kinetic_energy(m, s0) / m.total());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto& q = tr.conserved[k];
    e = std::max(e, std::abs(q.E - q0.E) / std::abs(q0.E));
    p = std::max(p, (q.P - q0.P).norm() / (m.total() * speed));
    j = std::max(j, (q.J - q0.J).norm() / (m.total() * speed * length));
    d = std::max(d, std::abs(q.D - q0.D) / (m.total() * speed * length));
    // dD/dt = sum m (|v|^2 + x.a), which is 2K for a degree-0 potential
    const AbsoluteState& st = tr.states[k];
    const Points a = eom_rhs(m, st);
    const Vec3 c = center_of_mass(m, st.config.x);
    double rate = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) rate += m[i] * (st.vel[i].squaredNorm() + (st.config[i] - c).dot(a[i]));
    const double kin = kinetic_energy(m, st);
    law = std::max(law, std::abs(rate - 2.0 * kin) / (2.0 * kin));
  }
  rep.results.push_back(detail::max_result("energy_drift_rel", tr.steps, e, 1e-8));
  rep.results.push_back(detail::max_result("momentum_drift_scaled", tr.steps, p, 1e-8));
  rep.results.push_back(detail::max_result("angular_momentum_drift_scaled", tr.steps, j, 1e-8));
  rep.results.push_back(detail::max_result("dilational_momentum_drift_scaled", tr.steps, d, 1e-8));
  rep.results.push_back(detail::max_result("dilational_momentum_rate_equals_2K_rel", tr.steps, law, 1e-10));
  return rep;
}

inline CheckReport run_check(const std::string& suite, std::uint64_t seed) {
  if (suite == "flatness") return check_flatness(seed);
  if (suite == "homogeneity") return check_homogeneity(seed);
  if (suite == "pullback") return check_pullback(seed);
  if (suite == "gamma") return check_gamma(seed);
  if (suite == "similarity") return check_similarity(seed);
  if (suite == "conservation") return check_conservation(seed);
  throw Error(ErrorKind::InvalidArgument, "unknown suite '" + suite + "'");
}

}  // namespace shapedyn
