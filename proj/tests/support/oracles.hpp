#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// closed-form field code.

#include "surftrap/common.hpp"
#include "surftrap/geometry.hpp"
#include "surftrap/pseudo.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace surftrap::testing {

namespace detail {

// 7-point Gauss / 15-point Kronrod nodes on [-1, 1].
inline constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                  0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline void gk15(const std::function<double(double)>& f, double a, double b, double& kronrod, double& gauss) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  kronrod = kWgk[7] * fc;
  gauss = kWg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kronrod += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  kronrod *= h;
  gauss *= h;
}

inline double adaptive(const std::function<double(double)>& f, double a, double b, double tol, int depth) {
  double k = 0.0, g = 0.0;
  gk15(f, a, b, k, g);
  if (std::abs(k - g) <= tol || depth == 0) return k;
  const double m = 0.5 * (a + b);
  return adaptive(f, a, m, 0.5 * tol, depth - 1) + adaptive(f, m, b, 0.5 * tol, depth - 1);
}

}  // namespace detail

/// Recursive-bisection Gauss-Kronrod quadrature with an absolute tolerance.
inline double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  return detail::adaptive(f, a, b, tol, 40);
}

/// Potential of a unit-volt patch from the half-space Dirichlet kernel
/// (1 / 2 pi) y / rho^3, integrated numerically over the patch. Micrometres.
inline double quadrature_potential(const RectPatch& p, const Vec3& q, double tol = 1e-13) {
  const double y = q.y();
  auto inner = [&](double x) {
    const double dx2 = (x - q.x()) * (x - q.x()) + y * y;
    auto kernel = [&](double z) {
      const double r2 = dx2 + (z - q.z()) * (z - q.z());
      return y / (r2 * std::sqrt(r2));
    };
    return integrate(kernel, p.z_min, p.z_max, tol * 1e-2 / std::max(1.0, p.x_max - p.x_min));
  };
  return integrate(inner, p.x_min, p.x_max, tol) / (2.0 * std::numbers::pi);
}

/// Central-difference gradient of a scalar function of a point, step h.
inline Vec3 fd_gradient(const std::function<double(const Vec3&)>& f, const Vec3& p, double h) {
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e(i) = h;
    // Fourth-order stencil keeps truncation error well below 1e-6 relative.
    g(i) = (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function, step h.
inline Mat3 fd_jacobian(const std::function<Vec3(const Vec3&)>& f, const Vec3& p, double h) {
  Mat3 J;
  for (int i = 0; i < 3; ++i) {
    Vec3 e = Vec3::Zero();
    e(i) = h;
    J.col(i) = (-f(p + 2 * e) + 8 * f(p + e) - 8 * f(p - e) + f(p - 2 * e)) / (12 * h);
  }
  return J;
}

/// U = 1/2 (x - c)^T K (x - c) + offset, metres and joules.
class QuadraticPotential final : public Potential {
 public:
  QuadraticPotential(Mat3 stiffness, Vec3 center_m = Vec3::Zero(), double offset = 0.0)
      : k_(std::move(stiffness)), c_(std::move(center_m)), offset_(offset) {}
  double energy(const Vec3& p) const override { return 0.5 * (p - c_).dot(k_ * (p - c_)) + offset_; }
  Vec3 gradient(const Vec3& p) const override { return k_ * (p - c_); }
  Mat3 hessian(const Vec3&) const override { return k_; }

 private:
  Mat3 k_;
  Vec3 c_;
  double offset_;
};

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

}  // namespace surftrap::testing
