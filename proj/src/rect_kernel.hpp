#pragma once

// Closed-form potential of a unit-volt rectangle on a grounded plane and its
// first and second derivatives. Written against a generic scalar so the same
// expressions evaluated on Dual3 give exact third derivatives.
//
// For a corner at (x_i, z_j) with u = x_i - x, v = z_j - z, R = |(u, v, y)|
//   f = atan(u v / (y R))
// and the patch potential is (1/2 pi) sum (-1)^(i+j) f. Lengths in metres.

#include <array>
#include <cmath>

#include "surftrap/constants.hpp"

namespace surftrap::detail {

/// Forward-mode dual number with three infinitesimal directions.
struct Dual3 {
  double v = 0.0;
  std::array<double, 3> d{0.0, 0.0, 0.0};

  Dual3() = default;
  Dual3(double value) : v(value) {}  // NOLINT(google-explicit-constructor)
  Dual3(double value, int seed) : v(value) { d[seed] = 1.0; }
};

inline Dual3 operator+(const Dual3& a, const Dual3& b) {
  Dual3 r(a.v + b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] + b.d[k];
  return r;
}
inline Dual3 operator-(const Dual3& a, const Dual3& b) {
  Dual3 r(a.v - b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] - b.d[k];
  return r;
}
inline Dual3 operator-(const Dual3& a) {
  Dual3 r(-a.v);
  for (int k = 0; k < 3; ++k) r.d[k] = -a.d[k];
  return r;
}
inline Dual3 operator*(const Dual3& a, const Dual3& b) {
  Dual3 r(a.v * b.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * b.v + a.v * b.d[k];
  return r;
}
inline Dual3 operator/(const Dual3& a, const Dual3& b) {
  const double inv = 1.0 / b.v;
  Dual3 r(a.v * inv);
  for (int k = 0; k < 3; ++k) r.d[k] = (a.d[k] - r.v * b.d[k]) * inv;
  return r;
}
inline Dual3& operator+=(Dual3& a, const Dual3& b) { return a = a + b; }
inline Dual3& operator-=(Dual3& a, const Dual3& b) { return a = a - b; }
inline Dual3 sqrt(const Dual3& a) {
  Dual3 r(std::sqrt(a.v));
  const double s = 0.5 / r.v;
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * s;
  return r;
}
inline Dual3 atan(const Dual3& a) {
  Dual3 r(std::atan(a.v));
  const double s = 1.0 / (1.0 + a.v * a.v);
  for (int k = 0; k < 3; ++k) r.d[k] = a.d[k] * s;
  return r;
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual3& x) { return x.v; }

/// Rectangle in metres.
struct RectM {
  double x1, x2, z1, z2;
};

template <class T>
struct RectDerivs {
  T phi{};
  T gx{}, gy{}, gz{};
  T hxx{}, hyy{}, hzz{}, hxy{}, hxz{}, hyz{};
};

enum class Order { Gradient, Hessian };

/// Derivatives with respect to the observation point (x, y, z), y > 0.
template <class T>
RectDerivs<T> rect_derivs(const RectM& r, const T& x, const T& y, const T& z, bool with_phi, Order order) {
  using std::atan;
  using std::sqrt;
  RectDerivs<T> out;
  const T y2 = y * y;
  const double xs[2] = {r.x1, r.x2};
  const double zs[2] = {r.z1, r.z2};
  for (int i = 0; i < 2; ++i) {
    const T u = T(xs[i]) - x;
    const T u2 = u * u;
    const T uy = u2 + y2;
    for (int j = 0; j < 2; ++j) {
      const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
      const T v = T(zs[j]) - z;
      const T v2 = v * v;
      const T vy = v2 + y2;
      const T R2 = u2 + v2 + y2;
      const T R = sqrt(R2);
      const T s(sign);

      if (with_phi) out.phi += s * atan(u * v / (y * R));

      const T fu = v * y / (uy * R);
      const T fv = u * y / (vy * R);
      const T fy = -(u * v * (R2 + y2)) / (uy * vy * R);
      out.gx -= s * fu;
      out.gy += s * fy;
      out.gz -= s * fv;

      if (order == Order::Hessian) {
        const T R3 = R2 * R;
        const T uy2 = uy * uy;
        const T vy2 = vy * vy;
        const T fuu = -(u * v * y * (T(3.0) * u2 + T(2.0) * v2 + T(3.0) * y2)) / (uy2 * R3);
        const T fvv = -(u * v * y * (T(2.0) * u2 + T(3.0) * v2 + T(3.0) * y2)) / (vy2 * R3);
        const T fuv = y / R3;
        const T y4 = y2 * y2;
        const T fuy = v * (u2 * u2 + u2 * v2 - u2 * y2 - v2 * y2 - T(2.0) * y4) / (uy2 * R3);
        const T fvy = u * (u2 * v2 - u2 * y2 + v2 * v2 - v2 * y2 - T(2.0) * y4) / (vy2 * R3);
        const T u4 = u2 * u2;
        const T v4 = v2 * v2;
        const T poly = T(2.0) * u4 * u2 + T(3.0) * u4 * v2 + T(7.0) * u4 * y2 + T(3.0) * u2 * v4 +
                       T(12.0) * u2 * v2 * y2 + T(11.0) * u2 * y4 + T(2.0) * v4 * v2 + T(7.0) * v4 * y2 +
                       T(11.0) * v2 * y4 + T(6.0) * y4 * y2;
        const T fyy = u * v * y * poly / (uy2 * vy2 * R3);
        out.hxx += s * fuu;
        out.hzz += s * fvv;
        out.hyy += s * fyy;
        out.hxz += s * fuv;
        out.hxy -= s * fuy;
        out.hyz -= s * fvy;
      }
    }
  }
  const T k(1.0 / constants::kTwoPi);
  out.phi = out.phi * k;
  out.gx = out.gx * k;
  out.gy = out.gy * k;
  out.gz = out.gz * k;
  out.hxx = out.hxx * k;
  out.hyy = out.hyy * k;
  out.hzz = out.hzz * k;
  out.hxy = out.hxy * k;
  out.hxz = out.hxz * k;
  out.hyz = out.hyz * k;
  return out;
}

}  // namespace surftrap::detail
