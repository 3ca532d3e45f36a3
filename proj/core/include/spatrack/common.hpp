#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace spatrack {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Axis-aligned rectangle in Cartesian coordinates (meters).
struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double area_km2() const { return area() * 1e-6; }
  bool contains(const Vec2& p) const {
    return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max;
  }
};

}  // namespace spatrack
