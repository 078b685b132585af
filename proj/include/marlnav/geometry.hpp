#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

namespace marlnav {

inline constexpr double kPi = std::numbers::pi;

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Point2& a, const Point2& b) {
  return a.x == b.x && a.y == b.y;
}

inline double distance(const Point2& a, const Point2& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

/// Axis-aligned rectangle, the only obstacle primitive.
struct Rect {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  bool valid() const { return x_min < x_max && y_min < y_max; }

  bool contains(const Point2& p) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }

  /// Euclidean distance from p to the rectangle (0 inside).
  double distance_to(const Point2& p) const {
    double dx = std::max({x_min - p.x, 0.0, p.x - x_max});
    double dy = std::max({y_min - p.y, 0.0, p.y - y_max});
    return std::hypot(dx, dy);
  }
};

inline bool operator==(const Rect& a, const Rect& b) {
  return a.x_min == b.x_min && a.y_min == b.y_min && a.x_max == b.x_max &&
         a.y_max == b.y_max;
}

/// Normalizes an angle into [-pi, pi).
inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * kPi;
  a = std::fmod(a + kPi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - kPi;
}

/// Planar pose. Yaw is counterclockwise-positive and kept in [-pi, pi).
struct Pose {
  Point2 position;
  double yaw = 0.0;
};

}  // namespace marlnav
