#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include <fmt/core.h>

#include "legendforge/error.hpp"

namespace legendforge {

/// Axis-aligned rectangle in pixel coordinates, corners (x1,y1)-(x2,y2).
/// Construction is the single validation choke point: a BBox that exists
/// has strictly positive area and finite, non-negative coordinates.
class BBox {
public:
  BBox(double x1, double y1, double x2, double y2) : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {
    if (!valid_coords(x1, y1, x2, y2))
      throw Error(Errc::ValidationError,
                  fmt::format("invalid bbox [{}, {}, {}, {}]", x1, y1, x2, y2));
  }

  static std::optional<BBox> try_make(double x1, double y1, double x2, double y2) noexcept {
    if (!valid_coords(x1, y1, x2, y2)) return std::nullopt;
    return BBox(unchecked{}, x1, y1, x2, y2);
  }

  static std::optional<BBox> try_make(const std::array<double, 4>& a) noexcept {
    return try_make(a[0], a[1], a[2], a[3]);
  }

  double x1() const { return x1_; }
  double y1() const { return y1_; }
  double x2() const { return x2_; }
  double y2() const { return y2_; }

  double width() const { return x2_ - x1_; }
  double height() const { return y2_ - y1_; }
  double area() const { return width() * height(); }

  std::array<double, 4> coords() const { return {x1_, y1_, x2_, y2_}; }

  bool operator==(const BBox& o) const = default;

private:
  struct unchecked {};
  BBox(unchecked, double x1, double y1, double x2, double y2)
      : x1_(x1), y1_(y1), x2_(x2), y2_(y2) {}

  static bool valid_coords(double x1, double y1, double x2, double y2) noexcept {
    return std::isfinite(x1) && std::isfinite(y1) && std::isfinite(x2) && std::isfinite(y2) &&
           x1 >= 0.0 && y1 >= 0.0 && x1 < x2 && y1 < y2;
  }

  double x1_, y1_, x2_, y2_;
};

/// A pixel window inside a parent coordinate system. Boxes "in" a frame carry
/// coordinates local to that frame's parent; the window spans
/// [origin_x, origin_x+width] x [origin_y, origin_y+height] there. A frame at
/// origin (0,0) doubles as the local coordinate system of its own raster.
struct Frame {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double width = 0.0;
  double height = 0.0;

  Frame() = default;
  Frame(double ox, double oy, double w, double h) : origin_x(ox), origin_y(oy), width(w), height(h) {
    if (!(std::isfinite(ox) && std::isfinite(oy) && ox >= 0.0 && oy >= 0.0 && w > 0.0 && h > 0.0))
      throw Error(Errc::ValidationError, fmt::format("invalid frame ({}, {}, {}x{})", ox, oy, w, h));
  }

  /// The same window expressed in its own local coordinates.
  Frame local() const { return Frame(0.0, 0.0, width, height); }

  bool operator==(const Frame& o) const = default;
};

inline double area(const BBox& b) { return b.area(); }

inline double intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
  const double h = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

/// Intersection over union; 0 when disjoint, 1 iff identical.
inline double iou(const BBox& a, const BBox& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return inter / uni;
}

/// True when b lies within the frame's window, allowing `tol` pixels of
/// protrusion on every side. Box coordinates and the window live in the same
/// (parent) system.
inline bool contains(const Frame& f, const BBox& b, double tol = 0.0) {
  return b.x1() >= f.origin_x - tol && b.y1() >= f.origin_y - tol &&
         b.x2() <= f.origin_x + f.width + tol && b.y2() <= f.origin_y + f.height + tol;
}

// Annotation jitter at crop borders; boxes may poke this far past a frame
// edge before translate refuses them.
inline constexpr double kFrameSlopPx = 1.0;

/// Re-express a frame-local box in another frame's local coordinates.
/// Pure offset arithmetic; throws OutOfFrame when the result does not land
/// inside the target window (within kFrameSlopPx).
inline BBox translate(const BBox& b, const Frame& from, const Frame& to) {
  const double dx = from.origin_x - to.origin_x;
  const double dy = from.origin_y - to.origin_y;
  double x1 = b.x1() + dx, y1 = b.y1() + dy;
  double x2 = b.x2() + dx, y2 = b.y2() + dy;
  if (x1 < -kFrameSlopPx || y1 < -kFrameSlopPx || x2 > to.width + kFrameSlopPx ||
      y2 > to.height + kFrameSlopPx || x2 <= 0.0 || y2 <= 0.0)
    throw Error(Errc::OutOfFrame,
                fmt::format("box [{}, {}, {}, {}] outside target frame {}x{}", x1, y1, x2, y2,
                            to.width, to.height));
  // Within-slop protrusion past the origin would break the coords >= 0
  // invariant; snap those edges to the frame boundary.
  x1 = std::max(x1, 0.0);
  y1 = std::max(y1, 0.0);
  return BBox(x1, y1, x2, y2);
}

/// Shortest gap between two boxes; 0 when they touch or overlap.
inline double box_gap(const BBox& a, const BBox& b) {
  const double dx = std::max({a.x1() - b.x2(), b.x1() - a.x2(), 0.0});
  const double dy = std::max({a.y1() - b.y2(), b.y1() - a.y2(), 0.0});
  return std::hypot(dx, dy);
}

}  // namespace legendforge
