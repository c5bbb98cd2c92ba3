#pragma once

#include <array>
#include <string>

namespace xvg {

/// Normalized center-size box (c_x, c_y, w, h), all fractions of the image side.
struct Box {
  double cx = 0.5;
  double cy = 0.5;
  double w = 0.0;
  double h = 0.0;

  double x1() const { return cx - w / 2; }
  double x2() const { return cx + w / 2; }
  double y1() const { return cy - h / 2; }
  double y2() const { return cy + h / 2; }
  double area() const { return w * h; }
  std::array<double, 4> as_array() const { return {cx, cy, w, h}; }

  static Box from_corners(double x1, double y1, double x2, double y2) {
    return {(x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1};
  }

  friend bool operator==(const Box&, const Box&) = default;
};

/// Ground-truth region: a box plus the short phrase naming the object.
struct GroundTruthRegion {
  Box box;
  std::string label_text;
  int object_id = -1;

  friend bool operator==(const GroundTruthRegion&, const GroundTruthRegion&) = default;
};

/// Corners within [0,1] (1e-6 slack) and strictly positive size.
bool is_valid_region_box(const Box& b, double tol = 1e-6);

/// Clips a box to the unit square.
Box clamp_to_unit(const Box& b);

}  // namespace xvg
