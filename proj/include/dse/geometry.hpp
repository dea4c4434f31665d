// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace dse {

// Axis-aligned box in absolute pixel coordinates, corner convention.
// Ingest converts center/width-height and normalized inputs to this form.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_min >= 0.0 && y_min >= 0.0 &&
           x_max > x_min && y_max > y_min;
  }

  bool operator==(const BoundingBox&) const = default;
};

// Intersection over union in double precision. Valid boxes have strictly
// positive area, so the union never vanishes. No epsilon on the ratio;
// threshold comparisons downstream own their tolerances.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  return inter / (a.area() + b.area() - inter);
}

// Clips a box to [0,width]x[0,height]. Boxes that collapse to zero area
// (fully outside, or touching only at the border) are rejected.
inline std::optional<BoundingBox> clamp_box(const BoundingBox& box, double width,
                                            double height) {
  BoundingBox out{std::clamp(box.x_min, 0.0, width), std::clamp(box.y_min, 0.0, height),
                  std::clamp(box.x_max, 0.0, width), std::clamp(box.y_max, 0.0, height)};
  if (out.x_max <= out.x_min || out.y_max <= out.y_min) return std::nullopt;
  return out;
}

}  // namespace dse
