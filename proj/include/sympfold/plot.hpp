#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "sympfold/common.hpp"

namespace sympfold {

using Point2 = std::array<double, 2>;

/// Planar picture of one pipeline stage: a point cloud plus region outlines.
struct Snapshot {
  std::string name;
  std::vector<Point2> points;
  std::vector<std::vector<Point2>> outlines;

  nlohmann::json to_json() const;
};

std::vector<Point2> rect_outline(const Rect& r);
/// First-factor projection (q1, p1) of every point.
std::vector<Point2> first_factor(const std::vector<Vec>& points);

/// Deterministic SVG: outlines as closed paths, points as small dots, the
/// view fitted to everything drawn.
std::string render_svg(const Snapshot& snapshot, int pixels = 480);
void write_svg(const std::string& path, const Snapshot& snapshot, int pixels = 480);

}  // namespace sympfold
