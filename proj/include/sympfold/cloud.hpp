#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sympfold/common.hpp"

namespace sympfold {

/// Finite seeded sample of a set. Each point remembers the chart and the
/// parameter it was evaluated at.
struct SampleCloud {
  int dim = 0;
  std::vector<Vec> points;
  std::vector<int> chart;
  std::vector<Vec> params;
  std::uint64_t seed = 0;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void add(Vec point, int chart_index, Vec param);
  /// Cloud holding the listed points (provenance kept).
  SampleCloud subset(const std::vector<std::size_t>& indices) const;
  /// Bounding box; requires a nonempty cloud.
  Box bounds() const;
  /// One row per point: x1..xl, chart, y1..ym.
  void write_csv(std::ostream& out) const;
};

/// Cloud without provenance, e.g. for raw point lists.
SampleCloud cloud_from_points(int dim, std::vector<Vec> points);

}  // namespace sympfold
