#include "sympfold/spatial_grid.hpp"

#include <algorithm>
#include <cmath>

namespace sympfold {

namespace {

double spread_cell(const std::vector<Vec>& points) {
  if (points.size() < 2) return 1.0;
  Vec lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diam = (hi - lo).norm();
  if (!(diam > 0)) return 1.0;
  // Tuned for sets of dimension one or two, which is what the pipeline samples.
  return diam / std::sqrt(static_cast<double>(points.size()));
}

// Calls f on every integer offset with Chebyshev norm exactly k.
template <class F>
void for_each_ring_offset(int dim, int k, std::vector<std::int64_t>& offset, F&& f) {
  std::fill(offset.begin(), offset.end(), -k);
  while (true) {
    bool on_ring = k == 0;
    for (auto v : offset) on_ring = on_ring || v == -k || v == k;
    if (on_ring) f(offset);
    int axis = 0;
    while (axis < dim && offset[axis] == k) offset[axis++] = -k;
    if (axis == dim) return;
    ++offset[axis];
  }
}

}  // namespace

SpatialGrid::SpatialGrid(int dim, double cell) : dim_(dim), cell_(cell) {
  if (dim < 1) throw Error(ErrorCode::BadDimension, "grid dimension must be positive");
  if (!(cell > 0)) throw Error(ErrorCode::Precondition, "grid cell must be positive");
}

SpatialGrid::SpatialGrid(const std::vector<Vec>& points, double cell)
    : SpatialGrid(points.empty() ? 1 : static_cast<int>(points.front().size()),
                  cell > 0 ? cell : spread_cell(points)) {
  points_.reserve(points.size());
  for (const auto& p : points) insert(p);
}

std::vector<std::int64_t> SpatialGrid::cell_of(const Vec& x) const {
  std::vector<std::int64_t> c(dim_);
  for (int k = 0; k < dim_; ++k) c[k] = static_cast<std::int64_t>(std::floor(x[k] / cell_));
  return c;
}

std::uint64_t SpatialGrid::key_of(const std::vector<std::int64_t>& c) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (auto v : c) h = split_seed(h, static_cast<std::uint64_t>(v));
  return h;
}

void SpatialGrid::insert(const Vec& x) {
  if (x.size() != dim_) throw Error(ErrorCode::BadDimension, "grid point has wrong dimension");
  cells_[key_of(cell_of(x))].push_back(points_.size());
  points_.push_back(x);
}

SpatialGrid::Hit SpatialGrid::scan_all(const Vec& x, double radius, std::size_t skip) const {
  Hit best;
  best.distance = radius;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i == skip) continue;
    const double d = (points_[i] - x).norm();
    if (d < best.distance) best = {i, d};
  }
  if (!(best.distance < radius)) return {};
  return best;
}

SpatialGrid::Hit SpatialGrid::nearest(const Vec& x, double radius, std::size_t skip) const {
  if (points_.empty()) return {};
  if (dim_ > 6) return scan_all(x, radius, skip);
  const auto center = cell_of(x);
  Hit best;
  best.distance = radius;
  std::vector<std::int64_t> offset(dim_), probe(dim_);
  const double n = static_cast<double>(points_.size());
  for (int k = 0;; ++k) {
    // Cells in ring k are at least (k - 1) * cell away from x.
    if (k >= 1 && (k - 1) * cell_ >= best.distance) break;
    if (std::pow(2.0 * k + 1, dim_) > n) {
      const Hit full = scan_all(x, best.distance, skip);
      if (full.found()) best = full;
      break;
    }
    for_each_ring_offset(dim_, k, offset, [&](const std::vector<std::int64_t>& off) {
      for (int a = 0; a < dim_; ++a) probe[a] = center[a] + off[a];
      const auto it = cells_.find(key_of(probe));
      if (it == cells_.end()) return;
      for (auto i : it->second) {
        if (i == skip) continue;
        const double d = (points_[i] - x).norm();
        if (d < best.distance) best = {i, d};
      }
    });
  }
  if (!(best.distance < radius)) return {};
  return best;
}

PairDistance min_cross_distance(const std::vector<Vec>& a, const std::vector<Vec>& b) {
  PairDistance out;
  if (a.empty() || b.empty()) return out;
  const SpatialGrid grid(b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto hit = grid.nearest(a[i], out.distance);
    if (hit.found()) out = {i, hit.index, hit.distance};
  }
  return out;
}

PairDistance min_pairwise_distance(const std::vector<Vec>& points) {
  PairDistance out;
  if (points.size() < 2) return out;
  const SpatialGrid grid(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto hit = grid.nearest(points[i], out.distance, i);
    if (hit.found()) out = {std::min(i, hit.index), std::max(i, hit.index), hit.distance};
    if (out.distance == 0.0) break;
  }
  return out;
}

std::vector<std::size_t> thin_points(const std::vector<Vec>& points, double sep) {
  std::vector<std::size_t> kept;
  if (points.empty()) return kept;
  if (!(sep > 0)) {
    kept.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) kept[i] = i;
    return kept;
  }
  SpatialGrid grid(static_cast<int>(points.front().size()), sep);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (grid.nearest(points[i], sep).found()) continue;
    grid.insert(points[i]);
    kept.push_back(i);
  }
  return kept;
}

}  // namespace sympfold
