#pragma once

#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "sympfold/common.hpp"

namespace sympfold {

/// Uniform hashed grid over points of R^d for exact nearest-neighbour queries.
/// Cells are keyed by a 64-bit hash of floor(x / cell); hash collisions only
/// add candidates, so answers stay exact. Queries fall back to a linear scan
/// whenever the ring search would touch more cells than there are points.
class SpatialGrid {
 public:
  SpatialGrid(int dim, double cell);
  /// Grid over the given points with a cell size chosen from their spread.
  explicit SpatialGrid(const std::vector<Vec>& points, double cell = 0.0);

  void insert(const Vec& x);
  std::size_t size() const { return points_.size(); }
  const Vec& point(std::size_t i) const { return points_[i]; }
  double cell() const { return cell_; }

  struct Hit {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
    bool found() const { return distance < std::numeric_limits<double>::infinity(); }
  };
  /// Nearest stored point strictly closer than radius, skipping index `skip`.
  Hit nearest(const Vec& x, double radius = std::numeric_limits<double>::infinity(),
              std::size_t skip = static_cast<std::size_t>(-1)) const;

 private:
  std::uint64_t key_of(const std::vector<std::int64_t>& c) const;
  std::vector<std::int64_t> cell_of(const Vec& x) const;
  Hit scan_all(const Vec& x, double radius, std::size_t skip) const;

  int dim_;
  double cell_;
  std::vector<Vec> points_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

struct PairDistance {
  std::size_t first = 0;
  std::size_t second = 0;
  double distance = std::numeric_limits<double>::infinity();
};

/// Smallest |a_i - b_j|.
PairDistance min_cross_distance(const std::vector<Vec>& a, const std::vector<Vec>& b);
/// Smallest |x_i - x_j| over i != j.
PairDistance min_pairwise_distance(const std::vector<Vec>& points);
/// Greedy thinning: keeps points in order, dropping any closer than sep to an
/// already kept one. Returns kept indices.
std::vector<std::size_t> thin_points(const std::vector<Vec>& points, double sep);

}  // namespace sympfold
