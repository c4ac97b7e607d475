#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sympfold/cloud.hpp"
#include "sympfold/common.hpp"
#include "sympfold/map_expr.hpp"

namespace sympfold {

/// Cantor-type mask on one parameter axis, in unit coordinates [0,1]:
/// each level keeps the two outer pieces [0,r] and [1-r,1]. depth 0 (or
/// ratio 1/2) is the whole interval.
struct CantorAxis {
  double ratio = 0.5;
  int depth = 0;

  bool full() const { return depth == 0 || ratio == 0.5; }
  /// Fraction of [0,1] kept at this depth, (2r)^depth.
  double measure() const;
  /// Maps u in [0,1) uniformly onto the kept intervals.
  double point(double u) const;
  bool contains(double v, double tol = 0.0) const;
  /// Kept intervals in order (2^depth of them).
  std::vector<std::pair<double, double>> intervals() const;
  /// Number of grid cells [offset + j cell, offset + (j+1) cell) meeting the kept set.
  std::int64_t cell_count(double cell, double offset = 0.0) const;
  /// Indices j of those cells, in increasing order.
  std::vector<std::int64_t> cells(double cell, double offset = 0.0) const;

  bool operator==(const CantorAxis&) const = default;
};

/// Ratio r with 2 r^s = 1 per axis, so m axes give a dust of dimension
/// m ln2 / ln(1/r) = target_dim.
double cantor_ratio(double target_dim, int param_dim);

/// Image-space constraint x[coord] > threshold (above) or x[coord] <= threshold.
struct HalfSpace {
  int coord = 1;
  double threshold = 0.0;
  bool above = true;

  bool accepts(const Vec& x) const { return above ? x[coord] > threshold : x[coord] <= threshold; }
  bool operator==(const HalfSpace&) const = default;
};

struct ChartMap;
using ChartMapPtr = std::shared_ptr<const ChartMap>;

namespace chartmap {
/// x = offset + M y. Covers points (m = 0), segments and boxes.
struct Affine {
  Mat matrix;
  Vec offset;
};
/// y in [0,1], equal parameter length per segment.
struct Polyline {
  std::vector<Vec> vertices;
  bool closed = false;
};
/// x_k(t) = c_k + a_k cos(w_k t + phi_k) + b_k t. Circles and graphs are special cases.
struct TrigCurve {
  Vec center, amplitude, frequency, phase, drift;
};
struct Product {
  ChartMapPtr first, second;
  int first_param_dim = 0;
};
struct Image {
  ChartMapPtr base;
  MapExpr map;
};
/// Keeps only parameters whose base value satisfies every constraint.
struct Restrict {
  ChartMapPtr base;
  std::vector<HalfSpace> constraints;
};
}  // namespace chartmap

struct ChartMap {
  std::variant<chartmap::Affine, chartmap::Polyline, chartmap::TrigCurve, chartmap::Product, chartmap::Image,
               chartmap::Restrict>
      value;
};

/// Lipschitz map from a (possibly masked) box in R^m into R^l.
class LipschitzChart {
 public:
  LipschitzChart(Box domain, ChartMapPtr map, int ambient_dim, double lip_const,
                 std::vector<CantorAxis> mask = {}, bool lip_estimated = false);

  static LipschitzChart point(const Vec& x);
  static LipschitzChart segment(const Vec& from, const Vec& to);
  static LipschitzChart box(const Box& b);
  static LipschitzChart polyline(std::vector<Vec> vertices, bool closed);
  static LipschitzChart circle(const Vec& center, double radius);
  /// t in [t0,t1] -> (t, amplitude sin(frequency t + phase) + offset).
  static LipschitzChart graph(double t0, double t1, double amplitude, double frequency, double phase,
                              double offset);
  static LipschitzChart trig_curve(Vec center, Vec amplitude, Vec frequency, Vec phase, Vec drift, double t0,
                                   double t1);

  int param_dim() const { return domain_.dim(); }
  int ambient_dim() const { return ambient_dim_; }
  const Box& domain() const { return domain_; }
  double lip_const() const { return lip_; }
  bool lip_estimated() const { return lip_estimated_; }
  const std::vector<CantorAxis>& mask() const { return mask_; }
  const ChartMap& map() const { return *map_; }
  ChartMapPtr map_ptr() const { return map_; }
  /// True if some image-space constraint requires rejection sampling.
  bool constrained() const;

  Vec evaluate(const Vec& y) const;
  /// Evaluates and reports whether every constraint along the way holds.
  Vec evaluate(const Vec& y, bool& accepted) const;
  bool param_in_mask(const Vec& y, double tol = 1e-12) const;
  /// Parameter-space volume of the mask.
  double masked_volume() const;
  /// Uniform draw from the masked domain.
  Vec sample_param(std::mt19937_64& rng) const;

  LipschitzChart with_mask(std::vector<CantorAxis> mask) const;
  LipschitzChart restricted(const HalfSpace& h) const;
  LipschitzChart composed(const MapExpr& map, double lip_bound, bool estimated) const;
  static LipschitzChart product(const LipschitzChart& a, const LipschitzChart& b);

  nlohmann::json to_json() const;
  static LipschitzChart from_json(const nlohmann::json& j);

 private:
  Box domain_;
  ChartMapPtr map_;
  int ambient_dim_;
  double lip_;
  std::vector<CantorAxis> mask_;
  bool lip_estimated_;
};

/// Finite union of charts sharing ambient dimension and rectifiability order.
class RectifiableSet {
 public:
  RectifiableSet(int ambient_dim, int rect_order, std::vector<LipschitzChart> charts, std::string label = "");
  static RectifiableSet empty(int ambient_dim, int rect_order, std::string label = "empty");

  int ambient_dim() const { return ambient_dim_; }
  int rect_order() const { return rect_order_; }
  const std::vector<LipschitzChart>& charts() const { return charts_; }
  const std::string& label() const { return label_; }
  bool is_empty() const { return charts_.empty(); }
  bool lip_estimated() const;
  /// Factors when this set was built by product(); sampling then splits the seed.
  const std::pair<RectifiableSet, RectifiableSet>* factors() const { return factors_.get(); }

  RectifiableSet with_label(std::string label) const;

  nlohmann::json to_json() const;
  static RectifiableSet from_json(const nlohmann::json& j);
  static RectifiableSet load(const std::string& path);

 private:
  friend RectifiableSet product(const RectifiableSet& a, const RectifiableSet& b);
  int ambient_dim_;
  int rect_order_;
  std::vector<LipschitzChart> charts_;
  std::string label_;
  std::shared_ptr<const std::pair<RectifiableSet, RectifiableSet>> factors_;
};

struct SampleOptions {
  int rejection_budget = 10000;
  int acceptance_probe = 2048;
};

/// Deterministic sample: charts are weighted by masked volume times their
/// acceptance rate, parameters are uniform on the mask, constrained charts use
/// rejection. Product sets sample each factor with split_seed(seed, 0) and
/// split_seed(seed, 1) and zip the clouds.
SampleCloud sample(const RectifiableSet& set, std::size_t count, std::uint64_t seed, const SampleOptions& options = {});

/// map o chart for every chart. A non-positive lip_bound is estimated from
/// finite-difference Jacobians on a sample and flagged as estimated. With a
/// domain box, probe samples leaving it raise DomainViolation.
RectifiableSet image(const RectifiableSet& set, const MapExpr& map, double lip_bound,
                     const std::optional<Box>& domain = std::nullopt);

/// Largest finite-difference Jacobian operator norm over a sample, times safety.
double estimate_lipschitz(const MapExpr& map, const SampleCloud& cloud, double safety = 1.5);

RectifiableSet product(const RectifiableSet& a, const RectifiableSet& b);
RectifiableSet set_union(const RectifiableSet& a, const RectifiableSet& b);

/// Dust of 2^m pieces per level with ratio r, 2^m r^target_dim = 1, in [0,1]^m.
RectifiableSet cantor_dust(double target_dim, int param_dim, int depth);

/// (p > 0, p <= 0) halves with p = x[1]. Charts whose half is empty on a probe sample are dropped.
std::pair<RectifiableSet, RectifiableSet> split_by_p_sign(const RectifiableSet& set, const SampleOptions& options = {});

/// Rough bounding box from a sample, expanded by margin.
Box sampled_bounds(const RectifiableSet& set, std::size_t count, std::uint64_t seed, double margin = 0.0);

}  // namespace sympfold
