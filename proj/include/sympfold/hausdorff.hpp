#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sympfold/set_model.hpp"

namespace sympfold {

struct CoverOptions {
  /// Largest total piece count before ScaleTooSmall.
  double count_budget = 1e13;
  /// Pieces are listed explicitly only up to this many.
  std::size_t materialize_limit = 200000;
  /// Grid origins tried per parameter axis; the smallest count wins.
  int offsets = 4;
};

struct CoverPiece {
  Vec center;
  double diameter = 0;
};

/// Pieces of diameter <= scale covering every chart image. When the count is
/// too large to list, only the count and weight are kept.
struct Covering {
  double scale = 0;
  double s = 0;
  double count = 0;
  double weight = 0;
  bool materialized = false;
  std::vector<CoverPiece> pieces;

  /// Sum of diameter^s over the listed pieces (0^0 = 1).
  double recomputed_weight() const;
  /// True if every point is within diameter/2 of some piece center.
  bool covers(const SampleCloud& cloud, double tol = 1e-12) const;
  nlohmann::json to_json() const;
};

/// Pulls a grid of side scale / (L sqrt(m)) back through every chart, so
/// each image cell lies in a ball of diameter scale. Masked axes count only
/// the cells that meet the mask. The result bounds the s-content at this scale.
Covering cover_upper_bound(const RectifiableSet& set, double s, double scale, std::uint64_t seed,
                           const CoverOptions& options = {}, bool materialize = false);

/// Product cover under the p-product metric: factor covers at scale
/// h 2^{-1/p}, so every product piece has p-diameter <= h.
Covering product_cover(const RectifiableSet& a, const RectifiableSet& b, double p, double s, double scale,
                       std::uint64_t seed, const CoverOptions& options = {});

struct DimensionEstimate {
  std::string label;
  std::vector<double> scales;
  std::vector<double> counts;
  double slope = 0;
  double residual = 0;  // RMS of the log-log fit

  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Occupied ambient grid cells of a dense cloud at each scale, least-squares
/// slope of log(count) against log(1/scale). Needs >= 3 scales over >= 1.5 decades.
DimensionEstimate box_dimension(const RectifiableSet& set, const std::vector<double>& scales, std::uint64_t seed,
                                std::size_t cloud_size = 200000);
DimensionEstimate box_dimension(const SampleCloud& cloud, const std::vector<double>& scales,
                                const std::string& label = "");

struct DecayOptions {
  /// Final weight must not exceed factor * initial weight.
  double factor = 0.2;
  CoverOptions cover;
};

struct DecayReport {
  double s = 0;
  std::vector<double> scales;
  std::vector<double> counts;
  std::vector<double> weights;
  bool monotone = true;
  double final_ratio = 0;
  bool consistent = false;

  std::string verdict() const { return consistent ? "NEGLIGIBLE-CONSISTENT" : "NOT-CONSISTENT"; }
  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

/// Heuristic: weights of cover_upper_bound over decreasing scales must be
/// nonincreasing and end below factor times the first.
DecayReport negligibility_decay_test(const RectifiableSet& set, double s, const std::vector<double>& scales,
                                     std::uint64_t seed, const DecayOptions& options = {});

struct ProductDecayReport {
  DecayReport witness;  // b at exponent m'
  DecayReport product;  // a x b at exponent m + m' in the p-metric
  double p = 2;

  nlohmann::json to_json() const;
};

/// Runs the witness on b at exponent witness_exponent, then the decay test on
/// product covers of (a, b) at exponent a.rect_order() + witness_exponent.
ProductDecayReport product_negligibility_test(const RectifiableSet& a, const RectifiableSet& b, double witness_exponent,
                                              double p, const std::vector<double>& scales, std::uint64_t seed,
                                              const DecayOptions& options = {});

struct VolumeEstimate {
  double value = 0;
  double standard_error = 0;
  std::size_t samples = 0;

  nlohmann::json to_json() const;
};

/// Monte Carlo volume of {x in region : indicator(x)}.
VolumeEstimate lebesgue_estimate(const Box& region, const std::function<bool(const Vec&)>& indicator,
                                 std::size_t samples, std::uint64_t seed);

/// n log-spaced scales from hi down to lo.
std::vector<double> log_scales(double hi, double lo, int n);

}  // namespace sympfold
