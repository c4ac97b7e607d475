#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sympfold/cloud.hpp"
#include "sympfold/map_expr.hpp"

namespace sympfold {

struct SymplecticReport {
  double tolerance = 0;
  double max_residual = 0;
  std::size_t worst_index = 0;
  std::size_t points = 0;
  bool pass = true;
  std::vector<double> residuals;

  nlohmann::json to_json() const;
  /// log10-binned histogram of the residuals: bin_lo, bin_hi, count.
  void write_histogram_csv(std::ostream& out, int bins = 20) const;
};

/// max ||D phi^T J D phi - J||_inf over the cloud, analytic Jacobians.
SymplecticReport check_symplectic(const MapExpr& map, const SampleCloud& cloud, double tol);

struct CollisionWitness {
  Vec first_source, second_source;
  Vec first_image, second_image;
};

struct InjectivityReport {
  double min_preimage_sep = 0;
  double input_separation = 0;  // smallest distance among the thinned sources
  double margin = 0;            // smallest distance among their images
  std::size_t points = 0;
  bool pass = true;
  std::optional<CollisionWitness> witness;  // the closest image pair on failure

  nlohmann::json to_json() const;
};

/// Thins the cloud to the given preimage separation, maps it, and reports the
/// closest pair of images. Passes iff that distance exceeds collision_tol.
InjectivityReport check_injective(const MapExpr& map, const SampleCloud& cloud, double min_preimage_sep,
                                  double collision_tol = 0.0);

struct GlueReport {
  double tolerance = 0;
  double value_discrepancy = 0;
  double jacobian_discrepancy = 0;
  std::size_t points = 0;
  std::size_t outside_band = 0;
  bool pass = true;

  nlohmann::json to_json() const;
};

/// Compares both branches of a glue node (values and Jacobians) on the band cloud.
GlueReport glue_check(const MapExpr& glue, const SampleCloud& band_cloud, double tol);

/// Images of all cloud points, provenance kept.
SampleCloud map_cloud(const MapExpr& map, const SampleCloud& cloud);

}  // namespace sympfold
