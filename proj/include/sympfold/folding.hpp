#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sympfold/displacement.hpp"
#include "sympfold/hausdorff.hpp"
#include "sympfold/map_checks.hpp"
#include "sympfold/map_expr.hpp"
#include "sympfold/plot.hpp"
#include "sympfold/set_model.hpp"

namespace sympfold {

/// (0,1) x (-1,1) with the slit [delta,1) x [0,delta] removed.
struct VDelta {
  double delta = 0.1;

  explicit VDelta(double delta_);
  bool contains(double q, double p) const;
  double area() const { return 2.0 - delta * (1.0 - delta); }
  std::vector<Point2> outline() const;
};

/// The L-shaped region ([0,1] x [-1,0]) u ([0,eps] x [0,1]) that the fold lands in.
std::vector<Point2> fold_region_outline(double eps);

struct FoldProblem {
  /// Open rectangles in the first factor; |Q| < 2|R| is required.
  Rect Q, R;
  /// Box holding the other factors of A, and an open box around it (both 0-dimensional when n = 1).
  Box K, U;
  RectifiableSet A;
  std::size_t scan_samples = 300;
  std::size_t cert_samples = 100000;
  std::size_t symplectic_samples = 10000;
  std::uint64_t seed = 0;

  FoldProblem(Rect Q_, Rect R_, Box K_, Box U_, RectifiableSet A_);
  int dim() const { return A.ambient_dim(); }
};

struct FoldConfig {
  int directions = 64;
  int t_samples = 200;
  /// 0 means 1e-6 times the diameter of the scan clouds.
  double clearance_tol = 0;
  double preimage_sep = 1e-4;
  double symplectic_tol = 1e-6;
  double glue_tol = 1e-8;
  double identity_tol = 1e-10;
  std::size_t band_samples = 1000;
  std::size_t identity_samples = 1000;
  std::size_t theta_samples = 10000;
  /// Upper bound on eps after normalization; keeps the fold region thin.
  double eps_cap = 0.25;
  /// When nonempty, A must pass the decay test at exponent n on these scales.
  std::vector<double> witness_scales;
  /// Throw CertificationFailed on the first failing check instead of returning a failed report.
  bool strict = true;
  bool snapshots = true;
};

/// Dilation factor c with c^2 |Q| < 2 and c^2 |R| > 1, applied to all coordinates.
struct Normalization {
  double factor = 1;
  Rect Q, R;
  Box K, U;
  RectifiableSet A;

  bool identity() const { return factor == 1.0; }
};

/// c = 1 when already normalized; otherwise a power-of-two area factor if one
/// fits, else the factor that balances the two bounds on delta.
double normalization_factor(double area_q, double area_r);
Normalization normalize(const FoldProblem& problem);

struct FoldParameters {
  double factor = 1;  // normalization dilation
  double eps = 0, delta = 0, eps_prime = 0;
  double area_q = 0, area_r = 0;  // normalized
  double t = 0, t0 = 0, t1 = 0, t2 = 0, t_max = 0;
  double speed_max = 0;
  double tau = 0;       // thickening of the fold region accepted by chi
  double u_margin = 0;  // distance from K to the boundary of U
  Vec v0;

  /// Every interval constraint on eps, delta, eps', t.
  bool feasible() const;
  nlohmann::json to_json() const;
};

/// eps, delta, eps' for normalized areas.
FoldParameters choose_parameters(double area_q, double area_r, double eps_cap = 0.25);

/// Planar symplectic embedding of Q into V_delta: an affine map onto a tall
/// rectangle followed by a fiber lift that squeezes the band at the slit height
/// into the strip left of the slit.
struct ThetaEmbedding {
  MapExpr map;
  bool trivial = false;  // affine alone lands in the lower half
  double k = 1, beta = 0, gamma = 0, mu = 0;
  std::size_t certified_points = 0;

  nlohmann::json to_json() const;
};

ThetaEmbedding theta_embedding(const Rect& Q, double delta, std::size_t cert_points = 10000,
                               std::uint64_t seed = 0);

/// Planar embedding of the tau-thickened fold region into R: a fiber lift
/// flattening the thin upper arm, then a centered affine fit.
struct ChiEmbedding {
  MapExpr map;
  double tau = 0, kappa = 0;
  double fill = 0;  // side fraction of R used by the image box
  Rect source_box;  // bounding box after the fiber lift
  Rect image_box;   // where the thickened region lands inside R

  nlohmann::json to_json() const;
};

ChiEmbedding chi_embedding(double eps, const Rect& R);

/// The pieces of one fold in normalized coordinates, before t is fixed.
struct FoldPlan {
  int dim = 2;
  FoldParameters params;
  ThetaEmbedding theta;
  ChiEmbedding chi;
  MapExpr psi;  // planar shear
  Box band;     // agreement band of the glue
  Vec v0;

  HamiltonianSpec hamiltonian() const;
  /// Glue of (chi x id) o flow_t o (psi x id) on p > 0 with chi x id elsewhere.
  MapExpr glue(double t) const;
  /// Map in normalized coordinates: glue o (theta x id), or chi o theta when nothing is folded.
  MapExpr normalized_map(double t, bool fold = true) const;
  /// Same map in the original coordinates.
  MapExpr map(double t, bool fold = true) const;
};

struct ContainmentReport {
  std::size_t points = 0;
  std::size_t inside = 0;
  double min_margin = 0;
  double fraction() const { return points ? static_cast<double>(inside) / points : 1.0; }
  bool pass() const { return inside == points; }
  nlohmann::json to_json() const;
};

struct FoldReport {
  MapExpr map;
  FoldPlan plan;
  bool folded = true;  // false when A has no part above the slit, or no part below
  std::optional<DisplacementResult> direction;
  std::optional<DecayReport> witness;
  std::size_t theta_cloud_outside = 0;  // points of A landing outside V_delta
  double displacement_clearance = 0;
  double identity_residual = 0;
  double max_displacement = 0;  // t times speed bound, normalized units
  SymplecticReport symplectic;
  GlueReport glue;
  InjectivityReport injectivity;
  ContainmentReport containment;
  RectifiableSet image = RectifiableSet::empty(2, 0);
  Rect image_box;  // original coordinates
  std::vector<Snapshot> snapshots;
  bool pass = false;
  std::string failed_stage;

  nlohmann::json to_json() const;
};

/// One fold: A in Q x K goes injectively and symplectically into R x U.
FoldReport fold_once(const FoldProblem& problem, const FoldConfig& config = {});

/// First-factor rectangle and other-factor box enclosing a sample of the set.
std::pair<Rect, Box> sampled_extent(const RectifiableSet& set, std::size_t count, std::uint64_t seed,
                                    double relative_margin);

struct SqueezeConfig {
  FoldConfig fold;
  /// Area ratio |Q| / |R| aimed for by each fold.
  double fold_ratio = 1.95;
  std::vector<double> witness_scales;
  bool require_witness = true;
  std::size_t bound_samples = 20000;
  double bound_margin = 0.02;
  std::size_t cert_samples = 10000;
  int max_folds_per_factor = 40;
};

struct SqueezeStep {
  int factor = 0;
  int iteration = 0;
  Rect Q, R;
  FoldReport report;
};

struct SqueezeReport {
  MapExpr map;
  std::optional<DecayReport> witness;
  std::vector<SqueezeStep> steps;
  std::vector<int> folds_per_factor;
  std::vector<int> estimated_folds;  // ceil(log(|Q|/|T|) / log(fold ratio)) per factor
  SymplecticReport symplectic;
  InjectivityReport injectivity;
  ContainmentReport containment;
  RectifiableSet image = RectifiableSet::empty(2, 0);
  SampleCloud final_cloud;
  bool pass = false;

  nlohmann::json to_json() const;
};

/// Folds each factor in turn (brought forward by a factor swap) until it fits
/// its target, then certifies the composite on a fresh cloud.
SqueezeReport squeeze(const RectifiableSet& A, const std::vector<Rect>& targets, std::uint64_t seed,
                      const SqueezeConfig& config = {});

}  // namespace sympfold
