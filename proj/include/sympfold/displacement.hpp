#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "sympfold/cutoff.hpp"
#include "sympfold/hamiltonian.hpp"
#include "sympfold/hausdorff.hpp"
#include "sympfold/set_model.hpp"

namespace sympfold {

/// H(x) = omega(v0, x). Its vector field is the constant v0, so the flow is x + t v0.
struct LinearHamiltonian {
  Vec v0;

  double value(const Vec& x) const { return omega(v0, x); }
  Vec gradient() const;
  /// J grad H, which equals v0.
  Vec field() const;
  HamiltonianSpec spec() const { return HamiltonianSpec::linear(v0); }
};

Vec translation_flow(const LinearHamiltonian& h, double t, const Vec& x);

struct DisplacementProblem {
  RectifiableSet a;
  RectifiableSet b;
  std::size_t a_samples = 500;
  std::size_t b_samples = 500;
  std::uint64_t seed = 0;
  /// Distance below which a translated A point counts as hitting B; 0 means 1e-6 times the cloud diameter.
  double clearance_tol = 0;
  /// Difference vectors scanned per direction; larger products are subsampled uniformly.
  std::size_t pair_budget = 4'000'000;
  /// When nonempty, B's negligibility witness at exponent l - m is run on these scales.
  std::vector<double> witness_scales;

  DisplacementProblem(RectifiableSet a_, RectifiableSet b_);

  int ambient_dim() const { return a.ambient_dim(); }
  int rect_order() const { return a.rect_order(); }
  SampleCloud a_cloud(std::size_t factor = 1) const;
  SampleCloud b_cloud(std::size_t factor = 1) const;
};

struct CertifiedTime {
  double t = 0;
  double distance = 0;
};

struct DisplacementResult {
  Vec v0;
  int direction_index = -1;
  bool antipodal = false;  // v0 is the negative of the scanned direction
  double bad_time_fraction = 1;
  std::vector<CertifiedTime> admissible_times;
  double clearance = 0;
  double clearance_tol = 0;
  double t_max = 0;
  int t_samples = 0;
  int directions = 0;
  /// Best of +v and -v for every scanned direction.
  std::vector<double> direction_fractions;
  std::optional<DecayReport> witness;

  LinearHamiltonian hamiltonian() const { return {v0}; }
  bool is_admissible(double t) const;
  nlohmann::json to_json() const;
};

/// All differences y - x for x in a, y in b. Above pair_budget a uniform
/// subsample of pairs is drawn, unless subsample is off, in which case the
/// call fails with PairBudgetExceeded.
SampleCloud displacement_image(const SampleCloud& a, const SampleCloud& b, std::size_t pair_budget = 4'000'000,
                               bool subsample = true, std::uint64_t seed = 0);

/// count unit vectors: equally spaced half-circle angles in the plane
/// (antipodes are scanned separately), Gaussianized Halton points otherwise.
std::vector<Vec> sphere_directions(int dim, int count);

/// Scans t_samples equally spaced times in (0, t_max] for each direction and
/// its antipode. A time is bad when some difference vector lies within
/// clearance_tol of t v. The direction with the smallest bad fraction wins
/// (lowest index on ties, +v before -v), and its good times are kept only if
/// the exact nearest-neighbour distance on the clouds clears the tolerance.
DisplacementResult find_generic_direction(const DisplacementProblem& problem, int directions, double t_max,
                                          int t_samples);

struct DisplacementCertificate {
  double t = 0;
  double distance = 0;
  double clearance_tol = 0;
  std::size_t a_points = 0;
  std::size_t b_points = 0;
  bool pass = false;
  /// Closest pair: translated A point and B point.
  Vec a_point, b_point;

  nlohmann::json to_json() const;
};

/// Minimum distance between a + t v0 and b.
DisplacementCertificate check_translation(const SampleCloud& a, const SampleCloud& b, const Vec& v0, double t,
                                          double clearance_tol);

/// Re-checks an admissible time on clouds ten times larger than the scan.
/// Throws CertificationFailed naming the closest pair when it does not clear.
DisplacementCertificate displace_certify(const DisplacementProblem& problem, const DisplacementResult& result,
                                         double t);

struct HoferBound {
  double value = 0;
  double max_value = 0;  // of rho H on the grid, at least 0
  double min_value = 0;  // at most 0
  double grid_spacing = 0;
  std::size_t grid_points = 0;

  nlohmann::json to_json() const;
};

/// t (sup - inf) of rho H over a grid on support_box, with the 0 taken
/// outside the support included. rho vanishes outside the box.
HoferBound hofer_norm_bound(const LinearHamiltonian& h, const std::function<double(const Vec&)>& rho, double t,
                            const Box& support_box, int grid);
/// Tensor-product cutoff rho(x) = prod_k cutoff(x_k).
HoferBound hofer_norm_bound(const LinearHamiltonian& h, const CutoffProfile& cutoff, double t, const Box& support_box,
                            int grid);

}  // namespace sympfold
