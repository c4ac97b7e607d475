#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sympfold/common.hpp"
#include "sympfold/cutoff.hpp"
#include "sympfold/hamiltonian.hpp"

namespace sympfold {

struct MapNode;

/// Immutable expression tree of (mostly symplectic) maps of R^{2n}.
///
/// Coordinates are laid out as (q1,p1,q2,p2,...). Planar nodes (Shear,
/// FiberLift) act on R^2 and are lifted to R^{2n} with Product2D, which acts on
/// the first factor and leaves the rest alone. Compose{a,b,c} means a o b o c.
class MapExpr {
 public:
  enum class JacobianMode { Analytic, FiniteDifference };

  MapExpr();  // identity on R^2

  static MapExpr identity(int dim);
  /// Throws NotSymplectic unless ||M^T J M - J||_inf <= 1e-10.
  static MapExpr affine_symplectic(Mat matrix, Vec offset);
  /// Unchecked affine map; used for controls and deliberately broken maps.
  static MapExpr affine(Mat matrix, Vec offset);
  static MapExpr translation(Vec offset);
  /// (q,p) -> (lambda q, p / lambda) followed by translation; planar.
  static MapExpr diagonal_scaling(double lambda, double dq, double dp);
  /// Planar shear (q,p) -> (q, p - f(q)).
  static MapExpr shear(CutoffProfile f);
  /// Planar fiber lift (q,p) -> (q / g'(p), g(p)), the cotangent lift of g.
  static MapExpr fiber_lift(SlopeProfile g);
  static MapExpr ham_flow(HamiltonianSpec h, double time);
  static MapExpr product2d(MapExpr planar, int dim);
  /// Swaps symplectic factors i and j (0-based) of R^{2n}.
  static MapExpr factor_permute(int dim, int i, int j);
  static MapExpr compose(std::vector<MapExpr> parts);
  /// plus on {x[coord] > threshold}, minus elsewhere. The band is the region
  /// where both branches are required to agree (checked by glue_check).
  static MapExpr glue(int coord, double threshold, MapExpr plus, MapExpr minus, Box band);
  /// x -> inner(c x) / c. Conjugating by a dilation keeps symplecticity.
  static MapExpr rescaled(double factor, MapExpr inner);

  int dim() const;
  std::string kind() const;
  const MapNode& node() const { return *node_; }

  Vec evaluate(const Vec& x) const;
  Mat jacobian(const Vec& x, JacobianMode mode = JacobianMode::Analytic) const;
  /// Value and analytic Jacobian in one pass (flows integrate the variational equation once).
  Vec evaluate_with_jacobian(const Vec& x, Mat& jacobian) const;

  /// True when every node is symplectic by construction (no unchecked affine node).
  bool nominally_symplectic() const;
  std::size_t node_count() const;

  nlohmann::json to_json() const;
  static MapExpr from_json(const nlohmann::json& j);

 private:
  explicit MapExpr(std::shared_ptr<const MapNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const MapNode> node_;
};

namespace node {
struct Identity {
  int dim;
};
struct Affine {
  Mat matrix;
  Vec offset;
  bool symplectic;
};
struct Shear {
  CutoffProfile f;
};
struct FiberLift {
  SlopeProfile g;
};
struct HamFlow {
  HamiltonianSpec h;
  double time;
};
struct Product2D {
  MapExpr planar;
  int dim;
};
struct FactorPermute {
  int dim;
  int first;
  int second;
};
struct Compose {
  std::vector<MapExpr> parts;
  int dim;
};
struct Glue {
  int coord;
  double threshold;
  MapExpr plus;
  MapExpr minus;
  Box band;
};
struct Rescaled {
  double factor;
  MapExpr inner;
};
}  // namespace node

struct MapNode {
  std::variant<node::Identity, node::Affine, node::Shear, node::FiberLift, node::HamFlow, node::Product2D,
               node::FactorPermute, node::Compose, node::Glue, node::Rescaled>
      value;
};

}  // namespace sympfold
