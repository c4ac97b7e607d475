#include "sympfold/map_expr.hpp"

#include <cmath>

#include "sympfold/json_util.hpp"

namespace sympfold {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(const Vec& x, int dim) {
  if (x.size() != dim)
    throw Error(ErrorCode::DomainViolation,
                "point of dimension " + std::to_string(x.size()) + " given to a map on R^" + std::to_string(dim));
}

}  // namespace

MapExpr::MapExpr() : MapExpr(identity(2)) {}

MapExpr MapExpr::identity(int dim) {
  if (dim < 0) throw Error(ErrorCode::BadDimension, "negative dimension");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Identity{dim}}));
}

MapExpr MapExpr::affine_symplectic(Mat matrix, Vec offset) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != offset.size())
    throw Error(ErrorCode::BadDimension, "affine map needs a square matrix matching the offset");
  const double residual = symplectic_residual(matrix);
  if (!(residual <= 1e-10))
    throw Error(ErrorCode::NotSymplectic, "affine matrix residual " + std::to_string(residual));
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Affine{std::move(matrix), std::move(offset), true}}));
}

MapExpr MapExpr::affine(Mat matrix, Vec offset) {
  if (matrix.rows() != matrix.cols() || matrix.rows() != offset.size())
    throw Error(ErrorCode::BadDimension, "affine map needs a square matrix matching the offset");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Affine{std::move(matrix), std::move(offset), false}}));
}

MapExpr MapExpr::translation(Vec offset) {
  const auto d = offset.size();
  return affine_symplectic(Mat::Identity(d, d), std::move(offset));
}

MapExpr MapExpr::diagonal_scaling(double lambda, double dq, double dp) {
  if (!(lambda > 0)) throw Error(ErrorCode::Precondition, "scaling factor must be positive");
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = lambda;
  m(1, 1) = 1.0 / lambda;
  Vec b(2);
  b << dq, dp;
  return affine_symplectic(m, b);
}

MapExpr MapExpr::shear(CutoffProfile f) {
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Shear{f}}));
}

MapExpr MapExpr::fiber_lift(SlopeProfile g) {
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::FiberLift{g}}));
}

MapExpr MapExpr::ham_flow(HamiltonianSpec h, double time) {
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::HamFlow{std::move(h), time}}));
}

MapExpr MapExpr::product2d(MapExpr planar, int dim) {
  if (planar.dim() != 2) throw Error(ErrorCode::BadDimension, "product2d needs a planar map");
  if (dim < 2 || dim % 2 != 0) throw Error(ErrorCode::BadDimension, "product2d target must be R^{2n}");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Product2D{std::move(planar), dim}}));
}

MapExpr MapExpr::factor_permute(int dim, int i, int j) {
  if (dim % 2 != 0 || i < 0 || j < 0 || 2 * i >= dim || 2 * j >= dim)
    throw Error(ErrorCode::BadDimension, "factor index out of range");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::FactorPermute{dim, i, j}}));
}

MapExpr MapExpr::compose(std::vector<MapExpr> parts) {
  if (parts.empty()) throw Error(ErrorCode::Precondition, "compose needs at least one map");
  const int d = parts.front().dim();
  for (const auto& p : parts)
    if (p.dim() != d) throw Error(ErrorCode::BadDimension, "composed maps disagree on dimension");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Compose{std::move(parts), d}}));
}

MapExpr MapExpr::glue(int coord, double threshold, MapExpr plus, MapExpr minus, Box band) {
  if (plus.dim() != minus.dim()) throw Error(ErrorCode::BadDimension, "glue branches disagree on dimension");
  if (coord < 0 || coord >= plus.dim()) throw Error(ErrorCode::BadDimension, "glue coordinate out of range");
  if (band.dim() != plus.dim()) throw Error(ErrorCode::Precondition, "glue needs an agreement band of full dimension");
  return MapExpr(std::make_shared<const MapNode>(
      MapNode{node::Glue{coord, threshold, std::move(plus), std::move(minus), std::move(band)}}));
}

MapExpr MapExpr::rescaled(double factor, MapExpr inner) {
  if (!(factor > 0)) throw Error(ErrorCode::Precondition, "rescaling factor must be positive");
  return MapExpr(std::make_shared<const MapNode>(MapNode{node::Rescaled{factor, std::move(inner)}}));
}

int MapExpr::dim() const {
  return std::visit(Overloaded{
                        [](const node::Identity& n) { return n.dim; },
                        [](const node::Affine& n) { return static_cast<int>(n.offset.size()); },
                        [](const node::Shear&) { return 2; },
                        [](const node::FiberLift&) { return 2; },
                        [](const node::HamFlow& n) { return n.h.dim(); },
                        [](const node::Product2D& n) { return n.dim; },
                        [](const node::FactorPermute& n) { return n.dim; },
                        [](const node::Compose& n) { return n.dim; },
                        [](const node::Glue& n) { return n.plus.dim(); },
                        [](const node::Rescaled& n) { return n.inner.dim(); },
                    },
                    node_->value);
}

std::string MapExpr::kind() const {
  return std::visit(Overloaded{
                        [](const node::Identity&) { return std::string("identity"); },
                        [](const node::Affine& n) { return std::string(n.symplectic ? "affine_symplectic" : "affine"); },
                        [](const node::Shear&) { return std::string("shear"); },
                        [](const node::FiberLift&) { return std::string("fiber_lift"); },
                        [](const node::HamFlow&) { return std::string("ham_flow"); },
                        [](const node::Product2D&) { return std::string("product2d"); },
                        [](const node::FactorPermute&) { return std::string("factor_permute"); },
                        [](const node::Compose&) { return std::string("compose"); },
                        [](const node::Glue&) { return std::string("glue"); },
                        [](const node::Rescaled&) { return std::string("rescaled"); },
                    },
                    node_->value);
}

namespace {

Vec eval(const MapExpr& expr, const Vec& x, Mat* jac);

Vec eval_node(const node::Identity& n, const Vec& x, Mat* jac) {
  if (jac) *jac = Mat::Identity(n.dim, n.dim);
  return x;
}

Vec eval_node(const node::Affine& n, const Vec& x, Mat* jac) {
  if (jac) *jac = n.matrix;
  return n.matrix * x + n.offset;
}

Vec eval_node(const node::Shear& n, const Vec& x, Mat* jac) {
  Vec y(2);
  y << x[0], x[1] - n.f.value(x[0]);
  if (jac) {
    jac->setIdentity(2, 2);
    (*jac)(1, 0) = -n.f.derivative(x[0]);
  }
  return y;
}

Vec eval_node(const node::FiberLift& n, const Vec& x, Mat* jac) {
  const double q = x[0], p = x[1];
  const double slope = n.g.slope(p);
  Vec y(2);
  y << q / slope, n.g.value(p);
  if (jac) {
    jac->setZero(2, 2);
    (*jac)(0, 0) = 1.0 / slope;
    (*jac)(0, 1) = -q * n.g.slope_derivative(p) / (slope * slope);
    (*jac)(1, 1) = slope;
  }
  return y;
}

Vec eval_node(const node::HamFlow& n, const Vec& x, Mat* jac) { return hamiltonian_flow(n.h, n.time, x, jac); }

Vec eval_node(const node::Product2D& n, const Vec& x, Mat* jac) {
  Vec y = x;
  if (jac) {
    Mat planar_jac;
    y.head(2) = eval(n.planar, x.head(2), &planar_jac);
    jac->setIdentity(n.dim, n.dim);
    jac->topLeftCorner(2, 2) = planar_jac;
  } else {
    y.head(2) = eval(n.planar, x.head(2), nullptr);
  }
  return y;
}

Vec eval_node(const node::FactorPermute& n, const Vec& x, Mat* jac) {
  Vec y = x;
  std::swap(y[2 * n.first], y[2 * n.second]);
  std::swap(y[2 * n.first + 1], y[2 * n.second + 1]);
  if (jac) {
    jac->setIdentity(n.dim, n.dim);
    if (n.first != n.second) {
      for (int k = 0; k < 2; ++k) {
        const int a = 2 * n.first + k, b = 2 * n.second + k;
        (*jac)(a, a) = 0;
        (*jac)(b, b) = 0;
        (*jac)(a, b) = 1;
        (*jac)(b, a) = 1;
      }
    }
  }
  return y;
}

Vec eval_node(const node::Compose& n, const Vec& x, Mat* jac) {
  Vec y = x;
  if (jac) jac->setIdentity(n.dim, n.dim);
  Mat step;
  for (auto it = n.parts.rbegin(); it != n.parts.rend(); ++it) {
    if (jac) {
      y = eval(*it, y, &step);
      *jac = step * *jac;
    } else {
      y = eval(*it, y, nullptr);
    }
  }
  return y;
}

Vec eval_node(const node::Glue& n, const Vec& x, Mat* jac) {
  return eval(x[n.coord] > n.threshold ? n.plus : n.minus, x, jac);
}

Vec eval_node(const node::Rescaled& n, const Vec& x, Mat* jac) {
  return eval(n.inner, n.factor * x, jac) / n.factor;
}

Vec eval(const MapExpr& expr, const Vec& x, Mat* jac) {
  require_dim(x, expr.dim());
  Vec y = std::visit([&](const auto& n) { return eval_node(n, x, jac); }, expr.node().value);
  if (!y.allFinite()) throw Error(ErrorCode::DomainViolation, "map produced a non-finite value (" + expr.kind() + ")");
  return y;
}

}  // namespace

Vec MapExpr::evaluate(const Vec& x) const { return eval(*this, x, nullptr); }

Vec MapExpr::evaluate_with_jacobian(const Vec& x, Mat& jacobian) const { return eval(*this, x, &jacobian); }

Mat MapExpr::jacobian(const Vec& x, JacobianMode mode) const {
  if (mode == JacobianMode::Analytic) {
    Mat j;
    eval(*this, x, &j);
    return j;
  }
  // Central differences at h and h/2 combined by Richardson extrapolation (fourth order).
  constexpr double h = 1e-5;
  const int d = dim();
  require_dim(x, d);
  auto central = [&](int k, double step) {
    Vec xp = x, xm = x;
    xp[k] += step;
    xm[k] -= step;
    return Vec((evaluate(xp) - evaluate(xm)) / (2.0 * step));
  };
  Mat j(d, d);
  for (int k = 0; k < d; ++k) j.col(k) = (4.0 * central(k, h / 2) - central(k, h)) / 3.0;
  return j;
}

bool MapExpr::nominally_symplectic() const {
  return std::visit(Overloaded{
                        [](const node::Affine& n) { return n.symplectic; },
                        [](const node::Product2D& n) { return n.planar.nominally_symplectic(); },
                        [](const node::Compose& n) {
                          for (const auto& p : n.parts)
                            if (!p.nominally_symplectic()) return false;
                          return true;
                        },
                        [](const node::Glue& n) { return n.plus.nominally_symplectic() && n.minus.nominally_symplectic(); },
                        [](const node::Rescaled& n) { return n.inner.nominally_symplectic(); },
                        [](const auto&) { return true; },
                    },
                    node_->value);
}

std::size_t MapExpr::node_count() const {
  return std::visit(Overloaded{
                        [](const node::Product2D& n) { return 1 + n.planar.node_count(); },
                        [](const node::Compose& n) {
                          std::size_t c = 1;
                          for (const auto& p : n.parts) c += p.node_count();
                          return c;
                        },
                        [](const node::Glue& n) { return 1 + n.plus.node_count() + n.minus.node_count(); },
                        [](const node::Rescaled& n) { return 1 + n.inner.node_count(); },
                        [](const auto&) { return std::size_t{1}; },
                    },
                    node_->value);
}

nlohmann::json MapExpr::to_json() const {
  using nlohmann::json;
  return std::visit(
      Overloaded{
          [](const node::Identity& n) { return json{{"node", "identity"}, {"dim", n.dim}}; },
          [](const node::Affine& n) {
            return json{{"node", n.symplectic ? "affine_symplectic" : "affine"},
                        {"matrix", mat_to_json(n.matrix)},
                        {"offset", vec_to_json(n.offset)}};
          },
          [](const node::Shear& n) { return json{{"node", "shear"}, {"f", n.f.to_json()}}; },
          [](const node::FiberLift& n) { return json{{"node", "fiber_lift"}, {"g", n.g.to_json()}}; },
          [](const node::HamFlow& n) { return json{{"node", "ham_flow"}, {"h", n.h.to_json()}, {"time", n.time}}; },
          [](const node::Product2D& n) { return json{{"node", "product2d"}, {"dim", n.dim}, {"planar", n.planar.to_json()}}; },
          [](const node::FactorPermute& n) {
            return json{{"node", "factor_permute"}, {"dim", n.dim}, {"first", n.first}, {"second", n.second}};
          },
          [](const node::Compose& n) {
            auto parts = json::array();
            for (const auto& p : n.parts) parts.push_back(p.to_json());
            return json{{"node", "compose"}, {"parts", parts}};
          },
          [](const node::Glue& n) {
            return json{{"node", "glue"},          {"coord", n.coord},           {"threshold", n.threshold},
                        {"plus", n.plus.to_json()}, {"minus", n.minus.to_json()}, {"band", box_to_json(n.band)}};
          },
          [](const node::Rescaled& n) { return json{{"node", "rescaled"}, {"factor", n.factor}, {"inner", n.inner.to_json()}}; },
      },
      node_->value);
}

MapExpr MapExpr::from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("node").get<std::string>();
    if (kind == "identity") return identity(j.at("dim").get<int>());
    if (kind == "affine_symplectic") return affine_symplectic(mat_from_json(j.at("matrix")), vec_from_json(j.at("offset")));
    if (kind == "affine") return affine(mat_from_json(j.at("matrix")), vec_from_json(j.at("offset")));
    if (kind == "shear") return shear(CutoffProfile::from_json(j.at("f")));
    if (kind == "fiber_lift") return fiber_lift(SlopeProfile::from_json(j.at("g")));
    if (kind == "ham_flow") return ham_flow(HamiltonianSpec::from_json(j.at("h")), j.at("time").get<double>());
    if (kind == "product2d") return product2d(from_json(j.at("planar")), j.at("dim").get<int>());
    if (kind == "factor_permute")
      return factor_permute(j.at("dim").get<int>(), j.at("first").get<int>(), j.at("second").get<int>());
    if (kind == "compose") {
      std::vector<MapExpr> parts;
      for (const auto& p : j.at("parts")) parts.push_back(from_json(p));
      return compose(std::move(parts));
    }
    if (kind == "glue")
      return glue(j.at("coord").get<int>(), j.at("threshold").get<double>(), from_json(j.at("plus")),
                  from_json(j.at("minus")), box_from_json(j.at("band")));
    if (kind == "rescaled") return rescaled(j.at("factor").get<double>(), from_json(j.at("inner")));
    throw Error(ErrorCode::Parse, "unknown map node '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed map expression: ") + e.what());
  }
}

}  // namespace sympfold
