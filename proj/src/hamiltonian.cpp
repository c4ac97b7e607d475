#include "sympfold/hamiltonian.hpp"

#include <algorithm>
#include <cmath>

#include "sympfold/json_util.hpp"

namespace sympfold {

HamiltonianSpec HamiltonianSpec::linear(Vec v0) {
  if (v0.size() == 0 || v0.size() % 2 != 0) throw Error(ErrorCode::BadDimension, "v0 must live in R^{2n}");
  HamiltonianSpec h;
  h.kind_ = Kind::Linear;
  h.dim_ = static_cast<int>(v0.size());
  h.v0_ = std::move(v0);
  return h;
}

HamiltonianSpec HamiltonianSpec::cutoff_linear(CutoffProfile rho, Vec v0) {
  HamiltonianSpec h = linear(std::move(v0));
  h.kind_ = Kind::CutoffLinear;
  h.cutoff_ = rho;
  return h;
}

HamiltonianSpec HamiltonianSpec::qp_product(int dim, double inner_radius, double outer_radius) {
  if (dim < 2 || dim % 2 != 0) throw Error(ErrorCode::BadDimension, "qp Hamiltonian needs an even dimension");
  HamiltonianSpec h;
  h.kind_ = Kind::QPProduct;
  h.dim_ = dim;
  h.v0_ = Vec::Zero(dim);
  h.cutoff_ = CutoffProfile::bump(-outer_radius, -inner_radius, inner_radius, outer_radius);
  return h;
}

double HamiltonianSpec::value(const Vec& x) const {
  switch (kind_) {
    case Kind::Linear: return omega(v0_, x);
    case Kind::CutoffLinear: return cutoff_.value(x[0]) * omega(v0_, x);
    case Kind::QPProduct: return x[0] * x[1] * cutoff_.value(x[0]) * cutoff_.value(x[1]);
  }
  return 0.0;
}

Vec HamiltonianSpec::gradient(const Vec& x) const {
  // grad omega(v0, x) = J^T v0 = -J v0
  Vec g = Vec::Zero(dim_);
  switch (kind_) {
    case Kind::Linear:
    case Kind::CutoffLinear: {
      for (int k = 0; k < dim_; k += 2) {
        g[k] = -v0_[k + 1];
        g[k + 1] = v0_[k];
      }
      if (kind_ == Kind::CutoffLinear) {
        const double rho = cutoff_.value(x[0]);
        const double lin = omega(v0_, x);
        g *= rho;
        g[0] += lin * cutoff_.derivative(x[0]);
      }
      return g;
    }
    case Kind::QPProduct: {
      const double q = x[0], p = x[1];
      const double cq = cutoff_.value(q), cp = cutoff_.value(p);
      g[0] = p * cp * (cq + q * cutoff_.derivative(q));
      g[1] = q * cq * (cp + p * cutoff_.derivative(p));
      return g;
    }
  }
  return g;
}

Mat HamiltonianSpec::hessian(const Vec& x) const {
  Mat hess = Mat::Zero(dim_, dim_);
  switch (kind_) {
    case Kind::Linear: return hess;
    case Kind::CutoffLinear: {
      Vec glin(dim_);
      for (int k = 0; k < dim_; k += 2) {
        glin[k] = -v0_[k + 1];
        glin[k + 1] = v0_[k];
      }
      const double d1 = cutoff_.derivative(x[0]);
      const double d2 = cutoff_.second_derivative(x[0]);
      hess.row(0) += d1 * glin.transpose();
      hess.col(0) += d1 * glin;
      hess(0, 0) += omega(v0_, x) * d2;
      return hess;
    }
    case Kind::QPProduct: {
      const double q = x[0], p = x[1];
      const double cq = cutoff_.value(q), cp = cutoff_.value(p);
      const double dq = cutoff_.derivative(q), dp = cutoff_.derivative(p);
      hess(0, 0) = p * cp * (2.0 * dq + q * cutoff_.second_derivative(q));
      hess(1, 1) = q * cq * (2.0 * dp + p * cutoff_.second_derivative(p));
      hess(0, 1) = hess(1, 0) = (cq + q * dq) * (cp + p * dp);
      return hess;
    }
  }
  return hess;
}

Vec HamiltonianSpec::vector_field(const Vec& x) const {
  if (kind_ == Kind::Linear) return v0_;
  const Vec g = gradient(x);
  Vec out(dim_);
  for (int k = 0; k < dim_; k += 2) {
    out[k] = g[k + 1];
    out[k + 1] = -g[k];
  }
  return out;
}

nlohmann::json HamiltonianSpec::to_json() const {
  switch (kind_) {
    case Kind::Linear: return {{"kind", "linear"}, {"v0", vec_to_json(v0_)}};
    case Kind::CutoffLinear:
      return {{"kind", "cutoff_linear"}, {"v0", vec_to_json(v0_)}, {"rho", cutoff_.to_json()}};
    case Kind::QPProduct:
      return {{"kind", "qp_product"}, {"dim", dim_}, {"inner", cutoff_.c()}, {"outer", cutoff_.d()}};
  }
  return {};
}

HamiltonianSpec HamiltonianSpec::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "linear") return linear(vec_from_json(j.at("v0")));
  if (kind == "cutoff_linear")
    return cutoff_linear(CutoffProfile::from_json(j.at("rho")), vec_from_json(j.at("v0")));
  if (kind == "qp_product")
    return qp_product(j.at("dim").get<int>(), j.at("inner").get<double>(), j.at("outer").get<double>());
  throw Error(ErrorCode::Parse, "unknown Hamiltonian kind '" + kind + "'");
}

Vec integrate_autonomous(const std::function<Vec(const Vec&)>& rhs, const Vec& y0, double t_end,
                         const FlowOptions& options) {
  if (t_end == 0.0) return y0;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                          b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  const double direction = t_end > 0 ? 1.0 : -1.0;
  const double total = std::abs(t_end);
  const double tol = options.tolerance;
  double done = 0.0;
  double h = std::min(total, 0.05);
  Vec y = y0;
  Vec k1 = rhs(y);
  for (long step = 0; step < options.max_steps; ++step) {
    if (done >= total) return y;
    h = std::min(h, total - done);
    const double hs = direction * h;
    const Vec k2 = rhs(y + hs * (a21 * k1));
    const Vec k3 = rhs(y + hs * (a31 * k1 + a32 * k2));
    const Vec k4 = rhs(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = rhs(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = rhs(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y_new = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vec k7 = rhs(y_new);
    const Vec err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double scale = tol + tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      norm = std::max(norm, std::abs(err[i]) / scale);
    }
    if (!std::isfinite(norm)) throw Error(ErrorCode::IntegrationFailure, "non-finite state during flow");
    if (norm <= 1.0) {
      done = (h >= total - done) ? total : done + h;
      y = y_new;
      k1 = k7;
    }
    const double factor = norm == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < 1e-15 * std::max(1.0, total)) throw Error(ErrorCode::IntegrationFailure, "step size underflow");
  }
  throw Error(ErrorCode::IntegrationFailure, "step budget exhausted");
}

Vec integrate_flow(const HamiltonianSpec& h, double t, const Vec& x, Mat* jacobian, const FlowOptions& options) {
  const int d = h.dim();
  if (x.size() != d) throw Error(ErrorCode::DomainViolation, "flow point has wrong dimension");
  const Mat j = standard_j(d);
  if (jacobian == nullptr) {
    return integrate_autonomous([&](const Vec& y) { return h.vector_field(y); }, x, t, options);
  }
  Vec y0(d + d * d);
  y0.head(d) = x;
  Eigen::Map<Mat>(y0.data() + d, d, d) = Mat::Identity(d, d);
  const auto rhs = [&](const Vec& y) {
    Vec out(d + d * d);
    const Vec state = y.head(d);
    out.head(d) = h.vector_field(state);
    const Eigen::Map<const Mat> var(y.data() + d, d, d);
    Eigen::Map<Mat>(out.data() + d, d, d) = j * h.hessian(state) * var;
    return out;
  };
  const Vec y = integrate_autonomous(rhs, y0, t, options);
  *jacobian = Eigen::Map<const Mat>(y.data() + d, d, d);
  return y.head(d);
}

Vec hamiltonian_flow(const HamiltonianSpec& h, double t, const Vec& x, Mat* jacobian, const FlowOptions& options) {
  if (h.kind() == HamiltonianSpec::Kind::Linear) {
    if (x.size() != h.dim()) throw Error(ErrorCode::DomainViolation, "flow point has wrong dimension");
    if (jacobian) *jacobian = Mat::Identity(h.dim(), h.dim());
    return x + t * h.v0();
  }
  return integrate_flow(h, t, x, jacobian, options);
}

}  // namespace sympfold
