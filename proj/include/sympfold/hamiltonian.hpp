#pragma once

#include <functional>

#include <json.hpp>

#include "sympfold/common.hpp"
#include "sympfold/cutoff.hpp"

namespace sympfold {

/// Autonomous Hamiltonians on R^{2n} with analytic gradient and Hessian.
///   Linear:        H(x) = omega(v0, x); vector field is the constant v0.
///   CutoffLinear:  H(x) = rho(x_0) * omega(v0, x), rho a cutoff in the first q coordinate.
///   QPProduct:     H(x) = q p chi(q) chi(p) on the first factor, chi a symmetric bump.
class HamiltonianSpec {
 public:
  enum class Kind { Linear, CutoffLinear, QPProduct };

  static HamiltonianSpec linear(Vec v0);
  static HamiltonianSpec cutoff_linear(CutoffProfile rho, Vec v0);
  static HamiltonianSpec qp_product(int dim, double inner_radius, double outer_radius);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& v0() const { return v0_; }
  const CutoffProfile& cutoff() const { return cutoff_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  /// X_H = J grad H, i.e. q' = dH/dp and p' = -dH/dq.
  Vec vector_field(const Vec& x) const;

  nlohmann::json to_json() const;
  static HamiltonianSpec from_json(const nlohmann::json& j);

 private:
  Kind kind_ = Kind::Linear;
  int dim_ = 0;
  Vec v0_;
  CutoffProfile cutoff_;
};

struct FlowOptions {
  // Tighter than the 1e-10 accuracy target so that central differences of the
  // time-t map (step 1e-5) are not dominated by step-size selection noise.
  double tolerance = 1e-12;
  long max_steps = 2'000'000;
};

/// Time-t map of the Hamiltonian flow, adaptive Dormand-Prince 5(4).
/// When jacobian is non-null the variational equation dY/dt = J Hess(H) Y is
/// integrated alongside and the derivative of the time-t map is written there.
/// Linear Hamiltonians use the closed form x + t v0.
Vec hamiltonian_flow(const HamiltonianSpec& h, double t, const Vec& x, Mat* jacobian = nullptr,
                     const FlowOptions& options = {});

/// Generic ODE path (no closed form shortcut); exposed so the closed form can be cross-checked.
Vec integrate_flow(const HamiltonianSpec& h, double t, const Vec& x, Mat* jacobian = nullptr,
                   const FlowOptions& options = {});

/// Adaptive Dormand-Prince integration of y' = f(y) from 0 to t_end.
Vec integrate_autonomous(const std::function<Vec(const Vec&)>& rhs, const Vec& y0, double t_end,
                         const FlowOptions& options = {});

}  // namespace sympfold
