#pragma once

#include <json.hpp>

namespace sympfold {

/// C-infinity step on [0,1]: 0 for u <= 0, 1 for u >= 1, built from the
/// exp(-1/u) blend. Derivatives are analytic.
double smooth_step(double u);
double smooth_step_d1(double u);
double smooth_step_d2(double u);
/// Integral of smooth_step over [0, u] for u in [0, 1]; equals 1/2 at u = 1.
double smooth_step_integral(double u);

/// Real cutoff function with exact 0/1 plateaus.
///   step-up:  0 on (-inf, a], 1 on [b, inf)
///   bump:     0 outside (a, d), 1 on [b, c], rising on [a,b], falling on [c,d]
class CutoffProfile {
 public:
  enum class Kind { StepUp, Bump };

  CutoffProfile() = default;
  static CutoffProfile step_up(double a, double b);
  static CutoffProfile bump(double a, double b, double c, double d);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  /// Antiderivative normalized to vanish on (-inf, a].
  double integral(double x) const;
  /// Upper bound on |derivative| (the blend's peak slope is 2 per unit width).
  double max_abs_derivative() const;

  nlohmann::json to_json() const;
  static CutoffProfile from_json(const nlohmann::json& j);

  bool operator==(const CutoffProfile&) const = default;

 private:
  Kind kind_ = Kind::StepUp;
  double a_ = 0, b_ = 1, c_ = 0, d_ = 0;
};

/// Increasing function g with g' = base + (peak - base) * w, where w is a cutoff.
/// Used by the planar fiber lift (q,p) -> (q / g'(p), g(p)).
class SlopeProfile {
 public:
  SlopeProfile() = default;
  SlopeProfile(double base, double peak, CutoffProfile weight);

  double base() const { return base_; }
  double peak() const { return peak_; }
  const CutoffProfile& weight() const { return weight_; }

  double value(double p) const;
  double slope(double p) const;
  double slope_derivative(double p) const;

  nlohmann::json to_json() const;
  static SlopeProfile from_json(const nlohmann::json& j);

 private:
  double base_ = 1.0;
  double peak_ = 1.0;
  CutoffProfile weight_;
};

}  // namespace sympfold
