#include "sympfold/cutoff.hpp"

#include <array>
#include <cmath>

#include "sympfold/common.hpp"

namespace sympfold {

namespace {

// phi(u) = 1/u - 1/(1-u); smooth_step(u) = 1 / (1 + exp(phi(u))).
struct Logistic {
  double l;       // 1 / (1 + e^phi)
  double l1ml;    // l (1 - l), computed without cancellation
};

Logistic logistic_of(double phi) {
  if (phi > 0) {
    const double e = std::exp(-phi);
    return {e / (1.0 + e), e / ((1.0 + e) * (1.0 + e))};
  }
  const double e = std::exp(phi);
  return {1.0 / (1.0 + e), e / ((1.0 + e) * (1.0 + e))};
}

constexpr std::array<double, 8> kGaussNodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> kGaussWeights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

double gauss_integral(double lo, double hi, int panels) {
  double total = 0.0;
  const double w = (hi - lo) / panels;
  for (int k = 0; k < panels; ++k) {
    const double mid = lo + (k + 0.5) * w;
    for (std::size_t i = 0; i < kGaussNodes.size(); ++i)
      total += kGaussWeights[i] * smooth_step(mid + 0.5 * w * kGaussNodes[i]);
  }
  return 0.5 * w * total;
}

}  // namespace

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return logistic_of(1.0 / u - 1.0 / (1.0 - u)).l;
}

double smooth_step_d1(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double v = 1.0 - u;
  const auto lg = logistic_of(1.0 / u - 1.0 / v);
  const double dphi = -1.0 / (u * u) - 1.0 / (v * v);
  return -lg.l1ml * dphi;
}

double smooth_step_d2(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double v = 1.0 - u;
  const auto lg = logistic_of(1.0 / u - 1.0 / v);
  const double dphi = -1.0 / (u * u) - 1.0 / (v * v);
  const double ddphi = 2.0 / (u * u * u) - 2.0 / (v * v * v);
  return lg.l1ml * ((1.0 - 2.0 * lg.l) * dphi * dphi - ddphi);
}

double smooth_step_integral(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 0.5 + (u - 1.0);
  // s(u) + s(1-u) = 1 gives the exact value 1/2 at u = 1; integrate the shorter side.
  if (u <= 0.5) return gauss_integral(0.0, u, 16);
  return 0.5 - (1.0 - u) + gauss_integral(0.0, 1.0 - u, 16);
}

CutoffProfile CutoffProfile::step_up(double a, double b) {
  if (!(a < b)) throw Error(ErrorCode::Precondition, "step-up cutoff needs a < b");
  CutoffProfile c;
  c.kind_ = Kind::StepUp;
  c.a_ = a;
  c.b_ = b;
  return c;
}

CutoffProfile CutoffProfile::bump(double a, double b, double c_, double d) {
  if (!(a < b && b <= c_ && c_ < d)) throw Error(ErrorCode::Precondition, "bump cutoff needs a < b <= c < d");
  CutoffProfile c;
  c.kind_ = Kind::Bump;
  c.a_ = a;
  c.b_ = b;
  c.c_ = c_;
  c.d_ = d;
  return c;
}

double CutoffProfile::value(double x) const {
  const double up = smooth_step((x - a_) / (b_ - a_));
  if (kind_ == Kind::StepUp) return up;
  return up * (1.0 - smooth_step((x - c_) / (d_ - c_)));
}

double CutoffProfile::derivative(double x) const {
  const double w1 = b_ - a_;
  const double up = smooth_step((x - a_) / w1);
  const double dup = smooth_step_d1((x - a_) / w1) / w1;
  if (kind_ == Kind::StepUp) return dup;
  const double w2 = d_ - c_;
  const double down = 1.0 - smooth_step((x - c_) / w2);
  const double ddown = -smooth_step_d1((x - c_) / w2) / w2;
  return dup * down + up * ddown;
}

double CutoffProfile::second_derivative(double x) const {
  const double w1 = b_ - a_;
  const double u1 = (x - a_) / w1;
  const double up = smooth_step(u1);
  const double dup = smooth_step_d1(u1) / w1;
  const double d2up = smooth_step_d2(u1) / (w1 * w1);
  if (kind_ == Kind::StepUp) return d2up;
  const double w2 = d_ - c_;
  const double u2 = (x - c_) / w2;
  const double down = 1.0 - smooth_step(u2);
  const double ddown = -smooth_step_d1(u2) / w2;
  const double d2down = -smooth_step_d2(u2) / (w2 * w2);
  return d2up * down + 2.0 * dup * ddown + up * d2down;
}

double CutoffProfile::integral(double x) const {
  const double w1 = b_ - a_;
  if (kind_ == Kind::StepUp) return w1 * smooth_step_integral((x - a_) / w1);
  // Rise and fall transitions never overlap (b <= c), so the pieces add up.
  const double w2 = d_ - c_;
  if (x <= c_) return w1 * smooth_step_integral((x - a_) / w1);
  const double plateau = 0.5 * w1 + (c_ - b_);
  const double u2 = std::min((x - c_) / w2, 1.0);
  // Integral of (1 - s) over [0,u2] is u2 - S(u2).
  return plateau + w2 * (u2 - smooth_step_integral(u2));
}

double CutoffProfile::max_abs_derivative() const {
  const double w = (kind_ == Kind::StepUp) ? (b_ - a_) : std::min(b_ - a_, d_ - c_);
  return 2.0 / w;
}

nlohmann::json CutoffProfile::to_json() const {
  if (kind_ == Kind::StepUp) return {{"kind", "step_up"}, {"a", a_}, {"b", b_}};
  return {{"kind", "bump"}, {"a", a_}, {"b", b_}, {"c", c_}, {"d", d_}};
}

CutoffProfile CutoffProfile::from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "step_up") return step_up(j.at("a").get<double>(), j.at("b").get<double>());
  if (kind == "bump")
    return bump(j.at("a").get<double>(), j.at("b").get<double>(), j.at("c").get<double>(),
                j.at("d").get<double>());
  throw Error(ErrorCode::Parse, "unknown cutoff kind '" + kind + "'");
}

SlopeProfile::SlopeProfile(double base, double peak, CutoffProfile weight)
    : base_(base), peak_(peak), weight_(weight) {
  if (!(base > 0 && peak > 0)) throw Error(ErrorCode::Precondition, "slope profile must stay positive");
}

double SlopeProfile::value(double p) const { return base_ * p + (peak_ - base_) * weight_.integral(p); }

double SlopeProfile::slope(double p) const { return base_ + (peak_ - base_) * weight_.value(p); }

double SlopeProfile::slope_derivative(double p) const { return (peak_ - base_) * weight_.derivative(p); }

nlohmann::json SlopeProfile::to_json() const {
  return {{"base", base_}, {"peak", peak_}, {"weight", weight_.to_json()}};
}

SlopeProfile SlopeProfile::from_json(const nlohmann::json& j) {
  return SlopeProfile(j.at("base").get<double>(), j.at("peak").get<double>(),
                      CutoffProfile::from_json(j.at("weight")));
}

}  // namespace sympfold
