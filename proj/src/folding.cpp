#include "sympfold/folding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "sympfold/json_util.hpp"
#include "sympfold/spatial_grid.hpp"

namespace sympfold {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail_stage(const std::string& stage, const std::string& what) {
  throw Error(ErrorCode::CertificationFailed, "stage " + stage + ": " + what);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

MapExpr lift(const MapExpr& planar, int dim) { return dim == 2 ? planar : MapExpr::product2d(planar, dim); }

Vec uniform_in(const Box& box, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec x(box.dim());
  for (int c = 0; c < box.dim(); ++c) x[c] = box.lo[c] + (box.hi[c] - box.lo[c]) * u(rng);
  return x;
}

Box concat(const Box& a, const Box& b) {
  Box out;
  out.lo.resize(a.dim() + b.dim());
  out.hi.resize(a.dim() + b.dim());
  out.lo << a.lo, b.lo;
  out.hi << a.hi, b.hi;
  return out;
}

Box scaled_box(const Box& b, double c) { return b.dim() ? Box(Vec(b.lo * c), Vec(b.hi * c)) : b; }

// Map taking rectangle `from` onto the centered sub-rectangle of `to` with the
// same area, by (q,p) -> (lambda q, p / lambda) and a translation.
MapExpr centered_fit(const Rect& from, const Rect& to, double& fill, Rect& image) {
  const double lambda = std::sqrt((from.height() / to.height()) * (to.width() / from.width()));
  fill = std::sqrt(from.area() / to.area());
  const double cq = 0.5 * (to.q0 + to.q1), cp = 0.5 * (to.p0 + to.p1);
  const double fq = 0.5 * (from.q0 + from.q1), fp = 0.5 * (from.p0 + from.p1);
  const double hw = 0.5 * lambda * from.width(), hh = 0.5 * from.height() / lambda;
  image = {cq - hw, cq + hw, cp - hh, cp + hh};
  return MapExpr::diagonal_scaling(lambda, cq - lambda * fq, cp - fp / lambda);
}

double delta_for(double c2, double area_q, double area_r, double eps_cap) {
  const double eps = std::min(0.5 * (c2 * area_r - 1.0), eps_cap);
  return 0.5 * std::min(0.5 * eps, 1.0 - 0.5 * c2 * area_q);
}

ContainmentReport containment(const std::vector<Vec>& images, const Rect& R, const Box& U, double margin) {
  ContainmentReport out;
  out.points = images.size();
  out.min_margin = kInf;
  for (const auto& y : images) {
    double m = std::min({y[0] - R.q0, R.q1 - y[0], y[1] - R.p0, R.p1 - y[1]});
    for (int c = 0; c < U.dim(); ++c) m = std::min({m, y[2 + c] - U.lo[c], U.hi[c] - y[2 + c]});
    out.min_margin = std::min(out.min_margin, m);
    if (m > margin) ++out.inside;
  }
  if (images.empty()) out.min_margin = 0;
  return out;
}

std::vector<Vec> map_points(const MapExpr& map, const std::vector<Vec>& points) {
  std::vector<Vec> out(points.size());
  parallel_for(points.size(), [&](std::size_t i) { out[i] = map.evaluate(points[i]); });
  return out;
}

}  // namespace

// ---------------------------------------------------------------- regions

VDelta::VDelta(double delta_) : delta(delta_) {
  if (!(delta > 0 && delta < 1)) throw Error(ErrorCode::Precondition, "delta must lie in (0,1)");
}

bool VDelta::contains(double q, double p) const {
  if (!(q > 0 && q < 1 && p > -1 && p < 1)) return false;
  return !(q >= delta && p >= 0 && p <= delta);
}

std::vector<Point2> VDelta::outline() const {
  return {{0, -1}, {1, -1}, {1, 0}, {delta, 0}, {delta, delta}, {1, delta}, {1, 1}, {0, 1}};
}

std::vector<Point2> fold_region_outline(double eps) {
  return {{0, -1}, {1, -1}, {1, 0}, {eps, 0}, {eps, 1}, {0, 1}};
}

// ---------------------------------------------------------------- problem and parameters

FoldProblem::FoldProblem(Rect Q_, Rect R_, Box K_, Box U_, RectifiableSet A_)
    : Q(Q_), R(R_), K(std::move(K_)), U(std::move(U_)), A(std::move(A_)) {
  const int dim = A.ambient_dim();
  if (dim < 2 || dim % 2) throw Error(ErrorCode::BadDimension, "fold needs R^{2n}");
  if (K.dim() != dim - 2 || U.dim() != dim - 2)
    throw Error(ErrorCode::BadDimension, "K and U must cover the remaining " + std::to_string(dim - 2) + " coordinates");
  if (!(Q.width() > 0 && Q.height() > 0 && R.width() > 0 && R.height() > 0))
    throw Error(ErrorCode::Precondition, "Q and R must be nonempty rectangles");
  for (int c = 0; c < K.dim(); ++c)
    if (!(U.lo[c] < K.lo[c] && K.hi[c] < U.hi[c])) throw Error(ErrorCode::Precondition, "U must contain K strictly");
}

double normalization_factor(double area_q, double area_r) {
  if (!(area_q < 2 * area_r)) throw Error(ErrorCode::BadAreas, "need |Q| < 2|R|, got " + fmt(area_q) + " and " + fmt(area_r));
  if (area_q < 2 && area_r > 1) return 1.0;
  // Power-of-two area factors keep the arithmetic exact; pick the best one if any fits.
  double best_c2 = 0, best_delta = 0;
  for (int k = -60; k <= 60; ++k) {
    const double c2 = std::ldexp(1.0, -k);
    if (c2 * area_q < 2 && c2 * area_r > 1) {
      const double d = delta_for(c2, area_q, area_r, kInf);
      if (d > best_delta) best_delta = d, best_c2 = c2;
    }
  }
  if (best_c2 > 0) return std::sqrt(best_c2);
  // eps/2 = 1 - c^2|Q|/2 with eps = (c^2|R| - 1)/2.
  return std::sqrt(5.0 / (area_r + 2.0 * area_q));
}

Normalization normalize(const FoldProblem& problem) {
  Normalization out{normalization_factor(problem.Q.area(), problem.R.area()), problem.Q, problem.R, problem.K,
                    problem.U, problem.A};
  if (out.identity()) return out;
  const double c = out.factor;
  out.Q = problem.Q.scaled(c);
  out.R = problem.R.scaled(c);
  out.K = scaled_box(problem.K, c);
  out.U = scaled_box(problem.U, c);
  const int dim = problem.dim();
  // A conformal dilation of the data, not a symplectic map; the fold map undoes it by conjugation.
  out.A = image(problem.A, MapExpr::affine(Mat::Identity(dim, dim) * c, Vec::Zero(dim)), c);
  return out;
}

bool FoldParameters::feasible() const {
  const bool eps_ok = eps > 0 && eps < area_r - 1;
  const bool delta_ok = delta > 0 && delta < std::min(eps / 2, 1 - area_q / 2);
  const bool prime_ok = eps_prime > delta && eps_prime < eps / 2;
  const bool t_ok = t > 0 && t < std::min({t0, t1, t2});
  return eps_ok && delta_ok && prime_ok && t_ok;
}

nlohmann::json FoldParameters::to_json() const {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"factor", factor},   {"eps", eps},           {"delta", delta},       {"eps_prime", eps_prime},
                      {"area_q", area_q},   {"area_r", area_r},     {"t", t},               {"t0", num(t0)},
                      {"t1", num(t1)},      {"t2", num(t2)},        {"t_max", num(t_max)},  {"speed_max", speed_max},
                      {"tau", tau},         {"u_margin", num(u_margin)}};
  j["v0"] = v0.size() ? vec_to_json(v0) : nlohmann::json(nullptr);
  return j;
}

FoldParameters choose_parameters(double area_q, double area_r, double eps_cap) {
  if (!(area_q < 2 && area_r > 1)) throw Error(ErrorCode::BadAreas, "parameters need |Q| < 2 and |R| > 1");
  FoldParameters p;
  p.area_q = area_q;
  p.area_r = area_r;
  p.eps = std::min(0.5 * (area_r - 1), eps_cap);
  p.delta = 0.5 * std::min(p.eps / 2, 1 - area_q / 2);
  p.eps_prime = 0.5 * (p.delta + p.eps / 2);
  return p;
}

// ---------------------------------------------------------------- embeddings

nlohmann::json ThetaEmbedding::to_json() const {
  return {{"trivial", trivial}, {"k", k},       {"beta", beta},          {"gamma", gamma},
          {"mu", mu},           {"map", map.to_json()}, {"certified_points", certified_points}};
}

ThetaEmbedding theta_embedding(const Rect& Q, double delta, std::size_t cert_points, std::uint64_t seed) {
  const VDelta region(delta);
  const double area = Q.area();
  if (area > 2 - 2 * delta)
    throw Error(ErrorCode::Precondition, "|Q| = " + fmt(area) + " exceeds 2 - 2 delta = " + fmt(2 - 2 * delta));
  ThetaEmbedding out;
  out.mu = delta / 20;
  const double width = 1 - 2 * out.mu;
  const double lambda = width / Q.width();
  const double height = area / width;
  if (height < width) {
    // Fits in the lower half without touching the slit.
    out.trivial = true;
    out.map = MapExpr::diagonal_scaling(lambda, out.mu - lambda * Q.q0, -1 + out.mu - Q.p0 / lambda);
  } else {
    // The band [0, beta] is stretched by k onto [0, 1.02 delta] and squeezed into q < 0.8 delta.
    out.k = 1.25 * (out.mu + width) / delta;
    const double lifted = 1.02 * delta;
    out.beta = lifted / out.k;
    const double slack = 2 - 2 * out.mu - height - lifted * (1 - 1 / out.k);
    if (!(slack > 0)) throw Error(ErrorCode::Precondition, "Q leaves no room around the slit");
    out.gamma = 0.5 * slack / (out.k - 1);
    const double p0 = -1 + out.mu + (out.k - 1) * out.gamma / 2;
    const SlopeProfile g(1.0, out.k, CutoffProfile::bump(-out.gamma, 0.0, out.beta, out.beta + out.gamma));
    Vec down(2);
    down << 0.0, -g.value(0.0);
    out.map = MapExpr::compose({MapExpr::translation(down), MapExpr::fiber_lift(g),
                                MapExpr::diagonal_scaling(lambda, out.mu - lambda * Q.q0, p0 - Q.p0 / lambda)});
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uq(Q.q0, Q.q1), up(Q.p0, Q.p1);
  Vec x(2);
  for (std::size_t i = 0; i < cert_points; ++i) {
    x << uq(rng), up(rng);
    const Vec y = out.map.evaluate(x);
    if (!region.contains(y[0], y[1]))
      throw Error(ErrorCode::EmbeddingCertificationFailed,
                  "point (" + fmt(x[0]) + ", " + fmt(x[1]) + ") lands at (" + fmt(y[0]) + ", " + fmt(y[1]) + ")");
  }
  out.certified_points = cert_points;
  return out;
}

nlohmann::json ChiEmbedding::to_json() const {
  return {{"tau", tau},         {"kappa", kappa},          {"fill", fill}, {"source_box", rect_to_json(source_box)},
          {"image_box", rect_to_json(image_box)}, {"map", map.to_json()}};
}

ChiEmbedding chi_embedding(double eps, const Rect& R) {
  if (!(eps > 0 && eps < 1)) throw Error(ErrorCode::Precondition, "eps must lie in (0,1)");
  ChiEmbedding out;
  out.tau = eps / 40;
  out.kappa = eps + 2 * out.tau;
  // Above p = 3 tau only the arm [-tau, eps + tau] remains; slope kappa widens it to [-tau, 1 - tau].
  const double start = 3 * out.tau;
  const SlopeProfile g(1.0, out.kappa, CutoffProfile::step_up(start, start + eps / 4));
  Vec right(2), left(2);
  right << out.tau, 0.0;
  left << -out.tau, 0.0;
  const MapExpr flatten =
      MapExpr::compose({MapExpr::translation(left), MapExpr::fiber_lift(g), MapExpr::translation(right)});
  out.source_box = {-out.tau, 1 + out.tau, -1 - out.tau, g.value(1 + out.tau)};
  if (!(out.source_box.area() < R.area()))
    throw Error(ErrorCode::Precondition, "flattened fold region (area " + fmt(out.source_box.area()) +
                                             ") does not fit R (area " + fmt(R.area()) + ")");
  const MapExpr fit = centered_fit(out.source_box, R, out.fill, out.image_box);
  out.map = MapExpr::compose({fit, flatten});
  return out;
}

// ---------------------------------------------------------------- plan

HamiltonianSpec FoldPlan::hamiltonian() const {
  return HamiltonianSpec::cutoff_linear(CutoffProfile::step_up(params.delta, params.eps_prime), v0);
}

MapExpr FoldPlan::glue(double t) const {
  std::vector<MapExpr> plus{lift(chi.map, dim)};
  if (t != 0) plus.push_back(MapExpr::ham_flow(hamiltonian(), t));
  plus.push_back(lift(psi, dim));
  return MapExpr::glue(1, 0.0, MapExpr::compose(std::move(plus)), lift(chi.map, dim), band);
}

MapExpr FoldPlan::normalized_map(double t, bool fold) const {
  if (!fold) return MapExpr::compose({lift(chi.map, dim), lift(theta.map, dim)});
  return MapExpr::compose({glue(t), lift(theta.map, dim)});
}

MapExpr FoldPlan::map(double t, bool fold) const {
  const MapExpr inner = normalized_map(t, fold);
  return params.factor == 1.0 ? inner : MapExpr::rescaled(params.factor, inner);
}

// ---------------------------------------------------------------- reports

nlohmann::json ContainmentReport::to_json() const {
  return {{"points", points}, {"inside", inside}, {"fraction", fraction()}, {"min_margin", min_margin}, {"pass", pass()}};
}

nlohmann::json FoldReport::to_json() const {
  nlohmann::json j = {{"pass", pass},
                      {"failed_stage", failed_stage.empty() ? nlohmann::json(nullptr) : nlohmann::json(failed_stage)},
                      {"folded", folded},
                      {"parameters", plan.params.to_json()},
                      {"parameters_feasible", folded && plan.params.t > 0 ? plan.params.feasible() : false},
                      {"theta", plan.theta.to_json()},
                      {"chi", plan.chi.to_json()},
                      {"theta_cloud_outside", theta_cloud_outside},
                      {"displacement_clearance", displacement_clearance},
                      {"identity_residual", identity_residual},
                      {"max_displacement", max_displacement},
                      {"symplectic", symplectic.to_json()},
                      {"glue", glue.to_json()},
                      {"injectivity", injectivity.to_json()},
                      {"containment", containment.to_json()},
                      {"image_box", rect_to_json(image_box)},
                      {"map", map.to_json()}};
  j["direction"] = direction ? direction->to_json() : nlohmann::json(nullptr);
  j["witness"] = witness ? witness->to_json() : nlohmann::json(nullptr);
  return j;
}

// ---------------------------------------------------------------- fold

FoldReport fold_once(const FoldProblem& problem, const FoldConfig& config) {
  const int dim = problem.dim();
  const int n = dim / 2;
  FoldReport report;
  auto check = [&](bool ok, const std::string& stage, const std::string& what) {
    if (ok) return;
    if (report.failed_stage.empty()) report.failed_stage = stage;
    if (config.strict) fail_stage(stage, what);
  };

  if (!config.witness_scales.empty()) {
    report.witness = negligibility_decay_test(problem.A, n, config.witness_scales, split_seed(problem.seed, 9));
    check(report.witness->consistent, "negligibility-witness",
          "decay test at exponent " + std::to_string(n) + " is " + report.witness->verdict());
  }

  // Sampled A must sit in the closure of Q x K.
  const bool empty = problem.A.is_empty();
  auto draw = [&](const RectifiableSet& set, std::size_t count, std::uint64_t s) {
    if (empty) {
      SampleCloud none;
      none.dim = dim;
      return none;
    }
    return sample(set, count, s);
  };
  const auto scan = draw(problem.A, problem.scan_samples, split_seed(problem.seed, 1));
  for (const auto& x : scan.points) {
    bool inside = x[0] >= problem.Q.q0 && x[0] <= problem.Q.q1 && x[1] >= problem.Q.p0 && x[1] <= problem.Q.p1;
    for (int c = 0; c < problem.K.dim(); ++c) inside = inside && x[2 + c] >= problem.K.lo[c] && x[2 + c] <= problem.K.hi[c];
    if (!inside) throw Error(ErrorCode::Precondition, "sampled A leaves Q x K");
  }

  const Normalization norm = normalize(problem);
  const double c = norm.factor;
  FoldPlan& plan = report.plan;
  plan.dim = dim;
  plan.params = choose_parameters(norm.Q.area(), norm.R.area(), config.eps_cap);
  FoldParameters& prm = plan.params;
  prm.factor = c;
  plan.theta = theta_embedding(norm.Q, prm.delta, config.theta_samples, split_seed(problem.seed, 10));
  plan.chi = chi_embedding(prm.eps, norm.R);
  prm.tau = plan.chi.tau;
  plan.psi = MapExpr::shear(CutoffProfile::step_up(prm.eps / 2, prm.eps));
  {
    Vec lo(2), hi(2);
    lo << 0.0, -prm.delta;
    hi << prm.delta, prm.delta;
    plan.band = concat(Box(lo, hi), norm.K);
  }
  prm.u_margin = kInf;
  for (int k = 0; k < norm.K.dim(); ++k)
    prm.u_margin = std::min({prm.u_margin, norm.K.lo[k] - norm.U.lo[k], norm.U.hi[k] - norm.K.hi[k]});

  // Speed of the cut-off flow on the thickened fold region times U:
  // |rho v0 + H rho' J e_q| <= |v0| + |x| |v0| max|rho'|, doubled for safety.
  {
    Vec lo(2), hi(2);
    lo << -prm.tau, -1 - prm.tau;
    hi << 1 + prm.tau, 1 + prm.tau;
    const Box region = concat(Box(lo, hi), norm.U);
    const double reach = region.lo.cwiseAbs().cwiseMax(region.hi.cwiseAbs()).norm();
    const double slope = CutoffProfile::step_up(prm.delta, prm.eps_prime).max_abs_derivative();
    prm.speed_max = 2 * (1 + reach * slope);
  }
  prm.t1 = prm.delta / prm.speed_max;
  prm.t2 = std::min(prm.tau, prm.u_margin) / prm.speed_max;
  prm.t0 = prm.eps / 2 - prm.eps_prime;  // refined once v0 is known
  prm.t_max = 0.5 * std::min({prm.t0, prm.t1, prm.t2});

  const MapExpr theta = lift(plan.theta.map, dim);
  const MapExpr psi = lift(plan.psi, dim);
  const RectifiableSet embedded = empty ? norm.A : image(norm.A, theta, 0.0);
  const auto embedded_cloud = map_cloud(theta, draw(norm.A, problem.scan_samples, split_seed(problem.seed, 1)));
  const VDelta vdelta(prm.delta);
  for (const auto& y : embedded_cloud.points) report.theta_cloud_outside += !vdelta.contains(y[0], y[1]);
  check(report.theta_cloud_outside == 0, "theta-embedding",
        std::to_string(report.theta_cloud_outside) + " sampled points leave V_delta");

  const auto [plus, minus] = split_by_p_sign(embedded);
  const double tol_scale = 1e-6;
  double tol = config.clearance_tol;
  report.folded = !plus.is_empty();
  double t = 0;
  HamiltonianSpec flow_h;
  if (report.folded && !minus.is_empty()) {
    const double shear_lip = 1 + CutoffProfile::step_up(prm.eps / 2, prm.eps).max_abs_derivative();
    DisplacementProblem dp(image(plus, psi, shear_lip), minus);
    dp.a_samples = dp.b_samples = problem.scan_samples;
    dp.seed = split_seed(problem.seed, 2);
    dp.clearance_tol = tol;
    DisplacementResult found;
    try {
      found = find_generic_direction(dp, config.directions, prm.t_max, config.t_samples);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoDirectionFound) throw;
      throw Error(ErrorCode::NoAdmissibleTime, e.what());
    }
    report.direction = found;
    tol = found.clearance_tol;
    plan.v0 = prm.v0 = found.v0;
    if (std::abs(found.v0[0]) > 0) prm.t0 = (prm.eps / 2 - prm.eps_prime) / std::abs(found.v0[0]);
    const double bound = std::min({prm.t0, prm.t1, prm.t2});
    flow_h = plan.hamiltonian();

    const auto plus_big = dp.a_cloud(10);
    const auto minus_big = dp.b_cloud(10);
    std::vector<double> tried;
    for (int k = 0; k < 64 && t == 0; ++k) {
      const double target = prm.t_max / std::ldexp(1.0, k);
      double pick = 0;
      for (const auto& ct : found.admissible_times)
        if (ct.t <= target && ct.t < bound && std::find(tried.begin(), tried.end(), ct.t) == tried.end())
          pick = std::max(pick, ct.t);
      if (pick == 0) {
        if (found.admissible_times.empty() || target < found.admissible_times.front().t) break;
        continue;
      }
      tried.push_back(pick);
      try {
        displace_certify(dp, found, pick);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::CertificationFailed) throw;
        continue;
      }
      const MapExpr flow = MapExpr::ham_flow(flow_h, pick);
      const auto moved = map_points(flow, plus_big.points);
      const double clearance = min_cross_distance(moved, minus_big.points).distance;
      if (clearance > tol) {
        t = pick;
        report.displacement_clearance = clearance;
      }
    }
    if (t == 0)
      throw Error(ErrorCode::NoAdmissibleTime, "no scanned time below " + fmt(prm.t_max) +
                                                   " separates the folded halves; retry with more samples or another seed");
    prm.t = t;
    report.max_displacement = t * prm.speed_max;

    // The flow is the identity on q <= delta.
    std::mt19937_64 rng(split_seed(problem.seed, 3));
    Vec lo(2), hi(2);
    lo << 0.0, -1.0;
    hi << prm.delta, 1.0;
    const Box strip = concat(Box(lo, hi), norm.K);
    std::vector<Vec> pts(config.identity_samples);
    for (auto& x : pts) x = uniform_in(strip, rng);
    const auto moved = map_points(MapExpr::ham_flow(flow_h, t), pts);
    for (std::size_t i = 0; i < pts.size(); ++i)
      report.identity_residual = std::max(report.identity_residual, (moved[i] - pts[i]).lpNorm<Eigen::Infinity>());
    check(report.identity_residual <= config.identity_tol, "flow-identity",
          "flow moves points with q <= delta by " + fmt(report.identity_residual));
  }
  if (tol <= 0) tol = tol_scale * std::max(embedded_cloud.empty() ? 1.0 : embedded_cloud.bounds().diameter(), 1e-300);

  report.map = plan.map(t, report.folded);
  const MapExpr glue = plan.glue(t);
  if (report.folded) {
    std::mt19937_64 rng(split_seed(problem.seed, 4));
    SampleCloud band;
    band.dim = dim;
    for (std::size_t i = 0; i < config.band_samples; ++i) band.add(uniform_in(plan.band, rng), -1, Vec());
    report.glue = glue_check(glue, band, config.glue_tol);
    check(report.glue.pass, "glue", "branches differ by " + fmt(std::max(report.glue.value_discrepancy,
                                                                          report.glue.jacobian_discrepancy)));
  }

  const auto sym_cloud = draw(problem.A, problem.symplectic_samples, split_seed(problem.seed, 5));
  report.symplectic = check_symplectic(report.map, sym_cloud, config.symplectic_tol);
  check(report.symplectic.pass, "symplecticity", "residual " + fmt(report.symplectic.max_residual));

  const auto cert = draw(problem.A, problem.cert_samples, split_seed(problem.seed, 6));
  const auto images = map_points(report.map, cert.points);
  report.containment = containment(images, problem.R, problem.U, tol / c);
  check(report.containment.pass(), "containment",
        std::to_string(report.containment.points - report.containment.inside) + " of " +
            std::to_string(report.containment.points) + " points leave R x U");
  report.injectivity = check_injective(report.map, cert, config.preimage_sep);
  check(report.injectivity.pass, "injectivity", "image margin " + fmt(report.injectivity.margin));

  report.image = empty ? problem.A : image(problem.A, report.map, 0.0);
  report.image_box = plan.chi.image_box.scaled(1.0 / c);

  if (config.snapshots) {
    std::vector<Vec> sheared, displaced;
    const MapExpr flow = t != 0 ? MapExpr::ham_flow(flow_h, t) : MapExpr::identity(dim);
    for (const auto& y : embedded_cloud.points) {
      const Vec s = y[1] > 0 ? psi.evaluate(y) : y;
      sheared.push_back(s);
      displaced.push_back(y[1] > 0 ? flow.evaluate(s) : s);
    }
    report.snapshots.push_back({"embedded", first_factor(embedded_cloud.points), {vdelta.outline()}});
    report.snapshots.push_back({"sheared", first_factor(sheared), {fold_region_outline(prm.eps)}});
    report.snapshots.push_back({"displaced", first_factor(displaced), {fold_region_outline(prm.eps)}});
    report.snapshots.push_back({"final", first_factor(map_points(report.map, scan.points)), {rect_outline(problem.R)}});
  }
  report.pass = report.failed_stage.empty();
  return report;
}

// ---------------------------------------------------------------- squeeze

std::pair<Rect, Box> sampled_extent(const RectifiableSet& set, std::size_t count, std::uint64_t seed,
                                    double relative_margin) {
  const Box b = sampled_bounds(set, count, seed);
  const Vec pad = (b.extent() * relative_margin).array() + 1e-9;
  const Box grown(Vec(b.lo - pad), Vec(b.hi + pad));
  const Rect first{grown.lo[0], grown.hi[0], grown.lo[1], grown.hi[1]};
  const int rest = set.ambient_dim() - 2;
  return {first, Box(Vec(grown.lo.tail(rest)), Vec(grown.hi.tail(rest)))};
}

nlohmann::json SqueezeReport::to_json() const {
  nlohmann::json steps_json = nlohmann::json::array();
  for (const auto& s : steps) {
    auto r = s.report.to_json();
    r.erase("map");
    steps_json.push_back({{"factor", s.factor}, {"iteration", s.iteration}, {"Q", rect_to_json(s.Q)},
                          {"R", rect_to_json(s.R)}, {"report", r}});
  }
  return {{"pass", pass},
          {"witness", witness ? witness->to_json() : nlohmann::json(nullptr)},
          {"folds_per_factor", folds_per_factor},
          {"estimated_folds", estimated_folds},
          {"steps", steps_json},
          {"symplectic", symplectic.to_json()},
          {"injectivity", injectivity.to_json()},
          {"containment", containment.to_json()},
          {"map", map.to_json()}};
}

SqueezeReport squeeze(const RectifiableSet& A, const std::vector<Rect>& targets, std::uint64_t seed,
                      const SqueezeConfig& config) {
  const int dim = A.ambient_dim();
  const int n = dim / 2;
  if (dim < 2 || dim % 2) throw Error(ErrorCode::BadDimension, "squeeze needs R^{2n}");
  if (static_cast<int>(targets.size()) != n)
    throw Error(ErrorCode::BadDimension, "need one target rectangle per factor");
  for (const auto& T : targets)
    if (!(T.width() > 0 && T.height() > 0)) throw Error(ErrorCode::Precondition, "targets must be nonempty");
  if (!(config.fold_ratio > 1 && config.fold_ratio < 2)) throw Error(ErrorCode::Precondition, "fold ratio must lie in (1,2)");

  SqueezeReport report;
  report.map = MapExpr::identity(dim);
  if (A.is_empty()) {
    report.pass = true;
    report.image = A;
    report.folds_per_factor.assign(n, 0);
    report.estimated_folds.assign(n, 0);
    return report;
  }

  auto [first, rest] = sampled_extent(A, config.bound_samples, split_seed(seed, 7), config.bound_margin);
  if (config.require_witness || !config.witness_scales.empty()) {
    auto scales = config.witness_scales;
    if (scales.empty()) {
      const double diam = std::hypot(first.width(), first.height(), rest.dim() ? rest.diameter() : 0.0);
      scales = log_scales(0.1 * diam, 1e-3 * diam, 6);
    }
    report.witness = negligibility_decay_test(A, n, scales, split_seed(seed, 8));
    if (config.require_witness && !report.witness->consistent)
      fail_stage("negligibility-witness", "decay test at exponent " + std::to_string(n) + " is " +
                                              report.witness->verdict() + " (final ratio " +
                                              fmt(report.witness->final_ratio) + ")");
  }

  // Per-factor boxes known to contain the current image.
  std::vector<Rect> box(n);
  box[0] = first;
  for (int i = 1; i < n; ++i)
    box[i] = {rest.lo[2 * i - 2], rest.hi[2 * i - 2], rest.lo[2 * i - 1], rest.hi[2 * i - 1]};
  std::vector<bool> done(n, false);
  RectifiableSet current = A;
  MapExpr total = MapExpr::identity(dim);

  auto estimate = [&](double q, double t) {
    return q < 0.9 * t ? 0 : static_cast<int>(std::ceil(std::log(q / t) / std::log(config.fold_ratio)));
  };
  for (int i = 0; i < n; ++i) report.estimated_folds.push_back(estimate(box[i].area(), targets[i].area()));
  report.folds_per_factor.assign(n, 0);

  for (int i = 0; i < n; ++i) {
    const Rect& T = targets[i];
    const MapExpr swap = i == 0 ? MapExpr::identity(dim) : MapExpr::factor_permute(dim, 0, i);
    auto conj = [&](const MapExpr& m) { return i == 0 ? m : MapExpr::compose({swap, m, swap}); };
    for (int iteration = 0;; ++iteration) {
      const Rect Q = box[i];
      if (Q.area() < 0.9 * T.area()) {
        double fill = 0;
        Rect placed;
        const MapExpr step = conj(lift(centered_fit(Q, T, fill, placed), dim));
        current = image(current, step, 0.0);
        total = MapExpr::compose({step, total});
        box[i] = placed;
        break;
      }
      if (iteration >= config.max_folds_per_factor)
        throw Error(ErrorCode::NoAdmissibleTime, "factor " + std::to_string(i) + " did not fit after " +
                                                     std::to_string(iteration) + " folds");
      const double cq = 0.5 * (T.q0 + T.q1), cp = 0.5 * (T.p0 + T.p1);
      Rect R = T;
      if (Q.area() / config.fold_ratio > T.area()) {
        const double s = std::sqrt(Q.area() / config.fold_ratio / T.area());
        R = {cq - 0.5 * s * T.width(), cq + 0.5 * s * T.width(), cp - 0.5 * s * T.height(), cp + 0.5 * s * T.height()};
      }
      // Other factors in the swapped order: factor i sits first, factor 0 takes slot i.
      Box K, U;
      if (n > 1) {
        K = Box(Vec::Zero(dim - 2), Vec::Zero(dim - 2));
        U = K;
        for (int slot = 1; slot < n; ++slot) {
          const int j = slot == i ? 0 : slot;
          const Rect& kb = box[j];
          const Rect ub = done[j] ? targets[j]
                                  : Rect{kb.q0 - config.bound_margin * kb.width() - 1e-9,
                                         kb.q1 + config.bound_margin * kb.width() + 1e-9,
                                         kb.p0 - config.bound_margin * kb.height() - 1e-9,
                                         kb.p1 + config.bound_margin * kb.height() + 1e-9};
          K.lo.segment(2 * slot - 2, 2) << kb.q0, kb.p0;
          K.hi.segment(2 * slot - 2, 2) << kb.q1, kb.p1;
          U.lo.segment(2 * slot - 2, 2) << ub.q0, ub.p0;
          U.hi.segment(2 * slot - 2, 2) << ub.q1, ub.p1;
        }
      }
      const RectifiableSet swapped = i == 0 ? current : image(current, swap, 1.0);
      FoldProblem fp(Q, R, K, U, swapped);
      fp.cert_samples = config.cert_samples;
      fp.symplectic_samples = std::min<std::size_t>(config.cert_samples, 2000);
      FoldReport fr;
      bool ok = false;
      for (int attempt = 0; attempt < 3 && !ok; ++attempt) {
        fp.seed = split_seed(seed, 1000 + 100 * i + iteration + 7919 * attempt);
        try {
          fr = fold_once(fp, config.fold);
          ok = true;
        } catch (const Error& e) {
          const bool retry = e.code() == ErrorCode::NoAdmissibleTime && attempt < 2;
          if (!retry)
            throw Error(e.code(), "factor " + std::to_string(i) + " fold " + std::to_string(iteration) + ": " + e.what());
        }
      }
      const MapExpr step = conj(fr.map);
      current = i == 0 ? fr.image : image(fr.image, swap, 1.0);
      total = MapExpr::compose({step, total});
      ++report.folds_per_factor[i];
      // The flow moves every other coordinate by at most max_displacement (normalized units).
      const double drift = fr.max_displacement / fr.plan.params.factor;
      for (int j = 0; j < n; ++j)
        if (j != i) box[j] = {box[j].q0 - drift, box[j].q1 + drift, box[j].p0 - drift, box[j].p1 + drift};
      box[i] = fr.image_box;
      report.steps.push_back({i, iteration, Q, R, std::move(fr)});
      if (R.q0 == T.q0 && R.q1 == T.q1 && R.p0 == T.p0 && R.p1 == T.p1) break;
    }
    done[i] = true;
  }

  report.map = total;
  report.image = current;
  const auto cert = sample(A, config.cert_samples, split_seed(seed, 9));
  report.final_cloud = map_cloud(total, cert);
  Box rest_targets;
  if (n > 1) {
    rest_targets = Box(Vec::Zero(dim - 2), Vec::Zero(dim - 2));
    for (int j = 1; j < n; ++j) {
      rest_targets.lo.segment(2 * j - 2, 2) << targets[j].q0, targets[j].p0;
      rest_targets.hi.segment(2 * j - 2, 2) << targets[j].q1, targets[j].p1;
    }
  }
  report.containment = containment(report.final_cloud.points, targets[0], rest_targets, 0.0);
  report.injectivity = check_injective(total, cert, config.fold.preimage_sep);
  report.symplectic =
      check_symplectic(total, sample(A, config.cert_samples, split_seed(seed, 10)), config.fold.symplectic_tol);
  report.pass = report.containment.pass() && report.injectivity.pass && report.symplectic.pass;
  if (!report.pass && config.fold.strict) {
    const std::string stage = !report.containment.pass() ? "final-containment"
                              : !report.injectivity.pass ? "final-injectivity"
                                                         : "final-symplecticity";
    fail_stage(stage, "composite map fails on the certification cloud");
  }
  return report;
}

}  // namespace sympfold
