#include "sympfold/displacement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/erf.hpp>

#include "sympfold/json_util.hpp"
#include "sympfold/spatial_grid.hpp"

namespace sympfold {

Vec LinearHamiltonian::gradient() const {
  // omega(v0, x) = v0^T J x, so grad H = J^T v0.
  return standard_j(static_cast<int>(v0.size())).transpose() * v0;
}

Vec LinearHamiltonian::field() const { return standard_j(static_cast<int>(v0.size())) * gradient(); }

Vec translation_flow(const LinearHamiltonian& h, double t, const Vec& x) { return x + t * h.v0; }

DisplacementProblem::DisplacementProblem(RectifiableSet a_, RectifiableSet b_) : a(std::move(a_)), b(std::move(b_)) {
  if (a.ambient_dim() != b.ambient_dim())
    throw Error(ErrorCode::BadDimension, "A and B must live in the same space");
  if (a.rect_order() > a.ambient_dim()) throw Error(ErrorCode::BadDimension, "rectifiability order exceeds dimension");
}

SampleCloud DisplacementProblem::a_cloud(std::size_t factor) const {
  return sample(a, a_samples * factor, split_seed(seed, factor == 1 ? 0 : 2));
}

SampleCloud DisplacementProblem::b_cloud(std::size_t factor) const {
  return sample(b, b_samples * factor, split_seed(seed, factor == 1 ? 1 : 3));
}

bool DisplacementResult::is_admissible(double t) const {
  return std::any_of(admissible_times.begin(), admissible_times.end(), [t](const auto& c) { return c.t == t; });
}

nlohmann::json DisplacementResult::to_json() const {
  nlohmann::json times = nlohmann::json::array();
  for (const auto& c : admissible_times) times.push_back({{"t", c.t}, {"distance", c.distance}});
  nlohmann::json j = {{"v0", vec_to_json(v0)},
                      {"direction_index", direction_index},
                      {"antipodal", antipodal},
                      {"bad_time_fraction", bad_time_fraction},
                      {"admissible_times", times},
                      {"clearance", clearance},
                      {"clearance_tol", clearance_tol},
                      {"t_max", t_max},
                      {"t_samples", t_samples},
                      {"directions", directions},
                      {"direction_fractions", direction_fractions}};
  if (witness) j["witness"] = witness->to_json();
  return j;
}

namespace {

// Difference vectors y - x stored row by row.
struct Differences {
  int dim = 0;
  std::vector<double> data;
  std::vector<double> norm2;

  std::size_t size() const { return norm2.size(); }
  const double* row(std::size_t k) const { return data.data() + k * dim; }
};

Differences differences(const SampleCloud& a, const SampleCloud& b, std::size_t budget, bool subsample,
                        std::uint64_t seed) {
  if (a.dim != b.dim && !a.empty() && !b.empty())
    throw Error(ErrorCode::BadDimension, "clouds live in different dimensions");
  Differences out;
  out.dim = a.empty() ? b.dim : a.dim;
  const std::size_t total = a.size() * b.size();
  auto push = [&](std::size_t i, std::size_t j) {
    double n2 = 0;
    for (int k = 0; k < out.dim; ++k) {
      const double d = b.points[j][k] - a.points[i][k];
      out.data.push_back(d);
      n2 += d * d;
    }
    out.norm2.push_back(n2);
  };
  if (total <= budget) {
    out.data.reserve(total * out.dim);
    out.norm2.reserve(total);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) push(i, j);
    return out;
  }
  if (!subsample)
    throw Error(ErrorCode::PairBudgetExceeded,
                std::to_string(total) + " pairs exceed the budget of " + std::to_string(budget));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, a.size() - 1), pick_b(0, b.size() - 1);
  out.data.reserve(budget * out.dim);
  out.norm2.reserve(budget);
  for (std::size_t k = 0; k < budget; ++k) {
    const std::size_t i = pick_a(rng);
    push(i, pick_b(rng));
  }
  return out;
}

// Marks t_i = t_max i / n (i = 1..n) lying in the open interval (lo, hi).
void mark_interval(double lo, double hi, double t_max, int n, std::vector<int>& delta) {
  auto t_of = [&](long i) { return t_max * static_cast<double>(i) / n; };
  long first = static_cast<long>(std::floor(lo / t_max * n));
  while (first <= n && t_of(first) <= lo) ++first;
  while (first > 1 && t_of(first - 1) > lo) --first;
  long last = static_cast<long>(std::ceil(hi / t_max * n));
  while (last >= 1 && t_of(last) >= hi) --last;
  while (last < n && t_of(last + 1) < hi) ++last;
  first = std::max(first, 1L);
  last = std::min(last, static_cast<long>(n));
  if (first > last) return;
  ++delta[first];
  --delta[last + 1];
}

// Bad flags for +v (first) and -v (second).
std::pair<std::vector<char>, std::vector<char>> bad_times(const Differences& diffs, const Vec& v, double tol,
                                                          double t_max, int n) {
  std::vector<int> plus(n + 2, 0), minus(n + 2, 0);
  const double tol2 = tol * tol;
  for (std::size_t k = 0; k < diffs.size(); ++k) {
    const double* d = diffs.row(k);
    double proj = 0;
    for (int c = 0; c < diffs.dim; ++c) proj += d[c] * v[c];
    const double perp2 = diffs.norm2[k] - proj * proj;
    if (!(perp2 < tol2)) continue;
    const double half = std::sqrt(tol2 - perp2);
    mark_interval(proj - half, proj + half, t_max, n, plus);
    mark_interval(-proj - half, -proj + half, t_max, n, minus);
  }
  std::pair<std::vector<char>, std::vector<char>> out{std::vector<char>(n + 1, 0), std::vector<char>(n + 1, 0)};
  int run_p = 0, run_m = 0;
  for (int i = 1; i <= n; ++i) {
    run_p += plus[i];
    run_m += minus[i];
    out.first[i] = run_p > 0;
    out.second[i] = run_m > 0;
  }
  return out;
}

double fraction(const std::vector<char>& bad, int n) {
  return static_cast<double>(std::count(bad.begin() + 1, bad.end(), 1)) / n;
}

double halton(std::size_t index, int base) {
  double f = 1, r = 0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

double cloud_diameter(const SampleCloud& a, const SampleCloud& b) {
  if (a.empty() && b.empty()) return 0;
  Box box = a.empty() ? b.bounds() : a.bounds();
  if (!b.empty()) {
    const Box bb = b.bounds();
    box.lo = box.lo.cwiseMin(bb.lo);
    box.hi = box.hi.cwiseMax(bb.hi);
  }
  return box.diameter();
}

}  // namespace

SampleCloud displacement_image(const SampleCloud& a, const SampleCloud& b, std::size_t pair_budget, bool subsample,
                               std::uint64_t seed) {
  const auto diffs = differences(a, b, pair_budget, subsample, seed);
  std::vector<Vec> points;
  points.reserve(diffs.size());
  for (std::size_t k = 0; k < diffs.size(); ++k) points.push_back(Eigen::Map<const Vec>(diffs.row(k), diffs.dim));
  return cloud_from_points(diffs.dim, std::move(points));
}

std::vector<Vec> sphere_directions(int dim, int count) {
  if (dim < 1) throw Error(ErrorCode::BadDimension, "directions need a positive dimension");
  if (count < 1) throw Error(ErrorCode::Precondition, "need at least one direction");
  std::vector<Vec> out;
  out.reserve(count);
  if (dim == 1) {
    for (int k = 0; k < count; ++k) out.push_back(Vec::Ones(1));
    return out;
  }
  if (dim == 2) {
    // Half circle only: the scan also tries every antipode.
    for (int k = 0; k < count; ++k) {
      const double a = std::numbers::pi * (k + 0.5) / count;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      out.push_back(v);
    }
    return out;
  }
  if (dim > static_cast<int>(std::size(kPrimes)))
    throw Error(ErrorCode::BadDimension, "direction search supports at most 16 dimensions");
  for (std::size_t k = 1; out.size() < static_cast<std::size_t>(count); ++k) {
    Vec v(dim);
    for (int c = 0; c < dim; ++c)
      v[c] = std::numbers::sqrt2 * boost::math::erf_inv(2.0 * halton(k, kPrimes[c]) - 1.0);
    const double n = v.norm();
    if (n > 1e-12) out.push_back(v / n);
  }
  return out;
}

DisplacementCertificate check_translation(const SampleCloud& a, const SampleCloud& b, const Vec& v0, double t,
                                          double clearance_tol) {
  DisplacementCertificate c;
  c.t = t;
  c.clearance_tol = clearance_tol;
  c.a_points = a.size();
  c.b_points = b.size();
  c.distance = std::numeric_limits<double>::infinity();
  if (!a.empty() && !b.empty()) {
    const SpatialGrid grid(b.points);
    for (const auto& x : a.points) {
      const Vec moved = x + t * v0;
      const auto hit = grid.nearest(moved, c.distance);
      if (hit.found() && hit.distance < c.distance) {
        c.distance = hit.distance;
        c.a_point = moved;
        c.b_point = b.points[hit.index];
      }
    }
  }
  c.pass = c.distance > clearance_tol;
  return c;
}

DisplacementResult find_generic_direction(const DisplacementProblem& problem, int directions, double t_max,
                                          int t_samples) {
  if (directions < 1 || t_samples < 1) throw Error(ErrorCode::Precondition, "directions and t_samples must be >= 1");
  if (!(t_max > 0)) throw Error(ErrorCode::Precondition, "t range must be (0, T] with T > 0");
  const int dim = problem.ambient_dim();
  const auto a = problem.a_cloud();
  const auto b = problem.b_cloud();

  DisplacementResult r;
  r.t_max = t_max;
  r.t_samples = t_samples;
  r.directions = directions;
  r.clearance_tol = problem.clearance_tol > 0 ? problem.clearance_tol : 1e-6 * cloud_diameter(a, b);
  if (!problem.witness_scales.empty())
    r.witness = negligibility_decay_test(problem.b, dim - problem.rect_order(), problem.witness_scales,
                                         split_seed(problem.seed, 4));

  const auto diffs = differences(a, b, problem.pair_budget, true, split_seed(problem.seed, 5));
  const auto dirs = sphere_directions(dim, directions);
  std::vector<double> plus_frac(directions), minus_frac(directions);
  parallel_for(dirs.size(), [&](std::size_t k) {
    const auto [plus, minus] = bad_times(diffs, dirs[k], r.clearance_tol, t_max, t_samples);
    plus_frac[k] = fraction(plus, t_samples);
    minus_frac[k] = fraction(minus, t_samples);
  });

  double best = 2;
  for (int k = 0; k < directions; ++k) {
    r.direction_fractions.push_back(std::min(plus_frac[k], minus_frac[k]));
    if (plus_frac[k] < best) {
      best = plus_frac[k];
      r.direction_index = k;
      r.antipodal = false;
    }
    if (minus_frac[k] < best) {
      best = minus_frac[k];
      r.direction_index = k;
      r.antipodal = true;
    }
  }
  if (best >= 1)
    throw Error(ErrorCode::NoDirectionFound,
                "every scanned direction meets B at all " + std::to_string(t_samples) + " times");
  r.bad_time_fraction = best;
  r.v0 = r.antipodal ? Vec(-dirs[r.direction_index]) : dirs[r.direction_index];

  const auto [plus, minus] = bad_times(diffs, dirs[r.direction_index], r.clearance_tol, t_max, t_samples);
  const auto& bad = r.antipodal ? minus : plus;
  std::vector<double> candidates;
  for (int i = 1; i <= t_samples; ++i)
    if (!bad[i]) candidates.push_back(t_max * static_cast<double>(i) / t_samples);
  std::vector<DisplacementCertificate> certs(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    certs[i] = check_translation(a, b, r.v0, candidates[i], r.clearance_tol);
  });
  r.clearance = std::numeric_limits<double>::infinity();
  for (const auto& c : certs) {
    if (!c.pass) continue;
    r.admissible_times.push_back({c.t, c.distance});
    r.clearance = std::min(r.clearance, c.distance);
  }
  if (r.admissible_times.empty()) r.clearance = 0;
  return r;
}

nlohmann::json DisplacementCertificate::to_json() const {
  nlohmann::json j = {{"t", t},
                      {"distance", std::isfinite(distance) ? nlohmann::json(distance) : nlohmann::json(nullptr)},
                      {"clearance_tol", clearance_tol},
                      {"a_points", a_points},
                      {"b_points", b_points},
                      {"pass", pass}};
  if (a_point.size() > 0) j["closest_pair"] = {vec_to_json(a_point), vec_to_json(b_point)};
  return j;
}

DisplacementCertificate displace_certify(const DisplacementProblem& problem, const DisplacementResult& result,
                                         double t) {
  if (!result.is_admissible(t))
    throw Error(ErrorCode::Precondition, "t = " + std::to_string(t) + " is not among the admissible times");
  auto c = check_translation(problem.a_cloud(10), problem.b_cloud(10), result.v0, t, result.clearance_tol);
  if (!c.pass) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "translated A point " << c.a_point.transpose() << " lies " << c.distance << " from B point "
        << c.b_point.transpose() << " at t = " << t;
    throw Error(ErrorCode::CertificationFailed, msg.str());
  }
  return c;
}

nlohmann::json HoferBound::to_json() const {
  return {{"value", value},
          {"max", max_value},
          {"min", min_value},
          {"grid_spacing", grid_spacing},
          {"grid_points", grid_points}};
}

HoferBound hofer_norm_bound(const LinearHamiltonian& h, const std::function<double(const Vec&)>& rho, double t,
                            const Box& support_box, int grid) {
  if (grid < 2) throw Error(ErrorCode::Precondition, "grid needs at least 2 points per axis");
  if (t < 0) throw Error(ErrorCode::Precondition, "t must be nonnegative");
  const int dim = support_box.dim();
  if (dim != static_cast<int>(h.v0.size())) throw Error(ErrorCode::BadDimension, "box and v0 differ in dimension");
  const double total = std::pow(static_cast<double>(grid), dim);
  if (total > 1e8) throw Error(ErrorCode::Precondition, "grid too fine for this dimension");
  HoferBound out;
  out.grid_points = static_cast<std::size_t>(total);
  out.grid_spacing = (support_box.extent() / (grid - 1)).maxCoeff();
  std::vector<int> idx(dim, 0);
  Vec x(dim);
  for (std::size_t n = 0; n < out.grid_points; ++n) {
    for (int c = 0; c < dim; ++c)
      x[c] = support_box.lo[c] + (support_box.hi[c] - support_box.lo[c]) * idx[c] / (grid - 1);
    const double v = rho(x) * h.value(x);
    out.max_value = std::max(out.max_value, v);
    out.min_value = std::min(out.min_value, v);
    for (int c = 0; c < dim && ++idx[c] == grid; ++c) idx[c] = 0;
  }
  out.value = t * (out.max_value - out.min_value);
  return out;
}

HoferBound hofer_norm_bound(const LinearHamiltonian& h, const CutoffProfile& cutoff, double t, const Box& support_box,
                            int grid) {
  auto rho = [&cutoff](const Vec& x) {
    double r = 1;
    for (int c = 0; c < x.size(); ++c) r *= cutoff.value(x[c]);
    return r;
  };
  return hofer_norm_bound(h, rho, t, support_box, grid);
}

}  // namespace sympfold
