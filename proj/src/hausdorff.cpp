#include "sympfold/hausdorff.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <unordered_set>

#include "sympfold/json_util.hpp"
#include "sympfold/spatial_grid.hpp"

namespace sympfold {

namespace {

// 0^0 = 1, matching the convention for H^0.
double power(double d, double s) { return (d == 0.0 && s == 0.0) ? 1.0 : std::pow(d, s); }

struct AxisCells {
  double unit_cell = 0;  // cell side in unit coordinates of the axis
  double offset = 0;
  std::int64_t count = 1;
  bool degenerate = false;
};

struct ChartCover {
  double count = 1;
  double diameter = 0;
  std::vector<AxisCells> axes;
};

ChartCover chart_cover(const LipschitzChart& c, double scale, std::uint64_t seed, int offsets) {
  ChartCover out;
  const int m = c.param_dim();
  if (m == 0 || c.lip_const() == 0.0) return out;
  const double sigma = scale / (c.lip_const() * std::sqrt(static_cast<double>(m)));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double phase = unit(rng);
  out.diameter = scale;
  out.count = 1;
  for (int k = 0; k < m; ++k) {
    AxisCells a;
    const double width = c.domain().hi[k] - c.domain().lo[k];
    if (!(width > 0)) {
      a.degenerate = true;
      out.axes.push_back(a);
      continue;
    }
    a.unit_cell = sigma / width;
    a.count = std::numeric_limits<std::int64_t>::max();
    for (int o = 0; o < std::max(1, offsets); ++o) {
      const double off = -a.unit_cell * std::fmod(phase + static_cast<double>(o) / std::max(1, offsets), 1.0);
      const auto n = c.mask()[k].cell_count(a.unit_cell, off);
      if (n < a.count) {
        a.count = n;
        a.offset = off;
      }
    }
    out.count *= static_cast<double>(a.count);
    out.axes.push_back(a);
  }
  return out;
}

void materialize(const LipschitzChart& c, const ChartCover& cc, std::vector<CoverPiece>& pieces) {
  const int m = c.param_dim();
  if (cc.axes.empty()) {
    pieces.push_back({c.evaluate(c.domain().lo), 0.0});
    return;
  }
  std::vector<std::vector<std::int64_t>> cells(m);
  for (int k = 0; k < m; ++k) {
    const auto& a = cc.axes[k];
    cells[k] = a.degenerate ? std::vector<std::int64_t>{0} : c.mask()[k].cells(a.unit_cell, a.offset);
  }
  std::vector<std::size_t> idx(m, 0);
  Vec y(m);
  while (true) {
    for (int k = 0; k < m; ++k) {
      const auto& a = cc.axes[k];
      const double lo = c.domain().lo[k], width = c.domain().hi[k] - lo;
      if (a.degenerate) {
        y[k] = lo;
        continue;
      }
      // Center of the cell clipped to the domain, so the chart is only evaluated inside it.
      const double u0 = std::max(0.0, a.offset + a.unit_cell * static_cast<double>(cells[k][idx[k]]));
      const double u1 = std::min(1.0, a.offset + a.unit_cell * static_cast<double>(cells[k][idx[k]] + 1));
      y[k] = lo + width * 0.5 * (u0 + u1);
    }
    pieces.push_back({c.evaluate(y), cc.diameter});
    int k = 0;
    while (k < m && ++idx[k] == cells[k].size()) idx[k++] = 0;
    if (k == m) return;
  }
}

}  // namespace

double Covering::recomputed_weight() const {
  double w = 0;
  for (const auto& p : pieces) w += power(p.diameter, s);
  return w;
}

bool Covering::covers(const SampleCloud& cloud, double tol) const {
  if (cloud.empty()) return true;
  if (!materialized || pieces.empty()) return false;
  std::vector<Vec> centers;
  centers.reserve(pieces.size());
  double widest = 0;
  for (const auto& p : pieces) {
    centers.push_back(p.center);
    widest = std::max(widest, p.diameter);
  }
  const SpatialGrid grid(centers, widest > 0 ? widest : 0.0);
  for (const auto& x : cloud.points) {
    // Pieces share one diameter per chart, so the nearest center decides.
    bool inside = false;
    const auto hit = grid.nearest(x, widest / 2 + tol + 1e-300);
    if (hit.found()) inside = hit.distance <= pieces[hit.index].diameter / 2 + tol;
    if (!inside) {
      for (const auto& p : pieces) {
        if ((p.center - x).norm() <= p.diameter / 2 + tol) {
          inside = true;
          break;
        }
      }
    }
    if (!inside) return false;
  }
  return true;
}

nlohmann::json Covering::to_json() const {
  return {{"scale", scale}, {"s", s}, {"count", count}, {"weight", weight}, {"materialized", materialized}};
}

Covering cover_upper_bound(const RectifiableSet& set, double s, double scale, std::uint64_t seed,
                           const CoverOptions& options, bool materialize_pieces) {
  if (!(scale > 0)) throw Error(ErrorCode::Precondition, "cover scale must be positive");
  if (!(s >= 0)) throw Error(ErrorCode::Precondition, "exponent must be >= 0");
  Covering cover;
  cover.scale = scale;
  cover.s = s;
  std::vector<ChartCover> per_chart;
  for (std::size_t c = 0; c < set.charts().size(); ++c) {
    per_chart.push_back(chart_cover(set.charts()[c], scale, split_seed(seed, c), options.offsets));
    cover.count += per_chart.back().count;
    cover.weight += per_chart.back().count * power(per_chart.back().diameter, s);
    if (cover.count > options.count_budget)
      throw Error(ErrorCode::ScaleTooSmall, "cover at scale " + std::to_string(scale) + " exceeds the cell budget");
  }
  if (materialize_pieces && cover.count <= static_cast<double>(options.materialize_limit)) {
    for (std::size_t c = 0; c < set.charts().size(); ++c) materialize(set.charts()[c], per_chart[c], cover.pieces);
    cover.materialized = true;
  }
  return cover;
}

Covering product_cover(const RectifiableSet& a, const RectifiableSet& b, double p, double s, double scale,
                       std::uint64_t seed, const CoverOptions& options) {
  if (!(p >= 1)) throw Error(ErrorCode::Precondition, "product metric needs p >= 1");
  const double h = scale * std::pow(2.0, -1.0 / p);
  const auto ca = cover_upper_bound(a, 0.0, h, split_seed(seed, 0), options);
  const auto cb = cover_upper_bound(b, 0.0, h, split_seed(seed, 1), options);
  Covering out;
  out.scale = scale;
  out.s = s;
  out.count = ca.count * cb.count;
  if (out.count > options.count_budget) throw Error(ErrorCode::ScaleTooSmall, "product cover exceeds the cell budget");
  out.weight = out.count * power(scale, s);
  return out;
}

// ---------------------------------------------------------------- box dimension

namespace {

void require_scales(const std::vector<double>& scales) {
  if (scales.size() < 3) throw Error(ErrorCode::InsufficientScales, "need at least 3 scales");
  const auto [lo, hi] = std::minmax_element(scales.begin(), scales.end());
  if (!(*lo > 0)) throw Error(ErrorCode::InsufficientScales, "scales must be positive");
  if (std::log10(*hi / *lo) < 1.5 - 1e-12)
    throw Error(ErrorCode::InsufficientScales, "scales must span at least 1.5 decades");
}

std::size_t occupied_cells(const SampleCloud& cloud, double h) {
  std::unordered_set<std::uint64_t> keys;
  keys.reserve(cloud.size());
  for (const auto& x : cloud.points) {
    std::uint64_t key = 0x2545f4914f6cdd1dULL;
    for (Eigen::Index k = 0; k < x.size(); ++k)
      key = split_seed(key, static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(x[k] / h))));
    keys.insert(key);
  }
  return keys.size();
}

}  // namespace

DimensionEstimate box_dimension(const SampleCloud& cloud, const std::vector<double>& scales, const std::string& label) {
  require_scales(scales);
  if (cloud.empty()) throw Error(ErrorCode::EmptySet, "box dimension of an empty cloud");
  DimensionEstimate est;
  est.label = label;
  est.scales = scales;
  std::sort(est.scales.begin(), est.scales.end(), std::greater<>());
  est.counts.resize(est.scales.size());
  parallel_for(est.scales.size(), [&](std::size_t i) {
    est.counts[i] = static_cast<double>(occupied_cells(cloud, est.scales[i]));
  });
  const auto n = static_cast<double>(est.scales.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < est.scales.size(); ++i) {
    const double x = std::log(1.0 / est.scales[i]), y = std::log(est.counts[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  est.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept = (sy - est.slope * sx) / n;
  double rss = 0;
  for (std::size_t i = 0; i < est.scales.size(); ++i) {
    const double r = std::log(est.counts[i]) - (intercept + est.slope * std::log(1.0 / est.scales[i]));
    rss += r * r;
  }
  est.residual = std::sqrt(rss / n);
  return est;
}

DimensionEstimate box_dimension(const RectifiableSet& set, const std::vector<double>& scales, std::uint64_t seed,
                                std::size_t cloud_size) {
  require_scales(scales);
  return box_dimension(sample(set, cloud_size, seed), scales, set.label());
}

nlohmann::json DimensionEstimate::to_json() const {
  return {{"label", label}, {"scales", scales}, {"counts", counts}, {"slope", slope}, {"residual", residual}};
}

void DimensionEstimate::write_csv(std::ostream& out) const {
  out << "scale,count\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < scales.size(); ++i) out << scales[i] << ',' << counts[i] << '\n';
  out.precision(old);
}

// ---------------------------------------------------------------- decay tests

namespace {

DecayReport decay_from_covers(double s, const std::vector<double>& scales, const std::vector<Covering>& covers,
                              const DecayOptions& options) {
  DecayReport r;
  r.s = s;
  r.scales = scales;
  for (const auto& c : covers) {
    r.counts.push_back(c.count);
    r.weights.push_back(c.weight);
  }
  for (std::size_t i = 1; i < r.weights.size(); ++i)
    if (r.weights[i] > r.weights[i - 1]) r.monotone = false;
  const double first = r.weights.empty() ? 0.0 : r.weights.front();
  const double last = r.weights.empty() ? 0.0 : r.weights.back();
  r.final_ratio = first > 0 ? last / first : 0.0;
  r.consistent = r.monotone && last <= options.factor * first;
  return r;
}

void require_decreasing(const std::vector<double>& scales) {
  if (scales.empty()) throw Error(ErrorCode::Precondition, "decay test needs scales");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] < scales[i - 1])) throw Error(ErrorCode::Precondition, "decay test scales must decrease");
}

}  // namespace

DecayReport negligibility_decay_test(const RectifiableSet& set, double s, const std::vector<double>& scales,
                                     std::uint64_t seed, const DecayOptions& options) {
  require_decreasing(scales);
  std::vector<Covering> covers(scales.size());
  parallel_for(scales.size(), [&](std::size_t i) {
    covers[i] = cover_upper_bound(set, s, scales[i], seed, options.cover);
  });
  return decay_from_covers(s, scales, covers, options);
}

ProductDecayReport product_negligibility_test(const RectifiableSet& a, const RectifiableSet& b, double witness_exponent,
                                              double p, const std::vector<double>& scales, std::uint64_t seed,
                                              const DecayOptions& options) {
  require_decreasing(scales);
  ProductDecayReport r;
  r.p = p;
  r.witness = negligibility_decay_test(b, witness_exponent, scales, split_seed(seed, 1), options);
  const double s = a.rect_order() + witness_exponent;
  std::vector<Covering> covers(scales.size());
  parallel_for(scales.size(), [&](std::size_t i) {
    covers[i] = product_cover(a, b, p, s, scales[i], seed, options.cover);
  });
  r.product = decay_from_covers(s, scales, covers, options);
  return r;
}

nlohmann::json DecayReport::to_json() const {
  return {{"s", s},
          {"scales", scales},
          {"counts", counts},
          {"weights", weights},
          {"monotone", monotone},
          {"final_ratio", final_ratio},
          {"verdict", verdict()},
          {"heuristic", true}};
}

void DecayReport::write_csv(std::ostream& out) const {
  out << "scale,count,weight\n";
  const auto old = out.precision(17);
  for (std::size_t i = 0; i < scales.size(); ++i) out << scales[i] << ',' << counts[i] << ',' << weights[i] << '\n';
  out.precision(old);
}

nlohmann::json ProductDecayReport::to_json() const {
  return {{"p", p}, {"witness", witness.to_json()}, {"product", product.to_json()}};
}

// ---------------------------------------------------------------- volume

VolumeEstimate lebesgue_estimate(const Box& region, const std::function<bool(const Vec&)>& indicator,
                                 std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::Precondition, "need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t hits = 0;
  Vec x(region.dim());
  for (std::size_t i = 0; i < samples; ++i) {
    for (int k = 0; k < region.dim(); ++k) x[k] = region.lo[k] + (region.hi[k] - region.lo[k]) * unit(rng);
    hits += indicator(x) ? 1 : 0;
  }
  VolumeEstimate v;
  v.samples = samples;
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  v.value = frac * region.volume();
  v.standard_error = region.volume() * std::sqrt(frac * (1 - frac) / static_cast<double>(samples));
  return v;
}

nlohmann::json VolumeEstimate::to_json() const {
  return {{"value", value}, {"standard_error", standard_error}, {"samples", samples}};
}

std::vector<double> log_scales(double hi, double lo, int n) {
  if (n < 2 || !(hi > lo) || !(lo > 0)) throw Error(ErrorCode::Precondition, "log_scales needs hi > lo > 0 and n >= 2");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = hi * std::pow(lo / hi, static_cast<double>(i) / (n - 1));
  return out;
}

}  // namespace sympfold
