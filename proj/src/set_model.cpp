#include "sympfold/set_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "sympfold/json_util.hpp"

namespace sympfold {

namespace {

constexpr int kMaxDepth = 30;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

ChartMapPtr make_map(auto value) { return std::make_shared<const ChartMap>(ChartMap{std::move(value)}); }

}  // namespace

// ---------------------------------------------------------------- CantorAxis

double CantorAxis::measure() const { return full() ? 1.0 : std::pow(2.0 * ratio, depth); }

double CantorAxis::point(double u) const {
  if (full()) return u;
  const auto n = static_cast<double>(std::uint64_t{1} << depth);
  const double scaled = std::clamp(u, 0.0, 1.0) * n;
  const auto idx = std::min(static_cast<std::uint64_t>(scaled), (std::uint64_t{1} << depth) - 1);
  double left = 0.0, len = 1.0;
  for (int level = depth - 1; level >= 0; --level) {
    if ((idx >> level) & 1u) left += len * (1.0 - ratio);
    len *= ratio;
  }
  return left + (scaled - static_cast<double>(idx)) * len;
}

bool CantorAxis::contains(double v, double tol) const {
  if (v < -tol || v > 1.0 + tol) return false;
  if (full()) return true;
  double scale = 1.0;
  for (int level = 0; level < depth; ++level) {
    const double t = tol / scale;
    if (v <= ratio + t) {
      v /= ratio;
    } else if (v >= 1.0 - ratio - t) {
      v = (v - (1.0 - ratio)) / ratio;
    } else {
      return false;
    }
    scale *= ratio;
  }
  return true;
}

std::vector<std::pair<double, double>> CantorAxis::intervals() const {
  std::vector<std::pair<double, double>> out{{0.0, 1.0}};
  if (full()) return out;
  for (int level = 0; level < depth; ++level) {
    std::vector<std::pair<double, double>> next;
    next.reserve(out.size() * 2);
    for (auto [a, b] : out) {
      const double len = (b - a) * ratio;
      next.emplace_back(a, a + len);
      next.emplace_back(b - len, b);
    }
    out = std::move(next);
  }
  return out;
}

namespace {

// Walks the kept intervals left to right, pruning any subtree that already
// sits inside one grid cell.
template <class F>
void visit_cells(const CantorAxis& axis, double cell, double offset, F&& emit) {
  std::int64_t last = std::numeric_limits<std::int64_t>::min();
  const auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor((v - offset) / cell)); };
  const auto emit_range = [&](std::int64_t j0, std::int64_t j1) {
    for (std::int64_t j = std::max(j0, last + 1); j <= j1; ++j) emit(j);
    last = std::max(last, j1);
  };
  if (axis.full()) {
    emit_range(cell_of(0.0), cell_of(1.0));
    return;
  }
  struct Frame {
    double a, len;
    int level;
  };
  std::vector<Frame> stack{{0.0, 1.0, 0}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const auto j0 = cell_of(f.a), j1 = cell_of(f.a + f.len);
    if (j0 == j1 || f.level == axis.depth) {
      emit_range(j0, j1);
      continue;
    }
    const double child = f.len * axis.ratio;
    stack.push_back({f.a + f.len - child, child, f.level + 1});
    stack.push_back({f.a, child, f.level + 1});
  }
}

}  // namespace

std::int64_t CantorAxis::cell_count(double cell, double offset) const {
  if (!(cell > 0)) throw Error(ErrorCode::Precondition, "cell size must be positive");
  if (full()) {
    const auto j0 = static_cast<std::int64_t>(std::floor((0.0 - offset) / cell));
    const auto j1 = static_cast<std::int64_t>(std::floor((1.0 - offset) / cell));
    return j1 - j0 + 1;
  }
  std::int64_t count = 0;
  visit_cells(*this, cell, offset, [&](std::int64_t) { ++count; });
  return count;
}

std::vector<std::int64_t> CantorAxis::cells(double cell, double offset) const {
  if (!(cell > 0)) throw Error(ErrorCode::Precondition, "cell size must be positive");
  std::vector<std::int64_t> out;
  visit_cells(*this, cell, offset, [&](std::int64_t j) { out.push_back(j); });
  return out;
}

double cantor_ratio(double target_dim, int param_dim) {
  if (param_dim < 1 || !(target_dim > 0) || target_dim > param_dim)
    throw Error(ErrorCode::BadDimension, "dust dimension must lie in (0, m]");
  return std::pow(2.0, -static_cast<double>(param_dim) / target_dim);
}

// ---------------------------------------------------------------- ChartMap

namespace {

Vec eval_map(const ChartMap& m, const Vec& y, bool* accepted) {
  return std::visit(
      Overloaded{
          [&](const chartmap::Affine& a) -> Vec {
            if (a.matrix.cols() == 0) return a.offset;
            return a.offset + a.matrix * y;
          },
          [&](const chartmap::Polyline& p) -> Vec {
            const auto nv = p.vertices.size();
            const std::size_t segments = p.closed ? nv : nv - 1;
            const double s = std::clamp(y[0], 0.0, 1.0) * static_cast<double>(segments);
            const auto seg = std::min(static_cast<std::size_t>(s), segments - 1);
            const double local = s - static_cast<double>(seg);
            const Vec& a = p.vertices[seg];
            const Vec& b = p.vertices[(seg + 1) % nv];
            return a + local * (b - a);
          },
          [&](const chartmap::TrigCurve& c) -> Vec {
            const double t = y[0];
            Vec x(c.center.size());
            for (Eigen::Index k = 0; k < x.size(); ++k)
              x[k] = c.center[k] + c.amplitude[k] * std::cos(c.frequency[k] * t + c.phase[k]) + c.drift[k] * t;
            return x;
          },
          [&](const chartmap::Product& p) -> Vec {
            const Vec a = eval_map(*p.first, y.head(p.first_param_dim), accepted);
            const Vec b = eval_map(*p.second, y.tail(y.size() - p.first_param_dim), accepted);
            Vec x(a.size() + b.size());
            x << a, b;
            return x;
          },
          [&](const chartmap::Image& im) -> Vec { return im.map.evaluate(eval_map(*im.base, y, accepted)); },
          [&](const chartmap::Restrict& r) -> Vec {
            Vec x = eval_map(*r.base, y, accepted);
            if (accepted && *accepted)
              for (const auto& h : r.constraints)
                if (!h.accepts(x)) *accepted = false;
            return x;
          },
      },
      m.value);
}

bool has_restrict(const ChartMap& m) {
  return std::visit(Overloaded{
                        [](const chartmap::Product& p) { return has_restrict(*p.first) || has_restrict(*p.second); },
                        [](const chartmap::Image& im) { return has_restrict(*im.base); },
                        [](const chartmap::Restrict&) { return true; },
                        [](const auto&) { return false; },
                    },
                    m.value);
}

nlohmann::json halfspace_to_json(const HalfSpace& h) {
  return {{"coord", h.coord}, {"threshold", h.threshold}, {"above", h.above}};
}

HalfSpace halfspace_from_json(const nlohmann::json& j) {
  return {j.at("coord").get<int>(), j.value("threshold", 0.0), j.value("above", true)};
}

nlohmann::json map_to_json(const ChartMap& m) {
  using nlohmann::json;
  return std::visit(
      Overloaded{
          [](const chartmap::Affine& a) {
            return json{{"map", "affine"}, {"matrix", a.matrix.cols() ? mat_to_json(a.matrix) : json::array()},
                        {"offset", vec_to_json(a.offset)}};
          },
          [](const chartmap::Polyline& p) {
            auto v = json::array();
            for (const auto& x : p.vertices) v.push_back(vec_to_json(x));
            return json{{"map", "polyline"}, {"vertices", v}, {"closed", p.closed}};
          },
          [](const chartmap::TrigCurve& c) {
            return json{{"map", "trig_curve"},
                        {"center", vec_to_json(c.center)},
                        {"amplitude", vec_to_json(c.amplitude)},
                        {"frequency", vec_to_json(c.frequency)},
                        {"phase", vec_to_json(c.phase)},
                        {"drift", vec_to_json(c.drift)}};
          },
          [](const chartmap::Product& p) {
            return json{{"map", "product"},
                        {"first", map_to_json(*p.first)},
                        {"second", map_to_json(*p.second)},
                        {"first_param_dim", p.first_param_dim}};
          },
          [](const chartmap::Image& im) {
            return json{{"map", "image"}, {"base", map_to_json(*im.base)}, {"expr", im.map.to_json()}};
          },
          [](const chartmap::Restrict& r) {
            auto c = json::array();
            for (const auto& h : r.constraints) c.push_back(halfspace_to_json(h));
            return json{{"map", "restrict"}, {"base", map_to_json(*r.base)}, {"constraints", c}};
          },
      },
      m.value);
}

ChartMapPtr map_from_json(const nlohmann::json& j) {
  const auto kind = j.at("map").get<std::string>();
  if (kind == "affine") {
    const Vec offset = vec_from_json(j.at("offset"));
    const auto& mj = j.at("matrix");
    Mat m = mj.empty() ? Mat(offset.size(), 0) : mat_from_json(mj);
    return make_map(chartmap::Affine{std::move(m), offset});
  }
  if (kind == "polyline") {
    chartmap::Polyline p;
    for (const auto& v : j.at("vertices")) p.vertices.push_back(vec_from_json(v));
    p.closed = j.value("closed", false);
    return make_map(std::move(p));
  }
  if (kind == "trig_curve") {
    return make_map(chartmap::TrigCurve{vec_from_json(j.at("center")), vec_from_json(j.at("amplitude")),
                                        vec_from_json(j.at("frequency")), vec_from_json(j.at("phase")),
                                        vec_from_json(j.at("drift"))});
  }
  if (kind == "product") {
    return make_map(chartmap::Product{map_from_json(j.at("first")), map_from_json(j.at("second")),
                                      j.at("first_param_dim").get<int>()});
  }
  if (kind == "image") return make_map(chartmap::Image{map_from_json(j.at("base")), MapExpr::from_json(j.at("expr"))});
  if (kind == "restrict") {
    chartmap::Restrict r{map_from_json(j.at("base")), {}};
    for (const auto& h : j.at("constraints")) r.constraints.push_back(halfspace_from_json(h));
    return make_map(std::move(r));
  }
  throw Error(ErrorCode::Parse, "unknown chart map '" + kind + "'");
}

std::vector<CantorAxis> full_mask(int m) { return std::vector<CantorAxis>(static_cast<std::size_t>(m)); }

}  // namespace

// ---------------------------------------------------------------- LipschitzChart

LipschitzChart::LipschitzChart(Box domain, ChartMapPtr map, int ambient_dim, double lip_const,
                               std::vector<CantorAxis> mask, bool lip_estimated)
    : domain_(std::move(domain)),
      map_(std::move(map)),
      ambient_dim_(ambient_dim),
      lip_(lip_const),
      mask_(std::move(mask)),
      lip_estimated_(lip_estimated) {
  if (ambient_dim_ < 1) throw Error(ErrorCode::BadDimension, "chart ambient dimension must be positive");
  if (!(lip_ >= 0) || !std::isfinite(lip_)) throw Error(ErrorCode::Precondition, "Lipschitz constant must be finite and >= 0");
  if (mask_.empty()) mask_ = full_mask(param_dim());
  if (static_cast<int>(mask_.size()) != param_dim()) throw Error(ErrorCode::BadDimension, "mask needs one axis per parameter");
  for (const auto& a : mask_) {
    if (a.depth < 0 || a.depth > kMaxDepth) throw Error(ErrorCode::Precondition, "mask depth out of range");
    if (!(a.ratio > 0 && a.ratio <= 0.5)) throw Error(ErrorCode::Precondition, "mask ratio must lie in (0, 1/2]");
  }
}

LipschitzChart LipschitzChart::point(const Vec& x) {
  return {Box(Vec(0), Vec(0)), make_map(chartmap::Affine{Mat(x.size(), 0), x}), static_cast<int>(x.size()), 0.0};
}

LipschitzChart LipschitzChart::segment(const Vec& from, const Vec& to) {
  if (from.size() != to.size()) throw Error(ErrorCode::BadDimension, "segment endpoints disagree on dimension");
  Mat m = (to - from);
  return {Box::cube(1, 0.0, 1.0), make_map(chartmap::Affine{m, from}), static_cast<int>(from.size()), (to - from).norm()};
}

LipschitzChart LipschitzChart::box(const Box& b) {
  const int d = b.dim();
  Mat m = Mat::Zero(d, d);
  double lip = 0;
  for (int k = 0; k < d; ++k) {
    m(k, k) = b.hi[k] - b.lo[k];
    lip = std::max(lip, m(k, k));
  }
  return {Box::cube(d, 0.0, 1.0), make_map(chartmap::Affine{m, b.lo}), d, lip};
}

LipschitzChart LipschitzChart::polyline(std::vector<Vec> vertices, bool closed) {
  if (vertices.size() < 2) throw Error(ErrorCode::Precondition, "polyline needs at least two vertices");
  const auto d = vertices.front().size();
  const std::size_t segments = closed ? vertices.size() : vertices.size() - 1;
  double longest = 0;
  for (std::size_t i = 0; i < segments; ++i) {
    if (vertices[i].size() != d) throw Error(ErrorCode::BadDimension, "polyline vertices disagree on dimension");
    longest = std::max(longest, (vertices[(i + 1) % vertices.size()] - vertices[i]).norm());
  }
  const double lip = longest * static_cast<double>(segments);
  return {Box::cube(1, 0.0, 1.0), make_map(chartmap::Polyline{std::move(vertices), closed}), static_cast<int>(d), lip};
}

LipschitzChart LipschitzChart::trig_curve(Vec center, Vec amplitude, Vec frequency, Vec phase, Vec drift, double t0,
                                          double t1) {
  const auto d = center.size();
  if (amplitude.size() != d || frequency.size() != d || phase.size() != d || drift.size() != d)
    throw Error(ErrorCode::BadDimension, "trig curve coefficient lengths disagree");
  double lip2 = 0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double speed = std::abs(amplitude[k] * frequency[k]) + std::abs(drift[k]);
    lip2 += speed * speed;
  }
  Vec lo(1), hi(1);
  lo << t0;
  hi << t1;
  return {Box(lo, hi), make_map(chartmap::TrigCurve{std::move(center), std::move(amplitude), std::move(frequency),
                                                    std::move(phase), std::move(drift)}),
          static_cast<int>(d), std::sqrt(lip2)};
}

LipschitzChart LipschitzChart::circle(const Vec& center, double radius) {
  if (center.size() < 2) throw Error(ErrorCode::BadDimension, "circle needs at least two coordinates");
  const auto d = center.size();
  Vec amp = Vec::Zero(d), freq = Vec::Zero(d), phase = Vec::Zero(d);
  amp[0] = amp[1] = radius;
  freq[0] = freq[1] = 2.0 * std::numbers::pi;
  phase[1] = -std::numbers::pi / 2;  // cos(w t - pi/2) = sin(w t)
  return trig_curve(center, amp, freq, phase, Vec::Zero(d), 0.0, 1.0);
}

LipschitzChart LipschitzChart::graph(double t0, double t1, double amplitude, double frequency, double phase,
                                     double offset) {
  Vec center(2), amp(2), freq(2), ph(2), drift(2);
  center << 0.0, offset;
  amp << 0.0, amplitude;
  freq << 0.0, frequency;
  ph << 0.0, phase - std::numbers::pi / 2;  // sin(x) = cos(x - pi/2)
  drift << 1.0, 0.0;
  return trig_curve(center, amp, freq, ph, drift, t0, t1);
}

bool LipschitzChart::constrained() const { return has_restrict(*map_); }

Vec LipschitzChart::evaluate(const Vec& y) const {
  if (y.size() != param_dim()) throw Error(ErrorCode::DomainViolation, "chart parameter has wrong dimension");
  return eval_map(*map_, y, nullptr);
}

Vec LipschitzChart::evaluate(const Vec& y, bool& accepted) const {
  if (y.size() != param_dim()) throw Error(ErrorCode::DomainViolation, "chart parameter has wrong dimension");
  accepted = true;
  return eval_map(*map_, y, &accepted);
}

bool LipschitzChart::param_in_mask(const Vec& y, double tol) const {
  for (int k = 0; k < param_dim(); ++k) {
    const double w = domain_.hi[k] - domain_.lo[k];
    const double u = w > 0 ? (y[k] - domain_.lo[k]) / w : 0.0;
    if (!mask_[k].contains(u, w > 0 ? tol / w : tol)) return false;
  }
  return true;
}

double LipschitzChart::masked_volume() const {
  double v = 1.0;
  for (int k = 0; k < param_dim(); ++k) v *= (domain_.hi[k] - domain_.lo[k]) * mask_[k].measure();
  return v;
}

Vec LipschitzChart::sample_param(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec y(param_dim());
  for (int k = 0; k < param_dim(); ++k)
    y[k] = domain_.lo[k] + (domain_.hi[k] - domain_.lo[k]) * mask_[k].point(unit(rng));
  return y;
}

LipschitzChart LipschitzChart::with_mask(std::vector<CantorAxis> mask) const {
  return {domain_, map_, ambient_dim_, lip_, std::move(mask), lip_estimated_};
}

LipschitzChart LipschitzChart::restricted(const HalfSpace& h) const {
  if (h.coord < 0 || h.coord >= ambient_dim_) throw Error(ErrorCode::BadDimension, "constraint coordinate out of range");
  return {domain_, make_map(chartmap::Restrict{map_, {h}}), ambient_dim_, lip_, mask_, lip_estimated_};
}

LipschitzChart LipschitzChart::composed(const MapExpr& map, double lip_bound, bool estimated) const {
  if (map.dim() != ambient_dim_) throw Error(ErrorCode::BadDimension, "map dimension does not match chart");
  return {domain_, make_map(chartmap::Image{map_, map}), ambient_dim_, lip_ * lip_bound, mask_,
          lip_estimated_ || estimated};
}

LipschitzChart LipschitzChart::product(const LipschitzChart& a, const LipschitzChart& b) {
  Vec lo(a.param_dim() + b.param_dim()), hi(lo.size());
  lo << a.domain_.lo, b.domain_.lo;
  hi << a.domain_.hi, b.domain_.hi;
  std::vector<CantorAxis> mask = a.mask_;
  mask.insert(mask.end(), b.mask_.begin(), b.mask_.end());
  return {Box(lo, hi), make_map(chartmap::Product{a.map_, b.map_, a.param_dim()}), a.ambient_dim_ + b.ambient_dim_,
          std::hypot(a.lip_, b.lip_), std::move(mask), a.lip_estimated_ || b.lip_estimated_};
}

nlohmann::json LipschitzChart::to_json() const {
  auto mask = nlohmann::json::array();
  for (const auto& a : mask_) mask.push_back({{"ratio", a.ratio}, {"depth", a.depth}});
  return {{"kind", "chart"},          {"domain", box_to_json(domain_)}, {"map", map_to_json(*map_)},
          {"ambient_dim", ambient_dim_}, {"lip_const", lip_},           {"lip_estimated", lip_estimated_},
          {"mask", mask}};
}

namespace {

std::vector<CantorAxis> mask_from_json(const nlohmann::json& j, int m) {
  if (j.is_array()) {
    std::vector<CantorAxis> out;
    for (const auto& a : j) out.push_back({a.at("ratio").get<double>(), a.at("depth").get<int>()});
    return out;
  }
  const int depth = j.at("depth").get<int>();
  // target_dim is per axis, so m masked axes give dimension m * target_dim.
  const double ratio = j.contains("ratio") ? j.at("ratio").get<double>() : cantor_ratio(j.at("target_dim").get<double>(), 1);
  return std::vector<CantorAxis>(static_cast<std::size_t>(m), CantorAxis{ratio, depth});
}

LipschitzChart base_chart_from_json(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "chart") {
    return {box_from_json(j.at("domain")), map_from_json(j.at("map")), j.at("ambient_dim").get<int>(),
            j.at("lip_const").get<double>(), {}, j.value("lip_estimated", false)};
  }
  if (kind == "point") return LipschitzChart::point(vec_from_json(j.at("at")));
  if (kind == "affine_segment") return LipschitzChart::segment(vec_from_json(j.at("from")), vec_from_json(j.at("to")));
  if (kind == "box") return LipschitzChart::box(Box(vec_from_json(j.at("lo")), vec_from_json(j.at("hi"))));
  if (kind == "polyline") {
    std::vector<Vec> v;
    for (const auto& x : j.at("vertices")) v.push_back(vec_from_json(x));
    return LipschitzChart::polyline(std::move(v), j.value("closed", false));
  }
  if (kind == "circle") return LipschitzChart::circle(vec_from_json(j.at("center")), j.at("radius").get<double>());
  if (kind == "graph_of_function") {
    return LipschitzChart::graph(j.value("t0", 0.0), j.value("t1", 1.0), j.value("amplitude", 0.0),
                                 j.value("frequency", 1.0), j.value("phase", 0.0), j.value("offset", 0.0));
  }
  if (kind == "trig_curve") {
    const Vec center = vec_from_json(j.at("center"));
    const auto zeros = Vec::Zero(center.size());
    const auto opt = [&](const char* key) { return j.contains(key) ? vec_from_json(j.at(key)) : Vec(zeros); };
    return LipschitzChart::trig_curve(center, opt("amplitude"), opt("frequency"), opt("phase"), opt("drift"),
                                      j.value("t0", 0.0), j.value("t1", 1.0));
  }
  if (kind == "cantor_dust") {
    const int m = j.value("param_dim", 1);
    const auto dust = cantor_dust(j.at("target_dim").get<double>(), m, j.at("depth").get<int>()).charts().front();
    if (!j.contains("lo")) return dust;
    const Box place(vec_from_json(j.at("lo")), vec_from_json(j.at("hi")));
    if (place.dim() != m) throw Error(ErrorCode::BadDimension, "dust placement box must match param_dim");
    return LipschitzChart::box(place).with_mask(dust.mask());
  }
  if (kind == "product") return LipschitzChart::product(LipschitzChart::from_json(j.at("first")), LipschitzChart::from_json(j.at("second")));
  if (kind == "image") {
    const auto base = LipschitzChart::from_json(j.at("base"));
    return base.composed(MapExpr::from_json(j.at("map")), j.at("lip_bound").get<double>(), j.value("lip_estimated", false));
  }
  throw Error(ErrorCode::Parse, "unknown chart kind '" + kind + "'");
}

}  // namespace

LipschitzChart LipschitzChart::from_json(const nlohmann::json& j) {
  try {
    LipschitzChart c = base_chart_from_json(j);
    if (j.contains("mask")) c = c.with_mask(mask_from_json(j.at("mask"), c.param_dim()));
    if (j.contains("cantor")) c = c.with_mask(mask_from_json(j.at("cantor"), c.param_dim()));
    if (j.contains("constraints")) {
      chartmap::Restrict r{c.map_ptr(), {}};
      for (const auto& h : j.at("constraints")) r.constraints.push_back(halfspace_from_json(h));
      c = LipschitzChart(c.domain(), make_map(std::move(r)), c.ambient_dim(), c.lip_const(), c.mask(), c.lip_estimated());
    }
    if (j.contains("lip_const") && j.at("kind") != "chart")
      c = LipschitzChart(c.domain(), c.map_ptr(), c.ambient_dim(), j.at("lip_const").get<double>(), c.mask(), c.lip_estimated());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed chart: ") + e.what());
  }
}

// ---------------------------------------------------------------- RectifiableSet

RectifiableSet::RectifiableSet(int ambient_dim, int rect_order, std::vector<LipschitzChart> charts, std::string label)
    : ambient_dim_(ambient_dim), rect_order_(rect_order), charts_(std::move(charts)), label_(std::move(label)) {
  if (ambient_dim_ < 1 || rect_order_ < 0) throw Error(ErrorCode::BadDimension, "bad set dimensions");
  for (const auto& c : charts_) {
    if (c.ambient_dim() != ambient_dim_ || c.param_dim() != rect_order_)
      throw Error(ErrorCode::BadDimension, "chart dimensions disagree with the set");
  }
}

RectifiableSet RectifiableSet::empty(int ambient_dim, int rect_order, std::string label) {
  return RectifiableSet(ambient_dim, rect_order, {}, std::move(label));
}

bool RectifiableSet::lip_estimated() const {
  return std::any_of(charts_.begin(), charts_.end(), [](const auto& c) { return c.lip_estimated(); });
}

RectifiableSet RectifiableSet::with_label(std::string label) const {
  RectifiableSet s = *this;
  s.label_ = std::move(label);
  return s;
}

nlohmann::json RectifiableSet::to_json() const {
  nlohmann::json j{{"ambient_dim", ambient_dim_}, {"rect_order", rect_order_}, {"label", label_}};
  if (factors_) {
    j["factors"] = {factors_->first.to_json(), factors_->second.to_json()};
    return j;
  }
  auto charts = nlohmann::json::array();
  for (const auto& c : charts_) charts.push_back(c.to_json());
  j["charts"] = charts;
  return j;
}

RectifiableSet RectifiableSet::from_json(const nlohmann::json& j) {
  try {
    if (j.contains("factors")) {
      const auto& f = j.at("factors");
      if (!f.is_array() || f.size() != 2) throw Error(ErrorCode::Parse, "factors must list two sets");
      return product(from_json(f[0]), from_json(f[1])).with_label(j.value("label", ""));
    }
    std::vector<LipschitzChart> charts;
    for (const auto& c : j.at("charts")) charts.push_back(LipschitzChart::from_json(c));
    const int ambient = j.contains("ambient_dim") ? j.at("ambient_dim").get<int>()
                                                  : (charts.empty() ? 1 : charts.front().ambient_dim());
    const int order = j.contains("rect_order") ? j.at("rect_order").get<int>()
                                               : (charts.empty() ? 0 : charts.front().param_dim());
    return RectifiableSet(ambient, order, std::move(charts), j.value("label", ""));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed set: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Parse) throw;
    throw Error(ErrorCode::Parse, e.what());
  }
}

RectifiableSet RectifiableSet::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Parse, "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, "'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------- operations

namespace {

constexpr std::uint64_t kProbeSeed = 0x5eedf00dULL;

double acceptance_rate(const LipschitzChart& c, int probes, std::uint64_t stream) {
  if (!c.constrained()) return 1.0;
  std::mt19937_64 rng(split_seed(kProbeSeed, stream));
  std::vector<Vec> params(static_cast<std::size_t>(probes));
  for (auto& y : params) y = c.sample_param(rng);
  std::vector<char> ok(params.size(), 0);
  parallel_for(params.size(), [&](std::size_t i) {
    bool accepted = false;
    c.evaluate(params[i], accepted);
    ok[i] = accepted;
  });
  std::size_t hits = 0;
  for (char v : ok) hits += v;
  return static_cast<double>(hits) / probes;
}

}  // namespace

SampleCloud sample(const RectifiableSet& set, std::size_t count, std::uint64_t seed, const SampleOptions& options) {
  SampleCloud cloud;
  cloud.dim = set.ambient_dim();
  cloud.seed = seed;
  if (count == 0) return cloud;
  if (set.is_empty()) throw Error(ErrorCode::EmptySet, "cannot sample the empty set '" + set.label() + "'");

  if (const auto* f = set.factors()) {
    const SampleCloud a = sample(f->first, count, split_seed(seed, 0), options);
    const SampleCloud b = sample(f->second, count, split_seed(seed, 1), options);
    const int nb = static_cast<int>(f->second.charts().size());
    cloud.points.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      Vec x(cloud.dim), y(a.params[i].size() + b.params[i].size());
      x << a.points[i], b.points[i];
      y << a.params[i], b.params[i];
      cloud.add(std::move(x), a.chart[i] * nb + b.chart[i], std::move(y));
    }
    return cloud;
  }

  const auto& charts = set.charts();
  std::vector<double> weights(charts.size());
  for (std::size_t c = 0; c < charts.size(); ++c)
    weights[c] = charts[c].masked_volume() * acceptance_rate(charts[c], options.acceptance_probe, c);
  if (std::all_of(weights.begin(), weights.end(), [](double w) { return w <= 0; })) {
    // Zero-volume domains (points, degenerate boxes) are sampled by count instead.
    bool any_volume = false;
    for (std::size_t c = 0; c < charts.size(); ++c) any_volume = any_volume || charts[c].masked_volume() > 0;
    if (any_volume) throw Error(ErrorCode::MaskRejectionExhausted, "no chart of '" + set.label() + "' accepts samples");
    std::fill(weights.begin(), weights.end(), 1.0);
  }

  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> chart_of(count);
  std::vector<Vec> params(count), points(count);
  std::vector<int> attempts(count, 0);
  for (std::size_t i = 0; i < count; ++i) {
    chart_of[i] = pick(rng);
    params[i] = charts[chart_of[i]].sample_param(rng);
  }
  std::vector<std::size_t> pending(count);
  for (std::size_t i = 0; i < count; ++i) pending[i] = i;
  while (!pending.empty()) {
    std::vector<char> ok(pending.size(), 0);
    parallel_for(pending.size(), [&](std::size_t k) {
      const std::size_t i = pending[k];
      bool accepted = true;
      points[i] = charts[chart_of[i]].evaluate(params[i], accepted);
      ok[k] = accepted;
    });
    std::vector<std::size_t> next;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      if (ok[k]) continue;
      const std::size_t i = pending[k];
      if (++attempts[i] >= options.rejection_budget)
        throw Error(ErrorCode::MaskRejectionExhausted, "rejection budget exhausted on '" + set.label() + "'");
      params[i] = charts[chart_of[i]].sample_param(rng);
      next.push_back(i);
    }
    pending = std::move(next);
  }
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) cloud.add(std::move(points[i]), static_cast<int>(chart_of[i]), std::move(params[i]));
  return cloud;
}

double estimate_lipschitz(const MapExpr& map, const SampleCloud& cloud, double safety) {
  std::vector<double> norms(cloud.size(), 0.0);
  parallel_for(cloud.size(), [&](std::size_t i) {
    const Mat j = map.jacobian(cloud.points[i], MapExpr::JacobianMode::FiniteDifference);
    norms[i] = Eigen::JacobiSVD<Mat>(j).singularValues()(0);
  });
  double best = 0;
  for (double n : norms) best = std::max(best, n);
  return best * safety;
}

RectifiableSet image(const RectifiableSet& set, const MapExpr& map, double lip_bound, const std::optional<Box>& domain) {
  if (map.dim() != set.ambient_dim()) throw Error(ErrorCode::BadDimension, "map dimension does not match the set");
  const bool estimated = !(lip_bound > 0);
  if ((estimated || domain) && !set.is_empty()) {
    const SampleCloud probe = sample(set, 256, kProbeSeed);
    if (domain) {
      for (const auto& x : probe.points)
        if (!domain->contains(x)) throw Error(ErrorCode::DomainViolation, "set leaves the map's declared domain");
    }
    if (estimated) lip_bound = std::max(estimate_lipschitz(map, probe), 1e-300);
  }
  std::vector<LipschitzChart> charts;
  charts.reserve(set.charts().size());
  for (const auto& c : set.charts()) charts.push_back(c.composed(map, lip_bound, estimated));
  return RectifiableSet(set.ambient_dim(), set.rect_order(), std::move(charts), set.label());
}

RectifiableSet product(const RectifiableSet& a, const RectifiableSet& b) {
  std::vector<LipschitzChart> charts;
  for (const auto& ca : a.charts())
    for (const auto& cb : b.charts()) charts.push_back(LipschitzChart::product(ca, cb));
  RectifiableSet out(a.ambient_dim() + b.ambient_dim(), a.rect_order() + b.rect_order(), std::move(charts),
                     a.label() + " x " + b.label());
  if (!a.is_empty() && !b.is_empty()) out.factors_ = std::make_shared<const std::pair<RectifiableSet, RectifiableSet>>(a, b);
  return out;
}

RectifiableSet set_union(const RectifiableSet& a, const RectifiableSet& b) {
  if (a.ambient_dim() != b.ambient_dim() || a.rect_order() != b.rect_order())
    throw Error(ErrorCode::BadDimension, "union of sets with different dimensions");
  std::vector<LipschitzChart> charts = a.charts();
  charts.insert(charts.end(), b.charts().begin(), b.charts().end());
  return RectifiableSet(a.ambient_dim(), a.rect_order(), std::move(charts), a.label() + " u " + b.label());
}

RectifiableSet cantor_dust(double target_dim, int param_dim, int depth) {
  const double r = cantor_ratio(target_dim, param_dim);
  if (depth < 1) throw Error(ErrorCode::Precondition, "dust depth must be >= 1");
  auto chart = LipschitzChart::box(Box::cube(param_dim, 0.0, 1.0));
  chart = chart.with_mask(std::vector<CantorAxis>(static_cast<std::size_t>(param_dim), CantorAxis{r, depth}));
  return RectifiableSet(param_dim, param_dim, {chart}, "dust");
}

std::pair<RectifiableSet, RectifiableSet> split_by_p_sign(const RectifiableSet& set, const SampleOptions& options) {
  if (set.ambient_dim() < 2) throw Error(ErrorCode::BadDimension, "p-sign split needs ambient dimension >= 2");
  std::vector<LipschitzChart> plus, minus;
  for (std::size_t c = 0; c < set.charts().size(); ++c) {
    const auto& chart = set.charts()[c];
    const auto up = chart.restricted({1, 0.0, true});
    const auto down = chart.restricted({1, 0.0, false});
    if (chart.masked_volume() <= 0) {
      // Points and other zero-volume charts: classify the single image directly.
      std::mt19937_64 rng(kProbeSeed);
      bool ok = false;
      up.evaluate(chart.sample_param(rng), ok);
      (ok ? plus : minus).push_back(ok ? up : down);
      continue;
    }
    const double rate = acceptance_rate(up, options.acceptance_probe, c);
    if (rate > 0) plus.push_back(up);
    if (rate < 1) minus.push_back(down);
  }
  return {RectifiableSet(set.ambient_dim(), set.rect_order(), std::move(plus), set.label() + "+"),
          RectifiableSet(set.ambient_dim(), set.rect_order(), std::move(minus), set.label() + "-")};
}

Box sampled_bounds(const RectifiableSet& set, std::size_t count, std::uint64_t seed, double margin) {
  return sample(set, count, seed).bounds().expanded(margin);
}

}  // namespace sympfold
