#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "sympfold/hausdorff.hpp"
#include "sympfold/set_model.hpp"

using namespace sympfold;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

RectifiableSet single(const LipschitzChart& c, std::string label = "set") {
  return RectifiableSet(c.ambient_dim(), c.param_dim(), {c}, std::move(label));
}

RectifiableSet unit_segment() { return single(LipschitzChart::segment(v2(0, 0), v2(1, 0)), "segment"); }

RectifiableSet square_boundary() {
  return single(LipschitzChart::polyline({v2(0, 0), v2(1, 0), v2(1, 1), v2(0, 1)}, true), "square");
}

// Middle-thirds intervals at the given depth, built by repeated trisection.
std::vector<std::pair<double, double>> thirds(int depth) {
  std::vector<std::pair<double, double>> out{{0.0, 1.0}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::pair<double, double>> next;
    for (auto [a, b] : out) {
      const double t = (b - a) / 3;
      next.emplace_back(a, a + t);
      next.emplace_back(b - t, b);
    }
    out = next;
  }
  return out;
}

}  // namespace

TEST(Sample, SegmentPointsLieOnSegment) {
  const auto seg = single(LipschitzChart::segment(v2(0, 0), v2(1, 0)));
  const auto c = sample(seg, 3, 7);
  ASSERT_EQ(c.size(), 3u);
  for (const auto& p : c.points) {
    EXPECT_EQ(p[1], 0.0);
    EXPECT_GE(p[0], 0.0);
    EXPECT_LE(p[0], 1.0);
  }
}

TEST(Sample, ZeroCountGivesEmptyCloud) {
  EXPECT_TRUE(sample(unit_segment(), 0, 4).empty());
  EXPECT_TRUE(sample(RectifiableSet::empty(2, 1), 0, 4).empty());
}

TEST(Sample, EmptySetWithPositiveCountThrows) {
  try {
    sample(RectifiableSet::empty(2, 1), 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptySet);
  }
}

TEST(Sample, CantorDustPointsLieInDepthSixIntervals) {
  const auto dust = cantor_dust(std::log(2.0) / std::log(3.0), 1, 6);
  const auto c = sample(dust, 100, 1);
  const auto intervals = thirds(6);
  for (const auto& p : c.points) {
    bool inside = false;
    for (auto [a, b] : intervals) inside = inside || (p[0] >= a - 1e-15 && p[0] <= b + 1e-15);
    EXPECT_TRUE(inside) << p[0];
  }
}

TEST(Sample, ProvenanceReproducesPoints) {
  const auto set = set_union(square_boundary(), single(LipschitzChart::circle(v2(0.5, 0.5), 0.3)));
  const auto c = sample(set, 500, 9);
  for (std::size_t i = 0; i < c.size(); ++i)
    EXPECT_LE((set.charts()[c.chart[i]].evaluate(c.params[i]) - c.points[i]).norm(), 1e-15);
}

TEST(Sample, SameSeedSameCloud) {
  const auto set = square_boundary();
  const auto a = sample(set, 200, 42), b = sample(set, 200, 42), other = sample(set, 200, 43);
  EXPECT_EQ(a.points, b.points);
  EXPECT_NE(a.points, other.points);
}

TEST(Sample, UnsatisfiableConstraintExhaustsRejection) {
  const auto chart = LipschitzChart::segment(v2(0, 0), v2(1, 0)).restricted({1, 10.0, true});
  SampleOptions opts;
  opts.rejection_budget = 50;
  opts.acceptance_probe = 16;
  try {
    sample(single(chart), 3, 1, opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MaskRejectionExhausted);
  }
}

TEST(Sample, ChartsWeightedByParameterVolume) {
  const auto a = LipschitzChart::segment(v2(0, 0), v2(1, 0));
  const auto b = LipschitzChart::segment(v2(0, 5), v2(3, 5));
  const auto c = sample(RectifiableSet(2, 1, {a, b}), 4000, 3);
  std::size_t first = 0;
  for (int k : c.chart) first += (k == 0);
  // Both domains are [0,1], so the split is even despite the different lengths.
  EXPECT_NEAR(static_cast<double>(first) / 4000.0, 0.5, 0.04);
}

TEST(Chart, LipschitzBoundHoldsOnRandomPairs) {
  std::vector<LipschitzChart> charts = {
      LipschitzChart::segment(v2(0, 0), v2(2, 1)),
      LipschitzChart::polyline({v2(0, 0), v2(1, 0), v2(1, 3)}, false),
      LipschitzChart::circle(v2(0, 0), 1.5),
      LipschitzChart::graph(0.0, 2.0, 0.3, 5.0, 0.2, 0.0),
      LipschitzChart::box(Box(v2(0, 0), v2(2, 0.5))),
      LipschitzChart::product(LipschitzChart::circle(v2(0, 0), 1.0), LipschitzChart::segment(v2(0, 0), v2(0, 2))),
      cantor_dust(0.8, 2, 5).charts().front(),
  };
  std::mt19937_64 rng(5);
  for (const auto& c : charts) {
    const double diam = c.domain().diameter();
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
      const Vec y = c.sample_param(rng), z = c.sample_param(rng);
      const double excess = (c.evaluate(y) - c.evaluate(z)).norm() - c.lip_const() * (y - z).norm();
      worst = std::max(worst, excess);
    }
    EXPECT_LE(worst, 1e-9 * c.lip_const() * diam) << c.to_json();
  }
}

TEST(Image, IdentityKeepsSetAndConstants) {
  const auto seg = unit_segment();
  const auto img = image(seg, MapExpr::identity(2), 1.0);
  EXPECT_EQ(img.charts().front().lip_const(), seg.charts().front().lip_const());
  EXPECT_EQ(sample(img, 50, 3).points, sample(seg, 50, 3).points);
}

TEST(Image, TranslationMovesSegmentUp) {
  const auto img = image(unit_segment(), MapExpr::translation(v2(0, 1)), 1.0);
  for (const auto& p : sample(img, 100, 2).points) EXPECT_EQ(p[1], 1.0);
}

TEST(Image, ShearShiftsMomentumOfSquareBoundary) {
  const auto f = CutoffProfile::step_up(-0.25, 0.0);
  const auto psi = MapExpr::shear(f);
  const auto img = image(square_boundary(), psi, 1.0 + f.max_abs_derivative());
  const auto before = sample(square_boundary(), 1000, 11);
  const auto after = sample(img, 1000, 11);
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double q = before.points[i][0], p = before.points[i][1];
    EXPECT_DOUBLE_EQ(after.points[i][0], q);
    EXPECT_DOUBLE_EQ(after.points[i][1], p - f.value(q));
  }
}

TEST(Image, ImageOfImageEqualsImageOfComposite) {
  const auto f = MapExpr::shear(CutoffProfile::step_up(0.2, 0.6));
  const auto g = MapExpr::ham_flow(HamiltonianSpec::qp_product(2, 0.5, 1.5), 0.2);
  const auto s = square_boundary();
  const auto twice = sample(image(image(s, f, 6.0), g, 3.0), 300, 5);
  const auto once = sample(image(s, MapExpr::compose({g, f}), 18.0), 300, 5);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_LE((twice.points[i] - once.points[i]).norm(), 1e-12);
}

TEST(Image, EstimatedLipschitzIsFlagged) {
  const auto img = image(unit_segment(), MapExpr::diagonal_scaling(3.0, 0, 0), 0.0);
  EXPECT_TRUE(img.lip_estimated());
  EXPECT_GE(img.charts().front().lip_const(), 3.0);
}

TEST(Image, LeavingDeclaredDomainThrows) {
  try {
    image(unit_segment(), MapExpr::identity(2), 1.0, Box(v2(0.5, -1), v2(2, 1)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DomainViolation);
  }
}

TEST(Product, PointTimesPointIsOrigin) {
  const auto p = single(LipschitzChart::point(v1(0.0)));
  const auto pp = product(p, p);
  EXPECT_EQ(pp.ambient_dim(), 2);
  EXPECT_EQ(pp.rect_order(), 0);
  for (const auto& x : sample(pp, 5, 1).points) EXPECT_EQ(x, v2(0, 0));
}

TEST(Product, SegmentTimesSegmentBookkeeping) {
  const auto s = unit_segment();
  const auto ss = product(s, s);
  EXPECT_EQ(ss.ambient_dim(), 4);
  EXPECT_EQ(ss.rect_order(), 2);
  EXPECT_DOUBLE_EQ(ss.charts().front().lip_const(), std::sqrt(2.0));
}

TEST(Product, MarginalsAreSplitSeedClouds) {
  const auto a = square_boundary();
  const auto b = single(LipschitzChart::circle(v2(3, 3), 0.5));
  const auto ab = sample(product(a, b), 400, 77);
  const auto ca = sample(a, 400, split_seed(77, 0));
  const auto cb = sample(b, 400, split_seed(77, 1));
  for (std::size_t i = 0; i < ab.size(); ++i) {
    EXPECT_EQ(Vec(ab.points[i].head(2)), ca.points[i]);
    EXPECT_EQ(Vec(ab.points[i].tail(2)), cb.points[i]);
  }
}

TEST(Product, DustTimesIntervalHasExpectedBoxDimension) {
  const auto dust = cantor_dust(std::log(2.0) / std::log(3.0), 1, 10);
  const auto interval = single(LipschitzChart::segment(v1(0), v1(1)));
  std::vector<double> scales;
  for (int k = 1; k <= 5; ++k) scales.push_back(std::pow(3.0, -k));
  const auto est = box_dimension(product(dust, interval), scales, 4, 300000);
  EXPECT_NEAR(est.slope, 1.0 + std::log(2.0) / std::log(3.0), 0.05);
}

TEST(CantorDust, RatiosSolveSimilarityEquation) {
  EXPECT_NEAR(cantor_dust(std::log(2.0) / std::log(3.0), 1, 8).charts()[0].mask()[0].ratio, 1.0 / 3, 1e-15);
  EXPECT_DOUBLE_EQ(cantor_dust(1.0, 1, 5).charts()[0].mask()[0].ratio, 0.5);
  EXPECT_DOUBLE_EQ(cantor_dust(0.5, 1, 6).charts()[0].mask()[0].ratio, 0.25);
  // 2^m pieces of ratio r with 2^m r^s = 1
  const double r = cantor_dust(1.7, 2, 4).charts()[0].mask()[0].ratio;
  EXPECT_NEAR(4.0 * std::pow(r, 1.7), 1.0, 1e-12);
}

TEST(CantorDust, FullDimensionTilesTheInterval) {
  const auto c = sample(cantor_dust(1.0, 1, 7), 2000, 2);
  double lo = 1, hi = 0;
  for (const auto& p : c.points) {
    lo = std::min(lo, p[0]);
    hi = std::max(hi, p[0]);
  }
  EXPECT_LT(lo, 0.01);
  EXPECT_GT(hi, 0.99);
  EXPECT_DOUBLE_EQ(cantor_dust(1.0, 1, 7).charts()[0].masked_volume(), 1.0);
}

TEST(CantorDust, RejectsBadDimension) {
  EXPECT_THROW(cantor_dust(0.0, 1, 3), Error);
  EXPECT_THROW(cantor_dust(1.5, 1, 3), Error);
  EXPECT_THROW(cantor_dust(0.5, 1, 0), Error);
}

TEST(CantorAxis, CellCountMatchesIntervalEnumeration) {
  const CantorAxis axis{0.3, 9};
  const auto intervals = axis.intervals();
  for (double cell : {0.2, 0.031, 0.0047, 0.0001}) {
    for (double off : {0.0, -0.3 * cell}) {
      std::vector<std::int64_t> hit;
      for (auto [a, b] : intervals) {
        for (auto j = static_cast<std::int64_t>(std::floor((a - off) / cell));
             j <= static_cast<std::int64_t>(std::floor((b - off) / cell)); ++j)
          if (hit.empty() || hit.back() < j) hit.push_back(j);
      }
      EXPECT_EQ(axis.cell_count(cell, off), static_cast<std::int64_t>(hit.size())) << cell;
      EXPECT_EQ(axis.cells(cell, off), hit);
    }
  }
}

TEST(Split, SegmentSplitsAtHalf) {
  const auto seg = single(LipschitzChart::segment(v2(0, -0.5), v2(1, 0.5)));
  const auto [plus, minus] = split_by_p_sign(seg);
  for (const auto& p : sample(plus, 300, 1).points) EXPECT_GT(p[1], 0.0);
  for (const auto& p : sample(minus, 300, 1).points) EXPECT_LE(p[1], 0.0);
  const auto c = sample(plus, 300, 2);
  for (const auto& y : c.params) EXPECT_GT(y[0], 0.5);
}

TEST(Split, SetAbovePlaneStaysWhole) {
  const auto seg = single(LipschitzChart::segment(v2(0, 0.2), v2(1, 0.4)));
  const auto [plus, minus] = split_by_p_sign(seg);
  EXPECT_EQ(plus.charts().size(), 1u);
  EXPECT_TRUE(minus.is_empty());
}

TEST(Split, CircleSplitsEvenly) {
  const auto circle = single(LipschitzChart::circle(v2(0, 0), 1.0));
  const auto c = sample(circle, 1000, 6);
  std::size_t up = 0;
  for (const auto& p : c.points) up += p[1] > 0;
  EXPECT_NEAR(static_cast<double>(up), 500.0, 80.0);  // five binomial standard deviations
}

TEST(Split, HalvesPartitionSampledPoints) {
  const auto set = set_union(square_boundary(), single(LipschitzChart::circle(v2(0.2, -0.1), 0.7)));
  const auto [plus, minus] = split_by_p_sign(set);
  const auto c = sample(set, 2000, 8);
  for (std::size_t i = 0; i < c.size(); ++i) {
    bool in_plus = false, in_minus = false;
    set.charts()[c.chart[i]].restricted({1, 0.0, true}).evaluate(c.params[i], in_plus);
    set.charts()[c.chart[i]].restricted({1, 0.0, false}).evaluate(c.params[i], in_minus);
    EXPECT_NE(in_plus, in_minus);
  }
}

TEST(SetJson, RoundTripKeepsSamples) {
  const auto dust_curve = LipschitzChart::graph(0.0, 1.0, 0.2, 6.0, 0.0, 0.5).with_mask({CantorAxis{0.4, 6}});
  const auto set = RectifiableSet(2, 1, {dust_curve, square_boundary().charts()[0]}, "mix");
  const auto back = RectifiableSet::from_json(nlohmann::json::parse(set.to_json().dump()));
  EXPECT_EQ(sample(back, 200, 3).points, sample(set, 200, 3).points);
  const auto prod = product(square_boundary(), unit_segment());
  const auto prod_back = RectifiableSet::from_json(prod.to_json());
  EXPECT_EQ(sample(prod_back, 100, 5).points, sample(prod, 100, 5).points);
}

TEST(SetJson, FriendlyKindsParse) {
  const auto j = nlohmann::json::parse(R"({
    "ambient_dim": 2, "rect_order": 1,
    "charts": [
      {"kind": "affine_segment", "from": [0, 0], "to": [1, 1]},
      {"kind": "polyline", "vertices": [[0, 0], [1, 0], [1, 1]], "closed": true},
      {"kind": "graph_of_function", "t0": 0, "t1": 1, "amplitude": 0.1, "frequency": 3},
      {"kind": "circle", "center": [0, 0], "radius": 2, "cantor": {"target_dim": 0.9, "depth": 8}}
    ]})");
  const auto set = RectifiableSet::from_json(j);
  EXPECT_EQ(set.charts().size(), 4u);
  EXPECT_NEAR(set.charts()[3].mask()[0].ratio, std::pow(2.0, -1 / 0.9), 1e-15);
  const auto dust = RectifiableSet::from_json(nlohmann::json::parse(
      R"({"ambient_dim": 1, "rect_order": 1, "charts": [{"kind": "cantor_dust", "target_dim": 0.5, "param_dim": 1, "depth": 4}]})"));
  EXPECT_DOUBLE_EQ(dust.charts()[0].mask()[0].ratio, 0.25);
}

TEST(SetJson, MalformedInputIsParseError) {
  try {
    RectifiableSet::from_json(nlohmann::json::parse(R"({"charts": [{"kind": "blob"}]})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  EXPECT_THROW(RectifiableSet::load("/nonexistent/set.json"), Error);
}

TEST(Cloud, CsvHasProvenanceColumns) {
  std::ostringstream out;
  sample(unit_segment(), 2, 1).write_csv(out);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "x1,x2,chart,y1");
}
