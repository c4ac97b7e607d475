#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sympfold/displacement.hpp"

using namespace sympfold;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

RectifiableSet single(const LipschitzChart& c) { return RectifiableSet(c.ambient_dim(), c.param_dim(), {c}); }

RectifiableSet origin() { return single(LipschitzChart::point(v2(0, 0))); }

// Middle-thirds dust on the q axis of the plane.
RectifiableSet dust_on_axis(int depth) {
  const auto axis = LipschitzChart::segment(v2(0, 0), v2(1, 0)).with_mask({CantorAxis{1.0 / 3, depth}});
  return single(axis);
}

// Brute force: smallest |a_i + t v - b_j|.
double brute_distance(const SampleCloud& a, const SampleCloud& b, const Vec& v, double t) {
  double best = INFINITY;
  for (const auto& x : a.points)
    for (const auto& y : b.points) best = std::min(best, (x + t * v - y).norm());
  return best;
}

}  // namespace

TEST(LinearHamiltonian, FieldIsConstantV0) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  for (int dim : {2, 4, 6}) {
    Vec v0(dim);
    for (auto& c : v0) c = n(rng);
    const LinearHamiltonian h{v0};
    const double step = 1e-6;
    for (int k = 0; k < 20; ++k) {
      Vec x(dim);
      for (auto& c : x) c = n(rng);
      Vec grad(dim);
      for (int c = 0; c < dim; ++c) {
        Vec e = Vec::Zero(dim);
        e[c] = step;
        grad[c] = (h.value(x + e) - h.value(x - e)) / (2 * step);
      }
      EXPECT_LE((standard_j(dim) * grad - v0).lpNorm<Eigen::Infinity>(), 1e-8);
    }
    EXPECT_LE((h.field() - v0).norm(), 1e-15);
  }
}

TEST(LinearHamiltonian, MinusE2GivesFirstCoordinate) {
  const LinearHamiltonian h{v2(0, -1)};
  EXPECT_EQ(h.value(v2(0.3, 7.0)), 0.3);
}

TEST(TranslationFlow, Examples) {
  EXPECT_EQ(translation_flow({v2(1, 0)}, 2.0, v2(0, 0)), v2(2, 0));
  EXPECT_EQ(translation_flow({v2(0.3, -0.7)}, 0.0, v2(5, 6)), v2(5, 6));
  EXPECT_EQ(translation_flow({v2(0, 1)}, -1.0, v2(3, 4)), v2(3, 3));
}

TEST(TranslationFlow, GroupLawOnDyadicData) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> k(-512, 512);
  auto dyadic = [&] { return k(rng) / 64.0; };
  for (int i = 0; i < 1000; ++i) {
    const LinearHamiltonian h{v2(dyadic(), dyadic())};
    const Vec x = v2(dyadic(), dyadic());
    const double s = dyadic(), t = dyadic();
    EXPECT_EQ(translation_flow(h, s, translation_flow(h, t, x)), translation_flow(h, s + t, x));
  }
}

TEST(TranslationFlow, MatchesGenericIntegrator) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int dim = i % 2 ? 4 : 2;
    Vec v0(dim), x(dim);
    for (auto& c : v0) c = u(rng);
    for (auto& c : x) c = 3 * u(rng);
    const double t = 2 * u(rng);
    const LinearHamiltonian h{v0};
    worst = std::max(worst, (translation_flow(h, t, x) - integrate_flow(h.spec(), t, x)).lpNorm<Eigen::Infinity>());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(DisplacementImage, Examples) {
  const auto one = displacement_image(cloud_from_points(2, {v2(0, 0)}), cloud_from_points(2, {v2(1, 0)}));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one.points[0], v2(1, 0));

  const auto cloud = sample(single(LipschitzChart::circle(v2(0, 0), 1)), 50, 1);
  const auto self = displacement_image(cloud, cloud);
  EXPECT_EQ(self.size(), 2500u);
  EXPECT_TRUE(std::any_of(self.points.begin(), self.points.end(), [](const Vec& p) { return p.isZero(0); }));

  const auto low = sample(single(LipschitzChart::segment(v2(0, 0), v2(1, 0))), 100, 2);
  const auto high = sample(single(LipschitzChart::segment(v2(0, 1), v2(1, 1))), 100, 3);
  for (const auto& p : displacement_image(low, high).points) EXPECT_EQ(p[1], 1.0);
}

TEST(DisplacementImage, SwappingArgumentsNegates) {
  const auto a = sample(single(LipschitzChart::circle(v2(0, 0), 1)), 40, 4);
  const auto b = sample(single(LipschitzChart::segment(v2(-1, 0), v2(2, 1))), 30, 5);
  const auto ab = displacement_image(a, b), ba = displacement_image(b, a);
  ASSERT_EQ(ab.size(), ba.size());
  // a-major order for ab, b-major for ba.
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) EXPECT_EQ(ab.points[i * b.size() + j], Vec(-ba.points[j * a.size() + i]));
}

TEST(DisplacementImage, BudgetSubsamplesActualPairs) {
  const auto a = sample(single(LipschitzChart::circle(v2(0, 0), 1)), 30, 6);
  const auto b = sample(single(LipschitzChart::circle(v2(2, 0), 1)), 30, 7);
  const auto sub = displacement_image(a, b, 100, true, 9);
  EXPECT_EQ(sub.size(), 100u);
  for (const auto& d : sub.points) {
    bool found = false;
    for (const auto& x : a.points)
      for (const auto& y : b.points) found = found || (y - x) == d;
    EXPECT_TRUE(found);
  }
  try {
    displacement_image(a, b, 100, false);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PairBudgetExceeded);
  }
}

TEST(SphereDirections, UnitAndDeterministic) {
  for (int dim : {2, 3, 4}) {
    const auto d = sphere_directions(dim, 64);
    ASSERT_EQ(d.size(), 64u);
    for (const auto& v : d) EXPECT_NEAR(v.norm(), 1.0, 1e-14);
    EXPECT_EQ(d, sphere_directions(dim, 64));
  }
  const auto plane = sphere_directions(2, 4);
  EXPECT_NEAR(std::atan2(plane[0][1], plane[0][0]), std::numbers::pi / 8, 1e-15);
}

TEST(SphereDirections, HaltonDirectionsSpreadOut) {
  // Every coordinate half-space gets a fair share of 512 directions.
  const auto d = sphere_directions(4, 512);
  for (int c = 0; c < 4; ++c) {
    const auto up = std::count_if(d.begin(), d.end(), [c](const Vec& v) { return v[c] > 0; });
    EXPECT_NEAR(static_cast<double>(up), 256.0, 40.0);
  }
}

TEST(FindDirection, PointVersusPointAlwaysAdmissible) {
  DisplacementProblem problem(origin(), origin());
  problem.a_samples = problem.b_samples = 5;
  const auto r = find_generic_direction(problem, 4, 1.0, 100);
  EXPECT_EQ(r.bad_time_fraction, 0.0);
  ASSERT_EQ(r.admissible_times.size(), 100u);
  for (const auto& c : r.admissible_times) EXPECT_NEAR(c.distance, c.t, 1e-15);
}

TEST(FindDirection, DustOnAxisMatchesBruteForceScan) {
  DisplacementProblem problem(dust_on_axis(8), dust_on_axis(8));
  problem.a_samples = problem.b_samples = 200;
  problem.seed = 11;
  const auto r = find_generic_direction(problem, 64, 1.0, 1000);
  EXPECT_LT(r.bad_time_fraction, 0.05);
  EXPECT_NEAR(r.v0.norm(), 1.0, 1e-14);

  const auto a = problem.a_cloud(), b = problem.b_cloud();
  int bad = 0;
  std::size_t next = 0;
  for (int i = 1; i <= 1000; ++i) {
    const double t = i / 1000.0;
    const double d = brute_distance(a, b, r.v0, t);
    if (d < r.clearance_tol) {
      ++bad;
      continue;
    }
    ASSERT_LT(next, r.admissible_times.size());
    EXPECT_EQ(r.admissible_times[next].t, t);
    EXPECT_NEAR(r.admissible_times[next].distance, d, 1e-15);
    ++next;
  }
  EXPECT_EQ(next, r.admissible_times.size());
  EXPECT_DOUBLE_EQ(r.bad_time_fraction, bad / 1000.0);
}

TEST(FindDirection, CircleAroundCenterExcludesUnitTime) {
  DisplacementProblem problem(single(LipschitzChart::circle(v2(0, 0), 1.0)), origin());
  problem.a_samples = 20000;
  problem.b_samples = 1;
  problem.clearance_tol = 0.01;
  const auto r = find_generic_direction(problem, 8, 2.0, 2000);
  // |center + t v0 - circle| = |1 - t| for unit v0.
  int excluded = 0;
  for (int i = 1; i <= 2000; ++i) {
    const double t = 2.0 * i / 2000;
    const bool admissible = r.is_admissible(t);
    if (std::abs(1 - t) >= 0.01) EXPECT_TRUE(admissible) << t;
    if (std::abs(1 - t) < 0.005) EXPECT_FALSE(admissible) << t;
    excluded += !admissible;
  }
  EXPECT_GT(excluded, 0);
  EXPECT_LE(excluded, 19);
}

TEST(FindDirection, FilledSquareWithCoarseToleranceFails) {
  const auto square = single(LipschitzChart::box(Box::cube(2, 0.0, 1.0)));
  DisplacementProblem problem(square, square);
  problem.a_samples = problem.b_samples = 300;
  problem.clearance_tol = 0.5;
  try {
    find_generic_direction(problem, 16, 0.1, 50);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoDirectionFound);
  }
}

TEST(FindDirection, WitnessIsReported) {
  DisplacementProblem problem(dust_on_axis(10), dust_on_axis(10));
  problem.a_samples = problem.b_samples = 100;
  problem.witness_scales = {std::pow(3.0, -2), std::pow(3.0, -4), std::pow(3.0, -6)};
  const auto r = find_generic_direction(problem, 8, 1.0, 100);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(r.witness->s, 1.0);
  EXPECT_TRUE(r.witness->consistent);
}

TEST(FindDirection, DilationScalesClearance) {
  const auto base = dust_on_axis(8);
  const auto big = image(base, MapExpr::diagonal_scaling(2.0, 0, 0), 2.0);
  DisplacementProblem small_problem(base, base), big_problem(big, big);
  small_problem.a_samples = small_problem.b_samples = big_problem.a_samples = big_problem.b_samples = 150;
  small_problem.seed = big_problem.seed = 5;
  const auto r1 = find_generic_direction(small_problem, 16, 1.0, 200);
  const auto r2 = find_generic_direction(big_problem, 16, 2.0, 200);
  EXPECT_EQ(r1.v0, r2.v0);
  EXPECT_NEAR(r2.clearance, 2 * r1.clearance, 1e-12 * r1.clearance);
}

TEST(Certify, PointVersusPoint) {
  DisplacementProblem problem(origin(), origin());
  problem.a_samples = problem.b_samples = 1;
  auto r = find_generic_direction(problem, 1, 1.0, 1);
  r.v0 = v2(1, 0);
  const auto c = displace_certify(problem, r, 1.0);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.distance, 1.0);
  EXPECT_EQ(c.a_points, 10u);
}

TEST(Certify, ParallelSegments) {
  const auto cloud = sample(single(LipschitzChart::segment(v2(0, 0), v2(1, 0))), 500, 1);
  const auto c = check_translation(cloud, cloud, v2(0, 1), 0.5, 1e-6);
  EXPECT_TRUE(c.pass);
  EXPECT_EQ(c.distance, 0.5);
}

TEST(Certify, OverlappingCirclesFail) {
  const auto circle = single(LipschitzChart::circle(v2(0, 0), 1.0));
  DisplacementProblem problem(circle, circle);
  problem.a_samples = problem.b_samples = 500;
  DisplacementResult r;
  r.v0 = v2(1, 0);
  r.admissible_times = {{1.0, 0.0}};
  r.clearance_tol = 1e-3;
  try {
    displace_certify(problem, r, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CertificationFailed);
    EXPECT_NE(std::string(e.what()).find("B point"), std::string::npos);
  }
  EXPECT_THROW(displace_certify(problem, r, 0.5), Error);
}

TEST(Certify, SubsetOfPassingCloudPasses) {
  DisplacementProblem problem(dust_on_axis(8), dust_on_axis(8));
  problem.a_samples = problem.b_samples = 200;
  const auto r = find_generic_direction(problem, 16, 1.0, 100);
  ASSERT_FALSE(r.admissible_times.empty());
  const double t = r.admissible_times.back().t;
  const auto a = problem.a_cloud(10), b = problem.b_cloud(10);
  const auto full = check_translation(a, b, r.v0, t, r.clearance_tol);
  ASSERT_TRUE(full.pass);
  std::vector<std::size_t> half;
  for (std::size_t i = 0; i < a.size(); i += 2) half.push_back(i);
  const auto part = check_translation(a.subset(half), b, r.v0, t, r.clearance_tol);
  EXPECT_TRUE(part.pass);
  EXPECT_GE(part.distance, full.distance);
}

TEST(Hofer, Examples) {
  const LinearHamiltonian h{v2(0, -1)};
  const auto one = [](const Vec&) { return 1.0; };
  const Box unit = Box::cube(2, 0.0, 1.0);
  EXPECT_EQ(hofer_norm_bound(h, one, 0.0, unit, 11).value, 0.0);
  EXPECT_DOUBLE_EQ(hofer_norm_bound(h, one, 0.1, unit, 11).value, 0.1);
  EXPECT_DOUBLE_EQ(hofer_norm_bound(h, one, 0.01, unit, 11).value, 0.01);
  EXPECT_DOUBLE_EQ(hofer_norm_bound(h, one, 0.1, unit, 11).grid_spacing, 0.1);
}

TEST(Hofer, ExactlyLinearInTime) {
  const LinearHamiltonian h{v2(0.6, -0.8)};
  const auto rho = CutoffProfile::bump(-1.0, -0.5, 1.5, 2.0);
  const Box box = Box::cube(2, -1.0, 2.0);
  const double full = hofer_norm_bound(h, rho, 0.37, box, 41).value;
  EXPECT_GT(full, 0.0);
  EXPECT_EQ(hofer_norm_bound(h, rho, 0.185, box, 41).value, full / 2);
}

TEST(Hofer, CutoffNeverExceedsUncutBound) {
  const LinearHamiltonian h{v2(0.6, -0.8)};
  const Box box = Box::cube(2, -1.0, 2.0);
  const auto cut = hofer_norm_bound(h, CutoffProfile::bump(-1.0, -0.5, 1.5, 2.0), 1.0, box, 61);
  const auto plain = hofer_norm_bound(h, [](const Vec&) { return 1.0; }, 1.0, box, 61);
  EXPECT_LE(cut.value, plain.value);
  EXPECT_LE(cut.min_value, 0.0);
  EXPECT_GE(cut.max_value, 0.0);
}
