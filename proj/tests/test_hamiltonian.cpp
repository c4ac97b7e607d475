#include <gtest/gtest.h>

#include <random>

#include "sympfold/hamiltonian.hpp"

using namespace sympfold;

namespace {

Vec random_vec(std::mt19937_64& rng, int d, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = u(rng);
  return v;
}

Vec fd_gradient(const HamiltonianSpec& h, const Vec& x, double step = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    Vec a = x, b = x;
    a[k] += step;
    b[k] -= step;
    g[k] = (h.value(a) - h.value(b)) / (2 * step);
  }
  return g;
}

std::vector<HamiltonianSpec> samples() {
  Vec v2(2), v4(4);
  v2 << 0.3, -0.7;
  v4 << 0.2, -0.4, 0.5, 0.1;
  return {HamiltonianSpec::linear(v4), HamiltonianSpec::cutoff_linear(CutoffProfile::step_up(0.1, 0.4), v4),
          HamiltonianSpec::cutoff_linear(CutoffProfile::bump(-0.5, -0.2, 0.2, 0.6), v2),
          HamiltonianSpec::qp_product(4, 0.5, 0.9)};
}

}  // namespace

TEST(Hamiltonian, LinearValueIsOmegaAndFieldIsConstant) {
  Vec v0(2);
  v0 << 0.0, -1.0;  // omega(-e2, x) = x1
  const auto h = HamiltonianSpec::linear(v0);
  Vec x(2);
  x << 0.7, 0.2;
  EXPECT_DOUBLE_EQ(h.value(x), 0.7);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vec y = random_vec(rng, 2, 3.0);
    const Vec jg = standard_j(2) * fd_gradient(h, y);
    EXPECT_LE((jg - v0).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_EQ(h.vector_field(y), v0);
  }
}

TEST(Hamiltonian, FieldIsJTimesFiniteDifferenceGradient) {
  std::mt19937_64 rng(11);
  for (const auto& h : samples()) {
    for (int i = 0; i < 200; ++i) {
      const Vec x = random_vec(rng, h.dim(), 1.0);
      const Vec expect = standard_j(h.dim()) * fd_gradient(h, x);
      const Vec got = h.vector_field(x);
      EXPECT_LE((got - expect).cwiseAbs().maxCoeff(), 1e-6 * std::max(1.0, expect.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Hamiltonian, HessianMatchesGradientDifferences) {
  std::mt19937_64 rng(12);
  for (const auto& h : samples()) {
    for (int i = 0; i < 50; ++i) {
      const Vec x = random_vec(rng, h.dim(), 1.0);
      Mat fd(h.dim(), h.dim());
      for (int k = 0; k < h.dim(); ++k) {
        Vec a = x, b = x;
        a[k] += 1e-6;
        b[k] -= 1e-6;
        fd.col(k) = (h.gradient(a) - h.gradient(b)) / 2e-6;
      }
      EXPECT_LE((h.hessian(x) - fd).cwiseAbs().maxCoeff(), 1e-5) << h.to_json();
    }
  }
}

TEST(Hamiltonian, ClosedFormMatchesIntegrator) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> t_dist(-2.0, 2.0);
  double worst = 0;
  for (int i = 0; i < 1000; ++i) {
    const int d = (i % 2 == 0) ? 2 : 4;
    const auto h = HamiltonianSpec::linear(random_vec(rng, d, 1.0));
    const double t = t_dist(rng);
    const Vec x = random_vec(rng, d, 2.0);
    worst = std::max(worst, (hamiltonian_flow(h, t, x) - integrate_flow(h, t, x)).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(Hamiltonian, FlowIsReversibleAndSymplectic) {
  std::mt19937_64 rng(21);
  for (const auto& h : samples()) {
    for (int i = 0; i < 20; ++i) {
      const Vec x = random_vec(rng, h.dim(), 0.8);
      Mat jac;
      const Vec y = hamiltonian_flow(h, 0.37, x, &jac);
      const Vec back = hamiltonian_flow(h, -0.37, y);
      EXPECT_LE((back - x).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LE(symplectic_residual(jac), 1e-8);
    }
  }
}

TEST(Hamiltonian, VariationalJacobianMatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  for (const auto& h : samples()) {
    const Vec x = random_vec(rng, h.dim(), 0.6);
    Mat jac;
    hamiltonian_flow(h, 0.5, x, &jac);
    Mat fd(h.dim(), h.dim());
    for (int k = 0; k < h.dim(); ++k) {
      Vec a = x, b = x;
      a[k] += 1e-5;
      b[k] -= 1e-5;
      fd.col(k) = (hamiltonian_flow(h, 0.5, a) - hamiltonian_flow(h, 0.5, b)) / 2e-5;
    }
    EXPECT_LE((jac - fd).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(Hamiltonian, CutoffLinearIsStillOutsideSupport) {
  Vec v0(4);
  v0 << 0.1, 0.3, -0.2, 0.4;
  const auto h = HamiltonianSpec::cutoff_linear(CutoffProfile::step_up(0.2, 0.5), v0);
  Vec x(4);
  x << -0.5, 0.3, 0.1, 0.2;  // rho and rho' vanish at q = -0.5, so the point is fixed
  EXPECT_EQ(h.vector_field(x), Vec::Zero(4));
  EXPECT_LE((hamiltonian_flow(h, 0.5, x) - x).norm(), 1e-14);
}

TEST(Hamiltonian, JsonRoundTrip) {
  for (const auto& h : samples()) {
    const auto back = HamiltonianSpec::from_json(h.to_json());
    EXPECT_EQ(back.to_json(), h.to_json());
  }
  EXPECT_THROW(HamiltonianSpec::from_json({{"kind", "quartic"}}), Error);
}

TEST(Hamiltonian, RejectsOddDimension) {
  EXPECT_THROW(HamiltonianSpec::linear(Vec::Ones(3)), Error);
  EXPECT_THROW(HamiltonianSpec::qp_product(3, 0.1, 0.2), Error);
}
