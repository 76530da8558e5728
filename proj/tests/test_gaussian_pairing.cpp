#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "qmf/gaussian_pairing.hpp"
#include "qmf/harmonic_oscillator.hpp"
#include "test_problems.hpp"

using namespace qmf;
using namespace qmf::testing;

namespace {

Series<FiberPoly<Q>> constant_section(const Poly<Q>& p, HalfInt trunc) {
  return Series<FiberPoly<Q>>::monomial(h(0), lift_component(p, 1, 0), trunc);
}

// Random element of the rescaled algebra with deg u_j <= 2j.
Series<FiberPoly<Q>> random_section(std::mt19937& rng, std::size_t n, std::size_t r, HalfInt trunc) {
  Series<FiberPoly<Q>> s(trunc);
  for (int t = 0; t <= trunc.doubled(); ++t) {
    FiberPoly<Q> p(n, r);
    for (std::size_t k = 0; k < r; ++k) p += lift_component(random_poly(rng, n, t, 3), r, k);
    s.add(h(t), p);
  }
  return s;
}

double simpson(const std::function<double(double)>& f, double a, double b, int m) {
  double hstep = (b - a) / m, s = f(a) + f(b);
  for (int i = 1; i < m; ++i) s += f(a + i * hstep) * (i % 2 ? 4 : 2);
  return s * hstep / 3;
}

}  // namespace

TEST(GaussianMoment, Examples) {
  EXPECT_EQ(gaussian_moment<Q>(MultiIndex{0}, {q(1)}), q(1));
  EXPECT_EQ(gaussian_moment<Q>(MultiIndex{2}, {q(1)}), q(1, 2));
  EXPECT_EQ(gaussian_moment<Q>(MultiIndex{3}, {q(1)}), q(0));
  EXPECT_EQ(gaussian_moment<Q>(MultiIndex{4, 2}, {q(1), q(2)}), q(3, 16));
}

TEST(GaussianMoment, MatchesQuadrature) {
  for (int a : {0, 2, 4, 6}) {
    double lam = 1.7;
    double num = simpson([&](double y) { return std::pow(y, a) * std::exp(-lam * y * y); }, -12, 12, 4000) /
                 std::sqrt(M_PI / lam);
    EXPECT_NEAR(num, gaussian_moment<double>(MultiIndex{a}, {lam}), 1e-12);
  }
}

TEST(WeightExpansion, HarmonicIsTrivial) {
  auto d = scalar1d(poly1({{2, q(1)}}));
  auto c = conjugate(d, h(4), h(0));
  auto w = weight_expansion(c.phi, c.G, h(4));
  EXPECT_EQ(w.at(h(0)), constant_poly<Q>(1, q(1)));
  for (int t = 1; t <= 4; ++t) EXPECT_TRUE(w.at(h(t)).is_zero());
}

TEST(WeightExpansion, CubicHalfOrder) {
  const Q cc = q(5, 3);
  auto d = scalar1d(poly1({{2, q(1)}, {3, cc}}));
  auto c = conjugate(d, h(2), h(0));
  auto w = weight_expansion(c.phi, c.G, h(2));
  EXPECT_EQ(w.at(h(1)), poly1({{3, -cc / 3}}));
}

TEST(WeightExpansion, CurvedMetricOrderOne) {
  const Q a = q(2, 7);
  auto d = scalar1d(poly1({{2, q(1)}}));
  d.metric_dev[0][0] = poly1({{2, a}});
  auto c = conjugate(d, h(2), h(0));
  auto w = weight_expansion(c.phi, c.G, h(2));
  EXPECT_TRUE(w.at(h(1)).is_zero());
  EXPECT_EQ(w.at(h(2)), poly1({{4, a / 4}, {2, -a / 2}}));
}

TEST(PairingTest, HarmonicHermiteNorms) {
  auto d = scalar1d(poly1({{2, q(1)}}));
  auto c = conjugate(d, h(4), h(0));
  auto pr = Pairing<Q>::from_problem(d, c, h(4));
  HermiteBasis<Q> b({q(1)}, {q(0)});
  auto u0 = constant_section(b.polynomial(MultiIndex{0}), h(4));
  auto u1 = constant_section(b.polynomial(MultiIndex{1}), h(4));
  EXPECT_EQ(pr.pair(u0, u0), series_of<Q>({{0, q(1)}}, h(4)));
  EXPECT_TRUE(pr.pair(u0, u1).is_zero());
}

TEST(PairingTest, CubicGroundNormHasNoHalfOrder) {
  auto d = scalar1d(poly1({{2, q(1)}, {3, q(1)}}));
  auto c = conjugate(d, h(2), h(0));
  auto pr = Pairing<Q>::from_problem(d, c, h(2));
  auto u0 = constant_section(constant_poly<Q>(1, q(1)), h(2));
  auto n = pr.pair(u0, u0);
  EXPECT_EQ(n.at(h(0)), q(1));
  EXPECT_EQ(n.at(h(1)), q(0));
}

TEST(PairingTest, HermitianAndParitySelection) {
  std::mt19937 rng(5);
  auto d = scalar1d(poly1({{2, q(1)}, {4, q(1)}}));
  auto c = conjugate(d, h(6), h(0));
  auto pr = Pairing<Q>::from_problem(d, c, h(6));
  for (int trial = 0; trial < 10; ++trial) {
    auto u = random_section(rng, 1, 1, h(6));
    auto v = random_section(rng, 1, 1, h(6));
    EXPECT_EQ(pr.pair(u, v), pr.pair(v, u));
    Poly<Q> even(1), odd(1);
    const auto mixed = random_poly(rng, 1, 6, 4);
    for (const auto& [m, x] : mixed.terms()) (m.total() % 2 ? odd : even).add_term(m, x);
    EXPECT_TRUE(pr.pair(constant_section(even, h(6)), constant_section(odd, h(6))).is_zero());
  }
}

TEST(PairingTest, OperatorIsSymmetric) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 3; ++trial) {
    auto d = curved_bundle(rng);
    const HalfInt N = h(3);
    auto c = conjugate(d, N, h(0));
    auto fam = q_family(c, N);
    auto pr = Pairing<Q>::from_problem(d, c, N);
    auto u = random_section(rng, 2, 2, N);
    auto v = random_section(rng, 2, 2, N);
    auto lhs = pr.pair(apply(fam, u), v);
    auto rhs = pr.pair(u, apply(fam, v));
    EXPECT_EQ(lhs.trunc(), N);
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(PairingTest, FiberMetricOverride) {
  auto d = scalar1d(poly1({{2, q(1)}}));
  d.r = 1;
  EndoPoly<Q> gm(1, 1);
  gm.add_term(MultiIndex{0}, one());
  gm.add_term(MultiIndex{2}, one() * q(1));
  d.fiber_metric = gm;
  auto c = conjugate(d, h(4), h(0));
  auto pr = Pairing<Q>::from_problem(d, c, h(4));
  auto u0 = constant_section(constant_poly<Q>(1, q(1)), h(4));
  // 1 + hbar <y^2> = 1 + hbar/2
  EXPECT_EQ(pr.pair(u0, u0), series_of<Q>({{0, q(1)}, {2, q(1, 2)}}, h(4)));
}

TEST(PairingTest, AgreesWithQuadrature) {
  // V = x^2 + x^4 has the global eikonal phi = ((1+x^2)^{3/2} - 1)/3
  auto d = scalar1d(poly1({{2, q(1)}, {4, q(1)}}));
  const HalfInt M = h(6);
  auto c = conjugate(d, M, h(0));
  auto pr = Pairing<Q>::from_problem(d, c, M);
  auto u = constant_section(poly1({{0, q(1)}, {2, q(1)}}), M);
  auto s = pr.pair(u, u);
  double prev = 1;
  for (double hb : {0.02, 0.01}) {
    auto phi = [](double x) { return (std::pow(1 + x * x, 1.5) - 1) / 3; };
    double num = simpson(
                     [&](double y) {
                       double p = 1 + y * y;
                       return p * p * std::exp(-2 * phi(std::sqrt(hb) * y) / hb);
                     },
                     -20, 20, 20000) /
                 std::sqrt(M_PI);
    double err = std::abs(num - evaluate(s, hb));
    EXPECT_LT(err, 50 * std::pow(hb, 3.5));
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(PairingTest, FloatMatchesExact) {
  std::mt19937 rng(3);
  auto d = curved_bundle(rng);
  auto c = conjugate(d, h(2), h(0));
  auto pr = Pairing<Q>::from_problem(d, c, h(2));
  auto df = to_float(d);
  auto cf = conjugate(df, h(2), h(0));
  auto pf = Pairing<double>::from_problem(df, cf, h(2));
  auto u = random_section(rng, 2, 2, h(2));
  auto exact = pr.pair(u, u);
  auto uf = u.map([](const FiberPoly<Q>& p) { return from_rational<double>(p); });
  auto fl = pf.pair(uf, uf);
  for (int t = 0; t <= 2; ++t) EXPECT_NEAR(fl.at(h(t), 0.0), exact.at(h(t), q(0)).get_d(), 1e-9);
}
