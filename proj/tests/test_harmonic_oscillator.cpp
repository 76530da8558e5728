#include <gtest/gtest.h>

#include <random>

#include "qmf/gaussian_pairing.hpp"
#include "qmf/harmonic_oscillator.hpp"
#include "test_support.hpp"

using namespace qmf;
using namespace qmf::testing;

namespace {
FiberPoly<Q> scalar_fp(const Poly<Q>& p) { return lift_component(p, 1, 0); }
HermiteIndex hi(std::vector<int> a, int k) { return HermiteIndex{MultiIndex(a), k}; }
}  // namespace

TEST(Spectrum, OneDimensionalLadder) {
  HermiteBasis<Q> b({q(1)}, {q(0)});
  auto t = build_spectrum(b, 2);
  ASSERT_EQ(t.entries.size(), 3u);
  EXPECT_EQ(t.entries[0].energy, q(1));
  EXPECT_EQ(t.entries[1].energy, q(3));
  EXPECT_EQ(t.entries[2].energy, q(5));
}

TEST(Spectrum, ShiftedByMu) {
  HermiteBasis<Q> b({q(1), q(2)}, {q(-3)});
  EXPECT_EQ(b.energy(hi({0, 0}, 0)), q(0));
  HermiteBasis<Q> w({q(1)}, {q(-1)});
  EXPECT_EQ(build_spectrum(w, 3).entries.front().energy, q(0));
}

TEST(Spectrum, RejectsNonPositiveLambda) {
  HermiteBasis<Q> b({q(0)}, {q(0)});
  EXPECT_THROW(build_spectrum(b, 2), InputError);
}

TEST(DegenerateLevelTest, Examples) {
  HermiteBasis<Q> b1({q(1)}, {q(0)});
  auto l1 = degenerate_level(b1, q(1));
  EXPECT_EQ(l1.m0(), 1u);
  EXPECT_EQ(l1.K, h(0));
  EXPECT_EQ(l1.parity, Parity::even);

  HermiteBasis<Q> b2({q(1), q(1)}, {q(0)});
  auto l2 = degenerate_level(b2, q(4));
  ASSERT_EQ(l2.m0(), 2u);
  EXPECT_EQ(l2.K, h(1));
  EXPECT_EQ(l2.parity, Parity::odd);
  EXPECT_EQ(l2.members[0].alpha.total(), 1);

  HermiteBasis<Q> b3({q(1)}, {q(0), q(2)});
  auto l3 = degenerate_level(b3, q(3));
  ASSERT_EQ(l3.m0(), 2u);
  EXPECT_EQ(l3.parity, Parity::mixed);
  EXPECT_TRUE((l3.members[0] == hi({0}, 1) && l3.members[1] == hi({1}, 0)) ||
              (l3.members[1] == hi({0}, 1) && l3.members[0] == hi({1}, 0)));
}

TEST(DegenerateLevelTest, NotInSpectrum) {
  HermiteBasis<Q> b({q(1)}, {q(0)});
  try {
    degenerate_level(b, q(2));
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("E0 not in spectrum"), std::string::npos);
  }
}

TEST(HermiteExpand, Examples) {
  HermiteBasis<Q> b({q(1)}, {q(0)});
  EXPECT_EQ(b.expand(scalar_fp(constant_poly<Q>(1, q(1)))), (HermiteVector<Q>{{hi({0}, 0), q(1)}}));
  EXPECT_EQ(b.expand(scalar_fp(variable<Q>(1, 0))), (HermiteVector<Q>{{hi({1}, 0), q(1)}}));
  auto y2 = variable<Q>(1, 0) * variable<Q>(1, 0);
  EXPECT_EQ(b.expand(scalar_fp(y2)), (HermiteVector<Q>{{hi({0}, 0), q(1, 2)}, {hi({2}, 0), q(1)}}));
  // p_2 = y^2 - 1/(2 lambda) is H_2(sqrt(lambda) y) / (4 lambda)
  HermiteBasis<Q> c({q(3, 2)}, {q(0)});
  Poly<Q> p2 = c.polynomial(MultiIndex{2});
  EXPECT_EQ(p2, y2 - constant_poly<Q>(1, q(1, 3)));
}

TEST(HermiteExpand, RoundTripRandom) {
  std::mt19937 rng(31);
  HermiteBasis<Q> b({q(1), q(5, 3)}, {q(0), q(1, 2)});
  for (int trial = 0; trial < 30; ++trial) {
    FiberPoly<Q> p(2, 2);
    p += lift_component(random_poly(rng, 2, 7, 6), 2, 0);
    p += lift_component(random_poly(rng, 2, 7, 6), 2, 1);
    EXPECT_EQ(b.synthesize(b.expand(p)), p);
  }
}

TEST(HermiteBasisTest, EigenRelationDegreeParity) {
  ProblemData<Q> d(2, 2);
  d.lambda = {q(1, 2), q(3)};
  d.V.add_term(MultiIndex{2, 0}, q(1, 4));
  d.V.add_term(MultiIndex{0, 2}, q(9));
  Mat<Q> mu(2);
  mu(0, 0) = q(-1, 3);
  mu(1, 1) = q(2);
  d.W.add_term(MultiIndex{0, 0}, mu);
  auto c = conjugate(d, h(2), h(0));
  auto Q0 = q_operator(c, h(0));
  HermiteBasis<Q> b(d.lambda, {q(-1, 3), q(2)});
  for (const auto& a : MultiIndex::up_to_degree(2, 6))
    for (int k = 0; k < 2; ++k) {
      HermiteIndex i{a, k};
      auto p = b.element(i);
      EXPECT_EQ(Q0.apply(p), p * b.energy(i));
      EXPECT_EQ(p.degree(), a.total());
      for (const auto& [m, v] : p.terms()) EXPECT_EQ(m.total() % 2, a.total() % 2);
    }
}

TEST(HermiteBasisTest, OrthogonalityUnderPairing) {
  std::vector<Q> lam{q(1), q(2, 3)};
  HermiteBasis<Q> b(lam, {q(0)});
  Series<Poly<Q>> omega = Series<Poly<Q>>::monomial(h(0), constant_poly<Q>(2, q(1)), h(4));
  Pairing<Q> pr(lam, omega);
  auto idx = MultiIndex::up_to_degree(2, 4);
  for (const auto& a : idx)
    for (const auto& c : idx) {
      auto u = Series<FiberPoly<Q>>::monomial(h(0), b.element({a, 0}), h(4));
      auto v = Series<FiberPoly<Q>>::monomial(h(0), b.element({c, 0}), h(4));
      Q expect = a == c ? b.norm_sq(a) : q(0);
      EXPECT_EQ(pr.pair(u, v).at(h(0), q(0)), expect);
    }
}
