#include <gtest/gtest.h>

#include <random>

#include "qmf/projection_engine.hpp"
#include "test_problems.hpp"

using namespace qmf;
using namespace qmf::testing;

namespace {

HermiteIndex hi(std::vector<int> a, int k = 0) { return HermiteIndex{MultiIndex(a), k}; }

}  // namespace

TEST(ResolventChain, OrderZeroIsSpectralProjector) {
  auto s = level_setup(scalar1d(poly1({{2, q(1)}, {3, q(1)}})), q(1), h(2));
  Projector<Q> pi(s.fam, s.basis, s.level, h(2));
  EXPECT_EQ(pi.resolvent_chain_apply(h(0), hi({0})), (HermiteVector<Q>{{hi({0}), q(1)}}));
  EXPECT_TRUE(pi.resolvent_chain_apply(h(0), hi({1})).empty());
  EXPECT_TRUE(pi.resolvent_chain_apply(h(0), hi({4})).empty());
}

TEST(ResolventChain, CubicHalfOrder) {
  for (Q c : {q(1), q(-2, 3), q(5, 2)}) {
    auto s = level_setup(scalar1d(poly1({{2, q(1)}, {3, c}})), q(1), h(2));
    Projector<Q> pi(s.fam, s.basis, s.level, h(2));
    // -S Q_{1/2} p_0 with Q_{1/2} p_0 = c y and S y = y / 2
    EXPECT_EQ(pi.resolvent_chain_apply(h(1), hi({0})), (HermiteVector<Q>{{hi({1}), -c / 2}}));
    EXPECT_EQ(pi.image(hi({0})).at(h(1)), lift_component(poly1({{1, -c / 2}}), 1, 0));
  }
}

TEST(ResolventChain, DegreeCap) {
  auto s = level_setup(scalar1d(poly1({{2, q(1)}, {3, q(1)}})), q(1), h(2));
  Projector<Q> pi(s.fam, s.basis, s.level, h(2), 1);
  try {
    pi.resolvent_chain_apply(h(2), hi({0}));
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("spectrum table too small"), std::string::npos);
  }
}

TEST(BuildProjector, HarmonicIsOrderZeroProjection) {
  auto s = level_setup(scalar1d(poly1({{2, q(1)}})), q(3), h(4));
  Projector<Q> pi(s.fam, s.basis, s.level, h(4));
  auto P = build_projector(pi);
  ASSERT_EQ(P.images.size(), 1u);
  EXPECT_EQ(P.images.begin()->second.series, Series<FiberPoly<Q>>::monomial(h(0), s.basis.element(hi({1})), h(4)));
  for (int a = 0; a < 6; ++a)
    if (a != 1) {
      EXPECT_TRUE(pi.image(hi({a})).is_zero());
    }
  auto rep = projector_diagnostics(pi, s.fam, s.pairing, probe_set(pi));
  EXPECT_TRUE(rep.exact_zero);
  EXPECT_EQ(rep.rank, 1u);
}

TEST(BuildProjector, IsotropicFirstExcitedLevel) {
  auto s = level_setup(iso2d(q(1), q(1, 2)), q(4), h(2));
  Projector<Q> pi(s.fam, s.basis, s.level, h(2));
  auto P = build_projector(pi);
  ASSERT_EQ(P.images.size(), 2u);
  for (const auto& [h0, img] : P.images) EXPECT_EQ(img.series.at(h(0)), s.basis.element(h0));
  for (const auto& b : {hi({0, 0}), hi({2, 0}), hi({1, 1}), hi({0, 2})}) EXPECT_TRUE(pi.resolvent_chain_apply(h(0), b).empty());
}

TEST(ProjectorProperties, MatchesKatoExpansion) {
  std::mt19937 rng(11);
  std::vector<std::pair<ProblemData<Q>, Q>> cases{
      {scalar1d(poly1({{2, q(1)}, {3, q(2, 3)}, {4, q(-1, 5)}})), q(3)},
      {iso2d(q(1, 2), q(1, 3)), q(4)},
      {curved_bundle(rng), q(5, 2)},
  };
  for (const auto& [d, E0] : cases) {
    const HalfInt N = h(4);
    auto s = level_setup(d, E0, N);
    Projector<Q> pi(s.fam, s.basis, s.level, N);
    for (const auto& b : probe_set(pi, 0))
      for (int j = 0; j <= N.doubled(); ++j) EXPECT_EQ(pi.resolvent_chain_apply(h(j), b), kato_projector_term(pi, h(j), b));
  }
}

TEST(ProjectorProperties, DegreeAndParity) {
  std::mt19937 rng(4);
  for (int trial = 0; trial < 2; ++trial) {
    auto s = level_setup(curved_bundle(rng), q(5, 2), h(4));
    Projector<Q> pi(s.fam, s.basis, s.level, h(4));
    for (const auto& b : probe_set(pi, 2))
      for (const auto& [e, p] : pi.image(b).terms()) {
        EXPECT_LE(p.degree(), b.alpha.total() + e.doubled());
        for (const auto& [m, v] : p.terms()) EXPECT_EQ((m.total() - b.alpha.total() - e.doubled()) % 2, 0);
      }
  }
}

TEST(ProjectorDiagnostics, CubicExact) {
  auto s = level_setup(scalar1d(poly1({{2, q(1)}, {3, q(1)}})), q(1), h(4));
  Projector<Q> pi(s.fam, s.basis, s.level, h(4));
  auto rep = projector_diagnostics(pi, s.fam, s.pairing, probe_set(pi, 2));
  EXPECT_TRUE(rep.exact_zero);
  EXPECT_EQ(rep.max_defect(), 0.0);
  EXPECT_EQ(rep.rank, 1u);
}

TEST(ProjectorDiagnostics, CurvedBundleExactAndFloat) {
  std::mt19937 rng(8);
  auto d = curved_bundle(rng);
  auto s = level_setup(d, q(5, 2), h(3));
  Projector<Q> pi(s.fam, s.basis, s.level, h(3));
  auto rep = projector_diagnostics(pi, s.fam, s.pairing, probe_set(pi, 1));
  EXPECT_TRUE(rep.exact_zero);

  auto sf = level_setup(to_float(d), 2.5, h(3));
  Projector<double> pf(sf.fam, sf.basis, sf.level, h(3));
  auto rf = projector_diagnostics(pf, sf.fam, sf.pairing, probe_set(pf, 1));
  EXPECT_LE(rf.relative(), 1e-9);
  EXPECT_EQ(rf.rank, 1u);
}

TEST(ProjectorDiagnostics, DetectsBrokenProjector) {
  // a projector built from a different Q family must fail commutation
  auto s = level_setup(scalar1d(poly1({{2, q(1)}, {3, q(1)}})), q(1), h(2));
  auto other = level_setup(scalar1d(poly1({{2, q(1)}, {3, q(2)}})), q(1), h(2));
  Projector<Q> pi(other.fam, s.basis, s.level, h(2));
  auto rep = projector_diagnostics(pi, s.fam, s.pairing, probe_set(pi, 1));
  EXPECT_FALSE(rep.exact_zero);
}
