// Acceptance criteria AC1-AC9.  Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "qmf/commands.hpp"

namespace {

using namespace qmf;
using Q = Rational;

struct Outcome {
  bool pass = true;
  std::string note;
  void require(bool ok, const std::string& what) {
    if (!ok && pass) note = what;
    pass = pass && ok;
  }
};

LevelSelector<Q> idx(int i) { return {std::nullopt, i}; }
LevelSelector<Q> at(const Q& e) { return {e, std::nullopt}; }

// Every level computed in this run, for the bookkeeping criterion.
std::vector<std::string> g_bookkeeping_failures;
int g_levels_seen = 0;

template <CoefficientField F>
QuasimodeResult<F> run(const ProblemData<F>& d, const LevelSelector<F>& sel, HalfInt N, const std::string& tag) {
  auto r = compute_quasimodes(d, sel, N);
  ++g_levels_seen;
  auto b = bookkeeping_check(r);
  if (!b.pass) g_bookkeeping_failures.push_back(tag + ": " + b.detail);
  return r;
}

Outcome ac1_harmonic() {
  Outcome o;
  std::mt19937 rng(20261016);
  std::uniform_int_distribution<int> dim(1, 3), rank(1, 2), num(1, 9), den(1, 4), mnum(-6, 6);
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = dim(rng), r = rank(rng);
    ProblemData<Q> d(n, r);
    for (std::size_t i = 0; i < n; ++i) {
      d.lambda[i] = Q(num(rng), den(rng));
      d.lambda[i].canonicalize();
      d.V.add_term(MultiIndex::unit(n, i, 2), Q(d.lambda[i] * d.lambda[i]));
    }
    Mat<Q> mu(r);
    for (std::size_t k = 0; k < r; ++k) {
      mu(k, k) = Q(mnum(rng), den(rng));
      mu(k, k).canonicalize();
    }
    d.W.add_term(MultiIndex(n), mu);
    HermiteBasis<Q> basis(d.lambda, fiber_shifts(d));
    auto table = build_spectrum(basis, 4);
    std::size_t expected = 0;
    for (const auto& a : MultiIndex::up_to_degree(n, 4)) {
      (void)a;
      expected += r;
    }
    o.require(table.entries.size() == expected, "spectrum table size");
    for (const auto& e : table.entries) {
      Q E = mu(e.index.k, e.index.k);
      for (std::size_t i = 0; i < n; ++i) E += Q((2 * e.index.alpha[i] + 1) * d.lambda[i]);
      o.require(E == e.energy, "spectrum formula mismatch");
    }
    for (int lv = 0; lv < 2; ++lv) {
      auto res = run(d, idx(lv), HalfInt(4), "harmonic random");
      for (const auto& m : res.modes) {
        o.require(m.energy == Series<Q>::monomial(HalfInt(0), res.level.E0, HalfInt(4)),
                  "nonzero correction: " + to_string(m.energy));
      }
    }
  }
  o.note = o.pass ? "20 instances, spectrum exact, corrections zero through N = 4" : o.note;
  return o;
}

Outcome ac2_witten() {
  Outcome o;
  for (const char* c : {"1/2", "1", "2"}) {
    auto r = run(make_preset(std::string("witten1d:c=") + c), idx(0), HalfInt(4), "witten");
    o.require(r.modes.size() == 1 && r.modes[0].energy.is_zero() && r.modes[0].energy.trunc() == HalfInt(4),
              std::string("E not identically zero for c = ") + c);
    auto t = transport_residual(r);
    o.require(t.pass && t.max_residual == 0, std::string("transport residual for c = ") + c);
  }
  if (o.pass) o.note = "c in {1/2, 1, 2}: E = 0 + O(h^5), transport residual 0";
  return o;
}

Outcome ac3_projector() {
  Outcome o;
  std::ostringstream note;
  auto exact = [&](const ProblemData<Q>& d, const LevelSelector<Q>& s, const std::string& tag) {
    auto r = run(d, s, HalfInt(3), tag);
    auto p = projector_report(r);
    o.require(p.exact_zero && p.rank == r.level.m0(), tag + " exact projector defect");
    note << tag << " exact rank " << p.rank << "; ";
  };
  auto flt = [&](const ProblemData<Q>& dq, const LevelSelector<double>& s, const std::string& tag) {
    auto r = run(to_float(dq), s, HalfInt(3), tag + " float");
    auto p = projector_report(r);
    o.require(p.relative() <= 1e-9, tag + " float projector defect " + std::to_string(p.relative()));
    note << tag << " float rel " << p.relative() << "; ";
  };
  const auto cubic = make_preset("cubic1d"), bundle = make_preset("bundle2");
  for (int i = 0; i < 2; ++i) exact(cubic, idx(i), "cubic level " + std::to_string(i));
  exact(bundle, at(Q(3, 2)), "bundle2 E0=3/2");
  flt(cubic, {std::nullopt, 1}, "cubic level 1");
  flt(bundle, {1.5, std::nullopt}, "bundle2 E0=3/2");
  if (o.pass) o.note = note.str();
  return o;
}

Outcome ac4_transport() {
  Outcome o;
  struct Case {
    std::string preset;
    LevelSelector<Q> sel;
  };
  std::vector<Case> cases{
      {"harmonic:n=2,lambda=1/2,mu=1", idx(0)}, {"harmonic:n=2,lambda=1/2,mu=1", idx(1)},
      {"cubic1d", idx(0)},                      {"cubic1d", idx(1)},
      {"quartic1d", idx(0)},                    {"quartic1d", idx(1)},
      {"witten1d", idx(0)},                     {"witten1d", idx(1)},
      {"iso2d:c=1,g=1", idx(0)},                {"iso2d:c=1,g=1", idx(1)},
      {"bundle2", idx(0)},                      {"bundle2", at(Q(3, 2))},
  };
  int count = 0;
  for (const auto& c : cases) {
    auto r = run(make_preset(c.preset), c.sel, HalfInt(3), c.preset);
    auto t = transport_residual(r);
    o.require(t.pass && t.max_residual == 0, c.preset + " transport residual");
    ++count;
  }
  if (o.pass) o.note = std::to_string(count) + " preset levels, N = 3, residual exactly 0";
  return o;
}

Outcome ac5_parity() {
  Outcome o;
  auto cubic = run(make_preset("cubic1d"), idx(0), HalfInt(4), "cubic ground");
  auto iso = run(make_preset("iso2d:c=1,g=1"), idx(1), HalfInt(4), "iso2d odd");
  o.require(iso.level.parity == Parity::odd && iso.level.m0() == 2, "iso2d level 1 is not the odd pair");
  for (const auto* r : {&cubic, &iso}) {
    for (const auto& m : r->modes)
      for (const auto& [e, c] : m.energy.terms()) o.require(e.is_integer(), "half-integer eigenvalue term");
    auto p = parity_check(*r);
    o.require(p.pass, "eigenfunction parity pattern: " + p.detail);
  }
  if (o.pass) o.note = "no half-integer eigenvalue terms through N = 4; x-exponents = -K mod 1";
  return o;
}

Outcome ac6_rs() {
  Outcome o;
  int count = 0;
  for (const char* p : {"cubic1d", "cubic1d:c=-3/7", "quartic1d", "quartic1d:g=2/3"})
    for (int lv = 0; lv < 3; ++lv) {
      auto d = make_preset(p);
      auto r = run(d, idx(lv), HalfInt(2), p);
      auto rs = rs_oracle(r.fam, r.basis, r.level, HalfInt(2));
      for (int e = 1; e <= 2; ++e)
        o.require(r.modes[0].energy.at(HalfInt(e)) == rs.at(HalfInt(e)), std::string(p) + " exact mismatch");
      auto rf = run(to_float(d), LevelSelector<double>{std::nullopt, lv}, HalfInt(2), std::string(p) + " float");
      auto rsf = rs_oracle(rf.fam, rf.basis, rf.level, HalfInt(2));
      for (int e = 1; e <= 2; ++e) {
        double a = rf.modes[0].energy.at(HalfInt(e)), b = rsf.at(HalfInt(e));
        o.require(std::abs(a - b) <= 1e-10 * std::max(1.0, std::abs(b)), std::string(p) + " float mismatch");
        o.require(std::abs(a - rs.at(HalfInt(e)).get_d()) <= 1e-10 * std::max(1.0, std::abs(b)),
                  std::string(p) + " float vs exact");
      }
      ++count;
    }
  if (o.pass) o.note = std::to_string(count) + " non-degenerate levels, h^1 and h^2 agree (exact and float)";
  return o;
}

Outcome ac7_numeric() {
  Outcome o;
  auto r = run(to_float(make_preset("quartic1d:g=1")), LevelSelector<double>{std::nullopt, 0}, HalfInt(2), "quartic FD");
  FdOptions f;
  f.hbars = {0.2, 0.1, 0.05};
  f.grid = 4096;
  auto rep = crosscheck_eigenvalue_1d(r, f);
  std::ostringstream note;
  note << "slope " << rep.slope << " (>= 3.5), errors";
  for (const auto& row : rep.rows) note << " " << row.error;
  o.require(rep.converged, "grid not converged");
  o.require(rep.slope >= 3.5, "slope below 3.5");
  o.note = o.pass ? note.str() : o.note + "; " + note.str();
  return o;
}

Outcome ac8_orthonormal() {
  Outcome o;
  auto r = run(make_preset("iso2d:c=1,g=1"), idx(1), HalfInt(3), "iso2d m0=2");
  o.require(r.level.m0() == 2 && r.modes.size() == 2, "level multiplicity");
  for (std::size_t a = 0; a < r.modes.size(); ++a)
    for (std::size_t b = 0; b < r.modes.size(); ++b) {
      auto s = r.pairing.pair(r.modes[a].psi.series, r.modes[b].psi.series);
      s.set_trunc(HalfInt(3));
      // normalised pairing (psi_a, psi_b) / sqrt(kappa_a kappa_b); kappa is common here
      s.scale(Q(1) / r.modes[a].kappa);
      auto delta = a == b ? Series<Q>::monomial(HalfInt(0), Q(1), HalfInt(3)) : Series<Q>(HalfInt(3));
      o.require(r.modes[a].kappa == r.modes[b].kappa, "unequal kappa");
      o.require(s == delta, "pairing " + std::to_string(a) + std::to_string(b) + " = " + to_string(s));
    }
  if (o.pass) o.note = "normalised pairings equal delta_ij coefficientwise through N = 3 (kappa = " +
                       r.modes[0].kappa.get_str() + ")";
  return o;
}

Outcome ac9_bookkeeping() {
  Outcome o;
  // plus the remaining preset levels not already covered
  for (const char* p : {"harmonic:n=3", "quartic1d", "witten1d:c=2"})
    for (int lv = 0; lv < 3; ++lv) run(make_preset(p), idx(lv), HalfInt(3), p);
  for (const auto& f : g_bookkeeping_failures) o.require(false, f);
  if (o.pass) o.note = std::to_string(g_levels_seen) + " computed levels satisfy the degree/offset bounds";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    double budget;  // seconds
    std::function<Outcome()> fn;
  };
  std::vector<Criterion> all{
      {"AC1 harmonic exactness", 5, ac1_harmonic},       {"AC2 Witten supersymmetry", 10, ac2_witten},
      {"AC3 projector laws", 60, ac3_projector},         {"AC4 transport equations", 1e9, ac4_transport},
      {"AC5 parity", 1e9, ac5_parity},                   {"AC6 Rayleigh-Schroedinger oracle", 30, ac6_rs},
      {"AC7 numeric convergence", 60, ac7_numeric},      {"AC8 asymptotic orthonormality", 1e9, ac8_orthonormal},
      {"AC9 degree/offset bookkeeping", 1e9, ac9_bookkeeping},
  };
  int failures = 0;
  for (const auto& c : all) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.note = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.budget) {
      o.pass = false;
      o.note += "; exceeded time budget of " + std::to_string(static_cast<int>(c.budget)) + " s";
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " (" << std::fixed << std::setprecision(2) << secs
              << " s): " << std::defaultfloat << o.note << std::endl;
    failures += !o.pass;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criteria failed" : std::string("acceptance: all criteria pass"))
            << std::endl;
  return failures ? 1 : 0;
}
