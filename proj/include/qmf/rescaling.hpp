#pragma once

#include "qmf/series.hpp"

namespace qmf {

// Element of the rescaled algebra: hbar^{-K} sum_{e >= 0} hbar^e P_e(y) stored
// with absolute exponents (e - K); the polynomial at absolute exponent E has
// degree <= 2(E + K).
template <CoefficientField F>
struct S0Series {
  HalfInt K{0};
  Series<FiberPoly<F>> series;

  S0Series() = default;
  S0Series(HalfInt k, Series<FiberPoly<F>> s) : K(k), series(std::move(s)) {}

  HalfInt trunc() const { return series.trunc(); }

  bool satisfies_degree_bound() const {
    for (const auto& [e, p] : series.terms()) {
      if (e < -K) return false;
      if (p.degree() > (e + K).doubled()) return false;
    }
    return true;
  }
};

// Formal x-jet sum hbar^e x^alpha c_{e,alpha}; coefficient (e, alpha) is known
// iff |alpha| <= degree and e + |alpha|/2 <= weight.
template <CoefficientField F>
struct XJetSeries {
  HalfInt K{0};
  int degree = 0;
  HalfInt weight{0};
  Series<FiberPoly<F>> series{HalfInt::infinite()};

  bool known(HalfInt e, int d) const {
    return d <= degree && e + HalfInt::from_doubled(d) <= weight;
  }
};

// hbar^e x^alpha -> hbar^{e + |alpha|/2} y^alpha
template <CoefficientField F>
S0Series<F> rescale(const XJetSeries<F>& a) {
  HalfInt t = min(a.weight, HalfInt::from_doubled(a.degree) - a.K);
  Series<FiberPoly<F>> out(t);
  for (const auto& [e, p] : a.series.terms()) {
    for (const auto& [alpha, v] : p.terms()) {
      HalfInt E = e + HalfInt::from_doubled(alpha.total());
      if (E > t) continue;
      if (E < -a.K) throw Error("rescale: term below hbar^{-K}");
      FiberPoly<F> mono(p.dim(), p.rank());
      mono.add_term(alpha, v);
      out.add(E, mono);
    }
  }
  return S0Series<F>(a.K, std::move(out));
}

// hbar^E y^alpha -> hbar^{E - |alpha|/2} x^alpha
template <CoefficientField F>
XJetSeries<F> unrescale(const S0Series<F>& a) {
  XJetSeries<F> out;
  out.K = a.K;
  out.weight = a.trunc();
  out.degree = a.trunc().is_infinite() ? 255 : (a.trunc() + a.K).doubled();
  for (const auto& [E, p] : a.series.terms()) {
    for (const auto& [alpha, v] : p.terms()) {
      if (HalfInt::from_doubled(alpha.total()) > E + a.K)
        throw Error("unrescale: degree " + std::to_string(alpha.total()) + " at hbar^" + E.to_string() +
                    " violates the bound 2(j + K)");
      FiberPoly<F> mono(p.dim(), p.rank());
      mono.add_term(alpha, v);
      out.series.add(E - HalfInt::from_doubled(alpha.total()), mono);
    }
  }
  return out;
}

}  // namespace qmf
