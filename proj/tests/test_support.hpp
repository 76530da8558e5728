#pragma once

#include <gtest/gtest.h>

#include <random>

#include "qmf/series.hpp"

namespace qmf {

// Readable gtest output for scalar series.
template <CoefficientField F>
void PrintTo(const Series<F>& s, std::ostream* os) {
  *os << to_string(s) << " + O(h^" << (s.trunc().is_infinite() ? std::string("inf") : (s.trunc() + HalfInt::half()).to_string()) << ")";
}

}  // namespace qmf

namespace qmf::testing {

using Q = Rational;

inline Q q(long p, long d = 1) { return from_ratio<Q>(p, d); }

inline HalfInt h(int doubled) { return HalfInt::from_doubled(doubled); }

inline Q random_rational(std::mt19937& rng, int num = 5, int den = 4) {
  std::uniform_int_distribution<int> np(-num, num), dp(1, den);
  return q(np(rng), dp(rng));
}

inline Poly<Q> random_poly(std::mt19937& rng, std::size_t n, int max_degree, int terms) {
  Poly<Q> p(n);
  std::uniform_int_distribution<int> deg(0, max_degree);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(n, 0);
    int d = deg(rng);
    std::uniform_int_distribution<int> var(0, static_cast<int>(n) - 1);
    for (int k = 0; k < d; ++k) ++e[var(rng)];
    p.add_term(MultiIndex(e), random_rational(rng));
  }
  return p;
}

inline Series<Q> random_series(std::mt19937& rng, int max_doubled, HalfInt trunc) {
  Series<Q> s(trunc);
  std::uniform_int_distribution<int> coin(0, 2);
  for (int d = 0; d <= max_doubled; ++d)
    if (coin(rng)) s.add(h(d), random_rational(rng));
  return s;
}

template <class F>
Series<F> series_of(std::initializer_list<std::pair<int, F>> terms, HalfInt trunc = HalfInt::infinite()) {
  Series<F> s(trunc);
  for (const auto& [d, c] : terms) s.add(HalfInt::from_doubled(d), c);
  return s;
}

}  // namespace qmf::testing
