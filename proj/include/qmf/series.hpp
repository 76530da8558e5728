#pragma once

#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "qmf/half_int.hpp"
#include "qmf/polynomial.hpp"

namespace qmf {

namespace detail {
template <class T>
bool series_coeff_zero(const T& c) {
  if constexpr (CoefficientField<T>) {
    return qmf::is_zero(c);
  } else {
    return c.is_zero();
  }
}
}  // namespace detail

// Formal series sum_e hbar^e c_e over e in (1/2)Z, known through `trunc`
// (inclusive).  Coefficients beyond `trunc` are unknown, not zero.  A
// truncation of HalfInt::infinite() means the expansion is exact.
template <class T>
class Series {
 public:
  using coeff_type = T;
  using map_type = std::map<HalfInt, T>;

  explicit Series(HalfInt trunc = HalfInt::infinite()) : trunc_(trunc) {}

  static Series monomial(HalfInt e, const T& c, HalfInt trunc = HalfInt::infinite()) {
    Series s(trunc);
    s.add(e, c);
    return s;
  }

  HalfInt trunc() const { return trunc_; }
  const map_type& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void set_trunc(HalfInt t) {
    trunc_ = t;
    while (!terms_.empty() && terms_.rbegin()->first > t) terms_.erase(std::prev(terms_.end()));
  }

  const T* find(HalfInt e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? nullptr : &it->second;
  }

  // Coefficient at e or `zero` if absent.  Asking beyond trunc is an error.
  T at(HalfInt e, const T& zero) const {
    if (e > trunc_) throw Error("series coefficient requested beyond truncation order");
    auto it = terms_.find(e);
    return it == terms_.end() ? zero : it->second;
  }

  T at(HalfInt e) const { return at(e, T{}); }

  bool operator==(const Series& o) const { return trunc_ == o.trunc_ && terms_ == o.terms_; }

  void add(HalfInt e, const T& c) {
    if (e > trunc_ || detail::series_coeff_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (detail::series_coeff_zero(it->second)) terms_.erase(it);
    }
  }
  void set(HalfInt e, const T& c) {
    if (e > trunc_) return;
    if (detail::series_coeff_zero(c))
      terms_.erase(e);
    else
      terms_[e] = c;
  }

  // Lowest exponent present; for a zero series the first unknown exponent.
  HalfInt valuation() const { return terms_.empty() ? trunc_ + HalfInt::half() : terms_.begin()->first; }

  // Known to vanish identically through trunc.
  bool is_zero() const { return terms_.empty(); }

  Series truncated(HalfInt t) const {
    Series s = *this;
    s.set_trunc(min(t, trunc_));
    return s;
  }

  // Multiply by hbar^shift.
  Series shifted(HalfInt shift) const {
    Series s(trunc_ + shift);
    for (const auto& [e, c] : terms_) s.terms_.emplace(e + shift, c);
    return s;
  }

  template <class Fn>
  auto map(Fn&& fn) const {
    using U = std::decay_t<decltype(fn(std::declval<const T&>()))>;
    Series<U> s(trunc_);
    for (const auto& [e, c] : terms_) s.add(e, fn(c));
    return s;
  }

  Series& operator+=(const Series& o) {
    trunc_ = min(trunc_, o.trunc_);
    set_trunc(trunc_);
    for (const auto& [e, c] : o.terms_) add(e, c);
    return *this;
  }
  Series& operator-=(const Series& o) {
    trunc_ = min(trunc_, o.trunc_);
    set_trunc(trunc_);
    for (const auto& [e, c] : o.terms_) {
      T v = c;
      v *= typename scalar_of<T>::type(-1);
      add(e, v);
    }
    return *this;
  }
  template <class S>
  Series& scale(const S& s) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (detail::series_coeff_zero(it->second))
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }
  friend Series operator+(Series a, const Series& b) { return a += b; }
  friend Series operator-(Series a, const Series& b) { return a -= b; }
  Series operator-() const {
    Series s = *this;
    return s.scale(typename scalar_of<T>::type(-1));
  }

 private:
  template <class U, class = void>
  struct scalar_of {
    using type = U;
  };
  template <class U>
  struct scalar_of<U, std::void_t<typename U::field_type>> {
    using type = typename U::field_type;
  };

  map_type terms_;
  HalfInt trunc_;
};

// Truncation order of a product of two series: the product is known
// through min(Ta + vb, Tb + va) where v are valuations.
template <class A, class B>
HalfInt product_trunc(const Series<A>& a, const Series<B>& b) {
  return min(a.trunc() + b.valuation(), b.trunc() + a.valuation());
}

template <class A, class B, class Mul>
auto cauchy(const Series<A>& a, const Series<B>& b, Mul&& mul, HalfInt cap = HalfInt::infinite()) {
  using Out = std::decay_t<decltype(mul(std::declval<const A&>(), std::declval<const B&>()))>;
  HalfInt t = min(product_trunc(a, b), cap);
  Series<Out> out(t);
  for (const auto& [ea, ca] : a.terms()) {
    if (ea + b.valuation() > t) break;
    for (const auto& [eb, cb] : b.terms()) {
      if (ea + eb > t) break;
      out.add(ea + eb, mul(ca, cb));
    }
  }
  return out;
}

template <CoefficientField F>
using FormalScalarSeries = Series<F>;

template <CoefficientField F>
Series<F> operator*(const Series<F>& a, const Series<F>& b) {
  return cauchy(a, b, [](const F& x, const F& y) -> F { return x * y; });
}

template <CoefficientField F>
Series<F> operator*(Series<F> a, const F& s) {
  return a.scale(s);
}

template <CoefficientField F>
Series<F> constant_series(const F& c, HalfInt trunc = HalfInt::infinite()) {
  return Series<F>::monomial(HalfInt(0), c, trunc);
}

// (1 + X)^{-1/2} for a series with constant term 1 and no negative powers.
template <CoefficientField F>
Series<F> inverse_sqrt(const Series<F>& s) {
  if (s.valuation() < HalfInt(0)) throw Error("inverse_sqrt: series has negative powers");
  F c0 = s.at(HalfInt(0), F(0));
  if (!field_traits<F>::same(c0, F(1))) throw Error("inverse_sqrt: constant term must be 1");
  Series<F> x = s - constant_series<F>(c0);
  if (s.trunc().is_infinite() && !x.is_zero()) throw Error("inverse_sqrt: needs a finite truncation order");
  Series<F> result = constant_series<F>(F(1), s.trunc());
  Series<F> power = constant_series<F>(F(1), s.trunc());
  for (int k = 1;; ++k) {
    power = power * x;
    if (power.is_zero() || power.valuation() > s.trunc()) break;
    result += Series<F>(power).scale(binom_minus_half<F>(k));
  }
  return result;
}

// Multiplicative inverse of a series with nonzero constant term.
template <CoefficientField F>
Series<F> inverse(const Series<F>& s) {
  if (s.valuation() != HalfInt(0)) throw Error("inverse: series must start at hbar^0 with nonzero constant");
  F c0 = s.at(HalfInt(0), F(0));
  Series<F> x = (s - constant_series<F>(c0)).scale(F(1) / c0);
  if (s.trunc().is_infinite() && !x.is_zero()) throw Error("inverse: needs a finite truncation order");
  Series<F> result = constant_series<F>(F(1), s.trunc());
  Series<F> power = constant_series<F>(F(1), s.trunc());
  for (int k = 1;; ++k) {
    power = power * x;
    if (power.is_zero() || power.valuation() > s.trunc()) break;
    result += Series<F>(power).scale(F(k % 2 ? -1 : 1));
  }
  return result.scale(F(1) / c0);
}

template <CoefficientField F>
Series<F> conj(const Series<F>& s) {
  return s.map([](const F& c) { return field_traits<F>::conj(c); });
}

template <CoefficientField F>
double evaluate(const Series<F>& s, double hbar) {
  double v = 0;
  for (const auto& [e, c] : s.terms()) v += field_traits<F>::to_double(c) * std::pow(hbar, e.value());
  return v;
}

// Lexicographic comparison on coefficients in increasing exponent order.
template <CoefficientField F>
int compare_series(const Series<F>& a, const Series<F>& b) {
  HalfInt t = min(a.trunc(), b.trunc());
  HalfInt hi = HalfInt(-1000);
  if (!a.empty()) hi = max(hi, a.terms().rbegin()->first);
  if (!b.empty()) hi = max(hi, b.terms().rbegin()->first);
  t = min(t, hi);
  HalfInt lo = min(a.valuation(), b.valuation());
  for (HalfInt e = lo; e <= t; e += HalfInt::half()) {
    F ca = a.at(e, F(0)), cb = b.at(e, F(0));
    if (field_traits<F>::same(ca, cb)) continue;
    return ca < cb ? -1 : 1;
  }
  return 0;
}

template <CoefficientField F>
std::string to_string(const Series<F>& s, const std::string& var = "h") {
  std::ostringstream os;
  if (s.empty()) os << "0";
  bool first = true;
  for (const auto& [e, c] : s.terms()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << field_traits<F>::to_string(c) << ")";
    if (e != HalfInt(0)) os << "*" << var << "^" << e.to_string();
  }
  if (!s.trunc().is_infinite()) os << " + O(" << var << "^" << (s.trunc() + HalfInt::half()).to_string() << ")";
  return os.str();
}

}  // namespace qmf
