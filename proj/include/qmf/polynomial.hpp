#pragma once

#include <climits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qmf/matrix.hpp"
#include "qmf/multi_index.hpp"

namespace qmf {

// Fiber column of length r.
template <CoefficientField F>
class Vec {
 public:
  Vec() = default;
  explicit Vec(std::size_t r) : v_(r, F(0)) {}
  explicit Vec(std::vector<F> v) : v_(std::move(v)) {}
  static Vec unit(std::size_t r, std::size_t k, const F& c = F(1)) {
    Vec v(r);
    v.v_[k] = c;
    return v;
  }

  std::size_t rank() const { return v_.size(); }
  F& operator[](std::size_t i) { return v_[i]; }
  const F& operator[](std::size_t i) const { return v_[i]; }
  const std::vector<F>& data() const { return v_; }

  bool is_zero() const {
    for (const auto& x : v_)
      if (!qmf::is_zero(x)) return false;
    return true;
  }
  Vec& operator+=(const Vec& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  Vec& operator*=(const F& s) {
    for (auto& x : v_) x *= s;
    return *this;
  }
  friend Vec operator*(const Mat<F>& m, const Vec& v) { return Vec(m.apply(v.v_)); }
  bool operator==(const Vec& o) const {
    Vec d = *this;
    d -= o;
    return d.is_zero();
  }

 private:
  std::vector<F> v_;
};

namespace detail {
template <CoefficientField F>
bool coeff_is_zero(const F& c) {
  return qmf::is_zero(c);
}
template <CoefficientField F>
bool coeff_is_zero(const Vec<F>& c) {
  return c.is_zero();
}
template <CoefficientField F>
bool coeff_is_zero(const Mat<F>& c) {
  return c.is_zero();
}
template <class C>
struct coeff_zero;
template <CoefficientField F>
struct coeff_zero<Vec<F>> {
  static Vec<F> make(std::size_t r) { return Vec<F>(r); }
};
template <CoefficientField F>
struct coeff_zero<Mat<F>> {
  static Mat<F> make(std::size_t r) { return Mat<F>(r); }
};
}  // namespace detail

// Sparse polynomial in n variables with coefficients of type C, where C is
// the field itself, a fiber column, or an r x r matrix.
template <CoefficientField F, class C>
class GPoly {
 public:
  using field_type = F;
  using coeff_type = C;
  using map_type = std::map<MultiIndex, C>;

  GPoly() = default;
  explicit GPoly(std::size_t n, std::size_t r = 1) : n_(n), r_(r) {}

  std::size_t dim() const { return n_; }
  std::size_t rank() const { return r_; }
  const map_type& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  C zero_coeff() const {
    if constexpr (std::is_same_v<C, F>) {
      return F(0);
    } else {
      return detail::coeff_zero<C>::make(r_);
    }
  }

  C coeff(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? zero_coeff() : it->second;
  }
  const C* find(const MultiIndex& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? nullptr : &it->second;
  }

  void add_term(const MultiIndex& a, const C& c) {
    if (detail::coeff_is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (detail::coeff_is_zero(it->second)) terms_.erase(it);
    }
  }
  void set_term(const MultiIndex& a, const C& c) {
    if (detail::coeff_is_zero(c))
      terms_.erase(a);
    else
      terms_[a] = c;
  }

  int degree() const { return terms_.empty() ? -1 : terms_.rbegin()->first.total(); }
  int min_degree() const { return terms_.empty() ? INT_MAX : terms_.begin()->first.total(); }

  GPoly homogeneous(int d) const {
    GPoly out(n_, r_);
    for (const auto& [a, c] : terms_)
      if (a.total() == d) out.terms_.emplace(a, c);
    return out;
  }
  GPoly truncated(int max_degree) const {
    GPoly out(n_, r_);
    for (const auto& [a, c] : terms_)
      if (a.total() <= max_degree) out.terms_.emplace(a, c);
    return out;
  }
  GPoly degree_range(int lo, int hi) const {
    GPoly out(n_, r_);
    for (const auto& [a, c] : terms_)
      if (a.total() >= lo && a.total() <= hi) out.terms_.emplace(a, c);
    return out;
  }

  GPoly derivative(std::size_t i) const {
    GPoly out(n_, r_);
    for (const auto& [a, c] : terms_) {
      if (a[i] == 0) continue;
      MultiIndex b = a;
      b.set(i, a[i] - 1);
      C v = c;
      v *= from_int<F>(a[i]);
      out.add_term(b, v);
    }
    return out;
  }

  GPoly& operator+=(const GPoly& o) {
    adopt_shape(o);
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  GPoly& operator-=(const GPoly& o) {
    adopt_shape(o);
    for (const auto& [a, c] : o.terms_) {
      C v = c;
      v *= F(-1);
      add_term(a, v);
    }
    return *this;
  }
  GPoly& operator*=(const F& s) {
    if (qmf::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (detail::coeff_is_zero(it->second))
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }
  friend GPoly operator+(GPoly a, const GPoly& b) { return a += b; }
  friend GPoly operator-(GPoly a, const GPoly& b) { return a -= b; }
  friend GPoly operator*(GPoly a, const F& s) { return a *= s; }
  friend GPoly operator*(const F& s, GPoly a) { return a *= s; }
  GPoly operator-() const { return *this * F(-1); }

  bool is_zero() const { return terms_.empty(); }
  bool operator==(const GPoly& o) const { return (*this - o).is_zero(); }

  // Drop coefficients that the field considers zero (float noise).
  void prune() {
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (detail::coeff_is_zero(it->second))
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  template <class Fn>
  GPoly map_coeffs(Fn&& fn) const {
    GPoly out(n_, r_);
    for (const auto& [a, c] : terms_) out.add_term(a, fn(a, c));
    return out;
  }

 private:
  void adopt_shape(const GPoly& o) {
    if (n_ == 0) {
      n_ = o.n_;
      r_ = o.r_;
    }
  }

  std::size_t n_ = 0;
  std::size_t r_ = 1;
  map_type terms_;
};

template <CoefficientField F>
using Poly = GPoly<F, F>;
template <CoefficientField F>
using FiberPoly = GPoly<F, Vec<F>>;
template <CoefficientField F>
using EndoPoly = GPoly<F, Mat<F>>;

template <CoefficientField F>
Poly<F> monomial(std::size_t n, const MultiIndex& a, const F& c) {
  Poly<F> p(n);
  p.add_term(a, c);
  return p;
}

template <CoefficientField F>
Poly<F> constant_poly(std::size_t n, const F& c) {
  return monomial<F>(n, MultiIndex(n), c);
}

template <CoefficientField F>
Poly<F> variable(std::size_t n, std::size_t i) {
  return monomial<F>(n, MultiIndex::unit(n, i), F(1));
}

// Generic product with an optional degree cap; `mul` combines coefficients.
template <CoefficientField F, class A, class B, class Out, class Mul>
void accumulate_product(const GPoly<F, A>& p, const GPoly<F, B>& q, GPoly<F, Out>& out, Mul&& mul,
                        int max_degree = INT_MAX) {
  for (const auto& [a, ca] : p.terms()) {
    if (a.total() > max_degree) break;
    for (const auto& [b, cb] : q.terms()) {
      if (a.total() + b.total() > max_degree) break;
      out.add_term(a + b, mul(ca, cb));
    }
  }
}

template <CoefficientField F>
Poly<F> multiply(const Poly<F>& p, const Poly<F>& q, int max_degree = INT_MAX) {
  Poly<F> out(p.dim() ? p.dim() : q.dim());
  accumulate_product(p, q, out, [](const F& a, const F& b) -> F { return a * b; }, max_degree);
  return out;
}

template <CoefficientField F>
Poly<F> operator*(const Poly<F>& p, const Poly<F>& q) {
  return multiply(p, q);
}

template <CoefficientField F>
FiberPoly<F> multiply(const Poly<F>& p, const FiberPoly<F>& q, int max_degree = INT_MAX) {
  FiberPoly<F> out(q.dim(), q.rank());
  accumulate_product(p, q, out, [](const F& a, const Vec<F>& b) { return Vec<F>(b) *= a; }, max_degree);
  return out;
}

template <CoefficientField F>
FiberPoly<F> operator*(const Poly<F>& p, const FiberPoly<F>& q) {
  return multiply(p, q);
}

template <CoefficientField F>
EndoPoly<F> multiply(const Poly<F>& p, const EndoPoly<F>& q, int max_degree = INT_MAX) {
  EndoPoly<F> out(q.dim(), q.rank());
  accumulate_product(p, q, out, [](const F& a, const Mat<F>& b) { return b * a; }, max_degree);
  return out;
}

template <CoefficientField F>
EndoPoly<F> operator*(const Poly<F>& p, const EndoPoly<F>& q) {
  return multiply(p, q);
}

template <CoefficientField F>
EndoPoly<F> multiply(const EndoPoly<F>& p, const EndoPoly<F>& q, int max_degree = INT_MAX) {
  EndoPoly<F> out(p.dim(), p.rank());
  accumulate_product(p, q, out, [](const Mat<F>& a, const Mat<F>& b) { return a * b; }, max_degree);
  return out;
}

template <CoefficientField F>
EndoPoly<F> operator*(const EndoPoly<F>& p, const EndoPoly<F>& q) {
  return multiply(p, q);
}

template <CoefficientField F>
FiberPoly<F> multiply(const EndoPoly<F>& p, const FiberPoly<F>& q, int max_degree = INT_MAX) {
  FiberPoly<F> out(q.dim(), q.rank());
  accumulate_product(p, q, out, [](const Mat<F>& a, const Vec<F>& b) { return a * b; }, max_degree);
  return out;
}

template <CoefficientField F>
FiberPoly<F> operator*(const EndoPoly<F>& p, const FiberPoly<F>& q) {
  return multiply(p, q);
}

// Scalar polynomial viewed as a multiple of the identity endomorphism.
template <CoefficientField F>
EndoPoly<F> scalar_endo(const Poly<F>& p, std::size_t r) {
  EndoPoly<F> out(p.dim(), r);
  for (const auto& [a, c] : p.terms()) out.add_term(a, Mat<F>::scalar(r, c));
  return out;
}

template <CoefficientField F>
EndoPoly<F> transpose(const EndoPoly<F>& p) {
  return p.map_coeffs([](const MultiIndex&, const Mat<F>& m) { return m.transpose(); });
}

template <CoefficientField F>
Poly<F> component(const FiberPoly<F>& p, std::size_t k) {
  Poly<F> out(p.dim());
  for (const auto& [a, v] : p.terms()) out.add_term(a, v[k]);
  return out;
}

template <CoefficientField F>
FiberPoly<F> lift_component(const Poly<F>& p, std::size_t r, std::size_t k) {
  FiberPoly<F> out(p.dim(), r);
  for (const auto& [a, c] : p.terms()) out.add_term(a, Vec<F>::unit(r, k, c));
  return out;
}

template <CoefficientField F>
Poly<F> entry(const EndoPoly<F>& p, std::size_t i, std::size_t j) {
  Poly<F> out(p.dim());
  for (const auto& [a, m] : p.terms()) out.add_term(a, m(i, j));
  return out;
}

template <CoefficientField F>
double evaluate(const Poly<F>& p, const std::vector<double>& x) {
  double s = 0;
  for (const auto& [a, c] : p.terms()) {
    double t = field_traits<F>::to_double(c);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (int k = 0; k < a[i]; ++k) t *= x[i];
    s += t;
  }
  return s;
}

template <CoefficientField F>
std::string to_string(const Poly<F>& p) {
  if (p.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [a, c] : p.terms()) {
    if (!first) os << " + ";
    first = false;
    os << "(" << field_traits<F>::to_string(c) << ")";
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i]) os << "*x" << (i + 1) << "^" << a[i];
  }
  return os.str();
}

template <CoefficientField F>
std::string to_string(const FiberPoly<F>& p) {
  if (p.empty()) return "0";
  std::ostringstream os;
  for (std::size_t k = 0; k < p.rank(); ++k) os << (k ? "; " : "[") << to_string(component(p, k));
  os << "]";
  return os.str();
}

// Polynomial whose coefficients of a smaller field are converted.
template <CoefficientField F>
Poly<F> from_rational(const Poly<Rational>& p) {
  Poly<F> out(p.dim());
  for (const auto& [a, c] : p.terms()) out.add_term(a, convert_rational<F>(c));
  return out;
}

template <CoefficientField F>
FiberPoly<F> from_rational(const FiberPoly<Rational>& p) {
  FiberPoly<F> out(p.dim(), p.rank());
  for (const auto& [a, c] : p.terms()) {
    Vec<F> v(c.rank());
    for (std::size_t k = 0; k < c.rank(); ++k) v[k] = convert_rational<F>(c[k]);
    out.add_term(a, v);
  }
  return out;
}

template <CoefficientField F>
EndoPoly<F> from_rational(const EndoPoly<Rational>& p) {
  EndoPoly<F> out(p.dim(), p.rank());
  for (const auto& [a, m] : p.terms()) {
    Mat<F> md(m.rank());
    for (std::size_t i = 0; i < m.rank(); ++i)
      for (std::size_t j = 0; j < m.rank(); ++j) md(i, j) = convert_rational<F>(m(i, j));
    out.add_term(a, md);
  }
  return out;
}

}  // namespace qmf
