#pragma once

#include <climits>
#include <map>
#include <utility>

#include "qmf/polynomial.hpp"

namespace qmf {

// falling factorial gamma!/(gamma - mu)!, componentwise product
inline long falling(const MultiIndex& gamma, const MultiIndex& mu) {
  long r = 1;
  for (std::size_t i = 0; i < gamma.size(); ++i)
    for (int k = 0; k < mu[i]; ++k) r *= gamma[i] - k;
  return r;
}

inline long multi_binomial(const MultiIndex& beta, const MultiIndex& mu) {
  return falling(beta, mu) / multi_factorial(mu);
}

// All mu with mu <= a componentwise.
inline std::vector<MultiIndex> sub_indices(const MultiIndex& a) {
  std::vector<MultiIndex> out{MultiIndex(a.size())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    std::vector<MultiIndex> next;
    for (const auto& m : out)
      for (int v = 0; v <= a[i]; ++v) {
        MultiIndex t = m;
        t.set(i, v);
        next.push_back(t);
      }
    out.swap(next);
  }
  return out;
}

// Differential operator sum_{alpha,beta} M_{alpha,beta} x^alpha d^beta with
// matrix coefficients acting on C^r-valued polynomials.  Coefficients are
// known up to total x-degree `max_degree()`.
template <CoefficientField F>
class DiffOp {
 public:
  using Key = std::pair<MultiIndex, MultiIndex>;
  using map_type = std::map<Key, Mat<F>>;

  DiffOp() = default;
  DiffOp(std::size_t n, std::size_t r, int max_degree = INT_MAX) : n_(n), r_(r), max_degree_(max_degree) {}

  static DiffOp multiplication(const EndoPoly<F>& p, int max_degree = INT_MAX) {
    DiffOp op(p.dim(), p.rank(), max_degree);
    for (const auto& [a, m] : p.terms())
      if (a.total() <= max_degree) op.add_term(a, MultiIndex(p.dim()), m);
    return op;
  }
  static DiffOp scalar_multiplication(const Poly<F>& p, std::size_t r, int max_degree = INT_MAX) {
    return multiplication(scalar_endo(p, r), max_degree);
  }
  static DiffOp derivative(std::size_t n, std::size_t r, std::size_t i) {
    DiffOp op(n, r);
    op.add_term(MultiIndex(n), MultiIndex::unit(n, i), Mat<F>::identity(r));
    return op;
  }
  static DiffOp identity(std::size_t n, std::size_t r) {
    DiffOp op(n, r);
    op.add_term(MultiIndex(n), MultiIndex(n), Mat<F>::identity(r));
    return op;
  }

  std::size_t dim() const { return n_; }
  std::size_t rank() const { return r_; }
  int max_degree() const { return max_degree_; }
  const map_type& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int order() const {
    int o = 0;
    for (const auto& [k, m] : terms_) o = std::max(o, k.second.total());
    return o;
  }

  void add_term(const MultiIndex& alpha, const MultiIndex& beta, const Mat<F>& m) {
    if (alpha.total() > max_degree_ || m.is_zero()) return;
    Key key{alpha, beta};
    auto [it, inserted] = terms_.try_emplace(key, m);
    if (!inserted) {
      it->second += m;
      if (it->second.is_zero()) terms_.erase(it);
    }
  }

  Mat<F> coeff(const MultiIndex& alpha, const MultiIndex& beta) const {
    auto it = terms_.find(Key{alpha, beta});
    return it == terms_.end() ? Mat<F>(r_) : it->second;
  }

  DiffOp& operator+=(const DiffOp& o) {
    if (n_ == 0) {
      n_ = o.n_;
      r_ = o.r_;
    }
    max_degree_ = std::min(max_degree_, o.max_degree_);
    drop_above(max_degree_);
    for (const auto& [k, m] : o.terms_) add_term(k.first, k.second, m);
    return *this;
  }
  DiffOp& operator-=(const DiffOp& o) { return *this += o * F(-1); }
  DiffOp& operator*=(const F& s) {
    for (auto it = terms_.begin(); it != terms_.end();) {
      it->second *= s;
      if (it->second.is_zero())
        it = terms_.erase(it);
      else
        ++it;
    }
    return *this;
  }
  friend DiffOp operator+(DiffOp a, const DiffOp& b) { return a += b; }
  friend DiffOp operator-(DiffOp a, const DiffOp& b) { return a -= b; }
  friend DiffOp operator*(DiffOp a, const F& s) { return a *= s; }
  friend DiffOp operator*(const F& s, DiffOp a) { return a *= s; }

  void drop_above(int d) {
    max_degree_ = std::min(max_degree_, d);
    for (auto it = terms_.begin(); it != terms_.end();) {
      if (it->first.first.total() > max_degree_)
        it = terms_.erase(it);
      else
        ++it;
    }
  }

  // Terms with |alpha| - |beta| == m.
  DiffOp graded(int m) const {
    DiffOp out(n_, r_, max_degree_);
    for (const auto& [k, c] : terms_)
      if (k.first.total() - k.second.total() == m) out.terms_.emplace(k, c);
    return out;
  }

  // Terms with |alpha| in [lo, hi].
  DiffOp coefficient_degrees(int lo, int hi) const {
    DiffOp out(n_, r_, max_degree_);
    for (const auto& [k, c] : terms_)
      if (k.first.total() >= lo && k.first.total() <= hi) out.terms_.emplace(k, c);
    return out;
  }

  FiberPoly<F> apply(const FiberPoly<F>& u, int max_degree = INT_MAX) const {
    FiberPoly<F> out(u.dim() ? u.dim() : n_, r_);
    for (const auto& [k, m] : terms_) {
      const auto& [alpha, beta] = k;
      for (const auto& [gamma, v] : u.terms()) {
        if (!gamma.dominates(beta)) continue;
        MultiIndex d = alpha + (gamma - beta);
        if (d.total() > max_degree) continue;
        Vec<F> w = m * v;
        w *= from_int<F>(falling(gamma, beta));
        out.add_term(d, w);
      }
    }
    return out;
  }

  // (A o B); coefficients kept through the degree both factors determine.
  friend DiffOp compose(const DiffOp& a, const DiffOp& b) {
    int known = INT_MAX;
    if (a.max_degree_ != INT_MAX) known = a.max_degree_;
    if (b.max_degree_ != INT_MAX) known = std::min(known, b.max_degree_ - a.order());
    DiffOp out(a.n_, a.r_, known);
    for (const auto& [ka, ma] : a.terms_) {
      const auto& [alpha, beta] = ka;
      auto mus = sub_indices(beta);
      for (const auto& [kb, mb] : b.terms_) {
        const auto& [gamma, delta] = kb;
        Mat<F> prod = ma * mb;
        if (prod.is_zero()) continue;
        for (const auto& mu : mus) {
          if (!gamma.dominates(mu)) continue;
          MultiIndex coef = alpha + (gamma - mu);
          if (coef.total() > known) continue;
          long c = multi_binomial(beta, mu) * falling(gamma, mu);
          out.add_term(coef, (beta - mu) + delta, prod * from_int<F>(c));
        }
      }
    }
    return out;
  }
  friend DiffOp operator*(const DiffOp& a, const DiffOp& b) { return compose(a, b); }

  // Formal adjoint with respect to the flat pairing sum_k int u_k v_k dx,
  // used for symmetry tests: (M x^a d^b)^* u = (-1)^|b| d^b (x^a M^T u).
  DiffOp formal_adjoint() const {
    DiffOp out(n_, r_, max_degree_);
    for (const auto& [k, m] : terms_) {
      const auto& [alpha, beta] = k;
      DiffOp mult(n_, r_);
      mult.add_term(alpha, MultiIndex(n_), m.transpose());
      DiffOp der(n_, r_);
      der.add_term(MultiIndex(n_), beta, Mat<F>::identity(r_) * from_int<F>(beta.total() % 2 ? -1 : 1));
      out += compose(der, mult);
    }
    return out;
  }

  bool operator==(const DiffOp& o) const { return (*this - o).is_zero(); }

 private:
  std::size_t n_ = 0;
  std::size_t r_ = 1;
  int max_degree_ = INT_MAX;
  map_type terms_;
};

}  // namespace qmf
