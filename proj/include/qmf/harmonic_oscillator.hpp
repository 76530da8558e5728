#pragma once

#include <algorithm>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "qmf/half_int.hpp"
#include "qmf/polynomial.hpp"

namespace qmf {

// Basis element p_alpha(y) e_k; k is 0-based here and 1-based in output.
struct HermiteIndex {
  MultiIndex alpha;
  int k = 0;
  auto operator<=>(const HermiteIndex&) const = default;
  bool operator==(const HermiteIndex&) const = default;
  std::string to_string() const { return alpha.to_string() + "," + std::to_string(k + 1); }
};

template <CoefficientField F>
using HermiteVector = std::map<HermiteIndex, F>;

template <CoefficientField F>
void add_to(HermiteVector<F>& v, const HermiteIndex& i, const F& c) {
  if (is_zero(c)) return;
  auto [it, inserted] = v.try_emplace(i, c);
  if (!inserted) {
    it->second += c;
    if (is_zero(it->second)) v.erase(it);
  }
}

// Monic Hermite polynomials for the weight exp(-sum lambda_nu y_nu^2):
//   p_{m+1} = y p_m - (m / (2 lambda)) p_{m-1},
// p_m(y) = H_m(sqrt(lambda) y) / (2 sqrt(lambda))^m.  They satisfy
//   (-d^2 + 2 lambda y d + lambda) p_m = (2m + 1) lambda p_m
// and ||p_alpha||^2 = prod alpha!/(2 lambda)^alpha in units of prod sqrt(pi/lambda).
template <CoefficientField F>
class HermiteBasis {
 public:
  HermiteBasis() = default;
  HermiteBasis(std::vector<F> lambda, std::vector<F> mu) : lambda_(std::move(lambda)), mu_(std::move(mu)) {}

  HermiteBasis(const HermiteBasis& o) : lambda_(o.lambda_), mu_(o.mu_) {}
  HermiteBasis& operator=(const HermiteBasis& o) {
    lambda_ = o.lambda_;
    mu_ = o.mu_;
    std::unique_lock lock(mutex_);
    poly_cache_.clear();
    mono_cache_.clear();
    return *this;
  }

  std::size_t dim() const { return lambda_.size(); }
  std::size_t rank() const { return mu_.size(); }
  const std::vector<F>& lambda() const { return lambda_; }
  const std::vector<F>& mu() const { return mu_; }

  F energy(const HermiteIndex& i) const {
    F e = mu_[i.k];
    for (std::size_t v = 0; v < dim(); ++v) e += from_int<F>(2 * i.alpha[v] + 1) * lambda_[v];
    return e;
  }

  F norm_sq(const MultiIndex& alpha) const {
    F r(1);
    for (std::size_t v = 0; v < dim(); ++v)
      for (int m = 1; m <= alpha[v]; ++m) r *= from_int<F>(m) / (F(2) * lambda_[v]);
    return r;
  }

  // Coefficients of p_m in the variable nu, lowest degree first.
  const std::vector<F>& hermite_1d(std::size_t nu, int m) const { return cached(poly_cache_, nu, m, true); }

  // Coefficients c_j with y_nu^m = sum_j c_j p_j.
  const std::vector<F>& monomial_1d(std::size_t nu, int m) const { return cached(mono_cache_, nu, m, false); }

  Poly<F> polynomial(const MultiIndex& alpha) const {
    const std::size_t n = dim();
    Poly<F> p = constant_poly<F>(n, F(1));
    for (std::size_t v = 0; v < n; ++v) {
      const auto& c = hermite_1d(v, alpha[v]);
      Poly<F> f(n);
      for (std::size_t j = 0; j < c.size(); ++j) f.add_term(MultiIndex::unit(n, v, static_cast<int>(j)), c[j]);
      p = p * f;
    }
    return p;
  }

  FiberPoly<F> element(const HermiteIndex& i) const { return lift_component(polynomial(i.alpha), rank(), i.k); }

  FiberPoly<F> synthesize(const HermiteVector<F>& v) const {
    FiberPoly<F> out(dim(), rank());
    for (const auto& [i, c] : v) out += element(i) * c;
    return out;
  }

  HermiteVector<F> expand(const FiberPoly<F>& p) const {
    HermiteVector<F> out;
    const std::size_t n = dim();
    for (const auto& [gamma, col] : p.terms()) {
      // tensor product of 1-D expansions
      std::vector<std::pair<MultiIndex, F>> acc{{MultiIndex(n), F(1)}};
      for (std::size_t v = 0; v < n; ++v) {
        const auto& c = monomial_1d(v, gamma[v]);
        std::vector<std::pair<MultiIndex, F>> next;
        for (const auto& [a, w] : acc)
          for (std::size_t j = 0; j < c.size(); ++j) {
            if (is_zero(c[j])) continue;
            MultiIndex b = a;
            b.set(v, static_cast<int>(j));
            next.emplace_back(b, w * c[j]);
          }
        acc.swap(next);
      }
      for (std::size_t k = 0; k < col.rank(); ++k) {
        if (is_zero(col[k])) continue;
        for (const auto& [a, w] : acc) add_to(out, HermiteIndex{a, static_cast<int>(k)}, F(w * col[k]));
      }
    }
    return out;
  }

 private:
  using Cache = std::map<std::pair<std::size_t, int>, std::vector<F>>;

  const std::vector<F>& cached(Cache& cache, std::size_t nu, int m, bool hermite) const {
    {
      std::shared_lock lock(mutex_);
      auto it = cache.find({nu, m});
      if (it != cache.end()) return it->second;
    }
    std::unique_lock lock(mutex_);
    auto it = cache.find({nu, m});
    if (it != cache.end()) return it->second;
    const F s = F(1) / (F(2) * lambda_[nu]);
    // Both families obey a three-term recurrence with rational coefficients.
    std::vector<std::vector<F>> seq{{F(1)}};
    for (int k = 0; k < m; ++k) {
      const auto& cur = seq.back();
      std::vector<F> next(cur.size() + 1, F(0));
      if (hermite) {
        for (std::size_t j = 0; j < cur.size(); ++j) next[j + 1] += cur[j];
        if (k >= 1) {
          const auto& prev = seq[seq.size() - 2];
          for (std::size_t j = 0; j < prev.size(); ++j) next[j] -= from_int<F>(k) * s * prev[j];
        }
      } else {
        for (std::size_t j = 0; j < cur.size(); ++j) {
          if (is_zero(cur[j])) continue;
          next[j + 1] += cur[j];
          if (j >= 1) next[j - 1] += cur[j] * from_int<F>(static_cast<long>(j)) * s;
        }
      }
      seq.push_back(std::move(next));
    }
    return cache.emplace(std::make_pair(nu, m), seq.back()).first->second;
  }

  std::vector<F> lambda_;
  std::vector<F> mu_;
  mutable std::shared_mutex mutex_;
  mutable Cache poly_cache_;
  mutable Cache mono_cache_;
};

template <CoefficientField F>
struct SpectrumEntry {
  HermiteIndex index;
  F energy;
};

template <CoefficientField F>
struct SpectrumTable {
  int degree = 0;
  std::vector<SpectrumEntry<F>> entries;
};

// All (alpha, k) with |alpha| <= D, sorted by energy then index.
template <CoefficientField F>
SpectrumTable<F> build_spectrum(const HermiteBasis<F>& basis, int D) {
  for (const auto& l : basis.lambda())
    if (!(field_traits<F>::to_double(l) > 0)) throw InputError("lambda entries must be positive");
  SpectrumTable<F> t;
  t.degree = D;
  for (const auto& a : MultiIndex::up_to_degree(basis.dim(), D))
    for (std::size_t k = 0; k < basis.rank(); ++k) {
      HermiteIndex i{a, static_cast<int>(k)};
      t.entries.push_back({i, basis.energy(i)});
    }
  std::stable_sort(t.entries.begin(), t.entries.end(), [](const auto& x, const auto& y) {
    if (!field_traits<F>::same(x.energy, y.energy)) return x.energy < y.energy;
    return x.index < y.index;
  });
  return t;
}

enum class Parity { even, odd, mixed };

inline const char* to_string(Parity p) {
  switch (p) {
    case Parity::even:
      return "even";
    case Parity::odd:
      return "odd";
    default:
      return "mixed";
  }
}

template <CoefficientField F>
struct DegenerateLevel {
  F E0;
  std::vector<HermiteIndex> members;
  HalfInt K{0};
  Parity parity = Parity::even;
  std::size_t m0() const { return members.size(); }
};

// Smallest |alpha| with (2|alpha|+n) lambda_min + mu_min > E, i.e. a degree past
// which no member of a level at energy E can live.
template <CoefficientField F>
int level_degree_bound(const HermiteBasis<F>& basis, const F& E) {
  double lmin = 1e300, mumin = 1e300, base = 0;
  for (const auto& l : basis.lambda()) {
    lmin = std::min(lmin, field_traits<F>::to_double(l));
    base += field_traits<F>::to_double(l);
  }
  for (const auto& m : basis.mu()) mumin = std::min(mumin, field_traits<F>::to_double(m));
  double e = field_traits<F>::to_double(E);
  int d = static_cast<int>(std::ceil((e - base - mumin) / (2 * lmin))) + 1;
  return std::max(d, 0);
}

template <CoefficientField F>
DegenerateLevel<F> make_level(const HermiteBasis<F>& basis, const F& E0, std::vector<HermiteIndex> members) {
  if (members.empty()) throw InputError("E0 not in spectrum");
  DegenerateLevel<F> lv;
  lv.E0 = E0;
  lv.members = std::move(members);
  std::sort(lv.members.begin(), lv.members.end());
  int maxdeg = 0;
  bool any_even = false, any_odd = false;
  for (const auto& m : lv.members) {
    maxdeg = std::max(maxdeg, m.alpha.total());
    (m.alpha.total() % 2 ? any_odd : any_even) = true;
  }
  lv.K = HalfInt::from_doubled(maxdeg);
  lv.parity = any_even && any_odd ? Parity::mixed : (any_odd ? Parity::odd : Parity::even);
  (void)basis;
  return lv;
}

template <CoefficientField F>
DegenerateLevel<F> degenerate_level(const SpectrumTable<F>& table, const HermiteBasis<F>& basis, const F& E0) {
  if (level_degree_bound(basis, E0) > table.degree)
    throw InputError("spectrum table degree too small for E0 = " + field_traits<F>::to_string(E0));
  std::vector<HermiteIndex> members;
  for (const auto& e : table.entries)
    if (field_traits<F>::same(e.energy, E0)) members.push_back(e.index);
  return make_level(basis, E0, std::move(members));
}

template <CoefficientField F>
DegenerateLevel<F> degenerate_level(const HermiteBasis<F>& basis, const F& E0) {
  auto table = build_spectrum(basis, level_degree_bound(basis, E0));
  return degenerate_level(table, basis, E0);
}

// Distinct eigenvalues in increasing order (for selecting a level by index).
template <CoefficientField F>
std::vector<F> distinct_levels(const SpectrumTable<F>& t) {
  std::vector<F> out;
  for (const auto& e : t.entries)
    if (out.empty() || !field_traits<F>::same(out.back(), e.energy)) out.push_back(e.energy);
  return out;
}

}  // namespace qmf
