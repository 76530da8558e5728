#pragma once

#include <map>
#include <mutex>
#include <shared_mutex>
#include <vector>

#include "qmf/gaussian_pairing.hpp"
#include "qmf/harmonic_oscillator.hpp"
#include "qmf/operator_calculus.hpp"
#include "qmf/parallel.hpp"
#include "qmf/rescaling.hpp"
#include "qmf/series_matrix.hpp"

namespace qmf {

// Laurent polynomial in w = z - E0 with Hermite-vector coefficients.
template <CoefficientField F>
using Laurent = std::map<int, HermiteVector<F>>;

// Spectral projector of Q = sum hbar^j Q_j onto the perturbed E0 cluster,
//   Pi = -Res_{z=E0} (Q - z)^{-1},  (Q - z)^{-1} = sum_k (-R0 Q')^k R0,
// evaluated coefficientwise in the Hermite basis of Q0.
template <CoefficientField F>
class Projector {
 public:
  Projector(QFamily<F> q, HermiteBasis<F> basis, DegenerateLevel<F> level, HalfInt N, int max_degree = -1)
      : q_(std::move(q)), basis_(std::move(basis)), level_(std::move(level)), N_(N), max_degree_(max_degree) {
    if (N_ > q_.N) throw Error("projector order exceeds the available Q_j");
  }

  HalfInt order() const { return N_; }
  const DegenerateLevel<F>& level() const { return level_; }
  const HermiteBasis<F>& basis() const { return basis_; }
  const QFamily<F>& q() const { return q_; }

  bool in_level(const HermiteIndex& b) const { return field_traits<F>::same(basis_.energy(b), level_.E0); }

  // Q_j p_b in the Hermite basis (j doubled).
  HermiteVector<F> q_action(int jd, const HermiteIndex& b) const {
    const auto key = std::make_pair(jd, b);
    {
      std::shared_lock lock(q_mutex_);
      auto it = q_cache_.find(key);
      if (it != q_cache_.end()) return it->second;
    }
    auto v = basis_.expand(q_.pieces[jd].apply(basis_.element(b)));
    if (max_degree_ >= 0)
      for (const auto& [b2, c] : v)
        if (b2.alpha.total() > max_degree_)
          throw InputError("spectrum table too small: degree " + std::to_string(b2.alpha.total()) + " exceeds " +
                           std::to_string(max_degree_));
    std::unique_lock lock(q_mutex_);
    return q_cache_.emplace(key, std::move(v)).first->second;
  }

  // Multiply by R0(z) = (Q0 - z)^{-1}, dropping powers of w above keep_max.
  Laurent<F> apply_r0(const Laurent<F>& x, int keep_max) const {
    Laurent<F> out;
    for (const auto& [p, vec] : x)
      for (const auto& [b, c] : vec) {
        F d = basis_.energy(b) - level_.E0;
        if (field_traits<F>::same(basis_.energy(b), level_.E0)) {
          if (p - 1 <= keep_max) add_to(out[p - 1], b, F(-c));
          continue;
        }
        F inv = F(1) / d, f = c * inv;
        for (int m = 0; p + m <= keep_max; ++m, f *= inv) add_to(out[p + m], b, f);
      }
    std::erase_if(out, [](const auto& kv) { return kv.second.empty(); });
    return out;
  }

  // Pi_j h for every j <= N (index 2j), memoized per basis element.
  const std::vector<HermiteVector<F>>& residues(const HermiteIndex& h) const {
    {
      std::shared_lock lock(res_mutex_);
      auto it = res_cache_.find(h);
      if (it != res_cache_.end()) return it->second;
    }
    const int Nd = N_.doubled();
    std::vector<Laurent<F>> X(Nd + 1);
    std::vector<HermiteVector<F>> out(Nd + 1);
    Laurent<F> seed;
    seed[0][h] = F(1);
    X[0] = apply_r0(seed, Nd - 1);
    for (int j = 1; j <= Nd; ++j) {
      Laurent<F> acc;
      for (int i = 1; i <= j; ++i) {
        if (q_.pieces[i].is_zero()) continue;
        for (const auto& [p, vec] : X[j - i])
          for (const auto& [b, c] : vec)
            for (const auto& [b2, c2] : q_action(i, b)) add_to(acc[p], b2, F(-c * c2));
      }
      X[j] = apply_r0(acc, Nd - j - 1);
    }
    for (int j = 0; j <= Nd; ++j) {
      auto it = X[j].find(-1);
      if (it == X[j].end()) continue;
      for (const auto& [b, c] : it->second) add_to(out[j], b, F(-c));
    }
    std::unique_lock lock(res_mutex_);
    return res_cache_.emplace(h, std::move(out)).first->second;
  }

  // The residue term of the order-j chains applied to h.
  HermiteVector<F> resolvent_chain_apply(HalfInt j, const HermiteIndex& h) const {
    if (j < HalfInt(0) || j > N_) throw Error("resolvent_chain_apply: order out of range");
    return residues(h)[j.doubled()];
  }

  // Pi h as a series of fiber polynomials through order N.
  const Series<FiberPoly<F>>& image(const HermiteIndex& h) const {
    {
      std::shared_lock lock(img_mutex_);
      auto it = img_cache_.find(h);
      if (it != img_cache_.end()) return it->second;
    }
    const auto& r = residues(h);
    Series<FiberPoly<F>> s(N_);
    for (int j = 0; j <= N_.doubled(); ++j)
      if (!r[j].empty()) s.add(HalfInt::from_doubled(j), basis_.synthesize(r[j]));
    std::unique_lock lock(img_mutex_);
    return img_cache_.emplace(h, std::move(s)).first->second;
  }

  // Warm the caches for a set of basis elements in parallel.
  void precompute(const std::vector<HermiteIndex>& hs) const {
    parallel_for(hs.size(), [&](std::size_t i) { image(hs[i]); });
  }

  // Pi u for an arbitrary series; known through min(T_u, val(u) + N).
  Series<FiberPoly<F>> apply(const Series<FiberPoly<F>>& u) const {
    HalfInt t = min(u.trunc(), u.valuation() + N_);
    Series<FiberPoly<F>> out(t);
    for (const auto& [e, p] : u.terms()) {
      if (e > t) break;
      for (const auto& [b, c] : basis_.expand(p))
        for (const auto& [j, img] : image(b).terms()) {
          if (e + j > t) break;
          out.add(e + j, img * c);
        }
    }
    return out;
  }

 private:
  QFamily<F> q_;
  HermiteBasis<F> basis_;
  DegenerateLevel<F> level_;
  HalfInt N_;
  int max_degree_;
  mutable std::shared_mutex q_mutex_, res_mutex_, img_mutex_;
  mutable std::map<std::pair<int, HermiteIndex>, HermiteVector<F>> q_cache_;
  mutable std::map<HermiteIndex, std::vector<HermiteVector<F>>> res_cache_;
  mutable std::map<HermiteIndex, Series<FiberPoly<F>>> img_cache_;
};

// Action table of Pi on the level's basis elements.
template <CoefficientField F>
struct ProjectorSeries {
  DegenerateLevel<F> level;
  HalfInt N{0};
  std::map<HermiteIndex, S0Series<F>> images;
};

template <CoefficientField F>
ProjectorSeries<F> build_projector(const Projector<F>& pi) {
  ProjectorSeries<F> out{pi.level(), pi.order(), {}};
  pi.precompute(pi.level().members);
  for (const auto& h : pi.level().members) out.images.emplace(h, S0Series<F>{pi.level().K, pi.image(h)});
  return out;
}

// Kato's expansion of the perturbed projector, used as an independent check:
//   Pi^(j) = -sum_p (-1)^p sum S^(k_1) Q_{v_1} S^(k_2) ... Q_{v_p} S^(k_{p+1}),
// over v_i >= 1/2 with sum v = j and k_i >= 0 with sum k = p, where S^(0) = -P0
// and S^(k) = S^k for the reduced resolvent S = (Q0 - E0)^{-1} (1 - P0).
template <CoefficientField F>
HermiteVector<F> kato_projector_term(const Projector<F>& pi, HalfInt j, const HermiteIndex& h) {
  const auto& basis = pi.basis();
  auto S = [&](const HermiteVector<F>& v, int k) {
    HermiteVector<F> out;
    for (const auto& [b, c] : v) {
      if (pi.in_level(b)) {
        if (k == 0) add_to(out, b, F(-c));
        continue;
      }
      if (k == 0) continue;
      F inv = F(1) / (basis.energy(b) - pi.level().E0), f = c;
      for (int m = 0; m < k; ++m) f *= inv;
      add_to(out, b, f);
    }
    return out;
  };
  auto Qv = [&](const HermiteVector<F>& v, int vd) {
    HermiteVector<F> out;
    for (const auto& [b, c] : v)
      for (const auto& [b2, c2] : pi.q_action(vd, b)) add_to(out, b2, F(c * c2));
    return out;
  };
  const int jd = j.doubled();
  HermiteVector<F> total;
  if (jd == 0) {
    if (pi.in_level(h)) total[h] = F(1);
    return total;
  }
  // compositions v of jd, then weak compositions k of p into p+1 parts
  std::vector<int> v;
  std::function<void(int)> over_v = [&](int left) {
    if (left == 0) {
      const int p = static_cast<int>(v.size());
      std::vector<int> k(p + 1, 0);
      std::function<void(int, int)> over_k = [&](int idx, int rem) {
        if (idx == p) {
          k[p] = rem;
          // rightmost factor acts first
          HermiteVector<F> cur{{h, F(1)}};
          cur = S(cur, k[p]);
          for (int m = p - 1; m >= 0; --m) cur = S(Qv(cur, v[m]), k[m]);
          F sign = (p % 2) ? F(1) : F(-1);
          for (const auto& [b, c] : cur) add_to(total, b, F(sign * c));
          return;
        }
        for (int t = 0; t <= rem; ++t) {
          k[idx] = t;
          over_k(idx + 1, rem - t);
        }
      };
      over_k(0, p);
      return;
    }
    for (int first = 1; first <= left; ++first) {
      v.push_back(first);
      over_v(left - first);
      v.pop_back();
    }
  };
  over_v(jd);
  return total;
}

struct ProjectorReport {
  HalfInt order{0};
  double idempotency = 0;  // max |Pi^2 - Pi|
  double commutator = 0;   // max |Pi Q - Q Pi|
  double symmetry = 0;     // max |(Pi u, v) - (u, Pi v)|
  double span = 0;         // max residual of Pi g against the level images
  double scale = 1;        // max coefficient of the images, for relative reporting
  std::size_t rank = 0;
  bool exact_zero = true;  // all defects vanish identically

  double max_defect() const { return std::max({idempotency, commutator, symmetry, span}); }
  double relative() const { return max_defect() / std::max(1.0, scale); }
};

namespace detail {
template <CoefficientField F>
double series_max_abs(const Series<FiberPoly<F>>& s, bool& nonzero) {
  double m = 0;
  for (const auto& [e, p] : s.terms())
    for (const auto& [a, v] : p.terms())
      for (std::size_t k = 0; k < v.rank(); ++k) {
        if (!is_zero(v[k])) nonzero = true;
        m = std::max(m, std::abs(field_traits<F>::to_double(v[k])));
      }
  return m;
}
template <CoefficientField F>
double series_max_abs(const Series<F>& s, bool& nonzero) {
  double m = 0;
  for (const auto& [e, c] : s.terms()) {
    if (!is_zero(c)) nonzero = true;
    m = std::max(m, std::abs(field_traits<F>::to_double(c)));
  }
  return m;
}
}  // namespace detail

// Basis elements used to probe operator identities: the level plus all
// elements up to degree 2K + extra.
template <CoefficientField F>
std::vector<HermiteIndex> probe_set(const Projector<F>& pi, int extra = 1) {
  std::vector<HermiteIndex> out;
  for (const auto& a : MultiIndex::up_to_degree(pi.basis().dim(), pi.level().K.doubled() + extra))
    for (std::size_t k = 0; k < pi.basis().rank(); ++k) out.push_back({a, static_cast<int>(k)});
  return out;
}

template <CoefficientField F>
ProjectorReport projector_diagnostics(const Projector<F>& pi, const QFamily<F>& Q, const Pairing<F>& pairing,
                                      const std::vector<HermiteIndex>& probes) {
  ProjectorReport rep;
  rep.order = pi.order();
  const HalfInt N = pi.order();
  const auto& basis = pi.basis();
  const auto& members = pi.level().members;
  pi.precompute(probes);
  auto unit = [&](const HermiteIndex& b) { return Series<FiberPoly<F>>::monomial(HalfInt(0), basis.element(b), N); };
  bool nz = false;
  for (const auto& h : members) rep.scale = std::max(rep.scale, detail::series_max_abs(pi.image(h), nz));

  std::vector<ProjectorReport> parts(probes.size());
  parallel_for(probes.size(), [&](std::size_t i) {
    auto& r = parts[i];
    bool bad = false;
    const auto& img = pi.image(probes[i]);
    r.idempotency = detail::series_max_abs(pi.apply(img) - img, bad);
    auto u = unit(probes[i]);
    r.commutator = detail::series_max_abs(pi.apply(apply(Q, u)) - apply(Q, img), bad);
    for (const auto& other : probes) {
      auto v = unit(other);
      auto d = pairing.pair(img, v) - pairing.pair(u, pi.image(other));
      r.symmetry = std::max(r.symmetry, detail::series_max_abs(d, bad));
    }
    // express Pi g through the level images via their level components
    const std::size_t m0 = members.size();
    SeriesMatrix<F> X(m0, m0, N), b(m0, 1, N);
    auto component = [&](const Series<FiberPoly<F>>& s, std::size_t row) {
      Series<F> c(N);
      for (const auto& [e, p] : s.terms()) {
        auto hv = basis.expand(p);
        auto it = hv.find(members[row]);
        if (it != hv.end()) c.add(e, it->second);
      }
      return c;
    };
    for (std::size_t a = 0; a < m0; ++a) {
      b(a, 0) = component(img, a);
      for (std::size_t c = 0; c < m0; ++c) {
        X(a, c) = component(pi.image(members[c]), a);
        if (a == c) X(a, c).add(HalfInt(0), F(-1));
      }
    }
    auto coef = solve_unipotent(X, b);
    Series<FiberPoly<F>> res = img;
    for (std::size_t c = 0; c < m0; ++c)
      res -= cauchy(coef(c, 0), pi.image(members[c]), [](const F& s, const FiberPoly<F>& p) { return p * s; });
    r.span = detail::series_max_abs(res, bad);
    r.exact_zero = !bad;
  });
  for (const auto& r : parts) {
    rep.idempotency = std::max(rep.idempotency, r.idempotency);
    rep.commutator = std::max(rep.commutator, r.commutator);
    rep.symmetry = std::max(rep.symmetry, r.symmetry);
    rep.span = std::max(rep.span, r.span);
    rep.exact_zero = rep.exact_zero && r.exact_zero;
  }
  // leading images are the level's own basis elements, so they are independent
  std::size_t rank = 0;
  for (const auto& h : members) {
    const auto& img = pi.image(h);
    const auto* lead = img.find(HalfInt(0));
    if (lead && *lead == basis.element(h)) ++rank;
  }
  rep.rank = rank;
  return rep;
}

}  // namespace qmf
