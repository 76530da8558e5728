#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "qmf/gaussian_pairing.hpp"
#include "qmf/harmonic_oscillator.hpp"
#include "qmf/operator_calculus.hpp"
#include "qmf/series_matrix.hpp"

namespace qmf {

// ((f_k, f_l))
template <CoefficientField F>
SeriesMatrix<F> gram_matrix(const std::vector<Series<FiberPoly<F>>>& f, const Pairing<F>& pairing) {
  const std::size_t m = f.size();
  SeriesMatrix<F> A(m, m, HalfInt::infinite());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) {
      A(i, j) = pairing.pair(f[i], f[j]);
      if (j != i) A(j, i) = conj(A(i, j));
    }
  return A;
}

// ((f_k, Q f_l))
template <CoefficientField F>
SeriesMatrix<F> effective_matrix(const std::vector<Series<FiberPoly<F>>>& f, const QFamily<F>& Q, const Pairing<F>& pairing) {
  const std::size_t m = f.size();
  std::vector<Series<FiberPoly<F>>> qf;
  for (const auto& x : f) qf.push_back(apply(Q, x));
  SeriesMatrix<F> C(m, m, HalfInt::infinite());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) C(i, j) = pairing.pair(f[i], qf[j]);
  return C;
}

namespace detail {

template <CoefficientField F>
SeriesMatrix<F> diag_matrix(const std::vector<F>& d, HalfInt trunc) {
  SeriesMatrix<F> D(d.size(), d.size(), trunc);
  for (std::size_t i = 0; i < d.size(); ++i) D(i, i).add(HalfInt(0), d[i]);
  return D;
}

template <CoefficientField F>
SeriesMatrix<F> scale_rows(SeriesMatrix<F> A, const std::vector<F>& s) {
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) A(i, j).scale(s[i]);
  return A;
}

template <CoefficientField F>
std::vector<F> inverted(const std::vector<F>& d) {
  std::vector<F> out;
  for (const auto& x : d) out.push_back(F(1) / x);
  return out;
}

template <CoefficientField F>
bool mat_is_zero(const Mat<F>& m, double tol) {
  for (std::size_t i = 0; i < m.rank(); ++i)
    for (std::size_t j = 0; j < m.rank(); ++j) {
      if constexpr (std::same_as<F, Rational>) {
        if (m(i, j) != 0) return false;
      } else {
        if (std::abs(m(i, j)) > tol) return false;
      }
    }
  return true;
}

}  // namespace detail

// Twisted inverse square root: for A = D + X with D = diag(d) constant and X of
// positive valuation, returns the hermitian B with B D^{-1} A D^{-1} B = D, i.e.
// B = D^{1/2} (D^{-1/2} A D^{-1/2})^{-1/2} D^{1/2}, which stays rational.
template <CoefficientField F>
SeriesMatrix<F> twisted_inverse_sqrt(const SeriesMatrix<F>& A, const std::vector<F>& d) {
  const std::size_t m = A.rows();
  const HalfInt T = A.trunc();
  if (T.is_infinite()) throw Error("inverse square root needs a finite truncation order");
  SeriesMatrix<F> D = detail::diag_matrix(d, T);
  SeriesMatrix<F> X = A - D;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      if (!field_traits<F>::is_zero(X(i, j).at(HalfInt(0), F(0))))
        throw Error("Gram matrix leading term is not the expected diagonal");
  const auto dinv = detail::inverted(d);
  SeriesMatrix<F> B = D;
  if (X.is_zero()) return B;
  const HalfInt v = X.valuation();
  SeriesMatrix<F> term = X;  // X (D^{-1} X)^{k-1}
  for (int k = 1; HalfInt::from_doubled(k * v.doubled()) <= T; ++k) {
    if (k > 1) {
      term = term * detail::scale_rows(X, dinv);
      term.set_trunc(T);
    }
    if (term.is_zero()) break;
    B += SeriesMatrix<F>(term).scale(binom_minus_half<F>(k));
  }
  B.set_trunc(T);
  return B;
}

// A^{-1/2} for hermitian A with identity leading term.
template <CoefficientField F>
SeriesMatrix<F> matrix_inverse_sqrt(const SeriesMatrix<F>& A) {
  return twisted_inverse_sqrt(A, std::vector<F>(A.rows(), F(1)));
}

// One eigen-branch of a hermitian pencil (M, diag(d)): M v = E diag(d) v with
// v^H diag(d) v = kappa, a constant.
template <CoefficientField F>
struct EigenBranch {
  Series<F> value;
  SeriesMatrix<F> vector;  // m x 1
  F kappa;
  HalfInt depth{0};  // absolute order of the last splitting that fixed this branch
};

template <CoefficientField F>
struct EigenResult {
  std::vector<EigenBranch<F>> branches;
  HalfInt depth{0};  // maximum branch depth
};

struct DiagonalizationOptions {
  // Splittings are only resolved at orders <= split_limit (relative to the input).
  HalfInt split_limit = HalfInt::infinite();
  // Float mode: relative threshold below which a coefficient counts as scalar
  // and two eigenvalues as equal.
  double float_split_tol = 1e-9;
};

namespace detail {

// Exact helpers on square rational matrices.
template <CoefficientField F>
std::vector<std::vector<F>> nullspace(const Mat<F>& A) {
  const std::size_t n = A.rank();
  std::vector<std::vector<F>> R(n, std::vector<F>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) R[i][j] = A(i, j);
  std::vector<int> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n && row < n; ++col) {
    std::size_t p = row;
    while (p < n && R[p][col] == 0) ++p;
    if (p == n) continue;
    std::swap(R[p], R[row]);
    F inv = F(1) / R[row][col];
    for (auto& x : R[row]) x *= inv;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == row || R[r][col] == 0) continue;
      F f = R[r][col];
      for (std::size_t c = 0; c < n; ++c) R[r][c] -= f * R[row][c];
    }
    pivot_col.push_back(static_cast<int>(col));
    ++row;
  }
  std::vector<std::vector<F>> basis;
  for (std::size_t free = 0; free < n; ++free) {
    if (std::find(pivot_col.begin(), pivot_col.end(), static_cast<int>(free)) != pivot_col.end()) continue;
    std::vector<F> v(n, F(0));
    v[free] = F(1);
    for (std::size_t r = 0; r < pivot_col.size(); ++r) v[pivot_col[r]] = -R[r][free];
    basis.push_back(std::move(v));
  }
  return basis;
}

// Continued-fraction convergents of x with denominators up to max_den.
inline std::vector<Rational> convergents(double x, long max_den = 100000000L) {
  std::vector<Rational> out;
  mpz_class h0 = 1, h1 = 0, k0 = 0, k1 = 1;
  double r = x;
  for (int it = 0; it < 40; ++it) {
    double a = std::floor(r);
    mpz_class ai(a);
    mpz_class h = ai * h0 + h1, k = ai * k0 + k1;
    if (k > max_den) break;
    out.push_back(Rational(h, k));
    out.back().canonicalize();
    h1 = h0;
    h0 = h;
    k1 = k0;
    k0 = k;
    double frac = r - a;
    if (std::abs(frac) < 1e-15) break;
    r = 1 / frac;
  }
  return out;
}

template <CoefficientField F>
struct Cluster {
  F mu;
  std::vector<std::vector<F>> vectors;  // diag(d)-orthogonal
  std::vector<F> norms;                 // v^H diag(d) v
};

template <CoefficientField F>
std::vector<Cluster<F>> pencil_eigen(const Mat<F>& C, const std::vector<F>& d, HalfInt order, double tol) {
  const std::size_t m = C.rank();
  Eigen::MatrixXd S(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      S(i, j) = field_traits<F>::to_double(C(i, j)) /
                std::sqrt(field_traits<F>::to_double(d[i]) * field_traits<F>::to_double(d[j]));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd ev = es.eigenvalues();
  std::vector<Cluster<F>> out;
  if constexpr (std::same_as<F, Rational>) {
    (void)tol;
    std::vector<Rational> found;
    std::size_t total = 0;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      for (const auto& cand : convergents(ev(k))) {
        if (std::find(found.begin(), found.end(), cand) != found.end()) break;
        Mat<F> shifted = C;
        for (std::size_t i = 0; i < m; ++i) shifted(i, i) -= cand * d[i];
        auto ns = nullspace(shifted);
        if (ns.empty()) continue;
        found.push_back(cand);
        Cluster<F> cl{cand, {}, {}};
        // Gram-Schmidt in the diag(d) inner product
        for (auto v : ns) {
          for (std::size_t u = 0; u < cl.vectors.size(); ++u) {
            F ip(0);
            for (std::size_t i = 0; i < m; ++i) ip += cl.vectors[u][i] * d[i] * v[i];
            F f = ip / cl.norms[u];
            for (std::size_t i = 0; i < m; ++i) v[i] -= f * cl.vectors[u][i];
          }
          F nv(0);
          for (std::size_t i = 0; i < m; ++i) nv += v[i] * d[i] * v[i];
          cl.vectors.push_back(std::move(v));
          cl.norms.push_back(nv);
        }
        total += cl.vectors.size();
        out.push_back(std::move(cl));
        break;
      }
    }
    if (total != m)
      throw Error("eigenvalues of the splitting matrix at order " + order.to_string() +
                  " are not rational; use float mode");
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.mu < b.mu; });
  } else {
    double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    const Eigen::MatrixXd V = es.eigenvectors();
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
      double gap = out.empty() ? 1e300 : ev(k) - out.back().mu;
      if (gap > tol * scale && gap < 1e3 * tol * scale)
        throw Error("float eigenvalue clustering is ambiguous at order " + order.to_string());
      if (gap > tol * scale) out.push_back(Cluster<F>{ev(k), {}, {}});
      std::vector<F> v(m);
      for (std::size_t i = 0; i < m; ++i) v[i] = V(i, k) / std::sqrt(field_traits<F>::to_double(d[i]));
      out.back().vectors.push_back(v);
      out.back().norms.push_back(1.0);
    }
    // represent each cluster by its mean eigenvalue
    std::size_t k = 0;
    for (auto& cl : out) {
      double sum = 0;
      for (std::size_t u = 0; u < cl.vectors.size(); ++u) sum += ev(k++);
      cl.mu = sum / static_cast<double>(cl.vectors.size());
    }
  }
  return out;
}

template <CoefficientField F>
SeriesMatrix<F> constant_matrix(const std::vector<std::vector<F>>& cols, std::size_t rows, HalfInt trunc) {
  SeriesMatrix<F> U(rows, cols.size(), trunc);
  for (std::size_t c = 0; c < cols.size(); ++c)
    for (std::size_t r = 0; r < rows; ++r) U(r, c).add(HalfInt(0), cols[c][r]);
  return U;
}

// Riesz projector of K = diag(mu) + sum_{j>0} hbar^j K_j onto the eigenvalue
// cluster `target`, applied to the unit vectors of that cluster.
template <CoefficientField F>
SeriesMatrix<F> cluster_projector(const std::vector<Mat<F>>& K, const std::vector<F>& mu,
                                  const std::vector<std::size_t>& target, HalfInt T) {
  const std::size_t m = mu.size();
  const int Td = T.doubled();
  const F center = mu[target.front()];
  using Vecs = std::map<int, std::vector<F>>;  // power of (z - center) -> vector
  auto r0 = [&](const Vecs& x, int keep_max) {
    Vecs out;
    for (const auto& [p, v] : x)
      for (std::size_t i = 0; i < m; ++i) {
        if (field_traits<F>::is_zero(v[i])) continue;
        if (std::find(target.begin(), target.end(), i) != target.end()) {
          if (p - 1 > keep_max) continue;
          auto& o = out.try_emplace(p - 1, m, F(0)).first->second;
          o[i] -= v[i];
          continue;
        }
        F inv = F(1) / (mu[i] - center), f = v[i] * inv;
        for (int k = 0; p + k <= keep_max; ++k, f *= inv) {
          auto& o = out.try_emplace(p + k, m, F(0)).first->second;
          o[i] += f;
        }
      }
    return out;
  };
  SeriesMatrix<F> P(m, target.size(), T);
  for (std::size_t c = 0; c < target.size(); ++c) {
    std::vector<Vecs> X(Td + 1);
    Vecs seed;
    seed[0] = std::vector<F>(m, F(0));
    seed[0][target[c]] = F(1);
    X[0] = r0(seed, Td - 1);
    for (int j = 1; j <= Td; ++j) {
      Vecs acc;
      for (int i = 1; i <= j; ++i) {
        if (static_cast<std::size_t>(i) >= K.size() || detail::mat_is_zero(K[i], 0.0)) continue;
        for (const auto& [p, v] : X[j - i]) {
          auto w = K[i].apply(v);
          auto& o = acc.try_emplace(p, m, F(0)).first->second;
          for (std::size_t r = 0; r < m; ++r) o[r] -= w[r];
        }
      }
      X[j] = r0(acc, Td - j - 1);
    }
    for (int j = 0; j <= Td; ++j) {
      auto it = X[j].find(-1);
      if (it == X[j].end()) continue;
      for (std::size_t r = 0; r < m; ++r) P(r, c).add(HalfInt::from_doubled(j), F(-it->second[r]));
    }
  }
  return P;
}

template <CoefficientField F>
void split_pencil(const SeriesMatrix<F>& M, const std::vector<F>& d, HalfInt offset, const DiagonalizationOptions& opt,
                  std::vector<EigenBranch<F>>& out, const SeriesMatrix<F>& embed) {
  const std::size_t m = M.rows();
  const HalfInt T = M.trunc();
  const HalfInt limit = min(T, opt.split_limit - offset);
  double scale = std::max(1.0, M.max_abs());
  Series<F> s(T);
  std::optional<HalfInt> tstar;
  HalfInt lo = min(HalfInt(0), M.valuation());
  for (HalfInt e = lo; e <= limit; e += HalfInt::half()) {
    Mat<F> c = M.coefficient(e);
    F sigma = c(0, 0) / d[0];
    Mat<F> r = c;
    for (std::size_t i = 0; i < m; ++i) r(i, i) -= sigma * d[i];
    if (!detail::mat_is_zero(r, opt.float_split_tol * scale)) {
      tstar = e;
      break;
    }
    s.add(e, sigma);
  }
  if (!tstar) {
    // unresolved (or fully scalar) through the limit: any diag(d)-orthogonal basis
    s.set_trunc(limit);
    for (std::size_t c = 0; c < m; ++c) {
      SeriesMatrix<F> v(m, 1, T);
      v(c, 0).add(HalfInt(0), F(1));
      SeriesMatrix<F> x = embed * v;
      x.set_trunc(T);
      out.push_back({s, x, d[c], offset});
    }
    return;
  }
  const HalfInt t = *tstar;
  // M' = (M - s D) / hbar^t
  SeriesMatrix<F> Mp = M;
  for (std::size_t i = 0; i < m; ++i) {
    Series<F> sd = s;
    Mp(i, i) -= sd.scale(d[i]);
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) Mp(i, j) = Mp(i, j).shifted(-t);
  const HalfInt Tp = T - t;

  auto clusters = pencil_eigen(Mp.coefficient(HalfInt(0)), d, offset + t, opt.float_split_tol);
  std::vector<std::vector<F>> cols;
  std::vector<F> delta, mu;
  std::vector<std::vector<std::size_t>> members;
  for (const auto& cl : clusters) {
    members.emplace_back();
    for (std::size_t k = 0; k < cl.vectors.size(); ++k) {
      members.back().push_back(cols.size());
      cols.push_back(cl.vectors[k]);
      delta.push_back(cl.norms[k]);
      mu.push_back(cl.mu);
    }
  }
  SeriesMatrix<F> U = constant_matrix(cols, m, Tp);
  SeriesMatrix<F> Mpp = U.adjoint() * Mp * U;
  Mpp.set_trunc(Tp);
  // K = Delta^{-1} M'' has leading diag(mu)
  SeriesMatrix<F> Kser = scale_rows(Mpp, inverted(delta));
  std::vector<Mat<F>> K;
  for (int j = 0; j <= Tp.doubled(); ++j) K.push_back(Kser.coefficient(HalfInt::from_doubled(j)));
  if constexpr (std::same_as<F, double>) {
    // exact leading term in the float path
    K[0] = Mat<F>(m);
    for (std::size_t i = 0; i < m; ++i) K[0](i, i) = mu[i];
  }

  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const auto& idx = members[ci];
    SeriesMatrix<F> W = cluster_projector(K, mu, idx, Tp);
    std::vector<F> dI;
    for (auto c : idx) dI.push_back(delta[c]);
    // Gram of the projected columns in the Delta inner product
    SeriesMatrix<F> Wd = scale_rows(W, delta);
    SeriesMatrix<F> G = W.adjoint() * Wd;
    G.set_trunc(Tp);
    SeriesMatrix<F> Bt = twisted_inverse_sqrt(G, dI);
    SeriesMatrix<F> Wn = W * scale_rows(Bt, inverted(dI));
    Wn.set_trunc(Tp);
    SeriesMatrix<F> Mi = Wn.adjoint() * Mpp * Wn;
    Mi.set_trunc(Tp);
    SeriesMatrix<F> sub_embed = embed * U * Wn;
    std::vector<EigenBranch<F>> sub;
    split_pencil(Mi, dI, offset + t, opt, sub, sub_embed);
    for (auto& b : sub) {
      Series<F> E = s;
      E.set_trunc(T);
      E += b.value.shifted(t);
      b.value = E;
      out.push_back(std::move(b));
    }
  }
}

}  // namespace detail

// Eigen-branches of the hermitian pencil (M, diag(d)), where M has leading term
// E0 diag(d).  Eigenvectors satisfy v^H diag(d) v = kappa (constant).
template <CoefficientField F>
EigenResult<F> formal_eigendecomposition(const SeriesMatrix<F>& M, const std::vector<F>& d,
                                         const DiagonalizationOptions& opt = {}) {
  if (M.rows() != M.cols() || M.rows() != d.size()) throw Error("formal_eigendecomposition: shape mismatch");
  if (M.trunc().is_infinite()) throw Error("formal_eigendecomposition: needs a finite truncation order");
  EigenResult<F> res;
  const std::size_t m = M.rows();
  SeriesMatrix<F> embed = SeriesMatrix<F>::identity(m, HalfInt::infinite());
  detail::split_pencil(M, d, HalfInt(0), opt, res.branches, embed);
  for (auto& b : res.branches) {
    // phase: largest-magnitude leading entry (in normalised coordinates) positive
    std::size_t best = 0;
    double bm = -1;
    for (std::size_t i = 0; i < m; ++i) {
      double x = field_traits<F>::to_double(b.vector(i, 0).at(HalfInt(0), F(0)));
      double w = x * x * field_traits<F>::to_double(d[i]);
      if (w > bm * (1 + 1e-12) + 1e-300) {
        bm = w;
        best = i;
      }
    }
    if (field_traits<F>::to_double(b.vector(best, 0).at(HalfInt(0), F(0))) < 0) b.vector.scale(F(-1));
    res.depth = max(res.depth, b.depth);
  }
  std::stable_sort(res.branches.begin(), res.branches.end(),
                   [](const auto& a, const auto& b) { return compare_series(a.value, b.value) < 0; });
  return res;
}

template <CoefficientField F>
EigenResult<F> formal_eigendecomposition(const SeriesMatrix<F>& M, const DiagonalizationOptions& opt = {}) {
  return formal_eigendecomposition(M, std::vector<F>(M.rows(), F(1)), opt);
}

struct ParityReport {
  bool applicable = false;
  bool pass = true;
  std::string detail;
};

// Uniform-parity levels must have no half-integer eigenvalue coefficients.
template <CoefficientField F>
ParityReport parity_filter(const EigenResult<F>& r, const DegenerateLevel<F>& level, double tol = 0) {
  ParityReport rep;
  rep.applicable = level.parity != Parity::mixed;
  if (!rep.applicable) return rep;
  for (std::size_t b = 0; b < r.branches.size(); ++b)
    for (const auto& [e, c] : r.branches[b].value.terms()) {
      if (e.is_integer()) continue;
      double v = std::abs(field_traits<F>::to_double(c));
      bool bad = std::same_as<F, Rational> ? !field_traits<F>::is_zero(c) : v > tol;
      if (bad) {
        rep.pass = false;
        rep.detail = "branch " + std::to_string(b + 1) + " has a nonzero coefficient at hbar^" + e.to_string();
        return rep;
      }
    }
  return rep;
}

}  // namespace qmf
