#pragma once

#include <algorithm>
#include <array>
#include <climits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "qmf/diffop.hpp"
#include "qmf/series.hpp"

namespace qmf {

enum class LaplaceMode { connection, raw };

// Taylor data at the well p (coordinates centred at p):
//   H = hbar^2 L + hbar W + V,  L = -rho (d_i + Gamma_i) a^{ij} (d_j + Gamma_j) + c
// (connection mode) or L = -g^{ij} d_i d_j + b_j d_j + c (raw mode).
template <CoefficientField F>
struct ProblemData {
  std::size_t n = 1;
  std::size_t r = 1;
  std::vector<F> lambda;
  Poly<F> V;
  // deviation of g^{ij} from the identity, indexed [i][j], symmetric
  std::vector<std::vector<Poly<F>>> metric_dev;
  EndoPoly<F> W;
  std::vector<EndoPoly<F>> Gamma;
  EndoPoly<F> c;
  LaplaceMode mode = LaplaceMode::connection;
  std::vector<EndoPoly<F>> b;
  std::optional<EndoPoly<F>> fiber_metric;
  // degree through which all jets are known; INT_MAX for exact polynomials
  int jet_degree = INT_MAX;

  ProblemData() = default;
  ProblemData(std::size_t dim, std::size_t rank) { resize(dim, rank); }

  void resize(std::size_t dim, std::size_t rank) {
    n = dim;
    r = rank;
    lambda.assign(n, F(1));
    V = Poly<F>(n);
    metric_dev.assign(n, std::vector<Poly<F>>(n, Poly<F>(n)));
    W = EndoPoly<F>(n, r);
    Gamma.assign(n, EndoPoly<F>(n, r));
    c = EndoPoly<F>(n, r);
    b.assign(n, EndoPoly<F>(n, r));
  }

  Poly<F> g_inv(std::size_t i, std::size_t j) const {
    Poly<F> p = metric_dev[i][j];
    if (i == j) p.add_term(MultiIndex(n), F(1));
    return p;
  }

  Mat<F> W_at_p() const { return W.coeff(MultiIndex(n)); }

  bool is_flat() const {
    for (const auto& row : metric_dev)
      for (const auto& p : row)
        if (!p.is_zero()) return false;
    return true;
  }

  bool has_connection() const {
    return std::any_of(Gamma.begin(), Gamma.end(), [](const auto& g) { return !g.is_zero(); });
  }
};

template <CoefficientField F>
ProblemData<double> to_float(const ProblemData<F>& d) {
  if constexpr (std::is_same_v<F, double>) {
    return d;
  } else {
    auto cv = [](const auto& p) {
      using P = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<P, Poly<Rational>>) {
        return from_rational<double>(p);
      } else {
        EndoPoly<double> out(p.dim(), p.rank());
        for (const auto& [a, m] : p.terms()) {
          Mat<double> md(m.rank());
          for (std::size_t i = 0; i < m.rank(); ++i)
            for (std::size_t j = 0; j < m.rank(); ++j) md(i, j) = m(i, j).get_d();
          out.add_term(a, md);
        }
        return out;
      }
    };
    ProblemData<double> o(d.n, d.r);
    for (std::size_t i = 0; i < d.n; ++i) o.lambda[i] = d.lambda[i].get_d();
    o.V = cv(d.V);
    for (std::size_t i = 0; i < d.n; ++i)
      for (std::size_t j = 0; j < d.n; ++j) o.metric_dev[i][j] = cv(d.metric_dev[i][j]);
    o.W = cv(d.W);
    for (std::size_t i = 0; i < d.n; ++i) {
      o.Gamma[i] = cv(d.Gamma[i]);
      o.b[i] = cv(d.b[i]);
    }
    o.c = cv(d.c);
    o.mode = d.mode;
    if (d.fiber_metric) o.fiber_metric = cv(*d.fiber_metric);
    o.jet_degree = d.jet_degree;
    return o;
  }
}

namespace detail {
template <CoefficientField F>
bool all_symmetric(const EndoPoly<F>& p) {
  for (const auto& [a, m] : p.terms())
    if (!m.is_symmetric()) return false;
  return true;
}
template <CoefficientField F>
bool all_skew(const EndoPoly<F>& p) {
  for (const auto& [a, m] : p.terms())
    if (!m.is_skew()) return false;
  return true;
}
}  // namespace detail

// Structural checks on the well data; throws InputError with the first problem.
template <CoefficientField F>
void validate(const ProblemData<F>& d) {
  const std::size_t n = d.n;
  if (d.lambda.size() != n) throw InputError("lambda must have n entries");
  for (const auto& l : d.lambda)
    if (!(field_traits<F>::to_double(l) > 0) || is_zero(l))
      throw InputError("well is degenerate: lambda entries must be positive");
  if (d.V.min_degree() < 2) throw InputError("potential must vanish to second order at the well (no degree 0 or 1 terms)");
  Poly<F> quad(n);
  for (std::size_t i = 0; i < n; ++i) quad.add_term(MultiIndex::unit(n, i, 2), d.lambda[i] * d.lambda[i]);
  if (!(d.V.homogeneous(2) - quad).is_zero())
    throw InputError("coordinates not normalized: quadratic part of V must be sum lambda_i^2 x_i^2");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (!(d.metric_dev[i][j] - d.metric_dev[j][i]).is_zero()) throw InputError("inverse metric must be symmetric");
      if (d.metric_dev[i][j].min_degree() < 2)
        throw InputError("coordinates not normalized: inverse metric must be identity + O(x^2)");
    }
  if (!detail::all_symmetric(d.W)) throw InputError("endomorphism W must be symmetric");
  if (!detail::all_symmetric(d.c)) throw InputError("zeroth-order term must be symmetric");
  for (const auto& g : d.Gamma)
    if (!detail::all_skew(g)) throw InputError("connection must be metric (skew-symmetric coefficients)");
  if (d.mode == LaplaceMode::raw && d.has_connection())
    throw InputError("raw Laplace mode does not take a connection; use [laplace_first]");
  if (d.mode == LaplaceMode::connection)
    for (const auto& bb : d.b)
      if (!bb.is_zero()) throw InputError("[laplace_first] is only allowed in raw Laplace mode");
  if (d.fiber_metric) {
    if (!(d.fiber_metric->coeff(MultiIndex(n)) == Mat<F>::identity(d.r)))
      throw InputError("fiber metric must be the identity at the well");
    if (!detail::all_symmetric(*d.fiber_metric)) throw InputError("fiber metric must be symmetric");
  }
}

template <CoefficientField F>
Poly<F> truncate(const Poly<F>& p, int D) {
  return D == INT_MAX ? p : p.truncated(D);
}

// Solve g^{ij} phi_i phi_j = V with phi = (1/2) sum lambda x^2 + O(x^3), through degree D.
template <CoefficientField F>
Poly<F> solve_eikonal(const ProblemData<F>& d, int D) {
  validate(d);
  if (D == INT_MAX) throw Error("solve_eikonal: a finite degree is required");
  const std::size_t n = d.n;
  Poly<F> phi(n);
  for (std::size_t i = 0; i < n; ++i) phi.add_term(MultiIndex::unit(n, i, 2), d.lambda[i] / F(2));
  std::vector<std::vector<Poly<F>>> g(n, std::vector<Poly<F>>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) g[i][j] = d.g_inv(i, j).truncated(D);
  for (int deg = 3; deg <= D; ++deg) {
    // degree-deg part of g^{ij} phi_i phi_j with phi known through deg-1
    Poly<F> lhs(n);
    std::vector<Poly<F>> grad(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = phi.derivative(i);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        Poly<F> t = multiply(g[i][j], grad[i], deg);
        lhs += multiply(t, grad[j], deg).homogeneous(deg);
      }
    Poly<F> rhs = d.V.homogeneous(deg) - lhs;
    // 2 sum lambda_i x_i d_i phi_deg = rhs
    for (const auto& [a, coef] : rhs.terms()) {
      F w(0);
      for (std::size_t i = 0; i < n; ++i) w += d.lambda[i] * from_int<F>(a[i]);
      phi.add_term(a, coef / (F(2) * w));
    }
  }
  return phi;
}

// det of an n x n matrix of polynomials, truncated at degree D
template <CoefficientField F>
Poly<F> poly_det(const std::vector<std::vector<Poly<F>>>& m, int D) {
  const std::size_t n = m.size();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Poly<F> det(m[0][0].dim());
  do {
    int inversions = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (perm[i] > perm[j]) ++inversions;
    Poly<F> term = constant_poly<F>(m[0][0].dim(), F(inversions % 2 ? -1 : 1));
    for (std::size_t i = 0; i < n && !term.is_zero(); ++i) term = multiply(term, m[i][perm[i]], D);
    det += term;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return det;
}

// (1 + X)^e for X = O(x^2), via the binomial series truncated at degree D.
template <CoefficientField F>
Poly<F> binomial_power(const Poly<F>& one_plus_x, const Rational& e, int D) {
  const std::size_t n = one_plus_x.dim();
  Poly<F> x = one_plus_x - constant_poly<F>(n, F(1));
  if (x.min_degree() < 1 && !x.is_zero()) throw Error("binomial_power: argument must be 1 + O(x)");
  Poly<F> result = constant_poly<F>(n, F(1));
  Poly<F> power = constant_poly<F>(n, F(1));
  Rational coef(1);
  for (int k = 1; !x.is_zero(); ++k) {
    power = multiply(power, x, D);
    if (power.is_zero()) break;
    coef *= (e - (k - 1)) / Rational(k);
    result += power * convert_rational<F>(coef);
  }
  return result;
}

// Riemannian volume density sqrt(g) = det(g^{ij})^{-1/2} through degree D.
template <CoefficientField F>
Poly<F> volume_density(const ProblemData<F>& d, int D) {
  if (d.is_flat()) return constant_poly<F>(d.n, F(1));
  std::vector<std::vector<Poly<F>>> g(d.n, std::vector<Poly<F>>(d.n));
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = 0; j < d.n; ++j) g[i][j] = d.g_inv(i, j).truncated(D);
  return binomial_power(poly_det(g, D), Rational(-1, 2), D);
}

// Known coefficient degree of an operator per derivative order 0, 1, 2.
struct KnownDegrees {
  std::array<int, 3> by_order{INT_MAX, INT_MAX, INT_MAX};
  int at(int order) const { return by_order[std::min(order, 2)]; }
};

template <CoefficientField F>
struct OperatorJet {
  DiffOp<F> op;
  KnownDegrees known;
};

template <CoefficientField F>
DiffOp<F> truncate_orders(const DiffOp<F>& op, const KnownDegrees& k) {
  DiffOp<F> out(op.dim(), op.rank());
  for (const auto& [key, m] : op.terms())
    if (key.first.total() <= k.at(key.second.total())) out.add_term(key.first, key.second, m);
  return out;
}

inline KnownDegrees known_from(int D, int o0, int o1, int o2) {
  auto sub = [D](int s) { return D == INT_MAX ? INT_MAX : D - s; };
  return KnownDegrees{{sub(o0), sub(o1), sub(o2)}};
}

// The Laplace-type operator L as a jet of a differential operator.
template <CoefficientField F>
OperatorJet<F> laplace_operator(const ProblemData<F>& d, int D) {
  const std::size_t n = d.n, r = d.r;
  DiffOp<F> L(n, r);
  if (d.mode == LaplaceMode::raw) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        MultiIndex beta = MultiIndex::unit(n, i) + MultiIndex::unit(n, j);
        const Poly<F> gij = d.g_inv(i, j).truncated(D);
        for (const auto& [a, c] : gij.terms()) L.add_term(a, beta, Mat<F>::scalar(r, -c));
      }
    for (std::size_t j = 0; j < n; ++j) {
      const EndoPoly<F> bj = d.b[j].truncated(D);
      for (const auto& [a, m] : bj.terms()) L.add_term(a, MultiIndex::unit(n, j), m);
    }
    L += DiffOp<F>::multiplication(d.c.truncated(D));
    return {L, known_from(D, 0, 0, 0)};
  }
  Poly<F> G = volume_density(d, D);
  Poly<F> rho = d.is_flat() ? constant_poly<F>(n, F(1)) : binomial_power(G, Rational(-1), D);
  std::vector<DiffOp<F>> cov(n);
  for (std::size_t i = 0; i < n; ++i)
    cov[i] = DiffOp<F>::derivative(n, r, i) + DiffOp<F>::multiplication(d.Gamma[i].truncated(D));
  DiffOp<F> inner(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      Poly<F> a = multiply(G, d.g_inv(i, j), D);
      if (a.is_zero()) continue;
      inner += compose(compose(cov[i], DiffOp<F>::scalar_multiplication(a, r)), cov[j]);
    }
  L = compose(DiffOp<F>::scalar_multiplication(rho, r), inner) * F(-1);
  L += DiffOp<F>::multiplication(d.c.truncated(D));
  KnownDegrees k = known_from(D, 1, 1, 0);
  return {truncate_orders(L, k), k};
}

// Delta phi = rho d_i (a^{ij} d_j phi); equals +tr(Lambda) at the well.
template <CoefficientField F>
Poly<F> laplacian_of(const ProblemData<F>& d, const Poly<F>& phi, int D) {
  const std::size_t n = d.n;
  Poly<F> G = volume_density(d, D);
  Poly<F> rho = d.is_flat() ? constant_poly<F>(n, F(1)) : binomial_power(G, Rational(-1), D);
  Poly<F> div(n);
  for (std::size_t i = 0; i < n; ++i) {
    Poly<F> flux(n);
    for (std::size_t j = 0; j < n; ++j) flux += multiply(multiply(G, d.g_inv(i, j), D), phi.derivative(j), D);
    div += flux.derivative(i);
  }
  return multiply(rho, div, D == INT_MAX ? D : D - 2);
}

// hbar-part of e^{phi/hbar} H e^{-phi/hbar} from the conjugation identity:
//   A = 2 g^{ij} phi_j (d_i + Gamma_i) + W + Delta phi.
template <CoefficientField F>
OperatorJet<F> conjugation_lemma(const ProblemData<F>& d, const Poly<F>& phi, int D) {
  const std::size_t n = d.n, r = d.r;
  DiffOp<F> A(n, r);
  for (std::size_t i = 0; i < n; ++i) {
    Poly<F> coef(n);
    for (std::size_t j = 0; j < n; ++j) coef += multiply(d.g_inv(i, j), phi.derivative(j), D);
    coef *= F(2);
    DiffOp<F> cov = DiffOp<F>::derivative(n, r, i) + DiffOp<F>::multiplication(d.Gamma[i].truncated(D));
    A += compose(DiffOp<F>::scalar_multiplication(coef, r), cov);
  }
  A += DiffOp<F>::multiplication(d.W.truncated(D));
  A += DiffOp<F>::scalar_multiplication(laplacian_of(d, phi, D), r);
  KnownDegrees k = known_from(D, 2, 1, 1);
  return {truncate_orders(A, k), k};
}

template <CoefficientField F>
struct FullConjugation {
  OperatorJet<F> hbar_part;  // L^1 + W
  EndoPoly<F> eikonal_defect;  // L^2 + V; must vanish
  int defect_known_degree = INT_MAX;
};

// Substitute d_i -> d_i - t phi_i (t = 1/hbar) in L and collect powers of t:
//   e^{phi/hbar} (hbar^2 L + hbar W + V) e^{-phi/hbar} = hbar^2 L^0 + hbar (L^1 + W) + (L^2 + V).
template <CoefficientField F>
FullConjugation<F> full_conjugation(const ProblemData<F>& d, const OperatorJet<F>& L, const Poly<F>& phi,
                                    int D) {
  const std::size_t n = d.n, r = d.r;
  std::vector<DiffOp<F>> shifted(n);
  for (std::size_t i = 0; i < n; ++i)
    shifted[i] = DiffOp<F>::scalar_multiplication(phi.derivative(i).truncated(D == INT_MAX ? D : D - 1), r) * F(-1);
  // by_t[k] collects coefficient of t^k
  std::vector<DiffOp<F>> by_t(3, DiffOp<F>(n, r));
  for (const auto& [key, m] : L.op.terms()) {
    const auto& [alpha, beta] = key;
    std::vector<DiffOp<F>> acc{DiffOp<F>::identity(n, r)};
    for (std::size_t i = 0; i < n; ++i)
      for (int p = 0; p < beta[i]; ++p) {
        std::vector<DiffOp<F>> next(acc.size() + 1, DiffOp<F>(n, r));
        for (std::size_t k = 0; k < acc.size(); ++k) {
          next[k] += compose(acc[k], DiffOp<F>::derivative(n, r, i));
          next[k + 1] += compose(acc[k], shifted[i]);
        }
        acc.swap(next);
      }
    DiffOp<F> coef(n, r);
    coef.add_term(alpha, MultiIndex(n), m);
    for (std::size_t k = 0; k < acc.size() && k < 3; ++k) by_t[k] += compose(coef, acc[k]);
  }
  FullConjugation<F> out;
  DiffOp<F> h1 = by_t[1] + DiffOp<F>::multiplication(d.W.truncated(D));
  KnownDegrees k = known_from(D, 2, 1, 1);
  out.hbar_part = {truncate_orders(h1, k), k};
  int dk = D == INT_MAX ? D : D - 2;
  DiffOp<F> zeroth = by_t[2] + DiffOp<F>::scalar_multiplication(d.V.truncated(D), r);
  EndoPoly<F> defect(n, r);
  for (const auto& [key, m] : zeroth.terms()) {
    if (key.second.total() != 0) throw Error("full conjugation produced a differential t^2 term");
    if (key.first.total() <= dk) defect.add_term(key.first, m);
  }
  out.eikonal_defect = defect;
  out.defect_known_degree = dk;
  return out;
}

// Everything needed downstream: phi, G, L, A and the graded pieces Q_j.
template <CoefficientField F>
struct ConjugatedOperator {
  std::size_t n = 1, r = 1;
  std::vector<F> lambda;
  Mat<F> W0;
  Poly<F> phi;
  Poly<F> G;
  OperatorJet<F> L;
  OperatorJet<F> A;
  int jet_degree = INT_MAX;

  // Largest order N the jets support.
  int max_order() const { return jet_degree == INT_MAX ? INT_MAX : (jet_degree - 2) / 2; }
};

inline int required_jet_degree(HalfInt N) { return N.doubled() + 2; }

template <CoefficientField F>
ConjugatedOperator<F> conjugate(const ProblemData<F>& d, HalfInt N, HalfInt K_max) {
  validate(d);
  int need = required_jet_degree(N);
  if (d.jet_degree != INT_MAX && d.jet_degree < need)
    throw InputError("insufficient truncation: order " + N.to_string() + " needs jet_degree >= " +
                     std::to_string(need) + " (got " + std::to_string(d.jet_degree) + ")");
  int D = d.jet_degree != INT_MAX ? d.jet_degree : (N + K_max).doubled() + 4;
  ConjugatedOperator<F> out;
  out.n = d.n;
  out.r = d.r;
  out.lambda = d.lambda;
  out.W0 = d.W_at_p();
  out.jet_degree = D;
  out.phi = solve_eikonal(d, D);
  out.G = volume_density(d, D);
  out.L = laplace_operator(d, D);
  if (d.mode == LaplaceMode::connection) {
    out.A = conjugation_lemma(d, out.phi, D);
  } else {
    auto full = full_conjugation(d, out.L, out.phi, D);
    if (!full.eikonal_defect.is_zero()) throw Error("eikonal cancellation failed in conjugation");
    out.A = full.hbar_part;
  }
  return out;
}

// Q_j = L_{2j-2} + A_{2j} read in the rescaled variable y (same coefficients),
// where the subscript is |alpha| - |beta|.
template <CoefficientField F>
DiffOp<F> q_operator(const ConjugatedOperator<F>& c, HalfInt j) {
  int m = j.doubled();
  DiffOp<F> q = c.L.op.graded(m - 2) + c.A.op.graded(m);
  auto check = [&](const OperatorJet<F>& jet, int shift) {
    for (int ord = 0; ord <= jet.op.order(); ++ord) {
      int deg = m + shift + ord;
      if (deg >= 0 && deg > jet.known.at(ord))
        throw InputError("insufficient truncation: Q_" + j.to_string() + " needs jets of degree " +
                         std::to_string(deg));
    }
  };
  check(c.L, -2);
  check(c.A, 0);
  return q;
}

}  // namespace qmf

namespace qmf {

// Q = sum_j hbar^j Q_j for 0 <= j <= N, indexed by 2j.
template <CoefficientField F>
struct QFamily {
  HalfInt N{0};
  std::vector<DiffOp<F>> pieces;

  const DiffOp<F>& at(HalfInt j) const { return pieces.at(static_cast<std::size_t>(j.doubled())); }
};

template <CoefficientField F>
QFamily<F> q_family(const ConjugatedOperator<F>& c, HalfInt N) {
  QFamily<F> f;
  f.N = N;
  for (int t = 0; t <= N.doubled(); ++t) f.pieces.push_back(q_operator(c, HalfInt::from_doubled(t)));
  return f;
}

// (Q u) for a series u of fiber polynomials; known through min(T_u, N + val(u)).
template <CoefficientField F>
Series<FiberPoly<F>> apply(const QFamily<F>& q, const Series<FiberPoly<F>>& u) {
  HalfInt t = min(u.trunc(), q.N + u.valuation());
  Series<FiberPoly<F>> out(t);
  for (const auto& [e, p] : u.terms())
    for (int j = 0; j <= q.N.doubled(); ++j) {
      HalfInt o = e + HalfInt::from_doubled(j);
      if (o > t) break;
      out.add(o, q.pieces[j].apply(p));
    }
  return out;
}

}  // namespace qmf
