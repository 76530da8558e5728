#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "qmf/operator_calculus.hpp"
#include "qmf/rescaling.hpp"

namespace qmf {

// Rational part of int y^alpha exp(-sum lambda y^2) dy in units of the
// Gaussian mass prod sqrt(pi/lambda): prod (alpha-1)!!/(2 lambda)^{alpha/2}.
template <CoefficientField F>
F gaussian_moment(const MultiIndex& alpha, const std::vector<F>& lambda) {
  F r(1);
  for (std::size_t v = 0; v < alpha.size(); ++v) {
    if (alpha[v] % 2) return F(0);
    for (int m = 1; m < alpha[v]; m += 2) r *= from_int<F>(m) / (F(2) * lambda[v]);
  }
  return r;
}

// Split a polynomial jet P(x) into the rescaled series sum_d hbar^{d/2} P_d(y).
template <CoefficientField F, class C>
Series<GPoly<F, C>> rescale_jet(const GPoly<F, C>& p, HalfInt trunc) {
  Series<GPoly<F, C>> s(trunc);
  for (int d = 0; HalfInt::from_doubled(d) <= trunc && d <= p.degree(); ++d) s.add(HalfInt::from_doubled(d), p.homogeneous(d));
  return s;
}

// exp(-2 sum_{d>=3} hbar^{(d-2)/2} phi_d(y)) G(hbar^{1/2} y) = sum_m hbar^m omega_m(y)
template <CoefficientField F>
Series<Poly<F>> weight_expansion(const Poly<F>& phi, const Poly<F>& G, HalfInt M) {
  if (M.is_infinite()) throw Error("weight_expansion: a finite order is required");
  const std::size_t n = phi.dim();
  Series<Poly<F>> X(M);
  for (int d = 3; HalfInt::from_doubled(d - 2) <= M; ++d) X.add(HalfInt::from_doubled(d - 2), phi.homogeneous(d) * F(-2));
  auto mul = [](const Poly<F>& a, const Poly<F>& b) { return a * b; };
  Series<Poly<F>> expX = Series<Poly<F>>::monomial(HalfInt(0), constant_poly<F>(n, F(1)), M);
  Series<Poly<F>> power = expX;
  for (int k = 1;; ++k) {
    power = cauchy(power, X, mul, M);
    if (power.is_zero()) break;
    expX += Series<Poly<F>>(power).scale(F(1) / from_int<F>(factorial_l(k)));
  }
  return cauchy(expX, rescale_jet(G, M), mul, M);
}

// The sesquilinear form on the rescaled algebra, in Gaussian-mass units:
//   (u, v) = sum hbar^{j+l+r+m} int gamma_r[u_j, v_l] omega_m exp(-<y, Lambda y>) dy.
template <CoefficientField F>
class Pairing {
 public:
  Pairing() = default;
  Pairing(std::vector<F> lambda, Series<Poly<F>> omega, std::optional<Series<EndoPoly<F>>> gamma = std::nullopt)
      : lambda_(std::move(lambda)), omega_(std::move(omega)), gamma_(std::move(gamma)) {}

  Pairing(const Pairing& o) : lambda_(o.lambda_), omega_(o.omega_), gamma_(o.gamma_) {}
  Pairing& operator=(const Pairing& o) {
    lambda_ = o.lambda_;
    omega_ = o.omega_;
    gamma_ = o.gamma_;
    std::unique_lock lock(mutex_);
    cache_.clear();
    return *this;
  }

  // Build from conjugated data: omega from phi and sqrt(g), gamma from the
  // optional fiber-metric override.
  static Pairing from_problem(const ProblemData<F>& d, const ConjugatedOperator<F>& c, HalfInt M) {
    std::optional<Series<EndoPoly<F>>> gamma;
    if (d.fiber_metric) gamma = rescale_jet(*d.fiber_metric, M);
    return Pairing(d.lambda, weight_expansion(c.phi, c.G, M), gamma);
  }

  const Series<Poly<F>>& omega() const { return omega_; }
  const std::vector<F>& lambda() const { return lambda_; }

  F moment(const MultiIndex& a) const {
    {
      std::shared_lock lock(mutex_);
      auto it = cache_.find(a);
      if (it != cache_.end()) return it->second;
    }
    F v = gaussian_moment<F>(a, lambda_);
    std::unique_lock lock(mutex_);
    cache_.emplace(a, v);
    return v;
  }

  // Moment functional of the product p*q without forming it.
  F integrate(const Poly<F>& p, const Poly<F>& q) const {
    F s(0);
    for (const auto& [a, ca] : p.terms())
      for (const auto& [b, cb] : q.terms()) {
        MultiIndex c = a + b;
        if (!c.is_even()) continue;
        s += ca * cb * moment(c);
      }
    return s;
  }

  // Pointwise fiber contraction gamma_r[u, v] (real fields: no conjugation needed).
  Poly<F> contract(const FiberPoly<F>& u, const FiberPoly<F>& v, const EndoPoly<F>* g) const {
    Poly<F> out(u.dim());
    for (const auto& [a, cu] : u.terms())
      for (const auto& [b, cv] : v.terms()) {
        if (g == nullptr) {
          F s(0);
          for (std::size_t k = 0; k < cu.rank(); ++k) s += field_traits<F>::conj(cu[k]) * cv[k];
          out.add_term(a + b, s);
        } else {
          for (const auto& [c, m] : g->terms()) {
            F s(0);
            for (std::size_t i = 0; i < cu.rank(); ++i)
              for (std::size_t j = 0; j < cv.rank(); ++j) s += field_traits<F>::conj(cu[i]) * m(i, j) * cv[j];
            out.add_term(a + b + c, s);
          }
        }
      }
    return out;
  }

  Series<F> pair(const Series<FiberPoly<F>>& u, const Series<FiberPoly<F>>& v) const {
    if (!u.empty() && !v.empty() && u.terms().begin()->second.rank() != v.terms().begin()->second.rank())
      throw Error("pairing: rank mismatch");
    Series<Poly<F>> inner;
    if (!gamma_) {
      inner = cauchy(u, v, [this](const FiberPoly<F>& a, const FiberPoly<F>& b) { return contract(a, b, nullptr); });
    } else {
      inner = triple(u, v);
    }
    HalfInt t = product_trunc(inner, omega_);
    Series<F> out(t);
    for (const auto& [e1, p] : inner.terms())
      for (const auto& [e2, w] : omega_.terms()) {
        if (e1 + e2 > t) break;
        out.add(e1 + e2, integrate(p, w));
      }
    return out;
  }

  Series<F> pair(const S0Series<F>& u, const S0Series<F>& v) const { return pair(u.series, v.series); }

 private:
  Series<Poly<F>> triple(const Series<FiberPoly<F>>& u, const Series<FiberPoly<F>>& v) const {
    const HalfInt vu = u.valuation(), vv = v.valuation(), vg = gamma_->valuation();
    HalfInt t = min(min(u.trunc() + vv + vg, v.trunc() + vu + vg), gamma_->trunc() + vu + vv);
    Series<Poly<F>> out(t);
    for (const auto& [eu, pu] : u.terms())
      for (const auto& [ev, pv] : v.terms())
        for (const auto& [eg, g] : gamma_->terms()) {
          if (eu + ev + eg > t) continue;
          out.add(eu + ev + eg, contract(pu, pv, &g));
        }
    return out;
  }

  std::vector<F> lambda_;
  Series<Poly<F>> omega_;
  std::optional<Series<EndoPoly<F>>> gamma_;
  mutable std::shared_mutex mutex_;
  mutable std::map<MultiIndex, F> cache_;
};

}  // namespace qmf
