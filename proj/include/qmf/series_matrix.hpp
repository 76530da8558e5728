#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "qmf/matrix.hpp"
#include "qmf/series.hpp"

namespace qmf {

// Dense matrix with formal-series entries.
template <CoefficientField F>
class SeriesMatrix {
 public:
  SeriesMatrix() = default;
  SeriesMatrix(std::size_t rows, std::size_t cols, HalfInt trunc) : rows_(rows), cols_(cols), e_(rows * cols, Series<F>(trunc)) {}

  static SeriesMatrix identity(std::size_t m, HalfInt trunc) {
    SeriesMatrix a(m, m, trunc);
    for (std::size_t i = 0; i < m; ++i) a(i, i).add(HalfInt(0), F(1));
    return a;
  }

  // Constant matrix c placed at exponent e.
  static SeriesMatrix monomial(HalfInt e, const Mat<F>& c, HalfInt trunc) {
    SeriesMatrix a(c.rank(), c.rank(), trunc);
    for (std::size_t i = 0; i < c.rank(); ++i)
      for (std::size_t j = 0; j < c.rank(); ++j) a(i, j).add(e, c(i, j));
    return a;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Series<F>& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
  const Series<F>& operator()(std::size_t i, std::size_t j) const { return e_[i * cols_ + j]; }

  HalfInt trunc() const {
    HalfInt t = HalfInt::infinite();
    for (const auto& s : e_) t = min(t, s.trunc());
    return t;
  }

  HalfInt valuation() const {
    HalfInt v = HalfInt::infinite();
    for (const auto& s : e_)
      if (!s.is_zero()) v = min(v, s.valuation());
    return v;
  }

  void set_trunc(HalfInt t) {
    for (auto& s : e_) s.set_trunc(min(s.trunc(), t));
  }

  bool is_zero() const {
    for (const auto& s : e_)
      if (!s.is_zero()) return false;
    return true;
  }

  // Square coefficient matrix at exponent e.
  Mat<F> coefficient(HalfInt e) const {
    if (rows_ != cols_) throw Error("coefficient matrix of a non-square series matrix");
    Mat<F> m(rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m(i, j) = (*this)(i, j).at(e, F(0));
    return m;
  }

  std::vector<HalfInt> exponents() const {
    std::vector<HalfInt> out;
    for (const auto& s : e_)
      for (const auto& [e, c] : s.terms()) out.push_back(e);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  SeriesMatrix adjoint() const {
    SeriesMatrix a(cols_, rows_, HalfInt::infinite());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) a(j, i) = conj((*this)(i, j));
    return a;
  }

  bool is_hermitian() const { return rows_ == cols_ && *this == adjoint(); }

  SeriesMatrix& operator+=(const SeriesMatrix& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] += o.e_[k];
    return *this;
  }
  SeriesMatrix& operator-=(const SeriesMatrix& o) {
    for (std::size_t k = 0; k < e_.size(); ++k) e_[k] -= o.e_[k];
    return *this;
  }
  SeriesMatrix& scale(const F& s) {
    for (auto& x : e_) x.scale(s);
    return *this;
  }
  friend SeriesMatrix operator+(SeriesMatrix a, const SeriesMatrix& b) { return a += b; }
  friend SeriesMatrix operator-(SeriesMatrix a, const SeriesMatrix& b) { return a -= b; }

  friend SeriesMatrix operator*(const SeriesMatrix& a, const SeriesMatrix& b) {
    if (a.cols_ != b.rows_) throw Error("series matrix shape mismatch");
    SeriesMatrix c(a.rows_, b.cols_, HalfInt::infinite());
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t j = 0; j < b.cols_; ++j) {
        Series<F> s(HalfInt::infinite());
        for (std::size_t k = 0; k < a.cols_; ++k) s += a(i, k) * b(k, j);
        c(i, j) = s;
      }
    return c;
  }

  bool operator==(const SeriesMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_) return false;
    for (std::size_t k = 0; k < e_.size(); ++k)
      if (compare_series(e_[k], o.e_[k]) != 0) return false;
    return true;
  }

  // Largest coefficient magnitude over all entries.
  double max_abs() const {
    double m = 0;
    for (const auto& s : e_)
      for (const auto& [e, c] : s.terms()) m = std::max(m, std::abs(field_traits<F>::to_double(c)));
    return m;
  }

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<Series<F>> e_;
};

// Solves (1 + X) c = b for a square X of positive valuation.
template <CoefficientField F>
SeriesMatrix<F> solve_unipotent(const SeriesMatrix<F>& X, const SeriesMatrix<F>& b) {
  HalfInt v = X.valuation();
  if (!X.is_zero() && v <= HalfInt(0)) throw Error("solve_unipotent: perturbation must have positive valuation");
  SeriesMatrix<F> c = b;
  if (X.is_zero()) return c;
  HalfInt t = min(b.trunc(), X.trunc() + b.valuation());
  if (t.is_infinite()) throw Error("solve_unipotent: needs a finite truncation order");
  int steps = (t - b.valuation()).doubled() / v.doubled() + 1;
  for (int s = 0; s < steps; ++s) {
    c = b - X * c;
    c.set_trunc(t);
  }
  return c;
}

}  // namespace qmf
