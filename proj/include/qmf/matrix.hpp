#pragma once

#include <string>
#include <vector>

#include "qmf/field.hpp"

namespace qmf {

// Small dense r x r matrix (row-major); used for fiber endomorphisms.
template <CoefficientField F>
class Mat {
 public:
  Mat() = default;
  explicit Mat(std::size_t r) : r_(r), a_(r * r, F(0)) {}

  static Mat identity(std::size_t r) {
    Mat m(r);
    for (std::size_t i = 0; i < r; ++i) m(i, i) = F(1);
    return m;
  }
  static Mat scalar(std::size_t r, const F& v) {
    Mat m(r);
    for (std::size_t i = 0; i < r; ++i) m(i, i) = v;
    return m;
  }

  std::size_t rank() const { return r_; }
  F& operator()(std::size_t i, std::size_t j) { return a_[i * r_ + j]; }
  const F& operator()(std::size_t i, std::size_t j) const { return a_[i * r_ + j]; }

  bool is_zero() const {
    for (const auto& v : a_)
      if (!qmf::is_zero(v)) return false;
    return true;
  }

  bool is_diagonal() const {
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < r_; ++j)
        if (i != j && !qmf::is_zero((*this)(i, j))) return false;
    return true;
  }

  bool is_symmetric() const { return (*this - transpose()).is_zero(); }
  bool is_skew() const { return (*this + transpose()).is_zero(); }

  Mat transpose() const {
    Mat t(r_);
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < r_; ++j) t(j, i) = field_traits<F>::conj((*this)(i, j));
    return t;
  }

  Mat& operator+=(const Mat& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  Mat& operator*=(const F& s) {
    for (auto& v : a_) v *= s;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(Mat a, const F& s) { return a *= s; }
  friend Mat operator*(const F& s, Mat a) { return a *= s; }
  Mat operator-() const { return *this * F(-1); }

  friend Mat operator*(const Mat& a, const Mat& b) {
    Mat c(a.r_);
    for (std::size_t i = 0; i < a.r_; ++i)
      for (std::size_t k = 0; k < a.r_; ++k) {
        if (qmf::is_zero(a(i, k))) continue;
        for (std::size_t j = 0; j < a.r_; ++j) c(i, j) += a(i, k) * b(k, j);
      }
    return c;
  }

  std::vector<F> apply(const std::vector<F>& v) const {
    std::vector<F> out(r_, F(0));
    for (std::size_t i = 0; i < r_; ++i)
      for (std::size_t j = 0; j < r_; ++j)
        if (!qmf::is_zero((*this)(i, j))) out[i] += (*this)(i, j) * v[j];
    return out;
  }

  void prune() {
    for (auto& v : a_)
      if (qmf::is_zero(v)) v = F(0);
  }

  bool operator==(const Mat& o) const { return r_ == o.r_ && (*this - o).is_zero(); }

 private:
  std::size_t r_ = 0;
  std::vector<F> a_;
};

}  // namespace qmf
