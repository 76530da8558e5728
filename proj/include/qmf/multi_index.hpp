#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <vector>

#include "qmf/field.hpp"

namespace qmf {

inline constexpr std::size_t kMaxDim = 6;

// Exponent vector in N^n.  Ordered graded-lexicographically: total degree
// first, then lexicographically with larger leading exponents first.
class MultiIndex {
 public:
  MultiIndex() = default;
  explicit MultiIndex(std::size_t n) : n_(static_cast<std::uint8_t>(check_dim(n))) {}
  MultiIndex(std::initializer_list<int> e) : MultiIndex(e.size()) {
    std::size_t i = 0;
    for (int v : e) set(i++, v);
  }
  explicit MultiIndex(const std::vector<int>& e) : MultiIndex(e.size()) {
    for (std::size_t i = 0; i < e.size(); ++i) set(i, e[i]);
  }

  static MultiIndex unit(std::size_t n, std::size_t i, int power = 1) {
    MultiIndex m(n);
    m.set(i, power);
    return m;
  }

  std::size_t size() const { return n_; }
  int operator[](std::size_t i) const { return e_[i]; }
  int total() const { return total_; }

  void set(std::size_t i, int v) {
    if (v < 0 || v > 255) throw Error("multi-index exponent out of range");
    total_ += v - e_[i];
    e_[i] = static_cast<std::uint8_t>(v);
  }

  MultiIndex operator+(const MultiIndex& o) const {
    MultiIndex r(*this);
    for (std::size_t i = 0; i < n_; ++i) r.set(i, e_[i] + o.e_[i]);
    return r;
  }

  // Componentwise difference; caller guarantees o <= *this.
  MultiIndex operator-(const MultiIndex& o) const {
    MultiIndex r(*this);
    for (std::size_t i = 0; i < n_; ++i) r.set(i, e_[i] - o.e_[i]);
    return r;
  }

  bool dominates(const MultiIndex& o) const {
    for (std::size_t i = 0; i < n_; ++i)
      if (e_[i] < o.e_[i]) return false;
    return true;
  }

  bool is_even() const {
    return std::all_of(e_.begin(), e_.begin() + n_, [](std::uint8_t v) { return v % 2 == 0; });
  }

  std::vector<int> to_vector() const { return std::vector<int>(e_.begin(), e_.begin() + n_); }

  std::strong_ordering operator<=>(const MultiIndex& o) const {
    if (auto c = n_ <=> o.n_; c != 0) return c;
    if (auto c = total_ <=> o.total_; c != 0) return c;
    for (std::size_t i = 0; i < n_; ++i)
      if (auto c = o.e_[i] <=> e_[i]; c != 0) return c;
    return std::strong_ordering::equal;
  }
  bool operator==(const MultiIndex& o) const { return (*this <=> o) == 0; }

  std::string to_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < n_; ++i) {
      if (i) s += ",";
      s += std::to_string(e_[i]);
    }
    return s + ")";
  }

  // All multi-indices of total degree exactly d, in ascending order.
  static std::vector<MultiIndex> of_degree(std::size_t n, int d) {
    std::vector<MultiIndex> out;
    MultiIndex cur(n);
    fill(cur, 0, d, out);
    std::sort(out.begin(), out.end());
    return out;
  }

  static std::vector<MultiIndex> up_to_degree(std::size_t n, int d) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= d; ++k) {
      auto part = of_degree(n, k);
      out.insert(out.end(), part.begin(), part.end());
    }
    return out;
  }

 private:
  static std::size_t check_dim(std::size_t n) {
    if (n == 0 || n > kMaxDim) throw InputError("dimension must be between 1 and " + std::to_string(kMaxDim));
    return n;
  }

  static void fill(MultiIndex& cur, std::size_t i, int left, std::vector<MultiIndex>& out) {
    if (i + 1 == cur.n_) {
      cur.set(i, left);
      out.push_back(cur);
      cur.set(i, 0);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur.set(i, v);
      fill(cur, i + 1, left - v, out);
    }
    cur.set(i, 0);
  }

  std::array<std::uint8_t, kMaxDim> e_{};
  std::uint8_t n_ = 0;
  int total_ = 0;
};

inline std::ostream& operator<<(std::ostream& os, const MultiIndex& m) { return os << m.to_string(); }

// alpha! as a product of factorials
inline long multi_factorial(const MultiIndex& a) {
  long r = 1;
  for (std::size_t i = 0; i < a.size(); ++i) r *= factorial_l(a[i]);
  return r;
}

}  // namespace qmf
