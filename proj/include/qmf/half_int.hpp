#pragma once

#include <compare>
#include <cstdlib>
#include <functional>
#include <limits>
#include <ostream>
#include <string>

#include "qmf/field.hpp"

namespace qmf {

// A number in (1/2)Z, stored doubled.  Also used for truncation orders, where
// `infinite()` marks an exactly known (finite) expansion.
class HalfInt {
 public:
  constexpr HalfInt() = default;
  constexpr explicit HalfInt(int whole) : twice_(2 * whole) {}

  static constexpr HalfInt from_doubled(int twice) {
    HalfInt h;
    h.twice_ = twice;
    return h;
  }
  static constexpr HalfInt half() { return from_doubled(1); }
  static constexpr HalfInt infinite() { return from_doubled(kInfinite); }

  static HalfInt parse(const std::string& text) {
    auto slash = text.find('/');
    try {
      if (slash == std::string::npos) return HalfInt(std::stoi(text));
      int p = std::stoi(text.substr(0, slash));
      int q = std::stoi(text.substr(slash + 1));
      if (q == 1) return HalfInt(p);
      if (q == 2) return from_doubled(p);
    } catch (const std::exception&) {
    }
    throw InputError("not a half-integer: '" + text + "'");
  }

  constexpr int doubled() const { return twice_; }
  constexpr bool is_integer() const { return twice_ % 2 == 0; }
  constexpr bool is_infinite() const { return twice_ >= kInfinite; }
  double value() const { return twice_ / 2.0; }

  // Floor of the value as an integer.
  constexpr int floor() const { return twice_ >= 0 ? twice_ / 2 : -((-twice_ + 1) / 2); }

  constexpr HalfInt operator+(HalfInt o) const {
    if (is_infinite() || o.is_infinite()) return infinite();
    return from_doubled(twice_ + o.twice_);
  }
  constexpr HalfInt operator-(HalfInt o) const {
    if (is_infinite()) return infinite();
    return from_doubled(twice_ - o.twice_);
  }
  constexpr HalfInt operator-() const { return from_doubled(-twice_); }
  constexpr HalfInt& operator+=(HalfInt o) { return *this = *this + o; }
  constexpr HalfInt& operator-=(HalfInt o) { return *this = *this - o; }

  constexpr auto operator<=>(const HalfInt&) const = default;

  std::string to_string() const {
    if (is_infinite()) return "inf";
    if (is_integer()) return std::to_string(twice_ / 2);
    return std::to_string(twice_) + "/2";
  }

  template <CoefficientField F>
  F to_field() const {
    return from_ratio<F>(twice_, 2);
  }

 private:
  static constexpr int kInfinite = std::numeric_limits<int>::max() / 4;
  int twice_ = 0;
};

inline constexpr HalfInt min(HalfInt a, HalfInt b) { return a < b ? a : b; }
inline constexpr HalfInt max(HalfInt a, HalfInt b) { return a < b ? b : a; }

inline std::ostream& operator<<(std::ostream& os, HalfInt h) { return os << h.to_string(); }

}  // namespace qmf
