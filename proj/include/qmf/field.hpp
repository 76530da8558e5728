#pragma once

#include <gmpxx.h>

#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qmf {

using Rational = mpq_class;

// Errors raised by the library carry a short machine-friendly category.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

class CheckFailure : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline std::atomic<double>& float_tolerance_storage() {
  static std::atomic<double> tol{1e-13};
  return tol;
}
}  // namespace detail

// Absolute threshold below which double coefficients are treated as zero.
inline void set_float_tolerance(double tol) { detail::float_tolerance_storage().store(tol); }
inline double float_tolerance() { return detail::float_tolerance_storage().load(); }

template <class F>
struct field_traits;

template <>
struct field_traits<Rational> {
  static constexpr bool is_exact = true;
  static constexpr const char* name = "exact";

  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
  static Rational conj(const Rational& v) { return v; }
  static Rational abs(const Rational& v) { return ::abs(v); }
  static double to_double(const Rational& v) { return v.get_d(); }
  static Rational from_int(long v) { return Rational(v); }
  static Rational from_ratio(long p, long q) {
    Rational r(p, q);
    r.canonicalize();
    return r;
  }

  static Rational from_string(std::string_view text) {
    std::string s = trim(text);
    if (s.empty()) throw InputError("empty number");
    if (s.front() == '+') s.erase(0, 1);
    if (s.find_first_of(".eE") != std::string::npos) return parse_decimal(s);
    Rational r;
    if (r.set_str(s, 10) != 0) throw InputError("invalid rational '" + std::string(text) + "'");
    if (sgn(r.get_den()) == 0) throw InputError("zero denominator in '" + std::string(text) + "'");
    r.canonicalize();
    return r;
  }

  static std::string to_string(const Rational& v) { return v.get_str(); }

  // Relative comparison used when grouping eigenvalues; exact here.
  static bool same(const Rational& a, const Rational& b) { return a == b; }

 private:
  static std::string trim(std::string_view t) {
    auto b = t.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = t.find_last_not_of(" \t\r\n");
    return std::string(t.substr(b, e - b + 1));
  }

  // Decimal literals are exact rationals: 1.25e-2 -> 1/80.
  static Rational parse_decimal(const std::string& s) {
    std::string mant = s;
    long exp10 = 0;
    if (auto e = s.find_first_of("eE"); e != std::string::npos) {
      mant = s.substr(0, e);
      try {
        std::size_t used = 0;
        exp10 = std::stol(s.substr(e + 1), &used);
        if (used != s.size() - e - 1) throw InputError("bad exponent");
      } catch (const std::exception&) {
        throw InputError("invalid number '" + s + "'");
      }
    }
    bool neg = !mant.empty() && mant.front() == '-';
    if (neg) mant.erase(0, 1);
    std::string digits;
    long frac = 0;
    bool dot = false;
    for (char ch : mant) {
      if (ch == '.') {
        if (dot) throw InputError("invalid number '" + s + "'");
        dot = true;
      } else if (ch >= '0' && ch <= '9') {
        digits.push_back(ch);
        if (dot) ++frac;
      } else {
        throw InputError("invalid number '" + s + "'");
      }
    }
    if (digits.empty()) throw InputError("invalid number '" + s + "'");
    mpz_class num(digits, 10);
    mpz_class ten_pow;
    long shift = exp10 - frac;
    mpz_ui_pow_ui(ten_pow.get_mpz_t(), 10, static_cast<unsigned long>(shift < 0 ? -shift : shift));
    Rational r = shift >= 0 ? Rational(num * ten_pow) : Rational(num, ten_pow);
    r.canonicalize();
    return neg ? Rational(-r) : r;
  }
};

template <>
struct field_traits<double> {
  static constexpr bool is_exact = false;
  static constexpr const char* name = "float";

  static bool is_zero(double v) { return std::abs(v) <= float_tolerance(); }
  static double conj(double v) { return v; }
  static double abs(double v) { return std::abs(v); }
  static double to_double(double v) { return v; }
  static double from_int(long v) { return static_cast<double>(v); }
  static double from_ratio(long p, long q) { return static_cast<double>(p) / static_cast<double>(q); }

  static double from_string(std::string_view text) {
    // Accept "p/q" as well as decimals.
    return field_traits<Rational>::from_string(text).get_d();
  }

  static std::string to_string(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  static bool same(double a, double b) {
    double scale = std::max({1.0, std::abs(a), std::abs(b)});
    return std::abs(a - b) <= 1e-9 * scale;
  }
};

template <class F>
concept CoefficientField = requires(F a, F b) {
  { a + b } -> std::convertible_to<F>;
  { a - b } -> std::convertible_to<F>;
  { a * b } -> std::convertible_to<F>;
  { a / b } -> std::convertible_to<F>;
  { field_traits<F>::is_zero(a) } -> std::convertible_to<bool>;
  { field_traits<F>::to_double(a) } -> std::convertible_to<double>;
};

template <CoefficientField F>
inline bool is_zero(const F& v) {
  return field_traits<F>::is_zero(v);
}

template <CoefficientField F>
inline F from_int(long v) {
  return field_traits<F>::from_int(v);
}

template <CoefficientField F>
inline F from_ratio(long p, long q) {
  return field_traits<F>::from_ratio(p, q);
}

template <CoefficientField F>
inline F convert_rational(const Rational& r) {
  if constexpr (std::same_as<F, Rational>) {
    return r;
  } else {
    return r.get_d();
  }
}

// binom(-1/2, k) = (-1)^k (2k)! / (4^k (k!)^2)
template <CoefficientField F>
F binom_minus_half(int k) {
  Rational r(1);
  for (int i = 0; i < k; ++i) {
    r *= Rational(-(2 * i + 1), 2 * (i + 1));
  }
  r.canonicalize();
  return convert_rational<F>(r);
}

inline long factorial_l(int n) {
  long r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace qmf
