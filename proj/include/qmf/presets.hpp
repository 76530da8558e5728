#pragma once

#include <map>
#include <string>
#include <vector>

#include "qmf/operator_calculus.hpp"

namespace qmf {

// Named model problems, written as "name" or "name:key=value,...".
//   harmonic    n, lambda, mu           V = lambda^2 |x|^2, W = mu
//   cubic1d     c                       V = x^2 + c x^3
//   quartic1d   g                       V = x^2 + g x^4
//   witten1d    c                       phi = x^2/2 + c x^3/6, V = phi'^2, W = -phi''
//   iso2d       c, g, a                 V = |x|^2 + c x1 x2^2 + g x1^4 + a x2^4
//   bundle2     c, w                    V = x^2/4 + c x^3, W = diag(0, 1) + w x sigma_x
struct PresetInfo {
  std::string name;
  std::string summary;
  std::map<std::string, std::string> defaults;
};

inline const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> c{
      {"harmonic", "V = lambda^2 |x|^2 + hbar mu", {{"n", "1"}, {"lambda", "1"}, {"mu", "0"}}},
      {"cubic1d", "V = x^2 + c x^3", {{"c", "1"}}},
      {"quartic1d", "V = x^2 + g x^4", {{"g", "1"}}},
      {"witten1d", "Witten Laplacian for phi = x^2/2 + c x^3/6", {{"c", "1"}}},
      {"iso2d", "V = |x|^2 + c x1 x2^2 + g x1^4 + a x2^4", {{"c", "1"}, {"g", "0"}, {"a", "0"}}},
      {"bundle2", "rank 2: V = x^2/4 + c x^3, W = diag(0,1) + w x sigma_x", {{"c", "1"}, {"w", "1"}}},
  };
  return c;
}

inline ProblemData<Rational> make_preset(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  const PresetInfo* info = nullptr;
  for (const auto& p : preset_catalog())
    if (p.name == name) info = &p;
  if (!info) throw InputError("unknown preset '" + name + "'");
  std::map<std::string, std::string> args = info->defaults;
  if (colon != std::string::npos) {
    std::string rest = text.substr(colon + 1);
    std::size_t pos = 0;
    while (pos <= rest.size() && !rest.empty()) {
      std::size_t comma = rest.find(',', pos);
      std::string kv = rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw InputError("preset argument '" + kv + "' is not key=value");
      std::string key = kv.substr(0, eq);
      if (!args.count(key)) throw InputError("preset '" + name + "' has no parameter '" + key + "'");
      args[key] = kv.substr(eq + 1);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  auto num = [&](const std::string& k) { return field_traits<Rational>::from_string(args.at(k)); };
  auto x1 = [](int k) { return MultiIndex{k}; };

  if (name == "harmonic") {
    const long n = std::stol(args.at("n"));
    if (n < 1 || n > 16) throw InputError("harmonic: n must be between 1 and 16");
    ProblemData<Rational> d(static_cast<std::size_t>(n), 1);
    const Rational l = num("lambda");
    d.lambda.assign(d.n, l);
    for (std::size_t i = 0; i < d.n; ++i) d.V.add_term(MultiIndex::unit(d.n, i, 2), Rational(l * l));
    d.W.add_term(MultiIndex(d.n), Mat<Rational>::scalar(1, num("mu")));
    return d;
  }
  if (name == "cubic1d" || name == "quartic1d") {
    ProblemData<Rational> d(1, 1);
    d.V.add_term(x1(2), Rational(1));
    if (name == "cubic1d")
      d.V.add_term(x1(3), num("c"));
    else
      d.V.add_term(x1(4), num("g"));
    return d;
  }
  if (name == "witten1d") {
    const Rational c = num("c");
    ProblemData<Rational> d(1, 1);
    // phi' = x + c x^2 / 2
    d.V.add_term(x1(2), Rational(1));
    d.V.add_term(x1(3), c);
    d.V.add_term(x1(4), Rational(c * c / 4));
    d.W.add_term(x1(0), Mat<Rational>::scalar(1, Rational(-1)));
    d.W.add_term(x1(1), Mat<Rational>::scalar(1, Rational(-c)));
    return d;
  }
  if (name == "iso2d") {
    ProblemData<Rational> d(2, 1);
    d.V.add_term(MultiIndex{2, 0}, Rational(1));
    d.V.add_term(MultiIndex{0, 2}, Rational(1));
    d.V.add_term(MultiIndex{1, 2}, num("c"));
    d.V.add_term(MultiIndex{4, 0}, num("g"));
    d.V.add_term(MultiIndex{0, 4}, num("a"));
    return d;
  }
  // bundle2
  ProblemData<Rational> d(1, 2);
  d.lambda = {Rational(1, 2)};
  d.V.add_term(x1(2), Rational(1, 4));
  d.V.add_term(x1(3), num("c"));
  Mat<Rational> w0(2), sx(2);
  w0(1, 1) = Rational(1);
  sx(0, 1) = num("w");
  sx(1, 0) = num("w");
  d.W.add_term(x1(0), w0);
  d.W.add_term(x1(1), sx);
  return d;
}

}  // namespace qmf
