#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qmf/operator_calculus.hpp"
#include "qmf/projection_engine.hpp"
#include "qmf/quasimode_pipeline.hpp"

namespace qmf {

inline constexpr const char* kToolName = "qmf";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

// Syntax or semantic problem in a problem file, with 1-based position.
class SpecError : public InputError {
 public:
  SpecError(int line, int column, const std::string& msg)
      : InputError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_, column_;
};

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> c{"eigen_residual", "transport", "orthonormality", "parity", "bookkeeping",
                                          "projector"};
  return c;
}

// A parsed problem file.  The data are kept exact; float mode converts on use.
struct ProblemSpec {
  ProblemData<Rational> data;
  bool float_mode = false;
  HalfInt order{2};
  std::optional<Rational> level_energy;
  std::optional<int> level_index;
  std::vector<std::string> checks = known_checks();
  double tolerance = 1e-9;
};

namespace detail {

struct Cursor {
  int line;
  int column;  // of the start of the token
};

inline std::string trim_copy(const std::string& s, std::size_t* lead = nullptr) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  if (lead) *lead = a;
  return s.substr(a, b - a);
}

// Split on a separator, remembering each piece's column offset.
inline std::vector<std::pair<std::string, int>> split_fields(const std::string& s, char sep, int col0) {
  std::vector<std::pair<std::string, int>> out;
  std::size_t start = 0;
  for (;;) {
    std::size_t p = s.find(sep, start);
    std::string piece = s.substr(start, p == std::string::npos ? std::string::npos : p - start);
    std::size_t lead = 0;
    std::string t = trim_copy(piece, &lead);
    out.emplace_back(t, col0 + static_cast<int>(start + lead));
    if (p == std::string::npos) break;
    start = p + 1;
  }
  return out;
}

inline long parse_int(const std::string& s, Cursor c, const std::string& what) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size()) throw SpecError(c.line, c.column, "expected an integer " + what + ", got '" + s + "'");
  return v;
}

inline Rational parse_number(const std::string& s, Cursor c) {
  try {
    return field_traits<Rational>::from_string(s);
  } catch (const InputError& e) {
    throw SpecError(c.line, c.column, e.what());
  }
}

inline MultiIndex parse_multi(const std::string& s, Cursor c, std::size_t n) {
  std::istringstream is(s);
  std::vector<int> e;
  std::string tok;
  while (is >> tok) {
    long v = parse_int(tok, c, "exponent");
    if (v < 0) throw SpecError(c.line, c.column, "negative exponent in multi-index");
    e.push_back(static_cast<int>(v));
  }
  if (e.size() != n)
    throw SpecError(c.line, c.column,
                    "multi-index '" + s + "' has " + std::to_string(e.size()) + " entries, expected n = " + std::to_string(n));
  return MultiIndex(e);
}

inline std::size_t parse_slot(const std::string& s, Cursor c, std::size_t bound, const std::string& what) {
  long v = parse_int(s, c, what);
  if (v < 1 || static_cast<std::size_t>(v) > bound)
    throw SpecError(c.line, c.column, what + " " + s + " out of range 1.." + std::to_string(bound));
  return static_cast<std::size_t>(v - 1);
}

inline void add_entry(EndoPoly<Rational>& p, std::size_t k, std::size_t l, const MultiIndex& a, const Rational& v) {
  Mat<Rational> m(p.rank());
  m(k, l) = v;
  p.add_term(a, m);
}

}  // namespace detail

// Problem file format (line oriented, '#' starts a comment):
//
//   [problem]         n, rank, mode = exact|float, order, laplace = connection|raw, jet_degree
//   [lambda]          i = value
//   [potential]       a1 a2 ... = coefficient
//   [metric_inverse]  i j | alpha = coefficient      (deviation from identity; sets (i,j) and (j,i))
//   [endomorphism]    k l | alpha = coefficient      (W)
//   [connection]      i | k l | alpha = coefficient  (Gamma_i)
//   [laplace_zeroth]  k l | alpha = coefficient      (c)
//   [laplace_first]   i | k l | alpha = coefficient  (b_i, raw mode)
//   [fiber_metric]    k l | alpha = coefficient
//   [level]           energy = E0  or  index = i
//   [checks]          enabled = all | name, name, ...;  tolerance = value
//
// Indices i, j, k, l are 1-based.
inline ProblemSpec parse_problem_spec(const std::string& text) {
  using detail::Cursor;
  ProblemSpec spec;
  std::map<std::string, std::pair<std::string, Cursor>> header;
  struct Entry {
    std::string section, key, value;
    Cursor key_at, value_at;
  };
  std::vector<Entry> entries;
  static const std::set<std::string> sections{"problem",      "lambda",         "potential",     "metric_inverse",
                                              "endomorphism", "connection",     "laplace_zeroth", "laplace_first",
                                              "fiber_metric", "level",          "checks"};
  std::set<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw.substr(0, raw.find('#'));
    std::size_t lead = 0;
    std::string t = detail::trim_copy(line, &lead);
    if (t.empty()) continue;
    const int col = static_cast<int>(lead) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') throw SpecError(lineno, col, "unterminated section header");
      section = detail::trim_copy(t.substr(1, t.size() - 2));
      if (!sections.count(section)) throw SpecError(lineno, col + 1, "unknown section [" + section + "]");
      if (!seen.insert(section).second) throw SpecError(lineno, col, "duplicate section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw SpecError(lineno, col, "expected 'key = value'");
    if (section.empty()) throw SpecError(lineno, col, "entry outside of any section");
    std::size_t klead = 0, vlead = 0;
    std::string key = detail::trim_copy(line.substr(0, eq), &klead);
    std::string value = detail::trim_copy(line.substr(eq + 1), &vlead);
    Cursor kc{lineno, static_cast<int>(klead) + 1}, vc{lineno, static_cast<int>(eq + 1 + vlead) + 1};
    if (key.empty()) throw SpecError(lineno, kc.column, "empty key");
    if (value.empty()) throw SpecError(lineno, vc.column, "empty value");
    if (section == "problem" || section == "level" || section == "checks") {
      static const std::map<std::string, std::set<std::string>> allowed{
          {"problem", {"n", "rank", "mode", "order", "laplace", "jet_degree"}},
          {"level", {"energy", "index"}},
          {"checks", {"enabled", "tolerance"}}};
      if (!allowed.at(section).count(key)) throw SpecError(lineno, kc.column, "unknown key '" + key + "' in [" + section + "]");
      const std::string hk = section + "." + key;
      if (header.count(hk)) throw SpecError(lineno, kc.column, "duplicate key '" + key + "'");
      header[hk] = {value, vc};
    } else {
      entries.push_back({section, key, value, kc, vc});
    }
  }

  auto get = [&](const std::string& k) -> const std::pair<std::string, Cursor>* {
    auto it = header.find(k);
    return it == header.end() ? nullptr : &it->second;
  };
  auto need = [&](const std::string& k) {
    auto* p = get(k);
    if (!p) throw SpecError(lineno, 1, "missing required key '" + k + "'");
    return *p;
  };
  auto [nstr, nc] = need("problem.n");
  long n = detail::parse_int(nstr, nc, "dimension");
  if (n < 1 || n > 16) throw SpecError(nc.line, nc.column, "n must be between 1 and 16");
  long r = 1;
  if (auto* p = get("problem.rank")) {
    r = detail::parse_int(p->first, p->second, "rank");
    if (r < 1 || r > 16) throw SpecError(p->second.line, p->second.column, "rank must be between 1 and 16");
  }
  ProblemData<Rational> d(static_cast<std::size_t>(n), static_cast<std::size_t>(r));
  if (auto* p = get("problem.mode")) {
    if (p->first == "float")
      spec.float_mode = true;
    else if (p->first != "exact")
      throw SpecError(p->second.line, p->second.column, "mode must be 'exact' or 'float'");
  }
  if (auto* p = get("problem.order")) {
    try {
      spec.order = HalfInt::parse(p->first);
    } catch (const InputError& e) {
      throw SpecError(p->second.line, p->second.column, e.what());
    }
    if (spec.order < HalfInt(0)) throw SpecError(p->second.line, p->second.column, "order must be non-negative");
  }
  if (auto* p = get("problem.laplace")) {
    if (p->first == "raw")
      d.mode = LaplaceMode::raw;
    else if (p->first != "connection")
      throw SpecError(p->second.line, p->second.column, "laplace must be 'connection' or 'raw'");
  }
  if (auto* p = get("problem.jet_degree")) {
    long j = detail::parse_int(p->first, p->second, "jet degree");
    if (j < 2) throw SpecError(p->second.line, p->second.column, "jet_degree must be at least 2");
    d.jet_degree = static_cast<int>(j);
  }
  if (auto* p = get("level.energy")) spec.level_energy = detail::parse_number(p->first, p->second);
  if (auto* p = get("level.index")) {
    if (spec.level_energy) throw SpecError(p->second.line, p->second.column, "give either level energy or index, not both");
    long i = detail::parse_int(p->first, p->second, "level index");
    if (i < 0) throw SpecError(p->second.line, p->second.column, "level index must be non-negative");
    spec.level_index = static_cast<int>(i);
  }
  if (auto* p = get("checks.enabled")) {
    spec.checks.clear();
    if (p->first == "all") {
      spec.checks = known_checks();
    } else if (p->first != "none") {
      for (const auto& [name, col] : detail::split_fields(p->first, ',', p->second.column)) {
        if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end())
          throw SpecError(p->second.line, col, "unknown check '" + name + "'");
        spec.checks.push_back(name);
      }
    }
  }
  if (auto* p = get("checks.tolerance")) {
    std::size_t used = 0;
    double t = 0;
    try {
      t = std::stod(p->first, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != p->first.size()) throw SpecError(p->second.line, p->second.column, "invalid tolerance '" + p->first + "'");
    if (!(t > 0)) throw SpecError(p->second.line, p->second.column, "tolerance must be positive");
    spec.tolerance = t;
  }

  const std::size_t N = d.n, R = d.r;
  std::vector<bool> lambda_set(N, false);
  std::set<std::string> sections_with_lambda;
  for (const auto& e : entries) {
    auto f = detail::split_fields(e.key, '|', e.key_at.column);
    auto cur = [&](std::size_t i) { return Cursor{e.key_at.line, f[i].second}; };
    auto arity = [&](std::size_t want, const char* shape) {
      if (f.size() != want) throw SpecError(e.key_at.line, e.key_at.column, "[" + e.section + "] keys have the form '" + shape + "'");
    };
    const Rational v = detail::parse_number(e.value, e.value_at);
    auto pair_slot = [&](std::size_t i, std::size_t bound, const char* what) {
      std::istringstream is(f[i].first);
      std::string a, b, extra;
      is >> a >> b;
      if (a.empty() || b.empty() || (is >> extra)) throw SpecError(e.key_at.line, f[i].second, std::string("expected two ") + what + " indices");
      return std::make_pair(detail::parse_slot(a, cur(i), bound, what), detail::parse_slot(b, cur(i), bound, what));
    };
    if (e.section == "lambda") {
      arity(1, "i");
      auto i = detail::parse_slot(f[0].first, cur(0), N, "coordinate");
      if (lambda_set[i]) throw SpecError(e.key_at.line, e.key_at.column, "lambda " + f[0].first + " given twice");
      lambda_set[i] = true;
      d.lambda[i] = v;
    } else if (e.section == "potential") {
      arity(1, "alpha");
      d.V.add_term(detail::parse_multi(f[0].first, cur(0), N), v);
    } else if (e.section == "metric_inverse") {
      arity(2, "i j | alpha");
      auto [i, j] = pair_slot(0, N, "coordinate");
      MultiIndex a = detail::parse_multi(f[1].first, cur(1), N);
      d.metric_dev[i][j].add_term(a, v);
      if (i != j) d.metric_dev[j][i].add_term(a, v);
    } else if (e.section == "endomorphism" || e.section == "laplace_zeroth" || e.section == "fiber_metric") {
      arity(2, "k l | alpha");
      auto [k, l] = pair_slot(0, R, "fiber");
      MultiIndex a = detail::parse_multi(f[1].first, cur(1), N);
      EndoPoly<Rational>* target = &d.W;
      if (e.section == "laplace_zeroth") target = &d.c;
      if (e.section == "fiber_metric") {
        if (!d.fiber_metric) d.fiber_metric = EndoPoly<Rational>(N, R);
        target = &*d.fiber_metric;
      }
      detail::add_entry(*target, k, l, a, v);
    } else {  // connection, laplace_first
      arity(3, "i | k l | alpha");
      auto i = detail::parse_slot(f[0].first, cur(0), N, "coordinate");
      auto [k, l] = pair_slot(1, R, "fiber");
      MultiIndex a = detail::parse_multi(f[2].first, cur(2), N);
      detail::add_entry(e.section == "connection" ? d.Gamma[i] : d.b[i], k, l, a, v);
    }
  }
  for (std::size_t i = 0; i < N; ++i)
    if (!lambda_set[i]) throw SpecError(lineno, 1, "missing lambda for coordinate " + std::to_string(i + 1));
  validate(d);
  spec.data = std::move(d);
  return spec;
}

inline bool same_problem(const ProblemData<Rational>& a, const ProblemData<Rational>& b) {
  if (a.n != b.n || a.r != b.r || a.mode != b.mode || a.jet_degree != b.jet_degree) return false;
  if (a.lambda != b.lambda || !(a.V == b.V) || !(a.W == b.W) || !(a.c == b.c)) return false;
  for (std::size_t i = 0; i < a.n; ++i) {
    if (!(a.Gamma[i] == b.Gamma[i]) || !(a.b[i] == b.b[i])) return false;
    for (std::size_t j = 0; j < a.n; ++j)
      if (!(a.metric_dev[i][j] == b.metric_dev[i][j])) return false;
  }
  if (a.fiber_metric.has_value() != b.fiber_metric.has_value()) return false;
  return !a.fiber_metric || *a.fiber_metric == *b.fiber_metric;
}

inline std::string serialize_problem_spec(const ProblemSpec& s) {
  const auto& d = s.data;
  std::ostringstream os;
  auto multi = [](const MultiIndex& a) {
    std::string t;
    for (std::size_t i = 0; i < a.size(); ++i) t += (i ? " " : "") + std::to_string(a[i]);
    return t;
  };
  auto endo = [&](const std::string& prefix, const EndoPoly<Rational>& p) {
    for (const auto& [a, m] : p.terms())
      for (std::size_t k = 0; k < m.rank(); ++k)
        for (std::size_t l = 0; l < m.rank(); ++l)
          if (sgn(m(k, l)) != 0)
            os << prefix << k + 1 << " " << l + 1 << " | " << multi(a) << " = " << m(k, l).get_str() << "\n";
  };
  os << "[problem]\n"
     << "n = " << d.n << "\nrank = " << d.r << "\nmode = " << (s.float_mode ? "float" : "exact")
     << "\norder = " << s.order.to_string() << "\nlaplace = " << (d.mode == LaplaceMode::raw ? "raw" : "connection")
     << "\n";
  if (d.jet_degree != INT_MAX) os << "jet_degree = " << d.jet_degree << "\n";
  os << "\n[lambda]\n";
  for (std::size_t i = 0; i < d.n; ++i) os << i + 1 << " = " << d.lambda[i].get_str() << "\n";
  os << "\n[potential]\n";
  for (const auto& [a, c] : d.V.terms()) os << multi(a) << " = " << c.get_str() << "\n";
  if (!d.is_flat()) {
    os << "\n[metric_inverse]\n";
    for (std::size_t i = 0; i < d.n; ++i)
      for (std::size_t j = i; j < d.n; ++j)
        for (const auto& [a, c] : d.metric_dev[i][j].terms()) os << i + 1 << " " << j + 1 << " | " << multi(a) << " = " << c.get_str() << "\n";
  }
  if (!d.W.is_zero()) {
    os << "\n[endomorphism]\n";
    endo("", d.W);
  }
  if (d.has_connection()) {
    os << "\n[connection]\n";
    for (std::size_t i = 0; i < d.n; ++i) endo(std::to_string(i + 1) + " | ", d.Gamma[i]);
  }
  if (!d.c.is_zero()) {
    os << "\n[laplace_zeroth]\n";
    endo("", d.c);
  }
  if (std::any_of(d.b.begin(), d.b.end(), [](const auto& p) { return !p.is_zero(); })) {
    os << "\n[laplace_first]\n";
    for (std::size_t i = 0; i < d.n; ++i) endo(std::to_string(i + 1) + " | ", d.b[i]);
  }
  if (d.fiber_metric) {
    os << "\n[fiber_metric]\n";
    endo("", *d.fiber_metric);
  }
  if (s.level_energy || s.level_index) {
    os << "\n[level]\n";
    if (s.level_energy) os << "energy = " << s.level_energy->get_str() << "\n";
    if (s.level_index) os << "index = " << *s.level_index << "\n";
  }
  os << "\n[checks]\nenabled = ";
  if (s.checks.empty()) os << "none";
  for (std::size_t i = 0; i < s.checks.size(); ++i) os << (i ? ", " : "") << s.checks[i];
  std::ostringstream tol;
  tol.precision(17);
  tol << s.tolerance;
  os << "\ntolerance = " << tol.str() << "\n";
  return os.str();
}

inline bool operator==(const ProblemSpec& a, const ProblemSpec& b) {
  return same_problem(a.data, b.data) && a.float_mode == b.float_mode && a.order == b.order &&
         a.level_energy == b.level_energy && a.level_index == b.level_index && a.checks == b.checks &&
         a.tolerance == b.tolerance;
}

// ----------------------------------------------------------------------------
// JSON output

template <CoefficientField F>
nlohmann::json coeff_json(const F& v) {
  if constexpr (std::same_as<F, Rational>)
    return v.get_str();
  else
    return v;
}

// [[doubled exponent, coefficient], ...]
template <CoefficientField F>
nlohmann::json series_json(const Series<F>& s, HalfInt shift = HalfInt(0)) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& [e, c] : s.terms()) terms.push_back({(e + shift).doubled(), coeff_json(c)});
  nlohmann::json out{{"terms", terms}};
  out["trunc_doubled"] = s.trunc().is_infinite() ? nlohmann::json(nullptr) : nlohmann::json((s.trunc() + shift).doubled());
  return out;
}

inline nlohmann::json check_json(const CheckResult& c) {
  return {{"name", c.name}, {"order_doubled", c.order.doubled()}, {"pass", c.pass},
          {"max_residual", c.max_residual}, {"detail", c.detail}};
}

inline nlohmann::json projector_json(const ProjectorReport& r, bool pass) {
  return {{"name", "projector"},          {"order_doubled", r.order.doubled()}, {"pass", pass},
          {"idempotency", r.idempotency}, {"commutator", r.commutator},         {"symmetry", r.symmetry},
          {"span", r.span},               {"rank", r.rank},                     {"exact_zero", r.exact_zero},
          {"max_residual", r.max_defect()}};
}

template <CoefficientField F>
nlohmann::json level_json(const DegenerateLevel<F>& lv) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : lv.members) {
    std::vector<int> a;
    for (std::size_t i = 0; i < m.alpha.size(); ++i) a.push_back(m.alpha[i]);
    members.push_back({{"alpha", a}, {"k", m.k + 1}});
  }
  return {{"E0", coeff_json(lv.E0)}, {"multiplicity", lv.m0()}, {"K_doubled", lv.K.doubled()},
          {"parity", to_string(lv.parity)}, {"members", members}};
}

// The result document.  Eigenvalues are those of H itself (hbar * E(hbar));
// eigenfunction jets are the x-side coefficients a_{e, alpha} of
// exp(-phi/hbar) sum hbar^e x^alpha a_{e, alpha}, in the input fiber frame.
template <CoefficientField F>
nlohmann::json result_json(const ProblemSpec& spec, const QuasimodeResult<F>& r,
                           const std::optional<VerificationReport>& checks = std::nullopt,
                           const std::optional<nlohmann::json>& extra_checks = std::nullopt) {
  using nlohmann::json;
  json doc;
  doc["schema"] = kSchemaVersion;
  doc["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  doc["config"] = {{"mode", spec.float_mode ? "float" : "exact"},
                   {"order_doubled", r.N.doubled()},
                   {"internal_order_doubled", r.N_internal.doubled()},
                   {"problem", serialize_problem_spec(spec)}};
  doc["level"] = level_json(r.level);
  doc["normalization"] = {
      {"omitted_prefactor", "hbar^(-n/4)"},
      {"omitted_prefactor_exponent", {{"numerator", -static_cast<int>(r.problem.n)}, {"denominator", 4}}},
      {"pairing_unit", "gaussian mass prod_i sqrt(pi / lambda_i)"}};
  json modes = json::array();
  for (const auto& m : r.modes) {
    json jets = json::array();
    for (const auto& [e, p] : m.a.series.terms()) {
      FiberPoly<F> q = to_input_frame(r, p);
      for (const auto& [a, v] : q.terms()) {
        std::vector<int> al;
        for (std::size_t i = 0; i < a.size(); ++i) al.push_back(a[i]);
        json vals = json::array();
        for (std::size_t k = 0; k < v.rank(); ++k) vals.push_back(coeff_json(v[k]));
        jets.push_back({{"k_doubled", e.doubled()}, {"alpha", al}, {"values", vals}});
      }
    }
    modes.push_back({{"eigenvalue", series_json(m.energy, HalfInt(1))},
                     {"kappa", coeff_json(m.kappa)},
                     {"split_depth_doubled", m.depth.doubled()},
                     {"jets", jets},
                     {"jet_degree", m.a.degree},
                     {"jet_weight_doubled", m.a.weight.doubled()}});
  }
  doc["quasimodes"] = modes;
  if (checks || extra_checks) {
    json c = json::array();
    if (checks)
      for (const auto& x : checks->checks) c.push_back(check_json(x));
    if (extra_checks)
      for (const auto& x : *extra_checks) c.push_back(x);
    doc["checks"] = c;
  }
  return doc;
}

}  // namespace qmf
