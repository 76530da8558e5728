#pragma once

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qmf/cli_io.hpp"
#include "qmf/presets.hpp"

namespace qmf {

enum ExitCode { kExitOk = 0, kExitInput = 1, kExitCheck = 2 };

// Projector laws at the result's level through N.
template <CoefficientField F>
ProjectorReport projector_report(const QuasimodeResult<F>& r, int extra = 1) {
  Projector<F> pi(r.fam, r.basis, r.level, r.N);
  return projector_diagnostics(pi, r.fam, r.pairing, probe_set(pi, extra));
}

template <CoefficientField F>
bool projector_pass(const ProjectorReport& p, double tol) {
  if constexpr (std::same_as<F, Rational>) return p.exact_zero;
  return p.relative() <= tol;
}

namespace detail {

struct CommandState {
  std::string spec_path;
  std::string preset;
  std::string mode;
  std::string order;
  std::string level;
  int level_index = -1;
  std::string out;
  std::string checks;  // empty: use the problem file
  std::vector<double> hbars{0.2, 0.1, 0.05};
  int grid = 4096;
  std::string csv;
  int degree = 4;
};

inline std::string read_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
}

inline ProblemSpec load_spec(const CommandState& s) {
  ProblemSpec spec;
  if (!s.spec_path.empty() && !s.preset.empty()) throw InputError("give either --spec or --preset");
  if (!s.spec_path.empty())
    spec = parse_problem_spec(read_file(s.spec_path));
  else if (!s.preset.empty())
    spec.data = make_preset(s.preset);
  else
    throw InputError("a problem is required: --spec FILE or --preset NAME");
  if (!s.mode.empty()) {
    if (s.mode != "exact" && s.mode != "float") throw InputError("--mode must be exact or float");
    spec.float_mode = s.mode == "float";
  }
  if (!s.order.empty()) spec.order = HalfInt::parse(s.order);
  if (spec.order < HalfInt(0)) throw InputError("order must be non-negative");
  if (!s.level.empty()) {
    spec.level_energy = field_traits<Rational>::from_string(s.level);
    spec.level_index.reset();
  }
  if (s.level_index >= 0) {
    if (!s.level.empty()) throw InputError("give either --level or --level-index");
    spec.level_index = s.level_index;
    spec.level_energy.reset();
  }
  return spec;
}

template <CoefficientField F>
LevelSelector<F> selector(const ProblemSpec& spec) {
  LevelSelector<F> sel;
  if (spec.level_energy) {
    if constexpr (std::same_as<F, Rational>)
      sel.energy = *spec.level_energy;
    else
      sel.energy = spec.level_energy->get_d();
  } else {
    sel.index = spec.level_index.value_or(0);
  }
  return sel;
}

template <CoefficientField F>
ProblemData<F> problem_in(const ProblemSpec& spec) {
  if constexpr (std::same_as<F, Rational>)
    return spec.data;
  else
    return to_float(spec.data);
}

template <CoefficientField F>
void print_summary(std::ostream& os, const QuasimodeResult<F>& r) {
  os << "level E0 = " << field_traits<F>::to_string(r.level.E0) << "  multiplicity " << r.level.m0()
     << "  K = " << r.level.K.to_string() << "  parity " << to_string(r.level.parity) << "\n";
  for (std::size_t b = 0; b < r.modes.size(); ++b) {
    Series<F> phys(r.modes[b].energy.trunc() + HalfInt(1));
    for (const auto& [e, c] : r.modes[b].energy.terms()) phys.add(e + HalfInt(1), c);
    os << "  eigenvalue " << b + 1 << ": " << to_string(phys) << "\n";
  }
}

inline void print_checks(std::ostream& os, const nlohmann::json& checks) {
  for (const auto& c : checks)
    os << "  check " << std::left << std::setw(16) << c["name"].get<std::string>() << (c["pass"].get<bool>() ? "pass" : "FAIL")
       << "  max residual " << c["max_residual"].get<double>() << "\n";
}

template <CoefficientField F>
int run_compute(const ProblemSpec& spec, const CommandState& s, bool verify_mode, std::ostream& out) {
  auto r = compute_quasimodes(problem_in<F>(spec), selector<F>(spec), spec.order);
  print_summary(out, r);
  std::optional<VerificationReport> rep;
  std::optional<nlohmann::json> extra;
  bool pass = true;
  if (verify_mode) {
    std::vector<std::string> names = spec.checks;
    if (s.checks.empty()) {
      // keep the problem file's selection
    } else if (s.checks != "all") {
      names.clear();
      std::stringstream ss(s.checks);
      std::string t;
      while (std::getline(ss, t, ',')) {
        if (std::find(known_checks().begin(), known_checks().end(), t) == known_checks().end())
          throw InputError("unknown check '" + t + "'");
        names.push_back(t);
      }
    } else {
      names = known_checks();
    }
    CheckOptions co;
    co.float_tol = spec.tolerance;
    VerificationReport all = verify(r, co);
    rep.emplace();
    for (const auto& c : all.checks)
      if (std::find(names.begin(), names.end(), c.name) != names.end()) rep->checks.push_back(c);
    extra = nlohmann::json::array();
    if (std::find(names.begin(), names.end(), "projector") != names.end()) {
      auto p = projector_report(r);
      extra->push_back(projector_json(p, projector_pass<F>(p, spec.tolerance)));
    }
    nlohmann::json shown = nlohmann::json::array();
    for (const auto& c : rep->checks) shown.push_back(check_json(c));
    for (const auto& c : *extra) shown.push_back(c);
    print_checks(out, shown);
    for (const auto& c : shown) pass = pass && c["pass"].get<bool>();
  }
  if (!s.out.empty()) write_file(s.out, result_json(spec, r, rep, extra).dump(2) + "\n");
  return pass ? kExitOk : kExitCheck;
}

template <CoefficientField F>
int run_crosscheck(const ProblemSpec& spec, const CommandState& s, std::ostream& out) {
  auto r = compute_quasimodes(problem_in<F>(spec), selector<F>(spec), spec.order);
  if (r.level.m0() != 1) throw InputError("crosscheck needs a non-degenerate level");
  FdOptions o;
  o.hbars = s.hbars;
  o.grid = s.grid;
  if (o.grid < 16 || o.grid % 2) throw InputError("--grid must be an even number >= 16");
  auto rep = crosscheck_eigenvalue_1d(r, o);
  print_summary(out, r);
  out << "  hbar, E_numeric, E_series, |error|\n";
  std::ostringstream csv;
  csv << std::setprecision(17) << "hbar,E_fine,E_coarse,E_extrapolated,E_series,error\n";
  for (const auto& row : rep.rows) {
    out << "  " << row.hbar << ", " << std::setprecision(15) << row.extrapolated << ", " << row.series << ", "
        << std::setprecision(6) << row.error << "\n";
    csv << row.hbar << "," << row.fine << "," << row.coarse << "," << row.extrapolated << "," << row.series << ","
        << row.error << "\n";
  }
  if (rep.exponential_mode)
    out << "  " << rep.detail << "\n";
  else
    out << "  log-log slope " << rep.slope << " (required >= " << rep.required_slope << ")"
        << (rep.detail.empty() ? "" : "; " + rep.detail) << "\n";
  out << "  crosscheck " << (rep.pass ? "pass" : "FAIL") << "\n";
  if (!s.csv.empty()) write_file(s.csv, csv.str());
  if (!s.out.empty()) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : rep.rows)
      rows.push_back({{"hbar", row.hbar}, {"extent", row.extent}, {"fine", row.fine}, {"coarse", row.coarse},
                      {"extrapolated", row.extrapolated}, {"series", row.series}, {"error", row.error}});
    auto doc = result_json(spec, r);
    doc["crosscheck"] = {{"rows", rows},           {"slope", rep.slope},
                         {"required_slope", rep.required_slope}, {"exponential_mode", rep.exponential_mode},
                         {"converged", rep.converged}, {"pass", rep.pass}, {"detail", rep.detail}};
    write_file(s.out, doc.dump(2) + "\n");
  }
  return rep.pass ? kExitOk : kExitCheck;
}

template <CoefficientField F>
int run_spectrum(const ProblemSpec& spec, const CommandState& s, std::ostream& out) {
  if (s.degree < 0 || s.degree > 64) throw InputError("--degree must be between 0 and 64");
  auto d = problem_in<F>(spec);
  validate(d);
  if (!d.W_at_p().is_diagonal()) throw InputError("spectrum needs a diagonal W(p)");
  HermiteBasis<F> basis(d.lambda, fiber_shifts(d));
  auto t = build_spectrum(basis, s.degree);
  out << "E, alpha, k\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : t.entries) {
    out << field_traits<F>::to_string(e.energy) << ", " << e.index.alpha.to_string() << ", " << e.index.k + 1 << "\n";
    std::vector<int> a;
    for (std::size_t i = 0; i < e.index.alpha.size(); ++i) a.push_back(e.index.alpha[i]);
    rows.push_back({{"E", coeff_json(e.energy)}, {"alpha", a}, {"k", e.index.k + 1}});
  }
  if (!s.out.empty()) {
    nlohmann::json doc{{"schema", kSchemaVersion},
                       {"tool", {{"name", kToolName}, {"version", kToolVersion}}},
                       {"degree", s.degree},
                       {"spectrum", rows}};
    write_file(s.out, doc.dump(2) + "\n");
  }
  return kExitOk;
}

template <class Fn>
int dispatch(const ProblemSpec& spec, Fn&& fn) {
  return spec.float_mode ? fn(double{}) : fn(Rational{});
}

}  // namespace detail

// Entry point of the command-line tool.  Returns 0 on success, 1 on input
// errors and 2 when an enabled check fails.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::CommandState s;
  CLI::App app{"Formal quasimodes of semiclassical Schroedinger operators at a potential well", "qmf"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  auto problem_opts = [&](CLI::App* c) {
    c->add_option("--spec", s.spec_path, "problem file");
    c->add_option("--preset", s.preset, "preset name[:key=value,...]");
    c->add_option("--mode", s.mode, "exact or float (overrides the file)");
  };
  auto level_opts = [&](CLI::App* c) {
    c->add_option("--order", s.order, "truncation order N (half-integer)");
    c->add_option("--level", s.level, "level energy E0");
    c->add_option("--level-index", s.level_index, "level position among distinct levels, 0 = lowest");
    c->add_option("--out", s.out, "write the JSON result document");
  };
  auto* compute = app.add_subcommand("compute", "compute quasimodes at a level");
  problem_opts(compute);
  level_opts(compute);
  auto* verify_cmd = app.add_subcommand("verify", "compute and run verification checks");
  problem_opts(verify_cmd);
  level_opts(verify_cmd);
  verify_cmd->add_option("--checks", s.checks, "all or a comma-separated list");
  auto* cross = app.add_subcommand("crosscheck", "compare eigenvalues with a finite-difference solve (scalar 1-D)");
  problem_opts(cross);
  level_opts(cross);
  cross->add_option("--hbar", s.hbars, "hbar values")->delimiter(',');
  cross->add_option("--grid", s.grid, "intervals on the fine grid");
  cross->add_option("--csv", s.csv, "write (hbar, error) rows as CSV");
  auto* spectrum = app.add_subcommand("spectrum", "list harmonic levels");
  problem_opts(spectrum);
  spectrum->add_option("--degree", s.degree, "maximum |alpha|");
  spectrum->add_option("--out", s.out, "write the table as JSON");
  auto* presets = app.add_subcommand("presets", "list built-in presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  try {
    if (presets->parsed()) {
      for (const auto& p : preset_catalog()) {
        out << p.name << "  " << p.summary << "  (";
        bool first = true;
        for (const auto& [k, v] : p.defaults) {
          out << (first ? "" : ", ") << k << "=" << v;
          first = false;
        }
        out << ")\n";
      }
      return kExitOk;
    }
    ProblemSpec spec = detail::load_spec(s);
    if (spectrum->parsed())
      return detail::dispatch(spec, [&](auto f) { return detail::run_spectrum<decltype(f)>(spec, s, out); });
    if (cross->parsed())
      return detail::dispatch(spec, [&](auto f) { return detail::run_crosscheck<decltype(f)>(spec, s, out); });
    const bool v = verify_cmd->parsed();
    return detail::dispatch(spec, [&](auto f) { return detail::run_compute<decltype(f)>(spec, s, v, out); });
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
}

}  // namespace qmf
