#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "qmf/commands.hpp"
#include "test_problems.hpp"

namespace qmf::testing {
namespace {

const char* kHarmonic = R"(
[problem]
n = 1
rank = 1
order = 2
[lambda]
1 = 1
[potential]
2 = 1
)";

int run(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "qmf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  int code = run_command(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("qmf_test_" + name)).string();
}

std::string write_temp(const std::string& name, const std::string& text) {
  auto p = temp_path(name);
  std::ofstream(p) << text;
  return p;
}

SpecError spec_error(const std::string& text) {
  try {
    parse_problem_spec(text);
  } catch (const SpecError& e) {
    return e;
  }
  ADD_FAILURE() << "no SpecError for:\n" << text;
  return SpecError(0, 0, "");
}

TEST(SpecParser, MinimalHarmonic) {
  auto s = parse_problem_spec(kHarmonic);
  EXPECT_EQ(s.data.n, 1u);
  EXPECT_EQ(s.data.V, poly1({{2, q(1)}}));
  EXPECT_EQ(s.order, HalfInt(2));
  EXPECT_FALSE(s.float_mode);
  EXPECT_EQ(s.checks, known_checks());
}

TEST(SpecParser, FullDocument) {
  auto s = parse_problem_spec(R"(
# two fibers with a connection
[problem]
n = 2
rank = 2
mode = float
order = 5/2
[lambda]
1 = 1
2 = 0.5            # decimals are read exactly
[potential]
2 0 = 1
0 2 = 1/4
1 2 = 3
[metric_inverse]
1 2 | 1 1 = 1/3
[endomorphism]
2 2 | 0 0 = 1
[connection]
2 | 1 2 | 1 0 = 1
2 | 2 1 | 1 0 = -1
[level]
index = 2
[checks]
enabled = transport, parity
tolerance = 1e-8
)");
  EXPECT_TRUE(s.float_mode);
  EXPECT_EQ(s.order, h(5));
  EXPECT_EQ(s.data.lambda[1], q(1, 2));
  EXPECT_EQ(s.data.metric_dev[1][0], s.data.metric_dev[0][1]);
  EXPECT_EQ(s.data.Gamma[1].coeff(MultiIndex{1, 0})(1, 0), q(-1));
  EXPECT_EQ(*s.level_index, 2);
  EXPECT_EQ(s.checks, (std::vector<std::string>{"transport", "parity"}));
  EXPECT_DOUBLE_EQ(s.tolerance, 1e-8);
}

TEST(SpecParser, SyntaxErrorsCarryPosition) {
  auto e = spec_error("[problem]\nn = 1\n[lambda]\n1 = 1\n[potential]\n2 = 1\n3 = x\n");
  EXPECT_EQ(e.line(), 7);
  EXPECT_EQ(e.column(), 5);
  e = spec_error("[problem]\nn = 1\ncolour = red\n");
  EXPECT_EQ(e.line(), 3);
  EXPECT_EQ(e.column(), 1);
  EXPECT_NE(std::string(e.what()).find("unknown key 'colour'"), std::string::npos);
  e = spec_error("[problem]\nn = 1\n  [extras]\n");
  EXPECT_EQ(e.line(), 3);
  EXPECT_NE(std::string(e.what()).find("unknown section"), std::string::npos);
  e = spec_error("[problem]\nn = 2\n[lambda]\n1 = 1\n2 = 1\n[potential]\n2 = 1\n");
  EXPECT_EQ(e.line(), 7);
  EXPECT_NE(std::string(e.what()).find("expected n = 2"), std::string::npos);
  e = spec_error("[problem]\nn = 1\n[lambda]\n1 = 1\n[potential]\n2 = 1\n[endomorphism]\n1 2 | 0 = 1\n");
  EXPECT_EQ(e.line(), 8);
  EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
  e = spec_error("n = 1\n");
  EXPECT_EQ(e.line(), 1);
  e = spec_error("[problem]\nn 1\n");
  EXPECT_EQ(e.line(), 2);
  e = spec_error("[problem]\nn = 1\n[checks]\nenabled = parity, colour\n");
  EXPECT_EQ(e.column(), 19);
}

TEST(SpecParser, SemanticErrorsNameTheInvariant) {
  auto msg = [](const std::string& t) {
    try {
      parse_problem_spec(t);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(msg("[problem]\nn = 1\n[lambda]\n1 = 1\n[potential]\n2 = 2\n").find("coordinates not normalized"),
            std::string::npos);
  EXPECT_NE(msg("[problem]\nn = 1\n[lambda]\n1 = -1\n[potential]\n2 = 1\n").find("lambda"), std::string::npos);
  EXPECT_NE(msg("[problem]\nn = 1\nrank = 2\n[lambda]\n1 = 1\n[potential]\n2 = 1\n[endomorphism]\n1 2 | 0 = 1\n")
                .find("W must be symmetric"),
            std::string::npos);
  EXPECT_NE(msg("[problem]\nn = 1\n[potential]\n2 = 1\n").find("missing lambda"), std::string::npos);
}

ProblemSpec random_spec(std::mt19937& rng) {
  ProblemSpec s;
  s.data = curved_bundle(rng);
  s.float_mode = rng() % 2;
  s.order = HalfInt::from_doubled(static_cast<int>(rng() % 7));
  if (rng() % 2)
    s.level_energy = random_rational(rng);
  else
    s.level_index = static_cast<int>(rng() % 4);
  s.checks = {"transport", "parity"};
  s.tolerance = 1e-7;
  return s;
}

TEST(SpecParser, RoundTrip) {
  std::mt19937 rng(42);
  for (int t = 0; t < 10; ++t) {
    auto s = random_spec(rng);
    auto text = serialize_problem_spec(s);
    auto back = parse_problem_spec(text);
    EXPECT_TRUE(back == s) << text;
    EXPECT_EQ(serialize_problem_spec(back), text);
  }
  for (const auto& p : preset_catalog()) {
    ProblemSpec s;
    s.data = make_preset(p.name);
    EXPECT_TRUE(parse_problem_spec(serialize_problem_spec(s)) == s) << p.name;
  }
  ProblemSpec raw;
  raw.data = scalar1d(poly1({{2, q(1)}, {3, q(1, 2)}}));
  raw.data.mode = LaplaceMode::raw;
  raw.data.b[0].add_term(MultiIndex{1}, Mat<Q>::scalar(1, q(2)));
  raw.data.jet_degree = 9;
  EXPECT_TRUE(parse_problem_spec(serialize_problem_spec(raw)) == raw);
}

TEST(Presets, WittenExpansion) {
  // phi = x^2/2 + x^3/6: phi' = x + x^2/2, phi'' = 1 + x
  auto d = make_preset("witten1d:c=1");
  Poly<Q> dphi = poly1({{1, q(1)}, {2, q(1, 2)}});
  EXPECT_EQ(d.V, dphi * dphi);
  EXPECT_EQ(d.W.coeff(MultiIndex{0}), Mat<Q>::scalar(1, q(-1)));
  EXPECT_EQ(d.W.coeff(MultiIndex{1}), Mat<Q>::scalar(1, q(-1)));
  EXPECT_EQ(d.W.size(), 2u);
}

TEST(ResultDocument, SchemaAndDeterminism) {
  ProblemSpec s;
  s.data = make_preset("cubic1d");
  s.order = HalfInt(2);
  s.level_index = 1;
  auto r = compute_quasimodes(s.data, LevelSelector<Q>{std::nullopt, 1}, HalfInt(2));
  auto doc = result_json(s, r, verify(r));
  EXPECT_EQ(doc["schema"], 1);
  EXPECT_EQ(doc["level"]["E0"], "3");
  EXPECT_EQ(doc["level"]["K_doubled"], 1);
  auto ev = doc["quasimodes"][0]["eigenvalue"]["terms"];
  EXPECT_EQ(ev[0][0], 2);  // hbar^1 E0
  EXPECT_EQ(ev[0][1], "3");
  EXPECT_EQ(ev[1][0], 4);
  EXPECT_EQ(ev[1][1], "-71/16");
  EXPECT_EQ(doc["normalization"]["omitted_prefactor_exponent"]["numerator"], -1);
  EXPECT_EQ(doc["normalization"]["omitted_prefactor_exponent"]["denominator"], 4);
  for (const auto& c : doc["checks"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
  auto r2 = compute_quasimodes(s.data, LevelSelector<Q>{std::nullopt, 1}, HalfInt(2));
  EXPECT_EQ(result_json(s, r2, verify(r2)).dump(), doc.dump());
  // leading jet: hbar^{-1/2} x (the odd Hermite function)
  bool found = false;
  for (const auto& j : doc["quasimodes"][0]["jets"])
    if (j["k_doubled"] == -1 && j["alpha"] == std::vector<int>{1}) found = true;
  EXPECT_TRUE(found);
}

TEST(Commands, SpectrumMatchesFormula) {
  std::string out;
  EXPECT_EQ(run({"spectrum", "--preset", "harmonic:n=2,lambda=1/2,mu=1/3", "--degree", "1"}, &out), 0);
  EXPECT_NE(out.find("4/3, (0,0), 1"), std::string::npos) << out;
  EXPECT_NE(out.find("7/3, (1,0), 1"), std::string::npos) << out;
}

TEST(Commands, VerifyParityOnCubic) {
  auto path = write_temp("cubic.spec", "[problem]\nn = 1\norder = 3\n[lambda]\n1 = 1\n[potential]\n2 = 1\n3 = 1\n");
  std::string out;
  EXPECT_EQ(run({"verify", "--spec", path, "--checks", "parity"}, &out), 0) << out;
  EXPECT_NE(out.find("parity"), std::string::npos);
  EXPECT_EQ(out.find("transport"), std::string::npos);
}

TEST(Commands, ExitCodes) {
  std::string out, err;
  auto path = write_temp("h.spec", kHarmonic);
  EXPECT_EQ(run({"compute", "--spec", path, "--level", "2"}, &out, &err), 1);
  EXPECT_NE(err.find("E0 not in spectrum"), std::string::npos);
  EXPECT_EQ(run({"compute", "--spec", temp_path("missing.spec")}, &out, &err), 1);
  EXPECT_EQ(run({"compute", "--preset", "cubic1d", "--bogus"}, &out, &err), 1);
  EXPECT_EQ(run({"verify", "--preset", "cubic1d", "--checks", "nonsense"}, &out, &err), 1);
  auto bad = write_temp("bad.spec", "[problem]\nn = 1\n[lambda]\n1 = 1\n[potential]\n2 = 1\n3 = ?\n");
  EXPECT_EQ(run({"compute", "--spec", bad}, &out, &err), 1);
  EXPECT_NE(err.find("line 7, column 5"), std::string::npos) << err;
  // an unreachable criterion fails the check, not the input
  EXPECT_EQ(run({"crosscheck", "--preset", "quartic1d", "--order", "2", "--mode", "float", "--hbar", "0.2,0.1",
                 "--grid", "64"},
                &out, &err),
            2)
      << out << err;
}

TEST(Commands, ComputeWritesJson) {
  auto json_path = temp_path("out.json");
  std::string out;
  ASSERT_EQ(run({"verify", "--preset", "bundle2", "--level", "3/2", "--order", "1", "--out", json_path}, &out), 0) << out;
  std::ifstream f(json_path);
  auto doc = nlohmann::json::parse(f);
  EXPECT_EQ(doc["schema"], 1);
  EXPECT_EQ(doc["quasimodes"].size(), 2u);
  EXPECT_EQ(doc["level"]["parity"], "mixed");
  bool has_projector = false;
  for (const auto& c : doc["checks"]) has_projector |= c["name"] == "projector";
  EXPECT_TRUE(has_projector);
}

}  // namespace
}  // namespace qmf::testing
