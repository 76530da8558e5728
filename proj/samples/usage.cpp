// Minimal library usage: quasimodes of the anharmonic well V = x^2 + x^3/2.
#include <iostream>

#include "qmf/presets.hpp"
#include "qmf/quasimode_pipeline.hpp"

int main() {
  using namespace qmf;

  ProblemData<Rational> d(1, 1);
  d.lambda = {Rational(1)};
  d.V.add_term(MultiIndex{2}, Rational(1));
  d.V.add_term(MultiIndex{3}, Rational(1, 2));

  // first excited level, through hbar^3
  auto r = compute_quasimodes(d, LevelSelector<Rational>{std::nullopt, 1}, HalfInt(3));
  std::cout << "E(hbar)/hbar = " << to_string(r.modes[0].energy) << "\n";
  for (const auto& c : verify(r).checks) std::cout << c.name << ": " << (c.pass ? "pass" : "FAIL") << "\n";

  // a degenerate level of a preset, split by the perturbation
  auto iso = compute_quasimodes(make_preset("iso2d:c=1,g=1"), LevelSelector<Rational>{std::nullopt, 1}, HalfInt(2));
  for (const auto& m : iso.modes) std::cout << "branch: " << to_string(m.energy) << "\n";
  return 0;
}
