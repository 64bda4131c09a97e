#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "loopalg/loopalg.hpp"

namespace loopalg::testing {

inline std::string models_dir() { return LOOPALG_MODELS_DIR; }
inline FreeCDGA shipped(const std::string& name) { return load_model(models_dir() + "/" + name + ".sul"); }
inline const std::vector<std::string>& shipped_names() {
  static const std::vector<std::string> names{"m11", "s3", "cp2", "su3", "appendixA"};
  return names;
}
// Shipped models cheap enough for full windows.
inline const std::vector<std::string>& small_shipped() {
  static const std::vector<std::string> names{"m11", "s3", "cp2", "su3"};
  return names;
}

struct RandomModel {
  std::string text;
  std::vector<std::pair<std::string, int>> gens;
};

// A random minimal Sullivan model: 2 to 4 generators of degree 2..8, each
// differential a random combination of cocycles built from earlier generators.
inline RandomModel random_model(unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> count(2, 4), deg(2, 8), coef(-2, 2), coin(0, 9);
  RandomModel R;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) R.gens.emplace_back("g" + std::to_string(i), deg(rng));
  std::stable_sort(R.gens.begin(), R.gens.end(), [](auto& a, auto& b) { return a.second < b.second; });
  for (int i = 0; i < n; ++i) R.gens[i].first = "g" + std::to_string(i);
  std::string decl, diffs;
  for (int i = 0; i < n; ++i) {
    const auto& [name, d] = R.gens[static_cast<std::size_t>(i)];
    if (i > 0 && coin(rng) >= 3) {
      FreeCDGA prefix = parse_model(decl + diffs);
      ChainComplex C(prefix.alg.get(), prefix.d, nullptr);
      auto basis = C.basis(d + 1);
      if (const ChainBlock* blk = basis->block(0)) {
        Element dv = prefix.alg->zero();
        for (const auto& z : kernel(C.differential_columns(d + 1, 0))) dv += Scalar(coef(rng)) * C.to_element(z, *blk);
        if (!dv.is_zero()) diffs += "diff " + name + " = " + format_element(dv) + "\n";
      }
    }
    decl += "generator " + name + " deg " + std::to_string(d) + "\n";
  }
  R.text = decl + diffs;
  return R;
}

// The same model with generator declarations in a permuted order.
inline std::string permuted_text(const RandomModel& R, unsigned seed) {
  std::vector<std::string> decl, rest;
  std::istringstream in(R.text);
  for (std::string line; std::getline(in, line);) (line.rfind("generator", 0) == 0 ? decl : rest).push_back(line);
  std::mt19937 rng(seed);
  std::shuffle(decl.begin(), decl.end(), rng);
  std::string out;
  for (const auto& l : decl) out += l + "\n";
  for (const auto& l : rest) out += l + "\n";
  return out;
}

// A random homogeneous element of degree n (or zero if the degree is empty).
inline Element random_element(const Algebra& A, int n, std::mt19937& rng, int terms = 3) {
  auto basis = degree_basis(A, n);
  Element e = A.zero();
  if (basis.empty()) return e;
  std::uniform_int_distribution<std::size_t> pick(0, basis.size() - 1);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int k = 0; k < terms; ++k) e += A.term(basis[pick(rng)], Scalar(coef(rng)));
  return e;
}

}  // namespace loopalg::testing
