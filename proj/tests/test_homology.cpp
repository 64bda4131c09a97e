#include <gtest/gtest.h>

#include "support.hpp"

using namespace loopalg;
using namespace loopalg::testing;

namespace {

// Number of monomial families in the listed Hochschild basis of the
// 11-manifold (|x̄| = |ȳ| = 2, |z̄| = 4) landing in degree n.
int family_count(int n) {
  int c = 0;
  auto pq = [&](int rest) {  // #(p, q >= 0) with 2p + 2q = rest
    return rest >= 0 && rest % 2 == 0 ? rest / 2 + 1 : 0;
  };
  auto q_only = [&](int rest) { return rest >= 0 && rest % 2 == 0 ? 1 : 0; };
  auto r_pos = [&](int rest) { return rest >= 4 && rest % 4 == 0 ? 1 : 0; };
  auto r_any = [&](int rest) { return rest >= 0 && rest % 4 == 0 ? 1 : 0; };
  c += pq(n);                          // x̄^p ȳ^q
  c += pq(n - 3);                      // x x̄^p ȳ^q
  c += q_only(n - 3);                  // y ȳ^q
  c += r_pos(n - 6);                   // xy z̄^(r+1)
  c += pq(n - 8);                      // xz x̄^p ȳ^q
  c += q_only(n - 8);                  // yz ȳ^q
  c += r_any(n - 11);                  // xyz z̄^r
  c += pq(n - 7);                      // z x̄^(p+1) ȳ^q - ...
  c += q_only(n - 7);                  // z ȳ^(q+1) - ...
  return c;
}

TEST(Homology, ElevenManifoldSmallDegrees) {
  auto L = build_L(shipped("m11"));
  HomologyWindow H(hochschild_complex(L, false), 0, 6);
  std::vector<std::size_t> dims;
  for (int n = 0; n <= 6; ++n) dims.push_back(H.dim(n));
  EXPECT_EQ(dims, (std::vector<std::size_t>{1, 0, 2, 2, 3, 3, 4}));
}

TEST(Homology, ElevenManifoldFamilyCounts) {
  auto L = build_L(shipped("m11"));
  HomologyWindow H(hochschild_complex(L, false), 0, 24);
  for (int n = 0; n <= 24; ++n) EXPECT_EQ(H.dim(n), static_cast<std::size_t>(family_count(n))) << n;
}

TEST(Homology, SphereHilbertSeries) {
  // HH of ∧(x), |x| = 3: x̄^k and x x̄^k.
  auto L = build_L(shipped("s3"));
  HomologyWindow H(hochschild_complex(L, false), 0, 20);
  for (int n = 0; n <= 20; ++n) {
    std::size_t expect = (n % 2 == 0 ? 1 : 0) + (n >= 3 && (n - 3) % 2 == 0 ? 1 : 0);
    EXPECT_EQ(H.dim(n), expect) << n;
  }
}

TEST(Homology, RepresentativesAreCyclesAndClassesRoundTrip) {
  auto L = build_L(shipped("m11"));
  HomologyWindow H(hochschild_complex(L, false), 0, 14);
  for (int n = 0; n <= 14; ++n)
    for (std::size_t i = 0; i < H.dim(n); ++i) {
      Element r = H.representative(n, i);
      ASSERT_TRUE(L->delta(r).is_zero());
      auto c = H.class_of(r, n);
      ASSERT_TRUE(c);
      EXPECT_EQ(*c, unit_vector(static_cast<int>(i)));
    }
}

TEST(Homology, BoundariesHaveZeroClass) {
  std::mt19937 rng(7);
  auto L = build_L(shipped("m11"));
  HomologyWindow H(hochschild_complex(L, false), 0, 14);
  for (int n = 1; n <= 13; ++n) {
    Element w = random_element(*L->alg, n - 1, rng);
    Element b = L->delta(w);
    if (b.is_zero()) continue;
    EXPECT_TRUE(H.is_boundary(b));
  }
}

TEST(Homology, ConnesExactnessOnRandomModels) {
  for (unsigned seed = 0; seed < 22; ++seed) {
    RandomModel R = random_model(seed);
    auto E = build_E(build_L(parse_model(R.text)));
    ConnesMaps C = connes_maps(E, 9);
    EXPECT_NO_THROW(check_connes_exactness(C)) << R.text;
  }
}

TEST(Homology, ConnesExactnessOnShippedModels) {
  for (const auto& n : small_shipped()) {
    ConnesMaps C = connes_maps(build_E(build_L(shipped(n))), 16);
    EXPECT_NO_THROW(check_connes_exactness(C)) << n;
  }
}

// ker s̃ = Im s̃ on the reduced complex, per degree and word length.
void expect_s_exact(std::shared_ptr<const LoopModel> L, int max_degree, const std::string& what) {
  ComplexPtr C = hochschild_complex(L, true);
  for (int n = 0; n <= max_degree; ++n) {
    auto here = C->basis(n);
    for (const auto& [w, blk] : here->blocks) {
      std::size_t ker = kernel(derivation_columns(*C, L->s, n, w, n - 1, w + 1)).size();
      std::size_t im = C->basis(n + 1)->block(w - 1) ? rank_of(derivation_columns(*C, L->s, n + 1, w - 1, n, w)) : 0;
      ASSERT_EQ(ker, im) << what << " degree " << n << " word length " << w;
    }
  }
}

TEST(Homology, KernelOfSEqualsImageOnReducedComplex) {
  for (unsigned seed = 0; seed < 22; ++seed) {
    RandomModel R = random_model(seed);
    expect_s_exact(build_L(parse_model(R.text)), 9, R.text);
  }
  for (const auto& n : small_shipped()) expect_s_exact(build_L(shipped(n)), 12, n);
}

TEST(Homology, PermutationDeterminism) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    RandomModel R = random_model(seed);
    auto a = build_E(build_L(parse_model(R.text)));
    auto b = build_E(build_L(parse_model(permuted_text(R, seed + 100))));
    ConnesMaps Ca = connes_maps(a, 9), Cb = connes_maps(b, 9);
    for (int n = 0; n <= 9; ++n) {
      ASSERT_EQ(Ca.HH.dim(n), Cb.HH.dim(n)) << R.text;
      ASSERT_EQ(Ca.HC.dim(n), Cb.HC.dim(n)) << R.text;
      ASSERT_EQ(Ca.beta.rank(n), Cb.beta.rank(n)) << R.text;
    }
  }
}

TEST(Homology, JobsDoNotChangeResults) {
  auto E = build_E(build_L(shipped("m11")));
  ConnesMaps a = connes_maps(E, 14, 1), b = connes_maps(E, 14, 3);
  for (int n = 0; n <= 14; ++n) {
    ASSERT_EQ(a.HH.dim(n), b.HH.dim(n));
    for (std::size_t i = 0; i < a.HH.dim(n); ++i) EXPECT_EQ(a.HH.representative(n, i), b.HH.representative(n, i));
  }
}

TEST(Homology, WorkspaceCap) {
  setenv("LOOPALG_MAX_MEM_MB", "0.001", 1);
  auto L = build_L(shipped("appendixA"));
  EXPECT_THROW(HomologyWindow(hochschild_complex(L, false), 225, 225), DomainError);
  unsetenv("LOOPALG_MAX_MEM_MB");
}

}  // namespace
