// Acceptance run: one PASS/FAIL line per criterion, also written to
// acceptance_report.txt in the working directory. Exit code 0 once every
// criterion has been evaluated, 2 if an internal consistency check fired.

#include <chrono>
#include <iomanip>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "../tests/support.hpp"

using namespace loopalg;
using namespace loopalg::testing;
using N = NamedClasses;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;
  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    notes.push_back(std::string(ok ? "ok " : "FAILED ") + what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

bool consistency_violation = false;

// ---------------------------------------------------------------- 1

std::vector<Element> listed_classes(const LoopModel& L, int n) {
  std::vector<Element> out;
  auto el = [&](std::initializer_list<std::string> parts) { return L.parse(N::join(parts)); };
  auto bars = [](int p, int q) { return N::join({N::mono("x'", p), N::mono("y'", q)}); };
  for (int p = 0; 2 * p <= n; ++p)
    for (int q = 0; 2 * (p + q) <= n; ++q) {
      const int b = 2 * (p + q);
      if (b == n) out.push_back(el({bars(p, q)}));
      if (b + 3 == n) out.push_back(el({"x", bars(p, q)}));
      if (b + 8 == n) out.push_back(el({"x", "z", bars(p, q)}));
      if (b + 7 == n) out.push_back(el({"z", bars(p + 1, q)}) - el({"x", bars(p, q), "z'"}));
    }
  for (int q = 0; 2 * q <= n; ++q) {
    if (2 * q + 3 == n) out.push_back(el({"y", N::mono("y'", q)}));
    if (2 * q + 8 == n) out.push_back(el({"y", "z", N::mono("y'", q)}));
    if (2 * q + 7 == n) out.push_back(el({"z", N::mono("y'", q + 1)}) - el({"y", N::mono("y'", q), "z'"}));
  }
  for (int r = 0; 4 * r <= n; ++r) {
    if (6 + 4 * (r + 1) == n) out.push_back(el({"x", "y", N::mono("z'", r + 1)}));
    if (11 + 4 * r == n) out.push_back(el({"x", "y", "z", N::mono("z'", r)}));
  }
  return out;
}

Verdict criterion1() {
  Verdict v;
  auto L = build_L(shipped("m11"));
  HomologyWindow H(hochschild_complex(L, false), 0, 40);
  int dim_ok = 0, basis_ok = 0;
  for (int n = 0; n <= 40; ++n) {
    auto reps = listed_classes(*L, n);
    bool ok = H.dim(n) == reps.size();
    dim_ok += ok;
    if (!ok) v.check(false, "degree " + std::to_string(n) + ": dim " + std::to_string(H.dim(n)) + " vs " + std::to_string(reps.size()) + " listed");
    std::vector<SparseVec> cols;
    bool cycles = true;
    for (const auto& r : reps) {
      auto c = H.class_of(r, n);
      if (!c) { cycles = false; break; }
      cols.push_back(*c);
    }
    bool change = cycles && rank_of(cols) == H.dim(n);
    basis_ok += change;
    if (!change) v.check(false, "degree " + std::to_string(n) + ": listed classes do not form a basis");
  }
  v.check(dim_ok == 41, "dimensions match the nine families in degrees 0..40");
  v.check(basis_ok == 41, "listed representatives change basis to the computed classes in every degree");
  return v;
}

// ---------------------------------------------------------------- 2 and 3

struct AppendixRun {
  BVReport bv;
  SReport s;
  Element omega, alpha;
  std::shared_ptr<const LoopModel> L;
};

AppendixRun& appendix() {
  static AppendixRun R = [] {
    AppendixRun a;
    a.L = build_L(shipped("appendixA"));
    a.omega = a.L->parse(read_file(models_dir() + "/appendixA.omega"));
    a.alpha = a.L->parse(read_file(models_dir() + "/appendixA.alpha"));
    a.bv = bv_exactness(a.L, 230);
    a.s = s_action_triviality(build_E(a.L), 230);
    return a;
  }();
  return R;
}

Verdict criterion2() {
  Verdict v;
  BVReport m11 = bv_exactness(build_L(shipped("m11")), 40);
  v.check(m11.exact, "11-manifold BV exact on degrees 1..40");
  for (const char* n : {"s3", "cp2"}) v.check(bv_exactness(build_L(shipped(n)), 40).exact, std::string(n) + " BV exact on degrees 1..40");
  AppendixRun& A = appendix();
  v.check(A.L->s(A.omega) == A.L->delta(A.alpha), "s(omega) = d(alpha) symbolically");
  v.check(!A.bv.exact, "appendix model not BV exact on degrees 1..230");
  if (A.bv.witness_degree) v.note("minimal failing degree " + std::to_string(*A.bv.witness_degree));
  v.check(A.L->delta(A.omega).is_zero() && is_bv_witness(A.bv, A.omega), "omega (degree 228) lies in ker B but not in Im B");
  return v;
}

Verdict criterion3() {
  Verdict v;
  for (const auto& n : small_shipped()) {
    auto L = build_L(shipped(n));
    BVReport bv = bv_exactness(L, 40);
    SReport s = s_action_triviality(build_E(L), 40);
    CrossCheck c = cross_check_bv_s(bv, s);
    v.check(c.agree && bv.exact == s.trivial, n + ": BV " + (bv.exact ? "exact" : "not exact") + ", reduced S " + (s.trivial ? "trivial" : "nontrivial") + " on the window, rank identity through degree " + std::to_string(c.checked_up_to));
  }
  AppendixRun& A = appendix();
  CrossCheck c = cross_check_bv_s(A.bv, A.s);
  v.check(c.agree && !A.s.trivial, std::string("appendixA: BV not exact, reduced S ") + (A.s.trivial ? "trivial" : "nontrivial") + ", rank identity through degree " + std::to_string(c.checked_up_to));
  return v;
}

// ---------------------------------------------------------------- 4

Verdict criterion4() {
  Verdict v;
  auto L = build_L(shipped("m11"));
  StringPipeline S(build_E(L), std::nullopt, 29);
  auto diff = [&](const TensorCoords& got, const TensorCoords& want) {
    auto s = express_named(S, tensor_axpy(got, Scalar(-1), want));
    return s ? *s : std::string("(outside named basis)");
  };
  auto diff_chain = [&](const TensorCoords& got, const Element& want) {
    auto name = [&](int d, int i) { return "(" + format_element(S.connes().HH.representative(d, static_cast<std::size_t>(i))) + ")"; };
    return format_tensor(tensor_axpy(got, Scalar(-1), S.kunneth()(want)), name);
  };
  int ok = 0, total = 0;
  std::string first;
  auto tally = [&](bool good, const std::string& what, const std::function<std::string()>& detail) {
    ++total;
    if (good) { ++ok; return; }
    if (first.empty()) first = what + ": computed minus printed = " + detail();
  };
  auto flush = [&](const std::string& family) {
    v.check(ok == total, family + " " + std::to_string(ok) + "/" + std::to_string(total) + (first.empty() ? "" : "; first mismatch " + first));
    ok = total = 0;
    first.clear();
  };
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q) {
      auto got = dsb_of_zeta(S, p, q), want = dsb_zeta_formula(S, p, q);
      tally(got == want, "zeta_{" + std::to_string(p) + "," + std::to_string(q) + "}", [&] { return diff(got, want); });
    }
  flush("Dsb(zeta_{p,q}) closed form");
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q) {
      if (p + q == 0) continue;
      auto got = dsb_of_eta(S, p, q), want = dsb_eta_formula(S, p, q);
      tally(got == want, "eta_{" + std::to_string(p) + "," + std::to_string(q) + "}", [&] { return diff(got, want); });
    }
  flush("Dsb(eta_{p,q}) closed form, (p,q) != (0,0)");
  for (int r = 1; r <= 3; ++r) {
    auto got = dsb_of_theta(S, r);
    tally(got.empty(), "theta_" + std::to_string(r), [&] { return diff(got, {}); });
  }
  flush("Dsb(theta_r) = 0");
  for (int p = 0; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q) {
      Element a = L->parse(N::join({N::mono("x'", p), N::mono("y'", q)}));
      auto got = S.dlp(a);
      Element want = dlp_bars_formula(S, p, q);
      tally(got == S.kunneth()(want), "x'^" + std::to_string(p) + "y'^" + std::to_string(q), [&] { return diff_chain(got, want); });
    }
  flush("Dlp(x'^p y'^q) displayed expansion");
  for (int p = 1; p <= 2; ++p)
    for (int q = 0; q <= 2; ++q) {
      auto got = S.dlp(eta_lift(*L, p, q));
      Element want = dlp_eta_formula(S, p, q);
      tally(got == S.kunneth()(want), "p=" + std::to_string(p) + " q=" + std::to_string(q), [&] { return diff_chain(got, want); });
    }
  flush("Dlp(z x'^p y'^q - x x'^(p-1) y'^q z') displayed expansion, p >= 1");
  for (int r = 1; r <= 3; ++r) {
    auto got = S.dlp(L->parse("x*y*" + N::mono("z'", r)));
    Element want = dlp_theta_formula(S, r);
    tally(got == S.kunneth()(want), "r=" + std::to_string(r), [&] { return diff_chain(got, want); });
  }
  flush("Dlp(xy z'^r) displayed expansion");
  return v;
}

// ---------------------------------------------------------------- 5

Verdict criterion5() {
  Verdict v;
  BGAlgebra A = make_bg({2});
  auto x = [&](int n) { return A.parse("y1^" + std::to_string(n) + "*x1v"); };
  auto cls = [&](int n) { return BGClass::of(x(n)); };
  bool table = true;
  for (int n = 1; n <= 6; ++n) {
    // x^0 is the top exterior class, which is zero in the cokernel.
    Element want = bg_coker(A, Scalar(-n) * x(n - 1));
    table &= bg_cobracket(A, cls(n), BGClass::u(0)) == want;
    for (int m = 1; m <= 6; ++m) table &= bg_cobracket(A, cls(n), cls(m)).is_zero();
    for (int l = 1; l <= 3; ++l) {
      table &= bg_cobracket(A, BGClass::u(l), cls(n)).is_zero();
      table &= bg_cobracket(A, cls(n), BGClass::u(l)).is_zero();
    }
  }
  for (int l = 1; l <= 3; ++l)
    for (int k = 0; k <= 3; ++k) table &= bg_cobracket(A, BGClass::u(l), BGClass::u(k)).is_zero();
  v.check(table, "SU(2): [x^n, 1] = -n x^(n-1), [x^n, x^m] = 0, [u^l, -] = 0 for n, m <= 6, l <= 3");

  BGAlgebra B = make_bg({2, 3});
  Element a = B.parse("y2*x2v*x1v");
  bool iter = true;
  for (int l = 1; l <= 5; ++l)
    for (int n = 1; n <= 3; ++n) {
      Element val = B.parse("y1^" + std::to_string(l) + "*x1v*x2v");
      for (int i = 0; i < n && !val.is_zero(); ++i) val = bg_cobracket(B, BGClass::of(a), BGClass::of(val));
      Scalar f = 1;
      for (int i = 0; i < n; ++i) f *= l - i;
      Element want = l >= n ? bg_coker(B, f * B.parse("y1^" + std::to_string(l - n) + "*x1v*x2v")) : B.alg->zero();
      iter &= val == want;
    }
  v.check(iter, "rank 2: n-fold [y2 x2v x1v, ..., y1^l x1v x2v] = l(l-1)...(l-n+1) y1^(l-n) x1v x2v, n <= 3, l <= 5");

  auto up_to_sign = [](const Element& got, const Element& want) { return got == want || got == -want; };
  bool grav = true;
  for (int n = 2; n <= 5; ++n) {
    std::vector<BGClass> args(static_cast<std::size_t>(n - 1), cls(2));
    args.push_back(BGClass::u(0));
    grav &= up_to_sign(bg_gravity(A, args), Scalar(1 << (n - 1)) * x(n - 1));
  }
  v.check(grav, "SU(2) gravity [x^2, ..., x^2, 1] = +-2^(n-1) x^(n-1), n <= 5");
  bool grav2 = true;
  for (int l = 2; l <= 5; ++l) {
    std::vector<BGClass> args{BGClass::of(B.parse("y1*x1v")), BGClass::of(B.parse("y1*x1v")), BGClass::of(a),
                              BGClass::of(B.parse("y1^" + std::to_string(l) + "*x1v*x2v"))};
    grav2 &= up_to_sign(bg_gravity(B, args), Scalar(l) * B.parse("y1^" + std::to_string(l - 1) + "*x1v*x2v"));
  }
  v.check(grav2, "rank 2 gravity [y1x1v, y1x1v, y2x2vx1v, y1^l x1v x2v] = +-l y1^(l-1) x1v x2v, l <= 5");

  StringPipeline S(build_E(build_L(shipped("su3"))), std::nullopt, 32);
  bool lie = true;
  for (std::size_t j = 0; j < 2; ++j) {
    auto xj = lie_indecomposable(S, j), yj = lie_loop_generator(S, j);
    for (int k = 2; k <= 3; ++k) {
      std::vector<StringPipeline::Dual> args{xj};
      for (int i = 0; i < k; ++i) args.push_back(yj);
      auto g = S.gravity(args);
      auto want = S.dual_scale(loop_power(S, yj, k - 1), k);
      lie &= !want.empty() && (g == want || g == S.dual_scale(want, -1));
    }
  }
  v.check(lie, "SU(3) loop homology: [x_j, y_j, ..., y_j] = +-k y_j^(k-1), k <= 3");
  v.note("signs: (-1)^((n-1)|a_1| + ... + |a_(n-1)|) in the shifted grading; gravity compared up to sign");
  return v;
}

// ---------------------------------------------------------------- 6

Verdict criterion6() {
  Verdict v;
  auto E11 = build_E(build_L(shipped("m11")));
  v.check(page(SpectralSequence(E11, 0), 2, 30, 6, true).zero(), "11-manifold (0)E_2 = 0 for total degree <= 30, filtration <= 6");
  AppendixRun& A = appendix();
  D2Report d = d2_check(build_E(A.L), A.omega, A.alpha, true);
  v.check(d.omega_cycle && d.identity && d.nonzero && d.page_nonzero, "appendix: d_2[omega] = [s alpha] != 0 at bidegree (0, 228)");
  for (const auto& n : shipped_names()) {
    auto E = build_E(build_L(shipped(n)));
    const int top = n == "appendixA" ? 60 : 18;
    bool ok = true;
    std::size_t cmp = 0;
    for (int r = 1; r <= 3; ++r) {
      PageCheck c = page_checks(E, r, 2, top, 5);
      ok &= c.pass;
      cmp += c.comparisons;
    }
    v.check(ok, n + ": u^N page isomorphisms for l >= r-1, r <= 3, |N| <= 2 (" + std::to_string(cmp) + " comparisons)");
  }
  return v;
}

// ---------------------------------------------------------------- 7

Verdict criterion7() {
  Verdict v;
  struct Case {
    std::string name, text;
    int window;
    std::optional<RandomModel> random;
  };
  std::vector<Case> cases;
  for (unsigned seed = 0; seed < 24; ++seed) {
    RandomModel R = random_model(seed);
    cases.push_back({"random " + std::to_string(seed), R.text, 9, R});
  }
  for (const auto& n : shipped_names()) cases.push_back({n, serialize_model(shipped(n)), n == "appendixA" ? 40 : 14, std::nullopt});
  std::map<std::string, int> failures;
  std::mt19937 rng(1);
  for (const auto& c : cases) {
    auto fail = [&](const std::string& what) { ++failures[what]; };
    auto L = build_L(parse_model(c.text));
    auto E = build_E(L);
    for (std::size_t i = 0; i < L->alg->size(); ++i) {
      Element g = L->alg->gen(i);
      if (!L->delta(L->delta(g)).is_zero()) fail("d^2 = 0");
      if (!(L->delta(L->s(g)) + L->s(L->delta(g))).is_zero()) fail("ds + sd = 0");
    }
    for (std::size_t i = 0; i < E->alg->size(); ++i)
      if (!E->D(E->D(E->alg->gen(i))).is_zero()) fail("D^2 = 0");
    for (int t = 0; t < 6; ++t) {
      int da = 1 + static_cast<int>(rng() % 8), db = 1 + static_cast<int>(rng() % 8);
      Element a = random_element(*L->alg, da, rng), b = random_element(*L->alg, db, rng);
      Element lhs = L->delta(L->alg->multiply(a, b));
      Element rhs = L->alg->multiply(L->delta(a), b) + (is_odd(da) ? Scalar(-1) : Scalar(1)) * L->alg->multiply(a, L->delta(b));
      if (!(lhs == rhs)) fail("Leibniz");
    }
    ComplexPtr C = hochschild_complex(L, true);
    for (int n = 0; n <= c.window; ++n)
      for (const auto& [w, blk] : C->basis(n)->blocks) {
        std::size_t ker = kernel(derivation_columns(*C, L->s, n, w, n - 1, w + 1)).size();
        std::size_t im = C->basis(n + 1)->block(w - 1) ? rank_of(derivation_columns(*C, L->s, n + 1, w - 1, n, w)) : 0;
        if (ker != im) fail("ker s = Im s");
      }
    try {
      ConnesMaps M = connes_maps(E, c.window);
      check_connes_exactness(M);
      bv_exactness(L, c.window);  // B^2 = 0 and Im B in ker B are asserted inside
      SpectralSequence ss(E, 0);
      for (int r = 1; r <= 3; ++r) page(ss, r, c.window, 4, true);
      if (c.random) {
        auto P = build_E(build_L(parse_model(permuted_text(*c.random, 7))));
        ConnesMaps Mp = connes_maps(P, c.window);
        for (int n = 0; n <= c.window; ++n)
          if (M.HH.dim(n) != Mp.HH.dim(n) || M.HC.dim(n) != Mp.HC.dim(n)) fail("permutation determinism");
      }
    } catch (const ConsistencyError& e) {
      fail(e.what());
    }
  }
  v.check(failures.empty(), std::to_string(cases.size()) + " models: d^2, ds+sd, D^2, Leibniz, ker s = Im s, Connes exactness, B^2 = 0, Im B in ker B, page law, permutation determinism");
  for (const auto& [what, k] : failures) v.note(what + " failed " + std::to_string(k) + " times");
  return v;
}

// ---------------------------------------------------------------- 8

Verdict criterion8() {
  Verdict v;
  FreeCDGA m = shipped("m11");
  WeightReport w = check_weights(m, {1, 1, 2});
  v.check(w.valid, "weights (1,1,2) on the 11-manifold validate");
  v.check(bv_exactness(build_L(m), 40).exact == w.valid, "predicted BV exactness matches computation on degrees 1..40");
  WeightSearch s = exhaustive_weight_search(shipped("appendixA"), 12);
  v.check(s.valid_count == 0, "appendix model: all " + std::to_string(s.tried) + " assignments with weights <= 12 rejected");
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"Hochschild basis of the 11-manifold", criterion1},
      {"BV exactness verdicts", criterion2},
      {"BV exactness vs reduced S-action", criterion3},
      {"Dsb and Dlp closed formulas on the 11-manifold", criterion4},
      {"classifying-space brackets and gravity values", criterion5},
      {"EMSS pages", criterion6},
      {"universal property suites", criterion7},
      {"positive weights", criterion8},
  };
  std::ofstream report("acceptance_report.txt");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const ConsistencyError& e) {
      consistency_violation = true;
      v.check(false, std::string("internal consistency violation: ") + e.what());
    } catch (const std::exception& e) {
      v.check(false, std::string("error: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream line;
    line << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " (" << std::fixed << std::setprecision(2) << secs << " s)\n";
    for (const auto& n : v.notes) line << "    " << n << "\n";
    std::cout << line.str() << std::flush;
    report << line.str() << std::flush;
  }
  return consistency_violation ? 2 : 0;
}
