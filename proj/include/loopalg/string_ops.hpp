#pragma once

// String topology on the model side.
//
// Manifolds: the dual loop product Dlp = (Diag! ⊗ 1) ∘ σ ∘ M_Comp on the
// Hochschild model, its Künneth coordinates, and the dual string bracket
// Dsb = (β ⊗ β) ∘ Dlp ∘ π on negative cyclic homology. The loop homology
// side (loop product, Δ, brackets) is obtained by dualizing.
//
// Classifying spaces: H*(BG) ⊗ H_{-*}(G) with its BV operator, the dual
// string cobracket and gravity brackets.

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "loopalg/bv_exact.hpp"
#include "loopalg/homology.hpp"
#include "loopalg/loop_models.hpp"

namespace loopalg {

// ---------------------------------------------------------------- linear systems over elements

// Finds x with sum_j x_j columns[j] = rhs, where every column and the rhs are
// tuples of elements (one per "part", parts may live in different algebras).
inline std::optional<std::vector<Scalar>> solve_elements(const std::vector<std::vector<Element>>& columns,
                                                         const std::vector<Element>& rhs) {
  std::vector<std::map<Monomial, int, MonomialOrder>> idx(rhs.size());
  int next = 0;
  auto vec = [&](const std::vector<Element>& parts) {
    SparseVec v;
    for (std::size_t p = 0; p < parts.size(); ++p)
      for (const auto& [m, c] : parts[p].terms()) {
        auto [it, fresh] = idx[p].try_emplace(m, next);
        if (fresh) ++next;
        v.emplace_back(it->second, c);
      }
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
    return v;
  };
  std::vector<SparseVec> cols;
  for (const auto& c : columns) cols.push_back(vec(c));
  SparseVec b = vec(rhs);
  SparseVec x;
  if (!solve(cols, b, x)) return std::nullopt;
  std::vector<Scalar> out(columns.size(), Scalar(0));
  for (const auto& [j, c] : x) out[static_cast<std::size_t>(j)] = c;
  return out;
}

inline Element combine(const Algebra* alg, const std::vector<Monomial>& basis, const std::vector<Scalar>& x) {
  Element r(alg);
  for (std::size_t j = 0; j < basis.size(); ++j)
    if (sgn(x[j])) r += alg->term(basis[j], x[j]);
  return r;
}

// Base generator indices sorted by degree (stable).
inline std::vector<std::size_t> by_degree(const Algebra& a) {
  std::vector<std::size_t> order(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a.generator(x).degree < a.generator(y).degree; });
  return order;
}

// ---------------------------------------------------------------- free path model

// P = (∧V_L ⊗ ∧V_R ⊗ ∧V̄, D) with D(v̄) = v_R - v_L + c_v, c_v in the ideal of V̄.
// The corrections are chosen so that P ⊗ ∧V (diagonal) is exactly the Hochschild
// model and, when possible, antisymmetric under path reversal.
struct PathModel {
  std::shared_ptr<const LoopModel> L;
  std::size_t n = 0;
  std::shared_ptr<Algebra> alg;  // V_L, V_R, V̄
  Derivation D;
  AlgebraMap diag;     // P -> L
  AlgebraMap reverse;  // v_L <-> v_R, v̄ -> -v̄
  bool symmetric = true;

  std::size_t left(std::size_t i) const { return i; }
  std::size_t right(std::size_t i) const { return n + i; }
  std::size_t bar(std::size_t i) const { return 2 * n + i; }
  int bar_length(const Monomial& m) const {
    int w = 0;
    for (std::size_t i = 2 * n; i < 3 * n; ++i) w += m.exp[i];
    return w;
  }
};

inline PathModel build_path_model(std::shared_ptr<const LoopModel> Lp) {
  const LoopModel& L = *Lp;
  const Algebra& B = *L.base.alg;
  PathModel P;
  P.L = Lp;
  P.n = B.size();
  const std::size_t n = P.n;
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < n; ++i) gens.push_back({B.generator(i).name, B.generator(i).degree, Tag::left, int(i)});
  for (std::size_t i = 0; i < n; ++i) gens.push_back({B.generator(i).name, B.generator(i).degree, Tag::right, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::path, int(i)});
  P.alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = P.alg.get();

  std::vector<Element> to_left, to_right;
  for (std::size_t i = 0; i < n; ++i) {
    to_left.push_back(A->gen(P.left(i)));
    to_right.push_back(A->gen(P.right(i)));
  }
  AlgebraMap inL(&B, A, to_left), inR(&B, A, to_right);

  std::vector<Element> dimg, rimg;
  for (std::size_t i = 0; i < n; ++i) dimg.push_back(L.alg->gen(i));
  for (std::size_t i = 0; i < n; ++i) dimg.push_back(L.alg->gen(i));
  for (std::size_t i = 0; i < n; ++i) dimg.push_back(L.alg->gen(L.bar(i)));
  for (std::size_t i = 0; i < n; ++i) rimg.push_back(A->gen(P.right(i)));
  for (std::size_t i = 0; i < n; ++i) rimg.push_back(A->gen(P.left(i)));
  for (std::size_t i = 0; i < n; ++i) rimg.push_back(-A->gen(P.bar(i)));
  P.diag = AlgebraMap(A, L.alg.get(), dimg);
  P.reverse = AlgebraMap(A, A, rimg);

  std::vector<Element> Dv(3 * n, A->zero());
  for (std::size_t i = 0; i < n; ++i) {
    Dv[P.left(i)] = inL(L.base.d.value(i));
    Dv[P.right(i)] = inR(L.base.d.value(i));
  }
  std::vector<bool> done(n, false);
  for (std::size_t i : by_degree(B)) {
    const int deg = B.generator(i).degree;
    Derivation D(A, 1, Dv);
    Element target = Dv[P.left(i)] - Dv[P.right(i)];  // D(c) must cancel D(v_R - v_L)
    Element diag_target = L.delta.value(L.bar(i));
    auto basis = degree_basis(*A, deg, [&](const Monomial& m) {
      for (std::size_t j = 0; j < n; ++j)
        if (m.exp[P.bar(j)] && !done[j]) return false;
      return P.bar_length(m) >= 1 && !A->odd_square(m);
    });
    std::vector<std::vector<Element>> cols;
    for (const auto& m : basis) {
      Element t = A->term(m);
      cols.push_back({D(t), P.diag(t), P.reverse(t) + t});
    }
    auto x = solve_elements(cols, {target, diag_target, A->zero()});
    if (!x) {
      P.symmetric = false;
      for (auto& c : cols) c.pop_back();
      x = solve_elements(cols, {target, diag_target});
    }
    if (!x)
      throw ConsistencyError("no path-model differential for generator '" + B.generator(i).name + "'");
    Dv[P.bar(i)] = A->gen(P.right(i)) - A->gen(P.left(i)) + combine(A, basis, *x);
    done[i] = true;
  }
  P.D = Derivation(A, 1, Dv);
  require_zero(graded_commutator(P.D, P.D), "path model D^2 = 0");
  return P;
}

// ---------------------------------------------------------------- composition of loops

// Q = L ⊗_{∧V} L = ∧(V, V̄_L, V̄_R).
struct LoopPair {
  std::shared_ptr<const LoopModel> L;
  std::size_t n = 0;
  std::shared_ptr<Algebra> alg;
  Derivation delta;
  AlgebraMap left, right;  // L -> Q on either factor

  std::size_t bar_left(std::size_t i) const { return n + i; }
  std::size_t bar_right(std::size_t i) const { return 2 * n + i; }
};

inline LoopPair build_loop_pair(std::shared_ptr<const LoopModel> Lp) {
  const LoopModel& L = *Lp;
  const Algebra& B = *L.base.alg;
  LoopPair Q;
  Q.L = Lp;
  Q.n = B.size();
  const std::size_t n = Q.n;
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < n; ++i) gens.push_back({B.generator(i).name, B.generator(i).degree, Tag::base, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::left, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::right, int(i)});
  Q.alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = Q.alg.get();
  std::vector<Element> li, ri;
  for (std::size_t i = 0; i < n; ++i) {
    li.push_back(A->gen(i));
    ri.push_back(A->gen(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    li.push_back(A->gen(Q.bar_left(i)));
    ri.push_back(A->gen(Q.bar_right(i)));
  }
  Q.left = AlgebraMap(L.alg.get(), A, li);
  Q.right = AlgebraMap(L.alg.get(), A, ri);
  std::vector<Element> dv;
  for (std::size_t i = 0; i < n; ++i) dv.push_back(Q.left(L.delta.value(i)));
  for (std::size_t i = 0; i < n; ++i) dv.push_back(Q.left(L.delta.value(L.bar(i))));
  for (std::size_t i = 0; i < n; ++i) dv.push_back(Q.right(L.delta.value(L.bar(i))));
  Q.delta = Derivation(A, 1, dv);
  require_zero(graded_commutator(Q.delta, Q.delta), "delta^2 = 0 on L (x)_V L");
  return Q;
}

// M_Comp: L -> Q, reduced from a lift P -> P ⊗_{∧V} P of path composition.
struct CompRepresentative {
  PathModel P;
  LoopPair Q;
  AlgebraMap map;                    // L -> Q
  std::vector<Element> corrections;  // per base generator: M(v̄) - v̄_L - v̄_R
};

inline CompRepresentative build_comp(std::shared_ptr<const LoopModel> Lp) {
  const LoopModel& L = *Lp;
  const Algebra& B = *L.base.alg;
  CompRepresentative C;
  C.P = build_path_model(Lp);
  C.Q = build_loop_pair(Lp);
  const PathModel& P = C.P;
  const std::size_t n = B.size();

  // P2 = ∧(V_1, V_2, V_3, V̄_a, V̄_b)
  std::vector<Generator> gens;
  for (int k = 1; k <= 3; ++k)
    for (std::size_t i = 0; i < n; ++i)
      gens.push_back({B.generator(i).name + "@" + std::to_string(k), B.generator(i).degree, Tag::other, int(i)});
  for (const char* s : {"a", "b"})
    for (std::size_t i = 0; i < n; ++i)
      gens.push_back({B.generator(i).name + "'" + s, B.generator(i).degree - 1, Tag::other, int(i)});
  auto P2 = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = P2.get();
  auto v = [&](int k, std::size_t i) { return A->gen(static_cast<std::size_t>(k - 1) * n + i); };
  auto va = [&](std::size_t i) { return A->gen(3 * n + i); };
  auto vb = [&](std::size_t i) { return A->gen(4 * n + i); };
  auto segment = [&](int from, int to, bool first) {
    std::vector<Element> im;
    for (std::size_t i = 0; i < n; ++i) im.push_back(v(from, i));
    for (std::size_t i = 0; i < n; ++i) im.push_back(v(to, i));
    for (std::size_t i = 0; i < n; ++i) im.push_back(first ? va(i) : vb(i));
    return AlgebraMap(P.alg.get(), A, im);
  };
  AlgebraMap seg_a = segment(1, 2, true), seg_b = segment(2, 3, false);

  std::vector<Element> D2v(5 * n, A->zero());
  for (int k = 1; k <= 3; ++k) {
    std::vector<Element> im;
    for (std::size_t i = 0; i < n; ++i) im.push_back(v(k, i));
    AlgebraMap in(&B, A, im);
    for (std::size_t i = 0; i < n; ++i) D2v[static_cast<std::size_t>(k - 1) * n + i] = in(L.base.d.value(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    D2v[3 * n + i] = seg_a(P.D.value(P.bar(i)));
    D2v[4 * n + i] = seg_b(P.D.value(P.bar(i)));
  }
  Derivation D2(A, 1, D2v);
  require_zero(graded_commutator(D2, D2), "D^2 = 0 on P (x)_V P");

  auto mixed = [&](const Monomial& m) {
    bool a = false, b = false;
    for (std::size_t i = 0; i < n; ++i) {
      a = a || m.exp[3 * n + i];
      b = b || m.exp[4 * n + i];
    }
    return a && b && !A->odd_square(m);
  };
  std::vector<Element> lift(3 * n, A->zero());
  for (std::size_t i = 0; i < n; ++i) {
    lift[P.left(i)] = v(1, i);
    lift[P.right(i)] = v(3, i);
  }
  for (std::size_t i : by_degree(B)) {
    AlgebraMap Phi(P.alg.get(), A, lift);
    Element c = P.D.value(P.bar(i)) - P.alg->gen(P.right(i)) + P.alg->gen(P.left(i));
    Element rhs = Phi(c) - seg_a(c) - seg_b(c);
    auto basis = degree_basis(*A, B.generator(i).degree - 1, mixed);
    std::vector<std::vector<Element>> cols;
    for (const auto& m : basis) cols.push_back({D2(A->term(m))});
    auto x = solve_elements(cols, {rhs});
    if (!x)
      throw DomainError("composition lift obstructed at generator '" + B.generator(i).name + "': " + format_element(rhs));
    lift[P.bar(i)] = va(i) + vb(i) + combine(A, basis, *x);
  }
  AlgebraMap Phi(P.alg.get(), A, lift);
  for (std::size_t g = 0; g < 3 * n; ++g)
    if (!(D2(Phi.image(g)) == Phi(P.D.value(g))))
      throw ConsistencyError("composition lift is not a chain map on " + P.alg->generator(g).name);

  // reduce to Q: v_k -> v, v̄_a -> v̄_L, v̄_b -> v̄_R
  std::vector<Element> red;
  const Algebra* QA = C.Q.alg.get();
  for (int k = 1; k <= 3; ++k)
    for (std::size_t i = 0; i < n; ++i) red.push_back(QA->gen(i));
  for (std::size_t i = 0; i < n; ++i) red.push_back(QA->gen(C.Q.bar_left(i)));
  for (std::size_t i = 0; i < n; ++i) red.push_back(QA->gen(C.Q.bar_right(i)));
  AlgebraMap reduce(A, QA, red);

  std::vector<Element> images;
  for (std::size_t i = 0; i < n; ++i) images.push_back(QA->gen(i));
  for (std::size_t i = 0; i < n; ++i) {
    Element im = reduce(Phi.image(P.bar(i)));
    images.push_back(im);
    C.corrections.push_back(im - QA->gen(C.Q.bar_left(i)) - QA->gen(C.Q.bar_right(i)));
  }
  C.map = AlgebraMap(L.alg.get(), QA, images);
  for (std::size_t g = 0; g < L.alg->size(); ++g)
    if (!(C.Q.delta(C.map.image(g)) == C.map(L.delta.value(g))))
      throw ConsistencyError("M_Comp is not a chain map on " + L.alg->generator(g).name);
  return C;
}

// ---------------------------------------------------------------- section of ε_P ⊗ 1

// T = P ⊗_{(∧V)^2} L^{⊗2} = ∧(V_L, V_R, V̄_P, V̄_L, V̄_R).
struct SectionMap {
  std::shared_ptr<Algebra> alg;
  std::size_t n = 0;
  Derivation D;
  AlgebraMap sigma;  // Q -> T
  AlgebraMap eps;    // T -> Q
  std::vector<Element> corrections;  // for V̄_L then V̄_R: σ(g) - g

  std::size_t vl(std::size_t i) const { return i; }
  std::size_t vr(std::size_t i) const { return n + i; }
  std::size_t path(std::size_t i) const { return 2 * n + i; }
  std::size_t bl(std::size_t i) const { return 3 * n + i; }
  std::size_t br(std::size_t i) const { return 4 * n + i; }
  int path_length(const Monomial& m) const {
    int w = 0;
    for (std::size_t i = 2 * n; i < 3 * n; ++i) w += m.exp[i];
    return w;
  }
};

inline SectionMap build_section(const CompRepresentative& C) {
  const LoopModel& L = *C.P.L;
  const Algebra& B = *L.base.alg;
  const std::size_t n = B.size();
  SectionMap S;
  S.n = n;
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < n; ++i) gens.push_back({B.generator(i).name, B.generator(i).degree, Tag::left, int(i)});
  for (std::size_t i = 0; i < n; ++i) gens.push_back({B.generator(i).name, B.generator(i).degree, Tag::right, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::path, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::left, int(i)});
  for (std::size_t i = 0; i < n; ++i)
    gens.push_back({B.generator(i).name + "'", B.generator(i).degree - 1, Tag::right, int(i)});
  S.alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = S.alg.get();

  std::vector<Element> fromP;
  for (std::size_t g = 0; g < 3 * n; ++g) fromP.push_back(A->gen(g));
  AlgebraMap inP(C.P.alg.get(), A, fromP);
  std::vector<Element> lL, lR;
  for (std::size_t i = 0; i < n; ++i) {
    lL.push_back(A->gen(S.vl(i)));
    lR.push_back(A->gen(S.vr(i)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    lL.push_back(A->gen(S.bl(i)));
    lR.push_back(A->gen(S.br(i)));
  }
  AlgebraMap inLL(L.alg.get(), A, lL), inLR(L.alg.get(), A, lR);

  std::vector<Element> Dv(5 * n, A->zero());
  for (std::size_t g = 0; g < 3 * n; ++g) Dv[g] = inP(C.P.D.value(g));
  for (std::size_t i = 0; i < n; ++i) {
    Dv[S.bl(i)] = inLL(L.delta.value(L.bar(i)));
    Dv[S.br(i)] = inLR(L.delta.value(L.bar(i)));
  }
  S.D = Derivation(A, 1, Dv);
  require_zero(graded_commutator(S.D, S.D), "D^2 = 0 on P (x) L (x) L");

  const Algebra* QA = C.Q.alg.get();
  std::vector<Element> eimg;
  for (std::size_t i = 0; i < n; ++i) eimg.push_back(QA->gen(i));
  for (std::size_t i = 0; i < n; ++i) eimg.push_back(QA->gen(i));
  for (std::size_t i = 0; i < n; ++i) eimg.push_back(QA->zero());
  for (std::size_t i = 0; i < n; ++i) eimg.push_back(QA->gen(C.Q.bar_left(i)));
  for (std::size_t i = 0; i < n; ++i) eimg.push_back(QA->gen(C.Q.bar_right(i)));
  S.eps = AlgebraMap(A, QA, eimg);

  std::vector<Element> sig(3 * n, A->zero());
  for (std::size_t i = 0; i < n; ++i) {
    sig[i] = A->gen(S.vl(i));
    sig[C.Q.bar_left(i)] = A->gen(S.bl(i));
    sig[C.Q.bar_right(i)] = A->gen(S.br(i));
  }
  std::vector<Element> corr(2 * n, A->zero());
  for (int side = 0; side < 2; ++side)
    for (std::size_t i : by_degree(B)) {
      const std::size_t qg = side == 0 ? C.Q.bar_left(i) : C.Q.bar_right(i);
      const std::size_t tg = side == 0 ? S.bl(i) : S.br(i);
      AlgebraMap sigma(QA, A, sig);
      Element rhs = sigma(C.Q.delta.value(qg)) - S.D(A->gen(tg));
      auto basis = degree_basis(*A, B.generator(i).degree - 1,
                                [&](const Monomial& m) { return S.path_length(m) >= 1 && !A->odd_square(m); });
      std::vector<std::vector<Element>> cols;
      for (const auto& m : basis) cols.push_back({S.D(A->term(m))});
      auto x = solve_elements(cols, {rhs});
      if (!x) throw DomainError("section obstructed at generator '" + B.generator(i).name + "': " + format_element(rhs));
      corr[static_cast<std::size_t>(side) * n + i] = combine(A, basis, *x);
      sig[qg] = A->gen(tg) + corr[static_cast<std::size_t>(side) * n + i];
    }
  S.sigma = AlgebraMap(QA, A, sig);
  S.corrections = corr;
  for (std::size_t g = 0; g < QA->size(); ++g) {
    if (!(S.D(S.sigma.image(g)) == S.sigma(C.Q.delta.value(g))))
      throw ConsistencyError("section is not a chain map on " + QA->generator(g).name);
    if (!(S.eps(S.sigma.image(g)) == QA->gen(g)))
      throw ConsistencyError("section is not a right inverse of eps on " + QA->generator(g).name);
  }
  return S;
}

// ---------------------------------------------------------------- shriek data

// Diag!: (∧V)^{⊗2}-linear, Diag!(1) = Ω, zero on the ideal of V̄_P. Ω lives in
// L^{⊗2} (generators V_L, V̄_L, V_R, V̄_R) and only involves V_L, V_R.
struct ShriekData {
  std::string text;
  Element omega;
  int degree = 0;
};

struct LoopSquare {
  std::shared_ptr<const LoopModel> L;
  TensorSquare T;
  Derivation delta;
};

inline LoopSquare build_loop_square(std::shared_ptr<const LoopModel> L) {
  LoopSquare S;
  S.L = L;
  S.T = tensor_square(*L->alg);
  S.delta = square_derivation(S.T, L->delta);
  return S;
}

inline std::string strip_shriek_statement(std::string text) {
  auto hash = text.find('#');
  while (hash != std::string::npos) {
    auto eol = text.find('\n', hash);
    text.erase(hash, eol == std::string::npos ? std::string::npos : eol - hash);
    hash = text.find('#');
  }
  auto eq = text.find('=');
  if (text.find("shriek") != std::string::npos && eq != std::string::npos) text = text.substr(eq + 1);
  return text;
}

inline std::string product_of_slot_differences(const FreeCDGA& m) {
  std::string s;
  for (std::size_t i = 0; i < m.alg->size(); ++i) {
    const std::string& g = m.alg->generator(i).name;
    if (!s.empty()) s += "*";
    s += "(R(" + g + ") - L(" + g + "))";
  }
  return s.empty() ? "1" : s;
}

// Parses and validates: Ω is a δ-cycle without bars and (v_R - v_L) Ω = 0 for
// every generator, which is exactly the chain-map condition for Diag!.
inline ShriekData make_shriek(const LoopSquare& S, const std::string& text) {
  ShriekData D;
  D.text = detail::trim(strip_shriek_statement(text));
  const Algebra* A = S.T.alg.get();
  D.omega = parse_element(*A, D.text);
  if (D.omega.is_zero()) throw DomainError("shriek class is zero");
  auto deg = D.omega.degree();
  if (!deg) throw DomainError("shriek class is not homogeneous");
  D.degree = *deg;
  const LoopModel& L = *S.L;
  for (const auto& [m, c] : D.omega.terms())
    for (std::size_t i = 0; i < L.nbase; ++i)
      if (m.exp[L.bar(i)] || m.exp[L.alg->size() + L.bar(i)])
        throw DomainError("shriek class may not involve bar generators");
  if (!S.delta(D.omega).is_zero()) throw DomainError("shriek class is not a cocycle: d = " + format_element(S.delta(D.omega)));
  for (std::size_t i = 0; i < L.nbase; ++i) {
    Element diff = S.T.right(L.alg->gen(i)) - S.T.left(L.alg->gen(i));
    if (!A->multiply(diff, D.omega).is_zero())
      throw DomainError("Diag! is not a chain map: (R(g) - L(g)) * fundamental != 0 for g = " + L.alg->generator(i).name);
  }
  return D;
}

inline ShriekData default_shriek(const LoopSquare& S) {
  const FreeCDGA& m = S.L->base;
  return make_shriek(S, m.shriek ? *m.shriek : product_of_slot_differences(m));
}

// ---------------------------------------------------------------- Künneth coordinates

// (degree_left, index_left, degree_right, index_right) -> coefficient, indices
// into the HH window's class basis.
using TensorCoords = std::map<std::tuple<int, int, int, int>, Scalar>;

inline TensorCoords tensor_axpy(TensorCoords a, const Scalar& c, const TensorCoords& b) {
  for (const auto& [k, v] : b) {
    Scalar& x = a[k];
    x += c * v;
    if (sgn(x) == 0) a.erase(k);
  }
  return a;
}

inline std::string format_tensor(const TensorCoords& t, const std::function<std::string(int, int)>& name) {
  if (t.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& [k, c] : t) {
    auto [d1, i1, d2, i2] = k;
    Scalar a = abs(c);
    s += first ? (sgn(c) < 0 ? "-" : "") : (sgn(c) < 0 ? " - " : " + ");
    if (a != 1) s += to_string(a) + " ";
    s += name(d1, i1) + " (x) " + name(d2, i2);
    first = false;
  }
  return s;
}

// Homology of L ⊗ L expressed in the basis [b_i] ⊗ [b_j] of HH ⊗ HH.
class KunnethCoordinates {
 public:
  KunnethCoordinates(const LoopSquare& S, const HomologyWindow& HH)
      : S_(S), HH_(HH) {
    const LoopModel& L = *S.L;
    const std::size_t nL = L.alg->size();
    auto key = [nL, L = S.L](const Monomial& m) {
      int wl = 0, wr = 0;
      for (std::size_t i = L->nbase; i < nL; ++i) {
        wl += m.exp[i];
        wr += m.exp[nL + i];
      }
      return wl * 4096 + wr;
    };
    C_ = std::make_shared<ChainComplex>(S.T.alg.get(), S.delta, key);
  }

  const ChainComplex& complex() const { return *C_; }

  // Coordinates of a δ-cycle of total degree n; throws if w is not a cycle.
  TensorCoords operator()(const Element& w) const {
    TensorCoords out;
    if (w.is_zero()) return out;
    auto n = w.degree();
    if (!n) throw DomainError("tensor element is not homogeneous");
    for (const auto& [k, v] : C_->to_vectors(w, *n)) {
      const Block& b = block(*n, k);
      SparseVec coords;
      SparseVec res = b.ech.reduce(v, &coords);
      if (!res.empty()) throw DomainError("element of L (x) L is not a cycle");
      for (const auto& [j, c] : coords) out = tensor_axpy(out, c, {{b.labels[static_cast<std::size_t>(j)], Scalar(1)}});
    }
    return out;
  }

  Element tensor_rep(int d1, int i1, int d2, int i2) const {
    return S_.T.tensor(HH_.representative(d1, static_cast<std::size_t>(i1)), HH_.representative(d2, static_cast<std::size_t>(i2)));
  }

 private:
  struct Block {
    Echelon ech;
    std::vector<std::tuple<int, int, int, int>> labels;
  };

  const Block& block(int n, int k) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = cache_.find({n, k});
    if (it != cache_.end()) return it->second;
    Block b;
    for (const auto& col : C_->differential_columns(n - 1, k)) b.ech.insert(col);
    for (int ld = 0; ld <= n; ++ld) {
      const int rd = n - ld;
      if (ld > HH_.hi() || rd > HH_.hi())
        throw DomainError("tensor degree (" + std::to_string(ld) + ", " + std::to_string(rd) + ") outside the window");
      for (std::size_t i = 0; i < HH_.dim(ld); ++i)
        for (std::size_t j = 0; j < HH_.dim(rd); ++j) {
          Element t = tensor_rep(ld, int(i), rd, int(j));
          auto vs = C_->to_vectors(t, n);
          auto f = vs.find(k);
          if (vs.size() != 1 || f == vs.end()) continue;
          SparseVec label = unit_vector(static_cast<int>(b.labels.size()));
          if (!b.ech.insert(f->second, label))
            throw ConsistencyError("Kunneth products are dependent in degree " + std::to_string(n));
          b.labels.emplace_back(ld, int(i), rd, int(j));
        }
    }
    return cache_.emplace(std::make_pair(n, k), std::move(b)).first->second;
  }

  const LoopSquare& S_;
  const HomologyWindow& HH_;
  ComplexPtr C_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, int>, Block> cache_;
};

// ---------------------------------------------------------------- the manifold pipeline

enum class BetaSign { plain, koszul };

// Dsb(c) = global * (-1)^{|c|·parity} * (β ⊗ β) Dlp(π c), where (β ⊗ β)(a ⊗ b)
// carries (-1)^|a| when beta = koszul. The parity factor is what one gets by
// applying the shriek class on the right of the chain instead of the left.
struct DsbConvention {
  int global = 1;
  BetaSign beta = BetaSign::plain;
  bool parity = false;
};

// The convention that reproduces the closed formulas for the nonformal
// 11-manifold on both families.
inline DsbConvention standard_dsb_convention() { return DsbConvention{-1, BetaSign::plain, true}; }

class StringPipeline {
 public:
  // Everything is certified on HH/HC degrees 0..max_degree.
  StringPipeline(std::shared_ptr<const CyclicModel> E, std::optional<std::string> shriek_text, int max_degree,
                 unsigned jobs = 1)
      : E_(std::move(E)),
        max_degree_(max_degree),
        square_(build_loop_square(E_->L)),
        shriek_(shriek_text ? make_shriek(square_, *shriek_text) : default_shriek(square_)),
        comp_(build_comp(E_->L)),
        section_(build_section(comp_)),
        C_(connes_maps(E_, max_degree, jobs)),
        kunneth_(square_, C_.HH) {
    const LoopModel& L = *E_->L;
    const Algebra* TA = section_.alg.get();
    const Algebra* LL = square_.T.alg.get();
    const std::size_t n = L.nbase, nL = L.alg->size();
    std::vector<Element> proj(5 * n, LL->zero());
    for (std::size_t i = 0; i < n; ++i) {
      proj[section_.vl(i)] = LL->gen(i);
      proj[section_.vr(i)] = LL->gen(nL + i);
      proj[section_.bl(i)] = LL->gen(L.bar(i));
      proj[section_.br(i)] = LL->gen(nL + L.bar(i));
    }
    diag_proj_ = AlgebraMap(TA, LL, proj);
    Hs_ = induced_map("H(s)", [&L](const Element& a) { return L.s(a); }, -1, C_.HH, C_.HH, jobs);
  }

  const CyclicModel& model() const { return *E_; }
  const LoopModel& loop_model() const { return *E_->L; }
  const CompRepresentative& comp() const { return comp_; }
  const SectionMap& section() const { return section_; }
  const ShriekData& shriek() const { return shriek_; }
  const LoopSquare& square() const { return square_; }
  const ConnesMaps& connes() const { return C_; }
  const InducedMap& H_s() const { return Hs_; }
  const KunnethCoordinates& kunneth() const { return kunneth_; }
  int max_degree() const { return max_degree_; }
  int dimension() const { return shriek_.degree; }

  // (Diag! ⊗ 1)(t): drop the ideal of V̄_P, multiply by Ω.
  Element diag_shriek(const Element& t) const {
    Element free = t.filter([&](const Monomial& m) { return section_.path_length(m) == 0; });
    return square_.T.alg->multiply(shriek_.omega, diag_proj_(free));
  }

  // Chain-level dual loop product of a ∈ L.
  Element dlp_chain(const Element& a) const { return diag_shriek(section_.sigma(comp_.map(a))); }

  // Künneth coordinates of Dlp(a) for a δ-cycle a.
  TensorCoords dlp(const Element& a) const {
    if (!loop_model().delta(a).is_zero()) throw DomainError("Dlp needs a cocycle: " + format_element(a));
    Element w = dlp_chain(a);
    if (!square_.delta(w).is_zero()) throw ConsistencyError("Dlp of a cocycle is not a cocycle");
    return kunneth_(w);
  }

  // Dsb(c) = (β ⊗ β) Dlp(π c) for a D-cycle c of E; HC coordinates in both slots.
  TensorCoords dsb(const Element& c, DsbConvention conv = standard_dsb_convention()) const {
    const CyclicModel& e = *E_;
    if (!e.D(c).is_zero()) throw DomainError("Dsb needs a cocycle of the cyclic model: " + format_element(c));
    TensorCoords d = dlp(e.to_L(c));
    TensorCoords out;
    const int sign = conv.global * (conv.parity && is_odd(c.degree().value_or(0)) ? -1 : 1);
    for (const auto& [k, coef] : d) {
      auto [d1, i1, d2, i2] = k;
      if (d1 == 0 || d2 == 0) continue;  // β lands in negative degree
      if (!C_.beta.has(d1) || !C_.beta.has(d2)) throw DomainError("beta outside the window");
      const SparseVec& b1 = C_.beta.columns.at(d1)[static_cast<std::size_t>(i1)];
      const SparseVec& b2 = C_.beta.columns.at(d2)[static_cast<std::size_t>(i2)];
      Scalar s = coef * sign;
      if (conv.beta == BetaSign::koszul && is_odd(d1)) s = -s;
      for (const auto& [j1, c1] : b1)
        for (const auto& [j2, c2] : b2) out = tensor_axpy(out, s * c1 * c2, {{{d1 - 1, j1, d2 - 1, j2}, Scalar(1)}});
    }
    return out;
  }

  // HC coordinates of a D-cycle.
  SparseVec hc_class(const Element& c) const {
    auto n = c.degree();
    if (!n) return {};
    auto v = C_.HC.class_of(c, *n);
    if (!v) throw DomainError("not a cycle of the cyclic model: " + format_element(c));
    return *v;
  }

  // Tensor of two HC classes given by cycles.
  TensorCoords hc_tensor(const Element& a, const Element& b, const Scalar& c = Scalar(1)) const {
    TensorCoords out;
    if (a.is_zero() || b.is_zero()) return out;
    int da = *a.degree(), db = *b.degree();
    for (const auto& [i, x] : hc_class(a))
      for (const auto& [j, y] : hc_class(b)) out = tensor_axpy(out, c * x * y, {{{da, i, db, j}, Scalar(1)}});
    return out;
  }

  Element hh_elem(const Element& a, const Element& b) const { return square_.T.tensor(a, b); }

  // ---- loop homology: functionals on HH, keyed (degree, class index)

  using Dual = std::map<std::pair<int, int>, Scalar>;

  // The functional "coefficient of monomial m" on HH classes of its degree.
  Dual dual_of_monomial(const Element& m) const {
    Dual f;
    if (m.size() != 1) throw DomainError("dual_of_monomial needs a single monomial");
    const auto& [mono, coef] = *m.terms().begin();
    check_degree(mono.deg, "dual class");
    for (std::size_t i = 0; i < C_.HH.dim(mono.deg); ++i) {
      Scalar c = C_.HH.representative(mono.deg, i).coefficient(mono);
      if (sgn(c)) f[{mono.deg, int(i)}] = c / coef;
    }
    return f;
  }

  static std::optional<int> dual_degree(const Dual& a) {
    if (a.empty()) return std::nullopt;
    return a.begin()->first.first;
  }

  // Loop product: (a • b)(c) = (a ⊗ b)(Dlp c).
  Dual loop_product(const Dual& a, const Dual& b) const {
    Dual out;
    auto da = dual_degree(a), db = dual_degree(b);
    if (!da || !db) return out;
    const int n = *da + *db - dimension();
    if (n < 0) return out;
    check_degree(*da + *db, "loop product");
    for (std::size_t c = 0; c < C_.HH.dim(n); ++c) {
      TensorCoords t = dlp(C_.HH.representative(n, c));
      Scalar v = 0;
      for (const auto& [k, coef] : t) {
        auto [d1, i1, d2, i2] = k;
        auto fa = a.find({d1, i1});
        auto fb = b.find({d2, i2});
        if (fa != a.end() && fb != b.end()) v += coef * fa->second * fb->second;
      }
      if (sgn(v)) out[{n, int(c)}] = v;
    }
    return out;
  }

  // Δ(a)(c) = a(H(s) c).
  Dual delta_op(const Dual& a) const {
    Dual out;
    auto da = dual_degree(a);
    if (!da) return out;
    const int n = *da + 1;
    check_degree(n, "BV operator");
    const auto& cols = Hs_.columns.at(n);
    for (std::size_t c = 0; c < cols.size(); ++c) {
      Scalar v = 0;
      for (const auto& [j, x] : cols[c]) {
        auto f = a.find({*da, j});
        if (f != a.end()) v += x * f->second;
      }
      if (sgn(v)) out[{n, int(c)}] = v;
    }
    return out;
  }

  // Gravity bracket on ker Δ̃: ± Δ(a_1 • ... • a_n), sign
  // (-1)^{(n-1)|a_1| + ... + |a_{n-1}|} with loop-homology degrees |a| = d - deg.
  Dual gravity(const std::vector<Dual>& args) const {
    if (args.size() < 2) throw DomainError("gravity bracket needs at least two arguments");
    Dual p = args[0];
    int sign_exp = 0;
    for (std::size_t k = 0; k < args.size(); ++k) {
      auto d = dual_degree(args[k]);
      if (!d) return {};
      sign_exp += static_cast<int>(args.size() - 1 - k) * (dimension() - *d);
      if (k) p = loop_product(p, args[k]);
    }
    Dual r = delta_op(p);
    if (is_odd(sign_exp))
      for (auto& [k, v] : r) v = -v;
    return r;
  }

  Dual bracket(const Dual& a, const Dual& b) const { return gravity({a, b}); }

  Dual dual_scale(Dual a, const Scalar& c) const {
    for (auto& [k, v] : a) v *= c;
    return a;
  }

 private:
  void check_degree(int n, const std::string& what) const {
    if (n > max_degree_) throw DomainError(what + " needs degree " + std::to_string(n) + " beyond --max-degree " + std::to_string(max_degree_));
  }

  std::shared_ptr<const CyclicModel> E_;
  int max_degree_;
  LoopSquare square_;
  ShriekData shriek_;
  CompRepresentative comp_;
  SectionMap section_;
  ConnesMaps C_;
  KunnethCoordinates kunneth_;
  AlgebraMap diag_proj_;
  InducedMap Hs_;
};

// String bracket on the dual of HC: entry (a, b) has
// [a*, b*](c) = (a* ⊗ b*)(Dsb c), over sources c with |c| + d <= max_degree.
struct BracketEntry {
  int d1, i1, d2, i2;
  StringPipeline::Dual value;
};

inline std::vector<BracketEntry> string_bracket_table(const StringPipeline& S, int max_degree) {
  std::map<std::tuple<int, int, int, int>, StringPipeline::Dual> acc;
  const int top = std::min(max_degree, S.max_degree());
  for (int n = 1; n + S.dimension() <= top; ++n) {
    const auto reps = S.connes().HC.representatives(n);
    for (std::size_t c = 0; c < reps.size(); ++c)
      for (const auto& [k, v] : S.dsb(reps[c])) acc[k][{n, int(c)}] = v;
  }
  std::vector<BracketEntry> out;
  for (auto& [k, v] : acc) {
    auto [d1, i1, d2, i2] = k;
    out.push_back({d1, i1, d2, i2, std::move(v)});
  }
  return out;
}

// ---------------------------------------------------------------- Lie groups

// For a Lie group model ∧(x_1..x_N), d = 0: the indecomposable x_j of the loop
// homology is dual to the complementary monomial Π_{i≠j} x_i, and the loop
// generator y_j is dual to (Π x_i) x̄_j.
inline StringPipeline::Dual lie_indecomposable(const StringPipeline& S, std::size_t j) {
  const LoopModel& L = S.loop_model();
  Element m = L.alg->one();
  for (std::size_t i = 0; i < L.nbase; ++i)
    if (i != j) m = L.alg->multiply(m, L.alg->gen(i));
  return S.dual_of_monomial(m);
}

inline StringPipeline::Dual lie_loop_generator(const StringPipeline& S, std::size_t j) {
  const LoopModel& L = S.loop_model();
  Element m = L.alg->one();
  for (std::size_t i = 0; i < L.nbase; ++i) m = L.alg->multiply(m, L.alg->gen(i));
  return S.dual_of_monomial(L.alg->multiply(m, L.alg->gen(L.bar(j))));
}

inline StringPipeline::Dual loop_power(const StringPipeline& S, const StringPipeline::Dual& a, int k) {
  StringPipeline::Dual p = a;
  for (int i = 1; i < k; ++i) p = S.loop_product(p, a);
  return p;
}

// ---------------------------------------------------------------- named classes of the 11-manifold

// ζ_{p,q} = x̄^p ȳ^q / p!q!, η_{p,q} = β(xz x̄^{p-1} ȳ^q)/p!q! (p ≥ 1),
// η_{0,q} = β(yz ȳ^{q-1})/q!, θ_r = β(xyz z̄^{r-1}); all as cycles of E.
struct NamedClasses {
  const StringPipeline* S = nullptr;

  Element parse(const std::string& t) const { return S->model().parse(t); }
  Element beta(const std::string& t) const { return S->model().s(parse(t)); }
  static std::string mono(const std::string& g, int k) {
    if (k == 0) return "";
    return g + (k > 1 ? "^" + std::to_string(k) : "");
  }
  static std::string join(std::initializer_list<std::string> parts) {
    std::string s;
    for (const auto& p : parts)
      if (!p.empty()) s += (s.empty() ? "" : "*") + p;
    return s.empty() ? "1" : s;
  }

  Element zeta(int p, int q) const {
    return parse(join({mono("x'", p), mono("y'", q)})) * (Scalar(1) / (factorial(p) * factorial(q)));
  }
  Element eta(int p, int q) const {
    if (p == 0 && q == 0) throw DomainError("eta_{0,0} is not defined");
    if (p >= 1) return beta(join({"x", "z", mono("x'", p - 1), mono("y'", q)})) * (Scalar(1) / (factorial(p) * factorial(q)));
    return beta(join({"y", "z", mono("y'", q - 1)})) * (Scalar(1) / factorial(q));
  }
  Element theta(int r) const { return beta(join({"x", "y", "z", mono("z'", r - 1)})); }
};

// True when the base is ∧(x, y, z), |x| = |y| = 3, |z| = 5, dz = xy.
inline bool is_nonformal_11_manifold(const FreeCDGA& m) {
  const Algebra& a = *m.alg;
  if (a.size() != 3) return false;
  int x = a.find("x"), y = a.find("y"), z = a.find("z");
  if (x < 0 || y < 0 || z < 0) return false;
  if (a.generator(x).degree != 3 || a.generator(y).degree != 3 || a.generator(z).degree != 5) return false;
  return m.d.value(x).is_zero() && m.d.value(y).is_zero() && m.d.value(z) == a.multiply(a.gen("x"), a.gen("y"));
}

// Named HC classes of one degree: ζ, η, θ and the powers of u.
inline std::vector<std::pair<std::string, Element>> named_classes(const StringPipeline& S, int n) {
  NamedClasses N{&S};
  std::vector<std::pair<std::string, Element>> out;
  auto idx = [](int a, int b) { return "_{" + std::to_string(a) + "," + std::to_string(b) + "}"; };
  if (n == 0) out.emplace_back("1", S.model().alg->one());
  if (n > 0 && n % 2 == 0) out.emplace_back("u^" + std::to_string(n / 2), S.model().parse("u^" + std::to_string(n / 2)));
  if (n > 0 && n % 2 == 0)
    for (int p = 0; p <= n / 2; ++p) out.emplace_back("zeta" + idx(p, n / 2 - p), N.zeta(p, n / 2 - p));
  if (n >= 5 && n % 2 == 1)
    for (int p = 0; p <= (n - 3) / 2; ++p) out.emplace_back("eta" + idx(p, (n - 3) / 2 - p), N.eta(p, (n - 3) / 2 - p));
  if (n >= 10 && (n - 6) % 4 == 0) out.emplace_back("theta_" + std::to_string((n - 6) / 4), N.theta((n - 6) / 4));
  return out;
}

// Rewrites HC ⊗ HC coordinates in the named basis; nullopt if some degree is
// not spanned by named classes.
inline std::optional<std::string> express_named(const StringPipeline& S, const TensorCoords& t) {
  std::map<int, std::vector<std::string>> names;
  std::map<int, std::vector<SparseVec>> inverse;  // per degree: class i -> named coordinates
  auto prepare = [&](int n) {
    if (inverse.count(n)) return true;
    auto named = named_classes(S, n);
    Echelon ech;
    for (std::size_t a = 0; a < named.size(); ++a) ech.insert(S.hc_class(named[a].second), unit_vector(int(a)));
    std::vector<SparseVec> inv;
    for (std::size_t i = 0; i < S.connes().HC.dim(n); ++i) {
      SparseVec coords;
      if (!ech.reduce(unit_vector(int(i)), &coords).empty()) return false;
      inv.push_back(coords);
    }
    for (auto& [nm, e] : named) names[n].push_back(nm);
    inverse[n] = std::move(inv);
    return true;
  };
  std::map<std::pair<std::string, std::string>, Scalar> acc;
  for (const auto& [k, c] : t) {
    auto [d1, i1, d2, i2] = k;
    if (!prepare(d1) || !prepare(d2)) return std::nullopt;
    for (const auto& [a, x] : inverse[d1][static_cast<std::size_t>(i1)])
      for (const auto& [b, y] : inverse[d2][static_cast<std::size_t>(i2)])
        acc[{names[d1][static_cast<std::size_t>(a)], names[d2][static_cast<std::size_t>(b)]}] += c * x * y;
  }
  std::string s;
  for (const auto& [k, c] : acc) {
    if (sgn(c) == 0) continue;
    Scalar a = abs(c);
    s += s.empty() ? (sgn(c) < 0 ? "-" : "") : (sgn(c) < 0 ? " - " : " + ");
    if (a != 1) s += to_string(a) + " ";
    s += k.first + " (x) " + k.second;
  }
  return s.empty() ? "0" : s;
}

// Closed formulas for Dsb on the 11-manifold, as HC ⊗ HC coordinates.
inline TensorCoords dsb_zeta_formula(const StringPipeline& S, int p, int q) {
  NamedClasses N{&S};
  TensorCoords out;
  for (int i = 0; i <= p + 1; ++i)
    for (int j = 0; j <= q + 1; ++j) {
      Scalar c = i * (q + 1) - j * (p + 1);
      if (sgn(c) == 0) continue;
      out = tensor_axpy(out, Scalar(1), S.hc_tensor(N.zeta(i, j), N.eta(p + 1 - i, q + 1 - j), c));
      out = tensor_axpy(out, Scalar(1), S.hc_tensor(N.eta(i, j), N.zeta(p + 1 - i, q + 1 - j), c));
    }
  return out;
}

inline TensorCoords dsb_eta_formula(const StringPipeline& S, int p, int q) {
  NamedClasses N{&S};
  TensorCoords out = S.hc_tensor(N.theta(2), N.zeta(p, q));
  out = tensor_axpy(out, Scalar(-1), S.hc_tensor(N.zeta(p, q), N.theta(2)));
  for (int i = 0; i <= p + 1; ++i)
    for (int j = 0; j <= q + 1; ++j) {
      Scalar c = i * (q + 1) - j * (p + 1);
      if (sgn(c) == 0) continue;
      out = tensor_axpy(out, Scalar(-1), S.hc_tensor(N.eta(i, j), N.eta(p + 1 - i, q + 1 - j), c));
    }
  return out;
}

// Closed formulas for Dlp on the 11-manifold, as chains of L ⊗ L.
inline Element dlp_bars_formula(const StringPipeline& S, int p, int q) {
  const LoopModel& L = S.loop_model();
  auto el = [&](std::initializer_list<std::string> parts) { return L.parse(NamedClasses::join(parts)); };
  Element a = el({NamedClasses::mono("x'", p), NamedClasses::mono("y'", q)});
  Element xyz = el({"x", "y", "z"});
  Element out = S.hh_elem(xyz, a);
  out += S.hh_elem(a, xyz);
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= q; ++j) {
      Scalar c = binomial(p, i) * binomial(q, j);
      auto bl = [&](const char* g) { return el({g, NamedClasses::mono("x'", i), NamedClasses::mono("y'", j)}); };
      auto br = [&](const char* g) { return el({g, NamedClasses::mono("x'", p - i), NamedClasses::mono("y'", q - j)}); };
      out += Scalar(-c) * S.hh_elem(bl("x"), br("y*z"));
      out += c * S.hh_elem(bl("y"), br("x*z"));
      out += Scalar(-c) * S.hh_elem(bl("x*z"), br("y"));
      out += c * S.hh_elem(bl("y*z"), br("x"));
    }
  return out;
}

inline Element eta_lift(const LoopModel& L, int p, int q) {
  using N = NamedClasses;
  return L.parse(N::join({"z", N::mono("x'", p), N::mono("y'", q)})) -
         L.parse(N::join({"x", N::mono("x'", p - 1), N::mono("y'", q), "z'"}));
}

inline Element dlp_eta_formula(const StringPipeline& S, int p, int q) {
  using N = NamedClasses;
  const LoopModel& L = S.loop_model();
  auto el = [&](std::initializer_list<std::string> parts) { return L.parse(N::join(parts)); };
  Element E = eta_lift(L, p, q);
  Element xyz = el({"x", "y", "z"});
  Element rest = el({"x", N::mono("x'", p - 1), N::mono("y'", q)});
  Element xzrest = el({"x", "z", N::mono("x'", p - 1), N::mono("y'", q)});
  Element out = S.hh_elem(xyz, E);
  out += S.hh_elem(E, xyz);
  out -= S.hh_elem(el({"x", "y", "z", "z'"}), rest);
  out += S.hh_elem(rest, el({"x", "y", "z", "z'"}));
  out -= S.hh_elem(el({"x", "y", "z'"}), xzrest);
  out -= S.hh_elem(xzrest, el({"x", "y", "z'"}));
  for (int i = 0; i <= p; ++i)
    for (int j = 0; j <= q; ++j) {
      Scalar c = binomial(p, i) * binomial(q, j);
      auto bl = [&](const char* g) { return el({g, N::mono("x'", i), N::mono("y'", j)}); };
      auto br = [&](const char* g) { return el({g, N::mono("x'", p - i), N::mono("y'", q - j)}); };
      out += Scalar(-c) * S.hh_elem(bl("x*z"), br("y*z"));
      out += c * S.hh_elem(bl("y*z"), br("x*z"));
    }
  return out;
}

inline Element dlp_theta_formula(const StringPipeline& S, int r) {
  using N = NamedClasses;
  const LoopModel& L = S.loop_model();
  auto el = [&](std::initializer_list<std::string> parts) { return L.parse(N::join(parts)); };
  Element out = S.square().T.alg->zero();
  for (int i = 0; i <= r; ++i) {
    Scalar c = binomial(r, i);
    out += Scalar(-c) * S.hh_elem(el({"x", "y", "z", N::mono("z'", i)}), el({"x", "y", N::mono("z'", r - i)}));
    out += c * S.hh_elem(el({"x", "y", N::mono("z'", i)}), el({"x", "y", "z", N::mono("z'", r - i)}));
  }
  return out;
}

// Dsb sources matching the closed formulas: π of ζ, η, θ as cycles of E.
inline TensorCoords dsb_of_zeta(const StringPipeline& S, int p, int q, DsbConvention c = standard_dsb_convention()) {
  return S.dsb(NamedClasses{&S}.zeta(p, q), c);
}
inline TensorCoords dsb_of_eta(const StringPipeline& S, int p, int q, DsbConvention c = standard_dsb_convention()) {
  return S.dsb(NamedClasses{&S}.eta(p, q), c);
}
inline TensorCoords dsb_of_theta(const StringPipeline& S, int r, DsbConvention c = standard_dsb_convention()) {
  return S.dsb(NamedClasses{&S}.theta(r), c);
}

// Graded flip τ_k(a⊗b) = (-1)^{(|a|+k)(|b|+k)} b⊗a on tensor coordinates.
inline TensorCoords flip(const TensorCoords& t, int shift = 0) {
  TensorCoords out;
  for (const auto& [k, c] : t) {
    auto [d1, i1, d2, i2] = k;
    out[{d2, i2, d1, i1}] = is_odd((d1 + shift) * (d2 + shift)) ? Scalar(-c) : c;
  }
  return out;
}

// ---------------------------------------------------------------- classifying spaces

// H = Q[y_1..y_N] ⊗ ∧(x_1^v..x_N^v), |y_i| = 2m_i, |x_i^v| = -(2m_i - 1).
struct BGAlgebra {
  std::vector<int> m;
  std::shared_ptr<Algebra> alg;  // y_1..y_N, then x_1v..x_Nv
  std::size_t N = 0;
  int dim_G = 0;

  std::size_t y(std::size_t i) const { return i; }
  std::size_t x(std::size_t i) const { return N + i; }
  Element parse(std::string_view t) const { return parse_element(*alg, t); }

  Element top() const {
    Element r = alg->one();
    for (std::size_t i = 0; i < N; ++i) r = alg->multiply(r, alg->gen(x(i)));
    return r;
  }

  // Monomial basis of degree h (finite since the exterior part is finite).
  std::vector<Monomial> basis(int h) const {
    std::vector<Monomial> out;
    for (unsigned S = 0; S < (1u << N); ++S) {
      int rest = h;
      std::vector<std::uint16_t> e(2 * N, 0);
      for (std::size_t i = 0; i < N; ++i)
        if (S >> i & 1u) {
          e[x(i)] = 1;
          rest += 2 * m[i] - 1;
        }
      if (rest < 0) continue;
      std::function<void(std::size_t, int)> rec = [&](std::size_t i, int r) {
        if (i == N) {
          if (r == 0) out.push_back(alg->make_monomial(e));
          return;
        }
        for (int k = r / (2 * m[i]); k >= 0; --k) {
          e[y(i)] = static_cast<std::uint16_t>(k);
          rec(i + 1, r - 2 * m[i] * k);
        }
        e[y(i)] = 0;
      };
      rec(0, rest);
    }
    std::sort(out.begin(), out.end(), MonomialOrder{});
    return out;
  }
};

inline BGAlgebra make_bg(const std::vector<int>& m) {
  BGAlgebra A;
  A.m = m;
  A.N = m.size();
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] < 1) throw DomainError("BG generator degrees must be positive");
    gens.push_back({"y" + std::to_string(i + 1), 2 * m[i], Tag::base, int(i)});
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    gens.push_back({"x" + std::to_string(i + 1) + "v", -(2 * m[i] - 1), Tag::other, int(i)});
    A.dim_G += 2 * m[i] - 1;
  }
  A.alg = std::make_shared<Algebra>(std::move(gens));
  return A;
}

// BG of a compact Lie group from its (formal) Sullivan model ∧(x_i), d = 0.
inline BGAlgebra bg_from_model(const FreeCDGA& model) {
  std::vector<int> m;
  for (std::size_t i = 0; i < model.alg->size(); ++i) {
    int d = model.alg->generator(i).degree;
    if (!is_odd(d) || !model.d.value(i).is_zero())
      throw DomainError("bg needs a Lie group model: odd generators with zero differential");
    m.push_back((d + 1) / 2);
  }
  return make_bg(m);
}

// Δ(y^k x_{i_1}..x_{i_s}) = Σ_j (-1)^{d_j} k_{i_j} y^{k - e_{i_j}} x_{i_1}..x̂_{i_j}..x_{i_s}.
inline Element bg_delta(const BGAlgebra& A, const Element& a) {
  Element out(A.alg.get());
  for (const auto& [m, c] : a.terms()) {
    int before = 0;
    for (std::size_t i = 0; i < A.N; ++i) {
      if (!m.exp[A.x(i)]) continue;
      const int k = m.exp[A.y(i)];
      if (k > 0) {
        std::vector<std::uint16_t> e = m.exp;
        e[A.y(i)] = static_cast<std::uint16_t>(k - 1);
        e[A.x(i)] = 0;
        Scalar v = c * k;
        if (before % 2) v = -v;
        out.add_term(A.alg->make_monomial(e), v);
      }
      ++before;
    }
  }
  return out;
}

// Classes of the dual string cobracket's domain: cokernel classes (elements of
// H mod Im Δ and the unit class) or powers of u.
struct BGClass {
  std::optional<Element> coker;
  int u_power = 0;

  static BGClass of(Element e) { return BGClass{std::move(e), 0}; }
  static BGClass u(int l) { return BGClass{std::nullopt, l}; }
};

// Degree in the shifted equivariant grading: cokernel classes sit two below
// their H-degree, u^l at 2l - dim G - 1.
inline int bg_degree(const BGAlgebra& A, const BGClass& c) {
  if (c.coker) {
    auto d = c.coker->degree();
    if (!d) throw DomainError("class is not homogeneous");
    return *d - 2;
  }
  return 2 * c.u_power - A.dim_G - 1;
}

// π: cokernel class -> Δ(class); u^0 -> the unit class (top exterior product); u^l -> 0.
inline Element bg_pi(const BGAlgebra& A, const BGClass& c) {
  if (c.coker) return bg_delta(A, *c.coker);
  return c.u_power == 0 ? A.top() : A.alg->zero();
}

// Reduced cokernel in the degree of w: canonical residual of w modulo Im Δ and the unit class.
inline Element bg_coker(const BGAlgebra& A, const Element& w) {
  auto h = w.degree();
  if (!h) return A.alg->zero();
  std::vector<Monomial> basis = A.basis(*h);
  std::map<Monomial, int, MonomialOrder> idx;
  for (std::size_t i = 0; i < basis.size(); ++i) idx.emplace(basis[i], int(i));
  auto vec = [&](const Element& e) {
    SparseVec v;
    for (const auto& [m, c] : e.terms()) v.emplace_back(idx.at(m), c);
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
    return v;
  };
  Echelon ech;
  for (const auto& m : A.basis(*h + 1)) ech.insert(vec(bg_delta(A, A.alg->term(m))));
  if (*h == -A.dim_G) ech.insert(vec(A.top()));
  SparseVec r = ech.reduce(vec(w));
  Element out(A.alg.get());
  for (const auto& [i, c] : r) out.add_term(basis[static_cast<std::size_t>(i)], c);
  return out;
}

// [x_1, ..., x_n] = (-1)^{(n-1)|x_1| + ... + |x_{n-1}|} Coker(π x_1 ⊙ ... ⊙ π x_n).
inline Element bg_gravity(const BGAlgebra& A, const std::vector<BGClass>& args) {
  if (args.size() < 2) throw DomainError("gravity bracket needs at least two arguments");
  Element p = A.alg->one();
  int sign_exp = 0;
  for (std::size_t k = 0; k < args.size(); ++k) {
    p = A.alg->multiply(p, bg_pi(A, args[k]));
    sign_exp += static_cast<int>(args.size() - 1 - k) * bg_degree(A, args[k]);
  }
  Element r = bg_coker(A, p);
  return is_odd(sign_exp) ? -r : r;
}

inline Element bg_cobracket(const BGAlgebra& A, const BGClass& a, const BGClass& b) { return bg_gravity(A, {a, b}); }

// Seven-term identity for Δ on H.
inline Element bv_seven_term(const BGAlgebra& A, const Element& a, const Element& b, const Element& c) {
  auto mul = [&](const Element& p, const Element& q) { return A.alg->multiply(p, q); };
  auto D = [&](const Element& p) { return bg_delta(A, p); };
  const int da = a.degree().value_or(0), db = b.degree().value_or(0);
  Scalar sa = is_odd(da) ? -1 : 1, sab = is_odd((da + 1) * db) ? -1 : 1, sadb = is_odd(da + db) ? -1 : 1;
  Element lhs = D(mul(mul(a, b), c));
  Element rhs = mul(D(mul(a, b)), c) + sa * mul(a, D(mul(b, c))) + sab * mul(b, D(mul(a, c))) -
                mul(mul(D(a), b), c) - sa * mul(mul(a, D(b)), c) - sadb * mul(mul(a, b), D(c));
  return lhs - rhs;
}

}  // namespace loopalg
