#pragma once

// The Hochschild model L = (∧(V ⊕ V̄), δ) with s, the cyclic model
// E = (L[u], δ + u s), word-length components, and the Gysin model L^ = E ⊗ ∧(e).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "loopalg/algebra.hpp"
#include "loopalg/model_io.hpp"

namespace loopalg {

// Copies `a` into `tgt`, whose generator list must extend a's algebra.
inline Element embed(const Element& a, const Algebra* tgt) {
  Element r(tgt);
  for (const auto& [m, c] : a.terms()) {
    Monomial n{m.deg, m.exp};
    n.exp.resize(tgt->size(), 0);
    r.add_term(n, c);
  }
  return r;
}

// Drops every term using a generator beyond tgt's list (e.g. u -> 0).
inline Element truncate(const Element& a, const Algebra* tgt) {
  Element r(tgt);
  const std::size_t n = tgt->size();
  for (const auto& [m, c] : a.terms()) {
    bool keep = true;
    for (std::size_t i = n; i < m.exp.size(); ++i)
      if (m.exp[i]) keep = false;
    if (!keep) continue;
    Monomial t{m.deg, std::vector<std::uint16_t>(m.exp.begin(), m.exp.begin() + static_cast<std::ptrdiff_t>(n))};
    r.add_term(t, c);
  }
  return r;
}

inline Derivation extend_derivation(const Derivation& d, const Algebra* tgt, std::vector<Element> extra) {
  std::vector<Element> vals;
  for (const auto& v : d.values()) vals.push_back(embed(v, tgt));
  for (auto& e : extra) vals.push_back(std::move(e));
  return Derivation(tgt, d.degree(), std::move(vals));
}

struct LoopModel {
  FreeCDGA base;
  std::shared_ptr<Algebra> alg;  // V then V̄, same order
  std::size_t nbase = 0;
  Derivation delta;  // degree +1
  Derivation s;      // degree -1

  std::size_t bar(std::size_t i) const { return nbase + i; }
  int word_length(const Monomial& m) const {
    int w = 0;
    for (std::size_t i = nbase; i < 2 * nbase; ++i) w += m.exp[i];
    return w;
  }
  Element from_base(const Element& a) const { return embed(a, alg.get()); }
  Element parse(std::string_view text) const { return parse_element(*alg, text); }
};

struct CyclicModel {
  std::shared_ptr<const LoopModel> L;
  std::shared_ptr<Algebra> alg;  // L's generators, then u
  std::size_t u = 0;
  Derivation D;      // δ + u s
  Derivation delta;  // δ with δ(u) = 0
  Derivation s;      // s with s(u) = 0

  int u_power(const Monomial& m) const { return m.exp[u]; }
  int word_length(const Monomial& m) const { return L->word_length(m); }
  // D preserves word length minus u-power.
  int component(const Monomial& m) const { return word_length(m) - u_power(m); }
  Element from_L(const Element& a) const { return embed(a, alg.get()); }
  Element to_L(const Element& a) const { return truncate(a, L->alg.get()); }
  Element times_u(const Element& a) const { return alg->multiply(alg->gen(u), a); }
  Element parse(std::string_view text) const { return parse_element(*alg, text); }
};

inline void require_zero(const Derivation& d, const std::string& what) {
  for (std::size_t i = 0; i < d.values().size(); ++i)
    if (!d.value(i).is_zero())
      throw ConsistencyError(what + " fails on generator '" + d.algebra()->generator(i).name +
                             "': " + format_element(d.value(i)));
}

inline std::shared_ptr<const LoopModel> build_L(const FreeCDGA& model) {
  const Algebra& b = *model.alg;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.generator(i).degree < 2)
      throw DomainError("base not simply-connected: generator '" + b.generator(i).name + "' has degree " +
                        std::to_string(b.generator(i).degree));
  auto L = std::make_shared<LoopModel>();
  L->base = model;
  L->nbase = b.size();
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < b.size(); ++i) {
    Generator g = b.generator(i);
    gens.push_back(Generator{g.name, g.degree, Tag::base, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < b.size(); ++i) {
    Generator g = b.generator(i);
    gens.push_back(Generator{g.name + "'", g.degree - 1, Tag::bar, static_cast<int>(i)});
  }
  L->alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = L->alg.get();
  const std::size_t n = b.size();
  std::vector<Element> sv(2 * n, A->zero());
  for (std::size_t i = 0; i < n; ++i) sv[i] = A->gen(n + i);
  L->s = Derivation(A, -1, sv);
  std::vector<Element> dv(2 * n, A->zero());
  for (std::size_t i = 0; i < n; ++i) dv[i] = embed(model.d.value(i), A);
  for (std::size_t i = 0; i < n; ++i) dv[n + i] = -L->s(dv[i]);
  L->delta = Derivation(A, 1, dv);

  require_zero(graded_commutator(L->delta, L->delta), "delta^2 = 0");
  require_zero(graded_commutator(L->s, L->s), "s^2 = 0");
  require_zero(graded_commutator(L->delta, L->s), "delta s + s delta = 0");
  return L;
}

inline std::shared_ptr<const CyclicModel> build_E(std::shared_ptr<const LoopModel> L) {
  auto E = std::make_shared<CyclicModel>();
  E->L = L;
  std::vector<Generator> gens = L->alg->generators();
  gens.push_back(Generator{"u", 2, Tag::u, -1});
  E->alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = E->alg.get();
  E->u = A->size() - 1;
  E->delta = extend_derivation(L->delta, A, {A->zero()});
  E->s = extend_derivation(L->s, A, {A->zero()});
  std::vector<Element> Dv;
  for (std::size_t i = 0; i < A->size(); ++i)
    Dv.push_back(E->delta.value(i) + A->multiply(A->gen(E->u), E->s.value(i)));
  E->D = Derivation(A, 1, Dv);
  require_zero(graded_commutator(E->D, E->D), "D^2 = 0");
  return E;
}

// ---------------------------------------------------------------- Gysin model

struct GysinReport {
  bool pass = true;
  int max_degree = 0;
  std::size_t monomials_checked = 0;
  std::string failure;  // which identity failed
  std::optional<Element> witness;
};

// L^ = (E ⊗ ∧(e), δ^) with δ^(e) = u, the section ι(α) = α + (-1)^|α| s(α) e,
// the projection ρ (u, e -> 0) and the fibre integral ∫_e.
struct GysinModel {
  std::shared_ptr<const CyclicModel> E;
  std::shared_ptr<Algebra> alg;
  std::size_t e = 0;
  Derivation delta_hat;
  AlgebraMap iota;  // L -> L^

  Element rho(const Element& a) const { return truncate(a, E->L->alg.get()); }
  // ∫_e(α0 + α1 e) = (-1)^(|α1|+1) α1, the sign that makes ∫_e ι = s.
  Element integrate(const Element& a) const {
    Element r(E->L->alg.get());
    const std::size_t nL = E->L->alg->size();
    for (const auto& [m, c] : a.terms()) {
      if (!m.exp[e]) continue;
      if (m.exp[E->u]) continue;  // lands in E's u-part; projected away in L
      Monomial t{m.deg - 1, std::vector<std::uint16_t>(m.exp.begin(), m.exp.begin() + static_cast<std::ptrdiff_t>(nL))};
      r.add_term(t, is_odd(t.deg) ? c : Scalar(-c));
    }
    return r;
  }
};

inline GysinModel build_gysin(std::shared_ptr<const CyclicModel> E) {
  GysinModel G;
  G.E = E;
  std::vector<Generator> gens = E->alg->generators();
  gens.push_back(Generator{"e", 1, Tag::e, -1});
  G.alg = std::make_shared<Algebra>(std::move(gens));
  const Algebra* A = G.alg.get();
  G.e = A->size() - 1;
  G.delta_hat = extend_derivation(E->D, A, {A->gen(E->u)});
  require_zero(graded_commutator(G.delta_hat, G.delta_hat), "delta^ squared = 0");
  const LoopModel& L = *E->L;
  std::vector<Element> images;
  for (std::size_t i = 0; i < L.alg->size(); ++i) {
    Element g = embed(L.alg->gen(i), A);
    Element sg = A->multiply(embed(L.s.value(i), A), A->gen(G.e));
    if (L.alg->generator(i).odd()) sg *= Scalar(-1);
    images.push_back(g + sg);
  }
  G.iota = AlgebraMap(L.alg.get(), A, std::move(images));
  return G;
}

// Verifies on every monomial of L up to max_degree: ι is a chain map, ι agrees
// with its closed formula, ρι = id and ∫_e ι = s.
inline GysinReport gysin_check(std::shared_ptr<const CyclicModel> E, int max_degree) {
  GysinModel G = build_gysin(E);
  const LoopModel& L = *E->L;
  const Algebra* A = G.alg.get();
  GysinReport rep;
  rep.max_degree = max_degree;
  auto fail = [&](const std::string& what, const Element& w) {
    rep.pass = false;
    rep.failure = what;
    rep.witness = w;
  };
  for (int n = 0; n <= max_degree && rep.pass; ++n) {
    for (const Monomial& m : degree_basis(*L.alg, n)) {
      Element a = L.alg->term(m);
      if (a.is_zero()) continue;
      ++rep.monomials_checked;
      Element ia = G.iota(a);
      Element closed = embed(a, A) + A->multiply(embed(L.s(a), A), A->gen(G.e)) * Scalar(is_odd(n) ? -1 : 1);
      if (!(ia == closed)) { fail("iota differs from a + (-1)^|a| s(a) e", a); break; }
      if (!(G.delta_hat(ia) == G.iota(L.delta(a)))) { fail("iota is not a chain map", a); break; }
      if (!(G.rho(ia) == a)) { fail("rho iota != id", a); break; }
      if (!(G.integrate(ia) == L.s(a))) { fail("integral over e of iota != s", a); break; }
    }
  }
  return rep;
}

}  // namespace loopalg
