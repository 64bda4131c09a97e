#pragma once

// Free graded-commutative algebras over Q with Koszul signs.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loopalg/errors.hpp"
#include "loopalg/scalar.hpp"

namespace loopalg {

enum class Tag { base, bar, u, e, left, right, path, other };

struct Generator {
  std::string name;
  int degree = 0;
  Tag tag = Tag::base;
  int origin = -1;  // index of the base generator a bar/slot copy came from

  bool odd() const { return is_odd(degree); }
};

struct Monomial {
  int deg = 0;
  std::vector<std::uint16_t> exp;

  bool operator==(const Monomial& o) const { return deg == o.deg && exp == o.exp; }
  bool is_one() const {
    return std::all_of(exp.begin(), exp.end(), [](auto e) { return e == 0; });
  }
};

// Canonical order: total degree, then larger exponents of earlier generators first.
struct MonomialOrder {
  bool operator()(const Monomial& a, const Monomial& b) const {
    if (a.deg != b.deg) return a.deg < b.deg;
    return a.exp > b.exp;
  }
};

struct MonomialHash {
  std::size_t operator()(const Monomial& m) const {
    std::size_t h = static_cast<std::size_t>(m.deg) * 0x9e3779b97f4a7c15ULL;
    for (auto e : m.exp) h = (h ^ e) * 0x100000001b3ULL + 0x9e37;
    return h;
  }
};

class Algebra;

class Element {
 public:
  using Terms = std::map<Monomial, Scalar, MonomialOrder>;

  Element() = default;
  explicit Element(const Algebra* alg) : alg_(alg) {}

  const Algebra* algebra() const { return alg_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  void add_term(const Monomial& m, const Scalar& c) {
    if (sgn(c) == 0) return;
    auto [it, fresh] = terms_.try_emplace(m, c);
    if (!fresh) {
      it->second += c;
      if (sgn(it->second) == 0) terms_.erase(it);
    }
  }

  Scalar coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Scalar(0) : it->second;
  }

  // Degree if homogeneous and nonzero.
  std::optional<int> degree() const {
    if (terms_.empty()) return std::nullopt;
    int d = terms_.begin()->first.deg;
    if (terms_.rbegin()->first.deg != d) return std::nullopt;
    return d;
  }

  Element& operator+=(const Element& o) {
    adopt(o);
    for (const auto& [m, c] : o.terms_) add_term(m, c);
    return *this;
  }
  Element& operator-=(const Element& o) {
    adopt(o);
    for (const auto& [m, c] : o.terms_) add_term(m, -c);
    return *this;
  }
  Element& operator*=(const Scalar& c) {
    if (sgn(c) == 0) {
      terms_.clear();
      return *this;
    }
    for (auto& [m, v] : terms_) v *= c;
    return *this;
  }

  friend Element operator+(Element a, const Element& b) { return a += b; }
  friend Element operator-(Element a, const Element& b) { return a -= b; }
  friend Element operator-(Element a) { return a *= Scalar(-1); }
  friend Element operator*(const Scalar& c, Element a) { return a *= c; }
  friend Element operator*(Element a, const Scalar& c) { return a *= c; }
  friend Element operator*(const Element& a, const Element& b);

  bool operator==(const Element& o) const { return terms_ == o.terms_; }

  // Keep only terms satisfying pred.
  template <class Pred>
  Element filter(Pred pred) const {
    Element r(alg_);
    for (const auto& [m, c] : terms_)
      if (pred(m)) r.terms_.emplace(m, c);
    return r;
  }

 private:
  void adopt(const Element& o) {
    if (!alg_) alg_ = o.alg_;
    else if (o.alg_ && o.alg_ != alg_ && !o.is_zero())
      throw DomainError("operands belong to different algebras");
  }

  const Algebra* alg_ = nullptr;
  Terms terms_;
};

class Algebra {
 public:
  explicit Algebra(std::vector<Generator> gens) : gens_(std::move(gens)) {
    for (std::size_t i = 0; i < gens_.size(); ++i) {
      if (gens_[i].degree == 0) throw DomainError("generator '" + gens_[i].name + "' has degree 0");
    }
  }

  std::size_t size() const { return gens_.size(); }
  const Generator& generator(std::size_t i) const { return gens_[i]; }
  const std::vector<Generator>& generators() const { return gens_; }

  int find(std::string_view name, std::optional<Tag> tag = std::nullopt) const {
    for (std::size_t i = 0; i < gens_.size(); ++i)
      if (gens_[i].name == name && (!tag || gens_[i].tag == *tag)) return static_cast<int>(i);
    return -1;
  }

  int degree_of(const std::vector<std::uint16_t>& exp) const {
    int d = 0;
    for (std::size_t i = 0; i < exp.size(); ++i) d += gens_[i].degree * exp[i];
    return d;
  }

  Monomial one_monomial() const { return Monomial{0, std::vector<std::uint16_t>(gens_.size(), 0)}; }
  Monomial generator_monomial(std::size_t i, int power = 1) const {
    Monomial m = one_monomial();
    m.exp[i] = static_cast<std::uint16_t>(power);
    m.deg = gens_[i].degree * power;
    return m;
  }
  Monomial make_monomial(std::vector<std::uint16_t> exp) const {
    Monomial m{0, std::move(exp)};
    m.exp.resize(gens_.size(), 0);
    m.deg = degree_of(m.exp);
    return m;
  }

  Element zero() const { return Element(this); }
  Element one() const { return term(one_monomial()); }
  Element gen(std::size_t i) const { return term(generator_monomial(i)); }
  Element gen(std::string_view name) const {
    int i = find(name);
    if (i < 0) throw DomainError("unknown generator '" + std::string(name) + "'");
    return gen(static_cast<std::size_t>(i));
  }
  Element term(const Monomial& m, const Scalar& c = Scalar(1)) const {
    Element e(this);
    if (odd_square(m)) return e;
    e.add_term(m, c);
    return e;
  }

  bool odd_square(const Monomial& m) const {
    for (std::size_t i = 0; i < m.exp.size(); ++i)
      if (m.exp[i] > 1 && gens_[i].odd()) return true;
    return false;
  }

  // Number of odd transpositions needed to sort the concatenation a·b into
  // canonical order. Every Koszul sign in the library is derived from this.
  int transpositions(const Monomial& a, const Monomial& b) const {
    int count = 0;
    int odd_in_a_after = 0;
    for (std::size_t i = gens_.size(); i-- > 0;) {
      if (!gens_[i].odd()) continue;
      if (b.exp[i]) count += odd_in_a_after;
      if (a.exp[i]) ++odd_in_a_after;
    }
    return count;
  }

  // a·b as (sign, monomial); nullopt when an odd generator repeats.
  std::optional<std::pair<int, Monomial>> multiply(const Monomial& a, const Monomial& b) const {
    Monomial r{a.deg + b.deg, a.exp};
    for (std::size_t i = 0; i < r.exp.size(); ++i) {
      if (!b.exp[i]) continue;
      if (a.exp[i] && gens_[i].odd()) return std::nullopt;
      r.exp[i] = static_cast<std::uint16_t>(r.exp[i] + b.exp[i]);
    }
    int sign = (transpositions(a, b) % 2) ? -1 : 1;
    return std::make_pair(sign, std::move(r));
  }

  Element multiply(const Element& a, const Element& b) const {
    Element r(this);
    for (const auto& [ma, ca] : a.terms())
      for (const auto& [mb, cb] : b.terms()) {
        auto p = multiply(ma, mb);
        if (!p) continue;
        Scalar c = ca * cb;
        if (p->first < 0) c = -c;
        r.add_term(p->second, c);
      }
    return r;
  }

  Element power(const Element& a, int n) const {
    Element r = one();
    for (int k = 0; k < n; ++k) r = multiply(r, a);
    return r;
  }

 private:
  std::vector<Generator> gens_;
};

using AlgebraPtr = std::shared_ptr<const Algebra>;

inline Element operator*(const Element& a, const Element& b) {
  const Algebra* alg = a.algebra() ? a.algebra() : b.algebra();
  if (!alg) return Element();
  if (a.algebra() && b.algebra() && a.algebra() != b.algebra())
    throw DomainError("operands belong to different algebras");
  return alg->multiply(a, b);
}

// All monomials of degree n in canonical order. Generators of non-positive
// degree are never used. `accept` may prune by a secondary grading.
inline std::vector<Monomial> degree_basis(
    const Algebra& alg, int n,
    const std::function<bool(const Monomial&)>& accept = nullptr) {
  std::vector<Monomial> out;
  if (n < 0) return out;
  const std::size_t g = alg.size();
  std::vector<std::uint16_t> exp(g, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int rest) {
    if (rest == 0) {
      Monomial m{n, exp};
      if (!accept || accept(m)) out.push_back(std::move(m));
      return;
    }
    if (i == g) return;
    const Generator& gen = alg.generator(i);
    if (gen.degree <= 0) {
      rec(i + 1, rest);
      return;
    }
    int maxe = gen.odd() ? 1 : rest / gen.degree;
    if (gen.odd() && gen.degree > rest) maxe = 0;
    for (int e = maxe; e >= 0; --e) {
      exp[i] = static_cast<std::uint16_t>(e);
      rec(i + 1, rest - e * gen.degree);
    }
    exp[i] = 0;
  };
  rec(0, n);
  std::sort(out.begin(), out.end(), MonomialOrder{});
  return out;
}

// A graded derivation given by its values on generators.
class Derivation {
 public:
  Derivation() = default;
  Derivation(const Algebra* alg, int degree) : alg_(alg), degree_(degree), values_(alg->size(), Element(alg)) {}
  Derivation(const Algebra* alg, int degree, std::vector<Element> values)
      : alg_(alg), degree_(degree), values_(std::move(values)) {
    if (values_.size() != alg->size()) throw DomainError("derivation needs one value per generator");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      auto& v = values_[i];
      if (v.is_zero()) {
        v = Element(alg);
        continue;
      }
      if (v.algebra() != alg) throw DomainError("derivation value lives in another algebra");
      auto d = v.degree();
      if (!d || *d != alg->generator(i).degree + degree)
        throw DomainError("derivation value on '" + alg->generator(i).name + "' has wrong degree");
    }
  }

  const Algebra* algebra() const { return alg_; }
  int degree() const { return degree_; }
  const Element& value(std::size_t i) const { return values_[i]; }
  const std::vector<Element>& values() const { return values_; }

  // theta(g1^e1 ... gk^ek) by the Leibniz rule, accumulated into out.
  void apply_monomial(const Monomial& m, const Scalar& coeff, Element& out) const {
    const std::size_t g = alg_->size();
    int prefix_deg = 0;
    for (std::size_t i = 0; i < g; ++i) {
      const int e = m.exp[i];
      if (e == 0) continue;
      const Generator& gen = alg_->generator(i);
      if (!values_[i].is_zero()) {
        // prefix * g^(e-1) in canonical position; suffix holds later generators.
        Monomial left{0, std::vector<std::uint16_t>(g, 0)};
        Monomial right{0, std::vector<std::uint16_t>(g, 0)};
        for (std::size_t j = 0; j < i; ++j) left.exp[j] = m.exp[j];
        left.exp[i] = static_cast<std::uint16_t>(e - 1);
        for (std::size_t j = i + 1; j < g; ++j) right.exp[j] = m.exp[j];
        left.deg = alg_->degree_of(left.exp);
        right.deg = alg_->degree_of(right.exp);
        Scalar base = coeff * e;
        if (is_odd(degree_) && is_odd(prefix_deg)) base = -base;
        for (const auto& [t, c] : values_[i].terms()) {
          auto p1 = alg_->multiply(left, t);
          if (!p1) continue;
          auto p2 = alg_->multiply(p1->second, right);
          if (!p2) continue;
          Scalar v = base * c;
          if (p1->first * p2->first < 0) v = -v;
          out.add_term(p2->second, v);
        }
      }
      prefix_deg += gen.degree * e;
    }
  }

  Element operator()(const Element& a) const {
    Element out(alg_);
    if (a.is_zero()) return out;
    if (a.algebra() != alg_) throw DomainError("derivation applied to an element of another algebra");
    for (const auto& [m, c] : a.terms()) apply_monomial(m, c, out);
    return out;
  }

  bool is_zero() const {
    return std::all_of(values_.begin(), values_.end(), [](const Element& v) { return v.is_zero(); });
  }

  friend Derivation operator+(const Derivation& a, const Derivation& b) {
    if (a.alg_ != b.alg_ || a.degree_ != b.degree_) throw DomainError("incompatible derivations");
    Derivation r = a;
    for (std::size_t i = 0; i < r.values_.size(); ++i) r.values_[i] += b.values_[i];
    return r;
  }
  friend Derivation operator*(const Scalar& c, Derivation a) {
    for (auto& v : a.values_) v *= c;
    return a;
  }

 private:
  const Algebra* alg_ = nullptr;
  int degree_ = 0;
  std::vector<Element> values_;
};

// [t1, t2] = t1 t2 - (-1)^{|t1||t2|} t2 t1, itself a derivation.
inline Derivation graded_commutator(const Derivation& t1, const Derivation& t2) {
  if (t1.algebra() != t2.algebra()) throw DomainError("derivations on different algebras");
  const Algebra* alg = t1.algebra();
  std::vector<Element> vals;
  vals.reserve(alg->size());
  const bool both_odd = is_odd(t1.degree()) && is_odd(t2.degree());
  for (std::size_t i = 0; i < alg->size(); ++i) {
    Element a = t1(t2.value(i));
    Element b = t2(t1.value(i));
    vals.push_back(both_odd ? a + b : a - b);
  }
  return Derivation(alg, t1.degree() + t2.degree(), std::move(vals));
}

// Multiplicative map determined by generator images (degree-preserving).
class AlgebraMap {
 public:
  AlgebraMap() = default;
  AlgebraMap(const Algebra* src, const Algebra* tgt, std::vector<Element> images)
      : src_(src), tgt_(tgt), images_(std::move(images)) {
    if (images_.size() != src->size()) throw DomainError("algebra map needs one image per generator");
    for (auto& im : images_)
      if (im.is_zero()) im = Element(tgt);
  }

  const Algebra* source() const { return src_; }
  const Algebra* target() const { return tgt_; }
  const Element& image(std::size_t i) const { return images_[i]; }

  Element on_monomial(const Monomial& m) const {
    Element r = tgt_->one();
    for (std::size_t i = 0; i < m.exp.size(); ++i)
      for (int k = 0; k < m.exp[i]; ++k) {
        r = tgt_->multiply(r, images_[i]);
        if (r.is_zero()) return r;
      }
    return r;
  }

  Element operator()(const Element& a) const {
    Element out(tgt_);
    for (const auto& [m, c] : a.terms()) {
      Element t = on_monomial(m);
      t *= c;
      out += t;
    }
    return out;
  }

 private:
  const Algebra* src_ = nullptr;
  const Algebra* tgt_ = nullptr;
  std::vector<Element> images_;
};

// Linear map on elements (used for maps that are not multiplicative).
using LinearMap = std::function<Element(const Element&)>;

// Free graded-commutative algebra on two tagged copies of `alg`, left copy first.
struct TensorSquare {
  std::shared_ptr<Algebra> alg;
  AlgebraMap left;   // a -> a (x) 1
  AlgebraMap right;  // b -> 1 (x) b

  // (a (x) b) = left(a) * right(b), which carries the Koszul sign.
  Element tensor(const Element& a, const Element& b) const { return alg->multiply(left(a), right(b)); }
};

inline TensorSquare tensor_square(const Algebra& base) {
  std::vector<Generator> gens;
  for (std::size_t i = 0; i < base.size(); ++i) {
    Generator g = base.generator(i);
    gens.push_back(Generator{g.name, g.degree, Tag::left, static_cast<int>(i)});
  }
  for (std::size_t i = 0; i < base.size(); ++i) {
    Generator g = base.generator(i);
    gens.push_back(Generator{g.name, g.degree, Tag::right, static_cast<int>(i)});
  }
  TensorSquare t;
  t.alg = std::make_shared<Algebra>(std::move(gens));
  const std::size_t n = base.size();
  std::vector<Element> li, ri;
  for (std::size_t i = 0; i < n; ++i) {
    li.push_back(t.alg->gen(i));
    ri.push_back(t.alg->gen(n + i));
  }
  t.left = AlgebraMap(&base, t.alg.get(), std::move(li));
  t.right = AlgebraMap(&base, t.alg.get(), std::move(ri));
  return t;
}

// Slot-wise extension of a derivation of `base` to its tensor square.
inline Derivation square_derivation(const TensorSquare& t, const Derivation& d) {
  const std::size_t n = d.algebra()->size();
  std::vector<Element> vals;
  for (std::size_t i = 0; i < n; ++i) vals.push_back(t.left(d.value(i)));
  for (std::size_t i = 0; i < n; ++i) vals.push_back(t.right(d.value(i)));
  return Derivation(t.alg.get(), d.degree(), std::move(vals));
}

// Sullivan-type CDGA: generators, differential, optional weights and shriek text.
struct FreeCDGA {
  std::string name;
  std::shared_ptr<Algebra> alg;
  Derivation d;
  std::optional<std::vector<int>> weights;
  std::optional<std::string> shriek;

  // Throws DomainError naming the first generator with d^2 != 0.
  void check_square_zero() const {
    if (d.degree() != 1) throw DomainError("differential must have degree +1");
    for (std::size_t i = 0; i < alg->size(); ++i) {
      Element dd = d(d.value(i));
      if (!dd.is_zero())
        throw DomainError("d^2 != 0 on generator '" + alg->generator(i).name + "'");
    }
  }
};

}  // namespace loopalg
