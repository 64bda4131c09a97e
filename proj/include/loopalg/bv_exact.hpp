#pragma once

// BV exactness of H(s̃) on reduced Hochschild homology, triviality of the
// reduced S-action, positive weights, and the ker s̃ model of reduced HC^-.

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "loopalg/homology.hpp"

namespace loopalg {

// Matrix of a derivation between two blocks of one complex.
inline std::vector<SparseVec> derivation_columns(const ChainComplex& c, const Derivation& f, int n, int k, int n2,
                                                 int k2) {
  auto src = c.basis(n);
  auto tgt = c.basis(n2);
  std::vector<SparseVec> cols;
  const ChainBlock* sb = src->block(k);
  if (!sb) return cols;
  const ChainBlock* tb = tgt->block(k2);
  for (const Monomial& m : sb->monomials) {
    Element out(&c.algebra());
    f.apply_monomial(m, Scalar(1), out);
    SparseVec v;
    for (const auto& [t, coef] : out.terms()) {
      int i = tb ? tb->find(t) : -1;
      if (i < 0) throw ConsistencyError("map leaves the expected block at " + format_monomial(c.algebra(), t));
      v.emplace_back(i, coef);
    }
    std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
    cols.push_back(std::move(v));
  }
  return cols;
}

// ---------------------------------------------------------------- BV exactness

struct BVDegree {
  int degree = 0;
  std::size_t dim = 0;     // dim H̃^n
  std::size_t kernel = 0;  // dim ker H(s̃) out of degree n
  std::size_t image = 0;   // dim Im H(s̃) into degree n
};

struct BVReport {
  int max_degree = 0;
  bool exact = true;
  std::vector<BVDegree> degrees;
  std::vector<int> failing;  // degrees with Im ⊊ ker
  std::optional<int> witness_degree;
  std::optional<Element> witness;
  std::shared_ptr<HomologyWindow> H;  // reduced H(L), degrees 0..max+1
  InducedMap Hs;                      // H(s̃), degree -1
};

inline BVReport bv_exactness(std::shared_ptr<const LoopModel> L, int max_degree, unsigned jobs = 1) {
  BVReport R;
  R.max_degree = max_degree;
  R.H = std::make_shared<HomologyWindow>(hochschild_complex(L, true), 0, max_degree + 1, jobs);
  const LoopModel& l = *L;
  R.Hs = induced_map("H(s)", [&l](const Element& a) { return l.s(a); }, -1, *R.H, *R.H, jobs);
  for (int n = 1; n <= max_degree; ++n) {
    BVDegree d;
    d.degree = n;
    d.dim = R.H->dim(n);
    const auto& out = R.Hs.columns.at(n);
    std::vector<SparseVec> ker = kernel(out);
    d.kernel = ker.size();
    const auto& in = R.Hs.columns.at(n + 1);
    d.image = rank_of(in);
    // B̃² = 0, hence Im ⊆ ker.
    for (const auto& col : in)
      if (!R.Hs.apply(n, col).empty())
        throw ConsistencyError("H(s)^2 != 0 in degree " + std::to_string(n + 1));
    if (d.image > d.kernel) throw ConsistencyError("Im H(s) exceeds ker H(s) in degree " + std::to_string(n));
    if (d.image < d.kernel) {
      R.exact = false;
      R.failing.push_back(n);
      if (!R.witness) {
        Echelon im;
        for (const auto& c : in) im.insert(c);
        for (const auto& k : ker)
          if (!im.contains(k)) {
            R.witness_degree = n;
            R.witness = R.H->element_of(k, n);
            break;
          }
      }
    }
    R.degrees.push_back(d);
  }
  return R;
}

// ---------------------------------------------------------------- S-action

struct SReport {
  int max_degree = 0;
  bool trivial = true;        // on decided source degrees
  std::vector<int> nontrivial;  // source degrees where S̃ != 0
  std::vector<int> indeterminate;
  std::optional<int> witness_degree;
  std::optional<Element> witness;
  std::shared_ptr<HomologyWindow> HC;  // reduced HC^-, degrees 0..max
  InducedMap S;
};

// S̃ = ×u on reduced HC^-; decided only for source degrees n with n + 2 <= max_degree.
inline SReport s_action_triviality(std::shared_ptr<const CyclicModel> E, int max_degree, unsigned jobs = 1) {
  SReport R;
  R.max_degree = max_degree;
  R.HC = std::make_shared<HomologyWindow>(cyclic_complex(E, true), 0, max_degree, jobs);
  const CyclicModel& e = *E;
  R.S = induced_map("S", [&e](const Element& a) { return e.times_u(a); }, 2, *R.HC, *R.HC, jobs);
  for (int n = 0; n <= max_degree; ++n) {
    if (n + 2 > max_degree) {
      R.indeterminate.push_back(n);
      continue;
    }
    if (R.S.is_zero(n)) continue;
    R.trivial = false;
    R.nontrivial.push_back(n);
    if (!R.witness) {
      const auto& cols = R.S.columns.at(n);
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (!cols[i].empty()) {
          R.witness_degree = n;
          R.witness = R.HC->representative(n, i);
          break;
        }
    }
  }
  return R;
}

// The short exact sequence ker s̃ -> L̃ -> Im s̃ has connecting map c, which
// matches S̃ under H(Φ). Its long exact sequence gives, per degree n,
//   dim ker H(s̃)_n - dim Im H(s̃)_n = rank S_n + rank S_{n-3} - rank(S_n S_{n-2}).
// Checked wherever every term lies inside both windows.
struct CrossCheck {
  bool agree = true;
  bool bv_exact = true;
  bool s_trivial = true;
  int checked_up_to = -1;
  std::string note;
};

inline std::size_t composite_rank(const InducedMap& S, int n) {
  if (!S.has(n) || !S.has(n - 2)) return 0;
  std::vector<SparseVec> cols;
  for (const auto& c : S.columns.at(n - 2)) cols.push_back(S.apply(n, c));
  return rank_of(cols);
}

inline CrossCheck cross_check_bv_s(const BVReport& bv, const SReport& s) {
  CrossCheck C;
  C.bv_exact = bv.exact;
  C.s_trivial = s.trivial;
  for (const BVDegree& d : bv.degrees) {
    const int n = d.degree;
    if (n + 2 > s.max_degree) break;
    const std::size_t defect = d.kernel - d.image;
    const std::size_t expect = s.S.rank(n) + (n >= 3 ? s.S.rank(n - 3) : 0) - composite_rank(s.S, n);
    C.checked_up_to = n;
    if (defect != expect) {
      C.agree = false;
      C.note = "degree " + std::to_string(n) + ": ker/Im defect of H(s) is " + std::to_string(defect) +
               " but S ranks predict " + std::to_string(expect);
      throw ConsistencyError("BV exactness and S-triviality disagree: " + C.note);
    }
  }
  const bool decided_bv = [&] {
    for (int f : bv.failing)
      if (f <= C.checked_up_to) return false;
    return true;
  }();
  if (decided_bv != s.trivial) {
    C.agree = false;
    C.note = "verdicts differ on the common window";
    throw ConsistencyError("BV exactness and S-triviality disagree: " + C.note);
  }
  return C;
}

// Is e a cycle whose class lies in ker H(s̃) but not in Im H(s̃)?
inline bool is_bv_witness(const BVReport& bv, const Element& e) {
  auto n = e.degree();
  if (!n || *n < 1 || *n > bv.max_degree) return false;
  auto cls = bv.H->class_of(e, *n);
  if (!cls || cls->empty()) return false;
  if (!bv.Hs.apply(*n, *cls).empty()) return false;
  Echelon im;
  for (const auto& c : bv.Hs.columns.at(*n + 1)) im.insert(c);
  return !im.contains(*cls);
}

// ---------------------------------------------------------------- weights

struct WeightReport {
  bool has_weights = false;
  bool valid = false;
  std::string message;
  std::optional<std::string> offending_generator;
  std::optional<std::string> offending_term;
};

// Monomial exponent lists of each d(v), for fast weight checks.
struct WeightSystem {
  std::vector<std::vector<std::vector<int>>> terms;  // per generator, per monomial, exponents
  explicit WeightSystem(const FreeCDGA& m) {
    for (std::size_t i = 0; i < m.alg->size(); ++i) {
      std::vector<std::vector<int>> t;
      for (const auto& [mono, c] : m.d.value(i).terms()) t.emplace_back(mono.exp.begin(), mono.exp.end());
      terms.push_back(std::move(t));
    }
  }
  // Index of the first generator whose differential is not weight-homogeneous, or -1.
  int first_violation(const std::vector<int>& w, int* term = nullptr) const {
    for (std::size_t i = 0; i < terms.size(); ++i)
      for (std::size_t k = 0; k < terms[i].size(); ++k) {
        long long s = 0;
        for (std::size_t j = 0; j < w.size(); ++j) s += static_cast<long long>(terms[i][k][j]) * w[j];
        if (s != w[i]) {
          if (term) *term = static_cast<int>(k);
          return static_cast<int>(i);
        }
      }
    return -1;
  }
};

inline WeightReport check_weights(const FreeCDGA& m, const std::vector<int>& w) {
  WeightReport R;
  R.has_weights = true;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] < 1) {
      R.message = "weight of '" + m.alg->generator(i).name + "' is not positive";
      R.offending_generator = m.alg->generator(i).name;
      return R;
    }
  WeightSystem ws(m);
  int t = 0;
  int g = ws.first_violation(w, &t);
  if (g >= 0) {
    const auto& d = m.d.value(static_cast<std::size_t>(g));
    auto it = d.terms().begin();
    std::advance(it, t);
    R.offending_generator = m.alg->generator(static_cast<std::size_t>(g)).name;
    R.offending_term = format_monomial(*m.alg, it->first);
    R.message = "d(" + *R.offending_generator + ") has term " + *R.offending_term + " of the wrong weight";
    return R;
  }
  R.valid = true;
  R.message = "valid positive weights; BV exact predicted";
  return R;
}

inline WeightReport weight_check(const FreeCDGA& m) {
  if (!m.weights) {
    WeightReport R;
    R.message = "no weight data";
    return R;
  }
  return check_weights(m, *m.weights);
}

struct WeightSearch {
  std::size_t tried = 0;
  std::vector<std::vector<int>> valid;  // capped at `keep`
  std::size_t valid_count = 0;
};

// Every assignment with 1 <= w <= max_weight on all generators.
inline WeightSearch exhaustive_weight_search(const FreeCDGA& m, int max_weight, std::size_t keep = 16) {
  WeightSystem ws(m);
  const std::size_t g = m.alg->size();
  WeightSearch S;
  std::vector<int> w(g, 1);
  for (;;) {
    ++S.tried;
    if (ws.first_violation(w) < 0) {
      ++S.valid_count;
      if (S.valid.size() < keep) S.valid.push_back(w);
    }
    std::size_t i = 0;
    while (i < g && w[i] == max_weight) w[i++] = 1;
    if (i == g) break;
    ++w[i];
  }
  return S;
}

// ---------------------------------------------------------------- ker s̃ model

struct KerSDegree {
  struct Block {
    int key = 0;  // word length
    std::size_t offset = 0;
    HomologyBlock h;
  };
  std::vector<Block> blocks;
  std::size_t dim = 0;
};

struct KerSModel {
  std::shared_ptr<const LoopModel> L;
  ComplexPtr Lred;
  int lo = 1, hi = 0;
  std::vector<KerSDegree> degrees;
  std::map<int, std::vector<SparseVec>> c;  // connecting map, degree m -> m + 2

  const KerSDegree& at(int n) const { return degrees.at(static_cast<std::size_t>(n - lo)); }
  std::size_t dim(int n) const { return n < lo || n > hi ? 0 : at(n).dim; }
  Element representative(int n, std::size_t i) const {
    for (const auto& b : at(n).blocks)
      if (i >= b.offset && i < b.offset + b.h.dim())
        return Lred->to_element(b.h.reps[i - b.offset], *Lred->basis(n)->block(b.key));
    throw DomainError("class index out of range");
  }
  std::optional<SparseVec> class_of(const Element& e, int n) const {
    SparseVec out;
    if (e.is_zero()) return out;
    for (const auto& [k, v] : Lred->to_vectors(e, n)) {
      const KerSDegree::Block* blk = nullptr;
      for (const auto& b : at(n).blocks)
        if (b.key == k) blk = &b;
      if (!blk) return std::nullopt;
      SparseVec res;
      SparseVec co = blk->h.coordinates(v, &res);
      if (!res.empty()) return std::nullopt;
      for (auto& [i, x] : co) out.emplace_back(static_cast<int>(blk->offset) + i, x);
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.first < b.first; });
    return out;
  }
};

// Basis of s̃(block (n+1, w-1)) inside block (n, w).
inline std::vector<SparseVec> image_of_s(const ChainComplex& c, const Derivation& s, int n, int w) {
  Echelon e;
  for (auto& v : derivation_columns(c, s, n + 1, w - 1, n, w)) e.insert(std::move(v));
  return e.rows();
}

inline KerSModel ker_s_model(std::shared_ptr<const LoopModel> L, int hi, unsigned jobs = 1) {
  KerSModel K;
  K.L = L;
  K.Lred = hochschild_complex(L, true);
  K.hi = hi;
  const ChainComplex& C = *K.Lred;
  K.degrees.resize(static_cast<std::size_t>(std::max(0, hi - K.lo + 1)));
  parallel_for(K.degrees.size(), jobs, [&](std::size_t idx) {
    int n = K.lo + static_cast<int>(idx);
    KerSDegree& D = K.degrees[idx];
    auto basis = C.basis(n);
    for (const auto& [w, blk] : basis->blocks) {
      if (w < 1) continue;
      std::vector<SparseVec> kb = image_of_s(C, L->s, n, w);
      // δ on the K-basis, as columns in block (n+1, w)
      auto dcols = C.differential_columns(n, w);
      std::vector<SparseVec> dk;
      for (const auto& v : kb) {
        SparseVec r;
        for (const auto& [i, x] : v) r = axpy(r, x, dcols[static_cast<std::size_t>(i)]);
        dk.push_back(std::move(r));
      }
      std::vector<SparseVec> cycles;
      for (const auto& comb : kernel(dk)) {
        SparseVec z;
        for (const auto& [j, x] : comb) z = axpy(z, x, kb[static_cast<std::size_t>(j)]);
        cycles.push_back(std::move(z));
      }
      std::vector<SparseVec> bounds;
      if (C.basis(n - 1)->block(w)) {
        auto dlow = C.differential_columns(n - 1, w);
        for (const auto& v : image_of_s(C, L->s, n - 1, w)) {
          SparseVec r;
          for (const auto& [i, x] : v) r = axpy(r, x, dlow[static_cast<std::size_t>(i)]);
          bounds.push_back(std::move(r));
        }
      }
      KerSDegree::Block b;
      b.key = w;
      b.offset = D.dim;
      b.h = make_homology(cycles, bounds);
      D.dim += b.h.dim();
      D.blocks.push_back(std::move(b));
    }
  });
  // c([s̃α]) = [δα]
  for (int m = K.lo; m + 2 <= hi; ++m) {
    std::vector<SparseVec> cols;
    for (std::size_t i = 0; i < K.dim(m); ++i) {
      Element k = K.representative(m, i);
      int w = L->word_length(k.terms().begin()->first);
      auto scols = derivation_columns(C, L->s, m + 1, w - 1, m, w);
      SparseVec x;
      auto kv = C.to_vectors(k, m);
      if (!solve(scols, kv.at(w), x)) throw ConsistencyError("ker s is not Im s in degree " + std::to_string(m));
      Element alpha = C.to_element(x, *C.basis(m + 1)->block(w - 1));
      auto cls = K.class_of(L->delta(alpha), m + 2);
      if (!cls) throw ConsistencyError("delta(alpha) is not a cycle of ker s");
      cols.push_back(std::move(*cls));
    }
    K.c[m] = std::move(cols);
  }
  return K;
}

struct KerSCheck {
  bool phi_iso = true;
  bool s_matches_c = true;
  std::string note;
};

// HΦ: H(ker s̃) -> reduced HC^- is bijective and S∘HΦ = -HΦ∘c on the window.
inline KerSCheck check_ker_s_model(const KerSModel& K, const CyclicModel& E, const HomologyWindow& HC) {
  KerSCheck R;
  auto phi = [&](int n, std::size_t i) { return HC.class_of(E.from_L(K.representative(n, i)), n); };
  for (int n = K.lo; n <= std::min(K.hi, HC.hi()); ++n) {
    std::vector<SparseVec> cols;
    for (std::size_t i = 0; i < K.dim(n); ++i) {
      auto c = phi(n, i);
      if (!c) throw ConsistencyError("Phi does not send cycles to cycles");
      cols.push_back(*c);
    }
    if (K.dim(n) != HC.dim(n) || rank_of(cols) != HC.dim(n)) {
      R.phi_iso = false;
      R.note = "H(Phi) not bijective in degree " + std::to_string(n);
      throw ConsistencyError(R.note);
    }
    if (n + 2 > std::min(K.hi, HC.hi())) continue;
    for (std::size_t i = 0; i < K.dim(n); ++i) {
      auto lhs = HC.class_of(E.times_u(E.from_L(K.representative(n, i))), n + 2);
      Element rhs_el = E.from_L(K.Lred->algebra().zero());
      for (const auto& [j, x] : K.c.at(n)[i]) rhs_el += E.from_L(K.representative(n + 2, static_cast<std::size_t>(j))) * x;
      auto rhs = HC.class_of(rhs_el, n + 2);
      if (!lhs || !rhs || !axpy(*lhs, Scalar(1), *rhs).empty()) {
        R.s_matches_c = false;
        R.note = "S Phi != -Phi c in degree " + std::to_string(n);
        throw ConsistencyError(R.note);
      }
    }
  }
  return R;
}

}  // namespace loopalg
