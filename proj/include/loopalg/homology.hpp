#pragma once

// Degree-wise homology of monomial complexes, induced maps, and the Connes
// maps π, β, S between H(L) = HH and H(E) = HC^-.

#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "loopalg/algebra.hpp"
#include "loopalg/linalg.hpp"
#include "loopalg/loop_models.hpp"

namespace loopalg {

// Soft cap on per-degree workspaces, from LOOPALG_MAX_MEM_MB.
inline void check_workspace(std::size_t entries, const std::string& what) {
  const char* env = std::getenv("LOOPALG_MAX_MEM_MB");
  if (!env) return;
  double cap = std::atof(env);
  if (cap <= 0) return;
  double mb = static_cast<double>(entries) * 64.0 / (1024.0 * 1024.0);
  if (mb > cap)
    throw DomainError(what + " needs about " + std::to_string(static_cast<long long>(mb)) +
                      " MB, above LOOPALG_MAX_MEM_MB=" + env);
}

// ---------------------------------------------------------------- homology of one block

// Cycles modulo boundaries inside a fixed finite-dimensional space.
struct HomologyBlock {
  Echelon ech;  // boundary rows first (empty labels), then one row per class
  std::vector<SparseVec> reps;
  std::size_t boundary_rank = 0;

  std::size_t dim() const { return reps.size(); }
  std::size_t cycle_dim() const { return boundary_rank + reps.size(); }

  // Class coordinates of v; `residual` is empty iff v is a cycle.
  SparseVec coordinates(const SparseVec& v, SparseVec* residual = nullptr) const {
    SparseVec coords;
    SparseVec r = ech.reduce(v, &coords);
    if (residual) *residual = std::move(r);
    return coords;
  }
  bool is_cycle(const SparseVec& v) const { return ech.reduce(v).empty(); }
  bool is_boundary(const SparseVec& v) const {
    SparseVec res;
    SparseVec c = coordinates(v, &res);
    return res.empty() && c.empty();
  }
};

// `cycles` must span the cycle space, `boundaries` the boundary space (⊆ cycles).
inline HomologyBlock make_homology(const std::vector<SparseVec>& cycles, const std::vector<SparseVec>& boundaries) {
  HomologyBlock h;
  for (auto i : sparsity_order(boundaries))
    if (h.ech.insert(boundaries[i])) ++h.boundary_rank;
  for (const auto& z : cycles) {
    SparseVec r = h.ech.reduce(z);
    if (r.empty()) continue;
    Scalar inv = 1 / r.front().second;
    scale(r, inv);
    h.ech.insert_reduced(r, unit_vector(static_cast<int>(h.reps.size())));
    h.reps.push_back(std::move(r));
  }
  return h;
}

// ---------------------------------------------------------------- monomial complexes

struct ChainBlock {
  int key = 0;
  std::vector<Monomial> monomials;
  std::unordered_map<Monomial, int, MonomialHash> index;

  std::size_t size() const { return monomials.size(); }
  int find(const Monomial& m) const {
    auto it = index.find(m);
    return it == index.end() ? -1 : it->second;
  }
};

struct DegreeBasis {
  std::map<int, ChainBlock> blocks;  // by key
  std::size_t total = 0;
  const ChainBlock* block(int key) const {
    auto it = blocks.find(key);
    return it == blocks.end() ? nullptr : &it->second;
  }
};

// A complex spanned by the accepted monomials of a free algebra, split into
// blocks by a secondary grading that the differential preserves.
class ChainComplex {
 public:
  using KeyFn = std::function<int(const Monomial&)>;
  using AcceptFn = std::function<bool(const Monomial&)>;

  ChainComplex(const Algebra* alg, Derivation d, KeyFn key, AcceptFn accept = nullptr)
      : alg_(alg), d_(std::move(d)), key_(std::move(key)), accept_(std::move(accept)) {}

  const Algebra& algebra() const { return *alg_; }
  const Derivation& differential() const { return d_; }
  int key(const Monomial& m) const { return key_ ? key_(m) : 0; }
  bool accepts(const Monomial& m) const { return (!accept_ || accept_(m)) && !alg_->odd_square(m); }

  std::shared_ptr<const DegreeBasis> basis(int n) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(n);
      if (it != cache_.end()) return it->second;
    }
    auto b = std::make_shared<DegreeBasis>();
    if (n >= 0) {
      for (Monomial& m : degree_basis(*alg_, n, [&](const Monomial& x) { return accepts(x); })) {
        ChainBlock& blk = b->blocks[key(m)];
        blk.key = key(m);
        blk.index.emplace(m, static_cast<int>(blk.monomials.size()));
        blk.monomials.push_back(std::move(m));
        ++b->total;
      }
    }
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(n, std::move(b)).first->second;
  }

  // Splits e by block; throws if a term lies outside the complex.
  std::map<int, SparseVec> to_vectors(const Element& e, int n) const {
    auto b = basis(n);
    std::map<int, SparseVec> out;
    for (const auto& [m, c] : e.terms()) {
      if (m.deg != n) throw DomainError("element is not homogeneous of degree " + std::to_string(n));
      const ChainBlock* blk = b->block(key(m));
      int i = blk ? blk->find(m) : -1;
      if (i < 0) throw DomainError("term " + format_monomial(*alg_, m) + " lies outside the complex");
      out[blk->key].emplace_back(i, c);
    }
    for (auto& [k, v] : out) std::sort(v.begin(), v.end(), [](auto& a, auto& b2) { return a.first < b2.first; });
    return out;
  }

  Element to_element(const SparseVec& v, const ChainBlock& blk) const {
    Element e(alg_);
    for (const auto& [i, c] : v) e.add_term(blk.monomials[static_cast<std::size_t>(i)], c);
    return e;
  }

  // d of each monomial of block (n, key), as vectors in block (n+1, key).
  std::vector<SparseVec> differential_columns(int n, int k) const {
    auto src = basis(n);
    auto tgt = basis(n + 1);
    const ChainBlock* sb = src->block(k);
    std::vector<SparseVec> cols;
    if (!sb) return cols;
    const ChainBlock* tb = tgt->block(k);
    cols.reserve(sb->size());
    for (const Monomial& m : sb->monomials) {
      Element out(alg_);
      d_.apply_monomial(m, Scalar(1), out);
      SparseVec v;
      for (const auto& [t, c] : out.terms()) {
        int i = tb ? tb->find(t) : -1;
        if (i < 0 || key(t) != k)
          throw ConsistencyError("differential leaves the complex: d(" + format_monomial(*alg_, m) + ") contains " +
                                 format_monomial(*alg_, t));
        v.emplace_back(i, c);
      }
      std::sort(v.begin(), v.end(), [](auto& a, auto& b2) { return a.first < b2.first; });
      cols.push_back(std::move(v));
    }
    return cols;
  }

 private:
  const Algebra* alg_;
  Derivation d_;
  KeyFn key_;
  AcceptFn accept_;
  mutable std::mutex mu_;
  mutable std::map<int, std::shared_ptr<const DegreeBasis>> cache_;
};

using ComplexPtr = std::shared_ptr<const ChainComplex>;

// ---------------------------------------------------------------- windows

struct ClassBlock {
  int key = 0;
  std::size_t offset = 0;  // index of this block's first class within the degree
  HomologyBlock h;
};

struct DegreeHomology {
  int degree = 0;
  std::shared_ptr<const DegreeBasis> chains;
  std::vector<ClassBlock> blocks;
  std::size_t dim = 0;
  std::size_t kernel_dim = 0;  // dim Z
  std::size_t rank_d = 0;      // rank of d leaving this degree

  const ClassBlock* block(int key) const {
    for (const auto& b : blocks)
      if (b.key == key) return &b;
    return nullptr;
  }
};

inline DegreeHomology compute_degree(const ChainComplex& c, int n) {
  DegreeHomology dh;
  dh.degree = n;
  dh.chains = c.basis(n);
  auto lower = c.basis(n - 1);
  check_workspace(dh.chains->total * 8, "homology in degree " + std::to_string(n));
  for (const auto& [k, blk] : dh.chains->blocks) {
    std::vector<SparseVec> out = c.differential_columns(n, k);
    std::vector<SparseVec> cycles = kernel(out);
    dh.kernel_dim += cycles.size();
    dh.rank_d += blk.size() - cycles.size();
    std::vector<SparseVec> bounds;
    if (lower->block(k)) bounds = c.differential_columns(n - 1, k);
    ClassBlock cb;
    cb.key = k;
    cb.offset = dh.dim;
    cb.h = make_homology(cycles, bounds);
    dh.dim += cb.h.dim();
    dh.blocks.push_back(std::move(cb));
  }
  return dh;
}

class HomologyWindow {
 public:
  HomologyWindow() = default;
  HomologyWindow(ComplexPtr c, int lo, int hi, unsigned jobs = 1) : c_(std::move(c)), lo_(lo), hi_(hi) {
    if (hi < lo) return;
    degrees_.resize(static_cast<std::size_t>(hi - lo + 1));
    parallel_for(degrees_.size(), jobs,
                 [&](std::size_t i) { degrees_[i] = compute_degree(*c_, lo_ + static_cast<int>(i)); });
  }

  const ChainComplex& complex() const { return *c_; }
  ComplexPtr complex_ptr() const { return c_; }
  int lo() const { return lo_; }
  int hi() const { return hi_; }
  bool contains(int n) const { return n >= lo_ && n <= hi_; }
  const DegreeHomology& at(int n) const {
    if (!contains(n)) throw DomainError("degree " + std::to_string(n) + " outside the computed window");
    return degrees_[static_cast<std::size_t>(n - lo_)];
  }
  std::size_t dim(int n) const { return contains(n) ? at(n).dim : 0; }

  Element representative(int n, std::size_t i) const {
    const DegreeHomology& dh = at(n);
    for (const auto& b : dh.blocks)
      if (i >= b.offset && i < b.offset + b.h.dim())
        return c_->to_element(b.h.reps[i - b.offset], *dh.chains->block(b.key));
    throw DomainError("class index out of range");
  }
  std::vector<Element> representatives(int n) const {
    std::vector<Element> r;
    for (std::size_t i = 0; i < dim(n); ++i) r.push_back(representative(n, i));
    return r;
  }

  // Class coordinates of e in degree n, or nullopt if e is not a cycle.
  std::optional<SparseVec> class_of(const Element& e, int n) const {
    SparseVec out;
    if (e.is_zero()) return out;
    const DegreeHomology& dh = at(n);
    for (const auto& [k, v] : c_->to_vectors(e, n)) {
      const ClassBlock* b = dh.block(k);
      SparseVec res;
      SparseVec coords = b->h.coordinates(v, &res);
      if (!res.empty()) return std::nullopt;
      for (auto& [i, c] : coords) out.emplace_back(static_cast<int>(b->offset) + i, c);
    }
    std::sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.first < b.first; });
    return out;
  }
  std::optional<SparseVec> class_of(const Element& e) const {
    if (e.is_zero()) return SparseVec{};
    auto d = e.degree();
    if (!d) throw DomainError("element is not homogeneous");
    return class_of(e, *d);
  }
  bool is_cycle(const Element& e) const { return class_of(e).has_value(); }
  bool is_boundary(const Element& e) const {
    auto c = class_of(e);
    return c && c->empty();
  }

  Element element_of(const SparseVec& coords, int n) const {
    Element e(&c_->algebra());
    for (const auto& [i, c] : coords) e += representative(n, static_cast<std::size_t>(i)) * c;
    return e;
  }

  // Boundary rows of degree n as elements (a basis of the boundaries).
  std::vector<Element> boundary_basis(int n) const {
    std::vector<Element> out;
    const DegreeHomology& dh = at(n);
    for (const auto& b : dh.blocks)
      for (std::size_t r = 0; r < b.h.boundary_rank; ++r)
        out.push_back(c_->to_element(b.h.ech.rows()[r], *dh.chains->block(b.key)));
    return out;
  }

 private:
  ComplexPtr c_;
  int lo_ = 0, hi_ = -1;
  std::vector<DegreeHomology> degrees_;
};

// ---------------------------------------------------------------- induced maps

struct InducedMap {
  std::string name;
  int shift = 0;
  // source degree -> one column of target coordinates per source class
  std::map<int, std::vector<SparseVec>> columns;

  bool has(int n) const { return columns.count(n) > 0; }
  std::size_t rank(int n) const {
    auto it = columns.find(n);
    return it == columns.end() ? 0 : rank_of(it->second);
  }
  SparseVec apply(int n, const SparseVec& x) const {
    SparseVec r;
    const auto& cols = columns.at(n);
    for (const auto& [i, c] : x) r = axpy(r, c, cols[static_cast<std::size_t>(i)]);
    return r;
  }
  bool is_zero(int n) const {
    auto it = columns.find(n);
    if (it == columns.end()) return true;
    for (const auto& c : it->second)
      if (!c.empty()) return false;
    return true;
  }
};

// Map on homology induced by a chain map f of degree `shift` (commuting with
// the differentials up to sign). Checks that representatives go to cycles and
// boundaries to boundaries; throws DomainError with a witness otherwise.
inline InducedMap induced_map(const std::string& name, const LinearMap& f, int shift, const HomologyWindow& src,
                              const HomologyWindow& tgt, unsigned jobs = 1, bool check_boundaries = true) {
  InducedMap M;
  M.name = name;
  M.shift = shift;
  std::vector<int> degs;
  for (int n = src.lo(); n <= src.hi(); ++n)
    if (tgt.contains(n + shift)) degs.push_back(n);
  std::vector<std::vector<SparseVec>> cols(degs.size());
  parallel_for(degs.size(), jobs, [&](std::size_t k) {
    int n = degs[k];
    for (std::size_t i = 0; i < src.dim(n); ++i) {
      Element rep = src.representative(n, i);
      auto c = tgt.class_of(f(rep), n + shift);
      if (!c) throw DomainError(name + " is not a chain map: image of " + format_element(rep) + " is not a cycle");
      cols[k].push_back(std::move(*c));
    }
    if (check_boundaries)
      for (const Element& b : src.boundary_basis(n))
        if (!tgt.is_boundary(f(b)))
          throw DomainError(name + " does not preserve boundaries: " + format_element(b));
  });
  for (std::size_t k = 0; k < degs.size(); ++k) M.columns[degs[k]] = std::move(cols[k]);
  return M;
}

// ---------------------------------------------------------------- standard complexes

inline ComplexPtr base_complex(const FreeCDGA& m, bool reduced) {
  auto accept = reduced ? ChainComplex::AcceptFn([](const Monomial& x) { return !x.is_one(); }) : nullptr;
  return std::make_shared<ChainComplex>(m.alg.get(), m.d, nullptr, accept);
}

inline ComplexPtr hochschild_complex(std::shared_ptr<const LoopModel> L, bool reduced) {
  auto accept = reduced ? ChainComplex::AcceptFn([](const Monomial& x) { return !x.is_one(); }) : nullptr;
  return std::make_shared<ChainComplex>(L->alg.get(), L->delta, [L](const Monomial& m) { return L->word_length(m); },
                                        accept);
}

// One word-length component of the reduced Hochschild complex.
inline ComplexPtr word_component(std::shared_ptr<const LoopModel> L, int N) {
  return std::make_shared<ChainComplex>(L->alg.get(), L->delta, [L](const Monomial& m) { return L->word_length(m); },
                                        [L, N](const Monomial& m) { return !m.is_one() && L->word_length(m) == N; });
}

// Reduced complex: monomials containing some generator of L (u-powers alone are split off).
inline bool has_L_part(const CyclicModel& E, const Monomial& m) {
  for (std::size_t i = 0; i < E.u; ++i)
    if (m.exp[i]) return true;
  return false;
}

inline ComplexPtr cyclic_complex(std::shared_ptr<const CyclicModel> E, bool reduced) {
  auto accept = reduced ? ChainComplex::AcceptFn([E](const Monomial& x) { return has_L_part(*E, x); }) : nullptr;
  return std::make_shared<ChainComplex>(E->alg.get(), E->D, [E](const Monomial& m) { return E->component(m); }, accept);
}

// ---------------------------------------------------------------- Connes maps

struct ConnesMaps {
  HomologyWindow HH, HC;
  InducedMap pi, beta, S;
  int max_degree = 0;
};

// π: HC^n -> HH^n (u = 0), β: HH^n -> HC^(n-1) (induced by s), S: HC^n -> HC^(n+2).
inline ConnesMaps connes_maps(std::shared_ptr<const CyclicModel> E, int max_degree, unsigned jobs = 1) {
  ConnesMaps C;
  C.max_degree = max_degree;
  C.HH = HomologyWindow(hochschild_complex(E->L, false), 0, max_degree, jobs);
  C.HC = HomologyWindow(cyclic_complex(E, false), 0, max_degree + 2, jobs);
  const CyclicModel& e = *E;
  C.pi = induced_map("pi", [&e](const Element& a) { return e.to_L(a); }, 0, C.HC, C.HH, jobs);
  C.beta = induced_map("beta", [&e](const Element& a) { return e.s(e.from_L(a)); }, -1, C.HH, C.HC, jobs);
  C.S = induced_map("S", [&e](const Element& a) { return e.times_u(a); }, 2, C.HC, C.HC, jobs);
  return C;
}

// Rank-exactness of ... -> HC^(n-2) -S-> HC^n -π-> HH^n -β-> HC^(n-1) -S-> HC^(n+1) -> ...
// at every joint inside the window. Throws ConsistencyError on violation.
inline void check_connes_exactness(const ConnesMaps& C) {
  auto fail = [](const std::string& where, int n) {
    throw ConsistencyError("Connes sequence not exact at " + where + " in degree " + std::to_string(n));
  };
  for (int n = 0; n <= C.max_degree; ++n) {
    std::size_t rS_in = n >= 2 ? C.S.rank(n - 2) : 0;
    if (rS_in + C.pi.rank(n) != C.HC.dim(n)) fail("HC^-", n);
    if (C.pi.rank(n) + C.beta.rank(n) != C.HH.dim(n)) fail("HH", n);
    if (n >= 1 && C.beta.rank(n) + C.S.rank(n - 1) != C.HC.dim(n - 1)) fail("HC^- (after beta)", n - 1);
  }
}

}  // namespace loopalg
