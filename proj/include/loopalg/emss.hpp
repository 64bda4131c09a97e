#pragma once

// The cobar-type Eilenberg-Moore spectral sequence. Component N of the reduced
// cyclic complex is the total complex of
//   L^(N) -> L^(N+1) u -> L^(N+2) u^2 -> ...
// filtered by the power of u. Pages are computed as Z_r / (Z_{r-1} + B_{r-1}).

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "loopalg/bv_exact.hpp"
#include "loopalg/homology.hpp"

namespace loopalg {

struct PageSlot {
  int r = 0, p = 0, n = 0;  // page, filtration, total degree
  HomologyBlock h;          // Z_r^p modulo Z_{r-1}^{p+1} + B_{r-1}^p
  std::vector<SparseVec> d;  // d_r of each class, coordinates in slot (r, p + r, n + 1)
  std::size_t dim() const { return h.dim(); }
};

class SpectralSequence {
 public:
  SpectralSequence(std::shared_ptr<const CyclicModel> E, int N)
      : E_(std::move(E)), N_(N), C_(cyclic_complex(E_, true)) {}

  int component() const { return N_; }
  const ChainComplex& complex() const { return *C_; }
  const CyclicModel& model() const { return *E_; }

  // Lowest filtration degree carrying chains.
  int p_min() const { return N_ < 0 ? -N_ : 0; }
  // Highest filtration degree with chains in total degree n (empty window => p_min - 1).
  int p_max(int n) const {
    const ChainBlock* b = block(n);
    int best = p_min() - 1;
    if (!b) return best;
    for (const auto& m : b->monomials) best = std::max(best, E_->u_power(m));
    return best;
  }

  const ChainBlock* block(int n) const { return C_->basis(n)->block(N_); }

  // Z_r^p in total degree n, as vectors in block coordinates. r = 0 gives F^p.
  std::vector<SparseVec> Z(int r, int p, int n) const {
    auto key = std::make_tuple(r, p, n);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = zcache_.find(key);
      if (it != zcache_.end()) return it->second;
    }
    std::vector<SparseVec> out;
    const ChainBlock* b = block(n);
    if (b) {
      std::vector<int> src;
      for (std::size_t j = 0; j < b->size(); ++j)
        if (E_->u_power(b->monomials[j]) >= p) src.push_back(static_cast<int>(j));
      if (r == 0) {
        for (int j : src) out.push_back(unit_vector(j));
      } else {
        const ChainBlock* tb = block(n + 1);
        auto cols = C_->differential_columns(n, N_);
        std::vector<SparseVec> proj;
        for (int j : src) {
          SparseVec v;
          for (const auto& [i, c] : cols[static_cast<std::size_t>(j)])
            if (E_->u_power(tb->monomials[static_cast<std::size_t>(i)]) < p + r) v.emplace_back(i, c);
          proj.push_back(std::move(v));
        }
        for (const auto& k : kernel(proj)) {
          SparseVec v;
          for (const auto& [i, c] : k) v.emplace_back(src[static_cast<std::size_t>(i)], c);
          out.push_back(std::move(v));
        }
      }
    }
    std::lock_guard<std::mutex> lock(mu_);
    return zcache_.emplace(key, std::move(out)).first->second;
  }

  // B_r^p in total degree n: d(Z_r^{p-r} in degree n-1).
  std::vector<SparseVec> B(int r, int p, int n) const {
    std::vector<SparseVec> out;
    if (!block(n - 1) || !block(n)) return out;
    auto cols = C_->differential_columns(n - 1, N_);
    for (const auto& z : Z(r, p - r, n - 1)) {
      SparseVec v;
      for (const auto& [j, c] : z) v = axpy(v, c, cols[static_cast<std::size_t>(j)]);
      if (!v.empty()) out.push_back(std::move(v));
    }
    return out;
  }

  // E_r^{p, n-p} with representatives. No differential attached.
  HomologyBlock page_block(int r, int p, int n) const {
    auto key = std::make_tuple(r, p, n);
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = ecache_.find(key);
      if (it != ecache_.end()) return it->second;
    }
    std::vector<SparseVec> denom = Z(r - 1, p + 1, n);
    for (auto& b : B(r - 1, p, n)) denom.push_back(std::move(b));
    HomologyBlock h = make_homology(Z(r, p, n), denom);
    std::lock_guard<std::mutex> lock(mu_);
    return ecache_.emplace(key, std::move(h)).first->second;
  }

  PageSlot slot(int r, int p, int n) const {
    PageSlot s;
    s.r = r;
    s.p = p;
    s.n = n;
    s.h = page_block(r, p, n);
    if (s.h.dim() == 0) return s;
    HomologyBlock tgt = page_block(r, p + r, n + 1);
    auto cols = C_->differential_columns(n, N_);
    for (const auto& rep : s.h.reps) {
      SparseVec dx;
      for (const auto& [j, c] : rep) dx = axpy(dx, c, cols[static_cast<std::size_t>(j)]);
      SparseVec res;
      SparseVec co = tgt.coordinates(dx, &res);
      if (!res.empty()) throw ConsistencyError("d_r image is not in Z_r");
      s.d.push_back(std::move(co));
    }
    return s;
  }

  std::size_t dim(int r, int p, int n) const { return page_block(r, p, n).dim(); }

  // Page element of a chain x in F^p (must lie in Z_r^p).
  std::optional<SparseVec> class_of(int r, int p, int n, const Element& x) const {
    const ChainBlock* b = block(n);
    if (x.is_zero()) return SparseVec{};
    if (!b) return std::nullopt;
    auto vs = C_->to_vectors(x, n);
    if (vs.size() != 1 || !vs.count(N_)) return std::nullopt;
    SparseVec res;
    SparseVec co = page_block(r, p, n).coordinates(vs.at(N_), &res);
    if (!res.empty()) return std::nullopt;
    return co;
  }

  Element to_element(const SparseVec& v, int n) const { return C_->to_element(v, *block(n)); }

 private:
  std::shared_ptr<const CyclicModel> E_;
  int N_;
  ComplexPtr C_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<int, int, int>, std::vector<SparseVec>> zcache_;
  mutable std::map<std::tuple<int, int, int>, HomologyBlock> ecache_;
};

// ---------------------------------------------------------------- page tables

struct PageEntry {
  int p = 0, q = 0, n = 0;
  std::size_t dim = 0;
  std::size_t d_rank = 0;  // rank of d_r leaving the slot
};

struct PageTable {
  int N = 0, r = 0, max_total = 0, max_filtration = 0;
  std::vector<PageEntry> entries;  // nonzero slots only
  bool zero() const { return entries.empty(); }
};

// All slots with total degree <= max_total and p <= max_filtration. When
// `verify` is set, checks d_r d_r = 0 and E_{r+1} = H(E_r, d_r) slot by slot.
inline PageTable page(const SpectralSequence& ss, int r, int max_total, int max_filtration, bool verify = true,
                      unsigned jobs = 1) {
  PageTable T;
  T.N = ss.component();
  T.r = r;
  T.max_total = max_total;
  T.max_filtration = max_filtration;
  std::vector<std::pair<int, int>> slots;
  for (int n = 0; n <= max_total; ++n)
    for (int p = ss.p_min(); p <= std::min(max_filtration, ss.p_max(n)); ++p) slots.emplace_back(p, n);
  std::vector<PageEntry> out(slots.size());
  parallel_for(slots.size(), jobs, [&](std::size_t k) {
    auto [p, n] = slots[k];
    PageSlot s = ss.slot(r, p, n);
    PageEntry e;
    e.p = p;
    e.n = n;
    e.q = n - p;
    e.dim = s.dim();
    e.d_rank = rank_of(s.d);
    if (verify) {
      if (s.dim() > 0) {
        PageSlot t = ss.slot(r, p + r, n + 1);
        for (const auto& col : s.d) {
          SparseVec dd;
          for (const auto& [i, c] : col) dd = axpy(dd, c, t.d[static_cast<std::size_t>(i)]);
          if (!dd.empty()) throw ConsistencyError("d_r d_r != 0 at (p, n) = (" + std::to_string(p) + ", " + std::to_string(n) + ")");
        }
      }
      std::size_t in_rank = 0;
      if (p - r >= ss.p_min()) in_rank = rank_of(ss.slot(r, p - r, n - 1).d);
      std::size_t next = ss.dim(r + 1, p, n);
      if (next + in_rank + e.d_rank != e.dim)
        throw ConsistencyError("E_{r+1} != H(E_r, d_r) at (p, n) = (" + std::to_string(p) + ", " + std::to_string(n) + ")");
    }
    out[k] = e;
  });
  for (auto& e : out)
    if (e.dim) T.entries.push_back(e);
  return T;
}

// ---------------------------------------------------------------- r-BV exactness

struct RBVReport {
  int r_max = 0, max_total = 0, max_filtration = 0;
  std::optional<int> r;  // smallest r with (0)E_{r+1} = 0 on the window
  std::vector<std::size_t> nonzero_slots;  // per r = 1..r_max, nonzero slots of (0)E_{r+1}
};

inline RBVReport r_bv_exactness(std::shared_ptr<const CyclicModel> E, int r_max, int max_total, int max_filtration,
                                unsigned jobs = 1) {
  RBVReport R;
  R.r_max = r_max;
  R.max_total = max_total;
  R.max_filtration = max_filtration;
  SpectralSequence ss(E, 0);
  for (int r = 1; r <= r_max; ++r) {
    PageTable T = page(ss, r + 1, max_total, max_filtration, true, jobs);
    R.nonzero_slots.push_back(T.entries.size());
    if (T.zero() && !R.r) R.r = r;
  }
  return R;
}

// ---------------------------------------------------------------- page checks

struct PageCheck {
  bool pass = true;
  std::size_t comparisons = 0;
  std::string note;
};

// Multiplication by u^N identifies (N)E_r^{l} with
// (0)E_r^{l+N} for l >= r - 1 (N >= 0), and u^{-N} identifies (0)E_r with
// (N)E_r^{*-N} for N < 0. Also checks S = ×u commutes with d_r.
inline PageCheck page_checks(std::shared_ptr<const CyclicModel> E, int r, int N_max, int max_total,
                             int max_filtration) {
  PageCheck R;
  const CyclicModel& e = *E;
  SpectralSequence zero(E, 0);
  auto power_u = [&](const Element& x, int k) {
    Element y = x;
    for (int i = 0; i < k; ++i) y = e.times_u(y);
    return y;
  };
  auto compare = [&](const SpectralSequence& src, int ps, int ns, const SpectralSequence& tgt, int pt, int nt,
                     int k) {
    HomologyBlock a = src.page_block(r, ps, ns);
    HomologyBlock b = tgt.page_block(r, pt, nt);
    ++R.comparisons;
    if (a.dim() != b.dim()) {
      R.pass = false;
      R.note = "dimension mismatch at N=" + std::to_string(src.component()) + " p=" + std::to_string(ps) +
               " n=" + std::to_string(ns);
      return;
    }
    std::vector<SparseVec> cols;
    for (const auto& rep : a.reps) {
      auto c = tgt.class_of(r, pt, nt, power_u(src.to_element(rep, ns), k));
      if (!c) {
        R.pass = false;
        R.note = "u-multiplication leaves Z_r";
        return;
      }
      cols.push_back(*c);
    }
    if (rank_of(cols) != b.dim()) {
      R.pass = false;
      R.note = "u-multiplication not bijective at p=" + std::to_string(ps) + " n=" + std::to_string(ns);
    }
  };
  for (int N = -N_max; N <= N_max && R.pass; ++N) {
    if (N == 0) continue;
    SpectralSequence other(E, N);
    for (int n = 0; n <= max_total && R.pass; ++n) {
      if (N > 0) {
        if (n + 2 * N > max_total) break;
        for (int l = std::max(r - 1, 0); l + N <= max_filtration && l <= other.p_max(n) && R.pass; ++l)
          compare(other, l, n, zero, l + N, n + 2 * N, N);
      } else {
        int k = -N;
        if (n + 2 * k > max_total) break;
        for (int l = 0; l + k <= max_filtration && l <= zero.p_max(n) && R.pass; ++l)
          compare(zero, l, n, other, l + k, n + 2 * k, k);
      }
    }
  }
  // S: (N)E_r^p -> (N-1)E_r^{p+1} commutes with d_r.
  for (int N = 0; N <= N_max && R.pass; ++N) {
    SpectralSequence src(E, N), tgt(E, N - 1);
    for (int n = 0; n + 3 <= max_total && R.pass; ++n)
      for (int p = src.p_min(); p <= std::min(max_filtration - r - 1, src.p_max(n)) && R.pass; ++p) {
        PageSlot s = src.slot(r, p, n);
        for (std::size_t i = 0; i < s.h.reps.size(); ++i) {
          Element x = src.to_element(s.h.reps[i], n);
          // S(d_r x) vs d_r(S x), compared in (N-1)E_r^{p+r+1}
          Element dx = e.D(x);
          auto lhs = tgt.class_of(r, p + r + 1, n + 3, e.times_u(dx));
          auto sx = tgt.class_of(r, p + 1, n + 2, e.times_u(x));
          if (!lhs || !sx) {
            R.pass = false;
            R.note = "S does not preserve Z_r";
            break;
          }
          PageSlot t = tgt.slot(r, p + 1, n + 2);
          SparseVec rhs;
          for (const auto& [j, c] : *sx) rhs = axpy(rhs, c, t.d[static_cast<std::size_t>(j)]);
          ++R.comparisons;
          if (!axpy(*lhs, Scalar(-1), rhs).empty()) {
            R.pass = false;
            R.note = "S does not commute with d_r";
            break;
          }
        }
      }
  }
  return R;
}

// ---------------------------------------------------------------- d_2 of a fundamental class

struct D2Report {
  bool omega_cycle = false;
  bool identity = false;     // s̃ω = δα
  bool nonzero = false;      // d_2[ω] = [s̃α] ≠ 0
  bool page_nonzero = false; // same verdict from the page machinery
  int degree = 0;
};

// For ω ∈ L^(0) with s̃ω = δα: d_2[ω] is the class of -s̃α u² in (0)E_2^2.
// Direct test: s̃α ∉ δ(L^(2)) + s̃(ker δ ∩ L^(1)).
inline D2Report d2_check(std::shared_ptr<const CyclicModel> E, const Element& omega, const Element& alpha,
                         bool use_pages = true) {
  D2Report R;
  const LoopModel& L = *E->L;
  R.degree = omega.degree().value_or(0);
  R.omega_cycle = L.delta(omega).is_zero();
  R.identity = L.s(omega) == L.delta(alpha);
  if (!R.omega_cycle || !R.identity) return R;
  const int a = alpha.degree().value();
  ComplexPtr C = hochschild_complex(E->L, true);
  Element sa = L.s(alpha);
  // span: δ of block (a-2, 2) and s̃ of cycles in block (a, 1)
  std::vector<SparseVec> span = C->differential_columns(a - 2, 2);
  auto z1 = kernel(C->differential_columns(a, 1));
  auto scols = derivation_columns(*C, L.s, a, 1, a - 1, 2);
  for (const auto& z : z1) {
    SparseVec v;
    for (const auto& [j, c] : z) v = axpy(v, c, scols[static_cast<std::size_t>(j)]);
    span.push_back(std::move(v));
  }
  Echelon ech;
  for (auto i : sparsity_order(span)) ech.insert(span[i]);
  auto target = C->to_vectors(sa, a - 1);
  R.nonzero = !ech.contains(target.at(2));
  if (use_pages) {
    SpectralSequence ss(E, 0);
    Element lift = E->from_L(omega) - E->times_u(E->from_L(alpha));
    auto cls = ss.class_of(2, 0, R.degree, lift);
    if (cls && !cls->empty()) {
      PageSlot s = ss.slot(2, 0, R.degree);
      SparseVec img;
      for (const auto& [i, c] : *cls) img = axpy(img, c, s.d[static_cast<std::size_t>(i)]);
      R.page_nonzero = !img.empty();
    }
  }
  return R;
}

}  // namespace loopalg
