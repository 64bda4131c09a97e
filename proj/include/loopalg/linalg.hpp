#pragma once

// Sparse exact linear algebra over Q.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "loopalg/scalar.hpp"

namespace loopalg {

// Sorted by index, no stored zeros.
using SparseVec = std::vector<std::pair<int, Scalar>>;

inline SparseVec unit_vector(int i) { return SparseVec{{i, Scalar(1)}}; }

// a + c*b
inline SparseVec axpy(const SparseVec& a, const Scalar& c, const SparseVec& b) {
  SparseVec r;
  r.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      r.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      r.emplace_back(b[j].first, c * b[j].second);
      ++j;
    } else {
      Scalar v = a[i].second + c * b[j].second;
      if (sgn(v) != 0) r.emplace_back(a[i].first, std::move(v));
      ++i;
      ++j;
    }
  }
  return r;
}

inline void scale(SparseVec& v, const Scalar& c) {
  for (auto& e : v) e.second *= c;
}

// Incremental row echelon form. Each row's pivot is its leading index and is
// normalized to 1. Rows may carry a label vector (e.g. class coordinates or the
// combination of inputs that produced them).
class Echelon {
 public:
  std::size_t rank() const { return rows_.size(); }
  const std::vector<SparseVec>& rows() const { return rows_; }
  const std::vector<SparseVec>& labels() const { return labels_; }

  // Eliminates every pivot index from v. On return v = v_in - sum c_k row_k;
  // `coords` (if given) receives sum c_k label_k added to its initial value.
  SparseVec reduce(SparseVec v, SparseVec* coords = nullptr) const {
    std::size_t k = 0;
    while (k < v.size()) {
      auto it = pivot_.find(v[k].first);
      if (it == pivot_.end()) {
        ++k;
        continue;
      }
      const Scalar c = v[k].second;
      const SparseVec& row = rows_[static_cast<std::size_t>(it->second)];
      SparseVec tail(v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
      tail = axpy(tail, -c, row);
      v.resize(k);
      v.insert(v.end(), tail.begin(), tail.end());
      if (coords && !labels_[static_cast<std::size_t>(it->second)].empty())
        *coords = axpy(*coords, c, labels_[static_cast<std::size_t>(it->second)]);
    }
    return v;
  }

  bool contains(const SparseVec& v) const { return reduce(v).empty(); }

  // Adds v with the given label; returns false if v was dependent. In that case
  // `dependency` (if given) receives label - sum c_k label_k, the relation found.
  bool insert(SparseVec v, SparseVec label = {}, SparseVec* dependency = nullptr) {
    SparseVec used;
    v = reduce(std::move(v), &used);
    SparseVec lab = axpy(label, Scalar(-1), used);
    if (v.empty()) {
      if (dependency) *dependency = std::move(lab);
      return false;
    }
    Scalar inv = 1 / v.front().second;
    scale(v, inv);
    scale(lab, inv);
    pivot_.emplace(v.front().first, static_cast<int>(rows_.size()));
    rows_.push_back(std::move(v));
    labels_.push_back(std::move(lab));
    return true;
  }

  // Adds an already reduced row verbatim with its label (no normalization of the label).
  void insert_reduced(SparseVec v, SparseVec label) {
    Scalar inv = 1 / v.front().second;
    scale(v, inv);
    scale(label, inv);
    pivot_.emplace(v.front().first, static_cast<int>(rows_.size()));
    rows_.push_back(std::move(v));
    labels_.push_back(std::move(label));
  }

 private:
  std::unordered_map<int, int> pivot_;
  std::vector<SparseVec> rows_;
  std::vector<SparseVec> labels_;
};

// Insertion order that keeps fill-in low: sparsest vectors first, ties by position.
inline std::vector<std::size_t> sparsity_order(const std::vector<SparseVec>& vs) {
  std::vector<std::size_t> order(vs.size());
  for (std::size_t i = 0; i < vs.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return vs[a].size() < vs[b].size(); });
  return order;
}

inline std::size_t rank_of(const std::vector<SparseVec>& vs) {
  Echelon e;
  for (auto i : sparsity_order(vs)) e.insert(vs[i]);
  return e.rank();
}

// Kernel of the map sending basis vector j to columns[j]; vectors in source coordinates.
inline std::vector<SparseVec> kernel(const std::vector<SparseVec>& columns) {
  Echelon e;
  std::vector<SparseVec> ker;
  for (auto j : sparsity_order(columns)) {
    SparseVec dep;
    if (!e.insert(columns[j], unit_vector(static_cast<int>(j)), &dep)) ker.push_back(std::move(dep));
  }
  for (auto& v : ker) std::sort(v.begin(), v.end(), [](auto& a, auto& b) { return a.first < b.first; });
  return ker;
}

// Some x with sum_j x_j columns[j] = b, or false.
inline bool solve(const std::vector<SparseVec>& columns, const SparseVec& b, SparseVec& x) {
  Echelon e;
  for (std::size_t j = 0; j < columns.size(); ++j) e.insert(columns[j], unit_vector(static_cast<int>(j)));
  SparseVec coords;
  SparseVec r = e.reduce(b, &coords);
  if (!r.empty()) return false;
  x = std::move(coords);
  return true;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must be written
// to per-index slots so output never depends on scheduling.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(jobs, n); ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace loopalg
