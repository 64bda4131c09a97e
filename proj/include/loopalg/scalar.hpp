#pragma once

#include <gmpxx.h>

#include <string>

namespace loopalg {

// Exact rationals; GMP keeps them canonical after every operation.
using Scalar = mpq_class;

inline std::string to_string(const Scalar& q) { return q.get_str(); }

inline Scalar factorial(int n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n < 0 ? 0 : n));
  return Scalar(f);
}

inline Scalar binomial(int n, int k) {
  if (k < 0 || k > n) return Scalar(0);
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Scalar(b);
}

inline bool is_odd(int degree) { return (degree % 2 + 2) % 2 == 1; }

}  // namespace loopalg
