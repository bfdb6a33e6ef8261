#pragma once

#include <cstdint>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace smcgen {

// Expression templates are disabled so that mixed expressions have plain types.
using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>, boost::multiprecision::et_off>;
using Rational =
    boost::multiprecision::number<boost::multiprecision::cpp_rational_backend, boost::multiprecision::et_off>;
__extension__ typedef __int128 Int128;
__extension__ typedef unsigned __int128 UInt128;

// All set partitions of {0, .., r-1} as restricted growth strings: entry i is
// the block of element i and blocks are numbered in order of first appearance.
const std::vector<std::vector<int>>& set_partitions(int r);

inline int block_count(const std::vector<int>& rgs) {
  int top = -1;
  for (int b : rgs) top = b > top ? b : top;
  return top + 1;
}

inline double binom2(int b) { return 0.5 * b * (b - 1); }

double binomial(int n, int k);

template <class T>
T falling(T x, int k) {
  T r = 1;
  for (int i = 0; i < k; ++i) r *= (x - i);
  return r;
}

// Σ over tuples (i_1..i_r) of distinct indices in [0, N) of Π_r f[r][i_r],
// by Möbius inversion over the partition lattice. Exact for integer T.
template <class T>
T distinct_tuple_sum(const std::vector<std::vector<T>>& f) {
  const int r = static_cast<int>(f.size());
  if (r == 0) return T(1);
  const std::size_t N = f.front().size();
  T total = 0;
  for (const auto& rgs : set_partitions(r)) {
    const int nb = block_count(rgs);
    T term = 1;
    for (int b = 0; b < nb; ++b) {
      int size = 0;
      T s = 0;
      for (std::size_t i = 0; i < N; ++i) {
        T p = 1;
        for (int e = 0; e < r; ++e) {
          if (rgs[static_cast<std::size_t>(e)] == b) p *= f[static_cast<std::size_t>(e)][i];
        }
        s += p;
      }
      for (int e = 0; e < r; ++e) size += rgs[static_cast<std::size_t>(e)] == b;
      // μ contribution of a block of this size: (-1)^{size-1} (size-1)!
      T mu = 1;
      for (int q = 1; q < size; ++q) mu *= -q;
      term *= mu * s;
    }
    total += term;
  }
  return total;
}

}  // namespace smcgen
