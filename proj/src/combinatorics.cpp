#include "smcgen/combinatorics.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace smcgen {

namespace {

void extend(std::vector<int>& prefix, int r, int top, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(prefix.size()) == r) {
    out.push_back(prefix);
    return;
  }
  for (int b = 0; b <= top + 1; ++b) {
    prefix.push_back(b);
    extend(prefix, r, std::max(top, b), out);
    prefix.pop_back();
  }
}

}  // namespace

const std::vector<std::vector<int>>& set_partitions(int r) {
  static std::mutex mutex;
  static std::map<int, std::vector<std::vector<int>>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(r);
  if (it != cache.end()) return it->second;
  std::vector<std::vector<int>> out;
  std::vector<int> prefix;
  if (r > 0) extend(prefix, r, -1, out);
  return cache.emplace(r, std::move(out)).first->second;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r < 1e15 ? std::round(r) : r;
}

}  // namespace smcgen
