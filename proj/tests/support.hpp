#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "smcgen/model.hpp"
#include "smcgen/rng.hpp"

namespace smcgen::testing {

// Random strictly positive stationary model with S states.
inline ModelSpec random_model(int S, Rng& rng) {
  std::vector<double> g(static_cast<std::size_t>(S));
  for (auto& v : g) v = 0.2 + rng.uniform();
  Matrix M(static_cast<std::size_t>(S), static_cast<std::size_t>(S));
  for (int x = 0; x < S; ++x) {
    double total = 0.0;
    for (int y = 0; y < S; ++y) {
      const double v = 0.1 + rng.uniform();
      M(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
      total += v;
    }
    for (int y = 0; y < S; ++y) M(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) /= total;
  }
  return ModelSpec::make_stationary("random", std::move(g), std::move(M));
}

// Within `k` standard errors of a binomial proportion.
inline bool within_se(double estimate, double p, double trials, double k = 4.0) {
  const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / trials);
  return std::abs(estimate - p) <= k * se;
}

// Forward run with hand-written locations and ancestors.
inline ForwardRun manual_run(int N, std::vector<std::vector<int>> locations, std::vector<std::vector<int>> ancestors,
                             Scheme scheme = Scheme::multinomial()) {
  ForwardRun run;
  run.N = N;
  run.K = static_cast<int>(ancestors.size());
  run.scheme = scheme;
  for (const auto& row : locations) run.locations.insert(run.locations.end(), row.begin(), row.end());
  for (const auto& row : ancestors) run.ancestors.insert(run.ancestors.end(), row.begin(), row.end());
  return run;
}

}  // namespace smcgen::testing
