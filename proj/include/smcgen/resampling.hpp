#pragma once

#include <optional>
#include <span>
#include <vector>

#include "smcgen/model.hpp"
#include "smcgen/rng.hpp"
#include "smcgen/scheme.hpp"

namespace smcgen {

// Normalised weights and their cumulative sums; cumulative[0] = 0 and
// cumulative[N] = 1 exactly. Parent m owns the interval
// [cumulative[m], cumulative[m + 1]).
struct WeightVector {
  std::vector<double> weights;
  std::vector<double> cumulative;

  std::size_t size() const { return weights.size(); }
  // Index of the interval containing u in [0, 1).
  int locate(double u) const;
};

enum class ZeroWeights {
  reject,  // any entry <= 1e-300 after normalisation raises NonPositiveWeight
  allow    // exact zeros are kept as empty intervals (oracle and counterexample inputs)
};

WeightVector normalize(std::span<const double> values, ZeroWeights zeros = ZeroWeights::reject);

struct AncestorVector {
  std::vector<int> parents;
  // sigma with child i served by stratum sigma[i]; empty unless shuffled.
  std::optional<std::vector<int>> shuffle;

  std::size_t size() const { return parents.size(); }
};

struct FamilySizes {
  std::vector<int> counts;
};

AncestorVector multinomial_ancestors(const WeightVector& w, Rng& rng);
AncestorVector stratified_ancestors(const WeightVector& w, bool shuffle, Rng& rng);
AncestorVector systematic_ancestors(const WeightVector& w, Rng& rng, bool shuffle = false);
AncestorVector sample_ancestors(const WeightVector& w, const Scheme& scheme, Rng& rng);

FamilySizes family_sizes(const AncestorVector& a);
FamilySizes family_sizes(std::span<const int> parents);

// Point of stratum s (0-based) at relative offset v in [0, 1): (s + v) / N,
// clamped so it never leaves [s / N, (s + 1) / N) through rounding.
double stratum_point(int s, double v, int N);

// p(m) proportional to g_k(x_parents[m]) M_k(x_parents[m], child_state), where k
// is the forward generation of the parents.
std::vector<double> backward_ancestor_distribution(const ModelSpec& model, int k,
                                                   std::span<const int> x_parents, int child_state);

}  // namespace smcgen
