#include "smcgen/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smcgen/errors.hpp"

namespace smcgen {

int WeightVector::locate(double u) const {
  // Last m with cumulative[m] <= u, so that u in [cum[m], cum[m + 1]) maps to m.
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto m = static_cast<int>(it - cumulative.begin()) - 1;
  return std::clamp(m, 0, static_cast<int>(weights.size()) - 1);
}

WeightVector normalize(std::span<const double> values, ZeroWeights zeros) {
  if (values.empty()) throw InvalidArgument("cannot normalise an empty weight vector");
  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0 || (zeros == ZeroWeights::reject && !(v > 0.0))) {
      throw NonPositiveWeight("weights must be finite and strictly positive");
    }
    total += v;
  }
  if (!(total > 0.0)) throw NonPositiveWeight("weights sum to zero");
  WeightVector w;
  w.weights.resize(values.size());
  w.cumulative.resize(values.size() + 1);
  w.cumulative[0] = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    w.weights[i] = values[i] / total;
    if (zeros == ZeroWeights::reject && w.weights[i] <= 1e-300) {
      throw NonPositiveWeight("normalised weight underflows");
    }
    acc += w.weights[i];
    w.cumulative[i + 1] = acc;
  }
  // Force the top of the last non-empty interval to 1; trailing empty intervals stay empty.
  std::size_t last = values.size();
  while (last > 0 && w.weights[last - 1] == 0.0) --last;
  for (std::size_t i = last; i <= values.size(); ++i) w.cumulative[i] = 1.0;
  for (std::size_t i = 1; i <= values.size(); ++i) {
    w.cumulative[i] = std::min(std::max(w.cumulative[i], w.cumulative[i - 1]), 1.0);
  }
  return w;
}

AncestorVector multinomial_ancestors(const WeightVector& w, Rng& rng) {
  AncestorVector a;
  a.parents.resize(w.size());
  for (auto& p : a.parents) p = w.locate(rng.uniform());
  return a;
}

double stratum_point(int s, double v, int N) {
  const double lo = static_cast<double>(s) / N;
  const double hi = static_cast<double>(s + 1) / N;
  const double p = (s + v) / N;
  if (p < lo) return lo;
  if (p >= hi) return std::nextafter(hi, lo);
  return p;
}

namespace {

std::vector<int> draw_permutation(std::size_t N, Rng& rng) {
  std::vector<int> sigma(N);
  std::iota(sigma.begin(), sigma.end(), 0);
  rng.shuffle(sigma);
  return sigma;
}

AncestorVector from_points(const WeightVector& w, const std::vector<double>& points, bool shuffle,
                           Rng& rng) {
  AncestorVector a;
  a.parents.resize(w.size());
  if (shuffle) {
    auto sigma = draw_permutation(w.size(), rng);
    for (std::size_t i = 0; i < w.size(); ++i) {
      a.parents[i] = w.locate(points[static_cast<std::size_t>(sigma[i])]);
    }
    a.shuffle = std::move(sigma);
  } else {
    for (std::size_t i = 0; i < w.size(); ++i) a.parents[i] = w.locate(points[i]);
  }
  return a;
}

}  // namespace

AncestorVector stratified_ancestors(const WeightVector& w, bool shuffle, Rng& rng) {
  const int N = static_cast<int>(w.size());
  std::vector<double> points(w.size());
  for (int s = 0; s < N; ++s) points[static_cast<std::size_t>(s)] = stratum_point(s, rng.uniform(), N);
  return from_points(w, points, shuffle, rng);
}

AncestorVector systematic_ancestors(const WeightVector& w, Rng& rng, bool shuffle) {
  const int N = static_cast<int>(w.size());
  const double u = rng.uniform();
  std::vector<double> points(w.size());
  for (int s = 0; s < N; ++s) points[static_cast<std::size_t>(s)] = stratum_point(s, u, N);
  return from_points(w, points, shuffle, rng);
}

AncestorVector sample_ancestors(const WeightVector& w, const Scheme& scheme, Rng& rng) {
  switch (scheme.kind) {
    case SchemeKind::multinomial:
      return multinomial_ancestors(w, rng);
    case SchemeKind::stratified:
      return stratified_ancestors(w, scheme.shuffle, rng);
    case SchemeKind::systematic:
      return systematic_ancestors(w, rng, scheme.shuffle);
  }
  throw InvalidArgument("unknown scheme");
}

FamilySizes family_sizes(std::span<const int> parents) {
  FamilySizes nu;
  nu.counts.assign(parents.size(), 0);
  for (int p : parents) {
    if (p < 0 || static_cast<std::size_t>(p) >= parents.size()) {
      throw LabelOutOfRange("ancestor index outside the population");
    }
    ++nu.counts[static_cast<std::size_t>(p)];
  }
  return nu;
}

FamilySizes family_sizes(const AncestorVector& a) { return family_sizes(std::span<const int>(a.parents)); }

std::vector<double> backward_ancestor_distribution(const ModelSpec& model, int k,
                                                   std::span<const int> x_parents, int child_state) {
  std::vector<double> p(x_parents.size());
  double total = 0.0;
  for (std::size_t m = 0; m < x_parents.size(); ++m) {
    p[m] = model.backward_weight(k, x_parents[m], child_state);
    total += p[m];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace smcgen
