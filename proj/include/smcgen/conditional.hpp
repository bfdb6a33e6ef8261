#pragma once

#include <memory>
#include <span>
#include <vector>

#include "smcgen/model.hpp"
#include "smcgen/resampling.hpp"
#include "smcgen/rng.hpp"
#include "smcgen/scheme.hpp"

namespace smcgen {

// Draws the parents of selected children in one generation given both the
// parent locations X_f and the child locations X_{f+1}. This is the law of
// the relevant entries of a_f conditioned on the location history, which is
// what quenched lineage probabilities are built from.
//
// Multinomial, stratified-ordered and systematic-ordered sampling is exact.
// The shuffled variants integrate over the permutation with a Metropolis
// chain whose state persists between calls; `sweeps` controls how far the
// chain moves between consecutive draws.
class ConditionalAncestorSampler {
 public:
  virtual ~ConditionalAncestorSampler() = default;

  // out[i] receives the parent index of child children[i].
  virtual void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) = 0;
  virtual bool exact() const = 0;
};

struct ConditionalOptions {
  int burn_in_sweeps = 50;
  int sweeps = 3;
};

// `f` is the forward generation of the parents.
std::unique_ptr<ConditionalAncestorSampler> make_conditional_sampler(
    const ModelSpec& model, const Scheme& scheme, int f, std::span<const int> x_parents,
    std::span<const int> x_children, Rng& rng, const ConditionalOptions& options = {});

// N |[s/N, (s+1)/N) ∩ [cum[m], cum[m+1])|, the probability that a uniform on
// stratum s lands in parent m's interval.
double stratum_overlap(const WeightVector& w, int s, int m);

}  // namespace smcgen
