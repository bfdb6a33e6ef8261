#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smcgen/genealogy.hpp"
#include "smcgen/model.hpp"
#include "smcgen/resampling.hpp"
#include "smcgen/rng.hpp"
#include "smcgen/scheme.hpp"

namespace smcgen {

// Pairs (h, h') with h < h' are numbered lexicographically: (0,1), (0,2), ..., (b-2, b-1).
int pair_count(int b);
int pair_index(int h, int hp, int b);
std::pair<int, int> pair_at(int index, int b);

// Distribution of the b block labels given no merger so far, stored densely
// over [0, N)^b with index Σ_i labels[i] N^i. Tuples with repeated entries
// carry zero mass.
struct LabelDistribution {
  int arity = 0;
  int N = 0;
  std::vector<double> probabilities;

  static constexpr std::size_t max_entries = 10'000'000;

  static LabelDistribution point_mass(int N, std::span<const int> labels);
  double mass(std::span<const int> labels) const;
  double total() const;
};

struct FilterStep {
  double merge_prob = 0.0;
  std::vector<double> pair_probs;  // exactly that pair shares a parent, all others distinct
  double multi_prob = 0.0;         // block count drops by two or more
};

struct LabelStep : FilterStep {
  LabelDistribution next;
};

// One exact quenched step at reverse generation k for multinomial resampling.
// Throws ArityTooLarge when N^b exceeds LabelDistribution::max_entries.
LabelStep propagate_labels(const ModelSpec& model, const ForwardRun& run, int k, const LabelDistribution& dist);

// The same filter reduced to lineage states. With multinomial resampling the
// conditional label law given no merger is uniform over distinct labels with
// given states, so a distribution over S^b state tuples is exact and the cost
// depends on N only through the state counts of each generation.
class LumpedLineageFilter {
 public:
  LumpedLineageFilter(const ModelSpec& model, std::vector<int> lineage_states);

  // `f` is the forward generation of the parents and parent_counts[u] the
  // number of parents in state u.
  FilterStep step(int f, std::span<const int> parent_counts);

  int arity() const { return arity_; }
  // Mass over state tuples, index Σ_i s_i S^i.
  const std::vector<double>& state_distribution() const { return rho_; }

 private:
  const ModelSpec& model_;
  int arity_;
  int S_;
  std::vector<double> rho_;
  std::vector<std::vector<int>> partitions_;  // block id per lineage, restricted growth strings
};

struct CoalescenceProfile {
  int xi_size = 0;
  int start = 0;                                // j
  std::vector<double> values;                   // c at k = start + 1, start + 2, ...
  std::vector<std::vector<double>> pair_values; // [pair][k - start - 1], unscaled probabilities
  std::vector<double> multi_values;
  std::vector<double> merge_values;             // any-merger probability, unscaled
  bool exact = true;
  std::vector<double> ci_halfwidth;             // on the c scale; empty in exact mode
  std::vector<double> ci_lower;                 // Wilson bounds on the c scale
  std::vector<double> ci_upper;

  int last_generation() const { return start + static_cast<int>(values.size()); }
  double at(int k) const { return values[static_cast<std::size_t>(k - start - 1)]; }

  void append(const FilterStep& step);
};

// Exact profile for k = j + 1 .. K by iterating propagate_labels from the point mass on `labels`.
CoalescenceProfile coalescence_profile(const ModelSpec& model, const ForwardRun& run, int b,
                                       std::span<const int> labels, int j, int K);

// Exact profile via the lumped filter; any N.
CoalescenceProfile lumped_coalescence_profile(const ModelSpec& model, const ForwardRun& run, int b,
                                              std::span<const int> labels, int j, int K);

// State counts per state of reverse generation k.
std::vector<int> state_counts(const ForwardRun& run, int k, int S);

struct MonteCarloOptions {
  int replicates = 1000;
  int min_survivors = 100;
  int sweeps = 3;
  int burn_in_sweeps = 50;
};

// Pool-based estimate for any scheme: a pool of label tuples is pushed back
// one generation at a time through the conditional ancestor sampler; merger
// frequencies give the profile and survivors are resampled to refill the pool.
// Throws DegenerateSurvival when fewer than min_survivors are left to estimate
// a further generation.
CoalescenceProfile estimate_profile_mc(const ModelSpec& model, const ForwardRun& run, int b,
                                       std::span<const int> labels, int j, int K, Rng& rng,
                                       const MonteCarloOptions& options = {});

// Wilson score interval half-width for `successes` out of `trials` at z = 1.96.
struct WilsonInterval {
  double lower = 0.0;
  double upper = 1.0;
};
WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z = 1.959963984540054);

// Generalised inverse of the cumulative profile.
class Timescale {
 public:
  explicit Timescale(const CoalescenceProfile& profile);

  int start() const { return start_; }
  // Σ_{k=j+1}^{s} c(k); cumulative(j) = 0.
  double cumulative(int s) const { return prefix_[static_cast<std::size_t>(s - start_)]; }
  double value(int s) const { return values_[static_cast<std::size_t>(s - start_ - 1)]; }
  int last_generation() const { return start_ + static_cast<int>(values_.size()); }
  double total() const { return prefix_.back(); }

  // min{s >= j : cumulative(s) >= t}; tau(0) = j. Throws HorizonExceeded.
  int tau(double t) const;
  // t <= cumulative(tau) <= t + c(tau) <= t + 1.
  bool sandwich_holds(double t) const;

 private:
  int start_;
  std::vector<double> values_;
  std::vector<double> prefix_;
};

int timescale_inverse(const CoalescenceProfile& profile, double t);

// Comparison formula for a merger from xi to eta given family sizes nu:
// (1 / (N)_{|xi|}) Σ over distinct (i_1..i_{|eta|}) of Π_r (nu(i_r))_{b_r}.
double neutral_formula_probability(const FamilySizes& nu, const Partition& xi, const Partition& eta);

// Any-merger probability for b distinct lineages under the same formula.
double neutral_any_merger_probability(const FamilySizes& nu, int b);

struct DiscrepancyRow {
  int k = 0;
  std::int64_t at_risk = 0;
  std::int64_t observed = 0;
  double expected = 0.0;
  double variance = 0.0;
};

struct DiscrepancyReport {
  std::string model;
  std::string scheme;
  int N = 0;
  int n = 0;
  int K = 0;
  int replicates = 0;
  std::vector<DiscrepancyRow> rows;
  double z_score = 0.0;
  double mean_abs_deviation = 0.0;  // mean over generations of |observed - expected| / at_risk
};

// Compares observed first-merger indicators of the traced sample (labels
// 0..n-1) with the comparison formula evaluated on the realised family sizes,
// over reverse generations 1..K at which no merger has happened yet.
DiscrepancyReport discrepancy_experiment(const ModelSpec& model, const Scheme& scheme, int N, int n,
                                         int replicates, int K, std::uint64_t master_seed,
                                         unsigned threads = 0);

// k, c_value, ci_halfwidth, multi_prob, pair_<h>_<h'>...
void write_profile_csv(const CoalescenceProfile& profile, const std::string& path, const std::string& metadata);
// t, tau
void write_timescale_csv(const Timescale& timescale, std::span<const double> t_grid, const std::string& path,
                         const std::string& metadata);
void write_discrepancy_csv(const DiscrepancyReport& report, const std::string& path, const std::string& metadata);

}  // namespace smcgen
