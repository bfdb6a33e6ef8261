#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smcgen/lineage.hpp"
#include "smcgen/model.hpp"
#include "smcgen/rng.hpp"
#include "smcgen/scheme.hpp"

namespace smcgen {

struct CoalescentSample {
  std::vector<double> holding_times;                // at block counts n, n-1, ..., 2
  std::vector<std::pair<int, int>> merger_pairs;    // block positions (i < j) in the current partition
};

CoalescentSample sample_kingman(int n, Rng& rng);

// exp(-binom(k, 2) t)
double holding_survivor(int k, double t);

// sup_x |F_n(x) - F(x)|; TooFewSamples below 10 samples.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf);

// Kolmogorov-Smirnov distance between a Kaplan-Meier estimate and `cdf` over
// [0, horizon]. With nothing censored this is the ordinary statistic
// restricted to [0, horizon].
double ks_statistic_censored(std::span<const double> times, std::span<const char> censored,
                             const std::function<double(double)>& cdf, double horizon);

// Two-sample statistic sup |F_a - F_b|.
double ks_two_sample(std::span<const double> a, std::span<const double> b);

// P(D_n > d) under the null, asymptotic Kolmogorov law with the
// Stephens small-sample correction.
double kolmogorov_pvalue(double d, double effective_n);

// Upper tail of chi-square with df degrees of freedom.
double chi_square_sf(double statistic, double df);

// Pearson test of equal cell probabilities; returns the p-value.
double chi_square_uniform_pvalue(std::span<const std::int64_t> counts);

enum class Engine { automatic, full, lumped };
Engine parse_engine(const std::string& name);
std::string to_string(Engine engine);

struct ConvergenceOptions {
  double t_max = 3.0;
  int replicates = 1000;
  std::uint64_t master_seed = 0;
  Engine engine = Engine::automatic;
  int K = 0;                  // 0 sizes the horizon from a pilot run
  bool second_epoch = true;   // also time the second merger when n >= 3
  MonteCarloOptions mc;       // used when the profile has to be estimated
  unsigned threads = 0;
};

struct ReplicateOutcome {
  double T = 0.0;             // rescaled first-merger time, or the censoring time
  bool horizon_failure = false;
  int first_merger_generation = 0;
  int pair = -1;              // merged pair for binary mergers
  int merger_size = 0;        // lineages in the merging group (0 when censored)
  bool multi = false;         // block count fell by two or more
  double multi_given_merge = 0.0;  // filter probability of a multiple merger given a merger at that generation
  bool sandwich_ok = true;
  // Second epoch (n >= 3, enabled and first merger binary).
  bool has_second = false;
  double T2 = 0.0;
  bool second_censored = false;
};

struct ConvergenceReport {
  std::string model;
  std::string scheme;
  std::string engine;
  int n = 0;
  int N = 0;
  int K = 0;
  int replicates = 0;
  double t_max = 0.0;
  double pilot_rate = 0.0;
  std::vector<ReplicateOutcome> outcomes;

  std::vector<double> rescaled_first_merger_times;
  std::vector<std::int64_t> merged_pair_counts;
  std::int64_t multi_merger_count = 0;
  std::int64_t horizon_failures = 0;
  std::int64_t sandwich_violations = 0;
  double ks_statistic = 0.0;
  double ks_pvalue = 0.0;
  double chi2_p = 1.0;
  double multi_fraction = 0.0;      // multi_merger_count / replicates
  double multi_fraction_rb = 0.0;   // mean of multi_given_merge over observed mergers
  std::optional<double> second_epoch_ks;
  std::int64_t second_epoch_samples = 0;
};

ConvergenceReport convergence_experiment(const ModelSpec& model, const Scheme& scheme, int N, int n,
                                         const ConvergenceOptions& options);

// One row per replicate plus summary.json next to it.
void write_convergence_report(const ConvergenceReport& report, const std::string& directory,
                              const std::string& metadata);
std::string convergence_summary_json(const ConvergenceReport& report);

// First-merger generation of two lineages for the neutral model is
// Geometric(1/N); this returns the bin probabilities for generations 1..bins-1
// with the final bin holding the tail.
std::vector<double> geometric_bins(double p, int bins);

}  // namespace smcgen
