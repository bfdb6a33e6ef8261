#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smcgen/combinatorics.hpp"
#include "smcgen/model.hpp"
#include "smcgen/resampling.hpp"
#include "smcgen/scheme.hpp"

namespace smcgen {

enum class OracleMethod { enumeration, quadrature, closed_form };

struct ExactResult {
  double value = 0.0;
  std::optional<Rational> exact;  // set when the inputs were rational
  OracleMethod method = OracleMethod::enumeration;
  std::string operation;
};

// Probability that at least two of the given children share a parent after
// one resampling round with weights w. `children` defaults to 0..n-1; they
// matter for the ordered stratified and systematic schemes, where child i
// uses stratum i. Limits: N <= 8, n <= 4 (TooLarge otherwise).
ExactResult exact_merger_probability(std::span<const Rational> w, const Scheme& scheme, int n_lineages,
                                     std::span<const int> children = {});
ExactResult exact_merger_probability(const WeightVector& w, const Scheme& scheme, int n_lineages,
                                     std::span<const int> children = {});

// E[(nu(i))_order] under the scheme; parent_index is 0-based.
ExactResult exact_factorial_moment(std::span<const Rational> w, const Scheme& scheme, int parent_index,
                                   int order = 2);
ExactResult exact_factorial_moment(const WeightVector& w, const Scheme& scheme, int parent_index, int order = 2);

// Weights (1 - 3z, z, z, z) with four parents and three lineages.
std::array<Rational, 4> counterexample_weights(const Rational& z);

struct CounterexampleReport {
  double z = 0.0;
  // Stratified ordered (P_S) and multinomial (P_M) merger probabilities and
  // second factorial moments of the four family sizes, from enumeration.
  double P_S = 0.0;
  double P_M = 0.0;
  std::array<double, 4> moments_S{};
  std::array<double, 4> moments_M{};
  // The printed closed forms evaluated at z.
  double closed_P_S = 1.0;
  double closed_P_M = 0.0;
  std::array<double, 4> closed_moments_S{};
  std::array<double, 4> closed_moments_M{};
  // Companion variants, reported alongside.
  double P_S_shuffled = 0.0;
  double P_systematic = 0.0;
  std::array<double, 4> moments_systematic{};

  bool exact_agreement = false;  // enumeration equals closed form exactly (rational inputs)
  double max_abs_difference = 0.0;
  bool ordering_holds = false;   // P_M <= P_S with equality only at z = 0, moments_M >= moments_S
};

// z in [0, 1/12]; throws OutOfRange otherwise. The double overload uses the
// exact binary value of z.
CounterexampleReport counterexample_report(const Rational& z);
CounterexampleReport counterexample_report(double z);

// z, P_S, P_M, m_S1..m_S4, m_M1..m_M4, P_S_shuffled, P_systematic
void write_counterexample_csv(std::span<const CounterexampleReport> rows, const std::string& path,
                              const std::string& metadata);

struct MultinomialLemmaTerms {
  double power = 0.0;         // (Σ x)^α
  double distinct_sum = 0.0;  // Σ over distinct α-tuples of Π x
  double correction = 0.0;    // binom(α, 2) Σ x² (Σ x)^{α-2}
};

MultinomialLemmaTerms multinomial_lemma_terms(std::span<const double> x, int alpha);

// (Σx)^α <= Σ_distinct Π x + binom(α,2) Σx² (Σx)^{α-2}, and both signed
// rearrangements, within 1e-9 relative tolerance. Throws BadArity unless
// 2 <= alpha <= length(x).
bool verify_multinomial_lemma(std::span<const double> x, int alpha);

enum class PairConvention {
  ordered,   // sum over (h, h') with h != h'
  unordered  // sum over h < h'
};

struct StochasticLemmaTerms {
  double lhs = 0.0;
  double rhs = 0.0;
};

// a(m, i) with columns summing to 1; v and ell are 0-based.
StochasticLemmaTerms left_stochastic_lemma_terms(const Matrix& a, int v, std::span<const int> ell,
                                                 PairConvention pairs = PairConvention::ordered);
// Throws NotStochastic or TooLarge (N > 7 or r > 4).
bool verify_left_stochastic_lemma(const Matrix& a, int v, std::span<const int> ell,
                                  PairConvention pairs = PairConvention::ordered);

// Quenched coalescence profile by enumerating every parent path of the b
// lineages over reverse generations j+1..K (multinomial resampling only).
// Returns c(k) for k = j+1..K; TooLarge beyond 5*10^7 paths.
std::vector<double> enumerate_profile(const ModelSpec& model, const ForwardRun& run, std::span<const int> labels,
                                      int j, int K);

// Exact joint law of the parents of `children` given the parent locations
// and all child locations, by enumerating permutations and uniform segments.
// Limits: N <= 7.
std::map<std::vector<int>, double> exact_conditional_parent_law(const ModelSpec& model, const Scheme& scheme, int f,
                                                                std::span<const int> x_parents,
                                                                std::span<const int> x_children,
                                                                std::span<const int> children);

}  // namespace smcgen
