#include "smcgen/lineage.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smcgen/combinatorics.hpp"
#include "smcgen/conditional.hpp"
#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"

namespace smcgen {

int pair_count(int b) { return b * (b - 1) / 2; }

int pair_index(int h, int hp, int b) {
  if (h > hp) std::swap(h, hp);
  // Pairs starting below h: Σ_{i<h} (b - 1 - i).
  return h * (2 * b - h - 1) / 2 + (hp - h - 1);
}

std::pair<int, int> pair_at(int index, int b) {
  for (int h = 0; h < b; ++h) {
    const int row = b - 1 - h;
    if (index < row) return {h, h + 1 + index};
    index -= row;
  }
  throw OutOfRange("pair index out of range");
}

namespace {

std::size_t checked_power(int N, int b) {
  std::size_t size = 1;
  for (int i = 0; i < b; ++i) {
    if (size > LabelDistribution::max_entries / static_cast<std::size_t>(N)) {
      throw ArityTooLarge("N^b exceeds the exact-filter limit of 10^7 label tuples");
    }
    size *= static_cast<std::size_t>(N);
  }
  return size;
}

// Classifies a tuple of parent labels: -1 all distinct, -2 two or more
// blocks lost, otherwise the index of the single pair that merged.
int classify(const int* v, int b) {
  int equal_pairs = 0;
  int pair = -1;
  for (int h = 0; h < b; ++h) {
    for (int hp = h + 1; hp < b; ++hp) {
      if (v[h] == v[hp]) {
        ++equal_pairs;
        pair = pair_index(h, hp, b);
      }
    }
  }
  if (equal_pairs == 0) return -1;
  return equal_pairs == 1 ? pair : -2;
}

void require_multinomial(const ForwardRun& run) {
  if (run.scheme.kind != SchemeKind::multinomial) {
    throw InvalidArgument("exact lineage filters require multinomial resampling; use the Monte Carlo estimate");
  }
}

void check_window(const ForwardRun& run, std::span<const int> labels, int b, int j, int K) {
  if (b < 2) throw InvalidArgument("profiles need at least two blocks");
  if (labels.size() != static_cast<std::size_t>(b)) throw InvalidArgument("need exactly b block labels");
  if (j < 0 || K > run.K || K <= j) throw OutOfRange("profile window must satisfy 0 <= j < K <= run.K");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= run.N) throw LabelOutOfRange("label outside [0, N)");
    for (std::size_t h = 0; h < i; ++h) {
      if (labels[h] == labels[i]) throw DuplicateLabel("block labels must be distinct");
    }
  }
}

}  // namespace

LabelDistribution LabelDistribution::point_mass(int N, std::span<const int> labels) {
  LabelDistribution d;
  d.arity = static_cast<int>(labels.size());
  d.N = N;
  d.probabilities.assign(checked_power(N, d.arity), 0.0);
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int l : labels) {
    if (l < 0 || l >= N) throw LabelOutOfRange("label outside [0, N)");
    index += static_cast<std::size_t>(l) * stride;
    stride *= static_cast<std::size_t>(N);
  }
  d.probabilities[index] = 1.0;
  return d;
}

double LabelDistribution::mass(std::span<const int> labels) const {
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int l : labels) {
    index += static_cast<std::size_t>(l) * stride;
    stride *= static_cast<std::size_t>(N);
  }
  return probabilities[index];
}

double LabelDistribution::total() const {
  double s = 0.0;
  for (double p : probabilities) s += p;
  return s;
}

LabelStep propagate_labels(const ModelSpec& model, const ForwardRun& run, int k, const LabelDistribution& dist) {
  require_multinomial(run);
  const int b = dist.arity;
  const int N = run.N;
  if (b < 2) throw InvalidArgument("propagate_labels needs at least two blocks");
  if (k < 1 || k > run.K) throw OutOfRange("reverse generation outside the run");
  const std::size_t size = checked_power(N, b);
  if (dist.N != N || dist.probabilities.size() != size) throw InvalidArgument("distribution does not match run");

  const int S = model.state_count;
  const int f = run.forward_index(k);
  const auto x = run.reverse_locations(k);
  const auto y = run.reverse_locations(k - 1);
  // P[s][m]: probability that a lineage at a child in state s picks parent m.
  std::vector<double> P(static_cast<std::size_t>(S) * static_cast<std::size_t>(N));
  for (int s = 0; s < S; ++s) {
    auto row = backward_ancestor_distribution(model, f, x, s);
    std::copy(row.begin(), row.end(), P.begin() + static_cast<std::ptrdiff_t>(s) * N);
  }

  // Apply the per-lineage transition along each axis of the tensor. Children
  // enter only through their state, so each fibre is first reduced to S sums.
  std::vector<double> cur = dist.probabilities;
  std::vector<double> nxt(size);
  std::vector<double> by_state(static_cast<std::size_t>(S));
  std::size_t stride = 1;
  for (int axis = 0; axis < b; ++axis) {
    const std::size_t block = stride * static_cast<std::size_t>(N);
    for (std::size_t outer = 0; outer < size; outer += block) {
      for (std::size_t inner = 0; inner < stride; ++inner) {
        const std::size_t base = outer + inner;
        std::fill(by_state.begin(), by_state.end(), 0.0);
        bool any = false;
        for (int c = 0; c < N; ++c) {
          const double v = cur[base + static_cast<std::size_t>(c) * stride];
          if (v != 0.0) {
            by_state[static_cast<std::size_t>(y[static_cast<std::size_t>(c)])] += v;
            any = true;
          }
        }
        for (int m = 0; m < N; ++m) {
          double acc = 0.0;
          if (any) {
            for (int s = 0; s < S; ++s) {
              acc += by_state[static_cast<std::size_t>(s)] * P[static_cast<std::size_t>(s * N + m)];
            }
          }
          nxt[base + static_cast<std::size_t>(m) * stride] = acc;
        }
      }
    }
    std::swap(cur, nxt);
    stride = block;
  }

  LabelStep out;
  out.pair_probs.assign(static_cast<std::size_t>(pair_count(b)), 0.0);
  out.next.arity = b;
  out.next.N = N;
  out.next.probabilities.assign(size, 0.0);
  std::vector<int> digits(static_cast<std::size_t>(b), 0);
  double survive = 0.0;
  for (std::size_t idx = 0; idx < size; ++idx) {
    if (idx > 0) {
      for (int i = 0; i < b; ++i) {
        if (++digits[static_cast<std::size_t>(i)] < N) break;
        digits[static_cast<std::size_t>(i)] = 0;
      }
    }
    const double v = cur[idx];
    if (v == 0.0) continue;
    const int cls = classify(digits.data(), b);
    if (cls == -1) {
      out.next.probabilities[idx] = v;
      survive += v;
    } else if (cls == -2) {
      out.multi_prob += v;
    } else {
      out.pair_probs[static_cast<std::size_t>(cls)] += v;
    }
  }
  out.merge_prob = out.multi_prob;
  for (double p : out.pair_probs) out.merge_prob += p;
  if (!(survive > 0.0)) throw DegenerateSurvival("no label configuration survives without a merger");
  for (double& p : out.next.probabilities) p /= survive;
  return out;
}

LumpedLineageFilter::LumpedLineageFilter(const ModelSpec& model, std::vector<int> lineage_states)
    : model_(model), arity_(static_cast<int>(lineage_states.size())), S_(model.state_count) {
  if (arity_ < 2) throw InvalidArgument("lineage filter needs at least two lineages");
  if (arity_ > 6) throw ArityTooLarge("lumped filter supports at most six lineages");
  std::size_t size = 1;
  for (int i = 0; i < arity_; ++i) size *= static_cast<std::size_t>(S_);
  rho_.assign(size, 0.0);
  std::size_t index = 0;
  std::size_t stride = 1;
  for (int s : lineage_states) {
    if (s < 0 || s >= S_) throw OutOfRange("lineage state outside the model");
    index += static_cast<std::size_t>(s) * stride;
    stride *= static_cast<std::size_t>(S_);
  }
  rho_[index] = 1.0;
  partitions_ = set_partitions(arity_);
}

FilterStep LumpedLineageFilter::step(int f, std::span<const int> parent_counts) {
  const int S = S_;
  const int b = arity_;
  if (parent_counts.size() != static_cast<std::size_t>(S)) throw InvalidArgument("need one count per state");
  // pick[u][s] = n(u) q(u, s) / Z_s is the probability of choosing some parent
  // in state u; a particular parent in state u has probability q(u, s) / Z_s.
  std::vector<double> single(static_cast<std::size_t>(S * S));
  for (int s = 0; s < S; ++s) {
    double z = 0.0;
    for (int u = 0; u < S; ++u) z += parent_counts[static_cast<std::size_t>(u)] * model_.backward_weight(f, u, s);
    for (int u = 0; u < S; ++u) single[static_cast<std::size_t>(u * S + s)] = model_.backward_weight(f, u, s) / z;
  }

  FilterStep out;
  out.pair_probs.assign(static_cast<std::size_t>(pair_count(b)), 0.0);
  std::vector<double> next(rho_.size(), 0.0);
  std::vector<int> s(static_cast<std::size_t>(b));
  std::vector<int> v;
  std::vector<int> used(static_cast<std::size_t>(S));
  double survive = 0.0;

  for (std::size_t idx = 0; idx < rho_.size(); ++idx) {
    const double r = rho_[idx];
    if (r == 0.0) continue;
    std::size_t rem = idx;
    for (int i = 0; i < b; ++i) {
      s[static_cast<std::size_t>(i)] = static_cast<int>(rem % static_cast<std::size_t>(S));
      rem /= static_cast<std::size_t>(S);
    }
    for (const auto& rgs : partitions_) {
      const int nb = block_count(rgs);
      int cls = -1;
      if (nb == b - 1) {
        for (int h = 0; h < b && cls < 0; ++h) {
          for (int hp = h + 1; hp < b; ++hp) {
            if (rgs[static_cast<std::size_t>(h)] == rgs[static_cast<std::size_t>(hp)]) {
              cls = pair_index(h, hp, b);
              break;
            }
          }
        }
      } else if (nb < b - 1) {
        cls = -2;
      }
      // Enumerate parent states for the blocks.
      v.assign(static_cast<std::size_t>(nb), 0);
      for (;;) {
        std::fill(used.begin(), used.end(), 0);
        double ways = 1.0;
        for (int B = 0; B < nb; ++B) {
          const auto u = static_cast<std::size_t>(v[static_cast<std::size_t>(B)]);
          ways *= parent_counts[u] - used[u];
          ++used[u];
        }
        if (ways > 0.0) {
          double p = r * ways;
          for (int i = 0; i < b; ++i) {
            const int u = v[static_cast<std::size_t>(rgs[static_cast<std::size_t>(i)])];
            p *= single[static_cast<std::size_t>(u * S + s[static_cast<std::size_t>(i)])];
          }
          if (cls == -1) {
            std::size_t to = 0;
            std::size_t stride = 1;
            for (int i = 0; i < b; ++i) {
              to += static_cast<std::size_t>(v[static_cast<std::size_t>(i)]) * stride;
              stride *= static_cast<std::size_t>(S);
            }
            next[to] += p;
            survive += p;
          } else if (cls == -2) {
            out.multi_prob += p;
          } else {
            out.pair_probs[static_cast<std::size_t>(cls)] += p;
          }
        }
        int pos = 0;
        while (pos < nb && ++v[static_cast<std::size_t>(pos)] == S) v[static_cast<std::size_t>(pos++)] = 0;
        if (pos == nb) break;
      }
    }
  }
  out.merge_prob = out.multi_prob;
  for (double p : out.pair_probs) out.merge_prob += p;
  if (!(survive > 0.0)) throw DegenerateSurvival("no lineage configuration survives without a merger");
  for (double& p : next) p /= survive;
  rho_ = std::move(next);
  return out;
}

void CoalescenceProfile::append(const FilterStep& step) {
  if (pair_values.empty()) pair_values.resize(static_cast<std::size_t>(pair_count(xi_size)));
  values.push_back(std::clamp(step.merge_prob / binom2(xi_size), 0.0, 1.0));
  merge_values.push_back(step.merge_prob);
  multi_values.push_back(step.multi_prob);
  for (std::size_t p = 0; p < pair_values.size(); ++p) pair_values[p].push_back(step.pair_probs[p]);
}

CoalescenceProfile coalescence_profile(const ModelSpec& model, const ForwardRun& run, int b,
                                       std::span<const int> labels, int j, int K) {
  require_multinomial(run);
  check_window(run, labels, b, j, K);
  CoalescenceProfile profile;
  profile.xi_size = b;
  profile.start = j;
  profile.exact = true;
  LabelDistribution dist = LabelDistribution::point_mass(run.N, labels);
  for (int k = j + 1; k <= K; ++k) {
    LabelStep step = propagate_labels(model, run, k, dist);
    profile.append(step);
    dist = std::move(step.next);
  }
  return profile;
}

std::vector<int> state_counts(const ForwardRun& run, int k, int S) {
  std::vector<int> counts(static_cast<std::size_t>(S), 0);
  for (int x : run.reverse_locations(k)) ++counts[static_cast<std::size_t>(x)];
  return counts;
}

CoalescenceProfile lumped_coalescence_profile(const ModelSpec& model, const ForwardRun& run, int b,
                                              std::span<const int> labels, int j, int K) {
  require_multinomial(run);
  check_window(run, labels, b, j, K);
  const auto loc = run.reverse_locations(j);
  std::vector<int> states;
  for (int l : labels) states.push_back(loc[static_cast<std::size_t>(l)]);
  LumpedLineageFilter filter(model, states);
  CoalescenceProfile profile;
  profile.xi_size = b;
  profile.start = j;
  profile.exact = true;
  for (int k = j + 1; k <= K; ++k) {
    const auto counts = state_counts(run, k, model.state_count);
    profile.append(filter.step(run.forward_index(k), counts));
  }
  return profile;
}

WilsonInterval wilson_interval(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  // The endpoints are exact at the boundary counts.
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

CoalescenceProfile estimate_profile_mc(const ModelSpec& model, const ForwardRun& run, int b,
                                       std::span<const int> labels, int j, int K, Rng& rng,
                                       const MonteCarloOptions& options) {
  check_window(run, labels, b, j, K);
  if (options.replicates < 1000) throw InvalidArgument("Monte Carlo profiles need at least 1000 replicates");
  const auto R = static_cast<std::size_t>(options.replicates);
  const auto B = static_cast<std::size_t>(b);
  std::vector<int> pool(R * B);
  for (std::size_t r = 0; r < R; ++r) std::copy(labels.begin(), labels.end(), pool.begin() + static_cast<std::ptrdiff_t>(r * B));
  std::vector<int> drawn(B);
  std::vector<int> survivors;
  survivors.reserve(R * B);
  ConditionalOptions copt;
  copt.sweeps = options.sweeps;
  copt.burn_in_sweeps = options.burn_in_sweeps;

  CoalescenceProfile profile;
  profile.xi_size = b;
  profile.start = j;
  profile.exact = false;
  const double scale = binom2(b);
  for (int k = j + 1; k <= K; ++k) {
    auto sampler = make_conditional_sampler(model, run.scheme, run.forward_index(k), run.reverse_locations(k),
                                            run.reverse_locations(k - 1), rng, copt);
    std::int64_t merges = 0;
    std::int64_t multi = 0;
    std::vector<std::int64_t> pairs(static_cast<std::size_t>(pair_count(b)), 0);
    survivors.clear();
    for (std::size_t r = 0; r < R; ++r) {
      sampler->draw_parents(std::span<const int>(pool.data() + r * B, B), drawn, rng);
      const int cls = classify(drawn.data(), b);
      if (cls == -1) {
        survivors.insert(survivors.end(), drawn.begin(), drawn.end());
      } else {
        ++merges;
        if (cls == -2) {
          ++multi;
        } else {
          ++pairs[static_cast<std::size_t>(cls)];
        }
      }
    }
    FilterStep step;
    step.merge_prob = static_cast<double>(merges) / static_cast<double>(R);
    step.multi_prob = static_cast<double>(multi) / static_cast<double>(R);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      step.pair_probs.push_back(static_cast<double>(pairs[p]) / static_cast<double>(R));
    }
    profile.append(step);
    const WilsonInterval ci = wilson_interval(merges, static_cast<std::int64_t>(R));
    profile.ci_lower.push_back(ci.lower / scale);
    profile.ci_upper.push_back(ci.upper / scale);
    profile.ci_halfwidth.push_back(0.5 * (ci.upper - ci.lower) / scale);

    const std::size_t alive = survivors.size() / B;
    if (k == K) break;
    if (alive < static_cast<std::size_t>(options.min_survivors)) {
      throw DegenerateSurvival("only " + std::to_string(alive) + " surviving label tuples at generation " +
                               std::to_string(k));
    }
    std::copy(survivors.begin(), survivors.end(), pool.begin());
    for (std::size_t r = alive; r < R; ++r) {
      const std::size_t src = rng.below(alive);
      std::copy(survivors.begin() + static_cast<std::ptrdiff_t>(src * B),
                survivors.begin() + static_cast<std::ptrdiff_t>((src + 1) * B),
                pool.begin() + static_cast<std::ptrdiff_t>(r * B));
    }
  }
  return profile;
}

Timescale::Timescale(const CoalescenceProfile& profile)
    : start_(profile.start), values_(profile.values), prefix_(profile.values.size() + 1, 0.0) {
  for (std::size_t i = 0; i < values_.size(); ++i) prefix_[i + 1] = prefix_[i] + values_[i];
}

int Timescale::tau(double t) const {
  if (t <= 0.0) return start_;
  auto it = std::lower_bound(prefix_.begin(), prefix_.end(), t);
  if (it == prefix_.end()) {
    throw HorizonExceeded("cumulative coalescence mass " + format_double(prefix_.back()) +
                          " never reaches t = " + format_double(t));
  }
  return start_ + static_cast<int>(it - prefix_.begin());
}

bool Timescale::sandwich_holds(double t) const {
  const int s = tau(t);
  const double C = cumulative(s);
  const double c = s > start_ ? value(s) : 0.0;
  return t <= C && C <= t + c && t + c <= t + 1.0;
}

int timescale_inverse(const CoalescenceProfile& profile, double t) {
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  return Timescale(profile).tau(t);
}

namespace {

// Exact numerator Σ_distinct Π (nu(i_r))_{b_r}, in Int128 when it cannot overflow.
Rational formula_numerator(const FamilySizes& nu, const std::vector<int>& sizes, int xi_blocks) {
  const int N = static_cast<int>(nu.counts.size());
  const auto r = sizes.size();
  // Each factor is at most N^{b_r}; the Möbius sum is bounded by Bell(r) N^{Σ b_r + 1}.
  const double bound = std::pow(static_cast<double>(N), xi_blocks + 1) * 5000.0;
  if (bound < 1e36) {
    std::vector<std::vector<Int128>> f(r, std::vector<Int128>(static_cast<std::size_t>(N)));
    for (std::size_t e = 0; e < r; ++e) {
      for (int i = 0; i < N; ++i) {
        f[e][static_cast<std::size_t>(i)] = falling<Int128>(nu.counts[static_cast<std::size_t>(i)], sizes[e]);
      }
    }
    const Int128 v = distinct_tuple_sum(f);
    const bool negative = v < 0;
    UInt128 mag = negative ? static_cast<UInt128>(-v) : static_cast<UInt128>(v);
    BigInt big = static_cast<std::uint64_t>(mag >> 64);
    big <<= 64;
    big += static_cast<std::uint64_t>(mag);
    return Rational(negative ? BigInt(-big) : big);
  }
  std::vector<std::vector<BigInt>> f(r, std::vector<BigInt>(static_cast<std::size_t>(N)));
  for (std::size_t e = 0; e < r; ++e) {
    for (int i = 0; i < N; ++i) {
      f[e][static_cast<std::size_t>(i)] = falling<BigInt>(nu.counts[static_cast<std::size_t>(i)], sizes[e]);
    }
  }
  return Rational(distinct_tuple_sum(f));
}

double formula_probability(const FamilySizes& nu, const std::vector<int>& sizes, int xi_blocks) {
  const int N = static_cast<int>(nu.counts.size());
  if (static_cast<int>(sizes.size()) > N) return 0.0;
  const Rational value = formula_numerator(nu, sizes, xi_blocks) / Rational(falling<BigInt>(BigInt(N), xi_blocks));
  return static_cast<double>(value);
}

}  // namespace

double neutral_formula_probability(const FamilySizes& nu, const Partition& xi, const Partition& eta) {
  const auto sizes = merge_sizes(xi, eta);
  const int N = static_cast<int>(nu.counts.size());
  if (N < static_cast<int>(xi.size())) throw InvalidArgument("population smaller than the number of blocks");
  return formula_probability(nu, sizes, static_cast<int>(xi.size()));
}

double neutral_any_merger_probability(const FamilySizes& nu, int b) {
  const std::vector<int> ones(static_cast<std::size_t>(b), 1);
  return 1.0 - formula_probability(nu, ones, b);
}

DiscrepancyReport discrepancy_experiment(const ModelSpec& model, const Scheme& scheme, int N, int n,
                                         int replicates, int K, std::uint64_t master_seed, unsigned threads) {
  if (n < 2 || n > 4) throw InvalidArgument("discrepancy experiment supports 2 <= n <= 4");
  if (N < n) throw InvalidArgument("N must be at least n");
  if (replicates < 1) throw InvalidArgument("replicates must be positive");
  if (K < 1) throw InvalidArgument("K must be positive");
  struct Outcome {
    std::vector<double> p;      // formula probability at generations 1..len
    std::int16_t merged_at = 0; // generation of the first merger, 0 if none
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(replicates));
  parallel_for(outcomes.size(), threads, [&](std::size_t r) {
    const ForwardRun run = simulate_forward(model, N, K, scheme, derive_seed(master_seed, r));
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    Outcome& out = outcomes[r];
    for (int k = 1; k <= K; ++k) {
      const auto parents = run.reverse_ancestors(k);
      out.p.push_back(neutral_any_merger_probability(family_sizes(parents), n));
      bool merged = false;
      for (auto& l : labels) l = parents[static_cast<std::size_t>(l)];
      for (int a = 0; a < n && !merged; ++a) {
        for (int c = a + 1; c < n; ++c) merged = merged || labels[static_cast<std::size_t>(a)] == labels[static_cast<std::size_t>(c)];
      }
      if (merged) {
        out.merged_at = static_cast<std::int16_t>(k);
        break;
      }
    }
  });

  DiscrepancyReport report;
  report.model = model.name;
  report.scheme = to_string(scheme);
  report.N = N;
  report.n = n;
  report.K = K;
  report.replicates = replicates;
  report.rows.resize(static_cast<std::size_t>(K));
  for (int k = 1; k <= K; ++k) report.rows[static_cast<std::size_t>(k - 1)].k = k;
  for (const auto& o : outcomes) {
    for (std::size_t i = 0; i < o.p.size(); ++i) {
      auto& row = report.rows[i];
      ++row.at_risk;
      row.expected += o.p[i];
      row.variance += o.p[i] * (1.0 - o.p[i]);
      if (static_cast<int>(i) + 1 == o.merged_at) ++row.observed;
    }
  }
  double diff = 0.0;
  double var = 0.0;
  double abs_dev = 0.0;
  int used = 0;
  for (const auto& row : report.rows) {
    diff += static_cast<double>(row.observed) - row.expected;
    var += row.variance;
    if (row.at_risk > 0) {
      abs_dev += std::abs(static_cast<double>(row.observed) - row.expected) / static_cast<double>(row.at_risk);
      ++used;
    }
  }
  report.z_score = var > 0.0 ? diff / std::sqrt(var) : 0.0;
  report.mean_abs_deviation = used > 0 ? abs_dev / used : 0.0;
  return report;
}

void write_profile_csv(const CoalescenceProfile& profile, const std::string& path, const std::string& metadata) {
  CsvWriter out(path);
  std::vector<std::string> header{"k", "c_value", "ci_halfwidth", "multi_prob"};
  for (int p = 0; p < pair_count(profile.xi_size); ++p) {
    auto [h, hp] = pair_at(p, profile.xi_size);
    header.push_back("pair_" + std::to_string(h) + "_" + std::to_string(hp));
  }
  out.header(header);
  for (std::size_t i = 0; i < profile.values.size(); ++i) {
    std::vector<std::string> row{std::to_string(profile.start + 1 + static_cast<int>(i)),
                                 format_double(profile.values[i]),
                                 format_double(profile.ci_halfwidth.empty() ? 0.0 : profile.ci_halfwidth[i]),
                                 format_double(profile.multi_values[i])};
    for (const auto& pv : profile.pair_values) row.push_back(format_double(pv[i]));
    out.row_strings(row);
  }
  out.finish(metadata);
}

void write_timescale_csv(const Timescale& timescale, std::span<const double> t_grid, const std::string& path,
                         const std::string& metadata) {
  CsvWriter out(path);
  out.header({"t", "tau"});
  for (double t : t_grid) out.row(t, timescale.tau(t));
  out.finish(metadata);
}

void write_discrepancy_csv(const DiscrepancyReport& report, const std::string& path, const std::string& metadata) {
  CsvWriter out(path);
  out.header({"k", "at_risk", "observed", "expected", "deviation", "z"});
  for (const auto& row : report.rows) {
    const double dev = row.at_risk > 0 ? (static_cast<double>(row.observed) - row.expected) / static_cast<double>(row.at_risk) : 0.0;
    const double z = row.variance > 0 ? (static_cast<double>(row.observed) - row.expected) / std::sqrt(row.variance) : 0.0;
    out.row(row.k, row.at_risk, row.observed, row.expected, dev, z);
  }
  out.finish(metadata);
}

}  // namespace smcgen
