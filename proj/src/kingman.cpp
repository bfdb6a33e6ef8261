#include "smcgen/kingman.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "json.hpp"
#include "smcgen/combinatorics.hpp"
#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"
#include "smcgen/genealogy.hpp"

namespace smcgen {

CoalescentSample sample_kingman(int n, Rng& rng) {
  if (n < 2) throw InvalidArgument("Kingman coalescent needs n >= 2");
  CoalescentSample s;
  for (int k = n; k >= 2; --k) {
    const int pairs = pair_count(k);
    s.holding_times.push_back(rng.exponential(pairs));
    s.merger_pairs.push_back(pair_at(static_cast<int>(rng.below(static_cast<std::uint64_t>(pairs))), k));
  }
  return s;
}

double holding_survivor(int k, double t) {
  if (k < 2) throw InvalidArgument("holding times need at least two blocks");
  if (t < 0.0) throw InvalidArgument("t must be non-negative");
  return std::exp(-binom2(k) * t);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 10) throw TooFewSamples("KS statistic needs at least 10 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double F = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

double ks_statistic_censored(std::span<const double> times, std::span<const char> censored,
                             const std::function<double(double)>& cdf, double horizon) {
  if (times.size() != censored.size()) throw InvalidArgument("times and censoring flags differ in length");
  if (times.size() < 10) throw TooFewSamples("KS statistic needs at least 10 samples");
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  // Events before censorings at equal times, the usual Kaplan-Meier convention.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return censored[a] < censored[b];
  });
  double survival = 1.0;
  double at_risk = static_cast<double>(times.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = times[order[i]];
    if (t > horizon) break;
    std::size_t j = i;
    double events = 0.0;
    double removed = 0.0;
    while (j < order.size() && times[order[j]] == t) {
      if (!censored[order[j]]) events += 1.0;
      removed += 1.0;
      ++j;
    }
    if (events > 0.0) {
      const double F = cdf(t);
      d = std::max(d, std::abs((1.0 - survival) - F));
      survival *= 1.0 - events / at_risk;
      d = std::max(d, std::abs((1.0 - survival) - F));
    }
    at_risk -= removed;
    i = j;
  }
  if (std::isfinite(horizon)) d = std::max(d, std::abs((1.0 - survival) - cdf(horizon)));
  return d;
}

double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 10 || b.size() < 10) throw TooFewSamples("KS statistic needs at least 10 samples");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == t) ++i;
    while (j < y.size() && y[j] == t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
  }
  return d;
}

double kolmogorov_pvalue(double d, double effective_n) {
  if (effective_n <= 0.0) return 1.0;
  const double sn = std::sqrt(effective_n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

double chi_square_sf(double statistic, double df) {
  if (df <= 0) throw InvalidArgument("degrees of freedom must be positive");
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, statistic / 2.0);
}

double chi_square_uniform_pvalue(std::span<const std::int64_t> counts) {
  if (counts.size() < 2) return 1.0;
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total <= 0.0) return 1.0;
  const double expected = total / static_cast<double>(counts.size());
  double stat = 0.0;
  for (auto c : counts) stat += (static_cast<double>(c) - expected) * (static_cast<double>(c) - expected) / expected;
  return chi_square_sf(stat, static_cast<double>(counts.size() - 1));
}

Engine parse_engine(const std::string& name) {
  if (name == "auto") return Engine::automatic;
  if (name == "full") return Engine::full;
  if (name == "lumped") return Engine::lumped;
  throw InvalidArgument("unknown engine '" + name + "' (auto, full, lumped)");
}

std::string to_string(Engine engine) {
  switch (engine) {
    case Engine::automatic:
      return "auto";
    case Engine::full:
      return "full";
    case Engine::lumped:
      return "lumped";
  }
  return "unknown";
}

std::vector<double> geometric_bins(double p, int bins) {
  std::vector<double> out;
  double tail = 1.0;
  for (int g = 1; g < bins; ++g) {
    const double q = tail * p;
    out.push_back(q);
    tail -= q;
  }
  out.push_back(tail);
  return out;
}

namespace {

// Forward state counts under multinomial resampling: counts[f * S + u].
std::vector<int> simulate_counts(const ModelSpec& model, int N, int K, Rng& rng) {
  const int S = model.state_count;
  std::vector<int> counts(static_cast<std::size_t>((K + 1) * S), 0);
  std::vector<double> pi(static_cast<std::size_t>(S));
  auto draw = [&](int* out) {
    int remaining = N;
    double mass = 1.0;
    for (int y = 0; y < S - 1; ++y) {
      const double p = mass > 0.0 ? std::min(1.0, pi[static_cast<std::size_t>(y)] / mass) : 0.0;
      const int c = rng.binomial(remaining, p);
      out[y] = c;
      remaining -= c;
      mass -= pi[static_cast<std::size_t>(y)];
    }
    out[S - 1] = remaining;
  };
  std::fill(pi.begin(), pi.end(), 1.0 / S);
  draw(counts.data());
  for (int f = 0; f < K; ++f) {
    const int* n = counts.data() + static_cast<std::ptrdiff_t>(f) * S;
    double total = 0.0;
    for (int y = 0; y < S; ++y) {
      double acc = 0.0;
      for (int u = 0; u < S; ++u) acc += n[u] * model.backward_weight(f, u, y);
      pi[static_cast<std::size_t>(y)] = acc;
      total += acc;
    }
    for (auto& p : pi) p /= total;
    draw(counts.data() + static_cast<std::ptrdiff_t>(f + 1) * S);
  }
  return counts;
}

struct Epoch {
  int merger_generation = 0;   // 0 when no merger happened by K
  std::vector<std::vector<int>> groups;  // groups of merging block positions
};

// Lineage blocks traced backwards with their current states.
struct LumpedLineages {
  std::vector<Block> blocks;
  std::vector<int> states;
};

// Pushes the blocks back from reverse generation `from` + 1 until the first
// generation at which some blocks share a parent.
Epoch lumped_backward(const ModelSpec& model, const std::vector<int>& counts, int K, int from, LumpedLineages& lin,
                      Rng& rng) {
  const int S = model.state_count;
  Epoch e;
  std::vector<double> w(static_cast<std::size_t>(S));
  for (int k = from + 1; k <= K; ++k) {
    const int f = K - k;
    const int* n = counts.data() + static_cast<std::ptrdiff_t>(f) * S;
    std::vector<std::pair<int, std::uint64_t>> keys;
    for (int y : lin.states) {
      double total = 0.0;
      for (int u = 0; u < S; ++u) {
        total += n[u] * model.backward_weight(f, u, y);
        w[static_cast<std::size_t>(u)] = total;
      }
      const double r = rng.uniform() * total;
      int u = 0;
      while (u < S - 1 && (r >= w[static_cast<std::size_t>(u)] || n[u] == 0)) ++u;
      keys.emplace_back(u, rng.below(static_cast<std::uint64_t>(n[u])));
    }
    // Group blocks by chosen parent.
    std::vector<int> group_of(keys.size(), -1);
    std::vector<std::vector<int>> groups;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (group_of[i] >= 0) continue;
      group_of[i] = static_cast<int>(groups.size());
      groups.push_back({static_cast<int>(i)});
      for (std::size_t j = i + 1; j < keys.size(); ++j) {
        if (group_of[j] < 0 && keys[j] == keys[i]) {
          group_of[j] = group_of[i];
          groups.back().push_back(static_cast<int>(j));
        }
      }
    }
    LumpedLineages next;
    for (const auto& g : groups) {
      Block merged;
      for (int i : g) merged.insert(merged.end(), lin.blocks[static_cast<std::size_t>(i)].begin(),
                                    lin.blocks[static_cast<std::size_t>(i)].end());
      std::sort(merged.begin(), merged.end());
      next.blocks.push_back(merged);
      next.states.push_back(keys[static_cast<std::size_t>(g.front())].first);
    }
    const bool merged = groups.size() < keys.size();
    // Keep blocks in canonical order.
    std::vector<std::size_t> order(next.blocks.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return next.blocks[a].front() < next.blocks[b].front();
    });
    LumpedLineages sorted;
    for (auto i : order) {
      sorted.blocks.push_back(next.blocks[i]);
      sorted.states.push_back(next.states[i]);
    }
    lin = std::move(sorted);
    if (merged) {
      e.merger_generation = k;
      for (const auto& g : groups) {
        if (g.size() > 1) e.groups.push_back(g);
      }
      return e;
    }
  }
  return e;
}

struct ProfileWalk {
  double T = 0.0;          // Σ c over generations strictly before the merger (or all, if censored)
  double multi_given_merge = 0.0;
  bool sandwich_ok = true;
};

double merger_horizon(double t_max) { return 1.5 * (t_max + 2.0); }

void check_sandwich(const CoalescenceProfile& profile, ProfileWalk& walk) {
  const Timescale ts(profile);
  for (int i = 1; i <= 30; ++i) {
    const double t = 0.1 * i;
    if (t > ts.total()) break;
    if (!ts.sandwich_holds(t)) walk.sandwich_ok = false;
  }
}

ProfileWalk summarise_profile(const CoalescenceProfile& profile, int merger_generation) {
  ProfileWalk walk;
  const int stop = merger_generation > 0 ? merger_generation - 1 : profile.last_generation();
  const Timescale ts(profile);
  walk.T = ts.cumulative(stop);
  if (merger_generation > 0) {
    const auto i = static_cast<std::size_t>(merger_generation - profile.start - 1);
    const double merge = profile.merge_values[i];
    walk.multi_given_merge = merge > 0.0 ? profile.multi_values[i] / merge : 0.0;
  }
  check_sandwich(profile, walk);
  return walk;
}

void classify_merger(const Epoch& e, int blocks_before, const std::vector<Block>& before, ReplicateOutcome& out) {
  int lost = 0;
  int largest = 0;
  for (const auto& g : e.groups) {
    lost += static_cast<int>(g.size()) - 1;
    largest = std::max(largest, static_cast<int>(g.size()));
  }
  out.merger_size = largest;
  out.multi = lost >= 2;
  if (!out.multi) {
    const auto& g = e.groups.front();
    const int h = before[static_cast<std::size_t>(g[0])].front();
    const int hp = before[static_cast<std::size_t>(g[1])].front();
    out.pair = pair_index(h, hp, blocks_before);
  }
}

ReplicateOutcome lumped_replicate(const ModelSpec& model, int N, int n, int K, const ConvergenceOptions& opt,
                                  std::uint64_t index) {
  Rng rng = Rng::stream(opt.master_seed, index);
  const int S = model.state_count;
  const auto counts = simulate_counts(model, N, K, rng);

  // States of the terminal sample, drawn without replacement from the final counts.
  std::vector<int> remaining(counts.end() - S, counts.end());
  int pool = N;
  LumpedLineages lin;
  for (int i = 0; i < n; ++i) {
    auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(pool)));
    int u = 0;
    while (r >= remaining[static_cast<std::size_t>(u)]) r -= remaining[static_cast<std::size_t>(u++)];
    --remaining[static_cast<std::size_t>(u)];
    --pool;
    lin.blocks.push_back({i});
    lin.states.push_back(u);
  }

  auto profile_from = [&](const std::vector<int>& states, int j, int last) {
    LumpedLineageFilter filter(model, states);
    CoalescenceProfile profile;
    profile.xi_size = static_cast<int>(states.size());
    profile.start = j;
    for (int k = j + 1; k <= last; ++k) {
      const int f = K - k;
      profile.append(filter.step(f, std::span<const int>(counts.data() + static_cast<std::ptrdiff_t>(f) * S,
                                                         static_cast<std::size_t>(S))));
    }
    return profile;
  };

  ReplicateOutcome out;
  const std::vector<Block> before = lin.blocks;
  const std::vector<int> start_states = lin.states;
  const Epoch first = lumped_backward(model, counts, K, 0, lin, rng);
  const int last = first.merger_generation > 0 ? first.merger_generation : K;
  const ProfileWalk walk = summarise_profile(profile_from(start_states, 0, last), first.merger_generation);
  out.T = walk.T;
  out.sandwich_ok = walk.sandwich_ok;
  out.first_merger_generation = first.merger_generation;
  if (first.merger_generation == 0) {
    out.horizon_failure = true;
    return out;
  }
  out.multi_given_merge = walk.multi_given_merge;
  classify_merger(first, n, before, out);

  if (opt.second_epoch && n >= 3 && !out.multi) {
    const std::vector<int> states = lin.states;
    const int k1 = first.merger_generation;
    out.has_second = true;
    if (k1 >= K) {
      out.second_censored = true;
      out.T2 = 0.0;
      return out;
    }
    const Epoch second = lumped_backward(model, counts, K, k1, lin, rng);
    const int last2 = second.merger_generation > 0 ? second.merger_generation : K;
    const ProfileWalk walk2 = summarise_profile(profile_from(states, k1, last2), second.merger_generation);
    out.T2 = walk2.T;
    out.second_censored = second.merger_generation == 0;
    out.sandwich_ok = out.sandwich_ok && walk2.sandwich_ok;
  }
  return out;
}

// First generation after `from` at which blocks of p merge, advancing p.
int trace_until_merger(const ForwardRun& run, int from, LabelledPartition& p, Epoch& e) {
  for (int k = from + 1; k <= run.K; ++k) {
    LabelledPartition next = apply_ancestors(p, run.reverse_ancestors(k));
    if (next.size() < p.size()) {
      // Rebuild the merging groups in terms of positions in p.
      for (const auto& nb : next.blocks) {
        std::vector<int> g;
        for (std::size_t i = 0; i < p.blocks.size(); ++i) {
          if (std::find(nb.begin(), nb.end(), p.blocks[i].front()) != nb.end()) g.push_back(static_cast<int>(i));
        }
        if (g.size() > 1) e.groups.push_back(g);
      }
      e.merger_generation = k;
      p = std::move(next);
      return k;
    }
    p = std::move(next);
  }
  return 0;
}

ReplicateOutcome full_replicate(const ModelSpec& model, const Scheme& scheme, int N, int n, int K,
                                const ConvergenceOptions& opt, std::uint64_t index) {
  const ForwardRun run = simulate_forward(model, N, K, scheme, derive_seed(opt.master_seed, index));
  Rng rng = Rng::stream(opt.master_seed ^ 0x5bd1e995ULL, index);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::iota(labels.begin(), labels.end(), 0);
  LabelledPartition p = initial_partition(n, labels, N);

  auto profile = [&](std::span<const int> l, int j, int last) {
    const int b = static_cast<int>(l.size());
    if (scheme.kind == SchemeKind::multinomial) return lumped_coalescence_profile(model, run, b, l, j, last);
    return estimate_profile_mc(model, run, b, l, j, last, rng, opt.mc);
  };

  ReplicateOutcome out;
  const std::vector<Block> before = p.blocks;
  Epoch first;
  trace_until_merger(run, 0, p, first);
  const int last = first.merger_generation > 0 ? first.merger_generation : K;
  const ProfileWalk walk = summarise_profile(profile(labels, 0, last), first.merger_generation);
  out.T = walk.T;
  out.sandwich_ok = walk.sandwich_ok;
  out.first_merger_generation = first.merger_generation;
  if (first.merger_generation == 0) {
    out.horizon_failure = true;
    return out;
  }
  out.multi_given_merge = walk.multi_given_merge;
  classify_merger(first, n, before, out);

  if (opt.second_epoch && n >= 3 && !out.multi) {
    out.has_second = true;
    const int k1 = first.merger_generation;
    if (k1 >= K) {
      out.second_censored = true;
      return out;
    }
    const std::vector<int> labels2 = p.labels;
    Epoch second;
    trace_until_merger(run, k1, p, second);
    const int last2 = second.merger_generation > 0 ? second.merger_generation : K;
    const ProfileWalk walk2 = summarise_profile(profile(labels2, k1, last2), second.merger_generation);
    out.T2 = walk2.T;
    out.second_censored = second.merger_generation == 0;
    out.sandwich_ok = out.sandwich_ok && walk2.sandwich_ok;
  }
  return out;
}

// Mean coalescence rate over a pilot window, used to size the horizon.
double pilot_rate(const ModelSpec& model, const Scheme& scheme, int N, int n, Engine engine,
                  const ConvergenceOptions& opt) {
  const int Kp = std::max(50, 2 * N);
  const std::uint64_t pilot_seed = splitmix64(opt.master_seed ^ 0x9f1c3a5e7d2b4c61ULL);
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::iota(labels.begin(), labels.end(), 0);
  CoalescenceProfile profile;
  if (engine == Engine::lumped) {
    Rng rng(pilot_seed);
    const auto counts = simulate_counts(model, N, Kp, rng);
    const int S = model.state_count;
    std::vector<int> states;
    std::vector<int> remaining(counts.end() - S, counts.end());
    int pool = N;
    for (int i = 0; i < n; ++i) {
      auto r = static_cast<int>(rng.below(static_cast<std::uint64_t>(pool)));
      int u = 0;
      while (r >= remaining[static_cast<std::size_t>(u)]) r -= remaining[static_cast<std::size_t>(u++)];
      --remaining[static_cast<std::size_t>(u)];
      --pool;
      states.push_back(u);
    }
    LumpedLineageFilter filter(model, states);
    profile.xi_size = n;
    for (int k = 1; k <= Kp; ++k) {
      const int f = Kp - k;
      profile.append(filter.step(f, std::span<const int>(counts.data() + static_cast<std::ptrdiff_t>(f) * S,
                                                         static_cast<std::size_t>(S))));
    }
  } else {
    const ForwardRun run = simulate_forward(model, N, Kp, scheme, pilot_seed);
    if (scheme.kind == SchemeKind::multinomial) {
      profile = lumped_coalescence_profile(model, run, n, labels, 0, Kp);
    } else {
      Rng rng(pilot_seed + 1);
      profile = estimate_profile_mc(model, run, n, labels, 0, Kp, rng, opt.mc);
    }
  }
  double sum = 0.0;
  for (double c : profile.values) sum += c;
  return sum / static_cast<double>(profile.values.size());
}

}  // namespace

ConvergenceReport convergence_experiment(const ModelSpec& model, const Scheme& scheme, int N, int n,
                                         const ConvergenceOptions& options) {
  if (n < 2 || n > 6) throw InvalidArgument("convergence experiment supports 2 <= n <= 6");
  if (N < n) throw InvalidArgument("N must be at least n");
  if (options.replicates < 10) throw InvalidArgument("need at least 10 replicates");
  if (!(options.t_max > 0.0)) throw InvalidArgument("t_max must be positive");
  Engine engine = options.engine;
  if (engine == Engine::automatic) engine = scheme.kind == SchemeKind::multinomial ? Engine::lumped : Engine::full;
  if (engine == Engine::lumped && scheme.kind != SchemeKind::multinomial) {
    throw InvalidArgument("the lumped engine requires multinomial resampling");
  }

  ConvergenceReport report;
  report.model = model.name;
  report.scheme = to_string(scheme);
  report.engine = to_string(engine);
  report.n = n;
  report.N = N;
  report.replicates = options.replicates;
  report.t_max = options.t_max;

  int K = options.K;
  if (K <= 0) {
    report.pilot_rate = pilot_rate(model, scheme, N, n, engine, options);
    if (!(report.pilot_rate > 0.0)) throw HorizonExceeded("pilot run saw no coalescence; set K explicitly");
    const double k = std::ceil(merger_horizon(options.t_max) / report.pilot_rate);
    if (k > 5e7) throw HorizonExceeded("required horizon exceeds 5*10^7 generations");
    K = static_cast<int>(k);
  }
  if (!model.stationary && K - 1 > model.last_generation()) {
    throw OutOfRange("model does not cover the required horizon of " + std::to_string(K) + " generations");
  }
  report.K = K;

  report.outcomes.resize(static_cast<std::size_t>(options.replicates));
  parallel_for(report.outcomes.size(), options.threads, [&](std::size_t r) {
    report.outcomes[r] = engine == Engine::lumped ? lumped_replicate(model, N, n, K, options, r)
                                                  : full_replicate(model, scheme, N, n, K, options, r);
  });

  report.merged_pair_counts.assign(static_cast<std::size_t>(pair_count(n)), 0);
  std::vector<double> times;
  std::vector<char> censored;
  std::vector<double> times2;
  std::vector<char> censored2;
  double rb_sum = 0.0;
  double horizon = std::numeric_limits<double>::infinity();
  double horizon2 = std::numeric_limits<double>::infinity();
  for (const auto& o : report.outcomes) {
    times.push_back(o.T);
    censored.push_back(o.horizon_failure ? 1 : 0);
    if (!o.sandwich_ok) ++report.sandwich_violations;
    if (o.horizon_failure) {
      ++report.horizon_failures;
      horizon = std::min(horizon, o.T);
      continue;
    }
    report.rescaled_first_merger_times.push_back(o.T);
    rb_sum += o.multi_given_merge;
    if (o.multi) {
      ++report.multi_merger_count;
    } else {
      ++report.merged_pair_counts[static_cast<std::size_t>(o.pair)];
    }
    if (o.has_second) {
      times2.push_back(o.T2);
      censored2.push_back(o.second_censored ? 1 : 0);
      if (o.second_censored) horizon2 = std::min(horizon2, o.T2);
    }
  }
  const double rate = binom2(n);
  auto cdf = [rate](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * t); };
  report.ks_statistic = report.horizon_failures == 0 ? ks_statistic(times, cdf)
                                                     : ks_statistic_censored(times, censored, cdf, horizon);
  report.ks_pvalue = kolmogorov_pvalue(report.ks_statistic, static_cast<double>(times.size()));
  report.chi2_p = chi_square_uniform_pvalue(report.merged_pair_counts);
  report.multi_fraction = static_cast<double>(report.multi_merger_count) / options.replicates;
  const auto observed = static_cast<double>(options.replicates - report.horizon_failures);
  report.multi_fraction_rb = observed > 0 ? rb_sum / observed : 0.0;
  if (times2.size() >= 10) {
    const double rate2 = binom2(n - 1);
    auto cdf2 = [rate2](double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate2 * t); };
    report.second_epoch_ks = ks_statistic_censored(times2, censored2, cdf2, horizon2);
    report.second_epoch_samples = static_cast<std::int64_t>(times2.size());
  }
  return report;
}

std::string convergence_summary_json(const ConvergenceReport& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model;
  j["scheme"] = r.scheme;
  j["engine"] = r.engine;
  j["n"] = r.n;
  j["N"] = r.N;
  j["K"] = r.K;
  j["replicates"] = r.replicates;
  j["t_max"] = r.t_max;
  j["pilot_rate"] = r.pilot_rate;
  j["ks_statistic"] = r.ks_statistic;
  j["ks_pvalue"] = r.ks_pvalue;
  j["chi2_p"] = r.chi2_p;
  j["merged_pair_counts"] = r.merged_pair_counts;
  j["multi_merger_count"] = r.multi_merger_count;
  j["multi_fraction"] = r.multi_fraction;
  j["multi_fraction_rb"] = r.multi_fraction_rb;
  j["horizon_failures"] = r.horizon_failures;
  j["sandwich_violations"] = r.sandwich_violations;
  if (r.second_epoch_ks) {
    j["second_epoch_ks"] = *r.second_epoch_ks;
    j["second_epoch_samples"] = r.second_epoch_samples;
  }
  return j.dump(2);
}

void write_convergence_report(const ConvergenceReport& report, const std::string& directory,
                              const std::string& metadata) {
  ensure_directory(directory);
  CsvWriter out(directory + "/replicates.csv");
  out.header({"replicate", "T", "horizon_failure", "first_merger_generation", "pair", "merger_size", "multi",
              "T2", "second_censored"});
  for (std::size_t i = 0; i < report.outcomes.size(); ++i) {
    const auto& o = report.outcomes[i];
    out.row(i, o.T, o.horizon_failure, o.first_merger_generation, o.pair, o.merger_size, o.multi,
            o.has_second ? o.T2 : std::nan(""), o.second_censored);
  }
  out.finish(metadata);
  std::ofstream js(directory + "/summary.json", std::ios::binary);
  js << convergence_summary_json(report) << "\n";
  if (!js) throw ConfigError("cannot write summary.json");
}

}  // namespace smcgen
