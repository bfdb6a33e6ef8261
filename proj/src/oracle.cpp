#include "smcgen/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"

namespace smcgen {

namespace {

Rational floor_of(const Rational& x) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  BigInt q = numerator(x) / denominator(x);
  if (q * denominator(x) > numerator(x)) q -= 1;  // truncation toward zero for negatives
  return Rational(q);
}
double floor_of(double x) { return std::floor(x); }

double to_double(const Rational& x) { return static_cast<double>(x); }

// Interval geometry of one resampling round: parent m owns [cum[m], cum[m+1]),
// stratum s is [s/N, (s+1)/N).
template <class T>
struct Layout {
  int N;
  std::vector<T> cum;

  T overlap(int s, int m) const {
    const T slo = T(s) / N;
    const T shi = T(s + 1) / N;
    const T lo = std::max(cum[static_cast<std::size_t>(m)], slo);
    const T hi = std::min(cum[static_cast<std::size_t>(m) + 1], shi);
    return hi > lo ? (hi - lo) * N : T(0);
  }
  T weight(int m) const { return cum[static_cast<std::size_t>(m) + 1] - cum[static_cast<std::size_t>(m)]; }

  int locate(const T& u) const {
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    auto m = static_cast<int>(it - cum.begin()) - 1;
    return std::clamp(m, 0, N - 1);
  }

  // Segments of the shared systematic uniform on which every stratum keeps its parent.
  std::vector<std::pair<T, T>> segments() const {
    std::vector<T> cuts{T(0), T(1)};
    for (int m = 1; m < N; ++m) {
      const T t = cum[static_cast<std::size_t>(m)] * N;
      const T frac = t - floor_of(t);
      if (frac > 0 && frac < 1) cuts.push_back(frac);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<std::pair<T, T>> seg;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) seg.emplace_back(cuts[i], cuts[i + 1]);
    return seg;
  }

  int pointer_parent(int s, const T& u) const { return locate((T(s) + u) / N); }
};

template <class T>
T no_merge_enumerated(const std::vector<std::vector<T>>& p) {
  const int n = static_cast<int>(p.size());
  const int N = static_cast<int>(p.front().size());
  T total = 0;
  std::vector<int> m(static_cast<std::size_t>(n), 0);
  std::function<void(int, T)> rec = [&](int depth, T prob) {
    if (depth == n) {
      total += prob;
      return;
    }
    for (int v = 0; v < N; ++v) {
      bool clash = false;
      for (int d = 0; d < depth; ++d) clash = clash || m[static_cast<std::size_t>(d)] == v;
      if (clash) continue;
      const T q = p[static_cast<std::size_t>(depth)][static_cast<std::size_t>(v)];
      if (q == 0) continue;
      m[static_cast<std::size_t>(depth)] = v;
      rec(depth + 1, prob * q);
    }
  };
  rec(0, T(1));
  return total;
}

// Visits every injective placement of n lineages into N strata.
void for_each_placement(int n, int N, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> s(static_cast<std::size_t>(n));
  std::vector<char> used(static_cast<std::size_t>(N), 0);
  std::function<void(int)> rec = [&](int depth) {
    if (depth == n) {
      visit(s);
      return;
    }
    for (int v = 0; v < N; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      s[static_cast<std::size_t>(depth)] = v;
      rec(depth + 1);
      used[static_cast<std::size_t>(v)] = 0;
    }
  };
  rec(0);
}

std::vector<int> default_children(std::span<const int> children, int n, int N) {
  std::vector<int> c(children.begin(), children.end());
  if (c.empty()) {
    c.resize(static_cast<std::size_t>(n));
    std::iota(c.begin(), c.end(), 0);
  }
  if (static_cast<int>(c.size()) != n) throw InvalidArgument("need one child index per lineage");
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < 0 || c[i] >= N) throw LabelOutOfRange("child index outside [0, N)");
    for (std::size_t j = 0; j < i; ++j) {
      if (c[j] == c[i]) throw DuplicateLabel("child indices must be distinct");
    }
  }
  return c;
}

template <class T>
T merger_probability(const Layout<T>& L, const Scheme& scheme, int n, const std::vector<int>& children) {
  const int N = L.N;
  if (N > 8 || n > 4) throw TooLarge("exact enumeration is limited to N <= 8 and n <= 4");
  if (n < 2 || n > N) throw InvalidArgument("need 2 <= n_lineages <= N");

  auto strata_no_merge = [&](const std::vector<int>& strata) {
    std::vector<std::vector<T>> p(strata.size(), std::vector<T>(static_cast<std::size_t>(N)));
    for (std::size_t r = 0; r < strata.size(); ++r) {
      for (int m = 0; m < N; ++m) p[r][static_cast<std::size_t>(m)] = L.overlap(strata[r], m);
    }
    return no_merge_enumerated(p);
  };
  auto systematic_merge = [&](const std::vector<int>& strata) {
    T total = 0;
    for (const auto& [a, b] : L.segments()) {
      const T mid = (a + b) / 2;
      std::vector<int> parents;
      for (int s : strata) parents.push_back(L.pointer_parent(s, mid));
      std::sort(parents.begin(), parents.end());
      if (std::adjacent_find(parents.begin(), parents.end()) != parents.end()) total += b - a;
    }
    return total;
  };

  switch (scheme.kind) {
    case SchemeKind::multinomial: {
      std::vector<std::vector<T>> p(static_cast<std::size_t>(n), std::vector<T>(static_cast<std::size_t>(N)));
      for (auto& row : p) {
        for (int m = 0; m < N; ++m) row[static_cast<std::size_t>(m)] = L.weight(m);
      }
      return T(1) - no_merge_enumerated(p);
    }
    case SchemeKind::stratified: {
      if (!scheme.shuffle) return T(1) - strata_no_merge(children);
      T sum = 0;
      long count = 0;
      for_each_placement(n, N, [&](const std::vector<int>& s) {
        sum += strata_no_merge(s);
        ++count;
      });
      return T(1) - sum / T(count);
    }
    case SchemeKind::systematic: {
      if (!scheme.shuffle) return systematic_merge(children);
      T sum = 0;
      long count = 0;
      for_each_placement(n, N, [&](const std::vector<int>& s) {
        sum += systematic_merge(s);
        ++count;
      });
      return sum / T(count);
    }
  }
  throw InvalidArgument("unknown scheme");
}

template <class T>
T factorial_moment(const Layout<T>& L, const Scheme& scheme, int i, int order) {
  const int N = L.N;
  if (N > 8) throw TooLarge("exact enumeration is limited to N <= 8");
  if (i < 0 || i >= N) throw OutOfRange("parent index outside [0, N)");
  if (order < 1) throw InvalidArgument("order must be positive");
  switch (scheme.kind) {
    case SchemeKind::multinomial: {
      T r = falling<T>(T(N), order);
      for (int q = 0; q < order; ++q) r *= L.weight(i);
      return r;
    }
    case SchemeKind::stratified: {
      // nu(i) is a sum of independent Bernoulli(p_s); E[(nu)_r] = r! e_r(p).
      std::vector<T> e(static_cast<std::size_t>(order) + 1, T(0));
      e[0] = 1;
      for (int s = 0; s < N; ++s) {
        const T p = L.overlap(s, i);
        for (int q = order; q >= 1; --q) e[static_cast<std::size_t>(q)] += e[static_cast<std::size_t>(q) - 1] * p;
      }
      return e[static_cast<std::size_t>(order)] * falling<T>(T(order), order);
    }
    case SchemeKind::systematic: {
      // Family sizes do not depend on how strata are assigned to children.
      T total = 0;
      for (const auto& [a, b] : L.segments()) {
        const T mid = (a + b) / 2;
        int nu = 0;
        for (int s = 0; s < N; ++s) nu += L.pointer_parent(s, mid) == i;
        total += (b - a) * falling<T>(T(nu), order);
      }
      return total;
    }
  }
  throw InvalidArgument("unknown scheme");
}

Layout<Rational> rational_layout(std::span<const Rational> w) {
  if (w.empty()) throw InvalidArgument("empty weight vector");
  Rational total = 0;
  for (const auto& v : w) {
    if (v < 0) throw NonPositiveWeight("weights must be non-negative");
    total += v;
  }
  if (total <= 0) throw NonPositiveWeight("weights sum to zero");
  Layout<Rational> L{static_cast<int>(w.size()), {Rational(0)}};
  Rational acc = 0;
  for (const auto& v : w) {
    acc += v / total;
    L.cum.push_back(acc);
  }
  return L;
}

Layout<double> double_layout(const WeightVector& w) {
  return Layout<double>{static_cast<int>(w.size()), w.cumulative};
}

}  // namespace

ExactResult exact_merger_probability(std::span<const Rational> w, const Scheme& scheme, int n_lineages,
                                     std::span<const int> children) {
  const auto L = rational_layout(w);
  const Rational v = merger_probability(L, scheme, n_lineages, default_children(children, n_lineages, L.N));
  return {to_double(v), v, scheme.kind == SchemeKind::systematic ? OracleMethod::quadrature : OracleMethod::enumeration,
          "merger_probability"};
}

ExactResult exact_merger_probability(const WeightVector& w, const Scheme& scheme, int n_lineages,
                                     std::span<const int> children) {
  const auto L = double_layout(w);
  const double v = merger_probability(L, scheme, n_lineages, default_children(children, n_lineages, L.N));
  return {v, std::nullopt,
          scheme.kind == SchemeKind::systematic ? OracleMethod::quadrature : OracleMethod::enumeration,
          "merger_probability"};
}

ExactResult exact_factorial_moment(std::span<const Rational> w, const Scheme& scheme, int parent_index, int order) {
  const auto L = rational_layout(w);
  const Rational v = factorial_moment(L, scheme, parent_index, order);
  return {to_double(v), v,
          scheme.kind == SchemeKind::multinomial ? OracleMethod::closed_form : OracleMethod::enumeration,
          "factorial_moment"};
}

ExactResult exact_factorial_moment(const WeightVector& w, const Scheme& scheme, int parent_index, int order) {
  const auto L = double_layout(w);
  const double v = factorial_moment(L, scheme, parent_index, order);
  return {v, std::nullopt,
          scheme.kind == SchemeKind::multinomial ? OracleMethod::closed_form : OracleMethod::enumeration,
          "factorial_moment"};
}

std::array<Rational, 4> counterexample_weights(const Rational& z) { return {1 - 3 * z, z, z, z}; }

CounterexampleReport counterexample_report(const Rational& z) {
  if (z < 0 || z > Rational(1, 12)) throw OutOfRange("z must lie in [0, 1/12]");
  const auto w = counterexample_weights(z);
  const std::span<const Rational> ws(w);
  CounterexampleReport r;
  r.z = to_double(z);

  const Rational PS = *exact_merger_probability(ws, Scheme::stratified(false), 3).exact;
  const Rational PM = *exact_merger_probability(ws, Scheme::multinomial(), 3).exact;
  const Rational closed_PS = 1;
  const Rational closed_PM = 1 - 18 * z * z + 48 * z * z * z;
  std::array<Rational, 4> mS;
  std::array<Rational, 4> mM;
  std::array<Rational, 4> cS;
  std::array<Rational, 4> cM;
  for (int i = 0; i < 4; ++i) {
    mS[static_cast<std::size_t>(i)] = *exact_factorial_moment(ws, Scheme::stratified(false), i).exact;
    mM[static_cast<std::size_t>(i)] = *exact_factorial_moment(ws, Scheme::multinomial(), i).exact;
    cS[static_cast<std::size_t>(i)] = i == 0 ? 12 - 72 * z : Rational(0);
    cM[static_cast<std::size_t>(i)] = i == 0 ? 12 - 72 * z + 108 * z * z : 12 * z * z;
  }

  r.P_S = to_double(PS);
  r.P_M = to_double(PM);
  r.closed_P_S = to_double(closed_PS);
  r.closed_P_M = to_double(closed_PM);
  bool agree = PS == closed_PS && PM == closed_PM;
  double diff = std::max(std::abs(r.P_S - r.closed_P_S), std::abs(r.P_M - r.closed_P_M));
  bool ordering = PM <= PS && ((PM == PS) == (z == 0));
  for (std::size_t i = 0; i < 4; ++i) {
    r.moments_S[i] = to_double(mS[i]);
    r.moments_M[i] = to_double(mM[i]);
    r.closed_moments_S[i] = to_double(cS[i]);
    r.closed_moments_M[i] = to_double(cM[i]);
    agree = agree && mS[i] == cS[i] && mM[i] == cM[i];
    diff = std::max({diff, std::abs(r.moments_S[i] - r.closed_moments_S[i]),
                     std::abs(r.moments_M[i] - r.closed_moments_M[i])});
    ordering = ordering && mM[i] >= mS[i];
  }
  r.exact_agreement = agree;
  r.max_abs_difference = diff;
  r.ordering_holds = ordering;

  r.P_S_shuffled = exact_merger_probability(ws, Scheme::stratified(true), 3).value;
  r.P_systematic = exact_merger_probability(ws, Scheme::systematic(false), 3).value;
  for (int i = 0; i < 4; ++i) {
    r.moments_systematic[static_cast<std::size_t>(i)] = exact_factorial_moment(ws, Scheme::systematic(false), i).value;
  }
  return r;
}

CounterexampleReport counterexample_report(double z) {
  if (!std::isfinite(z)) throw OutOfRange("z must be finite");
  // A double is a dyadic rational; convert it exactly.
  int exponent = 0;
  const double mantissa = std::frexp(z, &exponent);
  const auto scaled = static_cast<std::int64_t>(std::ldexp(mantissa, 53));
  Rational q(scaled);
  const int shift = exponent - 53;
  if (shift >= 0) {
    q *= Rational(BigInt(1) << shift);
  } else {
    q /= Rational(BigInt(1) << (-shift));
  }
  return counterexample_report(q);
}

void write_counterexample_csv(std::span<const CounterexampleReport> rows, const std::string& path,
                              const std::string& metadata) {
  CsvWriter out(path);
  out.header({"z", "P_S", "P_M", "m_S1", "m_S2", "m_S3", "m_S4", "m_M1", "m_M2", "m_M3", "m_M4", "P_S_shuffled",
              "P_systematic"});
  for (const auto& r : rows) {
    out.row(r.z, r.P_S, r.P_M, r.moments_S[0], r.moments_S[1], r.moments_S[2], r.moments_S[3], r.moments_M[0],
            r.moments_M[1], r.moments_M[2], r.moments_M[3], r.P_S_shuffled, r.P_systematic);
  }
  out.finish(metadata);
}

MultinomialLemmaTerms multinomial_lemma_terms(std::span<const double> x, int alpha) {
  if (alpha < 2 || static_cast<std::size_t>(alpha) > x.size()) throw BadArity("need 2 <= alpha <= length(x)");
  double sum = 0.0;
  double sq = 0.0;
  for (double v : x) {
    if (v < 0.0) throw InvalidArgument("entries must be non-negative");
    sum += v;
    sq += v * v;
  }
  // Ordered distinct tuples: alpha! e_alpha(x); the recursion only adds non-negative terms.
  std::vector<double> e(static_cast<std::size_t>(alpha) + 1, 0.0);
  e[0] = 1.0;
  for (double v : x) {
    for (int q = alpha; q >= 1; --q) e[static_cast<std::size_t>(q)] += e[static_cast<std::size_t>(q) - 1] * v;
  }
  double fact = 1.0;
  for (int q = 2; q <= alpha; ++q) fact *= q;
  MultinomialLemmaTerms t;
  t.power = std::pow(sum, alpha);
  t.distinct_sum = fact * e[static_cast<std::size_t>(alpha)];
  t.correction = binomial(alpha, 2) * sq * std::pow(sum, alpha - 2);
  return t;
}

bool verify_multinomial_lemma(std::span<const double> x, int alpha) {
  const auto t = multinomial_lemma_terms(x, alpha);
  const double scale = std::max({1e-300, t.power, t.distinct_sum, t.correction});
  const double tol = 1e-9 * scale;
  const double sign = alpha % 2 == 0 ? 1.0 : -1.0;
  const bool lemma = t.power <= t.distinct_sum + t.correction + tol;
  const bool upper = sign * t.distinct_sum <= sign * t.power + t.correction + tol;
  const bool lower = sign * t.distinct_sum >= sign * t.power - t.correction - tol;
  return lemma && upper && lower;
}

StochasticLemmaTerms left_stochastic_lemma_terms(const Matrix& a, int v, std::span<const int> ell,
                                                 PairConvention pairs) {
  const int N = static_cast<int>(a.rows);
  const int r = static_cast<int>(ell.size());
  if (a.cols != a.rows) throw NotStochastic("matrix must be square");
  if (N > 7 || r > 4) throw TooLarge("lemma enumeration is limited to N <= 7 and r <= 4");
  if (r < 1) throw InvalidArgument("need at least one label");
  if (v < 0 || v >= N) throw OutOfRange("v outside [0, N)");
  for (int i = 0; i < N; ++i) {
    double col = 0.0;
    for (int m = 0; m < N; ++m) {
      const double x = a(static_cast<std::size_t>(m), static_cast<std::size_t>(i));
      if (x < 0.0) throw NotStochastic("entries must be non-negative");
      col += x;
    }
    if (std::abs(col - 1.0) > 1e-9) throw NotStochastic("columns must sum to 1");
  }
  for (int i = 0; i < r; ++i) {
    const int l = ell[static_cast<std::size_t>(i)];
    if (l < 0 || l >= N) throw LabelOutOfRange("label outside [0, N)");
    for (int j = 0; j < i; ++j) {
      if (ell[static_cast<std::size_t>(j)] == l) throw DuplicateLabel("labels must be distinct");
    }
  }
  auto A = [&](int m, int i) {
    return a(static_cast<std::size_t>(m), static_cast<std::size_t>(ell[static_cast<std::size_t>(i)]));
  };

  StochasticLemmaTerms t;
  std::vector<int> vs(static_cast<std::size_t>(r));
  std::function<void(int, double)> rec = [&](int depth, double prob) {
    if (depth == r) {
      t.lhs += prob;
      return;
    }
    for (int m = 0; m < N; ++m) {
      if (m == v) continue;
      bool clash = false;
      for (int d = 0; d < depth; ++d) clash = clash || vs[static_cast<std::size_t>(d)] == m;
      if (clash) continue;
      vs[static_cast<std::size_t>(depth)] = m;
      rec(depth + 1, prob * A(m, depth));
    }
  };
  rec(0, 1.0);

  double rhs = 1.0;
  for (int i = 0; i < r; ++i) rhs -= A(v, i);
  for (int h = 0; h < r; ++h) {
    for (int hp = 0; hp < r; ++hp) {
      if (h == hp || (pairs == PairConvention::unordered && hp < h)) continue;
      for (int m = 0; m < N; ++m) {
        if (m != v) rhs -= A(m, h) * A(m, hp);
      }
    }
  }
  t.rhs = rhs;
  return t;
}

bool verify_left_stochastic_lemma(const Matrix& a, int v, std::span<const int> ell, PairConvention pairs) {
  const auto t = left_stochastic_lemma_terms(a, v, ell, pairs);
  return t.lhs >= t.rhs - 1e-9;
}

std::vector<double> enumerate_profile(const ModelSpec& model, const ForwardRun& run, std::span<const int> labels,
                                      int j, int K) {
  if (run.scheme.kind != SchemeKind::multinomial) throw InvalidArgument("path enumeration needs multinomial resampling");
  const int b = static_cast<int>(labels.size());
  const int N = run.N;
  if (b < 2) throw InvalidArgument("need at least two lineages");
  if (j < 0 || K > run.K || K <= j) throw OutOfRange("window must satisfy 0 <= j < K <= run.K");
  double paths = 1.0;
  for (int q = 0; q < b * (K - j); ++q) paths *= N;
  if (paths > 5e7) throw TooLarge("too many lineage paths to enumerate");

  // P[k - j - 1][child][parent]
  std::vector<std::vector<double>> P;
  for (int k = j + 1; k <= K; ++k) {
    std::vector<double> t(static_cast<std::size_t>(N * N));
    const auto x = run.reverse_locations(k);
    const auto y = run.reverse_locations(k - 1);
    for (int c = 0; c < N; ++c) {
      const auto row = backward_ancestor_distribution(model, run.forward_index(k), x, y[static_cast<std::size_t>(c)]);
      std::copy(row.begin(), row.end(), t.begin() + static_cast<std::ptrdiff_t>(c) * N);
    }
    P.push_back(std::move(t));
  }
  const int depth_max = K - j;
  std::vector<double> alive(static_cast<std::size_t>(depth_max) + 1, 0.0);
  std::vector<double> merged(static_cast<std::size_t>(depth_max) + 1, 0.0);

  std::function<void(int, const std::vector<int>&, double)> rec = [&](int depth, const std::vector<int>& cur,
                                                                      double prob) {
    alive[static_cast<std::size_t>(depth)] += prob;
    if (depth == depth_max) return;
    const auto& T = P[static_cast<std::size_t>(depth)];
    std::vector<int> next(static_cast<std::size_t>(b), 0);
    for (;;) {
      double p = prob;
      for (int i = 0; i < b; ++i) {
        p *= T[static_cast<std::size_t>(cur[static_cast<std::size_t>(i)] * N + next[static_cast<std::size_t>(i)])];
      }
      bool distinct = true;
      for (int h = 0; h < b && distinct; ++h) {
        for (int hp = h + 1; hp < b; ++hp) distinct = distinct && next[static_cast<std::size_t>(h)] != next[static_cast<std::size_t>(hp)];
      }
      if (distinct) {
        rec(depth + 1, next, p);
      } else {
        merged[static_cast<std::size_t>(depth) + 1] += p;
      }
      int pos = 0;
      while (pos < b && ++next[static_cast<std::size_t>(pos)] == N) next[static_cast<std::size_t>(pos++)] = 0;
      if (pos == b) break;
    }
  };
  rec(0, std::vector<int>(labels.begin(), labels.end()), 1.0);

  std::vector<double> c;
  for (int d = 1; d <= depth_max; ++d) {
    c.push_back(merged[static_cast<std::size_t>(d)] / alive[static_cast<std::size_t>(d) - 1] / binom2(b));
  }
  return c;
}

std::map<std::vector<int>, double> exact_conditional_parent_law(const ModelSpec& model, const Scheme& scheme, int f,
                                                                std::span<const int> x_parents,
                                                                std::span<const int> x_children,
                                                                std::span<const int> children) {
  const int N = static_cast<int>(x_parents.size());
  if (N > 7) throw TooLarge("conditional law enumeration is limited to N <= 7");
  if (x_children.size() != x_parents.size()) throw InvalidArgument("generation sizes differ");
  std::vector<double> g(static_cast<std::size_t>(N));
  for (int m = 0; m < N; ++m) g[static_cast<std::size_t>(m)] = model.potential(f, x_parents[static_cast<std::size_t>(m)]);
  const WeightVector w = normalize(g);
  const Layout<double> L = double_layout(w);
  auto M = [&](int parent, int child) {
    return model.kernel(f, x_parents[static_cast<std::size_t>(parent)], x_children[static_cast<std::size_t>(child)]);
  };
  const auto c = std::vector<int>(children.begin(), children.end());
  const int b = static_cast<int>(c.size());

  std::map<std::vector<int>, double> law;
  double total = 0.0;
  std::vector<int> sigma(static_cast<std::size_t>(N));
  std::iota(sigma.begin(), sigma.end(), 0);
  const bool permute = scheme.shuffle && scheme.kind != SchemeKind::multinomial;

  do {
    if (scheme.kind == SchemeKind::multinomial) {
      // Children are independent: p(m) ∝ w_m M(x_m, y_child). Normalising each
      // factor gives the joint directly.
      std::vector<int> tuple(static_cast<std::size_t>(b), 0);
      for (;;) {
        double p = 1.0;
        for (int i = 0; i < b; ++i) {
          const int ch = c[static_cast<std::size_t>(i)];
          double z = 0.0;
          for (int m = 0; m < N; ++m) z += L.weight(m) * M(m, ch);
          p *= L.weight(tuple[static_cast<std::size_t>(i)]) * M(tuple[static_cast<std::size_t>(i)], ch) / z;
        }
        if (p > 0.0) law[tuple] += p;
        int pos = 0;
        while (pos < b && ++tuple[static_cast<std::size_t>(pos)] == N) tuple[static_cast<std::size_t>(pos++)] = 0;
        if (pos == b) break;
      }
      total = 1.0;
      break;
    }
    if (scheme.kind == SchemeKind::stratified) {
      // Joint weight of (sigma, a) is Π_i overlap(sigma(i), a_i) M(x_{a_i}, y_i).
      double weight = 1.0;
      std::vector<double> z(static_cast<std::size_t>(N));
      for (int i = 0; i < N; ++i) {
        double acc = 0.0;
        for (int m = 0; m < N; ++m) acc += L.overlap(sigma[static_cast<std::size_t>(i)], m) * M(m, i);
        z[static_cast<std::size_t>(i)] = acc;
        weight *= acc;
      }
      std::vector<int> tuple(static_cast<std::size_t>(b), 0);
      for (;;) {
        double p = weight;
        for (int i = 0; i < b; ++i) {
          const int ch = c[static_cast<std::size_t>(i)];
          const int m = tuple[static_cast<std::size_t>(i)];
          p *= L.overlap(sigma[static_cast<std::size_t>(ch)], m) * M(m, ch) / z[static_cast<std::size_t>(ch)];
        }
        if (p > 0.0) law[tuple] += p;
        int pos = 0;
        while (pos < b && ++tuple[static_cast<std::size_t>(pos)] == N) tuple[static_cast<std::size_t>(pos++)] = 0;
        if (pos == b) break;
      }
      total += weight;
    } else {
      for (const auto& [lo, hi] : L.segments()) {
        const double mid = 0.5 * (lo + hi);
        double p = hi - lo;
        for (int i = 0; i < N; ++i) p *= M(L.pointer_parent(sigma[static_cast<std::size_t>(i)], mid), i);
        std::vector<int> tuple;
        for (int ch : c) tuple.push_back(L.pointer_parent(sigma[static_cast<std::size_t>(ch)], mid));
        law[tuple] += p;
        total += p;
      }
    }
  } while (permute && std::next_permutation(sigma.begin(), sigma.end()));

  for (auto& [k, v] : law) v /= total;
  return law;
}

}  // namespace smcgen
