#include <numeric>

#include "doctest.h"
#include "smcgen/conditional.hpp"
#include "smcgen/errors.hpp"
#include "smcgen/kingman.hpp"
#include "smcgen/oracle.hpp"
#include "support.hpp"

using namespace smcgen;

namespace {

const std::vector<Scheme> all_schemes{Scheme::multinomial(), Scheme::stratified(true), Scheme::stratified(false),
                                      Scheme::systematic(false), Scheme::systematic(true)};

Rational q(long a, long b) { return Rational(a) / Rational(b); }

double to_d(const Rational& r) { return static_cast<double>(r); }

}  // namespace

TEST_CASE("four-parent example, stratified ordered merges surely") {
  for (const Rational& z : {q(0, 1), q(1, 48), q(1, 24), q(1, 12)}) {
    const auto w = counterexample_weights(z);
    const ExactResult r = exact_merger_probability(w, Scheme::stratified(false), 3);
    REQUIRE(r.exact.has_value());
    CHECK(*r.exact == 1);
    CHECK(r.value == 1.0);
  }
}

TEST_CASE("four-parent example, multinomial merger probability") {
  for (const Rational& z : {q(0, 1), q(1, 24), q(1, 12)}) {
    const auto w = counterexample_weights(z);
    const ExactResult r = exact_merger_probability(w, Scheme::multinomial(), 3);
    REQUIRE(r.exact.has_value());
    CHECK(*r.exact == 1 - 18 * z * z + 48 * z * z * z);
  }
  CHECK(to_d(1 - 18 * q(1, 144) + 48 * q(1, 1728)) == doctest::Approx(0.9027777777777778).epsilon(1e-15));
}

TEST_CASE("multinomial two-lineage merger probability") {
  const std::vector<Rational> w{q(1, 2), q(3, 10), q(1, 5)};
  const ExactResult r = exact_merger_probability(w, Scheme::multinomial(), 2);
  CHECK(*r.exact == q(38, 100));
  CHECK(r.method == OracleMethod::enumeration);
}

TEST_CASE("factorial moments of the four-parent example") {
  for (const Rational& z : {q(0, 1), q(1, 24), q(1, 12), q(1, 17)}) {
    const auto w = counterexample_weights(z);
    CHECK(*exact_factorial_moment(w, Scheme::stratified(false), 0).exact == 12 - 72 * z);
    CHECK(*exact_factorial_moment(w, Scheme::multinomial(), 0).exact == 12 - 72 * z + 108 * z * z);
    for (int i = 1; i < 4; ++i) {
      CHECK(*exact_factorial_moment(w, Scheme::multinomial(), i).exact == 12 * z * z);
      CHECK(*exact_factorial_moment(w, Scheme::stratified(false), i).exact == 0);
    }
  }
}

TEST_CASE("counterexample report") {
  const CounterexampleReport zero = counterexample_report(q(0, 1));
  CHECK(zero.P_S == 1.0);
  CHECK(zero.P_M == 1.0);
  CHECK(zero.moments_S == std::array<double, 4>{12, 0, 0, 0});
  CHECK(zero.moments_M == std::array<double, 4>{12, 0, 0, 0});
  CHECK(zero.ordering_holds);
  const CounterexampleReport top = counterexample_report(q(1, 12));
  CHECK(top.P_S == 1.0);
  CHECK(top.P_M == doctest::Approx(0.9027777777777778).epsilon(1e-15));
  CHECK(top.exact_agreement);
  CHECK(top.ordering_holds);
  const CounterexampleReport mid = counterexample_report(1.0 / 24.0);
  CHECK(mid.max_abs_difference < 1e-12);
  CHECK(mid.ordering_holds);
  CHECK(mid.P_S_shuffled <= 1.0);
  CHECK_THROWS_AS(counterexample_report(0.1), OutOfRange);
  CHECK_THROWS_AS(counterexample_report(-0.01), OutOfRange);
}

TEST_CASE("counterexample ordering over a grid") {
  for (int i = 0; i <= 40; ++i) {
    const CounterexampleReport r = counterexample_report(q(i, 480));
    CHECK(r.exact_agreement);
    CHECK(r.ordering_holds);
    CHECK(r.P_M <= r.P_S);
    if (i > 0) CHECK(r.P_M < r.P_S);
    // Systematic resampling shares the ordered stratified numbers here.
    CHECK(r.P_systematic == doctest::Approx(r.P_S).epsilon(1e-14));
    for (int m = 0; m < 4; ++m) CHECK(r.moments_systematic[static_cast<std::size_t>(m)] ==
                                      doctest::Approx(r.moments_S[static_cast<std::size_t>(m)]).epsilon(1e-14));
  }
}

TEST_CASE("oracle limits") {
  const std::vector<Rational> w9(9, q(1, 9));
  CHECK_THROWS_AS(exact_merger_probability(w9, Scheme::multinomial(), 2), TooLarge);
  const std::vector<Rational> w4(4, q(1, 4));
  CHECK_THROWS_AS(exact_merger_probability(w4, Scheme::multinomial(), 5), Error);
  CHECK_THROWS_AS(exact_factorial_moment(w9, Scheme::stratified(), 0), TooLarge);
}

TEST_CASE("exact results against simulation, 20 configurations per scheme") {
  Rng rng(2718);
  for (const Scheme& s : all_schemes) {
    for (int c = 0; c < 20; ++c) {
      const int N = 2 + static_cast<int>(rng.below(7));
      const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(3, N - 1))));
      std::vector<double> raw(static_cast<std::size_t>(N));
      for (auto& v : raw) v = 0.05 + rng.uniform();
      const WeightVector w = normalize(raw);
      const int parent = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
      const double p = exact_merger_probability(w, s, n).value;
      const double m2 = exact_factorial_moment(w, s, parent).value;
      const int draws = 100000;
      double merges = 0.0;
      double sum = 0.0;
      double sq = 0.0;
      for (int r = 0; r < draws; ++r) {
        const AncestorVector a = sample_ancestors(w, s, rng);
        std::vector<int> ps(a.parents.begin(), a.parents.begin() + n);
        std::sort(ps.begin(), ps.end());
        if (std::adjacent_find(ps.begin(), ps.end()) != ps.end()) merges += 1.0;
        const double nu = static_cast<double>(std::count(a.parents.begin(), a.parents.end(), parent));
        sum += nu * (nu - 1);
        sq += nu * nu * (nu - 1) * (nu - 1);
      }
      CHECK_MESSAGE(testing::within_se(merges / draws, p, draws), to_string(s) << " N=" << N << " n=" << n);
      const double mean = sum / draws;
      const double se = std::sqrt(std::max(sq / draws - mean * mean, 0.0) / draws);
      CHECK_MESSAGE(std::abs(mean - m2) <= 4.0 * se + 1e-12, to_string(s) << " N=" << N << " parent=" << parent);
    }
  }
}

TEST_CASE("multinomial lemma examples") {
  const MultinomialLemmaTerms a = multinomial_lemma_terms(std::vector<double>{1, 1}, 2);
  CHECK(a.power == 4.0);
  CHECK(a.distinct_sum == 2.0);
  CHECK(a.correction == 2.0);
  CHECK(verify_multinomial_lemma(std::vector<double>{1, 1}, 2));
  const MultinomialLemmaTerms b = multinomial_lemma_terms(std::vector<double>{1, 0, 0}, 2);
  CHECK(b.power == 1.0);
  CHECK(b.distinct_sum == 0.0);
  CHECK(b.correction == 1.0);
  CHECK(verify_multinomial_lemma(std::vector<double>{1, 0, 0}, 2));
  CHECK_THROWS_AS(verify_multinomial_lemma(std::vector<double>{1, 2}, 3), BadArity);
  CHECK_THROWS_AS(verify_multinomial_lemma(std::vector<double>{1, 2}, 1), BadArity);
}

TEST_CASE("multinomial lemma distinct sum against brute force") {
  // Ordered distinct 3-tuples of (1, 2, 3, 4): 3! e_3 = 6 * 50.
  CHECK(multinomial_lemma_terms(std::vector<double>{1, 2, 3, 4}, 3).distinct_sum == doctest::Approx(300.0));
}

TEST_CASE("multinomial lemma sweep") {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const int len = 2 + static_cast<int>(rng.below(7));
    std::vector<double> x(static_cast<std::size_t>(len));
    for (auto& v : x) v = rng.uniform();
    const int alpha = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(len - 1)));
    CHECK(verify_multinomial_lemma(x, alpha));
  }
}

TEST_CASE("left stochastic lemma examples") {
  Matrix id(4, 4, 0.0);
  for (std::size_t i = 0; i < 4; ++i) id(i, i) = 1.0;
  const std::vector<int> ell{0, 1};
  const auto t = left_stochastic_lemma_terms(id, 2, ell);
  CHECK(t.lhs == 1.0);
  CHECK(t.rhs == 1.0);
  CHECK(verify_left_stochastic_lemma(id, 2, ell));

  const Matrix u(4, 4, 0.25);
  const auto ordered = left_stochastic_lemma_terms(u, 0, ell, PairConvention::ordered);
  CHECK(ordered.lhs == doctest::Approx(0.375));
  CHECK(ordered.rhs == doctest::Approx(1.0 - 0.5 - 2.0 * 3.0 / 16.0));
  const auto unordered = left_stochastic_lemma_terms(u, 0, ell, PairConvention::unordered);
  CHECK(unordered.lhs == doctest::Approx(0.375));
  CHECK(unordered.rhs == doctest::Approx(0.3125));
  CHECK(verify_left_stochastic_lemma(u, 0, ell, PairConvention::unordered));

  Matrix bad(3, 3, 0.3);
  CHECK_THROWS_AS(verify_left_stochastic_lemma(bad, 0, std::vector<int>{0, 1}), NotStochastic);
  const Matrix big(8, 8, 0.125);
  CHECK_THROWS_AS(verify_left_stochastic_lemma(big, 0, std::vector<int>{0, 1}), TooLarge);
}

TEST_CASE("left stochastic lemma sweep") {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const int N = 2 + static_cast<int>(rng.below(6));
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(4, N - 1))));
    Matrix a(static_cast<std::size_t>(N), static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      double col = 0.0;
      for (int m = 0; m < N; ++m) {
        // Sparse columns now and then.
        const double v = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
        a(static_cast<std::size_t>(m), static_cast<std::size_t>(i)) = v;
        col += v;
      }
      if (col == 0.0) {
        a(0, static_cast<std::size_t>(i)) = 1.0;
        col = 1.0;
      }
      for (int m = 0; m < N; ++m) a(static_cast<std::size_t>(m), static_cast<std::size_t>(i)) /= col;
    }
    std::vector<int> cols(static_cast<std::size_t>(N));
    std::iota(cols.begin(), cols.end(), 0);
    rng.shuffle(cols);
    cols.resize(static_cast<std::size_t>(r));
    const int v = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    CHECK(verify_left_stochastic_lemma(a, v, cols, PairConvention::ordered));
    CHECK(verify_left_stochastic_lemma(a, v, cols, PairConvention::unordered));
  }
}

TEST_CASE("conditional ancestor samplers match the exact conditional law") {
  Rng rng(606);
  const ModelSpec m = builtin_model("hereditary-chain", {{"S", 3}});
  for (const Scheme& s : all_schemes) {
    for (int c = 0; c < 3; ++c) {
      const int N = 4 + c;
      // Locations from a real forward step keep the conditioning event possible.
      const ForwardRun run = simulate_forward(m, N, 1, s, derive_seed(99, c));
      const std::vector<int> xp(run.locations_at(0).begin(), run.locations_at(0).end());
      const std::vector<int> xc(run.locations_at(1).begin(), run.locations_at(1).end());
      const std::vector<int> children{0, N - 1};
      const auto law = exact_conditional_parent_law(m, s, 0, xp, xc, children);
      ConditionalOptions o;
      o.sweeps = 10;
      auto sampler = make_conditional_sampler(m, s, 0, xp, xc, rng, o);
      std::map<std::vector<int>, double> counts;
      const int draws = 20000;
      std::vector<int> out(2);
      for (int r = 0; r < draws; ++r) {
        sampler->draw_parents(children, out, rng);
        counts[out] += 1.0;
      }
      double stat = 0.0;
      int cells = 0;
      for (const auto& [key, p] : law) {
        if (p <= 0.0) continue;
        const double e = p * draws;
        stat += (counts[key] - e) * (counts[key] - e) / e;
        ++cells;
      }
      for (const auto& [key, cnt] : counts) {
        auto it = law.find(key);
        CHECK_MESSAGE((it != law.end() && it->second > 0.0), "sampler produced an impossible configuration");
      }
      if (cells > 1) CHECK_MESSAGE(chi_square_sf(stat, cells - 1) > 0.001, to_string(s) << " N=" << N);
    }
  }
}
