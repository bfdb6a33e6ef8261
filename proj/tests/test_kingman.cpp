#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "smcgen/combinatorics.hpp"
#include "smcgen/errors.hpp"
#include "smcgen/kingman.hpp"
#include "support.hpp"

using namespace smcgen;

namespace {

double exp_cdf(double rate, double t) { return t <= 0.0 ? 0.0 : 1.0 - std::exp(-rate * t); }

ConvergenceOptions options(int replicates, std::uint64_t seed) {
  ConvergenceOptions o;
  o.replicates = replicates;
  o.master_seed = seed;
  o.threads = 1;
  return o;
}

}  // namespace

TEST_CASE("Kingman sampler holding times and pair choices") {
  Rng rng(1);
  const int draws = 100000;
  double sum2 = 0.0;
  double sum3 = 0.0;
  std::vector<double> pairs(3, 0.0);
  for (int r = 0; r < draws; ++r) {
    const CoalescentSample a = sample_kingman(2, rng);
    REQUIRE(a.holding_times.size() == 1);
    sum2 += a.holding_times[0];
    const CoalescentSample b = sample_kingman(3, rng);
    REQUIRE(b.holding_times.size() == 2);
    REQUIRE(b.merger_pairs.size() == 2);
    sum3 += b.holding_times[0];
    const auto [i, j] = b.merger_pairs[0];
    CHECK(i < j);
    pairs[static_cast<std::size_t>(i + j - 1)] += 1.0;
    CHECK(b.merger_pairs[1] == std::pair<int, int>{0, 1});
  }
  CHECK(std::abs(sum2 / draws - 1.0) < 4.0 / std::sqrt(draws));
  CHECK(std::abs(sum3 / draws - 1.0 / 3.0) < 4.0 / (3.0 * std::sqrt(draws)));
  std::vector<std::int64_t> counts(pairs.begin(), pairs.end());
  CHECK(chi_square_uniform_pvalue(counts) > 0.001);
  CHECK_THROWS_AS(sample_kingman(1, rng), InvalidArgument);
}

TEST_CASE("holding survivor") {
  CHECK(holding_survivor(2, 1.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(holding_survivor(5, 0.0) == 1.0);
  CHECK(holding_survivor(3, 0.5) == doctest::Approx(std::exp(-1.5)));
  CHECK_THROWS_AS(holding_survivor(1, 1.0), InvalidArgument);
}

TEST_CASE("KS statistic") {
  Rng rng(4);
  std::vector<double> x;
  for (int i = 0; i < 10000; ++i) x.push_back(rng.exponential(2.0));
  const auto cdf = [](double t) { return exp_cdf(2.0, t); };
  CHECK(ks_statistic(x, cdf) < 0.02);
  const std::vector<double> constant(100, 0.5);
  CHECK(ks_statistic(constant, [](double t) { return std::clamp(t, 0.0, 1.0); }) >= 0.5);
  const std::vector<double> ten{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  const double d = ks_statistic(ten, [](double t) { return std::clamp(t, 0.0, 1.0); });
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
  CHECK(d == doctest::Approx(0.1));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>(9, 0.1), cdf), TooFewSamples);
}

TEST_CASE("censored KS statistic") {
  Rng rng(5);
  const auto cdf = [](double t) { return exp_cdf(1.0, t); };
  std::vector<double> x;
  for (int i = 0; i < 5000; ++i) x.push_back(rng.exponential(1.0));
  const std::vector<char> none(x.size(), 0);
  CHECK(ks_statistic_censored(x, none, cdf, std::numeric_limits<double>::infinity()) ==
        doctest::Approx(ks_statistic(x, cdf)).epsilon(1e-12));
  // Type I censoring at 1.5.
  std::vector<double> c = x;
  std::vector<char> flag(x.size(), 0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] > 1.5) {
      c[i] = 1.5;
      flag[i] = 1;
    }
  }
  CHECK(ks_statistic_censored(c, flag, cdf, 1.5) < 0.03);
  // A wrong null is detected on the observed window.
  CHECK(ks_statistic_censored(c, flag, [](double t) { return exp_cdf(2.0, t); }, 1.5) > 0.1);
}

TEST_CASE("two-sample KS and p-values") {
  Rng rng(6);
  std::vector<double> a;
  std::vector<double> b;
  for (int i = 0; i < 2000; ++i) {
    a.push_back(rng.uniform());
    b.push_back(rng.uniform());
  }
  CHECK(ks_two_sample(a, a) == 0.0);
  CHECK(ks_two_sample(a, b) < 0.06);
  CHECK(kolmogorov_pvalue(0.0, 100) == 1.0);
  // Asymptotic 5% point: lambda = 1.358.
  CHECK(kolmogorov_pvalue(1.358 / (10.0 + 0.12 + 0.011), 100) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_pvalue(0.5, 1000) < 1e-10);
  CHECK(chi_square_sf(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
  CHECK(chi_square_sf(0.0, 2) == 1.0);
  CHECK(chi_square_uniform_pvalue(std::vector<std::int64_t>{100, 100, 100}) == 1.0);
  CHECK(chi_square_uniform_pvalue(std::vector<std::int64_t>{1000, 100, 100}) < 1e-10);
}

TEST_CASE("geometric bins") {
  const auto g = geometric_bins(0.1, 4);
  REQUIRE(g.size() == 4);
  CHECK(g[0] == doctest::Approx(0.1));
  CHECK(g[1] == doctest::Approx(0.09));
  CHECK(g[2] == doctest::Approx(0.081));
  CHECK(g[3] == doctest::Approx(0.729));
}

TEST_CASE("neutral first-merger generation is geometric") {
  const ModelSpec m = builtin_model("neutral-uniform");
  const int N = 50;
  const ConvergenceReport r = convergence_experiment(m, Scheme::multinomial(), N, 2, options(5000, 21));
  // The pilot horizon leaves about exp(-7.5) of the replicates censored.
  CHECK(r.horizon_failures < 20);
  const int bins = 10;
  const auto probs = geometric_bins(1.0 / N, bins);
  // Bins of width 10 generations: 1..10, 11..20, ..., tail.
  std::vector<double> observed(bins, 0.0);
  for (const auto& o : r.outcomes) {
    const int g = o.first_merger_generation;
    observed[static_cast<std::size_t>(o.horizon_failure ? bins - 1 : std::min((g - 1) / 10, bins - 1))] += 1.0;
  }
  std::vector<double> expected(bins, 0.0);
  double tail = 1.0;
  for (int b = 0; b < bins - 1; ++b) {
    const double mass = tail * (1.0 - std::pow(1.0 - 1.0 / N, 10));
    expected[static_cast<std::size_t>(b)] = mass;
    tail -= mass;
  }
  expected[bins - 1] = tail;
  CHECK(probs.back() > 0.0);
  double stat = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double e = expected[static_cast<std::size_t>(b)] * r.replicates;
    stat += (observed[static_cast<std::size_t>(b)] - e) * (observed[static_cast<std::size_t>(b)] - e) / e;
  }
  CHECK(chi_square_sf(stat, bins - 1) > 0.001);
  // The quenched rescaling of a neutral two-lineage genealogy is exactly (g - 1) / N.
  for (const auto& o : r.outcomes) {
    CHECK(o.T >= 0.0);
    if (o.horizon_failure) continue;
    CHECK(o.T == doctest::Approx((o.first_merger_generation - 1) / static_cast<double>(N)).epsilon(1e-9));
    CHECK(o.sandwich_ok);
  }
}

TEST_CASE("convergence report invariants and binary dominance") {
  const ModelSpec m = builtin_model("hereditary-binary");
  const double gamma = compute_mixing_certificate(m).gamma;
  for (int n : {2, 3, 4}) {
    const int N = 60;
    const ConvergenceReport r = convergence_experiment(m, Scheme::multinomial(), N, n, options(2000, 30 + n));
    std::int64_t total = r.multi_merger_count;
    for (auto c : r.merged_pair_counts) total += c;
    CHECK(total == r.replicates - r.horizon_failures);
    CHECK(r.sandwich_violations == 0);
    CHECK(r.merged_pair_counts.size() == static_cast<std::size_t>(pair_count(n)));
    for (double t : r.rescaled_first_merger_times) CHECK(t >= 0.0);
    const double C = std::pow(gamma, 10) * (binomial(n, 3) + binom2(n) * binomial(n - 2, 2) * gamma * gamma / 2.0);
    CHECK(r.multi_fraction <= 3.0 * C / N);
    CHECK(r.multi_fraction_rb >= 0.0);
    CHECK(r.multi_fraction_rb <= 1.0);
  }
}

TEST_CASE("second epoch is exponential with rate one") {
  const ModelSpec m = builtin_model("neutral-uniform");
  const ConvergenceReport r = convergence_experiment(m, Scheme::multinomial(), 200, 3, options(4000, 8));
  REQUIRE(r.second_epoch_ks.has_value());
  CHECK(*r.second_epoch_ks < 0.05);
  CHECK(r.ks_statistic < 0.04);
}

TEST_CASE("full and lumped engines agree for multinomial resampling") {
  const ModelSpec m = builtin_model("hereditary-binary");
  ConvergenceOptions a = options(1500, 3);
  a.engine = Engine::lumped;
  a.K = 200;
  ConvergenceOptions b = options(1500, 4);
  b.engine = Engine::full;
  b.K = 200;
  const ConvergenceReport ra = convergence_experiment(m, Scheme::multinomial(), 30, 2, a);
  const ConvergenceReport rb = convergence_experiment(m, Scheme::multinomial(), 30, 2, b);
  CHECK(ra.engine == "lumped");
  CHECK(rb.engine == "full");
  const double d = ks_two_sample(ra.rescaled_first_merger_times, rb.rescaled_first_merger_times);
  const double ne = 1500.0 * 1500.0 / 3000.0;
  CHECK(kolmogorov_pvalue(d, ne) > 0.001);
}

TEST_CASE("full engine with stratified resampling") {
  const ModelSpec m = builtin_model("hereditary-binary");
  ConvergenceOptions o = options(200, 12);
  o.K = 150;
  const ConvergenceReport r = convergence_experiment(m, Scheme::stratified(), 20, 2, o);
  CHECK(r.engine == "full");
  CHECK(r.sandwich_violations == 0);
  CHECK(r.horizon_failures < 20);
  for (const auto& x : r.outcomes) CHECK(x.T >= 0.0);
  ConvergenceOptions bad = o;
  bad.engine = Engine::lumped;
  CHECK_THROWS_AS(convergence_experiment(m, Scheme::stratified(), 20, 2, bad), InvalidArgument);
}

TEST_CASE("convergence results do not depend on the thread count") {
  const ModelSpec m = builtin_model("hereditary-binary");
  ConvergenceOptions one = options(300, 77);
  ConvergenceOptions four = one;
  four.threads = 4;
  const ConvergenceReport a = convergence_experiment(m, Scheme::multinomial(), 40, 3, one);
  const ConvergenceReport b = convergence_experiment(m, Scheme::multinomial(), 40, 3, four);
  CHECK(convergence_summary_json(a) == convergence_summary_json(b));
  CHECK(a.rescaled_first_merger_times == b.rescaled_first_merger_times);
}

TEST_CASE("censored replicates are counted, not fatal") {
  const ModelSpec m = builtin_model("neutral-uniform");
  ConvergenceOptions o = options(500, 5);
  o.K = 40;  // far too short for N = 100
  const ConvergenceReport r = convergence_experiment(m, Scheme::multinomial(), 100, 2, o);
  CHECK(r.horizon_failures > 100);
  std::int64_t total = r.multi_merger_count;
  for (auto c : r.merged_pair_counts) total += c;
  CHECK(total == r.replicates - r.horizon_failures);
  CHECK(r.ks_statistic < 0.1);
}

TEST_CASE("KS distance shrinks with N") {
  const ModelSpec m = builtin_model("hereditary-binary");
  std::vector<double> ks;
  for (int N : {50, 200, 1000}) {
    ks.push_back(convergence_experiment(m, Scheme::multinomial(), N, 2, options(2000, 900 + N)).ks_statistic);
  }
  int inversions = 0;
  for (std::size_t i = 1; i < ks.size(); ++i) inversions += ks[i] > ks[i - 1];
  CHECK(inversions <= 1);
}

TEST_CASE("convergence report files") {
  const ModelSpec m = builtin_model("neutral-uniform");
  const ConvergenceReport r = convergence_experiment(m, Scheme::multinomial(), 30, 3, options(50, 1));
  const auto dir = (std::filesystem::temp_directory_path() / "smcgen_kingman_report").string();
  write_convergence_report(r, dir, "config_hash=00 seed=1");
  std::ifstream csv(dir + "/replicates.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "replicate,T,horizon_failure,first_merger_generation,pair,merger_size,multi,T2,second_censored");
  int lines = 0;
  std::string line;
  std::string last;
  while (std::getline(csv, line)) {
    ++lines;
    last = line;
  }
  CHECK(lines == 51);
  CHECK(last == "# config_hash=00 seed=1");
  std::ifstream js(dir + "/summary.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j.at("replicates").get<int>() == 50);
  CHECK(j.at("merged_pair_counts").size() == 3);
}

TEST_CASE("convergence argument checks") {
  const ModelSpec m = builtin_model("neutral-uniform");
  CHECK_THROWS_AS(convergence_experiment(m, Scheme::multinomial(), 10, 1, options(100, 1)), InvalidArgument);
  CHECK_THROWS_AS(convergence_experiment(m, Scheme::multinomial(), 2, 3, options(100, 1)), InvalidArgument);
  CHECK_THROWS_AS(convergence_experiment(m, Scheme::multinomial(), 10, 2, options(5, 1)), InvalidArgument);
  CHECK(parse_engine("auto") == Engine::automatic);
  CHECK_THROWS_AS(parse_engine("fast"), InvalidArgument);
}
