#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "smcgen/errors.hpp"
#include "smcgen/model.hpp"
#include "support.hpp"

using namespace smcgen;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("neutral-uniform has constant potential and uniform kernel") {
  const ModelSpec m = builtin_model("neutral-uniform", {{"S", 2}});
  CHECK(m.state_count == 2);
  CHECK(m.potential(0, 0) == 1.0);
  CHECK(m.potential(7, 1) == 1.0);
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) CHECK(m.kernel(3, x, y) == doctest::Approx(0.5));
  }
}

TEST_CASE("hereditary-binary constructor") {
  const ModelSpec m = builtin_model("hereditary-binary", {{"p_stay", 0.7}, {"g_ratio", 4}});
  CHECK(m.potential(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.potential(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.kernel(0, 0, 0) == doctest::Approx(0.7));
  CHECK(m.kernel(0, 0, 1) == doctest::Approx(0.3));
  CHECK(m.kernel(0, 1, 0) == doctest::Approx(0.3));
  CHECK(m.kernel(0, 1, 1) == doctest::Approx(0.7));
}

TEST_CASE("hereditary-chain passes validation") {
  const ModelSpec m = builtin_model("hereditary-chain", {{"S", 5}, {"p_stay", 0.6}});
  CHECK(m.state_count == 5);
  CHECK_NOTHROW(m.validate());
  // Graded potentials.
  for (int x = 1; x < 5; ++x) CHECK(m.potential(0, x) > m.potential(0, x - 1));
}

TEST_CASE("builtin errors") {
  CHECK_THROWS_AS(builtin_model("no-such-model"), UnknownModel);
  CHECK_THROWS_AS(builtin_model("hereditary-binary", {{"p_stai", 0.7}}), Error);
  CHECK_THROWS_AS(builtin_model("hereditary-binary", {{"p_stay", 1.5}}), Error);
}

TEST_CASE("model validation rejects bad tables") {
  CHECK_THROWS_AS(ModelSpec::make_stationary("bad", {1.0, 1.0}, Matrix::from_rows({{0.5, 0.4}, {0.5, 0.5}})),
                  InvalidModel);
  CHECK_THROWS_AS(ModelSpec::make_stationary("bad", {1.0, -1.0}, Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})),
                  InvalidModel);
  CHECK_THROWS_AS(ModelSpec::make_stationary("bad", {1.0, 1.0}, Matrix::from_rows({{1.0, 0.0}, {0.5, 0.5}})),
                  InvalidModel);
  CHECK_THROWS_AS(ModelSpec::make_stationary("bad", {1.0}, Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}})),
                  InvalidModel);
}

TEST_CASE("non-stationary tables are indexed by generation") {
  const Matrix a = Matrix::from_rows({{0.9, 0.1}, {0.2, 0.8}});
  const Matrix b = Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}});
  const ModelSpec m = ModelSpec::make("two", {{1.0, 2.0}, {3.0, 1.0}}, {a, b});
  CHECK(m.last_generation() == 1);
  CHECK(m.potential(1, 0) == 3.0);
  CHECK(m.kernel(0, 0, 0) == 0.9);
  CHECK_THROWS_AS(simulate_forward(m, 4, 3, Scheme::multinomial(), 1), OutOfRange);
  CHECK_NOTHROW(simulate_forward(m, 4, 2, Scheme::multinomial(), 1));
}

TEST_CASE("mixing certificate of hereditary-binary") {
  const ModelSpec m = builtin_model("hereditary-binary", {{"p_stay", 0.7}, {"g_ratio", 4}});
  const MixingCertificate c = compute_mixing_certificate(m);
  CHECK(c.valid);
  // gamma^2 = qmax / qmin at y = 1: 1.4 / 0.15.
  CHECK(std::pow(c.gamma, 4) == doctest::Approx((1.4 / 0.15) * (1.4 / 0.15)).epsilon(1e-9));
  CHECK(verify_mixing_certificate(m, c));
}

TEST_CASE("mixing certificate re-verification on builtins and random models") {
  std::vector<ModelSpec> models{builtin_model("neutral-uniform", {{"S", 3}}), builtin_model("hereditary-binary"),
                                builtin_model("hereditary-chain")};
  Rng rng(2024);
  for (int i = 0; i < 100; ++i) models.push_back(testing::random_model(2 + static_cast<int>(rng.below(7)), rng));
  for (const auto& m : models) {
    const MixingCertificate c = compute_mixing_certificate(m);
    REQUIRE(c.valid);
    CHECK(verify_mixing_certificate(m, c));
    // A certificate with a smaller gamma must fail unless the model is flat in x.
    MixingCertificate tight = c;
    tight.gamma = c.gamma * (1.0 - 1e-6);
    if (c.gamma > 1.0 + 1e-6) CHECK_FALSE(verify_mixing_certificate(m, tight));
  }
}

TEST_CASE("simulate_forward shapes and ranges") {
  const ModelSpec m = builtin_model("hereditary-chain");
  for (const Scheme& s : {Scheme::multinomial(), Scheme::stratified(true), Scheme::stratified(false),
                          Scheme::systematic(false), Scheme::systematic(true)}) {
    const ForwardRun run = simulate_forward(m, 7, 9, s, 5);
    CHECK(run.locations.size() == 70);
    CHECK(run.ancestors.size() == 63);
    for (int v : run.locations) CHECK((v >= 0 && v < 5));
    for (int v : run.ancestors) CHECK((v >= 0 && v < 7));
    CHECK(run.reverse_ancestors(1).data() == run.ancestors_at(8).data());
    CHECK(run.reverse_locations(0).data() == run.locations_at(9).data());
  }
}

TEST_CASE("simulate_forward is deterministic in the seed") {
  const ModelSpec m = builtin_model("hereditary-binary");
  const ForwardRun a = simulate_forward(m, 20, 30, Scheme::stratified(), 99);
  const ForwardRun b = simulate_forward(m, 20, 30, Scheme::stratified(), 99);
  const ForwardRun c = simulate_forward(m, 20, 30, Scheme::stratified(), 100);
  CHECK(a.locations == b.locations);
  CHECK(a.ancestors == b.ancestors);
  CHECK(a.ancestors != c.ancestors);
}

TEST_CASE("initial generation is uniform over states") {
  const ModelSpec m = builtin_model("neutral-uniform", {{"S", 4}});
  std::vector<double> counts(4, 0.0);
  const int runs = 5000;
  for (int r = 0; r < runs; ++r) {
    const ForwardRun run = simulate_forward(m, 5, 1, Scheme::multinomial(), derive_seed(3, r));
    for (int v : run.locations_at(0)) counts[static_cast<std::size_t>(v)] += 1.0;
  }
  for (double c : counts) CHECK(testing::within_se(c / (5.0 * runs), 0.25, 5.0 * runs));
}

TEST_CASE("forward run CSV dump") {
  const ModelSpec m = builtin_model("hereditary-binary");
  const ForwardRun run = simulate_forward(m, 3, 2, Scheme::multinomial(), 1);
  const auto dir = (std::filesystem::temp_directory_path() / "smcgen_model_csv").string();
  write_forward_run_csv(run, dir, "config_hash=0000000000000000 seed=1");
  const std::string loc = slurp(dir + "/locations.csv");
  const std::string anc = slurp(dir + "/ancestors.csv");
  CHECK(loc.rfind("generation,particle,state\n", 0) == 0);
  CHECK(anc.rfind("generation,child,parent\n", 0) == 0);
  CHECK(loc.find("# config_hash=0000000000000000 seed=1\n") != std::string::npos);
  // 9 location rows and 6 ancestor rows, each with a header and metadata line.
  CHECK(std::count(loc.begin(), loc.end(), '\n') == 11);
  CHECK(std::count(anc.begin(), anc.end(), '\n') == 8);
  // Ancestor rows use the child's generation: first data row is generation 1.
  CHECK(anc.find("\n1,0,") != std::string::npos);
  CHECK(anc.find("\n0,") == std::string::npos);
}
