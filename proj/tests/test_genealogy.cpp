#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "smcgen/errors.hpp"
#include "smcgen/genealogy.hpp"
#include "support.hpp"

using namespace smcgen;

namespace {

LabelledPartition lp(std::vector<Block> blocks, std::vector<int> labels) {
  LabelledPartition p;
  p.blocks = std::move(blocks);
  p.labels = std::move(labels);
  return p;
}

// Five particles, four generations. Reverse step k maps child indices to
// parents; entries not on the traced lineages are arbitrary but fixed.
ForwardRun figure_one_run() {
  const std::vector<std::vector<int>> reverse_steps{
      {0, 1, 2, 3, 3},  // G_1
      {1, 1, 1, 3, 4},  // G_2
      {0, 1, 2, 2, 4},  // G_3
      {0, 3, 3, 3, 4},  // G_4
  };
  std::vector<std::vector<int>> forward(reverse_steps.rbegin(), reverse_steps.rend());
  return testing::manual_run(5, std::vector<std::vector<int>>(5, std::vector<int>(5, 0)), forward);
}

}  // namespace

TEST_CASE("initial partition") {
  const LabelledPartition p = initial_partition(3, std::vector<int>{1, 4, 6}, 7);
  CHECK(p == lp({{0}, {1}, {2}}, {1, 4, 6}));
  CHECK(initial_partition(1, std::vector<int>{0}, 1) == lp({{0}}, {0}));
  CHECK_THROWS_AS(initial_partition(2, std::vector<int>{3, 3}, 5), DuplicateLabel);
  CHECK_THROWS_AS(initial_partition(2, std::vector<int>{3, 5}, 5), LabelOutOfRange);
  CHECK_THROWS_AS(initial_partition(2, std::vector<int>{-1, 2}, 5), LabelOutOfRange);
  CHECK_THROWS_AS(initial_partition(3, std::vector<int>{0, 1}, 5), Error);
}

TEST_CASE("five-particle example trajectory") {
  const ForwardRun run = figure_one_run();
  const GenealogyTrajectory t = trace(run, std::vector<int>{0, 1, 2, 3, 4});
  REQUIRE(t.states.size() == 5);
  CHECK(t.states[0] == lp({{0}, {1}, {2}, {3}, {4}}, {0, 1, 2, 3, 4}));
  CHECK(t.states[1] == lp({{0}, {1}, {2}, {3, 4}}, {0, 1, 2, 3}));
  CHECK(t.states[2] == lp({{0, 1, 2}, {3, 4}}, {1, 3}));
  CHECK(t.states[3] == lp({{0, 1, 2}, {3, 4}}, {1, 2}));
  CHECK(t.states[4] == lp({{0, 1, 2, 3, 4}}, {3}));
}

TEST_CASE("apply_ancestors examples") {
  const LabelledPartition p = lp({{0}, {1}, {2}, {3, 4}}, {0, 1, 2, 3});
  const std::vector<int> a{1, 1, 1, 3, 4};
  CHECK(apply_ancestors(p, a) == lp({{0, 1, 2}, {3, 4}}, {1, 3}));
  std::vector<int> identity(5);
  std::iota(identity.begin(), identity.end(), 0);
  CHECK(apply_ancestors(p, identity) == p);
  const std::vector<int> all_to_three(5, 3);
  CHECK(apply_ancestors(p, all_to_three) == lp({{0, 1, 2, 3, 4}}, {3}));
}

TEST_CASE("apply_ancestors ignores block order") {
  Rng rng(12);
  for (int t = 0; t < 500; ++t) {
    const int N = 4 + static_cast<int>(rng.below(10));
    const int n = 2 + static_cast<int>(rng.below(3));
    std::vector<int> labels(static_cast<std::size_t>(N));
    std::iota(labels.begin(), labels.end(), 0);
    rng.shuffle(labels);
    labels.resize(static_cast<std::size_t>(n));
    const LabelledPartition p = initial_partition(n, labels, N);
    std::vector<int> a(static_cast<std::size_t>(N));
    for (auto& v : a) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(N)));
    LabelledPartition shuffled = p;
    std::vector<std::size_t> order(p.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t i = 0; i < order.size(); ++i) {
      shuffled.blocks[i] = p.blocks[order[i]];
      shuffled.labels[i] = p.labels[order[i]];
    }
    CHECK(apply_ancestors(shuffled, a) == apply_ancestors(p, a));
  }
}

TEST_CASE("identity ancestors keep the initial state") {
  std::vector<std::vector<int>> steps(6, std::vector<int>{0, 1, 2, 3});
  const ForwardRun run = testing::manual_run(4, std::vector<std::vector<int>>(7, std::vector<int>(4, 0)), steps);
  const GenealogyTrajectory t = trace(run, std::vector<int>{3, 1});
  for (const auto& s : t.states) CHECK(s == t.states[0]);
}

TEST_CASE("random trajectories are valid, monotone and agree with walk-back") {
  const ModelSpec m = builtin_model("hereditary-binary");
  Rng rng(55);
  const std::vector<Scheme> schemes{Scheme::multinomial(), Scheme::stratified(true), Scheme::stratified(false),
                                    Scheme::systematic(false), Scheme::systematic(true)};
  for (int r = 0; r < 1000; ++r) {
    const int N = 3 + static_cast<int>(rng.below(12));
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(N, 5))));
    const int K = 1 + static_cast<int>(rng.below(15));
    const ForwardRun run = simulate_forward(m, N, K, schemes[static_cast<std::size_t>(r) % schemes.size()], r);
    std::vector<int> labels(static_cast<std::size_t>(N));
    std::iota(labels.begin(), labels.end(), 0);
    rng.shuffle(labels);
    labels.resize(static_cast<std::size_t>(n));
    const GenealogyTrajectory t = trace(run, labels);
    REQUIRE(t.states.size() == static_cast<std::size_t>(K + 1));
    CHECK(t.states[0].size() == static_cast<std::size_t>(n));
    std::vector<std::vector<int>> walks;
    for (int l : labels) walks.push_back(walk_back(run, l));
    for (int k = 0; k <= K; ++k) {
      const auto& s = t.states[static_cast<std::size_t>(k)];
      CHECK_NOTHROW(s.validate(N));
      if (k > 0) {
        CHECK(s.size() <= t.states[static_cast<std::size_t>(k - 1)].size());
        CHECK(is_coarsening(unlabel(t.states[static_cast<std::size_t>(k - 1)]), unlabel(s)));
      }
      for (std::size_t b = 0; b < s.size(); ++b) {
        for (int member : s.blocks[b]) {
          CHECK(walks[static_cast<std::size_t>(member)][static_cast<std::size_t>(k)] == s.labels[b]);
        }
      }
    }
    CHECK(t.states.back().size() >= 1);
  }
}

TEST_CASE("validate catches broken partitions") {
  CHECK_THROWS_AS(lp({{0}, {0, 1}}, {0, 1}).validate(4), InvariantViolation);
  CHECK_THROWS_AS(lp({{0}, {2}}, {0, 1}).validate(4), InvariantViolation);
  CHECK_THROWS_AS(lp({{0}, {1}}, {2, 2}).validate(4), InvariantViolation);
  CHECK_THROWS_AS(lp({{0}, {1}}, {2, 4}).validate(4), InvariantViolation);
  CHECK_THROWS_AS(lp({{1}, {0}}, {2, 3}).validate(4), InvariantViolation);
  CHECK_NOTHROW(lp({{0, 2}, {1}}, {2, 3}).validate(4));
}

TEST_CASE("covers_merge") {
  const Partition s3 = singletons(3);
  CHECK(covers_merge(s3, {{0, 1}, {2}}));
  CHECK(covers_merge(s3, {{0, 2}, {1}}));
  CHECK_FALSE(covers_merge(s3, {{0, 1, 2}}));
  CHECK_FALSE(covers_merge(s3, s3));
  CHECK(covers_merge({{0, 1}, {2}, {3}}, {{0, 1, 3}, {2}}));
  CHECK_FALSE(covers_merge(singletons(4), {{0, 1}, {2, 3}}));
}

TEST_CASE("merge sizes and coarsening") {
  CHECK(is_coarsening(singletons(4), {{0, 1}, {2, 3}}));
  CHECK_FALSE(is_coarsening({{0, 1}, {2}}, {{0}, {1, 2}}));
  CHECK(merge_sizes(singletons(4), {{0, 1}, {2, 3}}) == std::vector<int>{2, 2});
  CHECK(merge_sizes(singletons(3), {{0, 1, 2}}) == std::vector<int>{3});
  CHECK_THROWS_AS(merge_sizes({{0, 1}, {2}}, {{0}, {1, 2}}), InvalidArgument);
}

TEST_CASE("unlabel and canonical") {
  CHECK(unlabel(lp({{0, 1}, {2}}, {3, 0})) == Partition{{0, 1}, {2}});
  CHECK(unlabel(initial_partition(4, std::vector<int>{0, 1, 2, 3}, 4)) == singletons(4));
  CHECK(unlabel(lp({{0, 1, 2}}, {1})) == Partition{{0, 1, 2}});
  CHECK(canonical({{2, 1}, {0}}) == Partition{{0}, {1, 2}});
}

TEST_CASE("trajectory CSV") {
  const GenealogyTrajectory t = trace(figure_one_run(), std::vector<int>{0, 1, 2, 3, 4});
  const auto path = (std::filesystem::temp_directory_path() / "smcgen_trajectory.csv").string();
  write_trajectory_csv(t, path, "config_hash=0 seed=0");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string s = ss.str();
  CHECK(s.rfind("k,block_index,members,label\n", 0) == 0);
  CHECK(s.find("\n2,0,0;1;2,1\n") != std::string::npos);
  CHECK(s.find("\n4,0,0;1;2;3;4,3\n") != std::string::npos);
  CHECK(s.find("# config_hash=0 seed=0") != std::string::npos);
}
