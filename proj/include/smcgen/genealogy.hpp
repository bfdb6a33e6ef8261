#pragma once

#include <span>
#include <string>
#include <vector>

#include "smcgen/model.hpp"
#include "smcgen/resampling.hpp"

namespace smcgen {

// Sorted member list of one block; members are sample indices in [0, n).
using Block = std::vector<int>;
// Unlabelled partition of [0, n), blocks ordered by smallest member.
using Partition = std::vector<Block>;

// Partition of the sample whose blocks carry the index of their current
// ancestral particle. Blocks are kept in canonical order (by smallest member).
struct LabelledPartition {
  std::vector<Block> blocks;
  std::vector<int> labels;

  std::size_t size() const { return blocks.size(); }
  int sample_size() const;

  // Sorts members and orders blocks by minimum, carrying labels along.
  void canonicalize();
  // Throws InvariantViolation unless blocks partition [0, n) with distinct labels in [0, N).
  void validate(int N) const;

  bool operator==(const LabelledPartition&) const = default;
};

struct GenealogyTrajectory {
  int n = 0;
  int N = 0;
  std::vector<LabelledPartition> states;  // states[k] is the partition k generations back
};

LabelledPartition initial_partition(int n, std::span<const int> terminal_labels, int N);

// Replaces each label by its parent and unions blocks that share a parent.
LabelledPartition apply_ancestors(const LabelledPartition& p, std::span<const int> parents);
LabelledPartition apply_ancestors(const LabelledPartition& p, const AncestorVector& a);

// Runs back through all K generations of `run`.
GenealogyTrajectory trace(const ForwardRun& run, std::span<const int> terminal_labels);

// Per-particle walk-back, independent of apply_ancestors: entry k is the
// ancestor index of `terminal_label` k generations back.
std::vector<int> walk_back(const ForwardRun& run, int terminal_label);

// True iff eta arises from xi by merging exactly two blocks.
bool covers_merge(const Partition& xi, const Partition& eta);

// True iff every block of xi is contained in a block of eta.
bool is_coarsening(const Partition& xi, const Partition& eta);

// For each block of eta (in order), the number of blocks of xi it contains.
// Throws InvalidArgument unless eta coarsens xi.
std::vector<int> merge_sizes(const Partition& xi, const Partition& eta);

Partition unlabel(const LabelledPartition& p);
Partition canonical(Partition p);
Partition singletons(int n);

// k, block_index, members (semicolon-joined), label
void write_trajectory_csv(const GenealogyTrajectory& trajectory, const std::string& path,
                          const std::string& metadata);

}  // namespace smcgen
