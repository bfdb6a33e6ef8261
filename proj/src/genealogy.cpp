#include "smcgen/genealogy.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"

namespace smcgen {

int LabelledPartition::sample_size() const {
  int n = 0;
  for (const auto& b : blocks) n += static_cast<int>(b.size());
  return n;
}

void LabelledPartition::canonicalize() {
  for (auto& b : blocks) std::sort(b.begin(), b.end());
  std::vector<std::size_t> order(blocks.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return blocks[a].front() < blocks[b].front();
  });
  std::vector<Block> sorted_blocks;
  std::vector<int> sorted_labels;
  sorted_blocks.reserve(blocks.size());
  sorted_labels.reserve(labels.size());
  for (auto i : order) {
    sorted_blocks.push_back(std::move(blocks[i]));
    sorted_labels.push_back(labels[i]);
  }
  blocks = std::move(sorted_blocks);
  labels = std::move(sorted_labels);
}

void LabelledPartition::validate(int N) const {
  if (blocks.size() != labels.size()) throw InvariantViolation("block and label counts differ");
  const int n = sample_size();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.empty()) throw InvariantViolation("empty block");
    if (!std::is_sorted(b.begin(), b.end())) throw InvariantViolation("block members unsorted");
    if (i > 0 && blocks[i - 1].front() >= b.front()) throw InvariantViolation("blocks out of order");
    for (int m : b) {
      if (m < 0 || m >= n || seen[static_cast<std::size_t>(m)]) {
        throw InvariantViolation("blocks do not partition the sample");
      }
      seen[static_cast<std::size_t>(m)] = 1;
    }
    if (labels[i] < 0 || labels[i] >= N) throw InvariantViolation("block label outside the population");
    for (std::size_t j = 0; j < i; ++j) {
      if (labels[j] == labels[i]) throw InvariantViolation("two blocks share a label");
    }
  }
}

LabelledPartition initial_partition(int n, std::span<const int> terminal_labels, int N) {
  if (n < 1 || terminal_labels.size() != static_cast<std::size_t>(n)) {
    throw InvalidArgument("need exactly n terminal labels");
  }
  LabelledPartition p;
  for (int i = 0; i < n; ++i) {
    const int l = terminal_labels[static_cast<std::size_t>(i)];
    if (l < 0 || l >= N) throw LabelOutOfRange("terminal label " + std::to_string(l) + " outside [0, N)");
    for (int j = 0; j < i; ++j) {
      if (terminal_labels[static_cast<std::size_t>(j)] == l) {
        throw DuplicateLabel("terminal label " + std::to_string(l) + " repeated");
      }
    }
    p.blocks.push_back({i});
    p.labels.push_back(l);
  }
  return p;
}

LabelledPartition apply_ancestors(const LabelledPartition& p, std::span<const int> parents) {
  LabelledPartition out;
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const int label = p.labels[i];
    if (label < 0 || static_cast<std::size_t>(label) >= parents.size()) {
      throw LabelOutOfRange("block label is not a child index of this ancestor vector");
    }
    const int parent = parents[static_cast<std::size_t>(label)];
    auto it = std::find(out.labels.begin(), out.labels.end(), parent);
    if (it == out.labels.end()) {
      out.labels.push_back(parent);
      out.blocks.push_back(p.blocks[i]);
    } else {
      auto& dst = out.blocks[static_cast<std::size_t>(it - out.labels.begin())];
      dst.insert(dst.end(), p.blocks[i].begin(), p.blocks[i].end());
    }
  }
  out.canonicalize();
  return out;
}

LabelledPartition apply_ancestors(const LabelledPartition& p, const AncestorVector& a) {
  return apply_ancestors(p, std::span<const int>(a.parents));
}

GenealogyTrajectory trace(const ForwardRun& run, std::span<const int> terminal_labels) {
  GenealogyTrajectory t;
  t.n = static_cast<int>(terminal_labels.size());
  t.N = run.N;
  t.states.reserve(static_cast<std::size_t>(run.K) + 1);
  t.states.push_back(initial_partition(t.n, terminal_labels, run.N));
  for (int k = 1; k <= run.K; ++k) t.states.push_back(apply_ancestors(t.states.back(), run.reverse_ancestors(k)));
  return t;
}

std::vector<int> walk_back(const ForwardRun& run, int terminal_label) {
  if (terminal_label < 0 || terminal_label >= run.N) throw LabelOutOfRange("terminal label outside [0, N)");
  std::vector<int> path(static_cast<std::size_t>(run.K) + 1);
  int current = terminal_label;
  path[0] = current;
  for (int k = 1; k <= run.K; ++k) {
    current = run.ancestors[static_cast<std::size_t>(run.K - k) * static_cast<std::size_t>(run.N) +
                            static_cast<std::size_t>(current)];
    path[static_cast<std::size_t>(k)] = current;
  }
  return path;
}

Partition canonical(Partition p) {
  for (auto& b : p) std::sort(b.begin(), b.end());
  std::sort(p.begin(), p.end(), [](const Block& a, const Block& b) { return a.front() < b.front(); });
  return p;
}

Partition unlabel(const LabelledPartition& p) { return p.blocks; }

Partition singletons(int n) {
  Partition p;
  for (int i = 0; i < n; ++i) p.push_back({i});
  return p;
}

namespace {

// Index of the eta block containing each xi block, or -1 if some xi block is split.
std::vector<int> containing_blocks(const Partition& xi, const Partition& eta) {
  int n = 0;
  for (const auto& b : eta) n += static_cast<int>(b.size());
  std::vector<int> owner(static_cast<std::size_t>(n), -1);
  for (std::size_t j = 0; j < eta.size(); ++j) {
    for (int m : eta[j]) {
      if (m < 0 || m >= n) return {};
      owner[static_cast<std::size_t>(m)] = static_cast<int>(j);
    }
  }
  int xi_n = 0;
  std::vector<int> result;
  for (const auto& b : xi) {
    xi_n += static_cast<int>(b.size());
    if (b.empty()) return {};
    int j = -1;
    for (int m : b) {
      if (m < 0 || m >= n) return {};
      const int o = owner[static_cast<std::size_t>(m)];
      if (j == -1) j = o;
      if (o != j || o == -1) return {};
    }
    result.push_back(j);
  }
  if (xi_n != n) return {};
  return result;
}

}  // namespace

bool is_coarsening(const Partition& xi, const Partition& eta) {
  return !containing_blocks(xi, eta).empty() || (xi.empty() && eta.empty());
}

std::vector<int> merge_sizes(const Partition& xi, const Partition& eta) {
  auto owner = containing_blocks(xi, eta);
  if (owner.empty()) throw InvalidArgument("eta is not obtained from xi by merging blocks");
  std::vector<int> sizes(eta.size(), 0);
  for (int j : owner) ++sizes[static_cast<std::size_t>(j)];
  for (int s : sizes) {
    if (s == 0) throw InvalidArgument("eta is not obtained from xi by merging blocks");
  }
  return sizes;
}

bool covers_merge(const Partition& xi, const Partition& eta) {
  if (eta.size() + 1 != xi.size() || !is_coarsening(xi, eta)) return false;
  auto sizes = merge_sizes(xi, eta);
  return std::count(sizes.begin(), sizes.end(), 2) == 1;
}

void write_trajectory_csv(const GenealogyTrajectory& trajectory, const std::string& path,
                          const std::string& metadata) {
  CsvWriter out(path);
  out.header({"k", "block_index", "members", "label"});
  for (std::size_t k = 0; k < trajectory.states.size(); ++k) {
    const auto& state = trajectory.states[k];
    for (std::size_t b = 0; b < state.blocks.size(); ++b) {
      std::ostringstream members;
      for (std::size_t i = 0; i < state.blocks[b].size(); ++i) {
        if (i) members << ';';
        members << state.blocks[b][i];
      }
      out.row(k, b, members.str(), state.labels[b]);
    }
  }
  out.finish(metadata);
}

}  // namespace smcgen
