#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "smcgen/model.hpp"

namespace smcgen {

// Either a builtin name with parameters or inline tables.
struct ModelReference {
  std::string builtin = "neutral-uniform";
  ModelParams params;
  std::optional<ModelSpec> inline_model;
};

struct ExperimentConfig {
  ModelReference model;
  std::string scheme = "multinomial";
  int N = 0;
  int n = 2;
  int K = 0;
  int j = 0;
  double t_max = 3.0;
  int replicates = 1000;
  std::optional<std::uint64_t> seed;
  std::vector<int> labels;  // empty means 0..n-1
  std::string engine = "auto";
  std::string z_grid = "0:0.0833:0.005";
  int mc_replicates = 1000;
  std::string out_dir;
  unsigned threads = 0;
};

// Inline models: {"name", "S", "potentials", "kernels"}; a flat potential
// vector with a single kernel matrix is stationary, otherwise one table per
// generation. Builtins: {"builtin", "params"}. Throws ConfigError.
ModelReference parse_model_reference(const std::string& json_text);
ModelSpec resolve_model(const ModelReference& ref);

// Reads a JSON object; unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Stable serialisation of everything that affects results (threads and the
// output directory excluded), used for the config hash.
std::string canonical_config(const std::string& subcommand, const ExperimentConfig& config);

}  // namespace smcgen
