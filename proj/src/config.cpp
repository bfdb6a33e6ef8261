#include "smcgen/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "smcgen/errors.hpp"

namespace smcgen {

namespace {

using nlohmann::json;

Matrix matrix_from_json(const json& j) {
  return Matrix::from_rows(j.get<std::vector<std::vector<double>>>());
}

ModelReference model_from_json(const json& j) {
  ModelReference ref;
  if (j.is_string()) {
    ref.builtin = j.get<std::string>();
    return ref;
  }
  if (!j.is_object()) throw ConfigError("model must be a name or an object");
  if (j.contains("builtin")) {
    for (const auto& [key, value] : j.items()) {
      if (key != "builtin" && key != "params") throw ConfigError("unknown model key '" + key + "'");
    }
    ref.builtin = j.at("builtin").get<std::string>();
    if (j.contains("params")) ref.params = j.at("params").get<ModelParams>();
    return ref;
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "name" && key != "S" && key != "potentials" && key != "kernels") {
      throw ConfigError("unknown model key '" + key + "'");
    }
  }
  if (!j.contains("potentials") || !j.contains("kernels")) {
    throw ConfigError("inline model needs potentials and kernels");
  }
  const std::string name = j.value("name", std::string("inline"));
  const auto& pot = j.at("potentials");
  const auto& ker = j.at("kernels");
  ModelSpec spec;
  if (!pot.empty() && pot.front().is_number()) {
    spec = ModelSpec::make_stationary(name, pot.get<std::vector<double>>(), matrix_from_json(ker));
  } else {
    std::vector<Matrix> kernels;
    for (const auto& k : ker) kernels.push_back(matrix_from_json(k));
    spec = ModelSpec::make(name, pot.get<std::vector<std::vector<double>>>(), std::move(kernels));
  }
  if (j.contains("S") && j.at("S").get<int>() != spec.state_count) {
    throw ConfigError("S does not match the tables");
  }
  ref.builtin.clear();
  ref.inline_model = std::move(spec);
  return ref;
}

json model_to_json(const ModelReference& ref) {
  if (!ref.inline_model) return {{"builtin", ref.builtin}, {"params", ref.params}};
  const auto& m = *ref.inline_model;
  json pots = m.potentials;
  json kers = json::array();
  for (const auto& k : m.kernels) {
    json rows = json::array();
    for (std::size_t r = 0; r < k.rows; ++r) {
      rows.push_back(std::vector<double>(k.row(r).begin(), k.row(r).end()));
    }
    kers.push_back(rows);
  }
  return {{"name", m.name}, {"S", m.state_count}, {"stationary", m.stationary}, {"potentials", pots},
          {"kernels", kers}};
}

}  // namespace

ModelReference parse_model_reference(const std::string& json_text) {
  try {
    return model_from_json(json::parse(json_text));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model definition: ") + e.what());
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
}

ModelSpec resolve_model(const ModelReference& ref) {
  if (ref.inline_model) {
    ref.inline_model->validate();
    return *ref.inline_model;
  }
  return builtin_model(ref.builtin, ref.params);
}

ExperimentConfig parse_config(const std::string& json_text) {
  static const std::set<std::string> known{"model", "scheme", "N",      "n",           "K",
                                           "j",     "t_max",  "replicates", "seed",    "labels",
                                           "engine", "z_grid", "mc_replicates", "out", "threads"};
  ExperimentConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    if (j.contains("model")) c.model = model_from_json(j.at("model"));
    c.scheme = j.value("scheme", c.scheme);
    c.N = j.value("N", c.N);
    c.n = j.value("n", c.n);
    c.K = j.value("K", c.K);
    c.j = j.value("j", c.j);
    c.t_max = j.value("t_max", c.t_max);
    c.replicates = j.value("replicates", c.replicates);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    c.labels = j.value("labels", c.labels);
    c.engine = j.value("engine", c.engine);
    c.z_grid = j.value("z_grid", c.z_grid);
    c.mc_replicates = j.value("mc_replicates", c.mc_replicates);
    c.out_dir = j.value("out", c.out_dir);
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  } catch (const InvalidModel& e) {
    throw ConfigError(e.what());
  }
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_config(const std::string& subcommand, const ExperimentConfig& c) {
  json j;
  j["subcommand"] = subcommand;
  j["model"] = model_to_json(c.model);
  j["scheme"] = c.scheme;
  j["N"] = c.N;
  j["n"] = c.n;
  j["K"] = c.K;
  j["j"] = c.j;
  j["t_max"] = c.t_max;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["labels"] = c.labels;
  j["engine"] = c.engine;
  j["z_grid"] = c.z_grid;
  j["mc_replicates"] = c.mc_replicates;
  // nlohmann::json sorts object keys, so the dump is canonical.
  return j.dump();
}

}  // namespace smcgen
