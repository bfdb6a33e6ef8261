#include "smcgen/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"
#include "smcgen/resampling.hpp"
#include "smcgen/rng.hpp"

namespace smcgen {

Scheme parse_scheme(std::string_view name) {
  if (name == "multinomial") return Scheme::multinomial();
  if (name == "stratified") return Scheme::stratified(true);
  if (name == "stratified-ordered") return Scheme::stratified(false);
  if (name == "systematic") return Scheme::systematic(false);
  if (name == "systematic-shuffled") return Scheme::systematic(true);
  throw InvalidArgument("unknown resampling scheme '" + std::string(name) + "'");
}

std::string to_string(const Scheme& scheme) {
  switch (scheme.kind) {
    case SchemeKind::multinomial:
      return "multinomial";
    case SchemeKind::stratified:
      return scheme.shuffle ? "stratified" : "stratified-ordered";
    case SchemeKind::systematic:
      return scheme.shuffle ? "systematic-shuffled" : "systematic";
  }
  return "unknown";
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols) throw InvalidModel("ragged kernel matrix");
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
  }
  return m;
}

ModelSpec ModelSpec::make_stationary(std::string name, std::vector<double> potential, Matrix kernel) {
  ModelSpec m;
  m.name = std::move(name);
  m.state_count = static_cast<int>(potential.size());
  m.stationary = true;
  m.potentials.push_back(std::move(potential));
  m.kernels.push_back(std::move(kernel));
  m.validate();
  return m;
}

ModelSpec ModelSpec::make(std::string name, std::vector<std::vector<double>> potentials,
                          std::vector<Matrix> kernels) {
  ModelSpec m;
  m.name = std::move(name);
  m.state_count = potentials.empty() ? 0 : static_cast<int>(potentials.front().size());
  m.stationary = potentials.size() == 1;
  m.potentials = std::move(potentials);
  m.kernels = std::move(kernels);
  m.validate();
  return m;
}

const std::vector<double>& ModelSpec::potential_at(int k) const {
  if (stationary) return potentials.front();
  if (k < 0 || k >= table_count()) {
    throw OutOfRange("model '" + name + "' has no potential for generation " + std::to_string(k));
  }
  return potentials[static_cast<std::size_t>(k)];
}

const Matrix& ModelSpec::kernel_at(int k) const {
  if (stationary) return kernels.front();
  if (k < 0 || k >= table_count()) {
    throw OutOfRange("model '" + name + "' has no kernel for generation " + std::to_string(k));
  }
  return kernels[static_cast<std::size_t>(k)];
}

void ModelSpec::validate() const {
  if (state_count < 2) throw InvalidModel("state count must be at least 2");
  if (potentials.empty()) throw InvalidModel("model has no generations");
  if (potentials.size() != kernels.size()) {
    throw InvalidModel("potential and kernel tables cover different generations");
  }
  if (stationary && potentials.size() != 1) {
    throw InvalidModel("a stationary model holds exactly one (g, M) pair");
  }
  const auto S = static_cast<std::size_t>(state_count);
  for (std::size_t k = 0; k < potentials.size(); ++k) {
    const auto& g = potentials[k];
    if (g.size() != S) throw InvalidModel("potential length differs from state count");
    for (double v : g) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw InvalidModel("potentials must be finite and strictly positive");
      }
    }
    const Matrix& M = kernels[k];
    if (M.rows != S || M.cols != S) throw InvalidModel("kernel must be S x S");
    for (std::size_t x = 0; x < S; ++x) {
      double sum = 0.0;
      for (std::size_t y = 0; y < S; ++y) {
        const double v = M(x, y);
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw InvalidModel("kernel entries must be finite and strictly positive");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > 1e-12) throw InvalidModel("kernel rows must sum to 1");
    }
  }
}

MixingCertificate compute_mixing_certificate(const ModelSpec& model) {
  const int S = model.state_count;
  std::vector<double> qmax(static_cast<std::size_t>(S), 0.0);
  std::vector<double> qmin(static_cast<std::size_t>(S), std::numeric_limits<double>::infinity());
  for (int k = 0; k < model.table_count(); ++k) {
    for (int x = 0; x < S; ++x) {
      for (int y = 0; y < S; ++y) {
        const double q = model.backward_weight(k, x, y);
        if (!(q > 0.0)) throw InvalidModel("g_k(x) M_k(x, y) must be strictly positive");
        auto yi = static_cast<std::size_t>(y);
        qmax[yi] = std::max(qmax[yi], q);
        qmin[yi] = std::min(qmin[yi], q);
      }
    }
  }
  MixingCertificate cert;
  cert.f.resize(static_cast<std::size_t>(S));
  for (std::size_t y = 0; y < qmax.size(); ++y) {
    cert.f[y] = std::sqrt(qmax[y] * qmin[y]);
    cert.gamma = std::max(cert.gamma, std::sqrt(qmax[y] / qmin[y]));
  }
  // Rounding in the square roots can leave the extreme q a few ulps outside
  // [f / gamma, gamma f]; nudge gamma up until the scan passes.
  while (!verify_mixing_certificate(model, cert)) {
    cert.gamma = std::nextafter(cert.gamma, std::numeric_limits<double>::infinity()) * (1.0 + 1e-15);
  }
  cert.valid = true;
  return cert;
}

bool verify_mixing_certificate(const ModelSpec& model, const MixingCertificate& cert) {
  const int S = model.state_count;
  if (cert.f.size() != static_cast<std::size_t>(S) || cert.gamma < 1.0) return false;
  for (int k = 0; k < model.table_count(); ++k) {
    for (int x = 0; x < S; ++x) {
      for (int y = 0; y < S; ++y) {
        const double q = model.backward_weight(k, x, y);
        const double f = cert.f[static_cast<std::size_t>(y)];
        if (f / cert.gamma > q || q > cert.gamma * f) return false;
      }
    }
  }
  return true;
}

namespace {

double param(const ModelParams& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void reject_unknown(const ModelParams& params, std::initializer_list<const char*> known,
                    const std::string& model) {
  for (const auto& [key, value] : params) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw InvalidArgument("model '" + model + "' has no parameter '" + key + "'");
  }
}

int state_param(const ModelParams& params, double fallback) {
  const double S = param(params, "S", fallback);
  if (S < 2 || S != std::floor(S) || S > 1024) throw InvalidArgument("S must be an integer >= 2");
  return static_cast<int>(S);
}

double probability_param(const ModelParams& params, const std::string& key, double fallback) {
  const double p = param(params, key, fallback);
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument(key + " must lie in (0, 1)");
  return p;
}

}  // namespace

ModelSpec builtin_model(const std::string& name, const ModelParams& params) {
  if (name == "neutral-uniform") {
    reject_unknown(params, {"S"}, name);
    const int S = state_param(params, 2);
    return ModelSpec::make_stationary(name, std::vector<double>(static_cast<std::size_t>(S), 1.0),
                                      Matrix(static_cast<std::size_t>(S), static_cast<std::size_t>(S), 1.0 / S));
  }
  if (name == "hereditary-binary") {
    reject_unknown(params, {"p_stay", "g_ratio"}, name);
    const double p = probability_param(params, "p_stay", 0.7);
    const double ratio = param(params, "g_ratio", 4.0);
    if (!(ratio > 0.0)) throw InvalidArgument("g_ratio must be positive");
    const double r = std::sqrt(ratio);
    return ModelSpec::make_stationary(name, {1.0 / r, r}, Matrix::from_rows({{p, 1.0 - p}, {1.0 - p, p}}));
  }
  if (name == "hereditary-chain") {
    reject_unknown(params, {"S", "p_stay", "g_ratio", "leak"}, name);
    const int S = state_param(params, 5);
    const double p = probability_param(params, "p_stay", 0.6);
    const double ratio = param(params, "g_ratio", 4.0);
    const double leak = probability_param(params, "leak", 0.05);
    if (!(ratio > 0.0)) throw InvalidArgument("g_ratio must be positive");
    std::vector<double> g(static_cast<std::size_t>(S));
    Matrix M(static_cast<std::size_t>(S), static_cast<std::size_t>(S), 0.0);
    for (int x = 0; x < S; ++x) {
      g[static_cast<std::size_t>(x)] = std::pow(ratio, static_cast<double>(x) / (S - 1) - 0.5);
      const int neighbours = (x > 0) + (x < S - 1);
      for (int y = 0; y < S; ++y) {
        double v = 0.0;
        if (y == x) {
          v = p;
        } else {
          v = (1.0 - p) * leak / (S - 1);
          if (std::abs(x - y) == 1) v += (1.0 - p) * (1.0 - leak) / neighbours;
        }
        M(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) = v;
      }
    }
    return ModelSpec::make_stationary(name, std::move(g), std::move(M));
  }
  throw UnknownModel("unknown built-in model '" + name + "'");
}

ForwardRun simulate_forward(const ModelSpec& model, int N, int K, const Scheme& scheme,
                            std::uint64_t seed) {
  if (N < 2) throw InvalidArgument("population size N must be at least 2");
  if (K < 1) throw InvalidArgument("generation count K must be at least 1");
  if (!model.stationary && K - 1 > model.last_generation()) {
    throw OutOfRange("model '" + model.name + "' does not cover " + std::to_string(K) + " generations");
  }
  const auto n = static_cast<std::size_t>(N);
  const int S = model.state_count;
  ForwardRun run;
  run.N = N;
  run.K = K;
  run.seed = seed;
  run.scheme = scheme;
  run.locations.resize(n * static_cast<std::size_t>(K + 1));
  run.ancestors.resize(n * static_cast<std::size_t>(K));

  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) run.locations[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(S)));

  std::vector<double> values(n);
  std::vector<double> row_cdf(static_cast<std::size_t>(S * S));
  for (int f = 0; f < K; ++f) {
    if (f == 0 || !model.stationary) {
      const Matrix& M = model.kernel_at(f);
      for (int x = 0; x < S; ++x) {
        double acc = 0.0;
        for (int y = 0; y < S; ++y) {
          acc += M(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
          row_cdf[static_cast<std::size_t>(x * S + y)] = acc;
        }
        row_cdf[static_cast<std::size_t>(x * S + S - 1)] = 1.0;
      }
    }
    const auto parents = run.locations_at(f);
    const auto& g = model.potential_at(f);
    for (std::size_t m = 0; m < n; ++m) values[m] = g[static_cast<std::size_t>(parents[m])];
    const WeightVector w = normalize(values);
    const AncestorVector a = sample_ancestors(w, scheme, rng);

    int* children = run.locations.data() + static_cast<std::size_t>(f + 1) * n;
    int* anc = run.ancestors.data() + static_cast<std::size_t>(f) * n;
    for (std::size_t i = 0; i < n; ++i) {
      const int parent = a.parents[i];
      anc[i] = parent;
      const int x = parents[static_cast<std::size_t>(parent)];
      const double u = rng.uniform();
      const double* cdf = row_cdf.data() + static_cast<std::size_t>(x * S);
      int y = 0;
      while (y < S - 1 && u >= cdf[y]) ++y;
      children[i] = y;
    }
  }
  return run;
}

void write_forward_run_csv(const ForwardRun& run, const std::string& directory,
                           const std::string& metadata) {
  ensure_directory(directory);
  {
    CsvWriter out(directory + "/locations.csv");
    out.header({"generation", "particle", "state"});
    for (int f = 0; f <= run.K; ++f) {
      const auto loc = run.locations_at(f);
      for (int i = 0; i < run.N; ++i) out.row(f, i, loc[static_cast<std::size_t>(i)]);
    }
    out.finish(metadata);
  }
  {
    CsvWriter out(directory + "/ancestors.csv");
    out.header({"generation", "child", "parent"});
    for (int f = 0; f < run.K; ++f) {
      const auto anc = run.ancestors_at(f);
      for (int i = 0; i < run.N; ++i) out.row(f + 1, i, anc[static_cast<std::size_t>(i)]);
    }
    out.finish(metadata);
  }
}

}  // namespace smcgen
