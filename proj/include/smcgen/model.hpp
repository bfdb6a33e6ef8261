#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "smcgen/scheme.hpp"

namespace smcgen {

// Dense row-major matrix; only used for small S x S kernels.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// Finite-state particle model: potentials g_k and mutation kernels M_k indexed
// by forward-time generation. A stationary model stores a single (g, M) pair
// which is reused for every generation.
struct ModelSpec {
  std::string name;
  int state_count = 0;
  bool stationary = true;
  std::vector<std::vector<double>> potentials;
  std::vector<Matrix> kernels;

  static ModelSpec make_stationary(std::string name, std::vector<double> potential, Matrix kernel);
  static ModelSpec make(std::string name, std::vector<std::vector<double>> potentials,
                        std::vector<Matrix> kernels);

  // Number of generations with their own tables; stationary models report 1.
  int table_count() const { return static_cast<int>(potentials.size()); }
  // Largest forward generation index k for which (g_k, M_k) exist, or -1 when
  // the model is stationary and every k is valid.
  int last_generation() const { return stationary ? -1 : table_count() - 1; }

  const std::vector<double>& potential_at(int k) const;
  const Matrix& kernel_at(int k) const;
  double potential(int k, int x) const { return potential_at(k)[static_cast<std::size_t>(x)]; }
  double kernel(int k, int x, int y) const {
    return kernel_at(k)(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  }
  // g_k(x) M_k(x, y), the backward-simulation weight of a parent at x for a child at y.
  double backward_weight(int k, int x, int y) const { return potential(k, x) * kernel(k, x, y); }

  // Throws InvalidModel when an invariant fails.
  void validate() const;
};

struct MixingCertificate {
  double gamma = 1.0;
  std::vector<double> f;
  bool valid = false;
};

// Tightest certificate of the form f(y) = sqrt(qmax(y) qmin(y)) with
// gamma = max_y sqrt(qmax(y) / qmin(y)), q(x, y, k) = g_k(x) M_k(x, y).
MixingCertificate compute_mixing_certificate(const ModelSpec& model);

// Exhaustive scan of f(y)/gamma <= g_k(x) M_k(x, y) <= gamma f(y).
bool verify_mixing_certificate(const ModelSpec& model, const MixingCertificate& cert);

using ModelParams = std::map<std::string, double>;

// "neutral-uniform" {S}, "hereditary-binary" {p_stay, g_ratio},
// "hereditary-chain" {S, p_stay, g_ratio, leak}. Throws UnknownModel.
ModelSpec builtin_model(const std::string& name, const ModelParams& params = {});

// One forward simulation. Generation f holds N locations; ancestors[f][i] is the
// index in generation f of the parent of particle i in generation f + 1.
struct ForwardRun {
  int N = 0;
  int K = 0;
  std::uint64_t seed = 0;
  Scheme scheme;
  std::vector<int> locations;  // (K + 1) x N, forward order
  std::vector<int> ancestors;  // K x N, forward order

  std::span<const int> locations_at(int f) const {
    return {locations.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(N),
            static_cast<std::size_t>(N)};
  }
  std::span<const int> ancestors_at(int f) const {
    return {ancestors.data() + static_cast<std::size_t>(f) * static_cast<std::size_t>(N),
            static_cast<std::size_t>(N)};
  }

  // Reverse-time views: generation 0 is the terminal forward generation K.
  int forward_index(int reverse_k) const { return K - reverse_k; }
  std::span<const int> reverse_locations(int k) const { return locations_at(K - k); }
  // Maps children in reverse generation k - 1 to parents in reverse generation k.
  std::span<const int> reverse_ancestors(int k) const { return ancestors_at(K - k); }
};

// Generation 0 is i.i.d. uniform over states; each later generation samples an
// ancestor vector with `scheme` and then mutates through M_k.
ForwardRun simulate_forward(const ModelSpec& model, int N, int K, const Scheme& scheme,
                            std::uint64_t seed);

// locations.csv (generation,particle,state) and ancestors.csv
// (generation,child,parent); ancestors rows use the child's generation.
void write_forward_run_csv(const ForwardRun& run, const std::string& directory,
                           const std::string& metadata);

}  // namespace smcgen
