#include "smcgen/conditional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smcgen/errors.hpp"

namespace smcgen {

double stratum_overlap(const WeightVector& w, int s, int m) {
  const int N = static_cast<int>(w.size());
  const double lo = std::max(w.cumulative[static_cast<std::size_t>(m)], static_cast<double>(s) / N);
  const double hi = std::min(w.cumulative[static_cast<std::size_t>(m) + 1], static_cast<double>(s + 1) / N);
  return hi > lo ? (hi - lo) * N : 0.0;
}

namespace {

int draw_index(std::span<const double> cumulative, Rng& rng) {
  const double u = rng.uniform() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  auto i = static_cast<std::size_t>(it - cumulative.begin());
  return static_cast<int>(std::min(i, cumulative.size() - 1));
}

struct Context {
  const ModelSpec& model;
  int f;
  std::vector<int> x;  // parent states
  std::vector<int> y;  // child states
  WeightVector w;
  int N;

  Context(const ModelSpec& m, int gen, std::span<const int> xp, std::span<const int> xc)
      : model(m), f(gen), x(xp.begin(), xp.end()), y(xc.begin(), xc.end()), N(static_cast<int>(xp.size())) {
    if (xp.size() != xc.size()) throw InvalidArgument("parent and child generations differ in size");
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = model.potential(f, x[i]);
    w = normalize(g);
  }

  double M(int parent, int child) const {
    return model.kernel(f, x[static_cast<std::size_t>(parent)], y[static_cast<std::size_t>(child)]);
  }

  // First and last parent whose interval meets stratum s.
  std::pair<int, int> stratum_range(int s) const {
    const double lo = static_cast<double>(s) / N;
    const double hi = std::nextafter(static_cast<double>(s + 1) / N, lo);
    return {w.locate(lo), w.locate(hi)};
  }

  // Parent of `child` given that it uses stratum s, drawn from p(m) ∝ overlap(s, m) M(x_m, y_child).
  int draw_in_stratum(int s, int child, Rng& rng) const {
    auto [a, b] = stratum_range(s);
    double cum[64];
    std::vector<double> big;
    const int width = b - a + 1;
    double* c = cum;
    if (width > 64) {
      big.resize(static_cast<std::size_t>(width));
      c = big.data();
    }
    double acc = 0.0;
    for (int m = a; m <= b; ++m) {
      acc += stratum_overlap(w, s, m) * M(m, child);
      c[m - a] = acc;
    }
    return a + draw_index(std::span<const double>(c, static_cast<std::size_t>(width)), rng);
  }

  // Z(s, y_child) = Σ_m overlap(s, m) M(x_m, y_child).
  double stratum_mass(int s, int child) const {
    auto [a, b] = stratum_range(s);
    double acc = 0.0;
    for (int m = a; m <= b; ++m) acc += stratum_overlap(w, s, m) * M(m, child);
    return acc;
  }

  int pointer_parent(int s, double u) const { return w.locate(stratum_point(s, u, N)); }
};

class MultinomialConditional final : public ConditionalAncestorSampler {
 public:
  explicit MultinomialConditional(Context ctx) : ctx_(std::move(ctx)) {
    const int S = ctx_.model.state_count;
    const auto n = static_cast<std::size_t>(ctx_.N);
    cdf_.resize(static_cast<std::size_t>(S) * n);
    for (int s = 0; s < S; ++s) {
      double acc = 0.0;
      for (std::size_t m = 0; m < n; ++m) {
        acc += ctx_.model.backward_weight(ctx_.f, ctx_.x[m], s);
        cdf_[static_cast<std::size_t>(s) * n + m] = acc;
      }
    }
  }

  void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) override {
    const auto n = static_cast<std::size_t>(ctx_.N);
    for (std::size_t i = 0; i < children.size(); ++i) {
      const auto s = static_cast<std::size_t>(ctx_.y[static_cast<std::size_t>(children[i])]);
      out[i] = draw_index(std::span<const double>(cdf_.data() + s * n, n), rng);
    }
  }
  bool exact() const override { return true; }

 private:
  Context ctx_;
  std::vector<double> cdf_;
};

class StratifiedOrderedConditional final : public ConditionalAncestorSampler {
 public:
  explicit StratifiedOrderedConditional(Context ctx) : ctx_(std::move(ctx)) {}

  void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) override {
    for (std::size_t i = 0; i < children.size(); ++i) out[i] = ctx_.draw_in_stratum(children[i], children[i], rng);
  }
  bool exact() const override { return true; }

 private:
  Context ctx_;
};

// Target over sigma: Π_i Z(sigma(i), y_i).
class StratifiedShuffledConditional final : public ConditionalAncestorSampler {
 public:
  StratifiedShuffledConditional(Context ctx, Rng& rng, const ConditionalOptions& opt)
      : ctx_(std::move(ctx)), sweeps_(opt.sweeps) {
    const auto n = static_cast<std::size_t>(ctx_.N);
    log_z_.resize(n * n);
    // Z depends on the child only through its state; cache per (stratum, state).
    const int S = ctx_.model.state_count;
    std::vector<double> by_state(n * static_cast<std::size_t>(S), std::nan(""));
    for (std::size_t i = 0; i < n; ++i) {
      const auto ys = static_cast<std::size_t>(ctx_.y[i]);
      for (std::size_t s = 0; s < n; ++s) {
        double& cached = by_state[s * static_cast<std::size_t>(S) + ys];
        if (std::isnan(cached)) cached = std::log(ctx_.stratum_mass(static_cast<int>(s), static_cast<int>(i)));
        log_z_[s * n + i] = cached;
      }
    }
    sigma_.resize(n);
    std::iota(sigma_.begin(), sigma_.end(), 0);
    rng.shuffle(sigma_);
    for (int b = 0; b < opt.burn_in_sweeps; ++b) sweep(rng);
  }

  void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) override {
    for (int b = 0; b < sweeps_; ++b) sweep(rng);
    for (std::size_t i = 0; i < children.size(); ++i) {
      const int c = children[i];
      out[i] = ctx_.draw_in_stratum(sigma_[static_cast<std::size_t>(c)], c, rng);
    }
  }
  bool exact() const override { return false; }

 private:
  double lz(int s, int i) const {
    return log_z_[static_cast<std::size_t>(s) * static_cast<std::size_t>(ctx_.N) + static_cast<std::size_t>(i)];
  }

  void sweep(Rng& rng) {
    const auto n = static_cast<std::uint64_t>(ctx_.N);
    for (std::uint64_t t = 0; t < n; ++t) {
      const int i = static_cast<int>(rng.below(n));
      const int j = static_cast<int>(rng.below(n));
      if (i == j) continue;
      const int si = sigma_[static_cast<std::size_t>(i)];
      const int sj = sigma_[static_cast<std::size_t>(j)];
      const double delta = lz(sj, i) + lz(si, j) - lz(si, i) - lz(sj, j);
      if (delta >= 0.0 || rng.uniform() < std::exp(delta)) {
        std::swap(sigma_[static_cast<std::size_t>(i)], sigma_[static_cast<std::size_t>(j)]);
      }
    }
  }

  Context ctx_;
  int sweeps_;
  std::vector<double> log_z_;
  std::vector<int> sigma_;
};

// Segments of the shared uniform U on which every stratum keeps its parent.
struct Segments {
  std::vector<double> lo;
  std::vector<double> hi;
};

Segments systematic_segments(const Context& ctx) {
  std::vector<double> cuts{0.0, 1.0};
  for (int m = 1; m < ctx.N; ++m) {
    const double t = ctx.w.cumulative[static_cast<std::size_t>(m)] * ctx.N;
    const double frac = t - std::floor(t);
    if (frac > 0.0 && frac < 1.0) cuts.push_back(frac);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Segments seg;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) {
      seg.lo.push_back(cuts[i]);
      seg.hi.push_back(cuts[i + 1]);
    }
  }
  return seg;
}

// Draws a segment midpoint from the density ∝ Π_i M(x_{parent of stratum sigma(i)}, y_i).
double draw_systematic_u(const Context& ctx, const Segments& seg, const std::vector<int>* sigma, Rng& rng) {
  std::vector<double> logw(seg.lo.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < seg.lo.size(); ++j) {
    const double u = 0.5 * (seg.lo[j] + seg.hi[j]);
    double lw = std::log(seg.hi[j] - seg.lo[j]);
    for (int i = 0; i < ctx.N; ++i) {
      const int s = sigma ? (*sigma)[static_cast<std::size_t>(i)] : i;
      lw += std::log(ctx.M(ctx.pointer_parent(s, u), i));
    }
    logw[j] = lw;
    top = std::max(top, lw);
  }
  double acc = 0.0;
  for (double& v : logw) {
    acc += std::exp(v - top);
    v = acc;
  }
  const auto j = static_cast<std::size_t>(draw_index(logw, rng));
  return 0.5 * (seg.lo[j] + seg.hi[j]);
}

class SystematicOrderedConditional final : public ConditionalAncestorSampler {
 public:
  explicit SystematicOrderedConditional(Context ctx) : ctx_(std::move(ctx)) {
    Segments seg = systematic_segments(ctx_);
    mid_.resize(seg.lo.size());
    cdf_.resize(seg.lo.size());
    std::vector<double> logw(seg.lo.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < seg.lo.size(); ++j) {
      mid_[j] = 0.5 * (seg.lo[j] + seg.hi[j]);
      double lw = std::log(seg.hi[j] - seg.lo[j]);
      for (int i = 0; i < ctx_.N; ++i) lw += std::log(ctx_.M(ctx_.pointer_parent(i, mid_[j]), i));
      logw[j] = lw;
      top = std::max(top, lw);
    }
    double acc = 0.0;
    for (std::size_t j = 0; j < logw.size(); ++j) {
      acc += std::exp(logw[j] - top);
      cdf_[j] = acc;
    }
  }

  void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) override {
    const double u = mid_[static_cast<std::size_t>(draw_index(cdf_, rng))];
    for (std::size_t i = 0; i < children.size(); ++i) out[i] = ctx_.pointer_parent(children[i], u);
  }
  bool exact() const override { return true; }

 private:
  Context ctx_;
  std::vector<double> mid_;
  std::vector<double> cdf_;
};

// Gibbs sampler alternating U | sigma (exact, by segments) and sigma | U (swap moves).
class SystematicShuffledConditional final : public ConditionalAncestorSampler {
 public:
  SystematicShuffledConditional(Context ctx, Rng& rng, const ConditionalOptions& opt)
      : ctx_(std::move(ctx)), segments_(systematic_segments(ctx_)), sweeps_(opt.sweeps) {
    sigma_.resize(static_cast<std::size_t>(ctx_.N));
    std::iota(sigma_.begin(), sigma_.end(), 0);
    rng.shuffle(sigma_);
    u_ = rng.uniform();
    for (int b = 0; b < opt.burn_in_sweeps; ++b) iterate(rng);
  }

  void draw_parents(std::span<const int> children, std::span<int> out, Rng& rng) override {
    for (int b = 0; b < sweeps_; ++b) iterate(rng);
    for (std::size_t i = 0; i < children.size(); ++i) {
      out[i] = ctx_.pointer_parent(sigma_[static_cast<std::size_t>(children[i])], u_);
    }
  }
  bool exact() const override { return false; }

 private:
  void iterate(Rng& rng) {
    u_ = draw_systematic_u(ctx_, segments_, &sigma_, rng);
    std::vector<int> parent_of_stratum(static_cast<std::size_t>(ctx_.N));
    for (int s = 0; s < ctx_.N; ++s) parent_of_stratum[static_cast<std::size_t>(s)] = ctx_.pointer_parent(s, u_);
    auto lm = [&](int s, int i) { return std::log(ctx_.M(parent_of_stratum[static_cast<std::size_t>(s)], i)); };
    const auto n = static_cast<std::uint64_t>(ctx_.N);
    for (std::uint64_t t = 0; t < n; ++t) {
      const int i = static_cast<int>(rng.below(n));
      const int j = static_cast<int>(rng.below(n));
      if (i == j) continue;
      const int si = sigma_[static_cast<std::size_t>(i)];
      const int sj = sigma_[static_cast<std::size_t>(j)];
      const double delta = lm(sj, i) + lm(si, j) - lm(si, i) - lm(sj, j);
      if (delta >= 0.0 || rng.uniform() < std::exp(delta)) {
        std::swap(sigma_[static_cast<std::size_t>(i)], sigma_[static_cast<std::size_t>(j)]);
      }
    }
  }

  Context ctx_;
  Segments segments_;
  int sweeps_;
  std::vector<int> sigma_;
  double u_ = 0.0;
};

}  // namespace

std::unique_ptr<ConditionalAncestorSampler> make_conditional_sampler(
    const ModelSpec& model, const Scheme& scheme, int f, std::span<const int> x_parents,
    std::span<const int> x_children, Rng& rng, const ConditionalOptions& options) {
  Context ctx(model, f, x_parents, x_children);
  switch (scheme.kind) {
    case SchemeKind::multinomial:
      return std::make_unique<MultinomialConditional>(std::move(ctx));
    case SchemeKind::stratified:
      if (scheme.shuffle) return std::make_unique<StratifiedShuffledConditional>(std::move(ctx), rng, options);
      return std::make_unique<StratifiedOrderedConditional>(std::move(ctx));
    case SchemeKind::systematic:
      if (scheme.shuffle) return std::make_unique<SystematicShuffledConditional>(std::move(ctx), rng, options);
      return std::make_unique<SystematicOrderedConditional>(std::move(ctx));
  }
  throw InvalidArgument("unknown scheme");
}

}  // namespace smcgen
