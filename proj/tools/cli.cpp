#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "CLI11.hpp"
#include "smcgen/combinatorics.hpp"
#include "smcgen/config.hpp"
#include "smcgen/csv.hpp"
#include "smcgen/errors.hpp"
#include "smcgen/genealogy.hpp"
#include "smcgen/kingman.hpp"
#include "smcgen/lineage.hpp"
#include "smcgen/model.hpp"
#include "smcgen/oracle.hpp"
#include "smcgen/resampling.hpp"

namespace smcgen::cli {

namespace {

struct Flags {
  std::string config_path;
  std::string model;
  std::vector<std::string> params;
  std::string model_file;
  std::string scheme;
  int N = 0;
  int n = 0;
  int K = 0;
  int j = 0;
  double t_max = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<int> labels;
  std::string engine;
  std::string z_grid;
  int mc_replicates = 0;
  std::string out;
  unsigned threads = 0;
};

struct Options {
  CLI::Option* model = nullptr;
  CLI::Option* params = nullptr;
  CLI::Option* model_file = nullptr;
  CLI::Option* scheme = nullptr;
  CLI::Option* N = nullptr;
  CLI::Option* n = nullptr;
  CLI::Option* K = nullptr;
  CLI::Option* j = nullptr;
  CLI::Option* t_max = nullptr;
  CLI::Option* replicates = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* labels = nullptr;
  CLI::Option* engine = nullptr;
  CLI::Option* z_grid = nullptr;
  CLI::Option* mc_replicates = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* threads = nullptr;
};

Options add_options(CLI::App* app, Flags& f) {
  Options o;
  app->add_option("--config", f.config_path, "JSON config file; flags override its values");
  o.model = app->add_option("--model", f.model, "builtin model name");
  o.params = app->add_option("--param", f.params, "builtin model parameter key=value (repeatable)");
  o.model_file = app->add_option("--model-file", f.model_file, "JSON model definition");
  o.scheme = app->add_option("--scheme", f.scheme,
                             "multinomial, stratified, stratified-ordered, systematic, systematic-shuffled");
  o.N = app->add_option("--N", f.N, "number of particles");
  o.n = app->add_option("--n", f.n, "number of traced lineages");
  o.K = app->add_option("--K", f.K, "number of generations");
  o.j = app->add_option("--j", f.j, "reverse generation the profile starts from");
  o.t_max = app->add_option("--t-max", f.t_max, "rescaled time horizon");
  o.replicates = app->add_option("--replicates", f.replicates, "number of replicates");
  o.seed = app->add_option("--seed", f.seed, "master seed");
  o.labels = app->add_option("--labels", f.labels, "terminal particle indices (0-based)")->delimiter(',');
  o.engine = app->add_option("--engine", f.engine, "auto, full or lumped");
  o.z_grid = app->add_option("--z-grid", f.z_grid, "start:stop:step");
  o.mc_replicates = app->add_option("--mc-replicates", f.mc_replicates, "pool size of Monte Carlo profiles");
  o.out = app->add_option("--out", f.out, "output directory");
  o.threads = app->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  return o;
}

ExperimentConfig build_config(const Flags& f, const Options& o) {
  ExperimentConfig c = f.config_path.empty() ? ExperimentConfig{} : load_config_file(f.config_path);
  if (o.model_file->count()) {
    std::ifstream in(f.model_file, std::ios::binary);
    if (!in) throw ConfigError("cannot read model file " + f.model_file);
    std::ostringstream ss;
    ss << in.rdbuf();
    c.model = parse_model_reference(ss.str());
  }
  if (o.model->count()) {
    c.model = ModelReference{};
    c.model.builtin = f.model;
  }
  if (o.params->count()) {
    if (c.model.inline_model) throw ConfigError("--param only applies to builtin models");
    for (const auto& kv : f.params) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--param expects key=value, got '" + kv + "'");
      try {
        c.model.params[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("--param value is not a number: '" + kv + "'");
      }
    }
  }
  if (o.scheme->count()) c.scheme = f.scheme;
  if (o.N->count()) c.N = f.N;
  if (o.n->count()) c.n = f.n;
  if (o.K->count()) c.K = f.K;
  if (o.j->count()) c.j = f.j;
  if (o.t_max->count()) c.t_max = f.t_max;
  if (o.replicates->count()) c.replicates = f.replicates;
  if (o.seed->count()) c.seed = f.seed;
  if (o.labels->count()) c.labels = f.labels;
  if (o.engine->count()) c.engine = f.engine;
  if (o.z_grid->count()) c.z_grid = f.z_grid;
  if (o.mc_replicates->count()) c.mc_replicates = f.mc_replicates;
  if (o.out->count()) c.out_dir = f.out;
  if (o.threads->count()) c.threads = f.threads;
  if (c.out_dir.empty()) {
    const char* env = std::getenv("SMCGEN_OUT_DIR");
    c.out_dir = env && *env ? env : "out";
  }
  return c;
}

std::uint64_t require_seed(const ExperimentConfig& c) {
  if (!c.seed) throw ConfigError("--seed is required");
  return *c.seed;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

std::vector<int> terminal_labels(const ExperimentConfig& c) {
  if (!c.labels.empty()) {
    require(static_cast<int>(c.labels.size()) == c.n, "--labels must list n indices");
    return c.labels;
  }
  std::vector<int> l(static_cast<std::size_t>(c.n));
  std::iota(l.begin(), l.end(), 0);
  return l;
}

std::string metadata(const std::string& sub, const ExperimentConfig& c) {
  return metadata_line(canonical_config(sub, c), c.seed.value_or(0));
}

struct Context {
  std::string sub;
  ExperimentConfig cfg;
  ModelSpec model;
  Scheme scheme;
  std::string meta;
};

ForwardRun forward_run(const Context& x) {
  require(x.cfg.N >= 1, "--N must be positive");
  require(x.cfg.K >= 1, "--K must be positive");
  return simulate_forward(x.model, x.cfg.N, x.cfg.K, x.scheme, require_seed(x.cfg));
}

CoalescenceProfile profile_of(const Context& x, const ForwardRun& run) {
  const auto labels = terminal_labels(x.cfg);
  require(x.cfg.j >= 0 && x.cfg.j < x.cfg.K, "--j must lie in [0, K)");
  if (x.scheme.kind == SchemeKind::multinomial) {
    return lumped_coalescence_profile(x.model, run, x.cfg.n, labels, x.cfg.j, x.cfg.K);
  }
  Rng rng = Rng::stream(require_seed(x.cfg), 1);
  MonteCarloOptions mc;
  mc.replicates = x.cfg.mc_replicates;
  return estimate_profile_mc(x.model, run, x.cfg.n, labels, x.cfg.j, x.cfg.K, rng, mc);
}

int cmd_simulate(const Context& x) {
  const ForwardRun run = forward_run(x);
  write_forward_run_csv(run, x.cfg.out_dir, x.meta);
  std::cout << "simulate: model=" << x.model.name << " N=" << run.N << " K=" << run.K
            << " wrote " << x.cfg.out_dir << "/locations.csv, ancestors.csv\n";
  return ok;
}

int cmd_trace(const Context& x) {
  const ForwardRun run = forward_run(x);
  const auto labels = terminal_labels(x.cfg);
  const GenealogyTrajectory t = trace(run, labels);
  ensure_directory(x.cfg.out_dir);
  write_trajectory_csv(t, x.cfg.out_dir + "/trajectory.csv", x.meta);
  std::cout << "trace: n=" << x.cfg.n << " blocks at K=" << t.states.back().size() << " wrote "
            << x.cfg.out_dir << "/trajectory.csv\n";
  return ok;
}

int cmd_profile(const Context& x) {
  const ForwardRun run = forward_run(x);
  const CoalescenceProfile p = profile_of(x, run);
  ensure_directory(x.cfg.out_dir);
  write_profile_csv(p, x.cfg.out_dir + "/profile.csv", x.meta);
  const double total = std::accumulate(p.values.begin(), p.values.end(), 0.0);
  std::cout << "profile: " << (p.exact ? "exact" : "monte-carlo") << " generations=" << p.values.size()
            << " cumulative=" << format_double(total) << " wrote " << x.cfg.out_dir << "/profile.csv\n";
  return ok;
}

int cmd_rescale(const Context& x) {
  const ForwardRun run = forward_run(x);
  const CoalescenceProfile p = profile_of(x, run);
  const Timescale ts(p);
  std::vector<double> grid;
  for (int i = 1; 0.1 * i <= x.cfg.t_max + 1e-9; ++i) grid.push_back(0.1 * i);
  int violations = 0;
  std::vector<double> covered;
  for (double t : grid) {
    if (t > ts.total()) break;
    covered.push_back(t);
    if (!ts.sandwich_holds(t)) ++violations;
  }
  ensure_directory(x.cfg.out_dir);
  write_timescale_csv(ts, covered, x.cfg.out_dir + "/timescale.csv", x.meta);
  std::cout << "rescale: grid points=" << covered.size() << "/" << grid.size()
            << " sandwich violations=" << violations << " wrote " << x.cfg.out_dir << "/timescale.csv\n";
  if (violations > 0) return invariant_violation;
  if (covered.size() < grid.size()) {
    std::cerr << "rescale: cumulative mass " << format_double(ts.total()) << " is below t_max\n";
    return horizon_failure;
  }
  return ok;
}

int cmd_kingman(const Context& x) {
  require(x.cfg.N >= 2, "--N must be at least 2");
  ConvergenceOptions opt;
  opt.t_max = x.cfg.t_max;
  opt.replicates = x.cfg.replicates;
  opt.master_seed = require_seed(x.cfg);
  opt.engine = parse_engine(x.cfg.engine);
  opt.K = x.cfg.K;
  opt.threads = x.cfg.threads;
  opt.mc.replicates = x.cfg.mc_replicates;
  const ConvergenceReport r = convergence_experiment(x.model, x.scheme, x.cfg.N, x.cfg.n, opt);
  write_convergence_report(r, x.cfg.out_dir, x.meta);
  std::cout << "kingman-test: engine=" << r.engine << " K=" << r.K << " ks=" << format_double(r.ks_statistic)
            << " ks_p=" << format_double(r.ks_pvalue) << " chi2_p=" << format_double(r.chi2_p)
            << " multi_fraction=" << format_double(r.multi_fraction) << " horizon_failures=" << r.horizon_failures
            << " wrote " << x.cfg.out_dir << "/replicates.csv, summary.json\n";
  if (r.sandwich_violations > 0) return invariant_violation;
  if (10 * r.horizon_failures > r.replicates) return horizon_failure;
  return ok;
}

std::vector<Rational> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(parts.size() == 3, "--z-grid expects start:stop:step");
  double a = 0.0;
  double b = 0.0;
  double h = 0.0;
  try {
    a = std::stod(parts[0]);
    b = std::stod(parts[1]);
    h = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("--z-grid entries must be numbers");
  }
  require(h > 0.0 && b >= a, "--z-grid needs step > 0 and stop >= start");
  require(a >= 0.0 && b <= 1.0 / 12.0 + 1e-12, "--z-grid must stay inside [0, 1/12]");
  std::vector<Rational> z;
  for (long i = 0;; ++i) {
    const double v = a + static_cast<double>(i) * h;
    if (v > b + 1e-12) break;
    z.emplace_back(std::clamp(v, 0.0, 1.0 / 12.0));
    if (z.size() > 100000) throw ConfigError("--z-grid has too many points");
  }
  return z;
}

int cmd_counterexample(const Context& x) {
  std::vector<CounterexampleReport> rows;
  bool closed_ok = true;
  for (const auto& z : parse_grid(x.cfg.z_grid)) {
    rows.push_back(counterexample_report(z));
    closed_ok = closed_ok && rows.back().exact_agreement && rows.back().ordering_holds;
  }
  ensure_directory(x.cfg.out_dir);
  write_counterexample_csv(rows, x.cfg.out_dir + "/counterexample.csv", x.meta);
  double worst = 0.0;
  for (const auto& r : rows) worst = std::max(worst, r.max_abs_difference);
  std::cout << "counterexample: points=" << rows.size() << " closed forms " << (closed_ok ? "match" : "DIFFER")
            << " max_abs_difference=" << format_double(worst) << " wrote " << x.cfg.out_dir
            << "/counterexample.csv\n";
  return closed_ok ? ok : invariant_violation;
}

// Exact one-round merger probability and second factorial moment against
// empirical frequencies of the resampling module with random weights.
int cmd_oracle_check(const Context& x) {
  const int N = x.cfg.N == 0 ? 6 : x.cfg.N;
  require(N >= 2 && N <= 8, "oracle-check needs 2 <= N <= 8");
  require(x.cfg.n >= 2 && x.cfg.n <= std::min(4, N), "oracle-check needs 2 <= n <= min(4, N)");
  require(x.cfg.replicates >= 10, "--replicates must be at least 10");
  Rng rng = Rng::stream(require_seed(x.cfg), 0);
  std::vector<double> raw(static_cast<std::size_t>(N));
  for (auto& v : raw) v = 0.05 + rng.uniform();
  const WeightVector w = normalize(raw);
  const ExactResult merge = exact_merger_probability(w, x.scheme, x.cfg.n);
  const ExactResult moment = exact_factorial_moment(w, x.scheme, 0, 2);

  std::int64_t merges = 0;
  double m_sum = 0.0;
  double m_sq = 0.0;
  for (int r = 0; r < x.cfg.replicates; ++r) {
    const AncestorVector a = sample_ancestors(w, x.scheme, rng);
    std::vector<int> p(a.parents.begin(), a.parents.begin() + x.cfg.n);
    std::sort(p.begin(), p.end());
    if (std::adjacent_find(p.begin(), p.end()) != p.end()) ++merges;
    const double nu = std::count(a.parents.begin(), a.parents.end(), 0);
    const double f2 = nu * (nu - 1.0);
    m_sum += f2;
    m_sq += f2 * f2;
  }
  const double R = x.cfg.replicates;
  const double p_hat = merges / R;
  const double p_se = std::sqrt(std::max(merge.value * (1.0 - merge.value), 1e-300) / R);
  const double m_hat = m_sum / R;
  const double m_se = std::sqrt(std::max(m_sq / R - m_hat * m_hat, 1e-300) / R);
  const double z1 = (p_hat - merge.value) / p_se;
  const double z2 = (m_hat - moment.value) / m_se;

  ensure_directory(x.cfg.out_dir);
  CsvWriter out(x.cfg.out_dir + "/oracle_check.csv");
  out.header({"quantity", "exact", "estimate", "standard_error", "z"});
  out.row(std::string("merger_probability"), merge.value, p_hat, p_se, z1);
  out.row(std::string("factorial_moment_2"), moment.value, m_hat, m_se, z2);
  out.finish(x.meta);
  const bool pass = std::abs(z1) < 5.0 && std::abs(z2) < 5.0;
  std::cout << "oracle-check: scheme=" << to_string(x.scheme) << " merger z=" << format_double(z1)
            << " moment z=" << format_double(z2) << (pass ? " ok" : " MISMATCH") << " wrote " << x.cfg.out_dir
            << "/oracle_check.csv\n";
  return pass ? ok : invariant_violation;
}

int cmd_discrepancy(const Context& x) {
  require(x.cfg.N >= 2, "--N must be at least 2");
  const int K = x.cfg.K == 0 ? 10 : x.cfg.K;
  const DiscrepancyReport r = discrepancy_experiment(x.model, x.scheme, x.cfg.N, x.cfg.n, x.cfg.replicates, K,
                                                     require_seed(x.cfg), x.cfg.threads);
  ensure_directory(x.cfg.out_dir);
  write_discrepancy_csv(r, x.cfg.out_dir + "/discrepancy.csv", x.meta);
  std::cout << "discrepancy: z=" << format_double(r.z_score)
            << " mean_abs_deviation=" << format_double(r.mean_abs_deviation) << " wrote " << x.cfg.out_dir
            << "/discrepancy.csv\n";
  return ok;
}

int execute(const std::vector<std::string>& args) {
  CLI::App app{"Genealogies of SMC particle systems"};
  app.require_subcommand(1);
  struct Sub {
    std::string name;
    std::string description;
    int (*handler)(const Context&);
  };
  const std::vector<Sub> subs{
      {"simulate", "simulate a particle system forward", cmd_simulate},
      {"trace", "trace the genealogy of terminal particles", cmd_trace},
      {"profile", "quenched coalescence rates of the traced lineages", cmd_profile},
      {"rescale", "time rescaling of the coalescence profile", cmd_rescale},
      {"kingman-test", "compare rescaled genealogies with the Kingman coalescent", cmd_kingman},
      {"counterexample", "four-parent stratified versus multinomial example", cmd_counterexample},
      {"oracle-check", "exact one-round probabilities against simulation", cmd_oracle_check},
      {"discrepancy", "observed mergers against the family-size formula", cmd_discrepancy},
  };
  std::vector<Flags> flags(subs.size());
  std::vector<Options> options;
  std::vector<CLI::App*> apps;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    CLI::App* sub = app.add_subcommand(subs[i].name, subs[i].description);
    options.push_back(add_options(sub, flags[i]));
    apps.push_back(sub);
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!apps[i]->parsed()) continue;
    Context x;
    x.sub = subs[i].name;
    x.cfg = build_config(flags[i], options[i]);
    x.model = resolve_model(x.cfg.model);
    x.scheme = parse_scheme(x.cfg.scheme);
    require(x.cfg.n >= 1, "--n must be positive");
    x.meta = metadata(x.sub, x.cfg);
    return subs[i].handler(x);
  }
  return config_error;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  try {
    return execute(args);
  } catch (const InvariantViolation& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return invariant_violation;
  } catch (const HorizonExceeded& e) {
    std::cerr << "horizon exceeded: " << e.what() << "\n";
    return horizon_failure;
  } catch (const DegenerateSurvival& e) {
    std::cerr << "degenerate survival: " << e.what() << "\n";
    return horizon_failure;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return invariant_violation;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace smcgen::cli
