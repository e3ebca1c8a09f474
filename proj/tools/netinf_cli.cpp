// netinf: generate, simulate, infer, benchmark, replay.
//
// Exit codes: 0 ok, 1 I/O, 2 invalid arguments or data, 3 numerical failure.
// NETINF_THREADS caps the number of OpenMP threads.

#include <omp.h>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netinf/error.hpp"
#include "netinf/eval.hpp"
#include "netinf/io.hpp"
#include "netinf/netsim.hpp"
#include "netinf/topology.hpp"

using namespace netinf;
using io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitNumerical = 3;

struct GenerateArgs {
  int nodes = 15;
  int observed = 10;
  double density = 0.15;
  std::string topology = "random";
  int hidden = 5;  // ring only
  int input_node = 0;
  bool hidden_noise = false;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct SimulateArgs {
  std::string model;
  int points = 100;
  std::string snr = "none";
  std::uint64_t seed = 1;
  std::string name = "experiment";
  std::string out = ".";
};

struct InferArgs {
  std::vector<std::string> data;
  std::string method = "vi";
  int trunc = 20;
  int mh_samples = 500;
  int burn_in = 100;
  int max_iter = 50;
  double tol = 1e-3;
  std::string beta_expectation = "mh";
  bool no_inputs = false;
  std::uint64_t seed = 1;
  std::string out = ".";
};

struct BenchmarkArgs {
  std::string suite = "table1";
  std::string grid;
  int trials = 20;
  std::uint64_t seed = 1;
  std::vector<std::string> methods{"vi"};
  std::string out = ".";
};

json to_json(const GenerateArgs& a) {
  return {{"nodes", a.nodes},       {"observed", a.observed},   {"density", a.density},
          {"topology", a.topology}, {"hidden", a.hidden},       {"input_node", a.input_node},
          {"hidden_noise", a.hidden_noise}, {"seed", a.seed},   {"out", a.out}};
}
json to_json(const SimulateArgs& a) {
  return {{"model", a.model}, {"points", a.points}, {"snr", a.snr},
          {"seed", a.seed},   {"name", a.name},     {"out", a.out}};
}
json to_json(const InferArgs& a) {
  return {{"data", a.data},
          {"method", a.method},
          {"trunc", a.trunc},
          {"mh_samples", a.mh_samples},
          {"burn_in", a.burn_in},
          {"max_iter", a.max_iter},
          {"tol", a.tol},
          {"beta_expectation", a.beta_expectation},
          {"no_inputs", a.no_inputs},
          {"seed", a.seed},
          {"out", a.out}};
}
json to_json(const BenchmarkArgs& a) {
  return {{"suite", a.suite}, {"grid", a.grid},       {"trials", a.trials},
          {"seed", a.seed},   {"methods", a.methods}, {"out", a.out}};
}

template <class T>
void load(const json& args, const char* key, T& field) {
  if (args.contains(key)) field = args.at(key).get<T>();
}

void from_json(const json& j, GenerateArgs& a) {
  load(j, "nodes", a.nodes);
  load(j, "observed", a.observed);
  load(j, "density", a.density);
  load(j, "topology", a.topology);
  load(j, "hidden", a.hidden);
  load(j, "input_node", a.input_node);
  load(j, "hidden_noise", a.hidden_noise);
  load(j, "seed", a.seed);
  load(j, "out", a.out);
}
void from_json(const json& j, SimulateArgs& a) {
  load(j, "model", a.model);
  load(j, "points", a.points);
  load(j, "snr", a.snr);
  load(j, "seed", a.seed);
  load(j, "name", a.name);
  load(j, "out", a.out);
}
void from_json(const json& j, InferArgs& a) {
  load(j, "data", a.data);
  load(j, "method", a.method);
  load(j, "trunc", a.trunc);
  load(j, "mh_samples", a.mh_samples);
  load(j, "burn_in", a.burn_in);
  load(j, "max_iter", a.max_iter);
  load(j, "tol", a.tol);
  load(j, "beta_expectation", a.beta_expectation);
  load(j, "no_inputs", a.no_inputs);
  load(j, "seed", a.seed);
  load(j, "out", a.out);
}
void from_json(const json& j, BenchmarkArgs& a) {
  load(j, "suite", a.suite);
  load(j, "grid", a.grid);
  load(j, "trials", a.trials);
  load(j, "seed", a.seed);
  load(j, "methods", a.methods);
  load(j, "out", a.out);
}

void write_echo(const std::string& out, const std::string& command, const json& args) {
  io::write_json(fs::path(out) / (command + ".config.json"),
                 {{"format", "netinf-config"}, {"command", command}, {"args", args}});
}

int run_generate(const GenerateArgs& a) {
  StateSpaceModel model;
  if (a.topology == "random") {
    model = generate_random_network(a.nodes, a.observed, a.density, a.seed, a.hidden_noise);
  } else if (a.topology == "ring") {
    model = generate_ring_network(a.observed, a.hidden, a.seed, a.input_node);
  } else {
    throw ParameterError("--topology must be random or ring, got '" + a.topology + "'");
  }
  io::write_json(fs::path(a.out) / "model.json", io::model_to_json(model));
  io::write_json(fs::path(a.out) / "truth.json", io::structure_to_json(derive_dsf_structure(model)));
  write_echo(a.out, "generate", to_json(a));
  std::cout << "wrote " << (fs::path(a.out) / "model.json").string() << " ("
            << derive_dsf_structure(model).link_count() << " links)\n";
  return 0;
}

int run_simulate(const SimulateArgs& a) {
  if (a.points < 1) throw ParameterError("--points must be >= 1");
  const StateSpaceModel model = io::model_from_json(io::read_json(a.model));
  const Experiment e = simulate(model, a.points, SnrSetting::parse(a.snr), a.seed);
  const fs::path csv = fs::path(a.out) / (a.name + ".csv");
  io::write_experiment(csv, e);
  write_echo(a.out, "simulate", to_json(a));
  std::cout << "wrote " << csv.string() << " (" << a.points << " points)\n";
  return 0;
}

InferenceConfig inference_config(const InferArgs& a) {
  InferenceConfig c;
  c.method = parse_method(a.method);
  c.trunc = a.trunc;
  c.include_inputs = !a.no_inputs;
  c.vi.n_mh_samples = a.mh_samples;
  c.vi.n_burn_in = a.burn_in;
  c.vi.max_iter = a.max_iter;
  c.vi.tol = a.tol;
  c.vi.seed = a.seed;
  if (a.beta_expectation == "quadrature")
    c.vi.beta_expectation = vi::BetaExpectation::kQuadrature;
  else if (a.beta_expectation != "mh")
    throw ParameterError("--beta-expectation must be mh or quadrature");
  c.keb.max_iter = a.max_iter;
  return c;
}

int run_infer(const InferArgs& a) {
  if (a.data.empty()) throw ParameterError("--data needs at least one experiment CSV");
  const InferenceConfig cfg = inference_config(a);
  cfg.validate();
  std::vector<Experiment> experiments;
  for (const auto& path : a.data) experiments.push_back(io::read_experiment(path));
  const InferredNetwork net = infer_network(experiments, cfg);
  json doc = io::network_to_json(net);
  doc["config"] = io::inference_config_to_json(cfg);
  doc["metadata"] = {{"self_group", "the target's own lags are always included and never scored"},
                     {"keb_prune_rel", cfg.keb.prune_rel}};
  io::write_json(fs::path(a.out) / "network.json", doc);
  write_echo(a.out, "infer", to_json(a));
  if (net.unresolved() > 0) {
    json diag = json::array();
    for (const auto& n : net.nodes)
      if (!n.resolved) diag.push_back({{"target", n.target}, {"error", n.error}});
    io::write_json(fs::path(a.out) / "diagnostics.json", {{"unresolved", diag}});
    std::cerr << net.unresolved() << " node(s) failed numerically; see diagnostics.json\n";
    return kExitNumerical;
  }
  std::cout << "wrote " << (fs::path(a.out) / "network.json").string() << " ("
            << net.structure().link_count() << " links, method " << net.method << ")\n";
  return 0;
}

int run_benchmark(const BenchmarkArgs& a) {
  eval::BenchmarkConfig cfg =
      a.grid.empty() ? eval::preset(a.suite) : io::benchmark_config_from_json(io::read_json(a.grid));
  if (a.grid.empty()) {
    cfg.trials = a.trials;
    cfg.seed = a.seed;
    cfg.methods.clear();
    for (const auto& m : a.methods) cfg.methods.push_back(parse_method(m));
  }
  const eval::BenchmarkResult res = eval::run_benchmark(cfg);
  io::write_text(fs::path(a.out) / "results.csv", io::results_csv(cfg, res));
  io::write_json(fs::path(a.out) / "summary.json", io::summary_to_json(cfg, res));
  write_echo(a.out, "benchmark", to_json(a));
  for (const auto& c : res.cells)
    std::cout << eval::to_string(c.condition.topology) << " snr=" << c.condition.snr.to_string()
              << " N=" << c.condition.n_points << " " << method_tag(c.condition.method)
              << ": TPR " << c.mean_tpr << " PREC " << c.mean_prec << " fitness(median) "
              << c.median_fitness << " [" << c.trials - c.failures << "/" << c.trials << "]\n";
  for (const auto& c : res.cells)
    if (c.trials > 0 && c.failures == c.trials) return kExitNumerical;
  return 0;
}

int run_replay(const std::string& config_path, const std::string& out_override) {
  const json echo = io::read_json(config_path);
  if (!echo.is_object() || echo.value("format", std::string()) != "netinf-config")
    throw IoError("'" + config_path + "' is not a config echo");
  json args = echo.at("args");
  if (!out_override.empty()) args["out"] = out_override;
  const std::string command = echo.at("command").get<std::string>();
  try {
    if (command == "generate") return run_generate(args.get<GenerateArgs>());
    if (command == "simulate") return run_simulate(args.get<SimulateArgs>());
    if (command == "infer") return run_infer(args.get<InferArgs>());
    if (command == "benchmark") return run_benchmark(args.get<BenchmarkArgs>());
  } catch (const json::exception& e) {
    throw IoError("bad config echo: " + std::string(e.what()));
  }
  throw IoError("unknown command '" + command + "' in config echo");
}

void apply_thread_cap() {
  if (const char* env = std::getenv("NETINF_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) omp_set_num_threads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"Sparse network inference from time series (variational Bayes, TC kernels)"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a random or ring network and its true topology");
  g->add_option("--nodes", gen.nodes, "Total state count (random)")->capture_default_str();
  g->add_option("--observed", gen.observed, "Observed state count")->capture_default_str();
  g->add_option("--density", gen.density, "Fraction of nonzero entries of A (random)")
      ->capture_default_str();
  g->add_option("--topology", gen.topology, "random or ring")->capture_default_str();
  g->add_option("--hidden", gen.hidden, "Hidden nodes spliced into the ring")->capture_default_str();
  g->add_option("--input-node", gen.input_node, "Node receiving the ring's input")
      ->capture_default_str();
  g->add_flag("--hidden-noise", gen.hidden_noise, "Random networks: process noise on hidden states too");
  g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->capture_default_str();

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate one experiment from a model file");
  s->add_option("--model", sim.model, "Model JSON")->required();
  s->add_option("--points", sim.points, "Number of samples N")->capture_default_str();
  s->add_option("--snr", sim.snr, "SNR in dB, 'none' (no noise) or 'pure-noise' (no input)")
      ->capture_default_str();
  s->add_option("--seed", sim.seed, "RNG seed")->capture_default_str();
  s->add_option("--name", sim.name, "Base name of the CSV and its sidecar")->capture_default_str();
  s->add_option("--out", sim.out, "Output directory")->capture_default_str();

  InferArgs inf;
  auto* i = app.add_subcommand("infer", "Infer the network from one or more experiments");
  i->add_option("--data", inf.data, "Experiment CSV file(s)")->required();
  i->add_option("--method", inf.method, "vi or keb")->capture_default_str();
  i->add_option("--trunc", inf.trunc, "Impulse-response truncation length T")->capture_default_str();
  i->add_option("--mh-samples", inf.mh_samples, "Retained MH samples per chain")
      ->capture_default_str();
  i->add_option("--burn-in", inf.burn_in, "Discarded MH samples per chain")->capture_default_str();
  i->add_option("--max-iter", inf.max_iter, "Iteration cap per structure")->capture_default_str();
  i->add_option("--tol", inf.tol, "Relative lower-bound change for convergence")
      ->capture_default_str();
  i->add_option("--beta-expectation", inf.beta_expectation, "mh or quadrature")
      ->capture_default_str();
  i->add_flag("--no-inputs", inf.no_inputs, "Do not use input channels as predictors");
  i->add_option("--seed", inf.seed, "RNG seed")->capture_default_str();
  i->add_option("--out", inf.out, "Output directory")->capture_default_str();

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Monte Carlo benchmark over a condition grid");
  b->add_option("--suite", bench.suite, "table1, table2, table3 or table4")->capture_default_str();
  b->add_option("--grid", bench.grid, "Custom grid JSON (overrides --suite/--trials/--seed)");
  b->add_option("--trials", bench.trials, "Trials per cell")->capture_default_str();
  b->add_option("--seed", bench.seed, "Master seed")->capture_default_str();
  b->add_option("--methods", bench.methods, "vi and/or keb")->capture_default_str();
  b->add_option("--out", bench.out, "Output directory")->capture_default_str();

  std::string replay_config, replay_out;
  auto* r = app.add_subcommand("replay", "Re-run a command from its *.config.json echo");
  r->add_option("--config", replay_config, "Config echo file")->required();
  r->add_option("--out", replay_out, "Output directory (default: the echoed one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*g) return run_generate(gen);
    if (*s) return run_simulate(sim);
    if (*i) return run_infer(inf);
    if (*b) return run_benchmark(bench);
    if (*r) return run_replay(replay_config, replay_out);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
