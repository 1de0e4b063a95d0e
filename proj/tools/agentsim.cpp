// Command-line front end: run mobile-agent algorithms on port-numbered
// graphs directly or through the oblivious one-bit simulator, verify the
// simulation against the direct run, fuzz random instances, measure the
// per-round overhead, and render graphs (with the surviving cycle of a
// simulator round highlighted) as DOT.
//
// Machine-readable results go to stdout as JSON, one object per line;
// human-readable progress and summaries go to stderr. Exit codes:
//   0  success
//   1  usage, I/O, or file-format problems
//   2  model preconditions violated (bridged graph, transition out of
//      range, workload/graph degree mismatch, infeasible generator)
//   3  verification failed (divergence, phase contract, overhead bound)

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "agentsim/agentsim.hpp"

namespace {

using nlohmann::json;
using namespace agentsim;

int exit_code_for(Errc c) {
  switch (c) {
    case Errc::io_error:
    case Errc::parse_error:
    case Errc::version_mismatch:
    case Errc::bad_graph_file:
    case Errc::bad_argument:
      return 1;
    case Errc::self_loop:
    case Errc::duplicate_port:
    case Errc::asymmetric_edge:
    case Errc::out_of_range_port:
    case Errc::not_a_neighbor:
    case Errc::infeasible:
    case Errc::invalid_configuration:
    case Errc::phi_range:
    case Errc::undecodable_storage:
    case Errc::unreachable_state:
    case Errc::empty_legal_subsequence:
    case Errc::boundary_not_found:
    case Errc::table_lookup:
      return 2;
  }
  return 1;
}

std::uint64_t env_seed_or(std::uint64_t fallback) {
  const char* env = std::getenv("AGENTSIM_SEED");
  if (!env || !*env) return fallback;
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    fail(Errc::bad_argument,
         std::string("AGENTSIM_SEED is not a number: '") + env + "'");
  }
}

SimMutation mutation_from_name(const std::string& name) {
  if (name.empty() || name == "none") return SimMutation::none;
  if (name == "dfs-skip-parent") return SimMutation::dfs_skip_parent;
  if (name == "cleanup-drop-guard") return SimMutation::cleanup_drop_guard;
  if (name == "transmem-invert") return SimMutation::transmem_invert;
  fail(Errc::bad_argument, "unknown mutation '" + name + "'");
}

/// Loads the graph and, when the simulator will run on it, insists it has
/// no bridges — naming one if it does.
PortGraph load_checked_graph(const std::string& path, bool needs_two_edge_connected) {
  PortGraph g = load_graph(path);
  if (needs_two_edge_connected && !is_two_edge_connected(g)) {
    if (!oracle_connected(g))
      fail(Errc::infeasible, "graph " + path + " is not connected");
    auto bridges = brute_bridges(g);
    std::string which =
        bridges.empty() ? "" : " (bridge between nodes " +
                                   std::to_string(bridges.front().first) + " and " +
                                   std::to_string(bridges.front().second) + ")";
    fail(Errc::infeasible,
         "graph " + path + " is not 2-edge-connected" + which);
  }
  return g;
}

long count_legal(const Trace& t, const FlagsDecoder& flags) {
  long k = 0;
  for (const auto& e : t.entries)
    if (is_legal(e.config, flags)) ++k;
  return k;
}

struct RunArgs {
  std::string graph, algo, engine = "direct", trace_out, mutate;
  int start = 0;
  long rounds = 100;
};

int cmd_run(const RunArgs& a) {
  const bool simulate = a.engine == "simulator";
  PortGraph g = load_checked_graph(a.graph, simulate);
  OneBitAlgorithm algo = algo_from_spec(a.algo, g);
  if (a.start < 0 || a.start >= g.node_count())
    fail(Errc::bad_argument, "start node " + std::to_string(a.start) + " out of range");
  algo.init_location = a.start;

  json rec{{"cmd", "run"},     {"graph", a.graph}, {"n", g.node_count()},
           {"edges", g.edge_count()}, {"algo", algo.name}, {"engine", a.engine},
           {"start", a.start}};
  Trace t;
  if (simulate) {
    t = run_simulator(g, algo, a.rounds, mutation_from_name(a.mutate));
    SimStorageCodec codec(algo.storage_width, g.max_degree());
    rec["sim_rounds"] = count_legal(t, codec.flags_decoder()) - 1;
    rec["width"] = codec.width();
    rec["lambda_star"] = codec.lambda_star();
    rec["port_bits"] = codec.port_bits();
  } else {
    if (!a.mutate.empty() && a.mutate != "none")
      fail(Errc::bad_argument, "--mutate only applies to the simulator engine");
    t = execute(g, algo, a.rounds);
    t.engine = "oracle";
  }
  rec["rounds"] = t.rounds;
  rec["terminated"] = t.terminated;
  rec["trace_entries"] = t.entries.size();
  if (!a.trace_out.empty()) {
    save_trace(a.trace_out, t);
    rec["trace_file"] = a.trace_out;
  }
  std::cout << rec.dump() << "\n";
  std::cerr << "run: " << algo.name << " on " << a.graph << " (" << a.engine
            << "), " << t.rounds << " rounds"
            << (t.terminated ? ", terminated" : "") << "\n";
  return 0;
}

struct VerifyArgs {
  std::string graph, algo, trace_out, mutate;
  int start = 0;
  long rounds = 100;
  bool no_phase_check = false;
  bool no_bound_check = false;
};

int cmd_verify(const VerifyArgs& a) {
  PortGraph g = load_checked_graph(a.graph, true);
  OneBitAlgorithm algo = algo_from_spec(a.algo, g);
  VerifyOptions opts;
  opts.sim_rounds = a.rounds;
  opts.mutation = mutation_from_name(a.mutate);
  opts.check_phases = !a.no_phase_check;
  opts.check_bound = !a.no_bound_check;
  VerifyOutcome vo = verify_run(g, algo, a.start, opts);

  double mean_overhead = 0.0;
  if (vo.verdict.t_sequence.size() > 1)
    mean_overhead = static_cast<double>(vo.verdict.t_sequence.back() -
                                        vo.verdict.t_sequence.front()) /
                    static_cast<double>(vo.verdict.t_sequence.size() - 1);

  SimStorageCodec codec(algo.storage_width, g.max_degree());
  json rec{{"cmd", "verify"},
           {"graph", a.graph},
           {"algo", algo.name},
           {"start", a.start},
           {"requested_rounds", a.rounds},
           {"rounds_compared", vo.rounds_compared},
           {"terminated", vo.terminated},
           {"ok", vo.ok},
           {"sim_ok", vo.sim_ok},
           {"phases_ok", vo.phases_ok},
           {"bound_ok", vo.bound_ok},
           {"max_overhead", vo.max_overhead},
           {"mean_overhead", mean_overhead},
           {"bound", vo.bound},
           {"width", codec.width()},
           {"lambda_star", codec.lambda_star()},
           {"port_bits", codec.port_bits()}};
  if (!vo.ok) {
    rec["failure"] = vo.failure_reason();
    if (vo.verdict.first_divergence)
      rec["divergence_round"] = vo.verdict.first_divergence->sim_round;
  }
  if (!a.trace_out.empty()) {
    save_trace(a.trace_out, vo.sim_trace);
    rec["trace_file"] = a.trace_out;
  }
  std::cout << rec.dump() << "\n";

  std::cerr << "verify: " << algo.name << " on " << a.graph << " from node "
            << a.start << ": " << (vo.ok ? "OK" : "FAILED") << "\n";
  std::cerr << "  simulated rounds compared: " << vo.rounds_compared;
  if (vo.terminated)
    std::cerr << " (terminated at simulated round " << vo.rounds_compared << ")";
  std::cerr << "\n";
  std::cerr << "  overhead per simulated round: max " << vo.max_overhead
            << ", mean " << mean_overhead << ", bound " << vo.bound << "\n";
  if (!vo.ok) std::cerr << "  failure: " << vo.failure_reason() << "\n";
  return vo.ok ? 0 : 3;
}

struct FuzzArgs {
  long trials = 100;
  std::uint64_t seed_start = 1;
  long rounds = 30;
  int workers = 1;
  int min_nodes = 3;
  int max_nodes = 20;
};

int cmd_fuzz(const FuzzArgs& a) {
  FuzzOptions o;
  o.trials = a.trials;
  o.seed_start = env_seed_or(a.seed_start);
  o.sim_rounds = a.rounds;
  o.workers = a.workers;
  o.min_nodes = a.min_nodes;
  o.max_nodes = a.max_nodes;

  FuzzSummary s = run_fuzz(o, [](const FuzzResult& r) {
    if (r.ok) return;
    json rec{{"cmd", "fuzz"},
             {"seed", r.trial.seed},
             {"n", r.trial.n},
             {"extra_ears", r.trial.extra_ears},
             {"lambda_star", r.trial.lambda_star},
             {"start", r.trial.start},
             {"ok", false},
             {"failure", r.failure}};
    std::cout << rec.dump() << "\n";
    std::cerr << "fuzz seed " << r.trial.seed << " FAILED: " << r.failure << "\n";
  });

  json rec{{"cmd", "fuzz"},        {"summary", true},
           {"trials", s.trials},   {"passed", s.passed},
           {"failed", s.failed},   {"terminated_runs", s.terminated_runs},
           {"workers", a.workers}, {"seed_start", o.seed_start}};
  std::cout << rec.dump() << "\n";
  std::cerr << "fuzz: " << s.passed << "/" << s.trials << " passed, "
            << s.terminated_runs << " terminated, seeds " << o.seed_start << ".."
            << (o.seed_start + static_cast<std::uint64_t>(s.trials) - 1) << "\n";
  return s.failed == 0 ? 0 : 3;
}

struct BenchArgs {
  std::string graph, algo;
  int start = 0;
  long rounds = 100;
  bool no_bound_check = false;
};

int cmd_bench(const BenchArgs& a) {
  PortGraph g = load_checked_graph(a.graph, true);
  OneBitAlgorithm algo = algo_from_spec(a.algo, g);
  BenchResult b = bench_run(g, algo, a.start, a.rounds);

  json phases = json::object();
  for (const auto& [phase, count] : b.phase_rounds)
    phases[phase_name(phase)] = count;
  json rec{{"cmd", "bench"},
           {"graph", a.graph},
           {"algo", algo.name},
           {"start", a.start},
           {"sim_rounds", b.sim_rounds_completed},
           {"total_rounds", b.total_rounds},
           {"terminated", b.terminated},
           {"phase_rounds", phases},
           {"max_overhead", b.max_overhead},
           {"mean_overhead", b.mean_overhead},
           {"bound", b.bound},
           {"width", b.width},
           {"lambda_star", b.lambda_star},
           {"port_bits", b.port_bits}};
  std::cout << rec.dump() << "\n";

  std::cerr << "bench: " << b.sim_rounds_completed << " simulated rounds in "
            << b.total_rounds << " simulator rounds; overhead max "
            << b.max_overhead << ", mean " << b.mean_overhead << ", bound "
            << b.bound << "; storage " << b.width << " bits (payload "
            << b.lambda_star << ", ports " << b.port_bits << ")\n";
  if (!a.no_bound_check && b.max_overhead > b.bound) {
    std::cerr << "bench: overhead bound exceeded\n";
    return 3;
  }
  return 0;
}

struct DotArgs {
  std::string graph, trace, out;
  long round = -1;
};

int cmd_dot(const DotArgs& a) {
  PortGraph g = load_graph(a.graph);
  std::vector<std::pair<int, int>> highlight;
  if (!a.trace.empty()) {
    if (a.round < 0)
      fail(Errc::bad_argument, "--round is required together with --trace");
    Trace t = load_trace(a.trace);
    if (t.engine != "simulator")
      fail(Errc::bad_argument, "trace " + a.trace + " is not a simulator trace");
    if (t.n != g.node_count())
      fail(Errc::bad_argument, "trace has " + std::to_string(t.n) +
                                   " nodes, graph has " +
                                   std::to_string(g.node_count()));
    SimStorageCodec codec(t.lambda_star, g.max_degree());
    if (codec.width() != t.storage_width || codec.port_bits() != t.port_bits)
      fail(Errc::bad_argument, "trace storage layout does not match this graph");
    const Configuration* cfg = nullptr;
    for (const auto& e : t.entries)
      if (e.round == a.round) cfg = &e.config;
    if (!cfg)
      fail(Errc::bad_argument, "trace has no entry for round " +
                                   std::to_string(a.round));
    std::set<std::pair<int, int>> edges;
    for (int u = 0; u < g.node_count(); ++u) {
      SimNodeStorage st = codec.decode(cfg->storages[u]);
      if (st.sim != 1 || st.cld >= g.degree(u)) continue;
      int w = g.port(u, st.cld);
      edges.insert({std::min(u, w), std::max(u, w)});
    }
    highlight.assign(edges.begin(), edges.end());
  }
  std::string dot = to_dot(g, highlight);
  if (a.out.empty()) {
    std::cout << dot;
  } else {
    std::ofstream f(a.out);
    if (!f) fail(Errc::io_error, "cannot write " + a.out);
    f << dot;
  }
  std::cerr << "dot: " << g.node_count() << " nodes, " << g.edge_count()
            << " edges, " << highlight.size() << " highlighted\n";
  return 0;
}

struct GenArgs {
  std::string family = "random", out;
  int n = 8;
  int extra = 0;
  std::uint64_t seed = 1;
};

int cmd_gen(const GenArgs& a) {
  std::uint64_t seed = env_seed_or(a.seed);
  PortGraph g = [&] {
    if (a.family == "cycle")
      return generate_cycle(a.n, CycleScheme::oriented, seed);
    if (a.family == "scrambled")
      return generate_cycle(a.n, CycleScheme::scrambled, seed);
    if (a.family == "complete") return generate_complete(a.n);
    if (a.family == "petersen") return generate_petersen();
    if (a.family == "random") return generate_random_2ec(a.n, a.extra, seed);
    fail(Errc::bad_argument, "unknown graph family '" + a.family + "'");
  }();
  if (a.out.empty()) {
    write_graph(std::cout, g);
  } else {
    save_graph(a.out, g);
  }
  std::cerr << "gen: " << a.family << " graph, " << g.node_count() << " nodes, "
            << g.edge_count() << " edges"
            << (a.out.empty() ? "" : ", written to " + a.out) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Mobile agents on port-numbered graphs: direct execution, an oblivious "
      "one-bit simulator, and its verification toolkit"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute a workload and optionally save the trace");
  run->add_option("--graph", run_args.graph, "Graph file")->required();
  run->add_option("--algo", run_args.algo,
                  "Workload: flipflop | explorer | random:<seed>[:<width>[:<maxdeg>]] | table file")
      ->required();
  run->add_option("--start", run_args.start, "Start node (default 0)");
  run->add_option("--engine", run_args.engine, "direct | simulator (default direct)")
      ->check(CLI::IsMember({"direct", "simulator"}));
  run->add_option("--rounds", run_args.rounds,
                  "Rounds to run; for the simulator engine, simulated rounds (default 100)");
  run->add_option("--trace-out", run_args.trace_out, "Write the trace to this file");
  run->add_option("--mutate", run_args.mutate,
                  "Deliberate simulator defect: none | dfs-skip-parent | "
                  "cleanup-drop-guard | transmem-invert");

  VerifyArgs verify_args;
  auto* verify = app.add_subcommand(
      "verify", "Run the simulator and the direct execution, compare round for round");
  verify->add_option("--graph", verify_args.graph, "Graph file")->required();
  verify->add_option("--algo", verify_args.algo, "Workload (see run)")->required();
  verify->add_option("--start", verify_args.start, "Start node (default 0)");
  verify->add_option("--rounds", verify_args.rounds, "Simulated rounds (default 100)");
  verify->add_option("--trace-out", verify_args.trace_out,
                     "Write the simulator trace to this file");
  verify->add_flag("--no-phase-check", verify_args.no_phase_check,
                   "Skip the per-phase contract checks");
  verify->add_flag("--no-bound-check", verify_args.no_bound_check,
                   "Skip the overhead bound check");
  verify->add_option("--mutate", verify_args.mutate,
                     "Deliberate simulator defect (see run)");

  FuzzArgs fuzz_args;
  auto* fuzz = app.add_subcommand(
      "fuzz", "Verify random workloads on random bridgeless graphs");
  fuzz->add_option("--seeds", fuzz_args.trials, "Number of seeded trials (default 100)");
  fuzz->add_option("--seed-start", fuzz_args.seed_start,
                   "First seed (default 1; AGENTSIM_SEED overrides)");
  fuzz->add_option("--rounds", fuzz_args.rounds, "Simulated rounds per trial (default 30)");
  fuzz->add_option("--workers", fuzz_args.workers, "Worker threads (default 1)");
  fuzz->add_option("--min-nodes", fuzz_args.min_nodes, "Smallest instance (default 3)");
  fuzz->add_option("--max-nodes", fuzz_args.max_nodes, "Largest instance (default 20)");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand(
      "bench", "Measure simulator overhead per simulated round, phase by phase");
  bench->add_option("--graph", bench_args.graph, "Graph file")->required();
  bench->add_option("--algo", bench_args.algo, "Workload (see run)")->required();
  bench->add_option("--start", bench_args.start, "Start node (default 0)");
  bench->add_option("--rounds", bench_args.rounds, "Simulated rounds (default 100)");
  bench->add_flag("--no-bound-check", bench_args.no_bound_check,
                  "Report the overhead but do not fail on it");

  DotArgs dot_args;
  auto* dot = app.add_subcommand(
      "dot", "Render a graph as DOT; with --trace/--round, highlight the "
             "surviving cycle of that simulator round");
  dot->add_option("--graph", dot_args.graph, "Graph file")->required();
  dot->add_option("--trace", dot_args.trace, "Simulator trace file");
  dot->add_option("--round", dot_args.round, "Trace round to read the cycle from");
  dot->add_option("--out", dot_args.out, "Output file (default stdout)");

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "Generate a graph file");
  gen->add_option("--family", gen_args.family,
                  "cycle | scrambled | complete | petersen | random (default random)");
  gen->add_option("--n", gen_args.n, "Node count (default 8)");
  gen->add_option("--extra", gen_args.extra, "Extra ears for the random family");
  gen->add_option("--seed", gen_args.seed, "Seed (default 1; AGENTSIM_SEED overrides)");
  gen->add_option("--out", gen_args.out, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*verify) return cmd_verify(verify_args);
    if (*fuzz) return cmd_fuzz(fuzz_args);
    if (*bench) return cmd_bench(bench_args);
    if (*dot) return cmd_dot(dot_args);
    if (*gen) return cmd_gen(gen_args);
  } catch (const agentsim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
