#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "agentsim/agent_core.hpp"
#include "agentsim/algolib.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/oracle.hpp"
#include "agentsim/port_graph.hpp"
#include "agentsim/rng.hpp"
#include "agentsim/simulator.hpp"

namespace agentsim {

struct VerifyOptions {
  long sim_rounds = 100;
  SimMutation mutation = SimMutation::none;
  bool check_phases = true;
  bool check_bound = true;
  long round_cap = -1;  // forwarded to run_simulator; -1 = default cap
};

/// Everything one verification run establishes: whether the simulator run
/// projects onto the direct run round for round (sim_ok), whether every
/// phase left the state it is supposed to (phases_ok), and whether the
/// per-round move overhead stayed within the bound (bound_ok).
struct VerifyOutcome {
  bool ok = false;
  bool sim_ok = false;
  Verdict verdict;
  bool phases_ok = true;
  PhaseReport phase_report;
  bool bound_ok = true;
  long max_overhead = 0;
  long bound = 0;
  long rounds_compared = 0;  // simulated rounds completed and compared
  bool terminated = false;   // the simulated algorithm halted during the run
  std::string error;         // text of any checker exception
  Trace sim_trace;
  Trace oracle_trace;

  /// First failure in human terms; empty string when ok.
  std::string failure_reason() const {
    if (ok) return "";
    if (!error.empty()) return error;
    if (!sim_ok) {
      if (verdict.first_divergence)
        return "divergence at simulated round " +
               std::to_string(verdict.first_divergence->sim_round) + ": " +
               verdict.first_divergence->reason;
      return "simulation check failed";
    }
    if (!phases_ok) {
      if (!phase_report.first_failure.empty())
        return "phase contract failed: " + phase_report.first_failure;
      return "phase contract failed";
    }
    if (!bound_ok)
      return "overhead " + std::to_string(max_overhead) +
             " exceeds the bound " + std::to_string(bound);
    return "verification failed";
  }
};

/// Runs the simulated algorithm directly and through the oblivious
/// simulator from the same start node, then compares the two and checks
/// the per-phase contracts and the overhead bound on the simulator trace.
inline VerifyOutcome verify_run(const PortGraph& g, const OneBitAlgorithm& a_star,
                                int start, const VerifyOptions& opts = {}) {
  if (start < 0 || start >= g.node_count())
    fail(Errc::bad_argument, "start node " + std::to_string(start) + " out of range");
  OneBitAlgorithm placed = a_star;
  placed.init_location = start;

  VerifyOutcome o;
  o.bound = overhead_bound(g);
  o.oracle_trace = execute(g, placed, opts.sim_rounds);
  o.oracle_trace.engine = "oracle";

  SimStorageCodec codec(placed.storage_width, g.max_degree());
  // The direct run above is the reference: its errors are the caller's
  // problem and propagate. Once it succeeded, anything the simulator run
  // throws (a planted mutation driving the agent off a port, say) is a
  // verification failure, not a usage error.
  try {
    o.sim_trace = run_simulator(g, placed, opts.sim_rounds, opts.mutation,
                                false, opts.round_cap);
    o.verdict = verify_simulation(o.sim_trace, o.oracle_trace, codec.gamma(),
                                  codec.flags_decoder());
    o.sim_ok = o.verdict.ok;
  } catch (const Error& e) {
    o.sim_ok = false;
    o.error = e.what();
  }
  o.terminated = o.oracle_trace.terminated || o.sim_trace.terminated;

  const long J = static_cast<long>(o.verdict.t_sequence.size()) - 1;
  const long K = static_cast<long>(o.oracle_trace.entries.size()) - 1;
  o.rounds_compared = std::max(0L, std::min(J, K));

  // A run that neither halted nor completed the requested simulated rounds
  // got stuck: the round cap expired before enough legal configurations
  // appeared. That is a failure even if the prefix matched.
  if (o.sim_ok && !o.terminated && o.rounds_compared < opts.sim_rounds) {
    o.sim_ok = false;
    o.verdict.ok = false;
    o.verdict.first_divergence =
        Divergence{std::max(0L, J),
                   "only " + std::to_string(std::max(0L, J)) +
                       " simulated rounds completed within the round cap"};
  }

  if (opts.check_phases) {
    try {
      o.phase_report =
          check_phase_resultants(g, o.sim_trace, codec, placed.phi);
      o.phases_ok = o.phase_report.all_pass;
    } catch (const Error& e) {
      o.phases_ok = false;
      if (o.error.empty()) o.error = e.what();
    }
  }

  if (opts.check_bound) {
    for (std::size_t i = 1; i < o.verdict.t_sequence.size(); ++i)
      o.max_overhead = std::max(
          o.max_overhead, o.verdict.t_sequence[i] - o.verdict.t_sequence[i - 1]);
    o.bound_ok = o.max_overhead <= o.bound;
  }

  o.ok = o.sim_ok && (!opts.check_phases || o.phases_ok) &&
         (!opts.check_bound || o.bound_ok);
  return o;
}

// --- Fuzzing --------------------------------------------------------------

struct FuzzOptions {
  std::uint64_t seed_start = 1;
  long trials = 100;
  long sim_rounds = 30;
  int workers = 1;
  int min_nodes = 3;
  int max_nodes = 20;
};

/// Instance parameters derived deterministically from one seed; the same
/// seed always produces the same graph, workload and start node, no matter
/// which worker picks it up.
struct FuzzTrial {
  std::uint64_t seed = 0;
  int n = 0;
  int extra_ears = 0;
  int lambda_star = 0;
  int start = 0;
  std::uint64_t graph_seed = 0;
  std::uint64_t table_seed = 0;

  friend bool operator==(const FuzzTrial& a, const FuzzTrial& b) {
    return a.seed == b.seed && a.n == b.n && a.extra_ears == b.extra_ears &&
           a.lambda_star == b.lambda_star && a.start == b.start &&
           a.graph_seed == b.graph_seed && a.table_seed == b.table_seed;
  }
};

inline FuzzTrial fuzz_trial_spec(std::uint64_t seed, const FuzzOptions& o) {
  if (o.min_nodes < 3 || o.max_nodes < o.min_nodes)
    fail(Errc::bad_argument, "fuzz node range must satisfy 3 <= min <= max");
  Rng rng(seed);
  FuzzTrial t;
  t.seed = seed;
  t.n = o.min_nodes + rng.below_int(o.max_nodes - o.min_nodes + 1);
  t.extra_ears = t.n < 5 ? 0 : rng.below_int(4);
  t.lambda_star = 1 + rng.below_int(3);
  t.start = rng.below_int(t.n);
  t.graph_seed = rng.next();
  t.table_seed = rng.next();
  return t;
}

struct FuzzResult {
  FuzzTrial trial;
  bool ok = false;
  bool terminated = false;
  long rounds_compared = 0;
  long max_overhead = 0;
  long bound = 0;
  std::string failure;

  friend bool operator==(const FuzzResult& a, const FuzzResult& b) {
    return a.trial == b.trial && a.ok == b.ok && a.terminated == b.terminated &&
           a.rounds_compared == b.rounds_compared &&
           a.max_overhead == b.max_overhead && a.bound == b.bound &&
           a.failure == b.failure;
  }
};

struct FuzzSummary {
  long trials = 0;
  long passed = 0;
  long failed = 0;
  long terminated_runs = 0;
  std::vector<FuzzResult> results;  // ordered by seed

  friend bool operator==(const FuzzSummary& a, const FuzzSummary& b) {
    return a.trials == b.trials && a.passed == b.passed && a.failed == b.failed &&
           a.terminated_runs == b.terminated_runs && a.results == b.results;
  }
};

inline FuzzResult run_fuzz_trial(std::uint64_t seed, const FuzzOptions& o) {
  FuzzResult r;
  r.trial = fuzz_trial_spec(seed, o);
  try {
    PortGraph g =
        generate_random_2ec(r.trial.n, r.trial.extra_ears, r.trial.graph_seed);
    OneBitAlgorithm a =
        random_table(r.trial.table_seed, r.trial.lambda_star, g.max_degree());
    VerifyOptions vo;
    vo.sim_rounds = o.sim_rounds;
    VerifyOutcome out = verify_run(g, a, r.trial.start, vo);
    r.ok = out.ok;
    r.terminated = out.terminated;
    r.rounds_compared = out.rounds_compared;
    r.max_overhead = out.max_overhead;
    r.bound = out.bound;
    if (!out.ok) r.failure = out.failure_reason();
  } catch (const Error& e) {
    r.ok = false;
    r.failure = e.what();
  }
  return r;
}

/// Runs `trials` seeded trials, split over `workers` threads. Each slot of
/// the result vector is owned by exactly one trial, so the outcome is
/// byte-identical for any worker count. The optional callback fires in seed
/// order after all workers join.
inline FuzzSummary run_fuzz(const FuzzOptions& o,
                            const std::function<void(const FuzzResult&)>& on_result =
                                nullptr) {
  if (o.trials < 0) fail(Errc::bad_argument, "negative fuzz trial count");
  std::vector<FuzzResult> results(static_cast<std::size_t>(o.trials));
  std::atomic<long> next{0};
  auto work = [&]() {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= o.trials) break;
      results[static_cast<std::size_t>(i)] =
          run_fuzz_trial(o.seed_start + static_cast<std::uint64_t>(i), o);
    }
  };
  const int workers = std::max(1, o.workers);
  if (workers == 1 || o.trials <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  FuzzSummary s;
  s.trials = o.trials;
  for (const auto& r : results) {
    if (r.ok)
      ++s.passed;
    else
      ++s.failed;
    if (r.terminated) ++s.terminated_runs;
    if (on_result) on_result(r);
  }
  s.results = std::move(results);
  return s;
}

// --- Benchmarking ----------------------------------------------------------

struct BenchResult {
  long sim_rounds_completed = 0;
  bool terminated = false;
  long total_rounds = 0;
  long bound = 0;
  long max_overhead = 0;
  double mean_overhead = 0.0;
  std::map<Phase, long> phase_rounds;
  int width = 0;
  int lambda_star = 0;
  int port_bits = 0;
};

/// Measures how many simulator rounds each simulated round costs and where
/// they go, phase by phase.
inline BenchResult bench_run(const PortGraph& g, const OneBitAlgorithm& a_star,
                             int start, long sim_rounds) {
  if (start < 0 || start >= g.node_count())
    fail(Errc::bad_argument, "start node " + std::to_string(start) + " out of range");
  OneBitAlgorithm placed = a_star;
  placed.init_location = start;
  Trace sim = run_simulator(g, placed, sim_rounds);
  SimStorageCodec codec(placed.storage_width, g.max_degree());
  FlagsDecoder flags = codec.flags_decoder();

  BenchResult b;
  b.bound = overhead_bound(g);
  b.total_rounds = sim.rounds;
  b.terminated = sim.terminated;
  b.width = codec.width();
  b.lambda_star = codec.lambda_star();
  b.port_bits = codec.port_bits();

  std::vector<long> t_seq;
  for (const auto& e : sim.entries) {
    if (is_legal(e.config, flags)) t_seq.push_back(e.round);
    if (e.out_port != kNotMoved) ++b.phase_rounds[e.phase];
  }
  b.sim_rounds_completed = static_cast<long>(t_seq.size()) - 1;
  long total_gap = 0;
  for (std::size_t i = 1; i < t_seq.size(); ++i) {
    long gap = t_seq[i] - t_seq[i - 1];
    b.max_overhead = std::max(b.max_overhead, gap);
    total_gap += gap;
  }
  if (t_seq.size() > 1)
    b.mean_overhead = static_cast<double>(total_gap) /
                      static_cast<double>(t_seq.size() - 1);
  return b;
}

// --- Workload selection -----------------------------------------------------

/// Parses a workload name: "flipflop", "explorer",
/// "random:<seed>[:<payload_width>[:<max_degree>]]", or a path to a saved
/// table file. The graph supplies default degree limits.
inline OneBitAlgorithm algo_from_spec(const std::string& spec, const PortGraph& g) {
  if (spec == "flipflop") return flip_flop_messenger();
  if (spec == "explorer") return one_bit_explorer(g.max_degree());
  if (spec.rfind("random:", 0) == 0) {
    std::vector<std::string> parts;
    std::string rest = spec.substr(7);
    std::size_t pos = 0;
    while (true) {
      std::size_t colon = rest.find(':', pos);
      parts.push_back(rest.substr(pos, colon - pos));
      if (colon == std::string::npos) break;
      pos = colon + 1;
    }
    if (parts.empty() || parts.size() > 3 || parts[0].empty())
      fail(Errc::bad_argument, "bad workload spec '" + spec + "'");
    auto to_num = [&](const std::string& s) -> std::uint64_t {
      try {
        std::size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
      } catch (const std::exception&) {
        fail(Errc::bad_argument, "bad number '" + s + "' in workload spec '" +
                                     spec + "'");
      }
    };
    std::uint64_t seed = to_num(parts[0]);
    int lambda = parts.size() > 1 ? static_cast<int>(to_num(parts[1])) : 2;
    int max_deg = parts.size() > 2 ? static_cast<int>(to_num(parts[2]))
                                   : g.max_degree();
    return random_table(seed, lambda, max_deg);
  }
  TransitionTable t = load_table(spec);
  return table_algorithm(std::make_shared<const TransitionTable>(std::move(t)),
                         spec);
}

}  // namespace agentsim
