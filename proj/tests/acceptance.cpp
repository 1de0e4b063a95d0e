// Acceptance runner: executes the fixed release checklist and prints one
// PASS/FAIL line per criterion on stdout. Exits nonzero when any criterion
// fails. Everything here is seeded, so reruns are bit-identical.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "agentsim/agentsim.hpp"
#include "test_graphs.hpp"

using namespace agentsim;

namespace {

struct NamedGraph {
  std::string name;
  PortGraph g;
};

/// The fixed corpus: oriented and scrambled cycles on 3..12 nodes, complete
/// graphs on 4..6, the Petersen graph, and 20 seeded cycle-plus-ears graphs
/// with up to 20 nodes.
std::vector<NamedGraph> build_corpus() {
  std::vector<NamedGraph> corpus;
  for (int n = 3; n <= 12; ++n)
    corpus.push_back({"cycle" + std::to_string(n),
                      generate_cycle(n, CycleScheme::oriented)});
  for (int n = 3; n <= 12; ++n)
    corpus.push_back({"scrambled" + std::to_string(n),
                      generate_cycle(n, CycleScheme::scrambled, 1000 + n)});
  for (int n = 4; n <= 6; ++n)
    corpus.push_back({"complete" + std::to_string(n), generate_complete(n)});
  corpus.push_back({"petersen", generate_petersen()});
  for (int i = 0; i < 20; ++i) {
    int n = 3 + (i % 18);
    int extra = n >= 5 ? i % 3 : 0;
    corpus.push_back({"ears" + std::to_string(9000 + i),
                      generate_random_2ec(n, extra, 9000 + i)});
  }
  return corpus;
}

/// Aggregated evidence from the shared verification runs (criteria 1-3).
struct RunStats {
  long runs = 0;
  long terminated = 0;
  long rounds_compared = 0;
  long sim_failures = 0;
  long phase_failures = 0;
  long coverage_failures = 0;  // phase rounds checked != rounds compared
  long bound_failures = 0;
  long dfs_label_failures = 0;
  long max_overhead = 0;
  long max_overhead_bound = 0;
  std::string max_overhead_instance;
  std::string first_failure;

  void note_failure(const std::string& label, const std::string& why) {
    if (first_failure.empty()) first_failure = label + ": " + why;
  }
};

void run_instance(const PortGraph& g, const std::string& label,
                  const OneBitAlgorithm& algo, int start, RunStats& stats) {
  VerifyOptions opts;
  opts.sim_rounds = 100;
  VerifyOutcome vo = verify_run(g, algo, start, opts);

  ++stats.runs;
  if (vo.terminated) ++stats.terminated;
  stats.rounds_compared += vo.rounds_compared;
  if (!vo.sim_ok) {
    ++stats.sim_failures;
    stats.note_failure(label, vo.failure_reason());
  }
  if (!vo.phases_ok) {
    ++stats.phase_failures;
    stats.note_failure(label, vo.failure_reason());
  }
  if (vo.phase_report.rounds_checked != vo.rounds_compared) {
    ++stats.coverage_failures;
    stats.note_failure(label,
                       "phase checks covered " +
                           std::to_string(vo.phase_report.rounds_checked) +
                           " rounds, compared " +
                           std::to_string(vo.rounds_compared));
  }
  if (!vo.bound_ok) {
    ++stats.bound_failures;
    stats.note_failure(label, vo.failure_reason());
  }
  for (const auto& c : vo.phase_report.checks)
    if (!c.pass && c.condition == "dfsstat_labels") ++stats.dfs_label_failures;
  if (vo.max_overhead > stats.max_overhead) {
    stats.max_overhead = vo.max_overhead;
    stats.max_overhead_bound = vo.bound;
    stats.max_overhead_instance = label;
  }
}

struct CriterionLine {
  bool pass = false;
  std::string text;
};

void print_line(int id, const CriterionLine& line) {
  std::cout << "CRITERION " << id << " " << (line.pass ? "PASS" : "FAIL")
            << " — " << line.text << "\n";
}

int ceil_log2(int v) {
  int b = 0;
  while ((1 << b) < v) ++b;
  return b;
}

}  // namespace

int main() {
  const auto t_begin = std::chrono::steady_clock::now();
  std::vector<NamedGraph> corpus = build_corpus();

  // --- Shared verification runs for criteria 1-3 ---------------------------
  RunStats stats;
  for (std::size_t idx = 0; idx < corpus.size(); ++idx) {
    const NamedGraph& ng = corpus[idx];
    const int start = static_cast<int>(idx * 7) % ng.g.node_count();
    run_instance(ng.g, ng.name + "/flipflop/" + std::to_string(start),
                 flip_flop_messenger(), start, stats);
    run_instance(ng.g, ng.name + "/explorer/" + std::to_string(start),
                 one_bit_explorer(ng.g.max_degree()), start, stats);
  }
  for (int j = 0; j < 50; ++j) {
    const NamedGraph& ng = corpus[static_cast<std::size_t>(j) % corpus.size()];
    const int lambda = 1 + j % 3;
    const std::uint64_t seed = 5000 + static_cast<std::uint64_t>(j);
    OneBitAlgorithm algo = random_table(seed, lambda, ng.g.max_degree());
    const int start = (j * 11) % ng.g.node_count();
    run_instance(ng.g, ng.name + "/" + algo.name + "/" + std::to_string(start),
                 algo, start, stats);
  }

  std::vector<CriterionLine> lines(9);

  {
    std::ostringstream t;
    bool pass = stats.sim_failures == 0;
    t << "simulation equivalence: " << stats.runs
      << " corpus runs (relay, explorer, 50 seeded tables), "
      << stats.rounds_compared << " simulated rounds compared bit for bit, "
      << stats.terminated << " runs halted by their workload";
    if (!pass) t << " (" << stats.sim_failures << " failed; first: "
                 << stats.first_failure << ")";
    lines[1] = {pass, t.str()};
  }
  {
    std::ostringstream t;
    bool pass = stats.phase_failures == 0 && stats.coverage_failures == 0;
    t << "phase resultants: all five phase contracts hold on every simulated "
         "round of every corpus run";
    if (!pass)
      t << " (" << stats.phase_failures << " contract / "
        << stats.coverage_failures << " coverage failures; first: "
        << stats.first_failure << ")";
    lines[2] = {pass, t.str()};
  }
  {
    std::ostringstream t;
    bool pass = stats.bound_failures == 0;
    t << "overhead bound: per-round move count within 8|E|+2n+2 on every "
         "corpus run; worst " << stats.max_overhead << " of bound "
      << stats.max_overhead_bound << " (" << stats.max_overhead_instance << ")";
    if (!pass) t << "; " << stats.bound_failures << " runs exceeded the bound";
    lines[3] = {pass, t.str()};
  }

  // --- Criterion 4: storage width ------------------------------------------
  {
    bool pass = true;
    std::string detail;
    int widest = 0;
    for (const NamedGraph& ng : corpus) {
      const int degree = ng.g.max_degree();
      const int port_bits = ceil_log2(degree + 1) + 1;
      for (int lambda = 0; lambda <= 8; ++lambda) {
        SimStorageCodec codec(lambda, degree);
        if (codec.port_bits() != port_bits ||
            codec.width() > lambda + 12 * port_bits) {
          pass = false;
          if (detail.empty())
            detail = ng.name + " lambda " + std::to_string(lambda) + ": width " +
                     std::to_string(codec.width());
        }
        widest = std::max(widest, codec.width());
      }
    }
    std::ostringstream t;
    t << "storage width: encoded node state stays within payload + 12 port "
         "fields on all " << corpus.size() << " corpus graphs (widest "
      << widest << " bits)";
    if (!pass) t << " (violated at " << detail << ")";
    lines[4] = {pass, t.str()};
  }

  // --- Criterion 5: entry/exit pair distinctness ---------------------------
  {
    long checked = 0, violations = 0;
    std::string detail;
    for (const NamedGraph& ng : corpus)
      for (int s = 0; s < ng.g.node_count(); ++s)
        for (int p = 0; p < ng.g.degree(s); ++p) {
          ++checked;
          if (!lastinout_claim_check(centralized_dfs(ng.g, s, ng.g.port(s, p)))) {
            ++violations;
            if (detail.empty())
              detail = ng.name + " s=" + std::to_string(s) +
                       " p=" + std::to_string(p);
          }
        }
    FuzzOptions fo;
    for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
      FuzzTrial trial = fuzz_trial_spec(seed, fo);
      PortGraph g = generate_random_2ec(trial.n, trial.extra_ears, trial.graph_seed);
      for (int p = 0; p < g.degree(trial.start); ++p) {
        ++checked;
        if (!lastinout_claim_check(
                centralized_dfs(g, trial.start, g.port(trial.start, p)))) {
          ++violations;
          if (detail.empty()) detail = "fuzz seed " + std::to_string(seed);
        }
      }
    }
    std::ostringstream t;
    bool pass = violations == 0;
    t << "entry/exit pairs: no node reuses a pair across visits in "
      << checked << " reference searches (corpus + 1000 fuzz instances)";
    if (!pass) t << " (" << violations << " violations; first: " << detail << ")";
    lines[5] = {pass, t.str()};
  }

  // --- Criterion 6: oracle agreement ----------------------------------------
  {
    bool labels_ok = stats.dfs_label_failures == 0;
    long bridged = 0, mismatches = 0;
    std::string detail;
    for (int i = 0; i < 1000; ++i) {
      PortGraph g;
      if (i < 500) {
        int n = 3 + (i % 18);
        int extra = n >= 5 ? i % 4 : 0;
        g = generate_random_2ec(n, extra, 7000 + static_cast<std::uint64_t>(i));
      } else {
        int n = 3 + (i % 18);
        g = testutil::random_sprinkled(n, i % 5, 8000 + static_cast<std::uint64_t>(i));
      }
      bool fast = is_two_edge_connected(g);
      bool slow = oracle_connected(g) && brute_bridges(g).empty();
      if (!slow) ++bridged;
      if (fast != slow) {
        ++mismatches;
        if (detail.empty()) detail = "graph index " + std::to_string(i);
      }
    }
    bool pass = labels_ok && mismatches == 0 && bridged >= 100;
    std::ostringstream t;
    t << "oracle agreement: search labels matched the reference on every "
         "corpus run (" << stats.dfs_label_failures << " mismatches); "
         "bridge detector agreed with edge-removal rescans on 1000 graphs ("
      << bridged << " of them bridged or disconnected)";
    if (mismatches != 0) t << " (" << mismatches << " disagreements; first: "
                           << detail << ")";
    if (bridged < 100) t << " (too few bridged graphs to trust the comparison)";
    lines[6] = {pass, t.str()};
  }

  // --- Criterion 7: fuzz campaign -------------------------------------------
  {
    FuzzOptions fo;
    fo.trials = 1000;
    fo.sim_rounds = 30;
    fo.workers = 1;
    FuzzSummary serial = run_fuzz(fo);
    fo.workers = 8;
    FuzzSummary parallel = run_fuzz(fo);
    bool pass = serial.failed == 0 && serial == parallel;
    std::ostringstream t;
    t << "fuzz campaign: " << serial.trials << " seeded random instances, "
      << serial.failed << " failures, " << serial.terminated_runs
      << " halted; summaries identical for 1 and 8 workers";
    if (serial.failed != 0) {
      for (const auto& r : serial.results)
        if (!r.ok) {
          t << " (first failure seed " << r.trial.seed << ": " << r.failure << ")";
          break;
        }
    } else if (!(serial == parallel)) {
      t << " (worker counts disagreed)";
    }
    lines[7] = {pass, t.str()};
  }

  // --- Criterion 8: mutation sanity -----------------------------------------
  {
    const PortGraph k4 = testutil::k4();
    const PortGraph k6 = generate_complete(6);
    const PortGraph petersen = generate_petersen();
    const PortGraph bowtie = testutil::bowtie();
    struct MutationCase {
      SimMutation mutation;
      std::string name;
      // Instances where the defect provably alters the raw trace. The
      // clean-up guard is exercised only under some port layouts (elsewhere
      // every clean-up visit is already a final visit and the mutant is
      // behaviorally equivalent), so its instances are the layouts where the
      // healthy and mutated runs were shown to differ.
      std::vector<std::pair<const PortGraph*, int>> instances;
    };
    std::vector<MutationCase> cases{
        {SimMutation::dfs_skip_parent, "search skips the parent-port rule",
         {{&k4, 0}, {&petersen, 0}, {&bowtie, 3}}},
        {SimMutation::cleanup_drop_guard, "clean-up drops the final-visit guard",
         {{&bowtie, 3}, {&k4, 3}, {&k6, 4}}},
        {SimMutation::transmem_invert, "transfer inverts the carried bit",
         {{&k4, 0}, {&petersen, 0}, {&bowtie, 3}}},
    };
    bool pass = true;
    std::ostringstream caught_text;
    for (const MutationCase& mc : cases) {
      long caught = 0;
      for (auto [g, start] : mc.instances) {
        VerifyOptions opts;
        opts.sim_rounds = 20;
        opts.mutation = mc.mutation;
        VerifyOutcome vo = verify_run(*g, flip_flop_messenger(), start, opts);
        if (!vo.ok) ++caught;
      }
      if (caught != static_cast<long>(mc.instances.size())) pass = false;
      caught_text << (caught_text.tellp() > 0 ? ", " : "") << mc.name << " "
                  << caught << "/" << mc.instances.size();
    }
    std::ostringstream t;
    t << "mutation sanity: every planted simulator defect was caught ("
      << caught_text.str() << ")";
    lines[8] = {pass, t.str()};
  }

  bool all_pass = true;
  for (int id = 1; id <= 8; ++id) {
    print_line(id, lines[static_cast<std::size_t>(id)]);
    all_pass = all_pass && lines[static_cast<std::size_t>(id)].pass;
  }
  const auto t_end = std::chrono::steady_clock::now();
  std::cerr << "acceptance: "
            << std::chrono::duration_cast<std::chrono::seconds>(t_end - t_begin)
                   .count()
            << "s total\n";
  return all_pass ? 0 : 1;
}
