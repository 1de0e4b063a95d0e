#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/agent_core.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/port_graph.hpp"
#include "agentsim/simulator.hpp"

// Reference implementations used only to check the simulator. Nothing here
// calls the simulator's phase procedures: the search below is an ordinary
// centralized walk over the graph, so agreement between the two is evidence
// rather than tautology.

namespace agentsim {

/// Result of the centralized search from s with first move to t.
struct DfsOutcome {
  int s = 0;
  int t = 0;
  std::vector<int> trajectory;  // node sequence i_0 .. i_M, i_0 = i_M = s
  std::vector<int> v_dfs;       // sorted set of nodes the head reached
  std::vector<int> v_itc;       // sorted set: tree path from s to the node
                                // whose probe finally entered s
  std::vector<int> itc_order;   // that path in order, s first
  std::vector<std::pair<int, int>> lastinout;  // entry/exit ports per visit
};

/// Centralized depth-first search: the head starts at s, moves to t first,
/// probes each further node's ports in ascending order (skipping the port
/// it arrived through the first time), retreats immediately from nodes
/// already searched, and stops on returning to s. The surviving cycle is
/// the tree path from s to the node that sent the final probe into s,
/// closed by that probe's edge.
inline DfsOutcome centralized_dfs(const PortGraph& g, int s, int t) {
  const int t_port = g.inverse_port(s, t);  // throws when t is not adjacent
  (void)t_port;
  const int n = g.node_count();
  std::vector<char> visited(n, 0);
  std::vector<int> par(n, -1), cld(n, 0), tree_parent(n, -1);

  DfsOutcome out;
  out.s = s;
  out.t = t;
  out.trajectory.push_back(s);
  visited[s] = 1;
  int prev = s;
  int cur = t;
  out.trajectory.push_back(t);
  while (cur != s) {
    const int entry = g.inverse_port(cur, prev);
    int move;
    if (!visited[cur]) {
      visited[cur] = 1;
      par[cur] = entry;
      tree_parent[cur] = prev;
      cld[cur] = (par[cur] == 0) ? 1 : 0;
      if (cld[cur] >= g.degree(cur))
        fail(Errc::unreachable_state,
             "search reached degree-1 node " + std::to_string(cur) +
                 "; the graph is not 2-edge-connected");
      move = cld[cur];
    } else if (entry == cld[cur]) {  // own probe returning
      int c = entry + 1;
      if (c == par[cur]) ++c;
      cld[cur] = c;
      move = (c < g.degree(cur)) ? c : par[cur];
    } else {  // foreign probe: retreat at once
      move = entry;
    }
    prev = cur;
    cur = g.port(cur, move);
    out.trajectory.push_back(cur);
  }

  for (int i = 0; i < n; ++i)
    if (visited[i]) out.v_dfs.push_back(i);

  const int final_prober = out.trajectory[out.trajectory.size() - 2];
  for (int u = final_prober; u != -1; u = tree_parent[u]) out.itc_order.push_back(u);
  std::reverse(out.itc_order.begin(), out.itc_order.end());
  out.v_itc = out.itc_order;
  std::sort(out.v_itc.begin(), out.v_itc.end());

  const std::size_t M = out.trajectory.size() - 1;
  out.lastinout.reserve(M + 1);
  for (std::size_t k = 0; k <= M; ++k) {
    int in = (k == 0) ? -1
                      : g.inverse_port(out.trajectory[k], out.trajectory[k - 1]);
    int ex = (k == M) ? -1
                      : g.inverse_port(out.trajectory[k], out.trajectory[k + 1]);
    out.lastinout.emplace_back(in, ex);
  }
  return out;
}

namespace detail {

/// Number of connected components, optionally with one edge removed.
inline int component_count(const PortGraph& g, int skip_u = -1, int skip_w = -1) {
  const int n = g.node_count();
  std::vector<char> seen(n, 0);
  int components = 0;
  std::vector<int> queue;
  for (int start = 0; start < n; ++start) {
    if (seen[start]) continue;
    ++components;
    seen[start] = 1;
    queue.assign(1, start);
    while (!queue.empty()) {
      int u = queue.back();
      queue.pop_back();
      for (int w : g.ports_of(u)) {
        if ((u == skip_u && w == skip_w) || (u == skip_w && w == skip_u)) continue;
        if (!seen[w]) {
          seen[w] = 1;
          queue.push_back(w);
        }
      }
    }
  }
  return components;
}

}  // namespace detail

inline bool oracle_connected(const PortGraph& g) {
  return g.node_count() > 0 && detail::component_count(g) == 1;
}

/// Every edge whose removal increases the number of components, found the
/// slow and obvious way: remove, rescan, compare.
inline std::vector<std::pair<int, int>> brute_bridges(const PortGraph& g) {
  std::vector<std::pair<int, int>> bridges;
  const int base = detail::component_count(g);
  for (auto [u, w] : g.edges())
    if (detail::component_count(g, u, w) > base) bridges.emplace_back(u, w);
  return bridges;
}

/// True when no two visits of the same node share the same entry/exit port
/// pair. The simulator's clean-up pass relies on this to recognize final
/// visits, so the property is checked wholesale during fuzzing.
inline bool lastinout_claim_check(const DfsOutcome& outcome) {
  std::map<int, std::vector<std::pair<int, int>>> per_node;
  for (std::size_t k = 0; k < outcome.trajectory.size(); ++k)
    per_node[outcome.trajectory[k]].push_back(outcome.lastinout[k]);
  for (auto& [node, pairs] : per_node) {
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i)
      if (pairs[i] == pairs[i - 1]) return false;
  }
  return true;
}

struct PhaseCheck {
  long sim_round = 0;
  Phase phase = Phase::none;
  std::string condition;
  bool pass = true;
  std::string detail;
};

struct PhaseReport {
  std::vector<PhaseCheck> checks;
  long rounds_checked = 0;
  bool all_pass = true;
  std::string first_failure;

  void add(long t, Phase ph, std::string condition, bool pass,
           std::string detail = "") {
    if (!pass && all_pass) {
      all_pass = false;
      first_failure = "simulated round " + std::to_string(t) + ", " +
                      phase_name(ph) + "." + condition +
                      (detail.empty() ? "" : ": " + detail);
    }
    checks.push_back({t, ph, std::move(condition), pass, std::move(detail)});
  }

  /// One line per check: "round <t> <phase> <condition> pass|FAIL [detail]".
  std::string to_text() const {
    std::ostringstream out;
    for (const auto& c : checks) {
      out << "round " << c.sim_round << " " << phase_name(c.phase) << " "
          << c.condition << " " << (c.pass ? "pass" : "FAIL");
      if (!c.pass && !c.detail.empty()) out << " " << c.detail;
      out << "\n";
    }
    return out.str();
  }
};

/// Checks every completed simulated round of a full simulator trace against
/// the phase contracts: the local result parked at the start node, the
/// search labels matching the centralized search, the oriented cycle left
/// by clean-up, the transferred bit, and the hand-off. Boundaries are found
/// by storage predicates at the round's start node; a missing boundary
/// raises BoundaryNotFound (the simulator wandered off script).
inline PhaseReport check_phase_resultants(const PortGraph& g, const Trace& trace,
                                          const SimStorageCodec& codec,
                                          const TransitionFunction& phi_star) {
  for (std::size_t k = 0; k < trace.entries.size(); ++k)
    if (trace.entries[k].round != static_cast<long>(k))
      fail(Errc::bad_argument, "phase checker needs a full (non-sampled) trace");
  if (trace.entries.empty())
    fail(Errc::bad_argument, "phase checker: empty trace");

  FlagsDecoder flags = codec.flags_decoder();
  auto at = [&](long round) -> const Configuration& {
    return trace.entries[static_cast<std::size_t>(round)].config;
  };
  auto node_st = [&](long round, int node) {
    return codec.decode(at(round).storages[node]);
  };

  std::vector<long> legal_rounds;
  for (const auto& e : trace.entries)
    if (is_legal(e.config, flags)) legal_rounds.push_back(e.round);
  if (legal_rounds.empty())
    fail(Errc::empty_legal_subsequence, "phase checker: no legal configuration");

  PhaseReport report;
  const long last_round = trace.entries.back().round;
  if (legal_rounds.front() != 0) {
    report.add(0, Phase::localcomp_dfs, "starts_legal", false,
               "first legal configuration at round " +
                   std::to_string(legal_rounds.front()));
    return report;
  }

  for (std::size_t idx = 0; idx < legal_rounds.size(); ++idx) {
    const long T0 = legal_rounds[idx];
    if (T0 == last_round) break;  // no round started from here
    const long t_sim = static_cast<long>(idx);
    const int s = at(T0).location;
    const SimNodeStorage s0 = node_st(T0, s);
    PhiResult eval = phi_star(g.degree(s), s0.spin, s0.svars, s0.smem);

    if (trace.entries[static_cast<std::size_t>(T0)].out_port == kTerminate) {
      // Terminating simulated round: one LocalComp round, no movement.
      report.add(t_sim, Phase::localcomp_dfs, "halt_expected",
                 eval.out_port == kTerminate,
                 "direct run continues through port " + std::to_string(eval.out_port));
      const SimNodeStorage s1 = node_st(T0 + 1, s);
      report.add(t_sim, Phase::localcomp_dfs, "halt_state",
                 at(T0 + 1).location == s && s1.spout == kTerminate &&
                     s1.svars == eval.storage && s1.smem == eval.mem &&
                     is_legal(at(T0 + 1), flags));
      ++report.rounds_checked;
      break;
    }

    if (idx + 1 >= legal_rounds.size())
      fail(Errc::boundary_not_found,
           "simulated round " + std::to_string(t_sim) +
               " never completed (no later legal configuration)");
    const long T1 = legal_rounds[idx + 1];

    report.add(t_sim, Phase::localcomp_dfs, "result_parked",
               eval.out_port != kTerminate && [&] {
                 const SimNodeStorage s1 = node_st(T0 + 1, s);
                 return s1.spout == eval.out_port && s1.svars == eval.storage &&
                        s1.smem == eval.mem;
               }());
    if (eval.out_port == kTerminate) {
      ++report.rounds_checked;
      continue;  // direct run halts here; simulator already shown divergent
    }

    const int t_node = g.port(s, eval.out_port);
    const DfsOutcome oc = centralized_dfs(g, s, t_node);
    const long M = static_cast<long>(oc.trajectory.size()) - 1;
    std::vector<char> in_itc(g.node_count(), 0);
    for (int u : oc.v_itc) in_itc[u] = 1;
    std::vector<char> in_dfs(g.node_count(), 0);
    for (int u : oc.v_dfs) in_dfs[u] = 1;

    auto find_boundary = [&](long from, long to, auto&& pred, const char* what) {
      for (long r = from; r <= to; ++r)
        if (at(r).location == s && pred(node_st(r, s))) return r;
      fail(Errc::boundary_not_found,
           "simulated round " + std::to_string(t_sim) + ": no " +
               std::string(what) + " boundary in rounds " + std::to_string(from) +
               ".." + std::to_string(to));
    };

    // --- search resultant -------------------------------------------------
    const long r1 = find_boundary(
        T0 + 1, T1,
        [](const SimNodeStorage& st) { return st.dfsstat == 1 && st.sloc == 1; },
        "search-return");
    {
      bool flags_ok = true, labels_ok = true;
      std::string detail;
      for (int u = 0; u < g.node_count(); ++u) {
        const SimNodeStorage st = node_st(r1, u);
        if (st.sim != 0 || st.smemupd != 0) flags_ok = false;
        const int want = in_itc[u] ? 1 : (in_dfs[u] ? 2 : 0);
        if (st.dfsstat != want && labels_ok) {
          labels_ok = false;
          detail = "node " + std::to_string(u) + ": dfsstat " +
                   std::to_string(st.dfsstat) + ", expected " + std::to_string(want);
        }
      }
      report.add(t_sim, Phase::dfs, "quiet_flags", flags_ok);
      report.add(t_sim, Phase::dfs, "dfsstat_labels", labels_ok, detail);
      const SimNodeStorage st = node_st(r1, s);
      report.add(t_sim, Phase::dfs, "head_state",
                 st.spout == eval.out_port && st.svars == eval.storage &&
                     st.smem == eval.mem);
      bool traj_ok = (r1 - T0 == M);
      for (long k = 0; traj_ok && k <= M; ++k)
        traj_ok = at(T0 + k).location == oc.trajectory[static_cast<std::size_t>(k)];
      report.add(t_sim, Phase::dfs, "trajectory", traj_ok,
                 traj_ok ? "" : std::to_string(r1 - T0) + " moves vs " +
                                    std::to_string(M));
    }

    // --- clean-up resultant -----------------------------------------------
    const long r2 = find_boundary(
        r1 + 1, T1,
        [](const SimNodeStorage& st) {
          return st.sim == 1 && st.dfsstat == 0 && st.smemupd == 0 && st.sloc == 1;
        },
        "clean-up-return");
    {
      bool itc_ok = true, orient_ok = true, rest_ok = true;
      std::string detail;
      for (int u = 0; u < g.node_count(); ++u) {
        const SimNodeStorage st = node_st(r2, u);
        if (in_itc[u]) {
          if (st.dfsstat != 0 || st.sim != 1 || st.smemupd != 0) {
            itc_ok = false;
            if (detail.empty())
              detail = "node " + std::to_string(u) + ": flags (" +
                       std::to_string(st.dfsstat) + "," + std::to_string(st.sim) +
                       "," + std::to_string(st.smemupd) + ")";
          }
          if (st.par >= g.degree(u) || st.cld >= g.degree(u)) {
            orient_ok = false;
          } else {
            const int x = g.port(u, st.par);
            const int y = g.port(u, st.cld);
            const SimNodeStorage stx = node_st(r2, x);
            if (!in_itc[x] || !in_itc[y] || stx.cld >= g.degree(x) ||
                g.port(x, stx.cld) != u)
              orient_ok = false;
          }
        } else if (st.dfsstat != 0 || st.sim != 0 || st.smemupd != 0) {
          rest_ok = false;
        }
      }
      report.add(t_sim, Phase::cleanup, "itc_flags", itc_ok, detail);
      report.add(t_sim, Phase::cleanup, "orientation", orient_ok);
      report.add(t_sim, Phase::cleanup, "rest_legal", rest_ok);
      const SimNodeStorage st = node_st(r2, s);
      report.add(t_sim, Phase::cleanup, "head_state",
                 st.spout == eval.out_port && st.svars == eval.storage &&
                     st.smem == eval.mem);
      bool traj_ok = (r2 - r1 == M);
      for (long k = 0; traj_ok && k <= M; ++k)
        traj_ok = at(r1 + k).location == oc.trajectory[static_cast<std::size_t>(k)];
      report.add(t_sim, Phase::cleanup, "trajectory", traj_ok);
    }

    // --- transfer resultant -----------------------------------------------
    const long r3 = find_boundary(
        r2 + 1, T1,
        [](const SimNodeStorage& st) { return st.smemupd == 1 && st.sloc == 1; },
        "transfer-return");
    {
      bool itc_ok = true, rest_ok = true;
      std::string detail;
      for (int u = 0; u < g.node_count(); ++u) {
        const SimNodeStorage st = node_st(r3, u);
        if (in_itc[u]) {
          if (st.dfsstat != 0 || st.sim != 1 || st.smemupd != 1 ||
              st.smem != eval.mem) {
            itc_ok = false;
            if (detail.empty())
              detail = "node " + std::to_string(u) + ": smem " +
                       std::to_string(st.smem) + ", smemupd " +
                       std::to_string(st.smemupd);
          }
        } else if (st.dfsstat != 0 || st.sim != 0 || st.smemupd != 0) {
          rest_ok = false;
        }
      }
      report.add(t_sim, Phase::transmem, "itc_transferred", itc_ok, detail);
      report.add(t_sim, Phase::transmem, "rest_legal", rest_ok);
      const SimNodeStorage st = node_st(r3, s);
      report.add(t_sim, Phase::transmem, "head_state",
                 st.spout == eval.out_port && st.svars == eval.storage);
    }

    // --- hand-off resultant -----------------------------------------------
    {
      const SimNodeStorage st = node_st(T1, t_node);
      report.add(t_sim, Phase::movereset, "arrived",
                 at(T1).location == t_node && st.sloc == 1,
                 at(T1).location == t_node
                     ? ""
                     : "agent at node " + std::to_string(at(T1).location) +
                           ", expected " + std::to_string(t_node));
      report.add(t_sim, Phase::movereset, "entry_port",
                 st.spin == g.inverse_port(t_node, s));
      report.add(t_sim, Phase::movereset, "memory", st.smem == eval.mem);
    }
    ++report.rounds_checked;
  }
  return report;
}

}  // namespace agentsim
