#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/bits.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/port_graph.hpp"

namespace agentsim {

/// Out-port value meaning "terminate and stay put".
inline constexpr int kTerminate = -1;
/// Entry-port value of the very first round (the agent was not moved in).
inline constexpr int kNoEntry = -1;
/// Trace annotation for a configuration the agent never stepped out of.
inline constexpr int kNotMoved = -2;

/// Result of one transition: port to leave through (or kTerminate), the
/// rewritten storage of the current node, and the agent's next memory value.
struct PhiResult {
  int out_port = kTerminate;
  BitString storage;
  int mem = 0;
};

/// The local transition function. Arguments: degree of the current node,
/// entry port (kNoEntry on round 0), storage of the current node, agent
/// memory. Must be a pure function of these four values.
using TransitionFunction =
    std::function<PhiResult(int degree, int entry_port, const BitString& storage, int mem)>;

/// A mobile-agent algorithm with at most one bit of agent memory.
/// memory_width 0 marks an oblivious algorithm: the engine then insists the
/// memory value stays 0. Nodes start with storage `init_storage` except the
/// start node, which gets `init_storage_start`.
struct OneBitAlgorithm {
  std::string name;
  int memory_width = 1;  // 0 or 1
  int storage_width = 0;
  int init_mem = 0;
  BitString init_storage;
  BitString init_storage_start;
  int init_location = 0;
  TransitionFunction phi;
};

/// Full system state between rounds: all node storages, the agent's memory,
/// the port it entered its current node through, and that node's id.
struct Configuration {
  std::vector<BitString> storages;
  int mem = 0;
  int entry_port = kNoEntry;
  int location = 0;

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.storages == b.storages && a.mem == b.mem &&
           a.entry_port == b.entry_port && a.location == b.location;
  }
  friend bool operator!=(const Configuration& a, const Configuration& b) {
    return !(a == b);
  }
};

inline void validate_configuration(const PortGraph& g, const Configuration& c) {
  if (static_cast<int>(c.storages.size()) != g.node_count())
    fail(Errc::invalid_configuration, "configuration has " +
                                          std::to_string(c.storages.size()) +
                                          " storages for " +
                                          std::to_string(g.node_count()) + " nodes");
  if (c.location < 0 || c.location >= g.node_count())
    fail(Errc::invalid_configuration,
         "agent location " + std::to_string(c.location) + " out of range");
  if (c.entry_port < kNoEntry || c.entry_port >= g.degree(c.location))
    fail(Errc::invalid_configuration,
         "entry port " + std::to_string(c.entry_port) + " invalid at node " +
             std::to_string(c.location));
  if (c.mem != 0 && c.mem != 1)
    fail(Errc::invalid_configuration, "agent memory must be 0 or 1");
}

struct StepOutcome {
  Configuration config;
  int out_port = kNotMoved;
  bool terminated = false;
};

/// One round: evaluate the transition at the agent's node, rewrite that
/// node's storage, update memory, and either move through the chosen port
/// (entering the neighbor through the matching reverse port) or terminate
/// in place when the transition returns kTerminate.
inline StepOutcome step(const PortGraph& g, const Configuration& c,
                        const TransitionFunction& phi) {
  validate_configuration(g, c);
  const int l = c.location;
  const int deg = g.degree(l);
  PhiResult r = phi(deg, c.entry_port, c.storages[l], c.mem);
  if (r.out_port < kTerminate || r.out_port >= deg)
    fail(Errc::phi_range, "transition chose port " + std::to_string(r.out_port) +
                              " at node " + std::to_string(l) + " of degree " +
                              std::to_string(deg));
  if (r.storage.size() != c.storages[l].size())
    fail(Errc::phi_range,
         "transition changed storage width at node " + std::to_string(l) +
             " from " + std::to_string(c.storages[l].size()) + " to " +
             std::to_string(r.storage.size()));
  if (r.mem != 0 && r.mem != 1)
    fail(Errc::phi_range, "transition produced memory value " + std::to_string(r.mem));
  Configuration next = c;
  next.storages[l] = std::move(r.storage);
  next.mem = r.mem;
  if (r.out_port == kTerminate) return {std::move(next), kTerminate, true};
  const int l2 = g.port(l, r.out_port);
  next.location = l2;
  next.entry_port = g.inverse_port(l2, l);
  return {std::move(next), r.out_port, false};
}

/// Independent check that `next` follows from `prev` under `phi`; returns a
/// reason on violation. Used by tests to cross-check the engine, so it
/// re-derives everything from the definition instead of calling step().
inline std::optional<std::string> validate_follow(const PortGraph& g,
                                                  const Configuration& prev,
                                                  const Configuration& next,
                                                  const TransitionFunction& phi) {
  validate_configuration(g, prev);
  validate_configuration(g, next);
  const int l = prev.location;
  PhiResult r = phi(g.degree(l), prev.entry_port, prev.storages[l], prev.mem);
  for (int i = 0; i < g.node_count(); ++i)
    if (i != l && !(next.storages[i] == prev.storages[i]))
      return "storage of non-visited node " + std::to_string(i) + " changed";
  if (!(next.storages[l] == r.storage))
    return "storage of node " + std::to_string(l) + " does not match the transition";
  if (next.mem != r.mem) return "agent memory does not match the transition";
  if (r.out_port == kTerminate) {
    if (next.location != prev.location) return "terminated agent moved";
    if (next.entry_port != prev.entry_port) return "terminated agent's entry port changed";
    return std::nullopt;
  }
  const int l2 = g.port(l, r.out_port);
  if (next.location != l2)
    return "agent at node " + std::to_string(next.location) + ", expected " +
           std::to_string(l2);
  if (next.entry_port != g.inverse_port(l2, l))
    return "entry port " + std::to_string(next.entry_port) + " is not the reverse of the move";
  return std::nullopt;
}

/// Control-flag view of one node's storage under some layout: where the
/// storage claims the simulated agent sits, and which phase machinery is
/// active. Supplied by the simulator's codec; agent_core only needs the
/// four flags to define legality.
struct NodeFlags {
  int sloc = 0;
  int dfsstat = 0;
  int sim = 0;
  int smemupd = 0;
};

using FlagsDecoder = std::function<NodeFlags(const BitString&)>;

/// A configuration is legal when every node is phase-quiescent
/// (dfsstat = sim = smemupd = 0) and exactly the agent's current node is
/// marked as the simulated location.
inline bool is_legal(const Configuration& c, const FlagsDecoder& flags) {
  for (std::size_t i = 0; i < c.storages.size(); ++i) {
    NodeFlags f = flags(c.storages[i]);
    if (f.dfsstat != 0 || f.sim != 0 || f.smemupd != 0) return false;
    int want = (static_cast<int>(i) == c.location) ? 1 : 0;
    if (f.sloc != want) return false;
  }
  return true;
}

/// Projection of a simulator configuration back into the simulated
/// algorithm's world: per-node payload storages, plus memory and entry port
/// recovered from the current node's storage.
struct GammaView {
  std::vector<BitString> storages;
  int mem = 0;
  int entry_port = kNoEntry;
  int location = 0;

  friend bool operator==(const GammaView& a, const GammaView& b) {
    return a.storages == b.storages && a.mem == b.mem &&
           a.entry_port == b.entry_port && a.location == b.location;
  }
  friend bool operator!=(const GammaView& a, const GammaView& b) {
    return !(a == b);
  }
};

struct GammaMapping {
  /// Payload part of one node's storage.
  std::function<BitString(const BitString&)> storage_view;
  /// (memory bit, entry port) recovered from the current node's storage.
  std::function<std::pair<int, int>(const BitString&)> agent_view;
};

/// Applies the projection. Note the agent's own memory in `c` is ignored:
/// the simulated memory lives in node storage, which is what makes the
/// simulator oblivious.
inline GammaView gamma_apply(const Configuration& c, const GammaMapping& gm) {
  GammaView v;
  v.storages.reserve(c.storages.size());
  for (const auto& s : c.storages) v.storages.push_back(gm.storage_view(s));
  auto [mem, pin] = gm.agent_view(c.storages[c.location]);
  v.mem = mem;
  v.entry_port = pin;
  v.location = c.location;
  return v;
}

inline GammaView as_gamma_view(const Configuration& c) {
  return GammaView{c.storages, c.mem, c.entry_port, c.location};
}

/// Which dispatch branch a simulator round runs; `none` tags rounds of a
/// direct (non-simulator) execution.
enum class Phase { none, localcomp_dfs, dfs, cleanup, transmem, movereset };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::none: return "-";
    case Phase::localcomp_dfs: return "localcomp+dfs";
    case Phase::dfs: return "dfs";
    case Phase::cleanup: return "cleanup";
    case Phase::transmem: return "transmem";
    case Phase::movereset: return "movereset";
  }
  return "-";
}

inline Phase phase_from_name(const std::string& s) {
  for (Phase p : {Phase::none, Phase::localcomp_dfs, Phase::dfs, Phase::cleanup,
                  Phase::transmem, Phase::movereset})
    if (s == phase_name(p)) return p;
  fail(Errc::parse_error, "unknown phase name '" + s + "'");
}

struct TraceEntry {
  long round = 0;
  Configuration config;
  Phase phase = Phase::none;  // dispatch branch of the round starting here
  int out_port = kNotMoved;   // port taken in that round; kTerminate; kNotMoved

  friend bool operator==(const TraceEntry& a, const TraceEntry& b) {
    return a.round == b.round && a.config == b.config && a.phase == b.phase &&
           a.out_port == b.out_port;
  }
};

struct Trace {
  std::vector<TraceEntry> entries;
  long rounds = 0;  // rounds actually executed (entries may be a subset)
  bool terminated = false;
  bool checkpoint_only = false;
  std::string engine;  // "oracle", "simulator", or ""
  int n = 0;
  int storage_width = 0;
  int lambda_star = 0;  // simulator traces: payload width
  int port_bits = 0;    // simulator traces: port field width

  friend bool operator==(const Trace& a, const Trace& b) {
    return a.entries == b.entries && a.rounds == b.rounds &&
           a.terminated == b.terminated && a.checkpoint_only == b.checkpoint_only &&
           a.engine == b.engine && a.n == b.n &&
           a.storage_width == b.storage_width && a.lambda_star == b.lambda_star &&
           a.port_bits == b.port_bits;
  }
};

/// Optional instrumentation for execute(). `classify` tags each stored
/// configuration with the phase its next round will run; `checkpoint`
/// marks configurations worth keeping (and counting); `stop` can end the
/// run early, e.g. once enough checkpoints were seen.
struct ExecHooks {
  std::function<Phase(const Configuration&)> classify;
  std::function<bool(const Configuration&)> checkpoint;
  std::function<bool(long rounds_done, long checkpoints, bool terminated)> stop;
};

/// Runs an algorithm for at most max_rounds rounds (or to termination, or
/// until the stop hook fires). With checkpoint_only, only configurations
/// the checkpoint hook accepts are stored — the trace is then a sampled
/// view, and `rounds` still counts every executed round.
inline Trace execute(const PortGraph& g, const OneBitAlgorithm& a, long max_rounds,
                     const ExecHooks* hooks = nullptr, bool checkpoint_only = false) {
  if (max_rounds < 0) fail(Errc::bad_argument, "execute: negative round budget");
  if (a.memory_width != 0 && a.memory_width != 1)
    fail(Errc::bad_argument, "execute: memory width must be 0 or 1");
  if (static_cast<int>(a.init_storage.size()) != a.storage_width ||
      static_cast<int>(a.init_storage_start.size()) != a.storage_width)
    fail(Errc::bad_argument, "execute: initial storages do not match storage width");
  if (a.init_location < 0 || a.init_location >= g.node_count())
    fail(Errc::bad_argument, "execute: start node out of range");
  if (!a.phi) fail(Errc::bad_argument, "execute: algorithm has no transition function");

  Configuration c;
  c.storages.assign(g.node_count(), a.init_storage);
  c.storages[a.init_location] = a.init_storage_start;
  c.mem = a.memory_width == 0 ? 0 : a.init_mem;
  c.entry_port = kNoEntry;
  c.location = a.init_location;

  Trace trace;
  trace.n = g.node_count();
  trace.storage_width = a.storage_width;
  trace.checkpoint_only = checkpoint_only;

  long checkpoints = 0;
  long last_stored_round = -1;
  auto record = [&](long round) {
    bool cp = !hooks || !hooks->checkpoint || hooks->checkpoint(c);
    if (cp) ++checkpoints;
    if (checkpoint_only && !cp) return;
    Phase tag = (hooks && hooks->classify) ? hooks->classify(c) : Phase::none;
    trace.entries.push_back({round, c, tag, kNotMoved});
    last_stored_round = round;
  };

  record(0);
  long r = 0;
  while (r < max_rounds) {
    if (hooks && hooks->stop && hooks->stop(r, checkpoints, false)) break;
    StepOutcome so = step(g, c, a.phi);
    if (a.memory_width == 0 && so.config.mem != 0)
      fail(Errc::phi_range, "oblivious algorithm set its memory bit");
    if (last_stored_round == r) trace.entries.back().out_port = so.out_port;
    c = std::move(so.config);
    ++r;
    trace.rounds = r;
    record(r);
    if (so.terminated) {
      trace.terminated = true;
      break;
    }
  }
  return trace;
}

struct Divergence {
  long sim_round = 0;  // simulated round index t
  std::string reason;
};

struct Verdict {
  bool ok = false;
  std::vector<long> t_sequence;  // rounds of the legal subsequence: T(0), T(1), ...
  std::optional<Divergence> first_divergence;
};

namespace detail {

inline std::optional<std::string> gamma_mismatch(const GammaView& got,
                                                 const GammaView& want) {
  if (got.location != want.location)
    return "location " + std::to_string(got.location) + ", expected " +
           std::to_string(want.location);
  if (got.mem != want.mem)
    return "memory " + std::to_string(got.mem) + ", expected " + std::to_string(want.mem);
  if (got.entry_port != want.entry_port)
    return "entry port " + std::to_string(got.entry_port) + ", expected " +
           std::to_string(want.entry_port);
  for (std::size_t i = 0; i < got.storages.size(); ++i)
    if (!(got.storages[i] == want.storages[i]))
      return "storage of node " + std::to_string(i) + " is " +
             got.storages[i].to_hex() + ", expected " + want.storages[i].to_hex();
  return std::nullopt;
}

}  // namespace detail

/// Compares a simulator trace against a direct run of the simulated
/// algorithm. Extracts the legal subsequence of the simulator trace (these
/// are the rounds T(0), T(1), ... where a simulated round is complete),
/// demands it starts at round 0, and checks that the projection of each
/// legal configuration equals the direct run's configuration of the same
/// simulated round, bit for bit. Termination must line up as well: a
/// simulated round after which one side halts and the other does not is a
/// divergence.
inline Verdict verify_simulation(const Trace& sim, const Trace& oracle,
                                 const GammaMapping& gm, const FlagsDecoder& flags) {
  for (std::size_t k = 0; k < oracle.entries.size(); ++k)
    if (oracle.entries[k].round != static_cast<long>(k))
      fail(Errc::bad_argument, "verify_simulation: reference trace must be complete");

  Verdict v;
  std::vector<const Configuration*> legal;
  for (const auto& e : sim.entries)
    if (is_legal(e.config, flags)) {
      legal.push_back(&e.config);
      v.t_sequence.push_back(e.round);
    }
  if (legal.empty())
    fail(Errc::empty_legal_subsequence, "simulator trace has no legal configuration");

  auto diverge = [&](long t, std::string reason) {
    v.ok = false;
    v.first_divergence = Divergence{t, std::move(reason)};
    return v;
  };

  if (v.t_sequence.front() != 0)
    return diverge(0, "first legal configuration at round " +
                          std::to_string(v.t_sequence.front()) + ", expected round 0");

  const long J = static_cast<long>(legal.size()) - 1;   // last simulated round seen
  const long K = static_cast<long>(oracle.entries.size()) - 1;
  for (long t = 0; t <= std::min(J, K); ++t) {
    GammaView got = gamma_apply(*legal[t], gm);
    GammaView want = as_gamma_view(oracle.entries[t].config);
    if (auto m = detail::gamma_mismatch(got, want))
      return diverge(t, "simulated round " + std::to_string(t) + ": " + *m);
  }

  if (sim.terminated && oracle.terminated) {
    if (J != K)
      return diverge(std::min(J, K),
                     "termination after simulated round " + std::to_string(J) +
                         ", expected " + std::to_string(K));
  } else if (sim.terminated && !oracle.terminated) {
    if (J < K)
      return diverge(J, "simulator halted after simulated round " + std::to_string(J) +
                            " but the simulated algorithm continues");
  } else if (!sim.terminated && oracle.terminated) {
    if (J < K)
      return diverge(J, "simulator trace ends after simulated round " +
                            std::to_string(J) + " without reaching the halt at " +
                            std::to_string(K));
    // The simulated algorithm halted at K; any further legal configuration
    // must keep projecting to that final state.
    GammaView want = as_gamma_view(oracle.entries[K].config);
    for (long t = K + 1; t <= J; ++t) {
      GammaView got = gamma_apply(*legal[t], gm);
      if (auto m = detail::gamma_mismatch(got, want))
        return diverge(t, "simulated round " + std::to_string(t) +
                              " after the halt: " + *m);
    }
  }

  v.ok = true;
  return v;
}

// --- Trace serialization -----------------------------------------------
//
//   agentsim-trace v1
//   meta n=3 width=25 engine=simulator lambda_star=1 port_bits=3 \
//        terminated=0 rounds=14 checkpoint=0 entries=14
//   entry 0 loc=0 pin=-1 mem=0 phase=localcomp+dfs out=0 diff=0:0000019,...
//
// The first entry lists every node's storage; later entries list only the
// nodes whose storage changed. Round-trips are bit-exact.

namespace detail {

inline std::string kv_get(std::istringstream& in, const std::string& key,
                          long line_no) {
  std::string tok;
  if (!(in >> tok) || tok.rfind(key + "=", 0) != 0)
    fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                ": expected " + key + "=...");
  return tok.substr(key.size() + 1);
}

inline long kv_get_long(std::istringstream& in, const std::string& key, long line_no) {
  std::string s = kv_get(in, key, line_no);
  try {
    std::size_t used = 0;
    long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                ": bad integer for " + key + ": '" + s + "'");
  }
}

}  // namespace detail

inline void write_trace(std::ostream& out, const Trace& t) {
  out << "agentsim-trace v1\n";
  out << "meta n=" << t.n << " width=" << t.storage_width << " engine="
      << (t.engine.empty() ? "-" : t.engine) << " lambda_star=" << t.lambda_star
      << " port_bits=" << t.port_bits << " terminated=" << (t.terminated ? 1 : 0)
      << " rounds=" << t.rounds << " checkpoint=" << (t.checkpoint_only ? 1 : 0)
      << " entries=" << t.entries.size() << "\n";
  const Configuration* prev = nullptr;
  for (const auto& e : t.entries) {
    out << "entry " << e.round << " loc=" << e.config.location
        << " pin=" << e.config.entry_port << " mem=" << e.config.mem
        << " phase=" << phase_name(e.phase) << " out=" << e.out_port << " diff=";
    bool any = false;
    for (int i = 0; i < t.n; ++i) {
      if (prev && prev->storages[i] == e.config.storages[i]) continue;
      out << (any ? "," : "") << i << ":" << e.config.storages[i].to_hex();
      any = true;
    }
    if (!any) out << "-";
    out << "\n";
    prev = &e.config;
  }
}

inline Trace read_trace(std::istream& in) {
  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };
  if (!next_line() || line != "agentsim-trace v1")
    fail(Errc::version_mismatch, "trace file: expected header 'agentsim-trace v1'");
  if (!next_line() || line.rfind("meta ", 0) != 0)
    fail(Errc::parse_error, "trace file: missing meta line");
  Trace t;
  long entry_count = 0;
  {
    std::istringstream meta(line.substr(5));
    t.n = static_cast<int>(detail::kv_get_long(meta, "n", line_no));
    t.storage_width = static_cast<int>(detail::kv_get_long(meta, "width", line_no));
    t.engine = detail::kv_get(meta, "engine", line_no);
    if (t.engine == "-") t.engine.clear();
    t.lambda_star = static_cast<int>(detail::kv_get_long(meta, "lambda_star", line_no));
    t.port_bits = static_cast<int>(detail::kv_get_long(meta, "port_bits", line_no));
    t.terminated = detail::kv_get_long(meta, "terminated", line_no) != 0;
    t.rounds = detail::kv_get_long(meta, "rounds", line_no);
    t.checkpoint_only = detail::kv_get_long(meta, "checkpoint", line_no) != 0;
    entry_count = detail::kv_get_long(meta, "entries", line_no);
    if (t.n < 0 || t.storage_width < 0 || entry_count < 0)
      fail(Errc::parse_error, "trace file: negative meta field");
  }
  Configuration current;
  for (long k = 0; k < entry_count; ++k) {
    if (!next_line())
      fail(Errc::parse_error, "trace file: expected " + std::to_string(entry_count) +
                                  " entries, got " + std::to_string(k));
    std::istringstream row(line);
    std::string word;
    row >> word;
    if (word != "entry")
      fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                  ": expected 'entry'");
    TraceEntry e;
    if (!(row >> e.round))
      fail(Errc::parse_error, "trace line " + std::to_string(line_no) + ": bad round");
    long loc = detail::kv_get_long(row, "loc", line_no);
    long pin = detail::kv_get_long(row, "pin", line_no);
    long mem = detail::kv_get_long(row, "mem", line_no);
    e.phase = phase_from_name(detail::kv_get(row, "phase", line_no));
    e.out_port = static_cast<int>(detail::kv_get_long(row, "out", line_no));
    std::string diff = detail::kv_get(row, "diff", line_no);

    if (k == 0) current.storages.assign(t.n, BitString(t.storage_width));
    std::vector<bool> touched(t.n, false);
    if (diff != "-") {
      std::istringstream items(diff);
      std::string item;
      while (std::getline(items, item, ',')) {
        auto colon = item.find(':');
        if (colon == std::string::npos)
          fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                      ": bad diff item '" + item + "'");
        long node = -1;
        try {
          std::size_t used = 0;
          node = std::stol(item.substr(0, colon), &used);
          if (used != colon) throw std::invalid_argument(item);
        } catch (const std::exception&) {
          fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                      ": bad diff node in '" + item + "'");
        }
        if (node < 0 || node >= t.n)
          fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                      ": diff node out of range");
        current.storages[node] =
            BitString::from_hex(item.substr(colon + 1), t.storage_width);
        touched[node] = true;
      }
    }
    if (k == 0)
      for (int i = 0; i < t.n; ++i)
        if (!touched[i])
          fail(Errc::parse_error,
               "trace file: first entry must list every node's storage");
    current.location = static_cast<int>(loc);
    current.entry_port = static_cast<int>(pin);
    current.mem = static_cast<int>(mem);
    e.config = current;
    t.entries.push_back(std::move(e));
  }
  if (next_line())
    fail(Errc::parse_error, "trace line " + std::to_string(line_no) +
                                ": trailing content after last entry");
  return t;
}

inline void save_trace(const std::string& path, const Trace& t) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write trace file " + path);
  write_trace(out, t);
}

inline Trace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open trace file " + path);
  return read_trace(in);
}

}  // namespace agentsim
