#pragma once

#include <string>
#include <utility>

#include "agentsim/agent_core.hpp"
#include "agentsim/bits.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/port_graph.hpp"

namespace agentsim {

/// Decoded per-node storage of the oblivious simulator. Twelve fields:
/// where the simulated agent sits (sloc), its mirrored memory/entry port
/// (smem, spin), the pending move (spout), the simulated payload (svars),
/// search bookkeeping (dfsstat, par, cld), phase markers (sim, smemupd)
/// and the port pair of the last search visit (lastin, lastout).
struct SimNodeStorage {
  int sloc = 0;
  int smem = 0;
  int smemupd = 0;
  int spin = -1;
  int spout = -1;
  BitString svars;
  int dfsstat = 0;  // 0 untouched, 1 on the live search path, 2 fully probed
  int par = 0;
  int cld = 0;
  int sim = 0;
  int lastin = -1;
  int lastout = -1;

  friend bool operator==(const SimNodeStorage& a, const SimNodeStorage& b) {
    return a.sloc == b.sloc && a.smem == b.smem && a.smemupd == b.smemupd &&
           a.spin == b.spin && a.spout == b.spout && a.svars == b.svars &&
           a.dfsstat == b.dfsstat && a.par == b.par && a.cld == b.cld &&
           a.sim == b.sim && a.lastin == b.lastin && a.lastout == b.lastout;
  }
};

/// Fixed-width bit layout for SimNodeStorage. Ports occupy
/// ceil(log2(max_degree+1)) + 1 bits each and are stored shifted by one so
/// that -1 (no port) is representable; par and cld are never -1 and are
/// stored raw (cld may legitimately reach max_degree after its final
/// increment). Total width: 6 + 6 * port_bits + payload width, which keeps
/// the storage overhead within 12 * port_bits of the simulated algorithm.
class SimStorageCodec {
 public:
  SimStorageCodec(int lambda_star, int max_degree)
      : lambda_star_(lambda_star), max_degree_(max_degree) {
    if (lambda_star < 0) fail(Errc::bad_argument, "codec: negative payload width");
    if (max_degree < 1) fail(Errc::bad_argument, "codec: max degree must be >= 1");
    int bits = 1;
    while ((1 << bits) < max_degree + 1) ++bits;  // ceil(log2(max_degree+1))
    port_bits_ = bits + 1;
  }

  int lambda_star() const { return lambda_star_; }
  int max_degree() const { return max_degree_; }
  int port_bits() const { return port_bits_; }
  int width() const { return 6 + 6 * port_bits_ + lambda_star_; }

  BitString encode(const SimNodeStorage& st) const {
    check_bit("sloc", st.sloc);
    check_bit("smem", st.smem);
    check_bit("smemupd", st.smemupd);
    check_bit("sim", st.sim);
    if (st.dfsstat < 0 || st.dfsstat > 2)
      fail(Errc::unreachable_state, "encode: dfsstat " + std::to_string(st.dfsstat));
    check_port("spin", st.spin, -1, max_degree_ - 1);
    check_port("spout", st.spout, -1, max_degree_ - 1);
    check_port("par", st.par, 0, max_degree_ - 1);
    check_port("cld", st.cld, 0, max_degree_);
    check_port("lastin", st.lastin, -1, max_degree_ - 1);
    check_port("lastout", st.lastout, -1, max_degree_ - 1);
    if (static_cast<int>(st.svars.size()) != lambda_star_)
      fail(Errc::unreachable_state,
           "encode: payload width " + std::to_string(st.svars.size()) +
               ", expected " + std::to_string(lambda_star_));
    BitString b(width());
    b.set_bit(0, st.sloc);
    b.set_bit(1, st.smem);
    b.set_bit(2, st.smemupd);
    b.set_bit(3, st.sim);
    put_field(b, 4, 2, static_cast<unsigned>(st.dfsstat));
    const int P = port_bits_;
    put_field(b, 6 + 0 * P, P, static_cast<unsigned>(st.spin + 1));
    put_field(b, 6 + 1 * P, P, static_cast<unsigned>(st.spout + 1));
    put_field(b, 6 + 2 * P, P, static_cast<unsigned>(st.par));
    put_field(b, 6 + 3 * P, P, static_cast<unsigned>(st.cld));
    put_field(b, 6 + 4 * P, P, static_cast<unsigned>(st.lastin + 1));
    put_field(b, 6 + 5 * P, P, static_cast<unsigned>(st.lastout + 1));
    for (int i = 0; i < lambda_star_; ++i)
      b.set_bit(6 + 6 * P + i, st.svars.bit(i));
    return b;
  }

  SimNodeStorage decode(const BitString& b) const {
    if (static_cast<int>(b.size()) != width())
      fail(Errc::undecodable_storage,
           "decode: storage width " + std::to_string(b.size()) + ", expected " +
               std::to_string(width()));
    SimNodeStorage st;
    st.sloc = b.bit(0);
    st.smem = b.bit(1);
    st.smemupd = b.bit(2);
    st.sim = b.bit(3);
    st.dfsstat = static_cast<int>(get_field(b, 4, 2));
    if (st.dfsstat > 2)
      fail(Errc::undecodable_storage, "decode: dfsstat field holds 3");
    const int P = port_bits_;
    st.spin = take_port("spin", get_field(b, 6 + 0 * P, P), -1, max_degree_ - 1);
    st.spout = take_port("spout", get_field(b, 6 + 1 * P, P), -1, max_degree_ - 1);
    st.par = take_port("par", get_field(b, 6 + 2 * P, P), 0, max_degree_ - 1);
    st.cld = take_port("cld", get_field(b, 6 + 3 * P, P), 0, max_degree_);
    st.lastin = take_port("lastin", get_field(b, 6 + 4 * P, P), -1, max_degree_ - 1);
    st.lastout = take_port("lastout", get_field(b, 6 + 5 * P, P), -1, max_degree_ - 1);
    st.svars = BitString(lambda_star_);
    for (int i = 0; i < lambda_star_; ++i)
      st.svars.set_bit(i, b.bit(6 + 6 * P + i));
    return st;
  }

  /// Cheap view of just the legality flags, for is_legal over long traces.
  FlagsDecoder flags_decoder() const {
    const int w = width();
    return [w](const BitString& b) {
      if (static_cast<int>(b.size()) != w)
        fail(Errc::undecodable_storage,
             "flags: storage width " + std::to_string(b.size()) + ", expected " +
                 std::to_string(w));
      NodeFlags f;
      f.sloc = b.bit(0);
      f.smemupd = b.bit(2);
      f.sim = b.bit(3);
      f.dfsstat = b.bit(4) | (b.bit(5) << 1);
      return f;
    };
  }

  /// Projection from simulator storage to the simulated algorithm's world:
  /// per-node payload, and (memory, entry port) read off the current node.
  GammaMapping gamma() const {
    SimStorageCodec codec = *this;
    GammaMapping gm;
    gm.storage_view = [codec](const BitString& b) {
      return codec.decode(b).svars;
    };
    gm.agent_view = [codec](const BitString& b) {
      SimNodeStorage st = codec.decode(b);
      return std::make_pair(st.smem, st.spin);
    };
    return gm;
  }

 private:
  static void check_bit(const char* name, int v) {
    if (v != 0 && v != 1)
      fail(Errc::unreachable_state,
           std::string("encode: ") + name + " holds " + std::to_string(v));
  }

  void check_port(const char* name, int v, int lo, int hi) const {
    if (v < lo || v > hi)
      fail(Errc::unreachable_state, std::string("encode: ") + name + " holds " +
                                        std::to_string(v) + ", outside [" +
                                        std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
  }

  int take_port(const char* name, unsigned raw, int lo, int hi) const {
    int v = static_cast<int>(raw) + (lo == -1 ? -1 : 0);
    if (v < lo || v > hi)
      fail(Errc::undecodable_storage, std::string("decode: ") + name + " holds " +
                                          std::to_string(v) + ", outside [" +
                                          std::to_string(lo) + ", " +
                                          std::to_string(hi) + "]");
    return v;
  }

  static void put_field(BitString& b, int offset, int count, unsigned value) {
    for (int i = 0; i < count; ++i)
      b.set_bit(offset + i, (value >> i) & 1u);
  }

  static unsigned get_field(const BitString& b, int offset, int count) {
    unsigned v = 0;
    for (int i = 0; i < count; ++i)
      if (b.bit(offset + i)) v |= 1u << i;
    return v;
  }

  int lambda_star_;
  int max_degree_;
  int port_bits_;
};

/// Storage every node starts with. The start node carries the simulated
/// agent: its marker, memory and the start-node payload. Fields the model
/// leaves arbitrary are pinned (-1 for ports, 0 for par/cld) so runs are
/// reproducible bit for bit; spin = -1 mirrors the missing entry port of
/// the first round.
inline SimNodeStorage initial_storage(const OneBitAlgorithm& a_star, bool is_start) {
  SimNodeStorage st;
  st.sloc = is_start ? 1 : 0;
  st.smem = is_start ? a_star.init_mem : 0;
  st.svars = is_start ? a_star.init_storage_start : a_star.init_storage;
  return st;
}

/// Deliberate defects for testing the checkers; `none` is the real thing.
enum class SimMutation {
  none,
  dfs_skip_parent,     // forward visits forget to skip the parent port
  cleanup_drop_guard,  // clean-up resets on first visit, not last
  transmem_invert,     // memory transfer writes the inverted bit
};

struct SimStep {
  int out_port = kTerminate;
  SimNodeStorage st;
};

/// Local computation: runs the simulated transition on the mirrored state
/// and parks the result (pending move, payload, memory) in storage. The
/// agent does not move here; the caller, per the dispatch, follows up with
/// the search step in the same round.
inline SimNodeStorage local_comp(int degree, SimNodeStorage st,
                                 const TransitionFunction& phi_star) {
  PhiResult r = phi_star(degree, st.spin, st.svars, st.smem);
  if (r.out_port < kTerminate || r.out_port >= degree)
    fail(Errc::phi_range, "simulated transition chose port " +
                              std::to_string(r.out_port) + " at degree " +
                              std::to_string(degree));
  if (r.storage.size() != st.svars.size())
    fail(Errc::phi_range, "simulated transition changed payload width");
  if (r.mem != 0 && r.mem != 1)
    fail(Errc::phi_range, "simulated transition produced memory value " +
                              std::to_string(r.mem));
  st.spout = r.out_port;
  st.svars = std::move(r.storage);
  st.smem = r.mem;
  return st;
}

/// Search step. At the marked node the probe follows the pending move;
/// fresh nodes adopt the entry port as parent and probe their first
/// non-parent port; a probe returning through cld advances it (skipping
/// the parent port) or, with nothing left, backtracks and marks the node
/// fully probed; any other arrival bounces straight back. Entry and exit
/// ports of the visit are recorded for the clean-up pass.
inline SimStep dfs_step(int degree, int p_in, SimNodeStorage st,
                        SimMutation mut = SimMutation::none) {
  st.lastin = p_in;
  if (st.sloc == 1) {
    st.dfsstat = 1;
    st.cld = st.spout;
    st.lastout = st.spout;
  } else if (st.dfsstat == 0) {  // visiting by forward
    st.dfsstat = 1;
    st.par = p_in;
    if (st.par == 0 && mut != SimMutation::dfs_skip_parent) {
      st.cld = 1;
      st.lastout = 1;
    } else {
      st.cld = 0;
      st.lastout = 0;
    }
  } else if (st.dfsstat == 1 && p_in == st.cld) {  // visiting by backtrack
    st.cld = (st.par == p_in + 1) ? p_in + 2 : p_in + 1;
    if (st.cld < degree) {
      st.lastout = st.cld;
    } else {  // no unprobed port exists
      st.lastout = st.par;
      st.dfsstat = 2;
    }
  } else {  // invoking backtrack
    st.lastout = p_in;
  }
  return {st.lastout, std::move(st)};
}

/// Clean-up step: replays the search route, orienting the surviving cycle
/// (par at the start node re-pointed to the returning edge, cld re-derived
/// on first visits) and clearing the search marks. A node is cleared only
/// on the visit whose entry/exit ports match the pair recorded during the
/// search — that visit is provably the last one.
inline SimStep clean_up(int degree, int p_in, SimNodeStorage st,
                        SimMutation mut = SimMutation::none) {
  auto last_visit = [&](int out) {
    return mut == SimMutation::cleanup_drop_guard ||
           (st.lastin == p_in && st.lastout == out);
  };
  if (st.sim == 0) {
    if (st.dfsstat == 1 && st.sloc == 1) {  // phase start
      st.par = p_in;
      st.dfsstat = 0;
      st.sim = 1;
      return {st.cld, std::move(st)};
    }
    st.sim = 1;  // first visit in this phase
    st.cld = (st.par == 0) ? 1 : 0;
    if (st.dfsstat == 1 && last_visit(st.cld)) st.dfsstat = 0;
    return {st.cld, std::move(st)};
  }
  if (p_in == st.cld) {  // visiting by backtrack
    st.cld += (st.par == p_in + 1) ? 2 : 1;
    if (st.dfsstat == 1) {
      if (last_visit(st.cld)) st.dfsstat = 0;
      return {st.cld, std::move(st)};
    }
    if (st.cld < degree) return {st.cld, std::move(st)};  // unprobed ports exist
    int out = st.par;
    if (last_visit(out)) {
      st.dfsstat = 0;
      st.sim = 0;
    }
    return {out, std::move(st)};
  }
  // invoking backtrack
  if (last_visit(p_in)) {
    if (st.dfsstat == 1)
      st.dfsstat = 0;
    else {
      st.dfsstat = 0;
      st.sim = 0;
    }
  }
  return {p_in, std::move(st)};
}

/// Memory transfer step: the marked node launches a circulation around the
/// oriented cycle — via cld to say 0, via par to say 1 — and every node on
/// the way copies the announced bit and passes it on in the same direction.
inline SimStep trans_mem(int p_in, SimNodeStorage st,
                         SimMutation mut = SimMutation::none) {
  const int invert = (mut == SimMutation::transmem_invert) ? 1 : 0;
  st.smemupd = 1;
  if (st.sloc == 1)
    return {st.smem == 0 ? st.cld : st.par, std::move(st)};
  if (p_in == st.par) {  // transfer 0
    st.smem = 0 ^ invert;
    return {st.cld, std::move(st)};
  }
  st.smem = 1 ^ invert;  // transfer 1
  return {st.par, std::move(st)};
}

/// Move-and-reset step: the marked node hands the token to the pending
/// destination; the destination, recognizable by being entered through its
/// parent edge, takes the marker and the entry port; every other node on
/// the return circulation just drops its phase flags.
inline SimStep move_reset(int p_in, SimNodeStorage st) {
  if (st.sloc == 1) {  // leave the round's start node
    st.sloc = 0;
    return {st.spout, std::move(st)};
  }
  if (p_in == st.par) {  // reach the destination
    st.sloc = 1;
    st.spin = p_in;
    st.sim = 0;
    st.smemupd = 0;
    return {st.par, std::move(st)};
  }
  st.sim = 0;  // reset circulation
  st.smemupd = 0;
  return {st.par, std::move(st)};
}

/// Which branch the dispatch takes from this entry port and storage.
inline Phase classify_phase(int p_in, const SimNodeStorage& st) {
  if (st.smemupd == 1) return Phase::movereset;
  if (st.dfsstat > 0)
    return (st.sim == 1 || p_in == st.par || st.sloc == 1) ? Phase::cleanup
                                                           : Phase::dfs;
  if (st.sim == 1) return Phase::transmem;
  return st.sloc == 1 ? Phase::localcomp_dfs : Phase::dfs;
}

/// The full per-round dispatch. When the local computation yields a
/// terminating move (spout = -1) the step reports termination instead of
/// launching a search: the simulated agent stays put, so there is nothing
/// to transfer or move, and the configuration is already legal again.
inline SimStep simulator_transition(int degree, int p_in, SimNodeStorage st,
                                    const TransitionFunction& phi_star,
                                    SimMutation mut = SimMutation::none) {
  switch (classify_phase(p_in, st)) {
    case Phase::movereset:
      return move_reset(p_in, std::move(st));
    case Phase::cleanup:
      return clean_up(degree, p_in, std::move(st), mut);
    case Phase::transmem:
      return trans_mem(p_in, std::move(st), mut);
    case Phase::dfs:
      return dfs_step(degree, p_in, std::move(st), mut);
    case Phase::localcomp_dfs: {
      st = local_comp(degree, std::move(st), phi_star);
      if (st.spout == kTerminate) return {kTerminate, std::move(st)};
      return dfs_step(degree, p_in, std::move(st), mut);
    }
    case Phase::none:
      break;
  }
  fail(Errc::unreachable_state, "dispatch matched no phase");
}

/// Packages the oblivious simulator of `a_star` as an ordinary algorithm:
/// zero memory bits, storage per `codec`, and the dispatch as transition.
inline OneBitAlgorithm make_simulator(const OneBitAlgorithm& a_star,
                                      const SimStorageCodec& codec,
                                      SimMutation mut = SimMutation::none) {
  if (a_star.storage_width != codec.lambda_star())
    fail(Errc::bad_argument, "codec payload width does not match the algorithm");
  OneBitAlgorithm sim;
  sim.name = "sim(" + a_star.name + ")";
  sim.memory_width = 0;
  sim.storage_width = codec.width();
  sim.init_mem = 0;
  sim.init_storage = codec.encode(initial_storage(a_star, false));
  sim.init_storage_start = codec.encode(initial_storage(a_star, true));
  sim.init_location = a_star.init_location;
  TransitionFunction phi_star = a_star.phi;
  sim.phi = [codec, phi_star, mut](int degree, int p_in, const BitString& storage,
                                   int mem) -> PhiResult {
    (void)mem;  // the engine pins it to 0
    SimStep s = simulator_transition(degree, p_in, codec.decode(storage),
                                     phi_star, mut);
    return {s.out_port, codec.encode(s.st), 0};
  };
  return sim;
}

/// Worst-case rounds one simulated round may cost: two search passes over
/// every edge in both directions, two cycle circulations, and the hand-off
/// move.
inline long overhead_bound(const PortGraph& g) {
  return 8 * g.edge_count() + 2 * g.node_count() + 2;
}

/// Runs the simulator until it has produced sim_rounds+1 legal
/// configurations (the initial one plus one per simulated round), the
/// simulated algorithm halts, or round_cap rounds elapse (defaults to the
/// per-round bound times the requested rounds — unreachable unless the
/// simulator is defective, which mutants deliberately are).
inline Trace run_simulator(const PortGraph& g, const OneBitAlgorithm& a_star,
                           long sim_rounds, SimMutation mut = SimMutation::none,
                           bool checkpoint_only = false, long round_cap = -1) {
  if (!is_two_edge_connected(g))
    fail(Errc::bad_argument, "simulator requires a 2-edge-connected graph");
  if (sim_rounds < 0) fail(Errc::bad_argument, "negative simulated round count");
  SimStorageCodec codec(a_star.storage_width, g.max_degree());
  OneBitAlgorithm sim = make_simulator(a_star, codec, mut);
  if (round_cap < 0) round_cap = (sim_rounds + 1) * overhead_bound(g) + 1;
  FlagsDecoder flags = codec.flags_decoder();
  const long want = sim_rounds + 1;
  ExecHooks hooks;
  hooks.classify = [codec](const Configuration& c) {
    return classify_phase(c.entry_port, codec.decode(c.storages[c.location]));
  };
  hooks.checkpoint = [flags](const Configuration& c) { return is_legal(c, flags); };
  hooks.stop = [want](long, long checkpoints, bool) { return checkpoints >= want; };
  Trace t = execute(g, sim, round_cap, &hooks, checkpoint_only);
  t.engine = "simulator";
  t.lambda_star = codec.lambda_star();
  t.port_bits = codec.port_bits();
  return t;
}

}  // namespace agentsim
