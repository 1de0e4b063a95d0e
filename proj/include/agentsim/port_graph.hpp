#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/errors.hpp"
#include "agentsim/rng.hpp"

namespace agentsim {

/// Undirected simple graph with local port numbering: node i sees its
/// degree(i) incident edges through ports 0..degree(i)-1, and port p of
/// node i leads to node ports_[i][p]. Nodes carry no identifiers that an
/// agent could read; everything an algorithm observes is degrees and ports.
class PortGraph {
 public:
  PortGraph() = default;

  /// Builds and validates a graph from per-node port lists. Rejects
  /// self-loops, repeated neighbors (parallel edges), out-of-range node ids
  /// and asymmetric edges (j listed by i but not i by j).
  static PortGraph from_port_lists(std::vector<std::vector<int>> ports) {
    const int n = static_cast<int>(ports.size());
    for (int i = 0; i < n; ++i) {
      std::vector<int> seen = ports[i];
      std::sort(seen.begin(), seen.end());
      for (std::size_t p = 0; p < ports[i].size(); ++p) {
        int j = ports[i][p];
        if (j < 0 || j >= n)
          fail(Errc::out_of_range_port,
               "node " + std::to_string(i) + " port " + std::to_string(p) +
                   " names node " + std::to_string(j) + " outside 0.." +
                   std::to_string(n - 1));
        if (j == i)
          fail(Errc::self_loop, "node " + std::to_string(i) + " port " +
                                    std::to_string(p) + " is a self-loop");
      }
      for (std::size_t k = 1; k < seen.size(); ++k)
        if (seen[k] == seen[k - 1])
          fail(Errc::duplicate_port,
               "node " + std::to_string(i) + " lists neighbor " +
                   std::to_string(seen[k]) + " more than once");
    }
    PortGraph g;
    g.ports_ = std::move(ports);
    g.build_inverse();
    for (int i = 0; i < n; ++i)
      for (std::size_t p = 0; p < g.ports_[i].size(); ++p) {
        int j = g.ports_[i][p];
        if (g.find_port(j, i) < 0)
          fail(Errc::asymmetric_edge,
               "node " + std::to_string(i) + " lists " + std::to_string(j) +
                   " but not vice versa");
      }
    return g;
  }

  int node_count() const { return static_cast<int>(ports_.size()); }

  int degree(int i) const {
    check_node(i);
    return static_cast<int>(ports_[i].size());
  }

  int max_degree() const {
    int d = 0;
    for (const auto& p : ports_) d = std::max(d, static_cast<int>(p.size()));
    return d;
  }

  long edge_count() const {
    long total = 0;
    for (const auto& p : ports_) total += static_cast<long>(p.size());
    return total / 2;
  }

  /// pi_i(p): the neighbor reached from node i through port p.
  int port(int i, int p) const {
    check_node(i);
    if (p < 0 || p >= static_cast<int>(ports_[i].size()))
      fail(Errc::out_of_range_port,
           "node " + std::to_string(i) + " has no port " + std::to_string(p));
    return ports_[i][p];
  }

  /// pi_i^{-1}(j): the port of node i that leads to neighbor j.
  int inverse_port(int i, int j) const {
    check_node(i);
    int p = find_port(i, j);
    if (p < 0)
      fail(Errc::not_a_neighbor, "node " + std::to_string(j) +
                                     " is not a neighbor of node " +
                                     std::to_string(i));
    return p;
  }

  const std::vector<int>& ports_of(int i) const {
    check_node(i);
    return ports_[i];
  }

  /// All edges as (u, w) pairs with u < w, sorted.
  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < node_count(); ++i)
      for (int j : ports_[i])
        if (i < j) e.emplace_back(i, j);
    std::sort(e.begin(), e.end());
    return e;
  }

  friend bool operator==(const PortGraph& a, const PortGraph& b) {
    return a.ports_ == b.ports_;
  }
  friend bool operator!=(const PortGraph& a, const PortGraph& b) {
    return !(a == b);
  }

 private:
  void check_node(int i) const {
    if (i < 0 || i >= node_count())
      fail(Errc::bad_argument, "node " + std::to_string(i) + " out of range");
  }

  int find_port(int i, int j) const {
    const auto& inv = inv_[i];
    auto it = std::lower_bound(inv.begin(), inv.end(), std::pair<int, int>{j, -1});
    if (it != inv.end() && it->first == j) return it->second;
    return -1;
  }

  void build_inverse() {
    inv_.assign(ports_.size(), {});
    for (std::size_t i = 0; i < ports_.size(); ++i) {
      inv_[i].reserve(ports_[i].size());
      for (std::size_t p = 0; p < ports_[i].size(); ++p)
        inv_[i].emplace_back(ports_[i][p], static_cast<int>(p));
      std::sort(inv_[i].begin(), inv_[i].end());
    }
  }

  std::vector<std::vector<int>> ports_;
  std::vector<std::vector<std::pair<int, int>>> inv_;  // (neighbor, port), sorted
};

/// True when the graph is connected and has no bridge, i.e. removing any
/// single edge leaves it connected. Iterative lowpoint search; the brute
/// per-edge oracle lives in oracle.hpp and is kept implementation-disjoint
/// on purpose.
inline bool is_two_edge_connected(const PortGraph& g) {
  const int n = g.node_count();
  if (n == 0) return false;
  std::vector<int> disc(n, -1), low(n, 0);
  struct Frame {
    int node;
    int parent;
    int next_port;
  };
  std::vector<Frame> stack;
  int timer = 0;
  disc[0] = low[0] = timer++;
  stack.push_back({0, -1, 0});
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_port < g.degree(f.node)) {
      int w = g.port(f.node, f.next_port);
      ++f.next_port;
      if (w == f.parent) continue;  // simple graph: the unique tree edge
      if (disc[w] == -1) {
        disc[w] = low[w] = timer++;
        stack.push_back({w, f.node, 0});
      } else {
        low[f.node] = std::min(low[f.node], disc[w]);
      }
    } else {
      Frame done = f;
      stack.pop_back();
      if (done.parent >= 0) {
        if (low[done.node] > disc[done.parent]) return false;  // bridge
        low[done.parent] = std::min(low[done.parent], low[done.node]);
      }
    }
  }
  return timer == n;  // connected
}

enum class CycleScheme { oriented, scrambled };

/// Cycle on n >= 3 nodes. Oriented: every node's port 0 points clockwise
/// (to node i+1 mod n) and port 1 counter-clockwise. Scrambled: each node
/// flips its two ports by an independent seeded coin.
inline PortGraph generate_cycle(int n, CycleScheme scheme,
                                std::uint64_t seed = 0) {
  if (n < 3) fail(Errc::bad_argument, "cycle needs n >= 3");
  std::vector<std::vector<int>> ports(n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    int cw = (i + 1) % n;
    int ccw = (i + n - 1) % n;
    ports[i] = {cw, ccw};
    if (scheme == CycleScheme::scrambled && rng.coin())
      std::swap(ports[i][0], ports[i][1]);
  }
  return PortGraph::from_port_lists(std::move(ports));
}

/// Complete graph on n >= 3 nodes; node i's port p leads to the p-th other
/// node in increasing id order.
inline PortGraph generate_complete(int n) {
  if (n < 3) fail(Errc::bad_argument, "complete graph needs n >= 3");
  std::vector<std::vector<int>> ports(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (j != i) ports[i].push_back(j);
  return PortGraph::from_port_lists(std::move(ports));
}

/// The Petersen graph (3-regular, 10 nodes): outer 5-cycle 0..4, inner
/// pentagram 5..9, spokes i -- i+5.
inline PortGraph generate_petersen() {
  std::vector<std::vector<int>> ports(10);
  for (int i = 0; i < 5; ++i)
    ports[i] = {(i + 1) % 5, (i + 4) % 5, i + 5};
  for (int i = 0; i < 5; ++i)
    ports[i + 5] = {5 + (i + 2) % 5, 5 + (i + 3) % 5, i};
  return PortGraph::from_port_lists(std::move(ports));
}

/// Random 2-edge-connected graph built by ear decomposition: a seeded random
/// cycle through 3..n of the nodes, then open ears absorbing the remaining
/// nodes, then `extra_ears` chords between non-adjacent nodes. Port numbers
/// are shuffled per node at the end. Identical (n, extra_ears, seed) inputs
/// yield identical graphs.
inline PortGraph generate_random_2ec(int n, int extra_ears,
                                     std::uint64_t seed) {
  if (n < 3) fail(Errc::bad_argument, "generate_random_2ec needs n >= 3");
  if (extra_ears < 0)
    fail(Errc::bad_argument, "generate_random_2ec: extra_ears < 0");
  Rng rng(seed);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  std::vector<std::vector<int>> ports(n);
  auto adjacent = [&](int u, int w) {
    return std::find(ports[u].begin(), ports[u].end(), w) != ports[u].end();
  };
  auto add_edge = [&](int u, int w) {
    ports[u].push_back(w);
    ports[w].push_back(u);
  };

  int cycle_len = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 2)));
  for (int k = 0; k < cycle_len; ++k)
    add_edge(order[k], order[(k + 1) % cycle_len]);

  int used = cycle_len;
  while (used < n) {
    int ear_len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - used)));
    int u = order[rng.below_int(used)];
    int w = u;
    while (w == u) w = order[rng.below_int(used)];
    int prev = u;
    for (int k = 0; k < ear_len; ++k) {
      add_edge(prev, order[used + k]);
      prev = order[used + k];
    }
    add_edge(prev, w);
    used += ear_len;
  }

  long port_total = 0;
  for (const auto& p : ports) port_total += static_cast<long>(p.size());
  long capacity = static_cast<long>(n) * (n - 1) / 2 - port_total / 2;
  if (extra_ears > capacity)
    fail(Errc::infeasible, "generate_random_2ec: " + std::to_string(extra_ears) +
                               " extra ears exceed " + std::to_string(capacity) +
                               " available node pairs");
  for (int k = 0; k < extra_ears; ++k) {
    int u, w;
    do {
      u = rng.below_int(n);
      w = rng.below_int(n);
    } while (u == w || adjacent(u, w));
    add_edge(u, w);
  }

  for (auto& p : ports) rng.shuffle(p);
  return PortGraph::from_port_lists(std::move(ports));
}

/// Text format: optional '#' comments and blank lines, then the node count,
/// then one line per node listing its ports' neighbor ids in port order.
inline PortGraph read_graph(std::istream& in) {
  std::vector<std::string> lines;
  std::string raw;
  while (std::getline(in, raw)) {
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    bool blank = raw.find_first_not_of(" \t\r") == std::string::npos;
    if (!blank) lines.push_back(raw);
  }
  if (lines.empty()) fail(Errc::bad_graph_file, "graph file is empty");
  std::istringstream head(lines[0]);
  int n = -1;
  if (!(head >> n) || n < 0)
    fail(Errc::bad_graph_file, "graph file: bad node count line '" + lines[0] + "'");
  std::string extra;
  if (head >> extra)
    fail(Errc::bad_graph_file, "graph file: trailing tokens after node count");
  if (static_cast<int>(lines.size()) - 1 != n)
    fail(Errc::bad_graph_file,
         "graph file: expected " + std::to_string(n) + " port lines, found " +
             std::to_string(lines.size() - 1));
  std::vector<std::vector<int>> ports(n);
  for (int i = 0; i < n; ++i) {
    std::istringstream row(lines[i + 1]);
    int j;
    while (row >> j) ports[i].push_back(j);
    if (!row.eof())
      fail(Errc::bad_graph_file,
           "graph file: non-numeric token in port line for node " + std::to_string(i));
  }
  return PortGraph::from_port_lists(std::move(ports));
}

inline void write_graph(std::ostream& out, const PortGraph& g) {
  out << g.node_count() << "\n";
  for (int i = 0; i < g.node_count(); ++i) {
    const auto& p = g.ports_of(i);
    for (std::size_t k = 0; k < p.size(); ++k)
      out << (k ? " " : "") << p[k];
    out << "\n";
  }
}

inline PortGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open graph file " + path);
  return read_graph(in);
}

inline void save_graph(const std::string& path, const PortGraph& g) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write graph file " + path);
  write_graph(out, g);
}

/// Graphviz rendering with port numbers as tail/head labels. Edges listed
/// in `highlight` (as unordered node pairs) are drawn bold red — used by the
/// CLI to show the tree cycle a simulation circulates on.
inline std::string to_dot(const PortGraph& g,
                          const std::vector<std::pair<int, int>>& highlight = {}) {
  auto wanted = highlight;
  for (auto& e : wanted)
    if (e.first > e.second) std::swap(e.first, e.second);
  std::sort(wanted.begin(), wanted.end());
  std::ostringstream out;
  out << "graph G {\n  node [shape=circle];\n";
  for (auto [u, w] : g.edges()) {
    out << "  " << u << " -- " << w << " [taillabel=\"" << g.inverse_port(u, w)
        << "\", headlabel=\"" << g.inverse_port(w, u) << "\"";
    if (std::binary_search(wanted.begin(), wanted.end(), std::make_pair(u, w)))
      out << ", color=red, penwidth=2.5";
    out << "];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace agentsim
