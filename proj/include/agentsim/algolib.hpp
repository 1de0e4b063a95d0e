#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>

#include "agentsim/agent_core.hpp"
#include "agentsim/bits.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/rng.hpp"

namespace agentsim {

struct TableKey {
  int degree = 1;
  int entry_port = -1;
  std::uint64_t storage = 0;
  int mem = 0;

  friend bool operator<(const TableKey& a, const TableKey& b) {
    return std::tie(a.degree, a.entry_port, a.storage, a.mem) <
           std::tie(b.degree, b.entry_port, b.storage, b.mem);
  }
  friend bool operator==(const TableKey& a, const TableKey& b) {
    return std::tie(a.degree, a.entry_port, a.storage, a.mem) ==
           std::tie(b.degree, b.entry_port, b.storage, b.mem);
  }
};

struct TableRow {
  int out_port = kTerminate;
  std::uint64_t storage = 0;
  int mem = 0;

  friend bool operator==(const TableRow& a, const TableRow& b) {
    return a.out_port == b.out_port && a.storage == b.storage && a.mem == b.mem;
  }
};

enum class MissingRowPolicy { reject, terminate };

/// Finite tabulated transition function: rows keyed by (degree, entry port,
/// storage value, memory bit). Payload widths are capped at 8 bits so the
/// key domain stays enumerable. Missing rows either raise an error or read
/// as "terminate in place", per policy.
class TransitionTable {
 public:
  TransitionTable(int lambda_star, int max_degree,
                  MissingRowPolicy policy = MissingRowPolicy::reject)
      : lambda_star_(lambda_star), max_degree_(max_degree), policy_(policy) {
    if (lambda_star < 0 || lambda_star > 8)
      fail(Errc::bad_argument, "table payload width must be in [0, 8]");
    if (max_degree < 1) fail(Errc::bad_argument, "table max degree must be >= 1");
    init_storage = BitString(lambda_star);
    init_storage_start = BitString(lambda_star);
  }

  int lambda_star() const { return lambda_star_; }
  int max_degree() const { return max_degree_; }
  MissingRowPolicy policy() const { return policy_; }
  const std::map<TableKey, TableRow>& rows() const { return rows_; }

  void set_row(const TableKey& key, const TableRow& row) {
    if (key.degree < 1 || key.degree > max_degree_)
      fail(Errc::bad_argument, "table row degree " + std::to_string(key.degree) +
                                   " outside [1, " + std::to_string(max_degree_) + "]");
    if (key.entry_port < -1 || key.entry_port >= key.degree)
      fail(Errc::bad_argument, "table row entry port " +
                                   std::to_string(key.entry_port) +
                                   " invalid for degree " + std::to_string(key.degree));
    if (key.storage >= (std::uint64_t{1} << lambda_star_))
      fail(Errc::bad_argument, "table row storage value out of range");
    if (key.mem != 0 && key.mem != 1)
      fail(Errc::bad_argument, "table row memory bit out of range");
    if (row.out_port < kTerminate || row.out_port >= key.degree)
      fail(Errc::bad_argument, "table row out port " + std::to_string(row.out_port) +
                                   " invalid for degree " + std::to_string(key.degree));
    if (row.storage >= (std::uint64_t{1} << lambda_star_))
      fail(Errc::bad_argument, "table row output storage out of range");
    if (row.mem != 0 && row.mem != 1)
      fail(Errc::bad_argument, "table row output memory bit out of range");
    rows_[key] = row;
  }

  const TableRow* find(const TableKey& key) const {
    auto it = rows_.find(key);
    return it == rows_.end() ? nullptr : &it->second;
  }

  PhiResult evaluate(int degree, int entry_port, const BitString& storage,
                     int mem) const {
    if (degree > max_degree_)
      fail(Errc::table_lookup, "degree " + std::to_string(degree) +
                                   " exceeds the table's max degree " +
                                   std::to_string(max_degree_));
    if (static_cast<int>(storage.size()) != lambda_star_)
      fail(Errc::table_lookup, "storage width " + std::to_string(storage.size()) +
                                   " does not match the table's " +
                                   std::to_string(lambda_star_));
    TableKey key{degree, entry_port, storage.to_uint(), mem};
    if (const TableRow* row = find(key))
      return {row->out_port, BitString::from_uint(row->storage, lambda_star_),
              row->mem};
    if (policy_ == MissingRowPolicy::terminate)
      return {kTerminate, storage, mem};
    fail(Errc::table_lookup, "no row for degree " + std::to_string(degree) +
                                 ", entry " + std::to_string(entry_port) +
                                 ", storage " + std::to_string(key.storage) +
                                 ", mem " + std::to_string(mem));
  }

  friend bool operator==(const TransitionTable& a, const TransitionTable& b) {
    return a.lambda_star_ == b.lambda_star_ && a.max_degree_ == b.max_degree_ &&
           a.policy_ == b.policy_ && a.init_mem == b.init_mem &&
           a.init_storage == b.init_storage &&
           a.init_storage_start == b.init_storage_start && a.rows_ == b.rows_;
  }

  int init_mem = 0;
  BitString init_storage;
  BitString init_storage_start;

 private:
  int lambda_star_;
  int max_degree_;
  MissingRowPolicy policy_;
  std::map<TableKey, TableRow> rows_;
};

/// Wraps a table as a runnable algorithm; the table is shared, immutable.
inline OneBitAlgorithm table_algorithm(std::shared_ptr<const TransitionTable> table,
                                       std::string name) {
  if (!table) fail(Errc::bad_argument, "table_algorithm: null table");
  OneBitAlgorithm a;
  a.name = std::move(name);
  a.memory_width = 1;
  a.storage_width = table->lambda_star();
  a.init_mem = table->init_mem;
  a.init_storage = table->init_storage;
  a.init_storage_start = table->init_storage_start;
  a.phi = [table](int degree, int entry_port, const BitString& storage, int mem) {
    return table->evaluate(degree, entry_port, storage, mem);
  };
  return a;
}

/// Relay workload: with memory 0 the agent exits port 0 and picks up the
/// current node's bit into memory; with memory 1 it exits port 1 and flips
/// the node's bit. The start node begins with bit 1, everything else 0, so
/// the carried bit and the storage pattern keep changing. Never terminates;
/// meant for graphs with all degrees >= 2.
inline OneBitAlgorithm flip_flop_messenger() {
  OneBitAlgorithm a;
  a.name = "flipflop";
  a.memory_width = 1;
  a.storage_width = 1;
  a.init_mem = 0;
  a.init_storage = BitString::from_uint(0, 1);
  a.init_storage_start = BitString::from_uint(1, 1);
  a.phi = [](int degree, int entry_port, const BitString& storage,
             int mem) -> PhiResult {
    (void)entry_port;
    (void)degree;
    if (mem == 0) return {0, storage, storage.bit(0)};
    BitString flipped = storage;
    flipped.set_bit(0, 1 - storage.bit(0));
    return {1, flipped, 1};
  };
  return a;
}

/// Depth-first exploration workload: each node's storage records a visited
/// flag, the parent port, and the next port to probe; the memory bit says
/// whether the agent is moving forward (0) or backtracking (1). Entering an
/// already-visited node forward bounces straight back. Once the start node
/// runs out of ports the agent pings its port-0 neighbor forever, so the
/// algorithm never terminates but visits every node of a connected graph.
/// The storage layout is sized for degrees up to max_degree.
inline OneBitAlgorithm one_bit_explorer(int max_degree) {
  if (max_degree < 1) fail(Errc::bad_argument, "explorer needs max degree >= 1");
  int bits = 1;
  while ((1 << bits) < max_degree + 1) ++bits;  // holds values 0..max_degree
  const int B = bits;
  const int width = 1 + 2 * B;

  OneBitAlgorithm a;
  a.name = "explorer(" + std::to_string(max_degree) + ")";
  a.memory_width = 1;
  a.storage_width = width;
  a.init_mem = 0;
  a.init_storage = BitString(width);
  a.init_storage_start = BitString(width);

  auto get = [B](const BitString& s, int offset) {
    unsigned v = 0;
    for (int i = 0; i < B; ++i)
      if (s.bit(offset + i)) v |= 1u << i;
    return static_cast<int>(v);
  };
  auto put = [B](BitString& s, int offset, int value) {
    for (int i = 0; i < B; ++i)
      s.set_bit(offset + i, (value >> i) & 1);
  };

  a.phi = [=](int degree, int entry_port, const BitString& storage,
              int mem) -> PhiResult {
    if (degree > max_degree)
      fail(Errc::bad_argument, "explorer sized for max degree " +
                                   std::to_string(max_degree) + " met degree " +
                                   std::to_string(degree));
    int visited = storage.bit(0);
    int par = get(storage, 1) - 1;  // stored shifted; -1 marks the root
    int cld = get(storage, 1 + B);
    // A parent port beyond this node's degree can only come from a foreign
    // storage value (no run writes one); clamp so every answer is a real port
    // and the workload stays tabulable.
    if (par >= degree) par = degree - 1;

    if (mem == 0 && visited) return {entry_port, storage, 1};  // bounce back

    BitString s = storage;
    if (mem == 0) {  // first arrival: adopt parent, start probing
      s.set_bit(0, 1);
      par = entry_port;
      put(s, 1, par + 1);
      cld = 0;
    }
    if (cld == par) ++cld;
    if (cld >= degree) {
      put(s, 1 + B, cld);
      if (par < 0) return {0, s, 0};  // root exhausted: idle ping
      return {par, s, 1};             // backtrack
    }
    const int out = cld;
    put(s, 1 + B, cld + 1);
    return {out, s, 0};
  };
  return a;
}

/// Seeded random transition table covering the whole key domain for degrees
/// 1..max_degree. About one row in sixteen terminates, so some fuzz
/// workloads halt. The start node's payload differs in bit 0 to give runs
/// a little initial asymmetry.
inline std::shared_ptr<const TransitionTable> random_table_data(std::uint64_t seed,
                                                                int lambda_star,
                                                                int max_degree) {
  auto table = std::make_shared<TransitionTable>(lambda_star, max_degree);
  Rng rng(seed);
  const std::uint64_t values = std::uint64_t{1} << lambda_star;
  for (int d = 1; d <= max_degree; ++d)
    for (int e = -1; e < d; ++e)
      for (std::uint64_t sv = 0; sv < values; ++sv)
        for (int m = 0; m <= 1; ++m) {
          TableRow row;
          row.out_port = (rng.below(16) == 0) ? kTerminate
                                              : static_cast<int>(rng.below(d));
          row.storage = rng.below(values);
          row.mem = static_cast<int>(rng.below(2));
          table->set_row({d, e, sv, m}, row);
        }
  table->init_mem = 0;
  table->init_storage = BitString(lambda_star);
  table->init_storage_start = BitString(lambda_star);
  if (lambda_star > 0) table->init_storage_start.set_bit(0, 1);
  return table;
}

inline OneBitAlgorithm random_table(std::uint64_t seed, int lambda_star,
                                    int max_degree) {
  return table_algorithm(random_table_data(seed, lambda_star, max_degree),
                         "random:" + std::to_string(seed) + ":" +
                             std::to_string(lambda_star) + ":" +
                             std::to_string(max_degree));
}

/// Tabulates a callback-backed algorithm over degrees [min_degree,
/// max_degree]. Used to check that table evaluation and direct evaluation
/// agree; min_degree lets callers skip degrees the algorithm is not meant
/// for.
inline std::shared_ptr<TransitionTable> tabulate(const OneBitAlgorithm& a,
                                                 int max_degree,
                                                 int min_degree = 1) {
  if (a.storage_width > 8)
    fail(Errc::bad_argument, "tabulate: payload too wide to enumerate");
  auto table = std::make_shared<TransitionTable>(a.storage_width, max_degree);
  table->init_mem = a.init_mem;
  table->init_storage = a.init_storage;
  table->init_storage_start = a.init_storage_start;
  const std::uint64_t values = std::uint64_t{1} << a.storage_width;
  for (int d = min_degree; d <= max_degree; ++d)
    for (int e = -1; e < d; ++e)
      for (std::uint64_t sv = 0; sv < values; ++sv)
        for (int m = 0; m <= (a.memory_width == 1 ? 1 : 0); ++m) {
          PhiResult r = a.phi(d, e, BitString::from_uint(sv, a.storage_width), m);
          table->set_row({d, e, sv, m},
                         {r.out_port, r.storage.to_uint(), r.mem});
        }
  return table;
}

// --- Table serialization -------------------------------------------------
//
//   agentsim-table v1
//   meta lambda_star=2 max_degree=4 policy=reject init_mem=0 \
//        init_storage=0 init_storage_start=1
//   2 -1 0 0 -> 0 3 1
//
// One row per line, '#' comments and blank lines allowed.

inline void save_table(std::ostream& out, const TransitionTable& t) {
  out << "agentsim-table v1\n";
  out << "meta lambda_star=" << t.lambda_star() << " max_degree=" << t.max_degree()
      << " policy="
      << (t.policy() == MissingRowPolicy::reject ? "reject" : "terminate")
      << " init_mem=" << t.init_mem << " init_storage=" << t.init_storage.to_hex()
      << " init_storage_start=" << t.init_storage_start.to_hex() << "\n";
  for (const auto& [key, row] : t.rows()) {
    out << key.degree << " " << key.entry_port << " "
        << BitString::from_uint(key.storage, t.lambda_star()).to_hex() << " "
        << key.mem << " -> " << row.out_port << " "
        << BitString::from_uint(row.storage, t.lambda_star()).to_hex() << " "
        << row.mem << "\n";
  }
}

inline TransitionTable load_table(std::istream& in) {
  std::string line;
  long line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  };
  auto parse_int = [&](const std::string& s, const char* what) -> long {
    try {
      std::size_t used = 0;
      long v = std::stol(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(Errc::parse_error, "table line " + std::to_string(line_no) + ": bad " +
                                  what + " '" + s + "'");
    }
  };

  if (!next_line())
    fail(Errc::parse_error, "table file is empty");
  if (line != "agentsim-table v1") {
    if (line.rfind("agentsim-table", 0) == 0)
      fail(Errc::version_mismatch, "unsupported table version: '" + line + "'");
    fail(Errc::parse_error, "table file: expected header 'agentsim-table v1'");
  }
  if (!next_line() || line.rfind("meta ", 0) != 0)
    fail(Errc::parse_error, "table file: missing meta line");

  int lambda_star = -1, max_degree = -1, init_mem = 0;
  MissingRowPolicy policy = MissingRowPolicy::reject;
  std::string init_storage_hex, init_start_hex;
  {
    std::istringstream meta(line.substr(5));
    std::string tok;
    while (meta >> tok) {
      auto eq = tok.find('=');
      if (eq == std::string::npos)
        fail(Errc::parse_error, "table line " + std::to_string(line_no) +
                                    ": bad meta token '" + tok + "'");
      std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
      if (k == "lambda_star")
        lambda_star = static_cast<int>(parse_int(v, "lambda_star"));
      else if (k == "max_degree")
        max_degree = static_cast<int>(parse_int(v, "max_degree"));
      else if (k == "policy") {
        if (v == "reject")
          policy = MissingRowPolicy::reject;
        else if (v == "terminate")
          policy = MissingRowPolicy::terminate;
        else
          fail(Errc::parse_error, "table line " + std::to_string(line_no) +
                                      ": unknown policy '" + v + "'");
      } else if (k == "init_mem")
        init_mem = static_cast<int>(parse_int(v, "init_mem"));
      else if (k == "init_storage")
        init_storage_hex = v;
      else if (k == "init_storage_start")
        init_start_hex = v;
      else
        fail(Errc::parse_error, "table line " + std::to_string(line_no) +
                                    ": unknown meta key '" + k + "'");
    }
  }
  if (lambda_star < 0 || max_degree < 1)
    fail(Errc::parse_error, "table file: meta must set lambda_star and max_degree");

  TransitionTable t(lambda_star, max_degree, policy);
  t.init_mem = init_mem;
  t.init_storage = BitString::from_hex(init_storage_hex, lambda_star);
  t.init_storage_start = BitString::from_hex(init_start_hex, lambda_star);

  while (next_line()) {
    std::istringstream row(line);
    std::string d, e, sv, m, arrow, o, sv2, m2;
    if (!(row >> d >> e >> sv >> m >> arrow >> o >> sv2 >> m2) || arrow != "->")
      fail(Errc::parse_error,
           "table line " + std::to_string(line_no) + ": expected "
           "'degree entry storage mem -> out storage mem'");
    std::string extra;
    if (row >> extra)
      fail(Errc::parse_error, "table line " + std::to_string(line_no) +
                                  ": trailing token '" + extra + "'");
    TableKey key{static_cast<int>(parse_int(d, "degree")),
                 static_cast<int>(parse_int(e, "entry port")),
                 BitString::from_hex(sv, lambda_star).to_uint(),
                 static_cast<int>(parse_int(m, "memory bit"))};
    TableRow r{static_cast<int>(parse_int(o, "out port")),
               BitString::from_hex(sv2, lambda_star).to_uint(),
               static_cast<int>(parse_int(m2, "memory bit"))};
    if (t.find(key))
      fail(Errc::parse_error,
           "table line " + std::to_string(line_no) + ": duplicate row");
    try {
      t.set_row(key, r);
    } catch (const Error& err) {
      fail(Errc::parse_error,
           "table line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return t;
}

inline void save_table(const std::string& path, const TransitionTable& t) {
  std::ofstream out(path);
  if (!out) fail(Errc::io_error, "cannot write table file " + path);
  save_table(out, t);
}

inline TransitionTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io_error, "cannot open table file " + path);
  return load_table(in);
}

}  // namespace agentsim
