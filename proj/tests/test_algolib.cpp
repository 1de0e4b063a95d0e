#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "agentsim/agentsim.hpp"
#include "test_util.hpp"

using namespace agentsim;
using testutil::HasCode;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kSmallTable =
    "agentsim-table v1\n"
    "# tiny hand-written workload\n"
    "meta lambda_star=1 max_degree=2 policy=terminate init_mem=1"
    " init_storage=0 init_storage_start=1\n"
    "\n"
    "2 -1 1 1 -> 1 1 0   # first move\n"
    "2 0 0 0 -> 0 1 1\n";

std::string table_text(const TransitionTable& t) {
  std::ostringstream out;
  save_table(out, t);
  return out.str();
}

TransitionTable table_from(const std::string& text) {
  std::istringstream in(text);
  return load_table(in);
}

}  // namespace

TEST_CASE("transition tables") {
  SECTION("row validation") {
    TransitionTable t(2, 3);
    REQUIRE_NOTHROW(t.set_row({3, -1, 3, 1}, {2, 0, 0}));
    REQUIRE_NOTHROW(t.set_row({1, 0, 0, 0}, {kTerminate, 1, 1}));
    REQUIRE_THROWS_MATCHES(t.set_row({0, -1, 0, 0}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({4, -1, 0, 0}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, -2, 0, 0}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 2, 0, 0}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 4, 0}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 0, 2}, {0, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 0, 0}, {-2, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 0, 0}, {2, 0, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 0, 0}, {0, 4, 0}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(t.set_row({2, 0, 0, 0}, {0, 0, 2}), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(TransitionTable(9, 2), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(TransitionTable(1, 0), Error,
                           HasCode(Errc::bad_argument));
  }

  SECTION("evaluation and missing-row policies") {
    TransitionTable t(1, 2);
    t.set_row({2, -1, 1, 0}, {1, 0, 1});
    PhiResult r = t.evaluate(2, -1, BitString::from_uint(1, 1), 0);
    REQUIRE(r.out_port == 1);
    REQUIRE(r.storage == BitString::from_uint(0, 1));
    REQUIRE(r.mem == 1);
    REQUIRE_THROWS_MATCHES(t.evaluate(3, 0, BitString(1), 0), Error,
                           HasCode(Errc::table_lookup));
    REQUIRE_THROWS_MATCHES(t.evaluate(2, 0, BitString(2), 0), Error,
                           HasCode(Errc::table_lookup));
    REQUIRE_THROWS_MATCHES(t.evaluate(2, 0, BitString(1), 0), Error,
                           HasCode(Errc::table_lookup));

    TransitionTable lenient(1, 2, MissingRowPolicy::terminate);
    PhiResult halt = lenient.evaluate(2, 0, BitString::from_uint(1, 1), 1);
    REQUIRE(halt.out_port == kTerminate);
    REQUIRE(halt.storage == BitString::from_uint(1, 1));
    REQUIRE(halt.mem == 1);
  }

  SECTION("a table becomes a runnable algorithm") {
    auto data = std::make_shared<TransitionTable>(1, 2);
    data->init_mem = 1;
    data->init_storage_start = BitString::from_uint(1, 1);
    data->set_row({2, -1, 1, 1}, {0, 1, 0});
    OneBitAlgorithm a = table_algorithm(data, "tiny");
    REQUIRE(a.name == "tiny");
    REQUIRE(a.storage_width == 1);
    REQUIRE(a.init_mem == 1);
    REQUIRE(a.init_storage_start == BitString::from_uint(1, 1));
    PhiResult r = a.phi(2, -1, BitString::from_uint(1, 1), 1);
    REQUIRE(r.out_port == 0);
    REQUIRE_THROWS_MATCHES(table_algorithm(nullptr, "null"), Error,
                           HasCode(Errc::bad_argument));
  }
}

TEST_CASE("relay workload") {
  OneBitAlgorithm a = flip_flop_messenger();

  SECTION("transition function, case by case") {
    BitString zero = BitString::from_uint(0, 1), one = BitString::from_uint(1, 1);
    PhiResult r = a.phi(2, -1, one, 0);  // pick up the bit, leave through 0
    REQUIRE(r.out_port == 0);
    REQUIRE(r.storage == one);
    REQUIRE(r.mem == 1);
    r = a.phi(2, 0, zero, 0);
    REQUIRE(r.out_port == 0);
    REQUIRE(r.mem == 0);
    r = a.phi(2, 1, zero, 1);  // carrying a 1: flip the node, leave through 1
    REQUIRE(r.out_port == 1);
    REQUIRE(r.storage == one);
    REQUIRE(r.mem == 1);
    r = a.phi(2, 1, one, 1);
    REQUIRE(r.storage == zero);
  }

  SECTION("first rounds on the oriented triangle, by hand") {
    Trace t = execute(testutil::c3(), a, 4);
    std::vector<int> locations, mems, entries;
    for (const auto& e : t.entries) {
      locations.push_back(e.config.location);
      mems.push_back(e.config.mem);
      entries.push_back(e.config.entry_port);
    }
    REQUIRE(locations == std::vector<int>{0, 1, 0, 2, 1});
    REQUIRE(mems == std::vector<int>{0, 1, 1, 1, 1});
    REQUIRE(entries == std::vector<int>{-1, 1, 0, 0, 0});
    REQUIRE(t.entries.back().config.storages[0] == BitString::from_uint(0, 1));
    REQUIRE(t.entries.back().config.storages[1] == BitString::from_uint(1, 1));
    REQUIRE(t.entries.back().config.storages[2] == BitString::from_uint(1, 1));
  }

  SECTION("never terminates on all-degree-two graphs") {
    Trace t = execute(testutil::c3(), a, 50);
    REQUIRE_FALSE(t.terminated);
    REQUIRE(t.rounds == 50);
  }

  SECTION("demands a second port eventually") {
    PortGraph path2 = PortGraph::from_port_lists({{1}, {0}});
    REQUIRE_THROWS_MATCHES(execute(path2, a, 5), Error,
                           HasCode(Errc::phi_range));
  }
}

TEST_CASE("exploration workload") {
  SECTION("visits every node of each test graph") {
    for (const PortGraph& g : {testutil::c3(), testutil::k4(),
                               generate_petersen(),
                               generate_cycle(8, CycleScheme::scrambled, 5)}) {
      OneBitAlgorithm a = one_bit_explorer(g.max_degree());
      Trace t = execute(g, a, 4 * static_cast<long>(g.edge_count()));
      REQUIRE_FALSE(t.terminated);
      std::set<int> seen;
      for (const auto& e : t.entries) seen.insert(e.config.location);
      REQUIRE(static_cast<int>(seen.size()) == g.node_count());
    }
  }

  SECTION("settles into pinging one neighbor forever") {
    PortGraph g = testutil::c3();
    Trace t = execute(g, one_bit_explorer(2), 40);
    const auto& e = t.entries;
    for (std::size_t k = e.size() - 6; k < e.size(); ++k)
      REQUIRE(e[k].config.location == (k % 2 == 0 ? 0 : 1));
  }

  SECTION("deterministic run to run") {
    PortGraph g = generate_petersen();
    OneBitAlgorithm a = one_bit_explorer(3);
    REQUIRE(execute(g, a, 30) == execute(g, a, 30));
  }

  SECTION("refuses degrees beyond its sizing") {
    REQUIRE_THROWS_MATCHES(one_bit_explorer(0), Error,
                           HasCode(Errc::bad_argument));
    REQUIRE_THROWS_MATCHES(execute(testutil::k4(), one_bit_explorer(2), 10),
                           Error, HasCode(Errc::bad_argument));
  }
}

TEST_CASE("seeded random tables") {
  SECTION("deterministic in the seed") {
    REQUIRE(*random_table_data(7, 2, 3) == *random_table_data(7, 2, 3));
    REQUIRE_FALSE(*random_table_data(7, 2, 3) == *random_table_data(8, 2, 3));
    OneBitAlgorithm a = random_table(7, 2, 3);
    REQUIRE(a.name == "random:7:2:3");
    PortGraph g = generate_petersen();
    REQUIRE(execute(g, a, 20) == execute(g, a, 20));
  }

  SECTION("covers the whole key domain, with a sane terminate fraction") {
    auto t = random_table_data(11, 3, 6);
    std::size_t expected = 0;
    for (int d = 1; d <= 6; ++d) expected += (d + 1) * 8 * 2;
    REQUIRE(t->rows().size() == expected);  // 432
    int halts = 0;
    for (const auto& [key, row] : t->rows())
      if (row.out_port == kTerminate) ++halts;
    REQUIRE(halts >= 10);  // one in sixteen on average: 27 of 432
    REQUIRE(halts <= 50);
    REQUIRE(t->init_storage_start.bit(0) == 1);
  }

  SECTION("some seeds halt and some roam") {
    PortGraph g = testutil::c3();
    int halted = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed)
      if (execute(g, random_table(seed, 1, 2), 30).terminated) ++halted;
    REQUIRE(halted > 0);
    REQUIRE(halted < 100);
  }
}

TEST_CASE("tabulation agrees with direct evaluation") {
  Rng rng(314);
  SECTION("relay workload, degrees two through four") {
    OneBitAlgorithm a = flip_flop_messenger();
    auto t = tabulate(a, 4, 2);
    REQUIRE(t->init_storage_start == a.init_storage_start);
    for (int trial = 0; trial < 5000; ++trial) {
      int d = 2 + rng.below_int(3);
      int e = rng.below_int(d + 1) - 1;
      BitString sv = BitString::from_uint(rng.below(2), 1);
      int m = rng.below_int(2);
      PhiResult direct = a.phi(d, e, sv, m);
      PhiResult viaTable = t->evaluate(d, e, sv, m);
      REQUIRE(direct.out_port == viaTable.out_port);
      REQUIRE(direct.storage == viaTable.storage);
      REQUIRE(direct.mem == viaTable.mem);
    }
  }
  SECTION("exploration workload, all degrees up to three") {
    OneBitAlgorithm a = one_bit_explorer(3);
    auto t = tabulate(a, 3);
    for (int trial = 0; trial < 5000; ++trial) {
      int d = 1 + rng.below_int(3);
      int e = rng.below_int(d + 1) - 1;
      BitString sv(a.storage_width);
      for (int i = 0; i < a.storage_width; ++i) sv.set_bit(i, rng.below_int(2));
      int m = rng.below_int(2);
      PhiResult direct = a.phi(d, e, sv, m);
      PhiResult viaTable = t->evaluate(d, e, sv, m);
      REQUIRE(direct.out_port == viaTable.out_port);
      REQUIRE(direct.storage == viaTable.storage);
      REQUIRE(direct.mem == viaTable.mem);
    }
  }
  SECTION("payloads beyond eight bits cannot be enumerated") {
    OneBitAlgorithm wide;
    wide.storage_width = 9;
    wide.phi = [](int, int, const BitString& s, int) -> PhiResult {
      return {0, s, 0};
    };
    REQUIRE_THROWS_MATCHES(tabulate(wide, 2), Error,
                           HasCode(Errc::bad_argument));
  }
}

TEST_CASE("table files") {
  SECTION("round trip through a stream") {
    auto t = random_table_data(7, 2, 3);
    TransitionTable back = table_from(table_text(*t));
    REQUIRE(back == *t);
  }

  SECTION("round trip through a file") {
    auto t = tabulate(flip_flop_messenger(), 3, 2);
    std::string path = "algolib_roundtrip.table";
    save_table(path, *t);
    TransitionTable back = load_table(path);
    REQUIRE(back == *t);
    std::remove(path.c_str());
    REQUIRE_THROWS_MATCHES(load_table(path), Error, HasCode(Errc::io_error));
  }

  SECTION("comments, blank lines and inline notes are accepted") {
    TransitionTable t = table_from(kSmallTable);
    REQUIRE(t.lambda_star() == 1);
    REQUIRE(t.max_degree() == 2);
    REQUIRE(t.policy() == MissingRowPolicy::terminate);
    REQUIRE(t.init_mem == 1);
    REQUIRE(t.init_storage_start == BitString::from_uint(1, 1));
    REQUIRE(t.rows().size() == 2);
    const TableRow* row = t.find({2, -1, 1, 1});
    REQUIRE(row != nullptr);
    REQUIRE(row->out_port == 1);
    REQUIRE(row->mem == 0);
  }

  SECTION("rejects damaged input") {
    auto expect = [](const std::string& text, Errc code) {
      std::istringstream in(text);
      REQUIRE_THROWS_MATCHES(load_table(in), Error, HasCode(code));
    };
    expect("", Errc::parse_error);
    expect("agentsim-table v2\nmeta lambda_star=1 max_degree=2\n",
           Errc::version_mismatch);
    expect("not a table\n", Errc::parse_error);
    expect("agentsim-table v1\n2 -1 0 0 -> 0 0 0\n", Errc::parse_error);
    expect("agentsim-table v1\nmeta lambda_star=1\n", Errc::parse_error);
    expect("agentsim-table v1\nmeta lambda_star=1 max_degree=2 typo=1\n",
           Errc::parse_error);
    expect("agentsim-table v1\nmeta lambda_star=1 max_degree=2 policy=maybe\n",
           Errc::parse_error);
    std::string meta =
        "agentsim-table v1\nmeta lambda_star=1 max_degree=2 init_storage=0"
        " init_storage_start=0\n";
    expect(meta + "2 -1 0 0 -> 0 0\n", Errc::parse_error);       // short row
    expect(meta + "2 -1 0 0 -> 0 0 0 9\n", Errc::parse_error);   // long row
    expect(meta + "2 -1 0 0 => 0 0 0\n", Errc::parse_error);     // bad arrow
    expect(meta + "2 -1 z 0 -> 0 0 0\n", Errc::parse_error);     // bad hex
    expect(meta + "2 -1 0 0 -> x 0 0\n", Errc::parse_error);     // bad int
    expect(meta + "2 -1 0 0 -> 5 0 0\n", Errc::parse_error);     // bad port
    expect(meta + "3 -1 0 0 -> 0 0 0\n", Errc::parse_error);     // bad degree
    expect(meta + "2 0 0 0 -> 0 0 0\n2 0 0 0 -> 1 0 0\n",
           Errc::parse_error);                                    // duplicate
  }

  SECTION("a loaded table runs like the built-in it was made from") {
    OneBitAlgorithm original = flip_flop_messenger();
    auto t = tabulate(original, 2, 2);
    TransitionTable back = table_from(table_text(*t));
    auto shared = std::make_shared<TransitionTable>(std::move(back));
    OneBitAlgorithm loaded = table_algorithm(shared, "loaded");
    PortGraph g = testutil::c3();
    Trace a = execute(g, original, 25);
    Trace b = execute(g, loaded, 25);
    for (std::size_t k = 0; k < a.entries.size(); ++k) {
      REQUIRE(a.entries[k].config.location == b.entries[k].config.location);
      REQUIRE(a.entries[k].config.mem == b.entries[k].config.mem);
      REQUIRE(a.entries[k].config.storages == b.entries[k].config.storages);
    }
  }
}
