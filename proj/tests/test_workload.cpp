#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "stmsched/workload.hpp"
#include "stmsched/workload_io.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace stmsched;

TEST_CASE("builtin workloads have the documented shape") {
  auto all = builtin_workloads();
  REQUIRE(all.size() == 3);

  for (const Workload& w : all) {
    REQUIRE(w.txn_count() == 5);
    REQUIRE(validate(w).empty());
    std::vector<Duration> durations;
    for (const auto& t : w.transactions) durations.push_back(t.duration);
    CHECK(durations == std::vector<Duration>{50, 10, 10, 10, 10});
    for (const auto& t : w.transactions) CHECK(t.vars.size() == 1);
  }

  CHECK(all[0].name == "CFW");
  CHECK(all[0].var_names == std::vector<std::string>{"A", "B", "C", "D", "E"});
  CHECK(all[1].name == "CW-1");
  CHECK(all[1].var_names == std::vector<std::string>{"A", "B", "C"});
  // CW-1 pairs: T0,T1 on A; T2,T3 on B; T4 on C.
  CHECK(all[1].transactions[0].vars == std::vector<VarId>{0});
  CHECK(all[1].transactions[1].vars == std::vector<VarId>{0});
  CHECK(all[1].transactions[2].vars == std::vector<VarId>{1});
  CHECK(all[1].transactions[3].vars == std::vector<VarId>{1});
  CHECK(all[1].transactions[4].vars == std::vector<VarId>{2});
  CHECK(all[2].name == "CW-2");
  CHECK(all[2].var_names == std::vector<std::string>{"A"});
}

TEST_CASE("workload name parsing accepts the usual spellings") {
  CHECK(parse_workload_name("CFW") == BuiltinWorkload::cfw);
  CHECK(parse_workload_name("cfw") == BuiltinWorkload::cfw);
  CHECK(parse_workload_name("CW-1") == BuiltinWorkload::cw1);
  CHECK(parse_workload_name("cw_1") == BuiltinWorkload::cw1);
  CHECK(parse_workload_name("CW2") == BuiltinWorkload::cw2);
  CHECK(parse_workload_name("cw 2") == BuiltinWorkload::cw2);
  CHECK_FALSE(parse_workload_name("CW-3").has_value());
  CHECK_FALSE(parse_workload_name("").has_value());
}

TEST_CASE("independent transaction count on the builtins") {
  CHECK(nit(builtin(BuiltinWorkload::cfw)) == 5);
  CHECK(nit(builtin(BuiltinWorkload::cw1)) == 3);
  CHECK(nit(builtin(BuiltinWorkload::cw2)) == 1);
}

TEST_CASE("independent transaction count matches brute force on random workloads") {
  std::mt19937 rng(20260815);
  for (int i = 0; i < 300; ++i) {
    Workload w = generators::random_workload(rng);
    INFO(emit_workload(w));
    CHECK(nit(w) == oracles::brute_force_nit(w));
  }
}

TEST_CASE("multi-variable nit is a real search, not a variable count") {
  // Two hub transactions block each other but each pair {hub, leaf} fits.
  Workload w;
  w.name = "hubs";
  w.var_names = {"A", "B", "C"};
  w.transactions = {
      {0, {0, 1}, 2},  // hub over A,B
      {1, {1, 2}, 2},  // hub over B,C
      {2, {0}, 1},
      {3, {2}, 1},
  };
  REQUIRE(validate(w).empty());
  // Best independent set: {T0?} no - T0 uses A, T2 uses A. {T1, T2}: B,C vs A ok -> 2.
  // {T2, T3}: A vs C -> 2. Adding any hub to {T2,T3} collides. So 2.
  CHECK(nit(w) == 2);
  CHECK(oracles::brute_force_nit(w) == 2);
}

TEST_CASE("validate reports each structural violation") {
  Workload w;
  w.name = "broken";
  w.var_names = {"A", "A"};
  w.transactions = {
      {1, {}, 0},         // wrong id, empty vars, zero duration
      {1, {5}, 3},        // unknown variable
      {2, {1, 0}, 3},     // unsorted variable list
  };
  auto problems = validate(w);
  REQUIRE_FALSE(problems.empty());
  auto has = [&](const std::string& needle) {
    return std::any_of(problems.begin(), problems.end(), [&](const std::string& p) {
      return p.find(needle) != std::string::npos;
    });
  };
  CHECK(has("non-dense transaction ids at record 0"));
  CHECK(has("empty variable set at record 0"));
  CHECK(has("non-positive duration at record 0"));
  CHECK(has("unknown t-variable at record 1"));
  CHECK(has("variable list not sorted/unique at record 2"));
  CHECK(has("duplicate variable names"));
}

TEST_CASE("workload JSON round-trips") {
  std::mt19937 rng(99);
  for (int i = 0; i < 50; ++i) {
    Workload w = generators::random_workload(rng);
    Workload back = parse_workload(emit_workload(w));
    CHECK(back == w);
  }
  for (const Workload& w : builtin_workloads()) {
    CHECK(parse_workload(emit_workload(w)) == w);
  }
}

TEST_CASE("workload parsing accepts minimal documents and derives variables") {
  Workload w = parse_workload(R"({"transactions": [
    {"vars": ["X"], "duration": 7},
    {"vars": ["Y", "X"], "duration": 3}
  ]})");
  CHECK(w.name == "custom");
  CHECK(w.var_names == std::vector<std::string>{"X", "Y"});
  REQUIRE(w.txn_count() == 2);
  CHECK(w.transactions[0].vars == std::vector<VarId>{0});
  CHECK(w.transactions[1].vars == std::vector<VarId>{0, 1});  // sorted by id
  CHECK(w.transactions[1].duration == 3);
  CHECK(validate(w).empty());
}

TEST_CASE("workload parsing rejects malformed documents with precise messages") {
  auto message = [](const std::string& text) {
    try {
      parse_workload(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("(no error)");
  };
  CHECK(message("{") .find("malformed workload document") == 0);
  CHECK(message(R"({"transactions": 5})") ==
        "workload document must be an object with a 'transactions' array");
  CHECK(message(R"({"transactions": [{"duration": 1}]})") ==
        "missing or empty 'vars' at record 0");
  CHECK(message(R"({"transactions": [{"vars": ["A"]}]})") ==
        "missing integral duration at record 0");
  CHECK(message(R"({"transactions": [{"vars": ["A"], "duration": 0}]})") ==
        "non-positive duration at record 0");
  CHECK(message(R"({"transactions": [{"vars": ["A", "A"], "duration": 1}]})") ==
        "duplicate variable names at record 0");
  CHECK(message(R"({"transactions": [{"id": 4, "vars": ["A"], "duration": 1}]})") ==
        "id mismatch at record 0 (ids are positional)");
  CHECK(message(R"({"variables": ["A"], "transactions": [{"vars": ["B"], "duration": 1}]})") ==
        "unknown t-variable 'B' at record 0");
}

TEST_CASE("resolve_workload prefers builtin names and falls back to paths") {
  CHECK(resolve_workload("cw-1").name == "CW-1");
  CHECK_THROWS_AS(resolve_workload("/no/such/file.json"), ParseError);
}
