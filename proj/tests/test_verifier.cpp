#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "stmsched/verifier.hpp"
#include "support/generators.hpp"

using namespace stmsched;

namespace {

std::int64_t aborts_in(const std::vector<TickEvent>& trace) {
  std::int64_t n = 0;
  for (const TickEvent& e : trace) {
    if (e.kind == RequestKind::commit_vars && !e.committed) ++n;
  }
  return n;
}

Workload mutant_livelock_workload() {
  Workload w;
  w.name = "livelock";
  w.var_names = {"A"};
  w.transactions = {{0, {0}, 2}, {1, {0}, 2}};
  return w;
}

}  // namespace

TEST_CASE("safety assertions hold for every builtin configuration") {
  for (const Workload& w : builtin_workloads()) {
    for (Algorithm alg : all_algorithms()) {
      for (int n : {2, 4}) {
        Explorer ex(w, alg, n);
        INFO(w.name << "/" << algorithm_name(alg) << "/" << n);
        CHECK(ex.check_deadlock_free().valid);
        CHECK(ex.check_reaches_done().valid);
        CHECK(ex.check_termination().valid);
        CHECK(ex.deterministic_path_explored());
      }
    }
  }
}

TEST_CASE("worst-case abort counts over all service orders") {
  auto max_na = [](BuiltinWorkload w, Algorithm alg, int n) {
    ExplorationReport rep = explore(builtin(w), alg, n, Objective::max_aborts);
    REQUIRE(rep.valid);
    REQUIRE(rep.extremal.has_value());
    // The witness trace must actually realize the reported extremal.
    CHECK(aborts_in(rep.witness) == *rep.extremal);
    return *rep.extremal;
  };
  CHECK(max_na(BuiltinWorkload::cw2, Algorithm::rr, 2) == 1);
  CHECK(max_na(BuiltinWorkload::cw1, Algorithm::rr, 4) == 2);
  CHECK(max_na(BuiltinWorkload::cfw, Algorithm::rr, 2) == 0);
  CHECK(max_na(BuiltinWorkload::cfw, Algorithm::etlb, 2) == 0);
  CHECK(max_na(BuiltinWorkload::cfw, Algorithm::ac, 2) == 0);
  CHECK(max_na(BuiltinWorkload::cfw, Algorithm::aac, 2) == 0);
}

TEST_CASE("worst-case makespan-plus-aborts over all service orders") {
  auto max_msna = [](BuiltinWorkload w, Algorithm alg, int n) {
    ExplorationReport rep = explore(builtin(w), alg, n, Objective::max_ms_plus_aborts);
    REQUIRE(rep.valid);
    REQUIRE(rep.extremal.has_value());
    return *rep.extremal;
  };
  CHECK(max_msna(BuiltinWorkload::cw1, Algorithm::rr, 2) == 121);
  CHECK(max_msna(BuiltinWorkload::cw2, Algorithm::etlb, 3) == 206);
  CHECK(max_msna(BuiltinWorkload::cfw, Algorithm::aac, 4) == 50);
}

TEST_CASE("the worst case is never better than the deterministic run") {
  std::mt19937 rng(61);
  generators::WorkloadParams params;
  params.max_transactions = 5;
  for (int i = 0; i < 40; ++i) {
    Workload w = generators::random_workload(rng, params);
    int n = 2 + static_cast<int>(rng() % 2);
    for (Algorithm alg : all_algorithms()) {
      RunMetrics det = run(w, alg, n);
      Explorer ex(w, alg, n);
      ExplorationReport na_rep = ex.explore(Objective::max_aborts);
      REQUIRE(na_rep.valid);
      CHECK(*na_rep.extremal >= det.na);
      ExplorationReport msna_rep = ex.explore(Objective::max_ms_plus_aborts);
      REQUIRE(msna_rep.valid);
      CHECK(*msna_rep.extremal >= static_cast<std::int64_t>(det.ms) + det.na);
      CHECK(ex.deterministic_path_explored());
    }
  }
}

TEST_CASE("conflict-avoiding schedules of single-variable workloads never abort") {
  std::mt19937 rng(67);
  generators::WorkloadParams params;
  params.max_transactions = 5;
  params.single_var = true;
  for (int i = 0; i < 60; ++i) {
    Workload w = generators::random_workload(rng, params);
    int n = 2 + static_cast<int>(rng() % 2);
    for (Algorithm alg : {Algorithm::ac, Algorithm::aac}) {
      ExplorationReport rep = explore(w, alg, n, Objective::max_aborts);
      INFO(algorithm_name(alg) << " n=" << n);
      REQUIRE(rep.valid);
      CHECK(*rep.extremal == 0);
    }
  }
}

TEST_CASE("multi-variable transactions can race even on a conflict-free schedule") {
  // The fallback placement of T5 is busy-interval disjoint from T3 but shares
  // tick 8 with T3's commit; serving T5's read first makes its version stale.
  Workload w;
  w.name = "fallback";
  w.var_names = {"A", "B", "C"};
  w.transactions = {
      {0, {2}, 1}, {1, {2}, 1}, {2, {2}, 1},
      {3, {0, 2}, 1}, {4, {1}, 6}, {5, {0, 1}, 1},
  };
  ExplorationReport rep = explore(w, Algorithm::aac, 2, Objective::max_aborts);
  REQUIRE(rep.valid);
  CHECK(*rep.extremal >= 1);

  // The deterministic commits-first policy dodges that race.
  CHECK(run(w, Algorithm::aac, 2).na == 0);
}

TEST_CASE("empty and single-transaction workloads verify trivially") {
  Workload empty;
  empty.name = "empty";
  Explorer ex(empty, Algorithm::rr, 2);
  CHECK(ex.check_deadlock_free().valid);
  CHECK(ex.check_reaches_done().valid);
  CHECK(ex.check_termination().valid);
  ExplorationReport rep = ex.explore(Objective::max_aborts);
  CHECK(rep.valid);
  CHECK(*rep.extremal == 0);

  Workload one;
  one.name = "one";
  one.var_names = {"A"};
  one.transactions = {{0, {0}, 3}};
  Explorer ex1(one, Algorithm::aac, 1);
  CHECK(ex1.check_termination().valid);
  ExplorationReport msna = ex1.explore(Objective::max_ms_plus_aborts);
  CHECK(*msna.extremal == 3);
}

TEST_CASE("the broken arbitration is caught as a livelock") {
  Workload w = mutant_livelock_workload();
  ExplorerOptions opts;
  opts.arbitration = CommitArbitration::colliding_commits_abort;
  Explorer ex(w, Algorithm::rr, 2, opts);

  ExplorationReport term = ex.check_termination();
  CHECK_FALSE(term.valid);
  CHECK(term.detail.find("livelock") != std::string::npos);
  CHECK_FALSE(term.witness.empty());

  ExplorationReport done = ex.check_reaches_done();
  CHECK_FALSE(done.valid);

  // Deadlock freedom still holds: the looping state always has a successor.
  CHECK(ex.check_deadlock_free().valid);

  ExplorationReport na = ex.explore(Objective::max_aborts);
  CHECK_FALSE(na.valid);
  CHECK(na.detail.find("unbounded") != std::string::npos);

  // The same two transactions verify fine under the real arbitration.
  Explorer good(w, Algorithm::rr, 2);
  CHECK(good.check_termination().valid);
}

TEST_CASE("exploration respects its state budget") {
  ExplorerOptions opts;
  opts.max_states = 3;
  Explorer ex(builtin(BuiltinWorkload::cw2), Algorithm::rr, 2, opts);
  CHECK_THROWS_AS(ex.check_assertion(4), BudgetExceeded);
}

TEST_CASE("enumeration order cannot change verdicts or extremals") {
  for (auto [w, alg, n] : {std::tuple{BuiltinWorkload::cw2, Algorithm::etlb, 3},
                           std::tuple{BuiltinWorkload::cw1, Algorithm::rr, 4},
                           std::tuple{BuiltinWorkload::cw2, Algorithm::rr, 3}}) {
    ExplorerOptions reversed;
    reversed.reverse_choice_order = true;
    Explorer fwd(builtin(w), alg, n);
    Explorer rev(builtin(w), alg, n, reversed);
    for (int id : {1, 2, 3, 4, 5}) {
      ExplorationReport a = fwd.check_assertion(id);
      ExplorationReport b = rev.check_assertion(id);
      INFO("assertion " << id);
      CHECK(a.valid == b.valid);
      CHECK(a.extremal == b.extremal);
    }
  }
}

TEST_CASE("exploration preconditions") {
  Workload big;
  big.name = "big";
  big.var_names = {"A"};
  for (int i = 0; i < 9; ++i) big.transactions.push_back({i, {0}, 1});
  CHECK_THROWS_AS(Explorer(big, Algorithm::rr, 2), std::invalid_argument);

  ExplorerOptions wide;
  wide.max_transactions = 16;
  CHECK_NOTHROW(Explorer(big, Algorithm::rr, 2, wide));

  CHECK_THROWS_AS(Explorer(builtin(BuiltinWorkload::cfw), Algorithm::rr, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(check_assertion(6, builtin(BuiltinWorkload::cfw), Algorithm::rr, 2),
                  std::invalid_argument);
}
