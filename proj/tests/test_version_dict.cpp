#include <catch2/catch_amalgamated.hpp>

#include "stmsched/version_dict.hpp"

using namespace stmsched;

namespace {

StmRequest get_req(int worker, TxnId txn, std::vector<VarId> keys) {
  StmRequest r{worker, txn, RequestKind::get_vars, {}};
  for (VarId k : keys) r.keys.push_back({k, 0});
  return r;
}

StmRequest commit_req(int worker, TxnId txn, std::vector<VersionedKey> keys) {
  return {worker, txn, RequestKind::commit_vars, std::move(keys)};
}

}  // namespace

TEST_CASE("counters start at zero and commits bump them") {
  VersionDict d(3);
  CHECK(d.version(0) == 0);
  CHECK(d.version(2) == 0);

  auto versions = d.get_vars(std::vector<VarId>{0, 2});
  CHECK(versions == std::vector<Version>{0, 0});

  auto out = d.commit_vars(std::vector<VersionedKey>{{0, 0}, {2, 0}});
  CHECK(out.committed);
  CHECK(d.version(0) == 1);
  CHECK(d.version(1) == 0);
  CHECK(d.version(2) == 1);
}

TEST_CASE("a stale version fails the whole commit and changes nothing") {
  VersionDict d(2);
  REQUIRE(d.commit_vars(std::vector<VersionedKey>{{0, 0}}).committed);  // v0 -> 1

  // Key 1 is current (0) but key 0 is stale: nothing may move.
  auto out = d.commit_vars(std::vector<VersionedKey>{{0, 0}, {1, 0}});
  CHECK_FALSE(out.committed);
  CHECK(d.version(0) == 1);
  CHECK(d.version(1) == 0);
}

TEST_CASE("modulo arithmetic wraps the counters") {
  VersionDict d(1, 3);
  for (Version expect : {1u, 2u, 0u, 1u}) {
    REQUIRE(d.commit_vars(std::vector<VersionedKey>{{0, d.version(0)}}).committed);
    CHECK(d.version(0) == expect);
  }
}

TEST_CASE("snapshot and restore round-trip the full state") {
  VersionDict d(3);
  REQUIRE(d.commit_vars(std::vector<VersionedKey>{{1, 0}}).committed);
  std::vector<Version> snap = d.snapshot();
  CHECK(snap == std::vector<Version>{0, 1, 0});

  REQUIRE(d.commit_vars(std::vector<VersionedKey>{{1, 1}, {2, 0}}).committed);
  CHECK(d.snapshot() == std::vector<Version>{0, 2, 1});

  d.restore(snap);
  CHECK(d.snapshot() == std::vector<Version>{0, 1, 0});
  CHECK_THROWS_AS(d.restore(std::vector<Version>{0}), std::invalid_argument);
}

TEST_CASE("key validation") {
  VersionDict d(2);
  CHECK_THROWS_AS(d.version(2), std::invalid_argument);
  CHECK_THROWS_AS(d.get_vars(std::vector<VarId>{0, 5}), std::invalid_argument);
  CHECK_THROWS_AS(d.get_vars(std::vector<VarId>{1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(d.commit_vars(std::vector<VersionedKey>{{0, 0}, {0, 0}}),
                  std::invalid_argument);
}

TEST_CASE("deterministic batch order: commits first, then ascending worker") {
  VersionDict d(1);
  // Worker 0 reads A while workers 1 and 2 try to commit A at version 0.
  std::vector<StmRequest> batch{
      get_req(0, 10, {0}),
      commit_req(2, 12, {{0, 0}}),
      commit_req(1, 11, {{0, 0}}),
  };
  auto replies = d.service_tick_batch(batch);
  REQUIRE(replies.size() == 3);
  // Service order: commit from worker 1, commit from worker 2, get from worker 0.
  CHECK(replies[0].worker == 1);
  CHECK(replies[0].committed);
  CHECK(replies[1].worker == 2);
  CHECK_FALSE(replies[1].committed);  // lost the race: version moved to 1
  CHECK(replies[2].worker == 0);
  CHECK(replies[2].versions == std::vector<Version>{1});  // read after both commits
}

TEST_CASE("an explicit service order changes who wins") {
  std::vector<StmRequest> batch{
      get_req(0, 10, {0}),
      commit_req(1, 11, {{0, 0}}),
      commit_req(2, 12, {{0, 0}}),
  };

  VersionDict d(1);
  std::vector<std::size_t> order{0, 2, 1};  // get first, worker 2's commit next
  auto replies = d.service_tick_batch(batch, order);
  CHECK(replies[0].worker == 0);
  CHECK(replies[0].versions == std::vector<Version>{0});  // read before any commit
  CHECK(replies[1].worker == 2);
  CHECK(replies[1].committed);
  CHECK(replies[2].worker == 1);
  CHECK_FALSE(replies[2].committed);
}

TEST_CASE("batch validation rejects malformed batches") {
  VersionDict d(1);
  std::vector<StmRequest> two_from_one{get_req(0, 1, {0}), commit_req(0, 2, {{0, 0}})};
  CHECK_THROWS_AS(d.service_tick_batch(two_from_one), std::invalid_argument);

  std::vector<StmRequest> batch{get_req(0, 1, {0}), get_req(1, 2, {0})};
  std::vector<std::size_t> not_perm{0, 0};
  CHECK_THROWS_AS(d.service_tick_batch(batch, not_perm), std::invalid_argument);
  std::vector<std::size_t> too_short{0};
  CHECK_THROWS_AS(d.service_tick_batch(batch, too_short), std::invalid_argument);
}

TEST_CASE("colliding-commits arbitration aborts every same-tick commit sharing a key") {
  std::vector<StmRequest> batch{
      commit_req(0, 1, {{0, 0}}),
      commit_req(1, 2, {{0, 0}}),
      commit_req(2, 3, {{1, 0}}),
  };

  VersionDict broken(2);
  auto replies = broken.service_tick_batch(batch, CommitArbitration::colliding_commits_abort);
  REQUIRE(replies.size() == 3);
  CHECK_FALSE(replies[0].committed);
  CHECK_FALSE(replies[1].committed);
  CHECK(replies[2].committed);  // no other commit touches key 1
  CHECK(broken.version(0) == 0);
  CHECK(broken.version(1) == 1);

  // Under the real rule the first-served commit wins.
  VersionDict real(2);
  auto ok = real.service_tick_batch(batch);
  CHECK(ok[0].committed);
  CHECK_FALSE(ok[1].committed);
  CHECK(ok[2].committed);
  CHECK(real.version(0) == 1);
}
