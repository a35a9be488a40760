#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "stmsched/workload.hpp"

namespace stmsched {

using Version = std::uint32_t;

enum class RequestKind { get_vars, commit_vars };

/// One (key, version) pair inside a request. The version field is only
/// meaningful for commit_vars; it carries the version observed at read time.
struct VersionedKey {
  VarId key = 0;
  Version version = 0;
  bool operator==(const VersionedKey&) const = default;
};

/// A request issued by one worker on one tick. All keys of a transaction
/// travel in a single request: reads on its first tick, the commit on its
/// last. txn is carried for tracing.
struct StmRequest {
  int worker = 0;
  TxnId txn = -1;
  RequestKind kind = RequestKind::get_vars;
  std::vector<VersionedKey> keys;
};

struct CommitOutcome {
  bool committed = false;
};

struct StmReply {
  int worker = 0;
  TxnId txn = -1;
  RequestKind kind = RequestKind::get_vars;
  std::vector<Version> versions;  // get_vars: versions read (key order)
  bool committed = false;         // commit_vars outcome
};

/// Commit arbitration for requests landing on the same tick.
/// first_wins is the real protocol: requests are served one at a time, so the
/// first same-version committer succeeds and later ones fail validation.
/// colliding_commits_abort is a deliberately broken rule (every commit that
/// shares a key with another same-tick commit fails) used to demonstrate that
/// the termination checker can actually catch livelocks.
enum class CommitArbitration { first_wins, colliding_commits_abort };

/// The shared versioned store. Every t-variable carries a version counter
/// starting at 0; a commit validates all its (key, version) pairs against the
/// current counters and either bumps them all or changes nothing.
/// modulus == 0 keeps counters unbounded; modulus == m wraps them mod m
/// (used by the verifier to bound its state space).
class VersionDict {
 public:
  explicit VersionDict(int var_count, Version modulus = 0)
      : versions_(static_cast<std::size_t>(var_count), 0), modulus_(modulus) {
    if (var_count < 0) throw std::invalid_argument("negative var count");
  }

  int var_count() const { return static_cast<int>(versions_.size()); }
  Version modulus() const { return modulus_; }

  Version version(VarId key) const {
    check_key(key);
    return versions_[static_cast<std::size_t>(key)];
  }

  const std::vector<Version>& snapshot() const { return versions_; }
  void restore(std::vector<Version> snap) {
    if (snap.size() != versions_.size()) throw std::invalid_argument("snapshot size mismatch");
    versions_ = std::move(snap);
  }

  std::vector<Version> get_vars(std::span<const VarId> keys) const {
    require_distinct_keys(keys);
    std::vector<Version> out;
    out.reserve(keys.size());
    for (VarId k : keys) {
      check_key(k);
      out.push_back(versions_[static_cast<std::size_t>(k)]);
    }
    return out;
  }

  /// Atomic all-or-nothing: validates every pair first, then either bumps
  /// every key or leaves the store untouched.
  CommitOutcome commit_vars(std::span<const VersionedKey> pairs) {
    std::vector<VarId> keys;
    keys.reserve(pairs.size());
    for (const auto& p : pairs) keys.push_back(p.key);
    require_distinct_keys(keys);
    for (const auto& p : pairs) {
      check_key(p.key);
      if (versions_[static_cast<std::size_t>(p.key)] != p.version) return {false};
    }
    for (const auto& p : pairs) bump(p.key);
    return {true};
  }

  StmReply serve(const StmRequest& req) {
    StmReply rep;
    rep.worker = req.worker;
    rep.txn = req.txn;
    rep.kind = req.kind;
    if (req.kind == RequestKind::get_vars) {
      std::vector<VarId> keys;
      keys.reserve(req.keys.size());
      for (const auto& p : req.keys) keys.push_back(p.key);
      rep.versions = get_vars(keys);
    } else {
      for (const auto& p : req.keys) rep.versions.push_back(p.version);
      rep.committed = commit_vars(req.keys).committed;
    }
    return rep;
  }

  /// Serves one tick's worth of concurrent requests in the deterministic
  /// order: all commit_vars before all get_vars, each group by ascending
  /// worker index. Replies come back in service order.
  std::vector<StmReply> service_tick_batch(std::span<const StmRequest> requests,
                                           CommitArbitration arb = CommitArbitration::first_wins) {
    std::vector<std::size_t> order(requests.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      bool ca = requests[a].kind == RequestKind::commit_vars;
      bool cb = requests[b].kind == RequestKind::commit_vars;
      if (ca != cb) return ca;  // commits first
      return requests[a].worker < requests[b].worker;
    });
    return service_tick_batch(requests, order, arb);
  }

  /// Same, but the caller dictates the exact service order (the verifier's
  /// branch points). order must be a permutation of the request indices.
  std::vector<StmReply> service_tick_batch(std::span<const StmRequest> requests,
                                           std::span<const std::size_t> order,
                                           CommitArbitration arb = CommitArbitration::first_wins) {
    validate_batch(requests, order);
    std::vector<bool> forced_abort(requests.size(), false);
    if (arb == CommitArbitration::colliding_commits_abort) {
      mark_colliding_commits(requests, forced_abort);
    }
    std::vector<StmReply> replies;
    replies.reserve(requests.size());
    for (std::size_t idx : order) {
      const StmRequest& req = requests[idx];
      if (req.kind == RequestKind::commit_vars && forced_abort[idx]) {
        StmReply rep;
        rep.worker = req.worker;
        rep.txn = req.txn;
        rep.kind = req.kind;
        for (const auto& p : req.keys) rep.versions.push_back(p.version);
        rep.committed = false;
        replies.push_back(std::move(rep));
        continue;
      }
      replies.push_back(serve(req));
    }
    return replies;
  }

 private:
  void check_key(VarId key) const {
    if (key < 0 || key >= var_count()) {
      throw std::invalid_argument("unknown t-variable key " + std::to_string(key));
    }
  }

  static void require_distinct_keys(std::span<const VarId> keys) {
    std::vector<VarId> sorted(keys.begin(), keys.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw std::invalid_argument("duplicate keys in one request");
    }
  }

  void bump(VarId key) {
    Version& v = versions_[static_cast<std::size_t>(key)];
    v = (modulus_ > 0) ? (v + 1) % modulus_ : v + 1;
  }

  static void validate_batch(std::span<const StmRequest> requests,
                             std::span<const std::size_t> order) {
    std::vector<int> workers;
    for (const auto& r : requests) workers.push_back(r.worker);
    std::sort(workers.begin(), workers.end());
    if (std::adjacent_find(workers.begin(), workers.end()) != workers.end()) {
      throw std::invalid_argument("two requests from one worker in a single tick");
    }
    std::vector<std::size_t> sorted(order.begin(), order.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (i >= requests.size() || sorted[i] != i) {
        throw std::invalid_argument("service order is not a permutation of the batch");
      }
    }
    if (order.size() != requests.size()) {
      throw std::invalid_argument("service order is not a permutation of the batch");
    }
  }

  static void mark_colliding_commits(std::span<const StmRequest> requests,
                                     std::vector<bool>& forced_abort) {
    for (std::size_t i = 0; i < requests.size(); ++i) {
      if (requests[i].kind != RequestKind::commit_vars) continue;
      for (std::size_t j = i + 1; j < requests.size(); ++j) {
        if (requests[j].kind != RequestKind::commit_vars) continue;
        bool shared = false;
        for (const auto& a : requests[i].keys) {
          for (const auto& b : requests[j].keys) {
            if (a.key == b.key) shared = true;
          }
        }
        if (shared) {
          forced_abort[i] = true;
          forced_abort[j] = true;
        }
      }
    }
  }

  std::vector<Version> versions_;
  Version modulus_ = 0;
};

}  // namespace stmsched
