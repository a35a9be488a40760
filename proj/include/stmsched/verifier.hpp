#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stmsched/simulator.hpp"

namespace stmsched {

enum class Objective { max_aborts, max_ms_plus_aborts };

inline const char* objective_name(Objective o) {
  switch (o) {
    case Objective::max_aborts: return "na";
    case Objective::max_ms_plus_aborts: return "msna";
  }
  throw std::invalid_argument("unknown objective");
}

inline std::optional<Objective> parse_objective(std::string_view s) {
  if (s == "na") return Objective::max_aborts;
  if (s == "msna") return Objective::max_ms_plus_aborts;
  return std::nullopt;
}

/// Raised when exploration would exceed the configured state budget. Never a
/// silent truncation: the caller either gets complete results or this error.
struct BudgetExceeded : std::runtime_error {
  std::size_t states = 0;
  explicit BudgetExceeded(std::size_t s)
      : std::runtime_error("exploration state budget exceeded after " + std::to_string(s) +
                           " states"),
        states(s) {}
};

struct ExplorerOptions {
  std::size_t max_states = 2'000'000;
  int max_transactions = 8;  // exploration precondition; hard cap 32
  CommitArbitration arbitration = CommitArbitration::first_wins;
  // Test hook: enumerate same-tick service orders in reverse. Verdicts and
  // extremal values must not change; only witness schedules may.
  bool reverse_choice_order = false;
};

/// Verdict for one assertion:
///   1 deadlock freedom   — every reachable non-final state has a successor
///   2 completion reachable — some schedule commits every transaction
///   3 termination        — every schedule commits every transaction
///   4 worst-case aborts  — maximum na over all schedules (with witness)
///   5 worst-case ms+na   — maximum ms+na over all schedules (with witness)
struct ExplorationReport {
  int assertion = 0;
  bool valid = false;
  std::string detail;
  std::optional<std::int64_t> extremal;
  std::vector<TickEvent> witness;
  std::size_t states_visited = 0;
  std::size_t branches_explored = 0;
};

/// Bounded exhaustive exploration of every same-tick service order the
/// dictionary could use. The schedulers stay deterministic, so a state is
/// fully described at iteration boundaries by the pending transactions plus
/// the dictionary versions; within an iteration the request timing is fixed
/// by the plan and only read/commit ordering varies. Versions are kept modulo
/// the transaction count, which is collision-free here: a transaction in
/// flight can see at most TNum-1 other commits, so a counter can never wrap
/// all the way around between its read and its commit validation.
class Explorer {
 public:
  struct BoundaryKey {
    std::vector<TxnId> pending;      // ascending ids
    std::vector<Version> versions;   // modulo txn count
    auto operator<=>(const BoundaryKey&) const = default;
  };

  struct IterationOutcome {
    std::vector<TxnId> aborted;      // ascending; becomes the next pending set
    std::vector<Version> versions;   // dictionary state after the iteration
    ServiceScript script;            // one service-order choice realizing it
  };

  struct BoundaryNode {
    bool final_state = false;        // pending empty: every transaction done
    Duration contribution = 0;       // makespan this iteration adds
    std::vector<IterationOutcome> outcomes;  // deduplicated, deterministic order
  };

  Explorer(Workload w, Algorithm alg, int n_workers, ExplorerOptions opts = {})
      : w_(std::move(w)), alg_(alg), n_(n_workers), opts_(opts) {
    if (n_ < 1) throw std::invalid_argument("worker count must be >= 1");
    int hard_cap = std::min(opts_.max_transactions, 32);
    if (w_.txn_count() > hard_cap) {
      throw std::invalid_argument("workload has " + std::to_string(w_.txn_count()) +
                                  " transactions; exploration is bounded to " +
                                  std::to_string(hard_cap));
    }
    modulus_ = static_cast<Version>(std::max(1, w_.txn_count()));
    by_id_ = w_.transactions;
    std::sort(by_id_.begin(), by_id_.end(),
              [](const TransactionSpec& a, const TransactionSpec& b) { return a.id < b.id; });
  }

  BoundaryKey initial_key() const {
    BoundaryKey k;
    for (const TransactionSpec& t : by_id_) k.pending.push_back(t.id);
    k.versions.assign(static_cast<std::size_t>(w_.var_count()), 0);
    return k;
  }

  void expand_all() {
    if (expanded_) return;
    std::vector<BoundaryKey> work{initial_key()};
    while (!work.empty()) {
      BoundaryKey key = std::move(work.back());
      work.pop_back();
      if (graph_.contains(key)) continue;
      const BoundaryNode& node = expand(key);
      for (const IterationOutcome& o : node.outcomes) {
        BoundaryKey succ{o.aborted, o.versions};
        if (!graph_.contains(succ)) work.push_back(std::move(succ));
      }
    }
    expanded_ = true;
  }

  const std::map<BoundaryKey, BoundaryNode>& graph() {
    expand_all();
    return graph_;
  }

  std::size_t states_visited() const { return states_; }
  std::size_t branches_explored() const { return branches_; }

  ExplorationReport check_deadlock_free() {
    expand_all();
    ExplorationReport rep = base_report(1);
    for (const auto& [key, node] : graph_) {
      if (!node.final_state && node.outcomes.empty()) {
        rep.valid = false;
        rep.detail = "state with " + std::to_string(key.pending.size()) +
                     " pending transactions has no successor";
        if (auto path = path_to(key)) rep.witness = replay_path(*path).trace;
        return rep;
      }
    }
    rep.valid = true;
    rep.detail = "every reachable non-final state has a successor (" +
                 std::to_string(graph_.size()) + " states checked)";
    return rep;
  }

  ExplorationReport check_reaches_done() {
    expand_all();
    ExplorationReport rep = base_report(2);
    for (const auto& [key, node] : graph_) {
      if (!node.final_state) continue;
      auto path = path_to(key);
      if (!path) continue;
      RunMetrics m = replay_path(*path);
      rep.valid = true;
      rep.extremal = m.snum;
      rep.witness = std::move(m.trace);
      rep.detail = "a schedule commits all " + std::to_string(w_.txn_count()) +
                   " transactions in " + std::to_string(path->size()) + " iterations";
      return rep;
    }
    rep.valid = false;
    rep.detail = "no reachable state commits every transaction";
    if (auto lasso = find_lasso()) rep.witness = replay_path(*lasso).trace;
    return rep;
  }

  ExplorationReport check_termination() {
    expand_all();
    ExplorationReport rep = base_report(3);
    if (auto lasso = find_lasso()) {
      const BoundaryKey& back = successor_of((*lasso).back());
      std::size_t loop_start = 0;
      while (loop_start < lasso->size() && !((*lasso)[loop_start].first == back)) ++loop_start;
      rep.valid = false;
      rep.detail = "livelock: the scheduling state repeats every " +
                   std::to_string(lasso->size() - loop_start) +
                   " iteration(s) without committing anything new";
      rep.witness = replay_path(*lasso).trace;
      return rep;
    }
    rep.valid = true;
    rep.detail = "every maximal schedule ends with all transactions committed (" +
                 std::to_string(graph_.size()) + " states, no cycles)";
    return rep;
  }

  ExplorationReport explore(Objective obj) {
    expand_all();
    ExplorationReport rep = base_report(obj == Objective::max_aborts ? 4 : 5);
    std::map<BoundaryKey, std::int64_t> memo;
    std::map<BoundaryKey, std::size_t> choice;
    std::map<BoundaryKey, int> color;
    std::optional<std::int64_t> best;
    try {
      best = dp_max(initial_key(), obj, memo, choice, color);
    } catch (const CycleReached&) {
      rep.valid = false;
      rep.detail = "objective unbounded: an all-abort cycle is reachable";
      if (auto lasso = find_lasso()) rep.witness = replay_path(*lasso).trace;
      return rep;
    }
    std::vector<std::pair<BoundaryKey, std::size_t>> path;
    BoundaryKey key = initial_key();
    while (!graph_.at(key).final_state) {
      std::size_t pick = choice.at(key);
      path.push_back({key, pick});
      key = successor_of(path.back());
    }
    RunMetrics m = replay_path(path);
    std::int64_t achieved =
        obj == Objective::max_aborts ? m.na : static_cast<std::int64_t>(m.ms) + m.na;
    if (achieved != *best) {
      throw std::logic_error("witness replay scored " + std::to_string(achieved) +
                             " but exploration computed " + std::to_string(*best));
    }
    rep.valid = true;
    rep.extremal = *best;
    rep.witness = std::move(m.trace);
    rep.detail = std::string("maximum ") +
                 (obj == Objective::max_aborts ? "abort count" : "makespan-plus-aborts") +
                 " over all service orders is " + std::to_string(*best) +
                 "; witness schedule attached";
    return rep;
  }

  ExplorationReport check_assertion(int id) {
    switch (id) {
      case 1: return check_deadlock_free();
      case 2: return check_reaches_done();
      case 3: return check_termination();
      case 4: return explore(Objective::max_aborts);
      case 5: return explore(Objective::max_ms_plus_aborts);
      default: throw std::invalid_argument("assertion id must be 1..5");
    }
  }

  /// Replays the deterministic simulator (same arbitration, modulo versions)
  /// and confirms every iteration outcome it takes is among the explored
  /// outcomes of the corresponding boundary state.
  bool deterministic_path_explored() {
    expand_all();
    RunOptions ro;
    ro.version_modulus = modulus_;
    ro.arbitration = opts_.arbitration;
    RunMetrics m = run(w_, alg_, n_, ro);
    BoundaryKey key = initial_key();
    for (const IterationSummary& it : m.details) {
      auto node = graph_.find(key);
      if (node == graph_.end()) return false;
      bool found = false;
      for (const IterationOutcome& o : node->second.outcomes) {
        if (o.aborted == it.aborted && o.versions == it.versions_after) {
          found = true;
          break;
        }
      }
      if (!found) return false;
      key = BoundaryKey{it.aborted, it.versions_after};
    }
    return graph_.at(key).final_state;
  }

 private:
  struct CycleReached {};

  ExplorationReport base_report(int assertion) const {
    ExplorationReport rep;
    rep.assertion = assertion;
    rep.states_visited = states_;
    rep.branches_explored = branches_;
    return rep;
  }

  BoundaryKey successor_of(const std::pair<BoundaryKey, std::size_t>& edge) {
    const IterationOutcome& o = graph_.at(edge.first).outcomes.at(edge.second);
    return BoundaryKey{o.aborted, o.versions};
  }

  void count_state() {
    if (++states_ > opts_.max_states) throw BudgetExceeded(states_);
  }

  // ---- one-iteration expansion -------------------------------------------

  struct ReqDesc {
    int worker = 0;
    std::size_t batch_index = 0;
    RequestKind kind = RequestKind::get_vars;
    const TransactionSpec* spec = nullptr;
  };

  using ResultKey = std::pair<std::uint32_t, std::vector<Version>>;  // abort mask, versions
  using ResultMap = std::map<ResultKey, ServiceScript>;

  const BoundaryNode& expand(const BoundaryKey& key) {
    count_state();
    BoundaryNode node;
    if (key.pending.empty()) {
      node.final_state = true;
      return graph_.emplace(key, std::move(node)).first->second;
    }

    std::vector<TransactionSpec> batch;
    for (TxnId id : key.pending) batch.push_back(by_id_.at(static_cast<std::size_t>(id)));
    IterationPlan plan = iteration_plan(assign(alg_, batch, n_));
    node.contribution = plan.contribution();

    // Fixed request timetable: service order never shifts request ticks.
    std::map<Tick, std::vector<ReqDesc>> by_tick;
    for (const TxnTicks& tt : tick_timeline(plan)) {
      std::size_t bi = 0;
      while (batch[bi].id != tt.txn) ++bi;
      by_tick[tt.get_tick].push_back({tt.worker, bi, RequestKind::get_vars, &by_id_[static_cast<std::size_t>(tt.txn)]});
      by_tick[tt.commit_tick].push_back(
          {tt.worker, bi, RequestKind::commit_vars, &by_id_[static_cast<std::size_t>(tt.txn)]});
    }
    ticks_.clear();
    for (auto& [tick, reqs] : by_tick) {
      std::sort(reqs.begin(), reqs.end(),
                [](const ReqDesc& a, const ReqDesc& b) { return a.worker < b.worker; });
      ticks_.push_back({tick, std::move(reqs)});
    }

    memo_.clear();
    std::vector<std::vector<Version>> held(static_cast<std::size_t>(n_));
    const ResultMap& results = dfs(0, key.versions, held);

    for (const auto& [rk, script] : results) {
      IterationOutcome o;
      for (std::size_t i = 0; i < batch.size(); ++i) {
        if (rk.first & (1u << i)) o.aborted.push_back(batch[i].id);
      }
      o.versions = rk.second;
      o.script = script;
      node.outcomes.push_back(std::move(o));
    }
    memo_.clear();
    return graph_.emplace(key, std::move(node)).first->second;
  }

  std::vector<std::uint32_t> encode_mid(std::size_t tick_idx, const std::vector<Version>& versions,
                                        const std::vector<std::vector<Version>>& held) const {
    std::vector<std::uint32_t> k;
    k.push_back(static_cast<std::uint32_t>(tick_idx));
    for (Version v : versions) k.push_back(v);
    for (const auto& h : held) {
      k.push_back(static_cast<std::uint32_t>(h.size()));
      for (Version v : h) k.push_back(v);
    }
    return k;
  }

  const ResultMap& dfs(std::size_t tick_idx, const std::vector<Version>& versions,
                       const std::vector<std::vector<Version>>& held) {
    std::vector<std::uint32_t> mk = encode_mid(tick_idx, versions, held);
    if (auto it = memo_.find(mk); it != memo_.end()) return it->second;
    count_state();

    ResultMap results;
    if (tick_idx == ticks_.size()) {
      results[{0u, versions}] = {};
      return memo_.emplace(std::move(mk), std::move(results)).first->second;
    }

    const auto& [tick, reqs] = ticks_[tick_idx];
    std::vector<bool> forced(reqs.size(), false);
    if (opts_.arbitration == CommitArbitration::colliding_commits_abort) {
      for (std::size_t i = 0; i < reqs.size(); ++i) {
        for (std::size_t j = i + 1; j < reqs.size(); ++j) {
          if (reqs[i].kind == RequestKind::commit_vars &&
              reqs[j].kind == RequestKind::commit_vars &&
              reqs[i].spec->shares_var(*reqs[j].spec)) {
            forced[i] = forced[j] = true;
          }
        }
      }
    }

    std::vector<std::vector<std::size_t>> orders;
    std::vector<std::size_t> perm(reqs.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    do {
      orders.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (opts_.reverse_choice_order) std::reverse(orders.begin(), orders.end());

    for (const std::vector<std::size_t>& order : orders) {
      ++branches_;
      std::vector<Version> v2 = versions;
      std::vector<std::vector<Version>> h2 = held;
      std::uint32_t mask = 0;
      for (std::size_t idx : order) {
        const ReqDesc& r = reqs[idx];
        auto& hw = h2[static_cast<std::size_t>(r.worker)];
        if (r.kind == RequestKind::get_vars) {
          hw.clear();
          for (VarId var : r.spec->vars) hw.push_back(v2[static_cast<std::size_t>(var)]);
        } else {
          bool ok = !forced[idx];
          const auto& vars = r.spec->vars;
          for (std::size_t i = 0; ok && i < vars.size(); ++i) {
            ok = hw[i] == v2[static_cast<std::size_t>(vars[i])];
          }
          if (ok) {
            for (VarId var : vars) {
              Version& v = v2[static_cast<std::size_t>(var)];
              v = (v + 1) % modulus_;
            }
          } else {
            mask |= 1u << r.batch_index;
          }
          hw.clear();
        }
      }
      const ResultMap& sub = dfs(tick_idx + 1, v2, h2);
      for (const auto& [rk, rscript] : sub) {
        ResultKey full{mask | rk.first, rk.second};
        if (results.contains(full)) continue;
        ServiceScript script;
        script.push_back({tick, order});
        script.insert(script.end(), rscript.begin(), rscript.end());
        results.emplace(std::move(full), std::move(script));
      }
    }
    // Note: `sub` references stay valid (node-based map), but inserting into
    // memo_ after the loop keeps this frame's own entry stable for callers.
    return memo_.emplace(std::move(mk), std::move(results)).first->second;
  }

  // ---- graph analyses ------------------------------------------------------

  /// Shortest path of (state, outcome index) edges from the initial state.
  std::optional<std::vector<std::pair<BoundaryKey, std::size_t>>> path_to(
      const BoundaryKey& target) {
    std::map<BoundaryKey, std::pair<BoundaryKey, std::size_t>> parent;
    std::vector<BoundaryKey> frontier{initial_key()};
    std::map<BoundaryKey, bool> seen;
    seen[initial_key()] = true;
    while (!frontier.empty()) {
      std::vector<BoundaryKey> next;
      for (const BoundaryKey& key : frontier) {
        if (key == target) {
          std::vector<std::pair<BoundaryKey, std::size_t>> path;
          BoundaryKey cur = key;
          while (!(cur == initial_key())) {
            auto [prev, idx] = parent.at(cur);
            path.push_back({prev, idx});
            cur = prev;
          }
          std::reverse(path.begin(), path.end());
          return path;
        }
        const BoundaryNode& node = graph_.at(key);
        for (std::size_t i = 0; i < node.outcomes.size(); ++i) {
          BoundaryKey succ = successor_of({key, i});
          if (!seen[succ]) {
            seen[succ] = true;
            parent.emplace(succ, std::make_pair(key, i));
            next.push_back(std::move(succ));
          }
        }
      }
      frontier = std::move(next);
    }
    return std::nullopt;
  }

  /// Depth-first search for a reachable cycle; on success returns the edge
  /// path from the initial state through the full loop (lasso).
  std::optional<std::vector<std::pair<BoundaryKey, std::size_t>>> find_lasso() {
    std::map<BoundaryKey, int> color;  // 0 white, 1 gray, 2 black
    std::vector<std::pair<BoundaryKey, std::size_t>> path;
    if (dfs_cycle(initial_key(), color, path)) return path;
    return std::nullopt;
  }

  bool dfs_cycle(const BoundaryKey& key, std::map<BoundaryKey, int>& color,
                 std::vector<std::pair<BoundaryKey, std::size_t>>& path) {
    color[key] = 1;
    const BoundaryNode& node = graph_.at(key);
    for (std::size_t i = 0; i < node.outcomes.size(); ++i) {
      BoundaryKey succ = successor_of({key, i});
      int c = color.count(succ) ? color[succ] : 0;
      path.push_back({key, i});
      if (c == 1) return true;  // path now ends with the edge closing the loop
      if (c == 0 && dfs_cycle(succ, color, path)) return true;
      path.pop_back();
    }
    color[key] = 2;
    return false;
  }

  std::int64_t dp_max(const BoundaryKey& key, Objective obj,
                      std::map<BoundaryKey, std::int64_t>& memo,
                      std::map<BoundaryKey, std::size_t>& choice,
                      std::map<BoundaryKey, int>& color) {
    const BoundaryNode& node = graph_.at(key);
    if (node.final_state) return 0;
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (color[key] == 1) throw CycleReached{};
    color[key] = 1;
    std::int64_t best = std::numeric_limits<std::int64_t>::min();
    std::size_t best_idx = 0;
    for (std::size_t i = 0; i < node.outcomes.size(); ++i) {
      const IterationOutcome& o = node.outcomes[i];
      std::int64_t step = static_cast<std::int64_t>(o.aborted.size());
      if (obj == Objective::max_ms_plus_aborts) step += node.contribution;
      std::int64_t val = step + dp_max(successor_of({key, i}), obj, memo, choice, color);
      if (val > best) {
        best = val;
        best_idx = i;
      }
    }
    color[key] = 2;
    memo[key] = best;
    choice[key] = best_idx;
    return best;
  }

  RunMetrics replay_path(const std::vector<std::pair<BoundaryKey, std::size_t>>& path) {
    if (path.empty()) return RunMetrics{};
    std::vector<ServiceScript> scripts;
    for (const auto& edge : path) {
      scripts.push_back(graph_.at(edge.first).outcomes.at(edge.second).script);
    }
    RunOptions ro;
    ro.record_trace = true;
    ro.version_modulus = modulus_;
    ro.arbitration = opts_.arbitration;
    ro.scripts = &scripts;
    ro.iteration_limit = static_cast<int>(scripts.size());
    return run(w_, alg_, n_, ro);
  }

  Workload w_;
  Algorithm alg_;
  int n_ = 0;
  ExplorerOptions opts_;
  Version modulus_ = 1;
  std::vector<TransactionSpec> by_id_;

  std::map<BoundaryKey, BoundaryNode> graph_;
  bool expanded_ = false;
  std::size_t states_ = 0;
  std::size_t branches_ = 0;

  // scratch state for the current expand() call
  std::vector<std::pair<Tick, std::vector<ReqDesc>>> ticks_;
  std::map<std::vector<std::uint32_t>, ResultMap> memo_;
};

inline ExplorationReport explore(const Workload& w, Algorithm alg, int n, Objective obj,
                                 const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).explore(obj);
}

inline ExplorationReport check_deadlock_free(const Workload& w, Algorithm alg, int n,
                                             const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).check_deadlock_free();
}

inline ExplorationReport check_reaches_done(const Workload& w, Algorithm alg, int n,
                                            const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).check_reaches_done();
}

inline ExplorationReport check_termination(const Workload& w, Algorithm alg, int n,
                                           const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).check_termination();
}

inline ExplorationReport max_makespan_plus_aborts(const Workload& w, Algorithm alg, int n,
                                                  const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).explore(Objective::max_ms_plus_aborts);
}

inline ExplorationReport check_assertion(int id, const Workload& w, Algorithm alg, int n,
                                         const ExplorerOptions& opts = {}) {
  return Explorer(w, alg, n, opts).check_assertion(id);
}

}  // namespace stmsched
