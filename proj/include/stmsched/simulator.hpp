#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stmsched/scheduling.hpp"
#include "stmsched/version_dict.hpp"
#include "stmsched/workload.hpp"

namespace stmsched {

/// One serviced request, recorded in service order within its tick.
struct TickEvent {
  int iteration = 0;  // 1-based
  Tick tick = 0;      // 1-based within the iteration
  int worker = 0;
  RequestKind kind = RequestKind::get_vars;
  TxnId txn = 0;
  std::vector<VarId> keys;
  std::vector<Version> versions;  // get: versions read; commit: versions presented
  bool committed = false;         // commits only
};

/// Static request schedule implied by a plan: a transaction at queue position
/// p with predecessor load s reads on tick s+p+1 and commits on tick
/// s+p+1+duration (each predecessor adds one read tick of its own).
struct TxnTicks {
  TxnId txn = 0;
  int worker = 0;
  Tick get_tick = 0;
  Tick commit_tick = 0;
  bool operator==(const TxnTicks&) const = default;
};

inline std::vector<TxnTicks> tick_timeline(const IterationPlan& plan) {
  std::vector<TxnTicks> out;
  for (int w = 0; w < plan.assignment.n_workers; ++w) {
    const auto& q = plan.assignment.queues[static_cast<std::size_t>(w)];
    for (std::size_t pos = 0; pos < q.size(); ++pos) {
      const ScheduledEntry& e = q[pos];
      Tick off = static_cast<Tick>(pos) + 1;
      out.push_back({e.txn.id, w, e.start + off, e.end + off});
    }
  }
  return out;
}

struct IterationResult {
  Duration contribution = 0;        // load of the most loaded worker
  Tick nt = 0;                      // ticks every worker performs
  std::vector<TxnId> committed;     // ascending id
  std::vector<TxnId> aborted;       // ascending id
  std::vector<Tick> busy_ticks;     // per worker: ticks spent reading/working
};

/// Explicit service order for one tick: indices into that tick's request
/// batch (requests are built in ascending worker order).
struct ServiceOrder {
  Tick tick = 0;
  std::vector<std::size_t> order;
};

/// One iteration's worth of explicit tick orders; ticks not listed fall back
/// to the deterministic policy (commits first, then ascending worker index).
using ServiceScript = std::vector<ServiceOrder>;

struct RunOptions {
  bool record_trace = false;
  Version version_modulus = 0;  // 0 = unbounded version counters
  CommitArbitration arbitration = CommitArbitration::first_wins;
  // Scripted service orders, one script per iteration (witness replay). A
  // scripted run tolerates zero-commit iterations instead of failing fast.
  const std::vector<ServiceScript>* scripts = nullptr;
  int iteration_limit = 0;  // 0 = run until every transaction committed
};

struct IterationSummary {
  std::vector<Duration> load;       // per worker
  Duration contribution = 0;
  Tick nt = 0;
  std::vector<TxnId> committed;
  std::vector<TxnId> aborted;
  std::vector<Version> versions_after;  // dictionary state at the boundary
};

struct RunMetrics {
  Duration ms = 0;      // sum of per-iteration contributions
  std::int64_t na = 0;  // total aborts across iterations
  int snum = 0;         // transactions committed overall
  int iterations = 0;
  std::vector<IterationSummary> details;
  std::vector<TickEvent> trace;  // only when record_trace

  double throughput() const {
    if (ms <= 0) throw std::domain_error("throughput undefined for non-positive makespan");
    return 1000.0 * static_cast<double>(snum) / static_cast<double>(ms);
  }
};

/// Raised when a deterministic run completes an iteration with zero commits:
/// reads never change the dictionary and failed commits do not either, so the
/// exact same iteration would replay forever.
struct NoProgressError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

struct WorkerCursor {
  const std::vector<ScheduledEntry>* queue = nullptr;
  std::size_t next = 0;          // index of the next transaction to read for
  bool working = false;
  Duration ticks_worked = 0;     // since the read tick
  std::vector<VersionedKey> held;  // versions read for the in-flight transaction
  Tick busy = 0;
};

}  // namespace detail

/// Executes one iteration tick by tick. On each tick every worker either
/// issues the read for its next queued transaction, performs one work tick
/// (issuing the commit on the last one), or idles; the tick's requests are
/// serviced as one batch by the dictionary.
inline IterationResult run_iteration(const IterationPlan& plan, VersionDict& dict,
                                     int iteration_index, const RunOptions& opts,
                                     std::vector<TickEvent>* trace,
                                     const ServiceScript* script = nullptr) {
  int n = plan.assignment.n_workers;
  std::vector<detail::WorkerCursor> cur(static_cast<std::size_t>(n));
  for (int w = 0; w < n; ++w) {
    cur[static_cast<std::size_t>(w)].queue = &plan.assignment.queues[static_cast<std::size_t>(w)];
  }

  IterationResult res;
  res.contribution = plan.contribution();
  res.nt = plan.nt;
  res.busy_ticks.assign(static_cast<std::size_t>(n), 0);

  for (Tick tick = 1; tick <= plan.nt; ++tick) {
    std::vector<StmRequest> requests;
    std::vector<TxnId> request_txn;  // parallel to requests
    for (int w = 0; w < n; ++w) {
      auto& c = cur[static_cast<std::size_t>(w)];
      if (!c.working) {
        if (c.next >= c.queue->size()) continue;  // drained: idle tick
        const TransactionSpec& t = (*c.queue)[c.next].txn;
        requests.push_back({w, t.id, RequestKind::get_vars, {}});
        for (VarId v : t.vars) requests.back().keys.push_back({v, 0});
        request_txn.push_back(t.id);
        c.busy += 1;
      } else {
        const TransactionSpec& t = (*c.queue)[c.next].txn;
        c.ticks_worked += 1;
        c.busy += 1;
        if (c.ticks_worked == t.duration) {
          requests.push_back({w, t.id, RequestKind::commit_vars, c.held});
          request_txn.push_back(t.id);
        }
      }
    }

    const std::vector<std::size_t>* forced_order = nullptr;
    if (script) {
      for (const ServiceOrder& so : *script) {
        if (so.tick == tick) {
          forced_order = &so.order;
          break;
        }
      }
    }
    std::vector<StmReply> replies =
        forced_order ? dict.service_tick_batch(requests, *forced_order, opts.arbitration)
                     : dict.service_tick_batch(requests, opts.arbitration);

    for (const StmReply& r : replies) {
      auto& c = cur[static_cast<std::size_t>(r.worker)];
      const TransactionSpec& t = (*c.queue)[c.next].txn;
      if (trace) {
        TickEvent ev;
        ev.iteration = iteration_index;
        ev.tick = tick;
        ev.worker = r.worker;
        ev.kind = r.kind;
        ev.txn = t.id;
        for (std::size_t i = 0; i < requests.size(); ++i) {
          if (requests[i].worker == r.worker) {
            for (const VersionedKey& k : requests[i].keys) ev.keys.push_back(k.key);
            if (r.kind == RequestKind::commit_vars) {
              for (const VersionedKey& k : requests[i].keys) ev.versions.push_back(k.version);
            }
          }
        }
        if (r.kind == RequestKind::get_vars) ev.versions = r.versions;
        ev.committed = r.committed;
        trace->push_back(std::move(ev));
      }
      if (r.kind == RequestKind::get_vars) {
        c.held.clear();
        const auto& vars = t.vars;
        for (std::size_t i = 0; i < vars.size(); ++i) c.held.push_back({vars[i], r.versions[i]});
        c.working = true;
        c.ticks_worked = 0;
      } else {
        (r.committed ? res.committed : res.aborted).push_back(t.id);
        c.working = false;
        c.held.clear();
        c.next += 1;
      }
    }
  }

  for (int w = 0; w < n; ++w) {
    auto& c = cur[static_cast<std::size_t>(w)];
    if (c.working || c.next < c.queue->size()) {
      throw std::logic_error("iteration ended with unfinished transactions");
    }
    res.busy_ticks[static_cast<std::size_t>(w)] = c.busy;
  }
  std::sort(res.committed.begin(), res.committed.end());
  std::sort(res.aborted.begin(), res.aborted.end());
  return res;
}

/// Full deterministic run: assign the pending batch, execute the iteration,
/// re-queue aborted transactions in ascending id order, and repeat until all
/// transactions have committed. The makespan adds up the busiest worker's
/// load per iteration; aborted transactions still contribute to that load.
inline RunMetrics run(const Workload& w, Algorithm alg, int n_workers,
                      const RunOptions& opts = {}) {
  RunMetrics m;
  VersionDict dict(w.var_count(), opts.version_modulus);
  std::vector<TransactionSpec> pending = w.transactions;
  std::sort(pending.begin(), pending.end(),
            [](const TransactionSpec& a, const TransactionSpec& b) { return a.id < b.id; });

  while (!pending.empty()) {
    m.iterations += 1;
    const ServiceScript* script = nullptr;
    if (opts.scripts && static_cast<std::size_t>(m.iterations - 1) < opts.scripts->size()) {
      script = &(*opts.scripts)[static_cast<std::size_t>(m.iterations - 1)];
    }
    IterationPlan plan = iteration_plan(assign(alg, pending, n_workers));
    IterationResult r = run_iteration(plan, dict, m.iterations, opts,
                                      opts.record_trace ? &m.trace : nullptr, script);
    m.ms += r.contribution;
    m.na += static_cast<std::int64_t>(r.aborted.size());
    m.snum += static_cast<int>(r.committed.size());

    IterationSummary s;
    s.load = plan.load;
    s.contribution = r.contribution;
    s.nt = r.nt;
    s.committed = r.committed;
    s.aborted = r.aborted;
    s.versions_after = dict.snapshot();
    m.details.push_back(std::move(s));

    if (opts.iteration_limit > 0 && m.iterations >= opts.iteration_limit) break;
    if (r.committed.empty() && !opts.scripts) {
      throw NoProgressError(
          "iteration " + std::to_string(m.iterations) +
          " committed nothing; the identical iteration would replay forever");
    }
    if (r.committed.empty() && opts.scripts && !script) break;  // script exhausted mid-livelock
    std::vector<TransactionSpec> next;
    for (TxnId id : r.aborted) {
      for (const TransactionSpec& t : pending) {
        if (t.id == id) {
          next.push_back(t);
          break;
        }
      }
    }
    pending = std::move(next);
  }
  return m;
}

/// Composition laws: running parts one after another adds their makespans;
/// running them side by side takes the longest.
inline Duration seq_makespan(std::span<const Duration> parts) {
  Duration total = 0;
  for (Duration d : parts) total += d;
  return total;
}

inline Duration par_makespan(std::span<const Duration> parts) {
  Duration longest = 0;
  for (Duration d : parts) longest = std::max(longest, d);
  return longest;
}

/// Makespan of running everything on one worker: the sum of all durations.
inline Duration seq_makespan(const Workload& w) {
  Duration total = 0;
  for (const TransactionSpec& t : w.transactions) total += t.duration;
  return total;
}

}  // namespace stmsched
