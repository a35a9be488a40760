#pragma once

#include <algorithm>
#include <cctype>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stmsched/workload.hpp"

namespace stmsched {

enum class Algorithm { rr, etlb, ac, aac };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::rr: return "rr";
    case Algorithm::etlb: return "etlb";
    case Algorithm::ac: return "ac";
    case Algorithm::aac: return "aac";
  }
  throw std::invalid_argument("unknown algorithm");
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  std::string key;
  for (char c : s) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "rr") return Algorithm::rr;
  if (key == "etlb") return Algorithm::etlb;
  if (key == "ac") return Algorithm::ac;
  if (key == "aac") return Algorithm::aac;
  return std::nullopt;
}

inline std::vector<Algorithm> all_algorithms() {
  return {Algorithm::rr, Algorithm::etlb, Algorithm::ac, Algorithm::aac};
}

/// A transaction placed on a worker queue, occupying the load-time interval
/// [start, end) == [start, start + duration).
struct ScheduledEntry {
  TransactionSpec txn;
  int worker = 0;
  Duration start = 0;
  Duration end = 0;
  bool operator==(const ScheduledEntry&) const = default;
};

struct Assignment {
  int n_workers = 0;
  std::vector<std::vector<ScheduledEntry>> queues;  // one per worker, FIFO

  std::vector<ScheduledEntry> all_entries() const {
    std::vector<ScheduledEntry> out;
    for (const auto& q : queues) out.insert(out.end(), q.begin(), q.end());
    return out;
  }
};

/// True when transaction x, placed over [t1, t2], would run concurrently with
/// an already scheduled entry that shares a t-variable. Two intervals overlap
/// when one's endpoint falls strictly inside the other (back-to-back intervals
/// do not overlap); an entry never conflicts with itself.
inline bool is_conflict(const TransactionSpec& x, Duration t1, Duration t2,
                        std::span<const ScheduledEntry> scheduled) {
  for (const ScheduledEntry& e : scheduled) {
    if (e.txn.id == x.id) continue;
    bool overlap = (e.start < t2 && t2 <= e.end) || (t1 < e.end && e.end <= t2);
    if (overlap && e.txn.shares_var(x)) return true;
  }
  return false;
}

namespace detail {

struct Builder {
  explicit Builder(int n) {
    if (n < 1) throw std::invalid_argument("worker count must be >= 1");
    a.n_workers = n;
    a.queues.resize(static_cast<std::size_t>(n));
    load.assign(static_cast<std::size_t>(n), 0);
  }

  void append(const TransactionSpec& t, int w) {
    auto& q = a.queues[static_cast<std::size_t>(w)];
    Duration start = load[static_cast<std::size_t>(w)];
    q.push_back({t, w, start, start + t.duration});
    load[static_cast<std::size_t>(w)] += t.duration;
    flat.push_back(q.back());
  }

  int least_loaded() const {
    int best = 0;
    for (int w = 1; w < a.n_workers; ++w) {
      if (load[static_cast<std::size_t>(w)] < load[static_cast<std::size_t>(best)]) best = w;
    }
    return best;
  }

  Assignment a;
  std::vector<Duration> load;
  std::vector<ScheduledEntry> flat;  // placement order, for conflict lookups
};

/// Request ticks of an entry at queue position pos: each predecessor adds one
/// start tick, so the reads happen on tick start+pos+1 and the commit on tick
/// end+pos+1 (see tick_timeline).
struct TickWindow {
  Tick first = 0;
  Tick last = 0;
};

inline TickWindow tick_window(Duration start, Duration end, std::size_t pos) {
  Tick off = static_cast<Tick>(pos) + 1;
  return {start + off, end + off};
}

inline bool windows_overlap(TickWindow a, TickWindow b) {
  return !(a.last < b.first || b.last < a.first);
}

}  // namespace detail

/// Round robin: the k-th transaction of the batch goes to worker k mod n.
/// The position counter resets with every batch.
inline Assignment assign_rr(std::span<const TransactionSpec> batch, int n) {
  detail::Builder b(n);
  for (std::size_t k = 0; k < batch.size(); ++k) {
    b.append(batch[k], static_cast<int>(k % static_cast<std::size_t>(n)));
  }
  return std::move(b.a);
}

/// Execution-time load balancing: greedy least-loaded worker, ties to the
/// lowest index.
inline Assignment assign_etlb(std::span<const TransactionSpec> batch, int n) {
  detail::Builder b(n);
  for (const TransactionSpec& t : batch) b.append(t, b.least_loaded());
  return std::move(b.a);
}

/// Avoid conflicts: a transaction that shares a t-variable with an already
/// assigned one joins the queue that holds the first such transaction
/// (lowest conflicting id); otherwise it goes to the least-loaded worker.
inline Assignment assign_ac(std::span<const TransactionSpec> batch, int n) {
  detail::Builder b(n);
  for (const TransactionSpec& t : batch) {
    const ScheduledEntry* first_conflicting = nullptr;
    for (const ScheduledEntry& e : b.flat) {
      if (e.txn.shares_var(t) &&
          (first_conflicting == nullptr || e.txn.id < first_conflicting->txn.id)) {
        first_conflicting = &e;
      }
    }
    b.append(t, first_conflicting ? first_conflicting->worker : b.least_loaded());
  }
  return std::move(b.a);
}

/// Advanced avoid conflicts: every worker is evaluated and the transaction is
/// placed where the iteration makespan (max load) stays smallest among
/// placements that are race free. Race free means both no load-interval
/// conflict (is_conflict) and no tick-window overlap with an entry sharing a
/// t-variable; the second condition matters because request ticks are shifted
/// by queue position, so two load-disjoint placements can still race on the
/// same tick. Appending after the latest same-variable tick window always
/// satisfies both, so for single-variable transactions a feasible placement
/// always exists; if a multi-variable transaction leaves no fully feasible
/// worker, the tick-window condition is dropped for that placement.
/// Ties go to the lowest worker index.
inline Assignment assign_aac(std::span<const TransactionSpec> batch, int n) {
  detail::Builder b(n);
  for (const TransactionSpec& t : batch) {
    auto pick = [&](bool require_tick_disjoint) -> std::optional<int> {
      std::optional<int> best;
      Duration best_ms = std::numeric_limits<Duration>::max();
      for (int w = 0; w < n; ++w) {
        Duration t1 = b.load[static_cast<std::size_t>(w)];
        Duration t2 = t1 + t.duration;
        if (is_conflict(t, t1, t2, b.flat)) continue;
        if (require_tick_disjoint) {
          auto cand = detail::tick_window(t1, t2, b.a.queues[static_cast<std::size_t>(w)].size());
          bool races = false;
          for (const ScheduledEntry& e : b.flat) {
            if (e.worker == w || !e.txn.shares_var(t)) continue;
            std::size_t pos = 0;
            for (const ScheduledEntry& q : b.a.queues[static_cast<std::size_t>(e.worker)]) {
              if (q.txn.id == e.txn.id) break;
              ++pos;
            }
            if (detail::windows_overlap(cand, detail::tick_window(e.start, e.end, pos))) {
              races = true;
              break;
            }
          }
          if (races) continue;
        }
        Duration ms = 0;
        for (int v = 0; v < n; ++v) {
          Duration lv = b.load[static_cast<std::size_t>(v)] + (v == w ? t.duration : 0);
          ms = std::max(ms, lv);
        }
        if (ms < best_ms) {
          best_ms = ms;
          best = w;
        }
      }
      return best;
    };
    std::optional<int> w = pick(true);
    if (!w) w = pick(false);
    b.append(t, *w);  // pick(false) always finds a spot: appending never load-overlaps everything
  }
  return std::move(b.a);
}

inline Assignment assign(Algorithm alg, std::span<const TransactionSpec> batch, int n) {
  switch (alg) {
    case Algorithm::rr: return assign_rr(batch, n);
    case Algorithm::etlb: return assign_etlb(batch, n);
    case Algorithm::ac: return assign_ac(batch, n);
    case Algorithm::aac: return assign_aac(batch, n);
  }
  throw std::invalid_argument("unknown algorithm");
}

/// Per-iteration bookkeeping. Each worker needs one start tick per queued
/// transaction plus its load, every worker performs the same number of ticks
/// nt, and the iteration contributes load[max_index] to the makespan.
struct IterationPlan {
  Assignment assignment;
  std::vector<Duration> load;
  int max_index = 0;                    // lowest worker index with maximal load
  std::vector<Tick> nt_per_worker;      // load_i + |queue_i|
  Tick nt = 0;                          // max over workers
  std::vector<Tick> idle_ticks;         // nt - nt_i, padded at the end

  Duration contribution() const {
    return load.empty() ? 0 : load[static_cast<std::size_t>(max_index)];
  }
};

inline IterationPlan iteration_plan(Assignment a) {
  IterationPlan p;
  p.assignment = std::move(a);
  int n = p.assignment.n_workers;
  p.load.assign(static_cast<std::size_t>(n), 0);
  p.nt_per_worker.assign(static_cast<std::size_t>(n), 0);
  for (int w = 0; w < n; ++w) {
    const auto& q = p.assignment.queues[static_cast<std::size_t>(w)];
    Duration sum = 0;
    for (const ScheduledEntry& e : q) sum += e.txn.duration;
    p.load[static_cast<std::size_t>(w)] = sum;
    p.nt_per_worker[static_cast<std::size_t>(w)] = sum + static_cast<Tick>(q.size());
    if (sum > p.load[static_cast<std::size_t>(p.max_index)]) p.max_index = w;
  }
  p.nt = 0;
  for (Tick t : p.nt_per_worker) p.nt = std::max(p.nt, t);
  p.idle_ticks.assign(static_cast<std::size_t>(n), 0);
  for (int w = 0; w < n; ++w) {
    p.idle_ticks[static_cast<std::size_t>(w)] = p.nt - p.nt_per_worker[static_cast<std::size_t>(w)];
  }
  return p;
}

}  // namespace stmsched
