#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stmsched {

using VarId = int;            // dense index into Workload::var_names
using TxnId = int;
using Duration = std::int64_t;  // integral time units (milliseconds by convention)
using Tick = std::int64_t;

/// One transaction: the t-variables it touches and how long its work phase runs.
struct TransactionSpec {
  TxnId id = 0;
  std::vector<VarId> vars;  // sorted, unique, non-empty
  Duration duration = 1;

  bool uses(VarId v) const { return std::binary_search(vars.begin(), vars.end(), v); }

  bool shares_var(const TransactionSpec& other) const {
    auto a = vars.begin();
    auto b = other.vars.begin();
    while (a != vars.end() && b != other.vars.end()) {
      if (*a == *b) return true;
      (*a < *b) ? ++a : ++b;
    }
    return false;
  }

  bool operator==(const TransactionSpec&) const = default;
};

struct Workload {
  std::string name;
  std::vector<std::string> var_names;  // index == VarId
  std::vector<TransactionSpec> transactions;

  int var_count() const { return static_cast<int>(var_names.size()); }
  int txn_count() const { return static_cast<int>(transactions.size()); }

  const std::string& var_name(VarId v) const {
    if (v < 0 || v >= var_count()) throw std::out_of_range("unknown t-variable id");
    return var_names[static_cast<std::size_t>(v)];
  }

  bool operator==(const Workload&) const = default;
};

enum class BuiltinWorkload { cfw, cw1, cw2 };

/// Accepts the usual spellings: "CFW", "cw-1", "CW1", "cw_2", ...
inline std::optional<BuiltinWorkload> parse_workload_name(std::string_view s) {
  std::string key;
  for (char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "cfw") return BuiltinWorkload::cfw;
  if (key == "cw1") return BuiltinWorkload::cw1;
  if (key == "cw2") return BuiltinWorkload::cw2;
  return std::nullopt;
}

namespace detail {
inline Workload make_builtin(std::string name, std::vector<std::string> var_names,
                             const std::vector<std::vector<VarId>>& vars_per_txn) {
  static constexpr Duration durations[5] = {50, 10, 10, 10, 10};
  Workload w;
  w.name = std::move(name);
  w.var_names = std::move(var_names);
  for (std::size_t i = 0; i < vars_per_txn.size(); ++i) {
    w.transactions.push_back(
        {static_cast<TxnId>(i), vars_per_txn[i], durations[i]});
  }
  return w;
}
}  // namespace detail

/// The three reference workloads: five transactions with durations
/// [50,10,10,10,10] and decreasing variable diversity.
inline Workload builtin(BuiltinWorkload which) {
  switch (which) {
    case BuiltinWorkload::cfw:
      return detail::make_builtin("CFW", {"A", "B", "C", "D", "E"},
                                  {{0}, {1}, {2}, {3}, {4}});
    case BuiltinWorkload::cw1:
      return detail::make_builtin("CW-1", {"A", "B", "C"},
                                  {{0}, {0}, {1}, {1}, {2}});
    case BuiltinWorkload::cw2:
      return detail::make_builtin("CW-2", {"A"}, {{0}, {0}, {0}, {0}, {0}});
  }
  throw std::invalid_argument("unknown builtin workload");
}

inline Workload builtin(std::string_view name) {
  auto which = parse_workload_name(name);
  if (!which) throw std::invalid_argument("unknown builtin workload: " + std::string(name));
  return builtin(*which);
}

inline std::vector<Workload> builtin_workloads() {
  return {builtin(BuiltinWorkload::cfw), builtin(BuiltinWorkload::cw1),
          builtin(BuiltinWorkload::cw2)};
}

namespace detail {
inline void nit_search(std::span<const TransactionSpec> txns, std::size_t idx,
                       std::vector<const TransactionSpec*>& chosen, int& best) {
  int upper = static_cast<int>(chosen.size() + (txns.size() - idx));
  if (upper <= best) return;  // cannot beat the incumbent
  if (idx == txns.size()) {
    best = std::max(best, static_cast<int>(chosen.size()));
    return;
  }
  const TransactionSpec& cand = txns[idx];
  bool compatible = std::none_of(chosen.begin(), chosen.end(),
                                 [&](const TransactionSpec* t) { return t->shares_var(cand); });
  if (compatible) {
    chosen.push_back(&cand);
    nit_search(txns, idx + 1, chosen, best);
    chosen.pop_back();
  }
  nit_search(txns, idx + 1, chosen, best);
}
}  // namespace detail

/// Degree of parallelism: the largest subset of transactions that is pairwise
/// non-conflicting (no shared t-variable). For single-variable transactions
/// this is just the number of distinct variables; the general case is a
/// branch-and-bound search (exponential in the worst case, fine at the small
/// sizes this library targets).
inline int nit(const Workload& w) {
  bool all_single = std::all_of(w.transactions.begin(), w.transactions.end(),
                                [](const TransactionSpec& t) { return t.vars.size() == 1; });
  if (all_single) {
    std::vector<VarId> used;
    for (const auto& t : w.transactions) used.push_back(t.vars.front());
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    return static_cast<int>(used.size());
  }
  int best = 0;
  std::vector<const TransactionSpec*> chosen;
  detail::nit_search(w.transactions, 0, chosen, best);
  return best;
}

/// Structural checks; returns one message per violation (empty == valid).
inline std::vector<std::string> validate(const Workload& w) {
  std::vector<std::string> out;
  auto record = [&](std::size_t i, const std::string& what) {
    out.push_back(what + " at record " + std::to_string(i));
  };
  for (std::size_t i = 0; i < w.transactions.size(); ++i) {
    const TransactionSpec& t = w.transactions[i];
    if (t.id != static_cast<TxnId>(i)) record(i, "non-dense transaction ids");
    if (t.vars.empty()) record(i, "empty variable set");
    if (t.duration <= 0) record(i, "non-positive duration");
    for (std::size_t k = 0; k < t.vars.size(); ++k) {
      if (t.vars[k] < 0 || t.vars[k] >= w.var_count()) {
        record(i, "unknown t-variable");
        break;
      }
    }
    if (std::adjacent_find(t.vars.begin(), t.vars.end()) != t.vars.end() ||
        !std::is_sorted(t.vars.begin(), t.vars.end())) {
      record(i, "variable list not sorted/unique");
    }
  }
  std::vector<std::string> names = w.var_names;
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end()) {
    out.push_back("duplicate variable names");
  }
  return out;
}

}  // namespace stmsched
