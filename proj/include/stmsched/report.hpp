#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "stmsched/scheduling.hpp"
#include "stmsched/simulator.hpp"
#include "stmsched/workload_io.hpp"

namespace stmsched {

struct ConfigKey {
  std::string workload;
  Algorithm algorithm = Algorithm::rr;
  int workers = 0;
  auto operator<=>(const ConfigKey&) const = default;

  std::string str() const {
    return workload + "/" + algorithm_name(algorithm) + "/" + std::to_string(workers);
  }
};

struct CellValue {
  Duration ms = 0;
  std::int64_t na = 0;
  auto operator<=>(const CellValue&) const = default;
};

/// One reference cell. `published` is the value the reference tables print;
/// `derived` is set on the cells where this model provably produces a
/// different (better) value than the printed one, with `note` explaining it.
struct ExpectedCell {
  CellValue published;
  std::optional<CellValue> derived;
  std::string note;
  bool annotated() const { return derived.has_value(); }
};

class ExpectedTable {
 public:
  static ExpectedTable builtin() {
    ExpectedTable t;
    auto put = [&](const char* w, Algorithm a, int n, Duration ms, std::int64_t na) {
      t.cells_[{w, a, n}] = ExpectedCell{{ms, na}, std::nullopt, ""};
    };
    // two workers
    put("CFW", Algorithm::rr, 2, 70, 0);
    put("CFW", Algorithm::etlb, 2, 50, 0);
    put("CFW", Algorithm::ac, 2, 50, 0);
    put("CFW", Algorithm::aac, 2, 50, 0);
    put("CW-1", Algorithm::rr, 2, 120, 1);
    put("CW-1", Algorithm::etlb, 2, 100, 1);
    put("CW-1", Algorithm::ac, 2, 60, 0);
    put("CW-1", Algorithm::aac, 2, 60, 0);
    put("CW-2", Algorithm::rr, 2, 120, 1);
    put("CW-2", Algorithm::etlb, 2, 100, 1);
    put("CW-2", Algorithm::ac, 2, 90, 0);
    put("CW-2", Algorithm::aac, 2, 90, 0);
    // three and four workers
    put("CFW", Algorithm::rr, 3, 60, 0);
    put("CFW", Algorithm::rr, 4, 60, 0);
    put("CFW", Algorithm::etlb, 3, 50, 0);
    put("CFW", Algorithm::etlb, 4, 50, 0);
    put("CFW", Algorithm::ac, 3, 50, 0);
    put("CFW", Algorithm::ac, 4, 50, 0);
    put("CFW", Algorithm::aac, 3, 50, 0);
    put("CFW", Algorithm::aac, 4, 50, 0);
    put("CW-1", Algorithm::rr, 3, 110, 1);
    put("CW-1", Algorithm::rr, 4, 110, 2);
    put("CW-1", Algorithm::etlb, 3, 100, 1);
    put("CW-1", Algorithm::etlb, 4, 100, 2);
    put("CW-1", Algorithm::ac, 3, 70, 0);
    put("CW-1", Algorithm::ac, 4, 70, 0);
    put("CW-1", Algorithm::aac, 3, 60, 0);
    put("CW-1", Algorithm::aac, 4, 60, 0);
    put("CW-2", Algorithm::rr, 3, 160, 3);
    put("CW-2", Algorithm::rr, 4, 210, 6);
    put("CW-2", Algorithm::etlb, 3, 200, 6);
    put("CW-2", Algorithm::etlb, 4, 200, 6);
    put("CW-2", Algorithm::ac, 3, 90, 0);
    put("CW-2", Algorithm::ac, 4, 90, 0);
    put("CW-2", Algorithm::aac, 3, 90, 0);
    put("CW-2", Algorithm::aac, 4, 90, 0);
    // Co-locating every conflicting CW-1 transaction on one worker keeps that
    // worker at 60ms of load for any worker count; the published reference
    // lists 70 for three and four workers. Both values are kept: 70 as the
    // published number, 60 as what this co-location rule derives.
    for (int n : {3, 4}) {
      ExpectedCell& c = t.cells_[{"CW-1", Algorithm::ac, n}];
      c.derived = CellValue{60, 0};
      c.note = "published 70/0; conflict co-location derives 60/0";
    }
    return t;
  }

  const std::map<ConfigKey, ExpectedCell>& cells() const { return cells_; }
  std::map<ConfigKey, ExpectedCell>& cells() { return cells_; }

  std::string to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& [key, cell] : cells_) {
      nlohmann::json j{{"workload", key.workload},
                       {"algorithm", algorithm_name(key.algorithm)},
                       {"workers", key.workers},
                       {"ms", cell.published.ms},
                       {"na", cell.published.na}};
      if (cell.derived) {
        j["derived_ms"] = cell.derived->ms;
        j["derived_na"] = cell.derived->na;
      }
      if (!cell.note.empty()) j["note"] = cell.note;
      arr.push_back(std::move(j));
    }
    return nlohmann::json{{"cells", std::move(arr)}}.dump(2) + "\n";
  }

  static ExpectedTable from_json(const std::string& text) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed expected-table document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("cells") || !doc["cells"].is_array()) {
      throw ParseError("expected-table document needs a 'cells' array");
    }
    ExpectedTable t;
    for (const auto& j : doc["cells"]) {
      auto alg = parse_algorithm(j.at("algorithm").get<std::string>());
      if (!alg) throw ParseError("unknown algorithm in expected-table document");
      ConfigKey key{j.at("workload").get<std::string>(), *alg, j.at("workers").get<int>()};
      ExpectedCell cell;
      cell.published = {j.at("ms").get<Duration>(), j.at("na").get<std::int64_t>()};
      if (j.contains("derived_ms") || j.contains("derived_na")) {
        cell.derived = CellValue{j.at("derived_ms").get<Duration>(),
                                 j.at("derived_na").get<std::int64_t>()};
      }
      if (j.contains("note")) cell.note = j.at("note").get<std::string>();
      t.cells_[std::move(key)] = std::move(cell);
    }
    return t;
  }

 private:
  std::map<ConfigKey, ExpectedCell> cells_;
};

/// Transactions per second for txn_count transactions finishing in ms
/// milliseconds.
inline double throughput(int txn_count, Duration ms) {
  if (ms <= 0) throw std::domain_error("throughput requires a positive makespan");
  return 1000.0 * static_cast<double>(txn_count) / static_cast<double>(ms);
}

// ---- metrics rows and file formats -----------------------------------------

struct MetricsRow {
  std::string workload;
  Algorithm algorithm = Algorithm::rr;
  int workers = 0;
  Duration ms = 0;
  std::int64_t na = 0;
  int snum = 0;
  int iterations = 0;
  double throughput = 0.0;
  bool operator==(const MetricsRow&) const = default;

  ConfigKey key() const { return {workload, algorithm, workers}; }
};

inline MetricsRow make_row(const Workload& w, Algorithm alg, int n, const RunMetrics& m) {
  MetricsRow r;
  r.workload = w.name;
  r.algorithm = alg;
  r.workers = n;
  r.ms = m.ms;
  r.na = m.na;
  r.snum = m.snum;
  r.iterations = m.iterations;
  r.throughput = stmsched::throughput(m.snum, m.ms);
  return r;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw std::logic_error("double formatting failed");
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("malformed number '" + s + "'");
  }
  return v;
}

inline std::int64_t parse_int(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ParseError("malformed integer '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline constexpr const char* kMetricsCsvHeader =
    "workload,algorithm,workers,ms,na,snum,iterations,throughput";

inline std::string emit_csv(std::span<const MetricsRow> rows) {
  std::ostringstream out;
  out << kMetricsCsvHeader << "\n";
  for (const MetricsRow& r : rows) {
    out << r.workload << ',' << algorithm_name(r.algorithm) << ',' << r.workers << ',' << r.ms
        << ',' << r.na << ',' << r.snum << ',' << r.iterations << ','
        << detail::format_double(r.throughput) << "\n";
  }
  return out.str();
}

inline std::vector<MetricsRow> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) {
    throw ParseError("metrics CSV must start with header '" + std::string(kMetricsCsvHeader) +
                     "'");
  }
  std::vector<MetricsRow> rows;
  std::size_t num = 1;
  while (std::getline(in, line)) {
    ++num;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) f.push_back(cur);
    if (f.size() != 8) {
      throw ParseError("metrics CSV line " + std::to_string(num) + " has " +
                       std::to_string(f.size()) + " fields, expected 8");
    }
    auto alg = parse_algorithm(f[1]);
    if (!alg) throw ParseError("unknown algorithm '" + f[1] + "' on line " + std::to_string(num));
    MetricsRow r;
    r.workload = f[0];
    r.algorithm = *alg;
    r.workers = static_cast<int>(detail::parse_int(f[2]));
    r.ms = detail::parse_int(f[3]);
    r.na = detail::parse_int(f[4]);
    r.snum = static_cast<int>(detail::parse_int(f[5]));
    r.iterations = static_cast<int>(detail::parse_int(f[6]));
    r.throughput = detail::parse_double(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string emit_json(std::span<const MetricsRow> rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const MetricsRow& r : rows) {
    arr.push_back({{"workload", r.workload},
                   {"algorithm", algorithm_name(r.algorithm)},
                   {"workers", r.workers},
                   {"ms", r.ms},
                   {"na", r.na},
                   {"snum", r.snum},
                   {"iterations", r.iterations},
                   {"throughput", r.throughput}});
  }
  return nlohmann::json{{"results", std::move(arr)}}.dump(2) + "\n";
}

inline std::vector<MetricsRow> parse_json_rows(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed metrics document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array()) {
    throw ParseError("metrics document needs a 'results' array");
  }
  std::vector<MetricsRow> rows;
  for (const auto& j : doc["results"]) {
    auto alg = parse_algorithm(j.at("algorithm").get<std::string>());
    if (!alg) throw ParseError("unknown algorithm in metrics document");
    MetricsRow r;
    r.workload = j.at("workload").get<std::string>();
    r.algorithm = *alg;
    r.workers = j.at("workers").get<int>();
    r.ms = j.at("ms").get<Duration>();
    r.na = j.at("na").get<std::int64_t>();
    r.snum = j.at("snum").get<int>();
    r.iterations = j.at("iterations").get<int>();
    r.throughput = j.at("throughput").get<double>();
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- aggregation over worker counts ----------------------------------------

/// Averages over n ∈ {2,3,4} per (workload, algorithm), rows keyed by the
/// workload's independent-transaction count. Column order: rr, etlb, ac, aac.
struct ParallelismTables {
  std::vector<int> nit_rows;  // ascending
  std::map<int, std::string> workload_by_nit;
  std::map<int, std::array<double, 4>> avg_ms;
  std::map<int, std::array<double, 4>> avg_throughput;
};

inline ParallelismTables parallelism_tables(std::span<const MetricsRow> rows,
                                            std::span<const Workload> workloads,
                                            std::vector<int> worker_counts = {2, 3, 4}) {
  std::map<ConfigKey, const MetricsRow*> by_key;
  for (const MetricsRow& r : rows) by_key[r.key()] = &r;

  std::vector<std::string> missing;
  ParallelismTables out;
  for (const Workload& w : workloads) {
    int k = nit(w);
    out.nit_rows.push_back(k);
    out.workload_by_nit[k] = w.name;
    std::array<double, 4> ms_row{};
    std::array<double, 4> th_row{};
    std::size_t col = 0;
    for (Algorithm alg : all_algorithms()) {
      double ms_sum = 0;
      double th_sum = 0;
      for (int n : worker_counts) {
        auto it = by_key.find({w.name, alg, n});
        if (it == by_key.end()) {
          missing.push_back(ConfigKey{w.name, alg, n}.str());
          continue;
        }
        ms_sum += static_cast<double>(it->second->ms);
        th_sum += it->second->throughput;
      }
      ms_row[col] = ms_sum / static_cast<double>(worker_counts.size());
      th_row[col] = th_sum / static_cast<double>(worker_counts.size());
      ++col;
    }
    out.avg_ms[k] = ms_row;
    out.avg_throughput[k] = th_row;
  }
  if (!missing.empty()) {
    std::string msg = "missing configurations:";
    for (const std::string& m : missing) msg += " " + m;
    throw std::invalid_argument(msg);
  }
  std::sort(out.nit_rows.begin(), out.nit_rows.end());
  out.nit_rows.erase(std::unique(out.nit_rows.begin(), out.nit_rows.end()), out.nit_rows.end());
  return out;
}

/// Rebuilds metrics rows from a reference table's published cells (snum =
/// txn_count, one iteration per unit of na is not reconstructible and is left
/// zero); used to aggregate exactly what the published tables printed.
inline std::vector<MetricsRow> rows_from_expected(const ExpectedTable& table, int txn_count) {
  std::vector<MetricsRow> rows;
  for (const auto& [key, cell] : table.cells()) {
    MetricsRow r;
    r.workload = key.workload;
    r.algorithm = key.algorithm;
    r.workers = key.workers;
    r.ms = cell.published.ms;
    r.na = cell.published.na;
    r.snum = txn_count;
    r.iterations = 0;
    r.throughput = throughput(txn_count, cell.published.ms);
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---- published reference values for the averaged tables --------------------

struct ReferenceCell {
  double value = 0;
  int decimals = 0;  // digits the reference prints after the decimal point
};

/// Published averaged-makespan reference (columns rr, etlb, ac, aac).
inline std::map<int, std::array<ReferenceCell, 4>> reference_avg_makespan() {
  return {{1, {{{163.33, 2}, {166.66, 2}, {90, 0}, {90, 0}}}},
          {3, {{{113.33, 2}, {100, 0}, {66.66, 2}, {60, 0}}}},
          {5, {{{63.33, 2}, {50, 0}, {50, 0}, {50, 0}}}}};
}

/// Published averaged-throughput reference (columns rr, etlb, ac, aac).
inline std::map<int, std::array<ReferenceCell, 4>> reference_avg_throughput() {
  return {{1, {{{32.33, 2}, {33.33, 2}, {55, 0}, {55, 0}}}},
          {3, {{{44, 0}, {50, 0}, {75, 0}, {83, 0}}}},
          {5, {{{79, 0}, {100, 0}, {100, 0}, {100, 0}}}}};
}

inline double round_to(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::round(v * scale) / scale;
}

inline double trunc_to(double v, int decimals) {
  double scale = std::pow(10.0, decimals);
  return std::trunc(v * scale) / scale;
}

/// A computed aggregate matches a published cell when it is within `tol`, or
/// when rounding or truncating it at the published precision reproduces the
/// printed digits (the reference mixes both conventions).
inline bool matches_reference(double computed, const ReferenceCell& ref, double tol) {
  if (std::abs(computed - ref.value) <= tol) return true;
  return round_to(computed, ref.decimals) == ref.value ||
         trunc_to(computed, ref.decimals) == ref.value;
}

// ---- expected-vs-actual comparison ------------------------------------------

enum class CellStatus { exact, annotated_divergence, mismatch, missing };

struct CellDiff {
  ConfigKey key;
  ExpectedCell expected;
  std::optional<CellValue> actual;
  CellStatus status = CellStatus::missing;
};

struct DiffReport {
  std::vector<CellDiff> cells;

  bool ok() const {
    for (const CellDiff& c : cells) {
      if (c.status == CellStatus::mismatch || c.status == CellStatus::missing) return false;
    }
    return true;
  }

  int mismatches() const {
    int k = 0;
    for (const CellDiff& c : cells) {
      if (c.status == CellStatus::mismatch || c.status == CellStatus::missing) ++k;
    }
    return k;
  }

  std::string render() const {
    std::ostringstream out;
    for (const CellDiff& c : cells) {
      out << std::left << std::setw(14) << c.key.str() << ' ';
      switch (c.status) {
        case CellStatus::exact:
          out << "match       ms=" << c.actual->ms << " na=" << c.actual->na;
          break;
        case CellStatus::annotated_divergence:
          out << "divergence  computed ms=" << c.actual->ms << " na=" << c.actual->na
              << " | published ms=" << c.expected.published.ms
              << " na=" << c.expected.published.na << " (" << c.expected.note << ")";
          break;
        case CellStatus::mismatch:
          out << "MISMATCH    computed ms=" << c.actual->ms << " na=" << c.actual->na
              << " | expected ms=" << c.expected.published.ms
              << " na=" << c.expected.published.na;
          break;
        case CellStatus::missing:
          out << "MISSING     expected ms=" << c.expected.published.ms
              << " na=" << c.expected.published.na;
          break;
      }
      out << "\n";
    }
    return out.str();
  }
};

inline DiffReport compare_expected(std::span<const MetricsRow> actual,
                                   const ExpectedTable& expected) {
  std::map<ConfigKey, CellValue> got;
  for (const MetricsRow& r : actual) got[r.key()] = {r.ms, r.na};
  DiffReport report;
  for (const auto& [key, cell] : expected.cells()) {
    CellDiff d;
    d.key = key;
    d.expected = cell;
    auto it = got.find(key);
    if (it == got.end()) {
      d.status = CellStatus::missing;
    } else {
      d.actual = it->second;
      if (it->second == cell.published) {
        d.status = CellStatus::exact;
      } else if (cell.derived && it->second == *cell.derived) {
        d.status = CellStatus::annotated_divergence;
      } else {
        d.status = CellStatus::mismatch;
      }
    }
    report.cells.push_back(std::move(d));
  }
  return report;
}

// ---- event trace rendering ----------------------------------------------------

inline std::string format_trace_line(const Workload& w, const TickEvent& e) {
  std::ostringstream out;
  out << "iter=" << e.iteration << " tick=" << e.tick << " worker=" << e.worker
      << " event=" << (e.kind == RequestKind::get_vars ? "get" : "commit") << " txn=T" << e.txn
      << " vars=";
  for (std::size_t i = 0; i < e.keys.size(); ++i) {
    if (i) out << ',';
    out << w.var_name(e.keys[i]);
  }
  out << " versions=";
  for (std::size_t i = 0; i < e.versions.size(); ++i) {
    if (i) out << ',';
    out << e.versions[i];
  }
  out << " outcome="
      << (e.kind == RequestKind::get_vars ? "read" : (e.committed ? "committed" : "aborted"));
  return out.str();
}

inline std::string format_trace(const Workload& w, std::span<const TickEvent> events) {
  std::string out;
  for (const TickEvent& e : events) out += format_trace_line(w, e) + "\n";
  return out;
}

// ---- plain-text table rendering ---------------------------------------------

/// Renders ms/na cells, one block per worker count, rows by workload.
inline std::string render_cells_by_workers(std::span<const MetricsRow> rows) {
  std::map<int, std::map<std::string, std::map<Algorithm, const MetricsRow*>>> grouped;
  for (const MetricsRow& r : rows) grouped[r.workers][r.workload][r.algorithm] = &r;
  std::ostringstream out;
  for (const auto& [n, by_workload] : grouped) {
    out << "workers=" << n << "\n";
    out << std::left << std::setw(10) << "workload";
    for (Algorithm alg : all_algorithms()) {
      out << std::setw(12) << (std::string(algorithm_name(alg)) + " ms/na");
    }
    out << "\n";
    for (const auto& [wname, by_alg] : by_workload) {
      out << std::left << std::setw(10) << wname;
      for (Algorithm alg : all_algorithms()) {
        auto it = by_alg.find(alg);
        std::string cell = "-";
        if (it != by_alg.end()) {
          cell = std::to_string(it->second->ms) + "/" + std::to_string(it->second->na);
        }
        out << std::setw(12) << cell;
      }
      out << "\n";
    }
  }
  return out.str();
}

namespace detail {

inline std::string format_cell(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  std::string s = out.str();
  while (s.size() > 1 && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace detail

/// Renders one averaged table (ms or throughput); when `reference` is given,
/// cells whose rounded value differs from the published one get a footnote
/// with the exact computed value.
inline std::string render_parallelism(
    const std::map<int, std::array<double, 4>>& table,
    const std::map<int, std::string>& workload_by_nit, const std::string& caption,
    const std::map<int, std::array<ReferenceCell, 4>>* reference = nullptr) {
  std::ostringstream out;
  out << caption << "\n";
  out << std::left << std::setw(16) << "nit (workload)";
  for (Algorithm alg : all_algorithms()) out << std::setw(10) << algorithm_name(alg);
  out << "\n";
  std::vector<std::string> footnotes;
  for (const auto& [k, cols] : table) {
    std::string label = std::to_string(k);
    if (auto it = workload_by_nit.find(k); it != workload_by_nit.end()) {
      label += " (" + it->second + ")";
    }
    out << std::left << std::setw(16) << label;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      out << std::setw(10) << detail::format_cell(cols[i]);
      if (reference) {
        auto ref_row = reference->find(k);
        if (ref_row != reference->end()) {
          const ReferenceCell& ref = ref_row->second[i];
          if (round_to(cols[i], ref.decimals) != ref.value) {
            footnotes.push_back("nit=" + std::to_string(k) + " " +
                                algorithm_name(all_algorithms()[i]) + ": computed " +
                                detail::format_cell(cols[i]) + ", published " +
                                detail::format_cell(ref.value));
          }
        }
      }
    }
    out << "\n";
  }
  for (const std::string& f : footnotes) out << "  note: " << f << "\n";
  return out.str();
}

}  // namespace stmsched
