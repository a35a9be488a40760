// stmsched: deterministic STM transaction-scheduling simulator and verifier.
//
// Subcommands:
//   run      simulate one (workload, algorithm, workers) configuration
//   sweep    simulate all configurations and emit metrics rows
//   verify   exhaustively check scheduling assertions 1..5
//   report   render the makespan/abort and parallelism tables
//   compare  diff simulated metrics against a reference table
//
// Exit codes: 0 success, 1 comparison/assertion failure, 2 usage error,
// 3 exploration budget exceeded.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stmsched/report.hpp"
#include "stmsched/verifier.hpp"

namespace {

using namespace stmsched;

constexpr int kExitOk = 0;
constexpr int kExitMismatch = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBudget = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Algorithm require_algorithm(const std::string& name) {
  auto alg = parse_algorithm(name);
  if (!alg) throw UsageError("unknown algorithm '" + name + "' (expected rr|etlb|ac|aac)");
  return *alg;
}

CommitArbitration require_arbitration(const std::string& name) {
  if (name == "first-wins") return CommitArbitration::first_wins;
  if (name == "colliding-commits-abort") return CommitArbitration::colliding_commits_abort;
  throw UsageError("unknown arbitration '" + name +
                   "' (expected first-wins|colliding-commits-abort)");
}

std::vector<int> parse_worker_list(const std::string& text) {
  std::vector<int> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, ',')) {
    try {
      std::size_t pos = 0;
      int n = std::stoi(cur, &pos);
      if (pos != cur.size() || n < 1) throw std::invalid_argument(cur);
      out.push_back(n);
    } catch (const std::exception&) {
      throw UsageError("bad worker count '" + cur + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw UsageError("empty worker list");
  return out;
}

std::vector<MetricsRow> sweep_rows(const std::vector<Workload>& workloads,
                                   const std::vector<int>& workers) {
  std::vector<MetricsRow> rows;
  for (const Workload& w : workloads) {
    for (Algorithm alg : all_algorithms()) {
      for (int n : workers) {
        rows.push_back(make_row(w, alg, n, run(w, alg, n)));
      }
    }
  }
  return rows;
}

void write_output(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out_path);
  if (!f) throw UsageError("cannot open output file '" + out_path + "'");
  f << text;
}

int cmd_run(const std::string& workload_arg, const std::string& algorithm_arg, int workers,
            bool trace, const std::string& format) {
  Workload w = resolve_workload(workload_arg);
  Algorithm alg = require_algorithm(algorithm_arg);
  RunOptions opts;
  opts.record_trace = trace;
  RunMetrics m = run(w, alg, workers, opts);
  MetricsRow row = make_row(w, alg, workers, m);
  if (trace) std::cout << format_trace(w, m.trace);
  if (format == "csv") {
    std::cout << emit_csv(std::span(&row, 1));
  } else if (format == "json") {
    std::cout << emit_json(std::span(&row, 1));
  } else {
    std::cout << "workload=" << row.workload << " algorithm=" << algorithm_name(row.algorithm)
              << " workers=" << row.workers << " ms=" << row.ms << " na=" << row.na
              << " snum=" << row.snum << " iterations=" << row.iterations
              << " throughput=" << detail::format_double(row.throughput) << "\n";
  }
  return kExitOk;
}

int cmd_sweep(const std::string& workers_arg, const std::string& out_path,
              const std::string& format) {
  std::vector<Workload> workloads = builtin_workloads();
  std::vector<MetricsRow> rows = sweep_rows(workloads, parse_worker_list(workers_arg));
  write_output(format == "json" ? emit_json(rows) : emit_csv(rows), out_path);
  return kExitOk;
}

int cmd_verify(const std::string& assertion_arg, const std::string& objective_arg,
               const std::string& workload_arg, const std::string& algorithm_arg, int workers,
               std::size_t max_states, const std::string& arbitration_arg) {
  std::vector<int> ids;
  if (assertion_arg == "all") {
    ids = {1, 2, 3, 4, 5};
  } else if (!assertion_arg.empty()) {
    try {
      std::size_t pos = 0;
      int id = std::stoi(assertion_arg, &pos);
      if (pos != assertion_arg.size() || id < 1 || id > 5) throw std::invalid_argument("");
      ids = {id};
    } catch (const std::exception&) {
      throw UsageError("--assertion must be 1..5 or 'all'");
    }
  }
  if (!objective_arg.empty()) {
    auto obj = parse_objective(objective_arg);
    if (!obj) throw UsageError("--objective must be na or msna");
    int id = (*obj == Objective::max_aborts) ? 4 : 5;
    if (ids.empty()) ids = {id};
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  if (ids.empty()) ids = {1, 2, 3, 4, 5};

  std::vector<Workload> workloads =
      workload_arg.empty() ? builtin_workloads() : std::vector<Workload>{resolve_workload(workload_arg)};
  std::vector<Algorithm> algorithms =
      algorithm_arg.empty() ? all_algorithms() : std::vector<Algorithm>{require_algorithm(algorithm_arg)};
  std::vector<int> worker_counts = workers > 0 ? std::vector<int>{workers} : std::vector<int>{2, 3, 4};

  ExplorerOptions opts;
  opts.max_states = max_states;
  opts.arbitration = require_arbitration(arbitration_arg);

  int checks = 0;
  int violations = 0;
  for (const Workload& w : workloads) {
    for (Algorithm alg : algorithms) {
      for (int n : worker_counts) {
        Explorer explorer(w, alg, n, opts);
        for (int id : ids) {
          ExplorationReport rep = explorer.check_assertion(id);
          ++checks;
          if (!rep.valid) ++violations;
          std::cout << w.name << "/" << algorithm_name(alg) << "/" << n << " assertion " << id
                    << ": " << (rep.valid ? "valid" : "VIOLATED");
          if (rep.extremal) std::cout << " extremal=" << *rep.extremal;
          std::cout << " (" << rep.detail << "; states=" << rep.states_visited
                    << " branches=" << rep.branches_explored << ")\n";
          if (!rep.valid && !rep.witness.empty()) {
            std::cout << "  counterexample:\n";
            for (const TickEvent& e : rep.witness) {
              std::cout << "    " << format_trace_line(w, e) << "\n";
            }
          }
        }
      }
    }
  }
  std::cout << checks << " checks, " << violations << " violation(s)\n";
  return violations == 0 ? kExitOk : kExitMismatch;
}

int cmd_report(const std::string& tables_arg) {
  std::vector<Workload> workloads = builtin_workloads();
  std::vector<MetricsRow> rows = sweep_rows(workloads, {2, 3, 4});
  ParallelismTables agg = parallelism_tables(rows, workloads);

  std::istringstream in(tables_arg);
  std::string id;
  bool any = false;
  while (std::getline(in, id, ',')) {
    any = true;
    if (id == "1") {
      std::vector<MetricsRow> two;
      for (const MetricsRow& r : rows) {
        if (r.workers == 2) two.push_back(r);
      }
      std::cout << "Makespan/aborts, two workers\n" << render_cells_by_workers(two) << "\n";
    } else if (id == "3") {
      std::vector<MetricsRow> more;
      for (const MetricsRow& r : rows) {
        if (r.workers == 3 || r.workers == 4) more.push_back(r);
      }
      std::cout << "Makespan/aborts, three and four workers\n"
                << render_cells_by_workers(more) << "\n";
    } else if (id == "4") {
      auto ref = reference_avg_makespan();
      std::cout << render_parallelism(agg.avg_ms, agg.workload_by_nit,
                                      "Average makespan vs parallelism (workers 2-4)", &ref)
                << "\n";
    } else if (id == "5") {
      auto ref = reference_avg_throughput();
      std::cout << render_parallelism(agg.avg_throughput, agg.workload_by_nit,
                                      "Average throughput vs parallelism (workers 2-4)", &ref)
                << "\n";
    } else {
      throw UsageError("unknown table id '" + id + "' (expected 1,3,4,5)");
    }
  }
  if (!any) throw UsageError("--tables needs at least one of 1,3,4,5");
  return kExitOk;
}

int cmd_compare(const std::string& expected_arg) {
  ExpectedTable expected;
  if (expected_arg == "builtin") {
    expected = ExpectedTable::builtin();
  } else {
    std::ifstream f(expected_arg);
    if (!f) throw UsageError("cannot open expected table '" + expected_arg + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    expected = ExpectedTable::from_json(buf.str());
  }
  std::vector<int> workers;
  std::map<int, bool> seen;
  for (const auto& [key, cell] : expected.cells()) {
    if (!seen[key.workers]) {
      seen[key.workers] = true;
      workers.push_back(key.workers);
    }
  }
  std::vector<MetricsRow> rows = sweep_rows(builtin_workloads(), workers);
  DiffReport diff = compare_expected(rows, expected);
  std::cout << diff.render();
  std::cout << (diff.ok() ? "comparison passed" : "comparison FAILED") << " ("
            << diff.mismatches() << " mismatching cell(s))\n";
  return diff.ok() ? kExitOk : kExitMismatch;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic STM transaction-scheduling simulator and bounded verifier"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  std::string run_workload;
  std::string run_algorithm;
  int run_workers = 0;
  bool run_trace = false;
  std::string run_format = "text";
  run_cmd->add_option("--workload", run_workload, "Builtin name (CFW, CW-1, CW-2) or file path")
      ->required();
  run_cmd->add_option("--algorithm", run_algorithm, "rr|etlb|ac|aac")->required();
  run_cmd->add_option("--workers", run_workers, "Worker count (>= 1)")->required();
  run_cmd->add_flag("--trace", run_trace, "Print the per-tick event trace");
  run_cmd->add_option("--format", run_format, "text|csv|json")
      ->check(CLI::IsMember({"text", "csv", "json"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "Simulate all builtin configurations");
  std::string sweep_workers = "2,3,4";
  std::string sweep_out;
  std::string sweep_format = "csv";
  sweep_cmd->add_option("--workers", sweep_workers, "Comma-separated worker counts");
  sweep_cmd->add_option("--out", sweep_out, "Output file (default: stdout)");
  sweep_cmd->add_option("--format", sweep_format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* verify_cmd = app.add_subcommand("verify", "Exhaustively check scheduling assertions");
  std::string verify_assertion;
  std::string verify_objective;
  std::string verify_workload;
  std::string verify_algorithm;
  int verify_workers = 0;
  std::size_t verify_max_states = ExplorerOptions{}.max_states;
  std::string verify_arbitration = "first-wins";
  verify_cmd->add_option("--assertion", verify_assertion, "1..5 or 'all' (default all)");
  verify_cmd->add_option("--objective", verify_objective, "na|msna (shorthand for 4|5)");
  verify_cmd->add_option("--workload", verify_workload, "Restrict to one workload (name or path)");
  verify_cmd->add_option("--algorithm", verify_algorithm, "Restrict to one algorithm");
  verify_cmd->add_option("--workers", verify_workers, "Restrict to one worker count");
  verify_cmd->add_option("--max-states", verify_max_states, "Exploration state budget");
  verify_cmd->add_option("--arbitration", verify_arbitration,
                         "first-wins|colliding-commits-abort (fault injection)");

  auto* report_cmd = app.add_subcommand("report", "Render the result tables");
  std::string report_tables = "1,3,4,5";
  report_cmd->add_option("--tables", report_tables, "Comma-separated table ids (1,3,4,5)");

  auto* compare_cmd = app.add_subcommand("compare", "Compare simulated metrics to a reference");
  std::string compare_expected_arg = "builtin";
  compare_cmd->add_option("--expected", compare_expected_arg, "'builtin' or a JSON file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (run_cmd->parsed()) {
      return cmd_run(run_workload, run_algorithm, run_workers, run_trace, run_format);
    }
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_workers, sweep_out, sweep_format);
    if (verify_cmd->parsed()) {
      return cmd_verify(verify_assertion, verify_objective, verify_workload, verify_algorithm,
                        verify_workers, verify_max_states, verify_arbitration);
    }
    if (report_cmd->parsed()) return cmd_report(report_tables);
    if (compare_cmd->parsed()) return cmd_compare(compare_expected_arg);
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitMismatch;
  }
  return kExitUsage;
}
