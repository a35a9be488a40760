// Walkthrough: schedules the three builtin workloads with every algorithm,
// prints the resulting makespan/abort table for two workers, and shows the
// first few trace events of one contended run.

#include <iostream>
#include <vector>

#include "stmsched/report.hpp"

int main() {
  using namespace stmsched;

  std::vector<Workload> workloads = builtin_workloads();
  std::vector<MetricsRow> rows;
  for (const Workload& w : workloads) {
    for (Algorithm alg : all_algorithms()) {
      rows.push_back(make_row(w, alg, 2, run(w, alg, 2)));
    }
  }
  std::cout << "Two-worker schedules for the builtin workloads (ms/na):\n"
            << render_cells_by_workers(rows) << "\n";

  Workload contended = builtin(BuiltinWorkload::cw1);
  RunOptions opts;
  opts.record_trace = true;
  RunMetrics m = run(contended, Algorithm::rr, 2, opts);
  std::cout << "First events of " << contended.name << " under round-robin, two workers:\n";
  std::string trace = format_trace(contended, m.trace);
  std::size_t shown = 0;
  std::size_t pos = 0;
  while (shown < 6 && pos < trace.size()) {
    std::size_t nl = trace.find('\n', pos);
    if (nl == std::string::npos) break;
    std::cout << "  " << trace.substr(pos, nl - pos) << "\n";
    pos = nl + 1;
    ++shown;
  }
  std::cout << "  ...\n"
            << "Final: ms=" << m.ms << " na=" << m.na << " over " << m.iterations
            << " iteration(s)\n";
  return 0;
}
