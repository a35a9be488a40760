// Seeded random workload generation for property tests.  Sizes are kept small
// so exhaustive exploration of each generated case stays fast.
#pragma once

#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "stmsched/workload.hpp"

namespace generators {

struct WorkloadParams {
  int max_transactions = 6;  // 1..max
  int max_duration = 5;      // 1..max
  int max_vars = 3;          // variable pool size, 1..max
  bool single_var = false;   // force exactly one variable per transaction
};

inline stmsched::Workload random_workload(std::mt19937& rng, const WorkloadParams& p = {}) {
  std::uniform_int_distribution<int> txn_count_dist(1, p.max_transactions);
  std::uniform_int_distribution<int> duration_dist(1, p.max_duration);
  std::uniform_int_distribution<int> pool_dist(1, p.max_vars);

  const int pool = pool_dist(rng);
  const int txn_count = txn_count_dist(rng);

  stmsched::Workload w;
  w.name = "random";
  for (int v = 0; v < pool; ++v) w.var_names.push_back(std::string(1, static_cast<char>('A' + v)));

  std::uniform_int_distribution<int> var_dist(0, pool - 1);
  for (int id = 0; id < txn_count; ++id) {
    stmsched::TransactionSpec t;
    t.id = id;
    t.duration = duration_dist(rng);
    if (p.single_var) {
      t.vars = {var_dist(rng)};
    } else {
      std::uniform_int_distribution<int> size_dist(1, pool);
      int want = size_dist(rng);
      std::vector<int> all(static_cast<std::size_t>(pool));
      for (int v = 0; v < pool; ++v) all[static_cast<std::size_t>(v)] = v;
      std::shuffle(all.begin(), all.end(), rng);
      t.vars.assign(all.begin(), all.begin() + want);
      std::sort(t.vars.begin(), t.vars.end());
    }
    w.transactions.push_back(std::move(t));
  }
  return w;
}

}  // namespace generators
