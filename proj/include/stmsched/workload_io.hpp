#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "stmsched/workload.hpp"

namespace stmsched {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Workload document format (JSON):
///   {
///     "name": "custom",               // optional
///     "variables": ["A", "B"],        // optional; derived from use order if absent
///     "transactions": [
///       {"id": 0, "vars": ["A"], "duration": 7},   // id optional (positional)
///       {"vars": ["A", "B"], "duration": 3}
///     ]
///   }
inline Workload parse_workload(const std::string& text, std::string default_name = "custom") {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed workload document: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("transactions") || !doc["transactions"].is_array()) {
    throw ParseError("workload document must be an object with a 'transactions' array");
  }

  Workload w;
  w.name = doc.value("name", default_name);

  bool fixed_vars = doc.contains("variables");
  if (fixed_vars) {
    if (!doc["variables"].is_array()) throw ParseError("'variables' must be an array of names");
    for (const auto& v : doc["variables"]) {
      if (!v.is_string()) throw ParseError("'variables' must be an array of names");
      w.var_names.push_back(v.get<std::string>());
    }
  }
  auto var_id = [&](const std::string& name, std::size_t record) -> VarId {
    for (std::size_t i = 0; i < w.var_names.size(); ++i) {
      if (w.var_names[i] == name) return static_cast<VarId>(i);
    }
    if (fixed_vars) {
      throw ParseError("unknown t-variable '" + name + "' at record " + std::to_string(record));
    }
    w.var_names.push_back(name);
    return static_cast<VarId>(w.var_names.size() - 1);
  };

  std::size_t idx = 0;
  for (const auto& rec : doc["transactions"]) {
    if (!rec.is_object()) throw ParseError("transaction record " + std::to_string(idx) + " must be an object");
    TransactionSpec t;
    t.id = static_cast<TxnId>(idx);
    if (rec.contains("id")) {
      if (!rec["id"].is_number_integer() || rec["id"].get<long>() != static_cast<long>(idx)) {
        throw ParseError("id mismatch at record " + std::to_string(idx) + " (ids are positional)");
      }
    }
    if (!rec.contains("vars") || !rec["vars"].is_array() || rec["vars"].empty()) {
      throw ParseError("missing or empty 'vars' at record " + std::to_string(idx));
    }
    for (const auto& v : rec["vars"]) {
      if (!v.is_string()) throw ParseError("'vars' must hold names at record " + std::to_string(idx));
      t.vars.push_back(var_id(v.get<std::string>(), idx));
    }
    std::sort(t.vars.begin(), t.vars.end());
    if (std::adjacent_find(t.vars.begin(), t.vars.end()) != t.vars.end()) {
      throw ParseError("duplicate variable names at record " + std::to_string(idx));
    }
    if (!rec.contains("duration") || !rec["duration"].is_number_integer()) {
      throw ParseError("missing integral duration at record " + std::to_string(idx));
    }
    t.duration = rec["duration"].get<Duration>();
    if (t.duration <= 0) {
      throw ParseError("non-positive duration at record " + std::to_string(idx));
    }
    w.transactions.push_back(std::move(t));
    ++idx;
  }
  return w;
}

inline Workload load_workload_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open workload file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_workload(buf.str(), stem);
}

/// Emits the canonical document form; parse_workload(emit_workload(w)) == w.
inline std::string emit_workload(const Workload& w) {
  nlohmann::json doc;
  doc["name"] = w.name;
  doc["variables"] = w.var_names;
  auto& txns = doc["transactions"] = nlohmann::json::array();
  for (const auto& t : w.transactions) {
    nlohmann::json rec;
    rec["id"] = t.id;
    auto& vars = rec["vars"] = nlohmann::json::array();
    for (VarId v : t.vars) vars.push_back(w.var_name(v));
    rec["duration"] = t.duration;
    txns.push_back(std::move(rec));
  }
  return doc.dump(2) + "\n";
}

/// Resolves a CLI-style reference: builtin name first, then a file path.
inline Workload resolve_workload(const std::string& ref) {
  if (auto which = parse_workload_name(ref)) return builtin(*which);
  return load_workload_file(ref);
}

}  // namespace stmsched
