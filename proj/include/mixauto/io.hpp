#pragma once

// JSON forms of networks, fleet states and equilibrium reports.

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "mixauto/programs.hpp"

namespace mixauto::io {

using nlohmann::json;

inline json to_json(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline json to_json(const MatrixXd& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(VectorXd(m.row(i).transpose())));
  return out;
}

inline VectorXd vector_from_json(const json& j, Index expected, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != expected)
    throw std::invalid_argument(std::string(what) + ": expected array of length " +
                                std::to_string(expected));
  VectorXd v(expected);
  for (Index i = 0; i < expected; ++i) {
    const json& e = j[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw std::invalid_argument(std::string(what) + ": non-numeric entry");
    v(i) = e.get<double>();
  }
  return v;
}

inline MatrixXd matrix_from_json(const json& j, Index rows, Index cols, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(rows) +
                                " rows");
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    m.row(i) = vector_from_json(j[static_cast<std::size_t>(i)], cols, what).transpose();
  return m;
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw std::invalid_argument(std::string("missing field '") + key + "'");
  return j.at(key);
}

// Networks -----------------------------------------------------------------

inline json to_json(const DemandPattern& p) {
  return {{"n", p.n()}, {"alpha", to_json(p.alpha)}, {"theta", to_json(p.theta)}};
}

inline DemandPattern pattern_from_json(const json& j) {
  const json& nj = field(j, "n");
  if (!nj.is_number_integer() || nj.get<long>() < 1)
    throw std::invalid_argument("n must be a positive integer");
  const Index n = nj.get<Index>();
  return {matrix_from_json(field(j, "alpha"), n, n, "alpha"),
          vector_from_json(field(j, "theta"), n, "theta")};
}

// Fleet states --------------------------------------------------------------

inline json to_json(const FleetState& s) {
  return {{"p", to_json(s.p)}, {"delta", to_json(s.delta)}, {"x", to_json(s.x)},
          {"y", to_json(s.y)}, {"z", to_json(s.z)},         {"r", to_json(s.r)},
          {"d", to_json(s.d)}};
}

inline FleetState state_from_json(const json& j, Index n) {
  FleetState s;
  s.p = vector_from_json(field(j, "p"), n, "p");
  s.delta = vector_from_json(field(j, "delta"), n, "delta");
  s.x = vector_from_json(field(j, "x"), n, "x");
  s.y = matrix_from_json(field(j, "y"), n, n, "y");
  s.z = vector_from_json(field(j, "z"), n, "z");
  s.r = matrix_from_json(field(j, "r"), n, n, "r");
  s.d = vector_from_json(field(j, "d"), n, "d");
  return s;
}

// Reports -------------------------------------------------------------------

inline json to_json(const MarketParams& p) {
  return {{"beta", p.beta}, {"omega", p.omega}, {"s", p.s}, {"k", p.k()}, {"pbar", p.pbar}};
}

inline MarketParams params_from_json(const json& j) {
  return MarketParams::make(field(j, "beta").get<double>(), field(j, "omega").get<double>(),
                            field(j, "s").get<double>(),
                            j.contains("pbar") ? j.at("pbar").get<double>() : 1.0);
}

/// Embeds the report plus its original-form state and regime label.
inline json to_json(const EquilibriumReport& r, const DemandPattern& pattern) {
  json out;
  out["kind"] = std::string(to_string(r.kind));
  out["params"] = to_json(r.params);
  out["profit"] = r.profit;
  out["total_x"] = r.total_x();
  out["total_z"] = r.total_z();
  out["regime"] = std::string(
      to_string(classify(r.total_x(), r.total_z(), mass_threshold(pattern))));
  out["state"] = to_json(r.state);
  try {
    out["original_state"] = to_json(recover_original(r, pattern));
  } catch (const RecoveryError& e) {
    out["original_state"] = nullptr;
    out["recovery_error"] = e.what();
  }
  out["compensations"] = r.compensations ? to_json(r.compensations->c) : json(nullptr);
  out["solve"] = {{"status", std::string(to_string(r.solve.status))},
                  {"objective", r.solve.objective},
                  {"iterations", r.solve.iterations},
                  {"polished", r.solve.polished},
                  {"duals_eq", to_json(r.solve.duals_eq)},
                  {"duals_nonneg", to_json(r.solve.duals_nonneg)}};
  return out;
}

/// Rebuilds a report; the primal vector is taken from the program-form state.
inline EquilibriumReport report_from_json(const json& j, const DemandPattern& pattern) {
  const Index n = pattern.n();
  EquilibriumReport r;
  r.kind = program_kind_from_string(field(j, "kind").get<std::string>());
  r.params = params_from_json(field(j, "params"));
  r.state = state_from_json(field(j, "state"), n);
  r.profit = field(j, "profit").get<double>();
  const json& comp = field(j, "compensations");
  if (!comp.is_null()) r.compensations = Compensations{vector_from_json(comp, n, "compensations")};

  const json& sj = field(j, "solve");
  const VariableLayout layout{r.kind, n};
  r.solve.status = solve_status_from_string(field(sj, "status").get<std::string>());
  r.solve.objective = field(sj, "objective").get<double>();
  r.solve.iterations = field(sj, "iterations").get<int>();
  r.solve.polished = field(sj, "polished").get<bool>();
  r.solve.primal = primal_from_state(r.kind, r.state);
  r.solve.duals_eq = vector_from_json(field(sj, "duals_eq"), layout.rows(), "duals_eq");
  r.solve.duals_nonneg =
      vector_from_json(field(sj, "duals_nonneg"), layout.size(), "duals_nonneg");
  return r;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in '" + path + "': " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace mixauto::io
