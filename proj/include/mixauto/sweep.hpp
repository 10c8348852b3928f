#pragma once

// (β, k) sweeps, regime classification and bisection for the cost ratios at
// which human drivers appear (k_a) and AVs disappear (k_s).

#include <cmath>
#include <cstdio>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixauto/programs.hpp"

namespace mixauto {

struct SweepRow {
  double beta = 0.0;
  double k = 0.0;
  double profit_mixed = 0.0;
  double profit_human = 0.0;
  double total_x = 0.0;
  double total_z = 0.0;
  Regime regime = Regime::human_only;
  std::optional<std::string> failure;  // set when either solve failed
};

struct ThresholdRow {
  double beta = 0.0;
  double k_a = 0.0;  // below: no human drivers
  double k_s = 0.0;  // below: some AVs
  double k_t = 0.0;  // 1 − β
};

struct ScanPoint {
  double k;
  double total_x;
  double total_z;
};

class ThresholdError : public std::runtime_error {
 public:
  ThresholdError(const std::string& what, std::vector<ScanPoint> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<ScanPoint>& trace() const { return trace_; }

 private:
  std::vector<ScanPoint> trace_;
};

inline constexpr double kDefaultThresholdTol = 5e-4;
inline constexpr double kCoarseStep = 0.01;

/// Rounds away accumulation error so grid values print and compare cleanly.
inline double snap(double v) { return std::round(v * 1e12) / 1e12; }

/// Inclusive arithmetic grid a, a+step, ..., <= b.
inline std::vector<double> grid(double first, double last, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be > 0");
  if (last < first) throw std::invalid_argument("grid end precedes start");
  const auto count = static_cast<long>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i)
    out.push_back(snap(first + static_cast<double>(i) * step));
  return out;
}

/// Parses "a:b:step" (or a single value "a").
inline std::vector<double> parse_range(const std::string& spec) {
  std::vector<double> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad range '" + spec + "'");
    }
    if (used != item.size()) throw std::invalid_argument("bad range '" + spec + "'");
    parts.push_back(v);
  }
  if (parts.size() == 1) return parts;
  if (parts.size() != 3) throw std::invalid_argument("range must be a:b:step");
  return grid(parts[0], parts[1], parts[2]);
}

inline SweepRow sweep_point(const DemandPattern& pattern, double omega,
                            double beta, double k) {
  SweepRow row;
  row.beta = beta;
  row.k = k;
  try {
    const MarketParams params = MarketParams::from_k(beta, omega, k);
    const auto mixed = solve_program(ProgramKind::mixed_alternative, pattern, params);
    const auto human = solve_program(ProgramKind::human_only, pattern, params);
    row.profit_mixed = mixed.profit;
    row.profit_human = human.profit;
    row.total_x = mixed.total_x();
    row.total_z = mixed.total_z();
    row.regime = classify(row.total_x, row.total_z, mass_threshold(pattern));
  } catch (const SolverFailure& e) {
    row.failure = e.what();
  } catch (const RecoveryError& e) {
    row.failure = e.what();
  }
  return row;
}

/// One row per (β, k), β-major, in input order.
inline std::vector<SweepRow> sweep_grid(const DemandPattern& pattern,
                                        double omega,
                                        const std::vector<double>& betas,
                                        const std::vector<double>& ks) {
  require_valid(pattern);
  for (double b : betas)
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("betas must lie in (0,1)");
  for (double k : ks)
    if (!(k >= 0.0)) throw std::invalid_argument("ks must be >= 0");

  const auto nk = static_cast<Index>(ks.size());
  std::vector<SweepRow> rows(betas.size() * ks.size());
  detail::parallel_for(static_cast<Index>(rows.size()), [&](Index idx, Index) {
    rows[static_cast<std::size_t>(idx)] =
        sweep_point(pattern, omega, betas[static_cast<std::size_t>(idx / nk)],
                    ks[static_cast<std::size_t>(idx % nk)]);
  });
  return rows;
}

inline ThresholdRow find_thresholds(const DemandPattern& pattern, double omega,
                                    double beta,
                                    double tol = kDefaultThresholdTol) {
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
  if (!star_to_complete_parameter(pattern))
    throw std::invalid_argument("thresholds are defined on star-to-complete patterns");
  const double eps = mass_threshold(pattern);

  auto evaluate = [&](double k) {
    const auto rep = solve_program(ProgramKind::mixed_alternative, pattern,
                                   MarketParams::from_k(beta, omega, k));
    return ScanPoint{k, rep.total_x(), rep.total_z()};
  };
  auto no_drivers = [&](const ScanPoint& s) { return s.total_x <= eps; };
  auto no_avs = [&](const ScanPoint& s) { return s.total_z <= eps; };

  std::vector<ScanPoint> trace;
  for (double k : grid(0.0, 1.0 - beta + 0.05, kCoarseStep))
    trace.push_back(evaluate(k));

  // Index of the first scan point where `pred` flips from `initial`.
  auto bracket = [&](auto pred, bool initial, const char* name) {
    std::size_t flip = trace.size();
    for (std::size_t i = 0; i < trace.size(); ++i) {
      if (pred(trace[i]) != initial) {
        if (flip == trace.size()) flip = i;
      } else if (flip != trace.size()) {
        throw ThresholdError(std::string(name) + " predicate is not monotone in k",
                             trace);
      }
    }
    if (flip == 0 || flip == trace.size())
      throw ThresholdError(std::string(name) + " predicate does not switch on the scan",
                           trace);
    return flip;
  };
  auto bisect = [&](auto pred, bool initial, std::size_t flip) {
    double lo = trace[flip - 1].k;
    double hi = trace[flip].k;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      (pred(evaluate(mid)) == initial ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  const std::size_t flip_a = bracket(no_drivers, true, "no-driver");
  const std::size_t flip_s = bracket(no_avs, false, "no-AV");
  ThresholdRow row;
  row.beta = beta;
  row.k_a = bisect(no_drivers, true, flip_a);
  row.k_s = bisect(no_avs, false, flip_s);
  row.k_t = 1.0 - beta;
  return row;
}

inline std::vector<double> table2_betas() { return grid(0.5, 0.95, 0.05); }

inline std::vector<ThresholdRow> threshold_table(const DemandPattern& pattern,
                                                 double omega,
                                                 const std::vector<double>& betas,
                                                 double tol = kDefaultThresholdTol) {
  std::vector<ThresholdRow> rows(betas.size());
  std::vector<std::exception_ptr> errors(betas.size());
  detail::parallel_for(static_cast<Index>(betas.size()), [&](Index i, Index) {
    const auto si = static_cast<std::size_t>(i);
    try {
      rows[si] = find_thresholds(pattern, omega, betas[si], tol);
    } catch (...) {
      errors[si] = std::current_exception();
    }
  });
  // The first failing β wins regardless of scheduling.
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

/// Threshold rows for β ∈ {0.5, 0.55, …, 0.95}.
inline std::vector<ThresholdRow> table2(const DemandPattern& pattern,
                                        double omega = 1.0,
                                        double tol = kDefaultThresholdTol) {
  return threshold_table(pattern, omega, table2_betas(), tol);
}

inline void write_thresholds_csv(std::ostream& os,
                                 const std::vector<ThresholdRow>& rows) {
  os << "beta,k_a,k_s,k_t\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.4f,%.4f,%.4f,%.4f\n", r.beta, r.k_a,
                  r.k_s, r.k_t);
    os << buf;
  }
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "beta,k,profit_mixed,profit_human,total_x,total_z,regime\n";
  char buf[256];
  for (const auto& r : rows) {
    if (r.failure) {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g,nan,nan,nan,nan,failed\n",
                    r.beta, r.k);
    } else {
      std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.12g,%.12g,%.12g,%.12g,%s\n",
                    r.beta, r.k, r.profit_mixed, r.profit_human, r.total_x,
                    r.total_z, std::string(to_string(r.regime)).c_str());
    }
    os << buf;
  }
}

}  // namespace mixauto
