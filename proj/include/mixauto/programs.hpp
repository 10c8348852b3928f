#pragma once

// Profit-maximization programs under uniform willingness-to-pay.
//
// mixed_alternative: variables (p, δ, x, z, vec(r)), rows
//   z-definition  zᵢ = Σ_j α_ji(d_j − x_j) + Σ_j r_ji
//   r-row-sum     Σ_j r_ij = zᵢ − (dᵢ − xᵢ)
//   x-flow        xᵢ = β Σ_j α_ji x_j + δᵢ
// human_only: variables (p, δ, x, vec(y)), rows
//   x-flow        xᵢ = β[Σ_j α_ji d_j + Σ_j y_ji] + δᵢ
//   y-row-sum     Σ_j y_ij = xᵢ − dᵢ
// with d = θ(1 − p/p̄) substituted.  Every row is stored so that
// b − a·v equals the constraint expression g(v) with g = 0 at feasibility;
// the solver's multiplier y then enters the Lagrangian as f + yᵀg.

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "mixauto/market.hpp"
#include "mixauto/network.hpp"
#include "mixauto/solver.hpp"

namespace mixauto {

enum class ProgramKind { mixed_alternative, human_only };

inline std::string_view to_string(ProgramKind kind) {
  return kind == ProgramKind::mixed_alternative ? "mixed_alternative"
                                                : "human_only";
}

inline ProgramKind program_kind_from_string(std::string_view s) {
  if (s == "mixed_alternative") return ProgramKind::mixed_alternative;
  if (s == "human_only") return ProgramKind::human_only;
  throw std::invalid_argument("unknown program kind '" + std::string(s) + "'");
}

enum class Regime { all_av, mixed, human_only };

inline std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::all_av: return "all_av";
    case Regime::mixed: return "mixed";
    case Regime::human_only: return "human_only";
  }
  return "unknown";
}

/// A mass counts as present iff it exceeds this.
inline double mass_threshold(const DemandPattern& pattern) {
  return 1e-6 * std::max(1.0, pattern.theta.sum());
}

inline Regime classify(double total_x, double total_z, double eps_mass) {
  if (total_z <= eps_mass) return Regime::human_only;
  if (total_x <= eps_mass) return Regime::all_av;
  return Regime::mixed;
}

class SolverFailure : public std::runtime_error {
 public:
  explicit SolverFailure(SolveStatus status)
      : std::runtime_error("solver returned status " +
                           std::string(to_string(status))),
        status_(status) {}
  SolveStatus status() const { return status_; }

 private:
  SolveStatus status_;
};

class RecoveryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column offsets of each variable block.
struct VariableLayout {
  ProgramKind kind;
  Index n;

  Index price(Index i) const { return i; }
  Index entry(Index i) const { return n + i; }
  Index drivers(Index i) const { return 2 * n + i; }
  Index avs(Index i) const { return 3 * n + i; }  // mixed only
  // r(i, j) for mixed, y(i, j) for human-only.
  Index flow(Index i, Index j) const {
    return (kind == ProgramKind::mixed_alternative ? 4 : 3) * n + i * n + j;
  }
  Index size() const {
    return (kind == ProgramKind::mixed_alternative ? 4 : 3) * n + n * n;
  }
  Index rows() const {
    return (kind == ProgramKind::mixed_alternative ? 3 : 2) * n;
  }
};

struct EquilibriumReport {
  ProgramKind kind = ProgramKind::mixed_alternative;
  MarketParams params;
  // Program-form state: for mixed_alternative r holds the alternative
  // program's flows and y = 0; for human_only z = r = 0.
  FleetState state;
  double profit = 0.0;
  std::optional<Compensations> compensations;
  SolveOutcome solve;

  double total_x() const { return state.x.sum(); }
  double total_z() const { return state.z.sum(); }
};

inline void require_valid(const DemandPattern& pattern) {
  const auto check = validate(pattern);
  if (!check.ok())
    throw std::invalid_argument("invalid demand pattern: " +
                                check.violations.front().message);
}

inline QuadraticProgram build_program(ProgramKind kind,
                                      const DemandPattern& pattern,
                                      const MarketParams& params,
                                      const WtpDistribution& wtp) {
  if (!wtp.uniform)
    throw std::invalid_argument(
        "programs can only be built for a uniform willingness-to-pay");
  params.check();
  require_valid(pattern);

  const Index n = pattern.n();
  const VariableLayout L{kind, n};
  const MatrixXd& A = pattern.alpha;
  const VectorXd& th = pattern.theta;
  const double pbar = wtp.pbar;
  const double beta = params.beta;
  QuadraticProgram qp = QuadraticProgram::zeros(L.size(), L.rows());

  for (Index i = 0; i < n; ++i) {
    qp.quadratic(L.price(i), L.price(i)) = -th(i) / pbar;
    qp.linear(L.price(i)) = th(i);
    qp.linear(L.entry(i)) = -params.omega;
    if (kind == ProgramKind::mixed_alternative)
      qp.linear(L.avs(i)) = -params.s;
  }

  MatrixXd& M = qp.eq_matrix;
  VectorXd& b = qp.eq_rhs;
  if (kind == ProgramKind::mixed_alternative) {
    for (Index i = 0; i < n; ++i) {
      // z-definition: g = Σ_j α_ji(d_j − x_j) + Σ_j r_ji − zᵢ
      const Index zr = i;
      for (Index j = 0; j < n; ++j) {
        M(zr, L.price(j)) += A(j, i) * th(j) / pbar;
        M(zr, L.drivers(j)) += A(j, i);
        M(zr, L.flow(j, i)) -= 1.0;
        b(zr) += A(j, i) * th(j);
      }
      M(zr, L.avs(i)) += 1.0;

      // r-row-sum: g = dᵢ − xᵢ + Σ_j r_ij − zᵢ
      const Index rr = n + i;
      M(rr, L.price(i)) += th(i) / pbar;
      M(rr, L.drivers(i)) += 1.0;
      for (Index j = 0; j < n; ++j) M(rr, L.flow(i, j)) -= 1.0;
      M(rr, L.avs(i)) += 1.0;
      b(rr) = th(i);

      // x-flow: g = β Σ_j α_ji x_j + δᵢ − xᵢ
      const Index xr = 2 * n + i;
      M(xr, L.drivers(i)) += 1.0;
      for (Index j = 0; j < n; ++j) M(xr, L.drivers(j)) -= beta * A(j, i);
      M(xr, L.entry(i)) -= 1.0;
    }
  } else {
    for (Index i = 0; i < n; ++i) {
      // x-flow: g = β[Σ_j α_ji d_j + Σ_j y_ji] + δᵢ − xᵢ
      const Index xr = i;
      for (Index j = 0; j < n; ++j) {
        M(xr, L.price(j)) += beta * A(j, i) * th(j) / pbar;
        M(xr, L.flow(j, i)) -= beta;
        b(xr) += beta * A(j, i) * th(j);
      }
      M(xr, L.entry(i)) -= 1.0;
      M(xr, L.drivers(i)) += 1.0;

      // y-row-sum: g = xᵢ − dᵢ − Σ_j y_ij
      const Index yr = n + i;
      M(yr, L.drivers(i)) -= 1.0;
      M(yr, L.price(i)) -= th(i) / pbar;
      for (Index j = 0; j < n; ++j) M(yr, L.flow(i, j)) += 1.0;
      b(yr) = -th(i);
    }
  }
  return qp;
}

inline QuadraticProgram build_program(ProgramKind kind,
                                      const DemandPattern& pattern,
                                      const MarketParams& params) {
  return build_program(kind, pattern, params,
                       WtpDistribution::make_uniform(params.pbar));
}

/// Maps a primal vector in program layout to a fleet state.
inline FleetState state_from_primal(ProgramKind kind,
                                    const DemandPattern& pattern,
                                    const MarketParams& params,
                                    const VectorXd& v) {
  const Index n = pattern.n();
  const VariableLayout L{kind, n};
  if (v.size() != L.size())
    throw std::invalid_argument("primal vector does not match program layout");

  FleetState st = FleetState::zeros(n);
  for (Index i = 0; i < n; ++i) {
    double p = v(L.price(i));
    if (p > params.pbar + 1e-7 || p < -1e-7)
      throw std::runtime_error("optimal price left the support [0, pbar]");
    st.p(i) = std::clamp(p, 0.0, params.pbar);
    st.delta(i) = v(L.entry(i));
    st.x(i) = v(L.drivers(i));
    if (kind == ProgramKind::mixed_alternative) st.z(i) = v(L.avs(i));
    for (Index j = 0; j < n; ++j) {
      if (kind == ProgramKind::mixed_alternative)
        st.r(i, j) = v(L.flow(i, j));
      else
        st.y(i, j) = v(L.flow(i, j));
    }
  }
  st.d = effective_demand(st.p, pattern,
                          WtpDistribution::make_uniform(params.pbar));
  return st;
}

/// Inverse of state_from_primal (reads r for mixed and y for human-only).
inline VectorXd primal_from_state(ProgramKind kind, const FleetState& st) {
  const Index n = st.n();
  const VariableLayout L{kind, n};
  VectorXd v(L.size());
  for (Index i = 0; i < n; ++i) {
    v(L.price(i)) = st.p(i);
    v(L.entry(i)) = st.delta(i);
    v(L.drivers(i)) = st.x(i);
    if (kind == ProgramKind::mixed_alternative) v(L.avs(i)) = st.z(i);
    for (Index j = 0; j < n; ++j)
      v(L.flow(i, j)) =
          kind == ProgramKind::mixed_alternative ? st.r(i, j) : st.y(i, j);
  }
  return v;
}

inline EquilibriumReport make_report(ProgramKind kind,
                                     const DemandPattern& pattern,
                                     const MarketParams& params,
                                     SolveOutcome outcome) {
  EquilibriumReport rep;
  rep.kind = kind;
  rep.params = params;
  rep.state = state_from_primal(kind, pattern, params, outcome.primal);
  rep.profit = profit(rep.state, params);
  rep.solve = std::move(outcome);
  const double eps = mass_threshold(pattern);
  if ((rep.state.d.array() > eps).all())
    rep.compensations = construct_compensation(rep.state, params);
  return rep;
}

inline EquilibriumReport solve_program(ProgramKind kind,
                                       const DemandPattern& pattern,
                                       const MarketParams& params,
                                       const SolverSettings& settings = {}) {
  const QuadraticProgram qp = build_program(kind, pattern, params);
  SolveOutcome outcome = solve(qp, settings);
  if (outcome.status != SolveStatus::optimal) throw SolverFailure(outcome.status);
  return make_report(kind, pattern, params, std::move(outcome));
}

namespace detail {

/// Relocation flows (y, r) closest in least squares to satisfying the four
/// original flow equations at fixed (p, δ, x, z, d).
inline FleetState fit_relocation_flows(const FleetState& alt,
                                       const DemandPattern& pattern,
                                       const MarketParams& params) {
  const Index n = pattern.n();
  const MatrixXd& A = pattern.alpha;
  const double beta = params.beta;
  const VectorXd served = alt.x.cwiseMin(alt.d);
  const VectorXd excess = (alt.x - alt.d).cwiseMax(0.0);
  const VectorXd unmet = (alt.d - alt.x).cwiseMax(0.0);
  const VectorXd av_served = alt.z.cwiseMin(unmet);
  const VectorXd idle = (alt.z - unmet).cwiseMax(0.0);

  // Variables: vec(y), vec(r), then one free slack per row.
  const Index nf = n * n;
  const Index rows = 4 * n;
  QuadraticProgram qp = QuadraticProgram::zeros(2 * nf + rows, rows);
  auto y = [&](Index j, Index k) { return j * n + k; };
  auto r = [&](Index j, Index k) { return nf + j * n + k; };
  for (Index e = 0; e < rows; ++e) {
    const Index slack = 2 * nf + e;
    qp.nonneg[static_cast<std::size_t>(slack)] = false;
    qp.quadratic(slack, slack) = -1.0;
    qp.eq_matrix(e, slack) = 1.0;
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      qp.eq_matrix(i, y(i, j)) = 1.0;
      qp.eq_matrix(n + i, y(j, i)) = beta;
      qp.eq_matrix(2 * n + i, r(j, i)) = 1.0;
      qp.eq_matrix(3 * n + i, r(i, j)) = 1.0;
    }
    qp.eq_rhs(i) = excess(i);
    qp.eq_rhs(n + i) = alt.x(i) - alt.delta(i) - beta * A.col(i).dot(served);
    qp.eq_rhs(2 * n + i) = alt.z(i) - A.col(i).dot(av_served);
    qp.eq_rhs(3 * n + i) = idle(i);
  }

  const SolveOutcome out = solve(qp);
  if (out.status != SolveStatus::optimal)
    throw RecoveryError("relocation-flow fit returned status " +
                        std::string(to_string(out.status)));
  FleetState st = alt;
  for (Index j = 0; j < n; ++j)
    for (Index k = 0; k < n; ++k) {
      st.y(j, k) = std::max(0.0, out.primal(y(j, k)));
      st.r(j, k) = std::max(0.0, out.primal(r(j, k)));
    }
  return st;
}

}  // namespace detail

inline constexpr double kRecoveryFitTol = 1e-7;

/// Original-form state from an alternative-program optimum.  If d <= x
/// everywhere the AV relocation flows become driver relocations (z = r = 0);
/// if d >= x everywhere the state is already original-form.  Otherwise the
/// optimum sits where drivers and AVs tie, and (y, r) are refitted to the
/// original flow equations with (p, δ, x, z) held fixed.
inline FleetState recover_original(const EquilibriumReport& report,
                                   const DemandPattern& pattern,
                                   double tie_tol = 1e-8) {
  if (report.kind == ProgramKind::human_only) return report.state;

  const FleetState& alt = report.state;
  const VectorXd gap = alt.d - alt.x;
  const bool demand_below = (gap.array() <= tie_tol).all();
  const bool demand_above = (gap.array() >= -tie_tol).all();

  FleetState st = alt;
  st.y.setZero();
  if (demand_above) return st;
  if (demand_below) {
    st.y = alt.r;
    st.r.setZero();
    st.z.setZero();
    return st;
  }
  st = detail::fit_relocation_flows(alt, pattern, report.params);
  const double res = equilibrium_residuals(st, pattern, report.params).max_abs();
  if (!(res <= kRecoveryFitTol))
    throw RecoveryError("d - x has mixed sign and no relocation flows satisfy the "
                        "original equations (residual " + std::to_string(res) + ")");
  return st;
}

namespace detail {

template <typename Fn>
void parallel_for(Index count, Fn&& fn) {
  const Index workers = std::clamp<Index>(
      static_cast<Index>(std::thread::hardware_concurrency()), 1, 64);
  if (workers == 1 || count < 2 * workers) {
    for (Index i = 0; i < count; ++i) fn(i, Index{0});
    return;
  }
  std::vector<std::thread> pool;
  for (Index w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (Index i = w; i < count; i += workers) fn(i, w);
    });
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Exhaustive price grid; for each grid point the remaining program is an LP.
/// Ties are broken towards the lexicographically smallest price vector.
inline EquilibriumReport brute_force_oracle(const DemandPattern& pattern,
                                            const MarketParams& params,
                                            Index grid_steps = 201) {
  const Index n = pattern.n();
  if (n > 3) throw std::invalid_argument("brute-force oracle supports n <= 3");
  if (grid_steps < 2) throw std::invalid_argument("grid_steps must be >= 2");

  const QuadraticProgram full =
      build_program(ProgramKind::mixed_alternative, pattern, params);
  const Index nv = full.num_vars();
  const Index rest = nv - n;

  auto lp_at = [&](const VectorXd& p) {
    QuadraticProgram lp = QuadraticProgram::zeros(rest, full.num_rows());
    lp.eq_matrix = full.eq_matrix.rightCols(rest);
    lp.eq_rhs = full.eq_rhs - full.eq_matrix.leftCols(n) * p;
    lp.linear = full.linear.tail(rest);
    const VectorXd th = pattern.theta;
    lp.constant = (th.array() * p.array() * (1.0 - p.array() / params.pbar)).sum();
    return lp;
  };
  auto grid_point = [&](Index flat) {
    VectorXd p(n);
    for (Index i = n - 1; i >= 0; --i) {
      p(i) = params.pbar * static_cast<double>(flat % grid_steps) /
             static_cast<double>(grid_steps - 1);
      flat /= grid_steps;
    }
    return p;
  };

  Index total = 1;
  for (Index i = 0; i < n; ++i) total *= grid_steps;

  const Index workers = std::clamp<Index>(
      static_cast<Index>(std::thread::hardware_concurrency()), 1, 64);
  struct Best {
    double value = -std::numeric_limits<double>::infinity();
    Index index = -1;
  };
  std::vector<Best> best(static_cast<std::size_t>(workers));
  detail::parallel_for(total, [&](Index flat, Index w) {
    const SolveOutcome out = solve(lp_at(grid_point(flat)));
    if (out.status != SolveStatus::optimal) return;
    Best& b = best[static_cast<std::size_t>(w)];
    if (out.objective > b.value || (out.objective == b.value && flat < b.index))
      b = {out.objective, flat};
  });
  Best winner;
  for (const Best& b : best)
    if (b.index >= 0 && (b.value > winner.value ||
                         (b.value == winner.value && b.index < winner.index)))
      winner = b;
  if (winner.index < 0) throw SolverFailure(SolveStatus::infeasible);

  const VectorXd p = grid_point(winner.index);
  const SolveOutcome inner = solve(lp_at(p));
  SolveOutcome outcome;
  outcome.status = inner.status;
  outcome.iterations = inner.iterations;
  outcome.polished = inner.polished;
  outcome.objective = inner.objective;
  outcome.primal.resize(nv);
  outcome.primal << p, inner.primal;
  outcome.duals_eq = inner.duals_eq;
  outcome.duals_nonneg = VectorXd::Zero(nv);
  outcome.duals_nonneg.tail(rest) = inner.duals_nonneg;
  return make_report(ProgramKind::mixed_alternative, pattern, params,
                     std::move(outcome));
}

}  // namespace mixauto
