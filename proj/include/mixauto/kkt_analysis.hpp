#pragma once

// KKT certificate of the alternative program with θ = 1 and F uniform on
// [0, 1].  With Lagrangian
//
//   L = pᵀ(1 − p) − ω1ᵀδ − s1ᵀz
//       + λᵀ[Aᵀ(1 − p − x) + rᵀ1 − z]
//       + γᵀ[1 − p − x + r1 − z]
//       + μᵀ[βAᵀx + δ − x]
//
// optimality requires ∂L/∂v <= 0 for each nonnegative variable v, with
// equality wherever v > 0.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>

#include "mixauto/programs.hpp"

namespace mixauto {

struct DualCertificate {
  VectorXd lambda;  // z-definition rows
  VectorXd gamma;   // r-row-sum rows
  VectorXd mu;      // x-flow rows
};

inline DualCertificate extract_duals(const EquilibriumReport& report) {
  if (report.kind != ProgramKind::mixed_alternative)
    throw std::invalid_argument("dual certificate requires a mixed_alternative report");
  if (report.solve.status != SolveStatus::optimal)
    throw std::invalid_argument("dual certificate requires an optimal report");
  if (report.params.pbar != 1.0)
    throw std::invalid_argument("dual certificate assumes willingness-to-pay uniform on [0,1]");
  const Index n = report.state.n();
  const VectorXd& y = report.solve.duals_eq;
  if (y.size() != 3 * n)
    throw std::invalid_argument("report duals do not match the program layout");
  return {y.segment(0, n), y.segment(n, n), y.segment(2 * n, n)};
}

/// Worst positive part of ∂L/∂v over a family, and worst |∂L/∂v| over the
/// coordinates of that family whose primal value exceeds the mass threshold.
struct FamilyResidual {
  double violation = 0.0;
  double equality_gap = 0.0;

  double max() const { return std::max(violation, equality_gap); }
  void add(double derivative, bool active) {
    violation = std::max(violation, derivative);
    if (active) equality_gap = std::max(equality_gap, std::abs(derivative));
  }
};

struct StationarityResiduals {
  FamilyResidual entry;       // ∂L/∂δᵢ = −ω + μᵢ
  FamilyResidual drivers;     // ∂L/∂xᵢ = Σ_j(βμ_j − λ_j)α_ij − γᵢ − μᵢ
  FamilyResidual avs;         // ∂L/∂zᵢ = −s − λᵢ − γᵢ
  FamilyResidual relocation;  // ∂L/∂r_ij = λ_j + γᵢ
  FamilyResidual price;       // ∂L/∂pᵢ = 1 − 2pᵢ − Σ_j λ_j α_ij − γᵢ

  double max() const {
    return std::max({entry.max(), drivers.max(), avs.max(), relocation.max(),
                     price.max()});
  }
};

inline StationarityResiduals stationarity_residuals(
    const DualCertificate& cert, const EquilibriumReport& report,
    const DemandPattern& pattern, const MarketParams& params) {
  const Index n = pattern.n();
  const FleetState& st = report.state;
  check_state_dimensions(st, n);
  if (cert.lambda.size() != n || cert.gamma.size() != n || cert.mu.size() != n)
    throw std::invalid_argument("certificate dimensions do not match network");

  const double eps = mass_threshold(pattern);
  const MatrixXd& A = pattern.alpha;
  const VectorXd& lam = cert.lambda;
  const VectorXd& gam = cert.gamma;
  const VectorXd& mu = cert.mu;
  const VectorXd carry = params.beta * mu - lam;

  StationarityResiduals out;
  for (Index i = 0; i < n; ++i) {
    out.entry.add(-params.omega + mu(i), st.delta(i) > eps);
    out.drivers.add(A.row(i).dot(carry) - gam(i) - mu(i), st.x(i) > eps);
    out.avs.add(-params.s - lam(i) - gam(i), st.z(i) > eps);
    for (Index j = 0; j < n; ++j)
      out.relocation.add(lam(j) + gam(i), st.r(i, j) > eps);
    out.price.add(1.0 - 2.0 * st.p(i) - A.row(i).dot(lam) - gam(i),
                  st.p(i) > eps);
  }
  return out;
}

enum class Prop1Verdict { consistent, violated };

inline std::string_view to_string(Prop1Verdict v) {
  return v == Prop1Verdict::consistent ? "consistent" : "violated";
}

struct Prop1Result {
  Prop1Verdict verdict = Prop1Verdict::consistent;
  bool strict_gap = false;   // profit(mixed) > profit(human) + 1e-6
  double min_z = 0.0;
  bool all_locations_use_avs = true;  // only meaningful when strict_gap
};

inline constexpr double kProfitGapTol = 1e-6;

/// Falsification check of the cost bound k <= 1 − β for profitable AV use on
/// star-to-complete networks, plus the all-or-nothing AV side condition.
inline Prop1Result prop1_check(const DemandPattern& pattern,
                               const MarketParams& params,
                               const EquilibriumReport& mixed,
                               const EquilibriumReport& human) {
  if (!star_to_complete_parameter(pattern))
    throw std::invalid_argument("prop1_check requires a star-to-complete pattern");
  if (mixed.kind != ProgramKind::mixed_alternative ||
      human.kind != ProgramKind::human_only)
    throw std::invalid_argument("prop1_check needs one mixed and one human-only report");
  if (mixed.solve.status != SolveStatus::optimal ||
      human.solve.status != SolveStatus::optimal)
    throw std::invalid_argument("prop1_check requires optimal reports");

  Prop1Result out;
  out.strict_gap = mixed.profit > human.profit + kProfitGapTol;
  out.min_z = mixed.state.z.minCoeff();
  if (out.strict_gap)
    out.all_locations_use_avs = out.min_z > mass_threshold(pattern);
  if (out.strict_gap && params.k() > 1.0 - params.beta + 1e-9)
    out.verdict = Prop1Verdict::violated;
  return out;
}

}  // namespace mixauto
