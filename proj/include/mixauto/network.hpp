#pragma once

// Demand patterns: the routing matrix α (row i = destinations of riders
// arriving at i) and per-location arrival masses θ.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixauto {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct DemandPattern {
  MatrixXd alpha;  // alpha(i, j): fraction of riders at i headed to j
  VectorXd theta;  // rider mass arriving at each location per period

  Index n() const { return theta.size(); }
};

inline constexpr double kRowSumTol = 1e-12;

enum class ViolationKind {
  empty,
  dimension_mismatch,
  diagonal_nonzero,
  entry_out_of_range,
  row_sum,
  theta_nonpositive,
  not_strongly_connected,
};

inline const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::empty: return "empty";
    case ViolationKind::dimension_mismatch: return "dimension_mismatch";
    case ViolationKind::diagonal_nonzero: return "diagonal_nonzero";
    case ViolationKind::entry_out_of_range: return "entry_out_of_range";
    case ViolationKind::row_sum: return "row_sum";
    case ViolationKind::theta_nonpositive: return "theta_nonpositive";
    case ViolationKind::not_strongly_connected: return "not_strongly_connected";
  }
  return "unknown";
}

struct Violation {
  ViolationKind kind;
  Index row = -1;  // offending location, -1 when not location-specific
  Index col = -1;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind kind) const {
    for (const auto& v : violations)
      if (v.kind == kind) return true;
    return false;
  }
};

namespace detail {

inline std::vector<bool> reachable_from_zero(const MatrixXd& alpha,
                                             bool transposed) {
  const Index n = alpha.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Index u = stack.back();
    stack.pop_back();
    for (Index v = 0; v < n; ++v) {
      const double w = transposed ? alpha(v, u) : alpha(u, v);
      if (w > 0.0 && !seen[static_cast<std::size_t>(v)]) {
        seen[static_cast<std::size_t>(v)] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// True iff the graph with an edge i→j whenever alpha(i, j) > 0 is strongly
/// connected.  Every node must reach node 0 and be reached from it.
inline bool strongly_connected(const MatrixXd& alpha) {
  if (alpha.rows() != alpha.cols())
    throw std::invalid_argument("routing matrix must be square");
  if (alpha.rows() == 0) return false;
  const auto fwd = detail::reachable_from_zero(alpha, false);
  const auto bwd = detail::reachable_from_zero(alpha, true);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    if (!fwd[i] || !bwd[i]) return false;
  return true;
}

inline ValidationResult validate(const DemandPattern& pattern) {
  ValidationResult out;
  auto add = [&](ViolationKind kind, Index i, Index j, std::string msg) {
    out.violations.push_back({kind, i, j, std::move(msg)});
  };

  const Index n = pattern.n();
  if (n == 0) {
    add(ViolationKind::empty, -1, -1, "no locations");
    return out;
  }
  if (pattern.alpha.rows() != n || pattern.alpha.cols() != n) {
    add(ViolationKind::dimension_mismatch, -1, -1,
        "alpha must be n x n with n = len(theta)");
    return out;
  }

  for (Index i = 0; i < n; ++i) {
    if (pattern.alpha(i, i) != 0.0)
      add(ViolationKind::diagonal_nonzero, i, i, "alpha[i][i] must be 0");
    double row = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double a = pattern.alpha(i, j);
      if (!(a >= 0.0 && a <= 1.0))
        add(ViolationKind::entry_out_of_range, i, j, "alpha entry outside [0,1]");
      row += a;
    }
    if (!(std::abs(row - 1.0) <= kRowSumTol))
      add(ViolationKind::row_sum, i, -1, "row does not sum to 1");
    if (!(pattern.theta(i) > 0.0))
      add(ViolationKind::theta_nonpositive, i, -1, "theta must be > 0");
  }

  if (!strongly_connected(pattern.alpha))
    add(ViolationKind::not_strongly_connected, -1, -1,
        "routing graph is not strongly connected");
  return out;
}

/// Rescales each row of alpha to sum to 1.  Never applied implicitly.
inline DemandPattern normalize_rows(DemandPattern pattern) {
  for (Index i = 0; i < pattern.alpha.rows(); ++i) {
    const double row = pattern.alpha.row(i).sum();
    if (!(row > 0.0))
      throw std::invalid_argument("cannot normalize an all-zero row");
    pattern.alpha.row(i) /= row;
  }
  return pattern;
}

/// A^ξ = ξ·A^C + (1 − ξ)·A^S with unit arrival masses.  Location 0 is the hub.
inline DemandPattern star_to_complete(Index n, double xi) {
  if (n < 3) throw std::invalid_argument("star_to_complete requires n >= 3");
  if (!(xi >= 0.0 && xi <= 1.0))
    throw std::invalid_argument("star_to_complete requires xi in [0,1]");

  const double spoke = 1.0 / static_cast<double>(n - 1);
  const double c2 = xi * spoke;
  const double c1 = c2 + (1.0 - xi);

  DemandPattern p;
  p.alpha = MatrixXd::Zero(n, n);
  p.theta = VectorXd::Ones(n);
  for (Index j = 1; j < n; ++j) p.alpha(0, j) = spoke;
  for (Index i = 1; i < n; ++i) {
    p.alpha(i, 0) = c1;
    for (Index j = 1; j < n; ++j)
      if (j != i) p.alpha(i, j) = c2;
  }
  return p;
}

/// Recovers ξ if the pattern is a member of the star-to-complete family
/// (hub at location 0, unit arrival masses).
inline std::optional<double> star_to_complete_parameter(
    const DemandPattern& pattern, double tol = 1e-12) {
  const Index n = pattern.n();
  if (n < 3 || pattern.alpha.rows() != n || pattern.alpha.cols() != n)
    return std::nullopt;
  if ((pattern.theta.array() - 1.0).abs().maxCoeff() > tol) return std::nullopt;
  const double xi = pattern.alpha(1, 2) * static_cast<double>(n - 1);
  if (!(xi >= -tol && xi <= 1.0 + tol)) return std::nullopt;
  const DemandPattern ref = star_to_complete(n, std::clamp(xi, 0.0, 1.0));
  if ((ref.alpha - pattern.alpha).cwiseAbs().maxCoeff() > tol)
    return std::nullopt;
  return std::clamp(xi, 0.0, 1.0);
}

}  // namespace mixauto
