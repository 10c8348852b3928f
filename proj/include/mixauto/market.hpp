#pragma once

// Market primitives: willingness-to-pay, effective demand, the stationary
// flow equations for drivers and AVs, the driver value function, and the
// compensation scheme that makes drivers indifferent to their outside option.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include "mixauto/network.hpp"

namespace mixauto {

struct MarketParams {
  double beta = 0.8;   // per-ride survival probability
  double omega = 1.0;  // outside-option lifetime earnings
  double s = 0.0;      // AV cost over one expected driver lifetime
  double pbar = 1.0;   // upper end of the price support

  double k() const { return s / omega; }

  static MarketParams make(double beta, double omega, double s,
                           double pbar = 1.0) {
    MarketParams p{beta, omega, s, pbar};
    p.check();
    return p;
  }
  static MarketParams from_k(double beta, double omega, double k,
                             double pbar = 1.0) {
    return make(beta, omega, k * omega, pbar);
  }

  void check() const {
    if (!(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("beta must lie in (0,1)");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be > 0");
    if (!(s >= 0.0)) throw std::invalid_argument("s must be >= 0");
    if (!(pbar > 0.0)) throw std::invalid_argument("pbar must be > 0");
  }
};

/// Riders' willingness-to-pay CDF on [0, pbar].
struct WtpDistribution {
  std::function<double(double)> cdf;
  double pbar = 1.0;
  bool uniform = false;

  static WtpDistribution make_uniform(double pbar = 1.0) {
    if (!(pbar > 0.0)) throw std::invalid_argument("pbar must be > 0");
    return {[pbar](double p) { return std::clamp(p / pbar, 0.0, 1.0); }, pbar,
            true};
  }
  static WtpDistribution custom(std::function<double(double)> cdf,
                                double pbar) {
    if (!(pbar > 0.0)) throw std::invalid_argument("pbar must be > 0");
    return {std::move(cdf), pbar, false};
  }
};

struct FleetState {
  VectorXd p;      // prices
  VectorXd delta;  // driver entry mass
  VectorXd x;      // driver mass
  MatrixXd y;      // y(j, k): unmatched drivers moved j -> k
  VectorXd z;      // AV mass
  MatrixXd r;      // r(j, k): idle AVs moved j -> k
  VectorXd d;      // effective demand θ(1 − F(p))

  Index n() const { return p.size(); }

  static FleetState zeros(Index n) {
    return {VectorXd::Zero(n), VectorXd::Zero(n), VectorXd::Zero(n),
            MatrixXd::Zero(n, n), VectorXd::Zero(n), MatrixXd::Zero(n, n),
            VectorXd::Zero(n)};
  }
};

struct Compensations {
  VectorXd c;  // per-ride driver pay at each location
};

inline VectorXd effective_demand(const VectorXd& p,
                                 const DemandPattern& pattern,
                                 const WtpDistribution& wtp) {
  if (p.size() != pattern.n())
    throw std::invalid_argument("price vector length does not match network");
  VectorXd d(p.size());
  for (Index i = 0; i < p.size(); ++i) {
    if (!(p(i) >= 0.0 && p(i) <= wtp.pbar))
      throw std::domain_error("price outside [0, pbar]");
    d(i) = pattern.theta(i) * (1.0 - wtp.cdf(p(i)));
  }
  return d;
}

/// Signed residuals of the four stationary flow equations.
struct EquilibriumResiduals {
  VectorXd driver_relocation;  // Σ_k y_jk − max{x_j − d_j, 0}
  VectorXd driver_flow;        // x_i − β[Σ_j α_ji min{x_j, d_j} + Σ_j y_ji] − δ_i
  VectorXd av_flow;            // z_i − Σ_j α_ji min{z_j, (d_j − x_j)⁺} − Σ_j r_ji
  VectorXd av_relocation;      // Σ_k r_jk − (z_j − (d_j − x_j)⁺)⁺

  double max_driver_relocation() const { return norm(driver_relocation); }
  double max_driver_flow() const { return norm(driver_flow); }
  double max_av_flow() const { return norm(av_flow); }
  double max_av_relocation() const { return norm(av_relocation); }
  double max_abs() const {
    return std::max({max_driver_relocation(), max_driver_flow(), max_av_flow(),
                     max_av_relocation()});
  }

 private:
  static double norm(const VectorXd& v) {
    return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0;
  }
};

inline constexpr double kEquilibriumTol = 1e-7;

inline void check_state_dimensions(const FleetState& st, Index n) {
  if (st.p.size() != n || st.delta.size() != n || st.x.size() != n ||
      st.z.size() != n || st.d.size() != n || st.y.rows() != n ||
      st.y.cols() != n || st.r.rows() != n || st.r.cols() != n)
    throw std::invalid_argument("fleet state dimensions do not match network");
}

inline EquilibriumResiduals equilibrium_residuals(const FleetState& st,
                                                  const DemandPattern& pattern,
                                                  const MarketParams& params) {
  const Index n = pattern.n();
  check_state_dimensions(st, n);
  const MatrixXd& A = pattern.alpha;

  const VectorXd served_by_drivers = st.x.cwiseMin(st.d);
  const VectorXd excess_drivers = (st.x - st.d).cwiseMax(0.0);
  const VectorXd unmet = (st.d - st.x).cwiseMax(0.0);
  const VectorXd served_by_avs = st.z.cwiseMin(unmet);
  const VectorXd idle_avs = (st.z - unmet).cwiseMax(0.0);

  EquilibriumResiduals res;
  res.driver_relocation = st.y.rowwise().sum() - excess_drivers;
  res.driver_flow =
      st.x -
      params.beta * (A.transpose() * served_by_drivers +
                     st.y.colwise().sum().transpose()) -
      st.delta;
  res.av_flow = st.z - A.transpose() * served_by_avs -
                st.r.colwise().sum().transpose();
  res.av_relocation = st.r.rowwise().sum() - idle_avs;
  return res;
}

inline constexpr double kValueTol = 1e-10;
inline constexpr long kValueMaxIter = 1'000'000;

/// Driver lifetime earnings V solving
///   Vᵢ = mᵢ(cᵢ + β Σ_k α_ik V_k) + (1 − mᵢ) β max_j V_j,  mᵢ = min{dᵢ/xᵢ, 1},
/// by fixed-point iteration from V = 0.  mᵢ = 1 where xᵢ = 0.
inline VectorXd driver_value(const FleetState& st, const DemandPattern& pattern,
                             const MarketParams& params,
                             const Compensations& comp) {
  const Index n = pattern.n();
  check_state_dimensions(st, n);
  if (comp.c.size() != n)
    throw std::invalid_argument("compensation vector length does not match network");

  VectorXd match(n);
  for (Index i = 0; i < n; ++i)
    match(i) = st.x(i) > 0.0 ? std::min(st.d(i) / st.x(i), 1.0) : 1.0;

  const double beta = params.beta;
  // Stop once the step bounds the distance to the fixed point by kValueTol.
  const double step_tol =
      beta < 1.0 ? kValueTol * (1.0 - beta) / std::max(beta, 1e-300) : 0.0;

  VectorXd V = VectorXd::Zero(n);
  for (long it = 0; it < kValueMaxIter; ++it) {
    const double best = V.maxCoeff();
    const VectorXd cont = pattern.alpha * V;
    VectorXd next(n);
    for (Index i = 0; i < n; ++i)
      next(i) = match(i) * (comp.c(i) + beta * cont(i)) +
                (1.0 - match(i)) * beta * best;
    const double change = (next - V).lpNorm<Eigen::Infinity>();
    V = std::move(next);
    if (!V.allFinite()) break;
    if (change <= step_tol) return V;
  }
  throw std::runtime_error("driver value iteration did not converge");
}

/// Per-ride pay making every driver's lifetime earnings equal to ω.
inline Compensations construct_compensation(const FleetState& st,
                                            const MarketParams& params) {
  const Index n = st.d.size();
  if (st.x.size() != n)
    throw std::invalid_argument("fleet state dimensions are inconsistent");
  const double base = params.omega * (1.0 - params.beta);
  Compensations out{VectorXd(n)};
  for (Index i = 0; i < n; ++i) {
    if (!(st.d(i) > 0.0))
      throw std::domain_error(
          "compensation undefined: no riders served at some location");
    out.c(i) = st.d(i) < st.x(i) ? st.x(i) / st.d(i) * base : base;
  }
  return out;
}

struct PlatformCost {
  double driver_payout;  // Σ min{xᵢ, dᵢ}·cᵢ per period
  double entry_cost;     // ω Σ δᵢ
};

inline PlatformCost platform_cost_identity(const FleetState& st,
                                           const Compensations& comp,
                                           const MarketParams& params) {
  const Index n = st.x.size();
  if (st.d.size() != n || st.delta.size() != n || comp.c.size() != n)
    throw std::invalid_argument("fleet state dimensions are inconsistent");
  return {st.x.cwiseMin(st.d).dot(comp.c), params.omega * st.delta.sum()};
}

/// Σ pᵢdᵢ − ωΣδᵢ − sΣzᵢ.
inline double profit(const FleetState& st, const MarketParams& params) {
  return st.p.dot(st.d) - params.omega * st.delta.sum() - params.s * st.z.sum();
}

}  // namespace mixauto
