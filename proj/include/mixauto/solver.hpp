#pragma once

// Dense primal-dual interior-point solver for concave quadratic programs
//
//   maximize    vᵀQv + cᵀv + constant
//   subject to  A v = b,   v_i >= 0 for every i with nonneg[i] set.
//
// Dual convention: at an optimum
//
//   ∇f(v) − Aᵀy + w = 0,   w >= 0,   wᵢvᵢ = 0,
//
// i.e. the Lagrangian is f(v) + yᵀ(b − Av) + wᵀv.  Equality multipliers are
// reported per input row, including rows dropped as redundant by the
// presolve (those get multiplier 0).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mixauto {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SolveStatus { optimal, infeasible, unbounded, max_iter };

inline std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::max_iter: return "max_iter";
  }
  return "unknown";
}

inline SolveStatus solve_status_from_string(std::string_view s) {
  if (s == "optimal") return SolveStatus::optimal;
  if (s == "infeasible") return SolveStatus::infeasible;
  if (s == "unbounded") return SolveStatus::unbounded;
  if (s == "max_iter") return SolveStatus::max_iter;
  throw std::invalid_argument("unknown solve status '" + std::string(s) + "'");
}

struct QuadraticProgram {
  MatrixXd quadratic;  // N×N, symmetric negative semidefinite
  VectorXd linear;     // N
  double constant = 0.0;
  MatrixXd eq_matrix;  // M×N
  VectorXd eq_rhs;     // M
  std::vector<bool> nonneg;  // N

  /// Allocates an all-zero program with every variable nonnegative.
  static QuadraticProgram zeros(Index num_vars, Index num_rows) {
    QuadraticProgram qp;
    qp.quadratic = MatrixXd::Zero(num_vars, num_vars);
    qp.linear = VectorXd::Zero(num_vars);
    qp.eq_matrix = MatrixXd::Zero(num_rows, num_vars);
    qp.eq_rhs = VectorXd::Zero(num_rows);
    qp.nonneg.assign(static_cast<std::size_t>(num_vars), true);
    return qp;
  }

  Index num_vars() const { return linear.size(); }
  Index num_rows() const { return eq_rhs.size(); }

  double objective(const VectorXd& v) const {
    return v.dot(quadratic * v) + linear.dot(v) + constant;
  }
  VectorXd gradient(const VectorXd& v) const {
    return 2.0 * (quadratic * v) + linear;
  }
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::max_iter;
  VectorXd primal;
  VectorXd duals_eq;
  VectorXd duals_nonneg;  // zero on free variables
  double objective = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool polished = false;
};

struct SolverSettings {
  double eps_feas = 1e-8;  // relative to 1 + ‖b‖∞ and 1 + ‖c‖∞
  double eps_gap = 1e-8;   // relative to 1 + |objective|
  double eps_infeas = 1e-8;
  int max_iter = 200;
  double regularization = 1e-10;
  int refinement_steps = 3;
  bool polish = true;
};

/// Max-abs KKT residuals recomputed from (qp, outcome) alone.
struct KktResiduals {
  double stationarity = 0.0;
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;

  double max() const {
    return std::max({stationarity, primal_feasibility, dual_feasibility,
                     complementarity});
  }
};

inline void check_dimensions(const QuadraticProgram& qp) {
  const Index n = qp.linear.size();
  const Index m = qp.eq_rhs.size();
  if (qp.quadratic.rows() != n || qp.quadratic.cols() != n)
    throw std::invalid_argument("quadratic term must be num_vars x num_vars");
  if (qp.eq_matrix.rows() != m || (m > 0 && qp.eq_matrix.cols() != n))
    throw std::invalid_argument("eq_matrix must be num_rows x num_vars");
  if (static_cast<Index>(qp.nonneg.size()) != n)
    throw std::invalid_argument("nonneg mask must have num_vars entries");
}

inline KktResiduals kkt_residuals(const QuadraticProgram& qp,
                                  const SolveOutcome& out) {
  check_dimensions(qp);
  const Index n = qp.num_vars();
  if (out.primal.size() != n || out.duals_nonneg.size() != n ||
      out.duals_eq.size() != qp.num_rows())
    throw std::invalid_argument("outcome dimensions do not match program");

  KktResiduals res;
  const VectorXd& v = out.primal;
  const VectorXd& w = out.duals_nonneg;
  VectorXd stat = qp.gradient(v) + w;
  if (qp.num_rows() > 0) stat -= qp.eq_matrix.transpose() * out.duals_eq;
  res.stationarity = stat.lpNorm<Eigen::Infinity>();
  if (qp.num_rows() > 0)
    res.primal_feasibility =
        (qp.eq_matrix * v - qp.eq_rhs).lpNorm<Eigen::Infinity>();
  for (Index i = 0; i < n; ++i) {
    if (qp.nonneg[static_cast<std::size_t>(i)]) {
      res.primal_feasibility = std::max(res.primal_feasibility, -v(i));
      res.dual_feasibility = std::max(res.dual_feasibility, -w(i));
      res.complementarity = std::max(res.complementarity, std::abs(v(i) * w(i)));
    } else {
      res.dual_feasibility = std::max(res.dual_feasibility, std::abs(w(i)));
    }
  }
  return res;
}

/// Lagrangian dual value bᵀy − vᵀQv + constant; equals the primal objective
/// at a KKT point.
inline double dual_objective(const QuadraticProgram& qp,
                             const SolveOutcome& out) {
  double value = qp.constant - out.primal.dot(qp.quadratic * out.primal);
  if (qp.num_rows() > 0) value += qp.eq_rhs.dot(out.duals_eq);
  return value;
}

namespace detail {

struct RowPresolve {
  std::vector<Index> kept;
  bool consistent = true;
};

// Picks a maximal independent subset of the rows of [A] and checks that the
// dropped rows are implied by the kept ones, right-hand side included.
inline RowPresolve independent_rows(const MatrixXd& A, const VectorXd& b) {
  RowPresolve out;
  const Index m = A.rows();
  if (m == 0) return out;
  constexpr double kRankTol = 1e-9;

  Eigen::ColPivHouseholderQR<MatrixXd> qr(A.transpose());
  qr.setThreshold(kRankTol);
  const Index rank = qr.rank();
  const auto& perm = qr.colsPermutation().indices();
  for (Index k = 0; k < rank; ++k) out.kept.push_back(perm(k));
  std::sort(out.kept.begin(), out.kept.end());

  MatrixXd augmented(A.cols() + 1, m);
  augmented.topRows(A.cols()) = A.transpose();
  augmented.row(A.cols()) = b.transpose();
  Eigen::ColPivHouseholderQR<MatrixXd> qr_aug(augmented);
  qr_aug.setThreshold(kRankTol);
  out.consistent = qr_aug.rank() == rank;
  return out;
}

inline double max_step(const VectorXd& value, const VectorXd& step,
                       const std::vector<Index>& idx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (Index i : idx)
    if (step(i) < 0.0) alpha = std::min(alpha, -value(i) / step(i));
  return alpha;
}

// Interior-point state in the reduced row space.
class InteriorPoint {
 public:
  InteriorPoint(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                const VectorXd& b, const std::vector<bool>& nonneg,
                const SolverSettings& settings)
      : P_(P), q_(q), A_(A), b_(b), settings_(settings) {
    n_ = q.size();
    m_ = b.size();
    for (Index i = 0; i < n_; ++i)
      (nonneg[static_cast<std::size_t>(i)] ? bounded_ : free_).push_back(i);
    is_bounded_.assign(static_cast<std::size_t>(n_), false);
    for (Index i : bounded_) is_bounded_[static_cast<std::size_t>(i)] = true;
  }

  SolveStatus run() {
    const double scale = std::max(1.0, b_.size() ? b_.lpNorm<Eigen::Infinity>() : 0.0);
    v_ = VectorXd::Zero(n_);
    w_ = VectorXd::Zero(n_);
    y_ = VectorXd::Zero(m_);
    for (Index i : bounded_) {
      v_(i) = scale;
      w_(i) = 1.0;
    }

    const double b_norm = m_ ? b_.lpNorm<Eigen::Infinity>() : 0.0;
    const double q_norm = q_.lpNorm<Eigen::Infinity>();
    const double nb = static_cast<double>(bounded_.size());
    VectorXd last_dv = VectorXd::Zero(n_);

    for (iterations_ = 0; iterations_ <= settings_.max_iter; ++iterations_) {
      VectorXd rd = P_ * v_ + q_ - w_;
      if (m_) rd += A_.transpose() * y_;
      VectorXd rp = m_ ? VectorXd(A_ * v_ - b_) : VectorXd::Zero(0);
      const double gap = v_.dot(w_);
      const double pobj = 0.5 * v_.dot(P_ * v_) + q_.dot(v_);

      const double rp_norm = m_ ? rp.lpNorm<Eigen::Infinity>() : 0.0;
      const double rd_norm = rd.lpNorm<Eigen::Infinity>();
      if (rp_norm <= settings_.eps_feas * (1.0 + b_norm) &&
          rd_norm <= settings_.eps_feas * (1.0 + q_norm) &&
          gap <= settings_.eps_gap * (1.0 + std::abs(pobj)))
        return SolveStatus::optimal;
      if (primal_infeasible()) return SolveStatus::infeasible;
      if (iterations_ > 0 && dual_infeasible(last_dv))
        return SolveStatus::unbounded;
      if (iterations_ == settings_.max_iter) break;

      factor();
      const double mu = nb > 0 ? gap / nb : 0.0;

      // Predictor.
      VectorXd comp(n_);
      comp.setZero();
      for (Index i : bounded_) comp(i) = -v_(i) * w_(i);
      VectorXd dv, dy, dw;
      newton(rd, rp, comp, dv, dy, dw);
      double alpha_aff = std::min({1.0, max_step(v_, dv, bounded_),
                                   max_step(w_, dw, bounded_)});

      double sigma = 0.0;
      if (nb > 0 && mu > 0.0) {
        double mu_aff = 0.0;
        for (Index i : bounded_)
          mu_aff += (v_(i) + alpha_aff * dv(i)) * (w_(i) + alpha_aff * dw(i));
        mu_aff /= nb;
        sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
      }

      // Corrector.
      if (nb > 0) {
        for (Index i : bounded_)
          comp(i) = -v_(i) * w_(i) - dv(i) * dw(i) + sigma * mu;
        newton(rd, rp, comp, dv, dy, dw);
      }

      const double eta = std::max(0.9, 1.0 - 10.0 * mu);
      const double alpha =
          std::min({1.0, eta * max_step(v_, dv, bounded_),
                    eta * max_step(w_, dw, bounded_)});
      v_ += alpha * dv;
      y_ += alpha * dy;
      w_ += alpha * dw;
      last_dv = alpha * dv;
    }
    return SolveStatus::max_iter;
  }

  const VectorXd& primal() const { return v_; }
  const VectorXd& duals_eq() const { return y_; }
  const VectorXd& duals_nonneg() const { return w_; }
  int iterations() const { return iterations_; }

 private:
  void factor() {
    const Index dim = n_ + m_;
    kkt_ = MatrixXd::Zero(dim, dim);
    kkt_.topLeftCorner(n_, n_) = P_;
    for (Index i : bounded_) kkt_(i, i) += w_(i) / v_(i);
    if (m_) {
      kkt_.topRightCorner(n_, m_) = A_.transpose();
      kkt_.bottomLeftCorner(m_, n_) = A_;
    }
    MatrixXd regularized = kkt_;
    const double reg = settings_.regularization;
    for (Index i = 0; i < n_; ++i) regularized(i, i) += reg;
    for (Index i = n_; i < dim; ++i) regularized(i, i) -= reg;
    lu_.compute(regularized);
  }

  VectorXd solve_kkt(const VectorXd& rhs) const {
    VectorXd sol = lu_.solve(rhs);
    for (int k = 0; k < settings_.refinement_steps; ++k)
      sol += lu_.solve(rhs - kkt_ * sol);
    return sol;
  }

  // Newton step for complementarity target `comp` (= rhs of W dv + V dw).
  void newton(const VectorXd& rd, const VectorXd& rp, const VectorXd& comp,
              VectorXd& dv, VectorXd& dy, VectorXd& dw) const {
    VectorXd rhs(n_ + m_);
    VectorXd top = -rd;
    for (Index i : bounded_) top(i) += comp(i) / v_(i);
    rhs.head(n_) = top;
    if (m_) rhs.tail(m_) = -rp;
    const VectorXd sol = solve_kkt(rhs);
    dv = sol.head(n_);
    dy = sol.tail(m_);
    dw = VectorXd::Zero(n_);
    for (Index i : bounded_) dw(i) = (comp(i) - w_(i) * dv(i)) / v_(i);
  }

  // Farkas: u = −y with Aᵀu <= 0 on bounded, = 0 on free, and bᵀu > 0.
  bool primal_infeasible() const {
    if (m_ == 0) return false;
    const double yn = y_.lpNorm<Eigen::Infinity>();
    if (!(yn > 0.0)) return false;
    const VectorXd u = -y_ / yn;
    const double bu = b_.dot(u);
    if (!(bu > 1e-6)) return false;
    const VectorXd atu = A_.transpose() * u;
    double viol = 0.0;
    for (Index i = 0; i < n_; ++i)
      viol = std::max(viol, is_bounded_[static_cast<std::size_t>(i)]
                                ? atu(i)
                                : std::abs(atu(i)));
    return viol <= settings_.eps_infeas * bu;
  }

  // Recession direction d with Pd = 0, Ad = 0, d >= 0 on bounded, qᵀd < 0.
  bool dual_infeasible(const VectorXd& d) const {
    const double dn = d.lpNorm<Eigen::Infinity>();
    if (dn <= 0.0) return false;
    const double tol = settings_.eps_infeas * dn;
    if (!(q_.dot(d) < -tol * std::max(1.0, q_.lpNorm<Eigen::Infinity>())))
      return false;
    if ((P_ * d).lpNorm<Eigen::Infinity>() > tol) return false;
    if (m_ && (A_ * d).lpNorm<Eigen::Infinity>() > tol) return false;
    for (Index i : bounded_)
      if (d(i) < -tol) return false;
    return v_.lpNorm<Eigen::Infinity>() > 1e6;
  }

  const MatrixXd& P_;
  const VectorXd& q_;
  const MatrixXd& A_;
  const VectorXd& b_;
  SolverSettings settings_;
  Index n_ = 0;
  Index m_ = 0;
  std::vector<Index> bounded_;
  std::vector<Index> free_;
  std::vector<bool> is_bounded_;
  VectorXd v_, y_, w_;
  MatrixXd kkt_;
  Eigen::PartialPivLU<MatrixXd> lu_;
  int iterations_ = 0;
};

// Active-set polish: fixes bounded variables with vᵢ <= wᵢ at zero, solves
// the equality-constrained KKT system on the rest, and re-guesses the
// partition a few times if signs come out wrong.  Returns false when no
// consistent partition is found.
inline bool polish(const MatrixXd& P, const VectorXd& q, const MatrixXd& A,
                   const VectorXd& b, const std::vector<bool>& nonneg,
                   const SolverSettings& settings, VectorXd& v, VectorXd& y,
                   VectorXd& w) {
  const Index n = q.size();
  const Index m = b.size();
  std::vector<bool> active(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i)
    active[static_cast<std::size_t>(i)] =
        !nonneg[static_cast<std::size_t>(i)] || v(i) > w(i);

  const double scale = 1.0 + std::max(v.lpNorm<Eigen::Infinity>(),
                                      w.lpNorm<Eigen::Infinity>());
  const double sign_tol = 1e-11 * scale;

  for (int round = 0; round < 8; ++round) {
    std::vector<Index> act;
    for (Index i = 0; i < n; ++i)
      if (active[static_cast<std::size_t>(i)]) act.push_back(i);
    const Index na = static_cast<Index>(act.size());

    MatrixXd K = MatrixXd::Zero(na + m, na + m);
    VectorXd rhs(na + m);
    for (Index a = 0; a < na; ++a) {
      for (Index c = 0; c < na; ++c) K(a, c) = P(act[a], act[c]);
      for (Index r = 0; r < m; ++r) {
        K(a, na + r) = A(r, act[a]);
        K(na + r, a) = A(r, act[a]);
      }
      rhs(a) = -q(act[a]);
    }
    rhs.tail(m) = b;

    MatrixXd Kreg = K;
    const double reg = 1e-9;
    for (Index a = 0; a < na; ++a) Kreg(a, a) += reg;
    for (Index r = 0; r < m; ++r) Kreg(na + r, na + r) -= reg;
    Eigen::PartialPivLU<MatrixXd> lu(Kreg);

    // Proximal iterative refinement, started from the interior-point point.
    VectorXd sol(na + m);
    for (Index a = 0; a < na; ++a) sol(a) = v(act[a]);
    sol.tail(m) = y;
    for (int k = 0; k < 25; ++k) {
      const VectorXd res = rhs - K * sol;
      if (res.lpNorm<Eigen::Infinity>() <= 1e-15 * scale) break;
      sol += lu.solve(res);
    }
    if (!sol.allFinite()) return false;

    VectorXd v_new = VectorXd::Zero(n);
    for (Index a = 0; a < na; ++a) v_new(act[a]) = sol(a);
    const VectorXd y_new = sol.tail(m);
    VectorXd w_new = P * v_new + q;
    if (m) w_new += A.transpose() * y_new;

    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (!nonneg[si]) continue;
      if (active[si] && v_new(i) < -sign_tol) {
        active[si] = false;
        changed = true;
      } else if (!active[si] && w_new(i) < -sign_tol) {
        active[si] = true;
        changed = true;
      }
    }
    if (changed) continue;

    for (Index i = 0; i < n; ++i) {
      const auto si = static_cast<std::size_t>(i);
      if (active[si]) {
        w_new(i) = 0.0;
        if (nonneg[si]) v_new(i) = std::max(v_new(i), 0.0);
      } else {
        w_new(i) = std::max(w_new(i), 0.0);
      }
    }
    // Reject if the polished point is not at least as good a KKT point.
    VectorXd rd = P * v_new + q - w_new;
    if (m) rd += A.transpose() * y_new;
    const double rp = m ? (A * v_new - b).lpNorm<Eigen::Infinity>() : 0.0;
    const double tol = settings.eps_feas * (1.0 + q.lpNorm<Eigen::Infinity>() +
                                            (m ? b.lpNorm<Eigen::Infinity>() : 0.0));
    if (rd.lpNorm<Eigen::Infinity>() > tol || rp > tol) return false;
    v = v_new;
    y = y_new;
    w = w_new;
    return true;
  }
  return false;
}

}  // namespace detail

/// Solves the program; infeasibility and unboundedness come back as status.
inline SolveOutcome solve(const QuadraticProgram& qp,
                          const SolverSettings& settings = {}) {
  check_dimensions(qp);
  const Index n = qp.num_vars();
  const Index m = qp.num_rows();
  if (n > 0 &&
      (qp.quadratic - qp.quadratic.transpose()).lpNorm<Eigen::Infinity>() > 1e-12)
    throw std::invalid_argument("quadratic term must be symmetric");
  if (n > 0 && qp.quadratic.lpNorm<Eigen::Infinity>() > 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(qp.quadratic,
                                                Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().maxCoeff() > 1e-10 * (1.0 + qp.quadratic.lpNorm<Eigen::Infinity>()))
      throw std::invalid_argument("quadratic term must be negative semidefinite");
  }

  SolveOutcome out;
  out.primal = VectorXd::Zero(n);
  out.duals_eq = VectorXd::Zero(m);
  out.duals_nonneg = VectorXd::Zero(n);

  const detail::RowPresolve rows = detail::independent_rows(qp.eq_matrix, qp.eq_rhs);
  if (!rows.consistent) {
    out.status = SolveStatus::infeasible;
    return out;
  }
  const Index mr = static_cast<Index>(rows.kept.size());
  MatrixXd A(mr, n);
  VectorXd b(mr);
  for (Index r = 0; r < mr; ++r) {
    A.row(r) = qp.eq_matrix.row(rows.kept[static_cast<std::size_t>(r)]);
    b(r) = qp.eq_rhs(rows.kept[static_cast<std::size_t>(r)]);
  }

  // Internally: minimize ½vᵀPv + qᵀv with the same multiplier signs.
  const MatrixXd P = -2.0 * qp.quadratic;
  const VectorXd q = -qp.linear;

  detail::InteriorPoint ipm(P, q, A, b, qp.nonneg, settings);
  out.status = ipm.run();
  out.iterations = ipm.iterations();
  VectorXd v = ipm.primal();
  VectorXd y = ipm.duals_eq();
  VectorXd w = ipm.duals_nonneg();

  if (out.status == SolveStatus::optimal && settings.polish)
    out.polished = detail::polish(P, q, A, b, qp.nonneg, settings, v, y, w);

  out.primal = v;
  out.duals_nonneg = w;
  for (Index r = 0; r < mr; ++r)
    out.duals_eq(rows.kept[static_cast<std::size_t>(r)]) = y(r);
  out.objective = qp.objective(v);
  return out;
}

}  // namespace mixauto
