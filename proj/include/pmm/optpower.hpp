#pragma once
// Log-barrier interior-point maximization of the tightened CSIT rate over
// the power simplex {0 <= gamma_j <= rho, sum gamma_j = rho}. The equality
// constraint is eliminated by substituting gamma_N, leaving a 2N-inequality
// barrier problem in N-1 variables solved by damped Newton with backtracking.
// The merge prefix u is fixed by the caller (taken from the generic
// allocation's refinement) and held constant during the solve.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "core.hpp"
#include "rate.hpp"

namespace pmm {

struct OptimizerConfig {
  double barrier_weight_initial = 1.0;
  double barrier_decrease_factor = 10.0;
  double newton_tolerance = 1e-9;  // Newton gradient norm and 2N*mu gap target
  int max_newton_steps = 100;
  int max_outer_iterations = 64;
  double distinctness_floor = PowerAllocation::kDistinctnessTol;  // relative to rho
};

struct OptimizeResult {
  std::vector<double> gamma;
  double achieved_rate = 0.0;  // R_tight at gamma, bits
  double kkt_residual = 0.0;
  int outer_iterations = 0;
  double min_pairwise_gap = 0.0;  // relative to rho
  bool distinct = false;          // min_pairwise_gap >= distinctness_floor
  std::vector<double> outer_objectives;              // R_tight after each outer stage
  std::vector<std::vector<double>> outer_iterates;   // iterate after each outer stage
};

class OptimizationError : public std::runtime_error {
 public:
  OptimizationError(const std::string& what, OptimizeResult best_iterate)
      : std::runtime_error(what), best(std::move(best_iterate)) {}
  OptimizeResult best;
};

// R_tight as a smooth function of the power vector, with analytic gradient
// and Hessian. The merged block contributes log terms in averaged powers
// (coefficient matrix A), the unmerged tail log terms in single coordinates.
class TightRateObjective {
 public:
  TightRateObjective(const ChannelRealization& ch, const std::vector<Permutation>& set_p, int u)
      : n_(ch.tx()), r_(static_cast<int>(set_p.size())), u_(u) {
    if (ch.tx() != ch.rx())
      throw std::invalid_argument("TightRateObjective: restricted to N = M");
    if (u < 1 || u > r_) throw std::invalid_argument("TightRateObjective: u outside [1, r]");
    const auto& lambda = ch.svd().singular_values;
    lambda2_.resize(static_cast<size_t>(n_));
    double max_l2 = 0.0;
    for (int k = 0; k < n_; ++k) {
      lambda2_[static_cast<size_t>(k)] = lambda[k] * lambda[k];
      max_l2 = std::max(max_l2, lambda2_[static_cast<size_t>(k)]);
    }
    if (max_l2 <= 0.0)
      throw std::invalid_argument("TightRateObjective: channel has all-zero singular values");
    merge_coeff_.assign(static_cast<size_t>(n_ * n_), 0.0);
    for (int j = 0; j < u; ++j)
      for (int k = 0; k < n_; ++k)
        merge_coeff_[static_cast<size_t>(k * n_ + set_p[static_cast<size_t>(j)][k])] += 1.0 / u;
    tail_.clear();
    for (int j = u; j < r_; ++j)
      for (int k = 0; k < n_; ++k)
        tail_.push_back({k, set_p[static_cast<size_t>(j)][k]});
    const double au = static_cast<double>(u) / r_;
    constant_ = au * std::log2(1.0 / au) +
                (static_cast<double>(r_ - u) / r_) * std::log2(static_cast<double>(r_));
  }

  int dim() const { return n_; }

  double value(const std::vector<double>& gamma) const {
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    double acc = 0.0;
    const double au = static_cast<double>(u_) / r_;
    for (int k = 0; k < n_; ++k)
      acc += au * inv_ln2 * std::log1p(lambda2_[static_cast<size_t>(k)] * merged_power(gamma, k));
    for (const auto& t : tail_)
      acc += (1.0 / r_) * inv_ln2 *
             std::log1p(lambda2_[static_cast<size_t>(t.k)] * gamma[static_cast<size_t>(t.m)]);
    return constant_ + acc;
  }

  std::vector<double> gradient(const std::vector<double>& gamma) const {
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    std::vector<double> g(static_cast<size_t>(n_), 0.0);
    const double au = static_cast<double>(u_) / r_;
    for (int k = 0; k < n_; ++k) {
      const double l2 = lambda2_[static_cast<size_t>(k)];
      const double denom = 1.0 + l2 * merged_power(gamma, k);
      for (int m = 0; m < n_; ++m) {
        const double a = merge_coeff_[static_cast<size_t>(k * n_ + m)];
        if (a != 0.0) g[static_cast<size_t>(m)] += au * inv_ln2 * l2 * a / denom;
      }
    }
    for (const auto& t : tail_) {
      const double l2 = lambda2_[static_cast<size_t>(t.k)];
      g[static_cast<size_t>(t.m)] +=
          (1.0 / r_) * inv_ln2 * l2 / (1.0 + l2 * gamma[static_cast<size_t>(t.m)]);
    }
    return g;
  }

  Eigen::MatrixXd hessian(const std::vector<double>& gamma) const {
    const double inv_ln2 = 1.0 / std::numbers::ln2;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n_, n_);
    const double au = static_cast<double>(u_) / r_;
    for (int k = 0; k < n_; ++k) {
      const double l2 = lambda2_[static_cast<size_t>(k)];
      const double denom = 1.0 + l2 * merged_power(gamma, k);
      const double scale = -au * inv_ln2 * l2 * l2 / (denom * denom);
      for (int m1 = 0; m1 < n_; ++m1) {
        const double a1 = merge_coeff_[static_cast<size_t>(k * n_ + m1)];
        if (a1 == 0.0) continue;
        for (int m2 = 0; m2 < n_; ++m2) {
          const double a2 = merge_coeff_[static_cast<size_t>(k * n_ + m2)];
          if (a2 != 0.0) h(m1, m2) += scale * a1 * a2;
        }
      }
    }
    for (const auto& t : tail_) {
      const double l2 = lambda2_[static_cast<size_t>(t.k)];
      const double denom = 1.0 + l2 * gamma[static_cast<size_t>(t.m)];
      h(t.m, t.m) += -(1.0 / r_) * inv_ln2 * l2 * l2 / (denom * denom);
    }
    return h;
  }

 private:
  struct TailTerm {
    int k;  // parallel subchannel index
    int m;  // power coordinate feeding it
  };

  double merged_power(const std::vector<double>& gamma, int k) const {
    double acc = 0.0;
    for (int m = 0; m < n_; ++m)
      acc += merge_coeff_[static_cast<size_t>(k * n_ + m)] * gamma[static_cast<size_t>(m)];
    return acc;
  }

  int n_;
  int r_;
  int u_;
  double constant_;
  std::vector<double> lambda2_;
  std::vector<double> merge_coeff_;  // row k: averaging weights of gamma_m in subchannel k
  std::vector<TailTerm> tail_;
};

namespace detail {

inline bool strictly_feasible(const std::vector<double>& gamma, double rho) {
  for (double g : gamma)
    if (!(g > 0.0) || !(g < rho)) return false;
  return true;
}

inline std::vector<double> full_gamma(const std::vector<double>& reduced, double rho) {
  std::vector<double> g(reduced.size() + 1);
  double sum = 0.0;
  for (size_t j = 0; j < reduced.size(); ++j) {
    g[j] = reduced[j];
    sum += reduced[j];
  }
  g.back() = rho - sum;
  return g;
}

}  // namespace detail

// Maximizes R_tight over the power simplex. Every iterate is strictly
// feasible; the returned point carries the KKT stationarity residual of the
// original problem (barrier multipliers lambda_j = mu/gamma_j,
// kappa_j = mu/(rho-gamma_j)). The optimum may approach equal powers; that
// is reported, not prevented, since the optimization problem itself carries
// no distinctness constraint.
inline OptimizeResult optimize_power(const ChannelRealization& ch,
                                     const std::vector<Permutation>& set_p, int merge_prefix,
                                     double rho, const OptimizerConfig& cfg = {},
                                     const std::vector<double>* warm_start = nullptr) {
  if (!(rho > 0.0)) throw std::invalid_argument("optimize_power: rho must be positive");
  if (cfg.barrier_decrease_factor <= 1.0)
    throw std::invalid_argument("optimize_power: barrier factor must exceed 1");
  if (cfg.newton_tolerance <= 0.0)
    throw std::invalid_argument("optimize_power: tolerances must be positive");
  const TightRateObjective obj(ch, set_p, merge_prefix);
  const int n = obj.dim();

  std::vector<double> gamma;
  if (warm_start) {
    gamma = *warm_start;
    if (static_cast<int>(gamma.size()) != n || !detail::strictly_feasible(gamma, rho))
      throw std::invalid_argument("optimize_power: warm start not strictly feasible");
  } else {
    gamma = default_power_allocation(n, rho).gamma();
  }

  const auto barrier = [&](const std::vector<double>& g) {
    double acc = 0.0;
    for (double v : g) acc -= std::log(v) + std::log(rho - v);
    return acc;
  };
  const auto merit = [&](const std::vector<double>& g, double mu) {
    return -obj.value(g) + mu * barrier(g);
  };

  OptimizeResult res;
  res.gamma = gamma;
  double mu = cfg.barrier_weight_initial;
  bool converged = false;
  int outer = 0;
  for (; outer < cfg.max_outer_iterations; ++outer) {
    // Newton on the reduced (N-1)-variable barrier problem.
    const auto reduced_gradient = [&](const std::vector<double>& point) {
      const std::vector<double> g_full = obj.gradient(point);
      Eigen::VectorXd grad(n - 1);
      const double gn = point[static_cast<size_t>(n - 1)];
      const double bg_n = mu * (-1.0 / gn + 1.0 / (rho - gn));
      for (int j = 0; j < n - 1; ++j) {
        const double gj = point[static_cast<size_t>(j)];
        grad[j] = -(g_full[static_cast<size_t>(j)] - g_full[static_cast<size_t>(n - 1)]) +
                  mu * (-1.0 / gj + 1.0 / (rho - gj)) - bg_n;
      }
      return grad;
    };

    for (int step = 0; step < cfg.max_newton_steps; ++step) {
      const Eigen::VectorXd grad = reduced_gradient(gamma);
      const double grad_norm = grad.lpNorm<Eigen::Infinity>();
      if (grad_norm <= cfg.newton_tolerance) break;

      const Eigen::MatrixXd h_full = obj.hessian(gamma);
      Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(n - 1, n - 1);
      const double gn = gamma[static_cast<size_t>(n - 1)];
      const double bh_n = mu * (1.0 / (gn * gn) + 1.0 / ((rho - gn) * (rho - gn)));
      for (int j = 0; j < n - 1; ++j) {
        const double gj = gamma[static_cast<size_t>(j)];
        for (int k = 0; k < n - 1; ++k)
          hess(j, k) = -(h_full(j, k) - h_full(j, n - 1) - h_full(n - 1, k) + h_full(n - 1, n - 1)) +
                       bh_n;
        hess(j, j) += mu * (1.0 / (gj * gj) + 1.0 / ((rho - gj) * (rho - gj)));
      }

      // Jacobi-preconditioned solve: the barrier makes the Hessian strongly
      // diagonal near a nearly-active box face, so rescaling keeps the
      // Newton direction accurate at high condition numbers.
      const Eigen::VectorXd scale = hess.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt();
      const Eigen::MatrixXd hess_scaled =
          scale.cwiseInverse().asDiagonal() * hess * scale.cwiseInverse().asDiagonal();
      const Eigen::VectorXd grad_scaled = scale.cwiseInverse().asDiagonal() * grad;
      Eigen::VectorXd dir =
          scale.cwiseInverse().asDiagonal() * hess_scaled.ldlt().solve(-grad_scaled);
      if (!dir.allFinite()) dir = -grad;  // fall back to steepest descent

      // Backtracking line search keeping every coordinate strictly inside.
      // Near the optimum the merit differences drop below double
      // resolution, so a step that fails the (slack-tolerant) Armijo test
      // is still accepted when it reduces the gradient norm.
      const double f0 = merit(gamma, mu);
      const double slack = 1e-13 * (1.0 + std::abs(f0));
      const double slope = grad.dot(dir);
      double t = 1.0;
      bool moved = false;
      for (int bt = 0; bt < 70 && !moved; ++bt) {
        std::vector<double> trial(gamma.begin(), gamma.end() - 1);
        for (int j = 0; j < n - 1; ++j) trial[static_cast<size_t>(j)] += t * dir[j];
        std::vector<double> trial_full = detail::full_gamma(trial, rho);
        if (detail::strictly_feasible(trial_full, rho)) {
          const bool armijo = merit(trial_full, mu) <= f0 + 0.3 * t * slope + slack;
          const bool polish =
              reduced_gradient(trial_full).lpNorm<Eigen::Infinity>() <= 0.9 * grad_norm;
          if (armijo || polish) {
            gamma = std::move(trial_full);
            moved = true;
          }
        }
        t *= 0.5;
      }
      if (!moved) break;  // step collapsed; the stage is as converged as it gets
    }

    res.outer_objectives.push_back(obj.value(gamma));
    res.outer_iterates.push_back(gamma);
    if (2.0 * n * mu < cfg.newton_tolerance) {
      converged = true;
      ++outer;
      break;
    }
    mu /= cfg.barrier_decrease_factor;
  }

  res.gamma = gamma;
  res.achieved_rate = obj.value(gamma);
  res.outer_iterations = outer;

  // KKT stationarity residual of the original problem, reported from the
  // better of two dual-feasible certificates:
  //  (a) the barrier's implicit multipliers (complementarity equal to the
  //      duality-gap bound; the defect is exactly the Newton residual), and
  //  (b) a fitted active-set certificate where mu-scale-pinned box faces
  //      absorb the gradient through nonnegative multipliers.
  // (a) covers coordinates the barrier holds mid-range; (b) covers faces
  // whose huge curvature floors the Newton polish.
  {
    const std::vector<double> g_full = obj.gradient(gamma);

    double implicit_lo = std::numeric_limits<double>::infinity();
    double implicit_hi = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      const double gj = gamma[static_cast<size_t>(j)];
      const double s = -g_full[static_cast<size_t>(j)] - mu / gj + mu / (rho - gj);
      implicit_lo = std::min(implicit_lo, s);
      implicit_hi = std::max(implicit_hi, s);
    }
    const double residual_implicit = 0.5 * (implicit_hi - implicit_lo);

    const double active_tol = std::max(1e3 * mu, 1e-12 * rho);
    const auto defect = [&](double nu) {
      double worst = 0.0;
      for (int j = 0; j < n; ++j) {
        const double df = -g_full[static_cast<size_t>(j)];  // minimized objective
        const double gj = gamma[static_cast<size_t>(j)];
        double d;
        if (gj <= active_tol)
          d = std::max(0.0, -(df + nu));
        else if (gj >= rho - active_tol)
          d = std::max(0.0, df + nu);
        else
          d = std::abs(df + nu);
        worst = std::max(worst, d);
      }
      return worst;
    };
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < n; ++j) {
      lo = std::min(lo, g_full[static_cast<size_t>(j)] - 1.0);
      hi = std::max(hi, g_full[static_cast<size_t>(j)] + 1.0);
    }
    for (int it = 0; it < 200; ++it) {  // defect is convex in nu
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (defect(m1) <= defect(m2))
        hi = m2;
      else
        lo = m1;
    }
    res.kkt_residual = std::min(residual_implicit, defect(0.5 * (lo + hi)));
  }

  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      min_gap = std::min(min_gap,
                         std::abs(gamma[static_cast<size_t>(i)] - gamma[static_cast<size_t>(j)]));
  res.min_pairwise_gap = min_gap / rho;
  res.distinct = res.min_pairwise_gap >= cfg.distinctness_floor;

  if (!converged)
    throw OptimizationError("optimize_power: barrier path did not reach the gap tolerance", res);
  return res;
}

// Guard rail for feeding an optimized point back into the codec: nudge
// near-equal coordinates apart by the floor while preserving the total.
inline std::vector<double> project_to_distinct(std::vector<double> gamma, double rho,
                                               double floor_rel = PowerAllocation::kDistinctnessTol) {
  const int n = static_cast<int>(gamma.size());
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return gamma[static_cast<size_t>(a)] < gamma[static_cast<size_t>(b)]; });
  const double gap = 2.0 * floor_rel * rho;
  for (int k = 1; k < n; ++k) {
    double& cur = gamma[static_cast<size_t>(order[static_cast<size_t>(k)])];
    const double prev = gamma[static_cast<size_t>(order[static_cast<size_t>(k - 1)])];
    if (cur - prev < gap) cur = prev + gap;
  }
  double sum = 0.0;
  for (double g : gamma) sum += g;
  for (double& g : gamma) g *= rho / sum;
  return gamma;
}

}  // namespace pmm
