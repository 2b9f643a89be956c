#pragma once
// Rate and capacity formulas: the permutation-modulation achievable rate
// (mixture entropy bound, optionally tightened by progressive merging), the
// Gaussian-input capacity, V-BLAST equal-power capacity, the SM/GSM baseline
// rates, and the CSIT parallel-channel rate R_csit / R_tight. All values are
// bits per channel use; the M*log2(pi e) noise-entropy offsets cancel in
// every rate, so only determinant and weight-entropy terms remain.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "codec.hpp"
#include "core.hpp"
#include "gmm.hpp"

namespace pmm {

// log2 det(I_M + H diag(gamma) H^H)
inline double capacity(const ChannelRealization& ch, const std::vector<double>& gamma_diag) {
  if (static_cast<int>(gamma_diag.size()) != ch.tx())
    throw std::invalid_argument("capacity: dimension mismatch");
  const int m = ch.rx();
  const CMatrix& h = ch.matrix();
  CMatrix d = CMatrix::Identity(m, m);
  for (int k = 0; k < ch.tx(); ++k)
    d += gamma_diag[static_cast<size_t>(k)] * (h.col(k) * h.col(k).adjoint());
  return log2_det_hermitian(d);
}

inline double capacity(const ChannelRealization& ch, const PowerAllocation& pa) {
  return capacity(ch, pa.gamma());
}

// Equal-power Gaussian-input capacity, log2 det(I_M + (rho/N) H H^H).
inline double vblast_capacity(const ChannelRealization& ch, double rho) {
  return capacity(ch, std::vector<double>(static_cast<size_t>(ch.tx()), rho / ch.tx()));
}

// Rate of a zero-mean mixture-input channel: the entropy bound of the
// receive mixture minus the noise entropy. With refinement the bound is the
// minimum over all progressive-merge stages.
inline double receive_mixture_rate(const ChannelRealization& ch, const GaussianMixture& mix_y,
                                   bool refine) {
  const double noise_entropy = ch.rx() * kLog2PiE;
  if (refine) return refine_bound(mix_y).tight_bound - noise_entropy;
  return entropy_upper_bound(mix_y) - noise_entropy;
}

inline double mixture_rate(const ChannelRealization& ch, const GaussianMixture& mix_x,
                           bool refine = true) {
  return receive_mixture_rate(ch, mixture_of_y(ch, mix_x), refine);
}

// Same rate, from diagonal transmit covariances (handles singular ones).
inline double mixture_rate(const ChannelRealization& ch, const std::vector<RVector>& diags,
                           const std::vector<double>& weights, bool refine = true) {
  return receive_mixture_rate(ch, mixture_of_y_from_diagonals(ch, diags, weights), refine);
}

inline double pmm_rate(const ChannelRealization& ch, const std::vector<Permutation>& set_p,
                       const PowerAllocation& pa, const std::vector<double>& weights,
                       bool refine = true) {
  return mixture_rate(ch, conditional_covariances(set_p, pa), weights, refine);
}

inline double pmm_rate(const ChannelRealization& ch, const std::vector<Permutation>& set_p,
                       const PowerAllocation& pa, bool refine = true) {
  return pmm_rate(ch, set_p, pa, uniform_weights(set_p.size()), refine);
}

// Single-antenna-activation covariances: t = N diagonals with full power on
// one antenna.
inline std::vector<RVector> sm_covariances(int n, double rho) {
  std::vector<RVector> covs;
  covs.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    RVector d = RVector::Zero(n);
    d[i] = rho;
    covs.push_back(std::move(d));
  }
  return covs;
}

// Antenna-subset covariances for generalized spatial modulation: the first
// 2^floor(log2 C(N, n_act)) size-n_act subsets in lexicographic order, equal
// power rho/n_act on the active antennas.
inline std::vector<RVector> gsm_covariances(int n, double rho, int n_act) {
  if (n_act < 1 || n_act > n) throw std::invalid_argument("gsm_covariances: n_act outside [1, N]");
  std::vector<std::vector<int>> combos;
  std::vector<int> cur;
  // Lexicographic subset enumeration.
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == n_act) {
      combos.push_back(cur);
      return;
    }
    for (int i = start; i < n; ++i) {
      cur.push_back(i);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  size_t v = 1;
  while (v * 2 <= combos.size()) v *= 2;
  combos.resize(v);
  std::vector<RVector> covs;
  covs.reserve(v);
  for (const auto& combo : combos) {
    RVector d = RVector::Zero(n);
    for (int i : combo) d[i] = rho / n_act;
    covs.push_back(std::move(d));
  }
  return covs;
}

inline double sm_rate(const ChannelRealization& ch, double rho, bool refine = true) {
  const auto covs = sm_covariances(ch.tx(), rho);
  return mixture_rate(ch, covs, uniform_weights(covs.size()), refine);
}

inline double gsm_rate(const ChannelRealization& ch, double rho, int n_act, bool refine = true) {
  const auto covs = gsm_covariances(ch.tx(), rho, n_act);
  return mixture_rate(ch, covs, uniform_weights(covs.size()), refine);
}

namespace detail {

inline void require_square_with_svd(const ChannelRealization& ch) {
  if (ch.tx() != ch.rx())
    throw std::invalid_argument("csit rate: restricted to square channels (N = M)");
  if (!ch.has_svd()) throw MissingSvdError();
}

}  // namespace detail

// Diagonal receive covariances of the parallel channel: entry k of component
// j is 1 + lambda_k^2 * gamma[p_j(k)].
inline std::vector<RVector> csit_component_diagonals(const ChannelRealization& ch,
                                                     const std::vector<Permutation>& set_p,
                                                     const PowerAllocation& pa) {
  detail::require_square_with_svd(ch);
  const auto& lambda = ch.svd().singular_values;
  const int n = ch.tx();
  std::vector<RVector> diags;
  diags.reserve(set_p.size());
  for (const auto& p : set_p) {
    RVector d(n);
    for (int k = 0; k < n; ++k) d[k] = 1.0 + lambda[k] * lambda[k] * pa[p[k]];
    diags.push_back(std::move(d));
  }
  return diags;
}

// R_tight on the CSIT path with the first u components merged (u = 1 leaves
// the mixture untouched and reproduces R_csit; u = r is the fully merged
// single Gaussian). Uniform weights.
inline double r_tight_csit(const ChannelRealization& ch, const std::vector<Permutation>& set_p,
                           const PowerAllocation& pa, int u) {
  detail::require_square_with_svd(ch);
  const int r = static_cast<int>(set_p.size());
  if (u < 1 || u > r) throw std::invalid_argument("r_tight_csit: u outside [1, r]");
  const auto& lambda = ch.svd().singular_values;
  const int n = ch.tx();

  // Merged block X: weight u/r, covariance the average of the first u
  // permuted diagonals.
  RVector merged = RVector::Zero(n);
  for (int j = 0; j < u; ++j)
    for (int k = 0; k < n; ++k) merged[k] += pa[set_p[static_cast<size_t>(j)][k]] / u;
  const double alpha_tight = static_cast<double>(u) / r;
  double x = 0.0;
  for (int k = 0; k < n; ++k) x += std::log2(1.0 + lambda[k] * lambda[k] * merged[k]);
  x = alpha_tight * (std::log2(1.0 / alpha_tight) + x);

  // Unmerged tail Y.
  double y = 0.0;
  const double alpha_j = 1.0 / r;
  for (int j = u; j < r; ++j) {
    double det = 0.0;
    for (int k = 0; k < n; ++k)
      det += std::log2(1.0 + lambda[k] * lambda[k] * pa[set_p[static_cast<size_t>(j)][k]]);
    y += alpha_j * (std::log2(static_cast<double>(r)) + det);
  }
  return x + y;
}

inline double csit_rate(const ChannelRealization& ch, const std::vector<Permutation>& set_p,
                        const PowerAllocation& pa) {
  return r_tight_csit(ch, set_p, pa, 1);
}

// The merge prefix attaining the minimum of R_tight over u = 1..r at this
// allocation; fixes the merge for the power optimizer.
inline int refine_merge_prefix_csit(const ChannelRealization& ch,
                                    const std::vector<Permutation>& set_p,
                                    const PowerAllocation& pa) {
  const int r = static_cast<int>(set_p.size());
  int best_u = 1;
  double best = r_tight_csit(ch, set_p, pa, 1);
  for (int u = 2; u <= r; ++u) {
    const double val = r_tight_csit(ch, set_p, pa, u);
    if (val < best) {
      best = val;
      best_u = u;
    }
  }
  return best_u;
}

}  // namespace pmm
