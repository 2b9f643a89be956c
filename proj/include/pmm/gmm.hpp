#pragma once
// Gaussian-mixture machinery for the achievable-rate analysis: conditional
// covariances of the precoded vector, transmit/receive mixtures, pdf
// evaluation, the moment-preserving merge, Salmond's distance (identically
// zero for zero-mean components), the mixture entropy upper bound and its
// refinement by progressive merging.
//
// All entropies are in bits (log base 2). Determinants and inverses go
// through Cholesky factors with log-determinant accumulation so high-SNR
// covariances cannot overflow.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace pmm {

inline const double kLog2PiE = std::log2(std::numbers::pi * std::numbers::e);

// log2(det(m)) for Hermitian positive-definite m, via LLT.
inline double log2_det_hermitian(const CMatrix& m) {
  Eigen::LLT<CMatrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("log2_det_hermitian: matrix not positive-definite");
  double acc = 0.0;
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < m.rows(); ++i) acc += std::log2(std::real(l(i, i)));
  return 2.0 * acc;
}

// C_i = P_i * diag(gamma) * P_i^{-1}: the diagonal of gamma permuted by p_i,
// one covariance per permutation. Returned as diagonal vectors; entry k is
// gamma[p_i[k]].
inline std::vector<RVector> conditional_covariances(const std::vector<Permutation>& set_p,
                                                    const PowerAllocation& pa) {
  std::vector<RVector> covs;
  covs.reserve(set_p.size());
  for (const auto& p : set_p) {
    if (p.size() != pa.size())
      throw std::invalid_argument("conditional_covariances: dimension mismatch");
    RVector d(pa.size());
    for (int k = 0; k < pa.size(); ++k) d[k] = pa[p[k]];
    covs.push_back(std::move(d));
  }
  return covs;
}

inline GaussianMixture mixture_from_diagonals(const std::vector<RVector>& diags,
                                              const std::vector<double>& weights) {
  if (diags.empty() || diags.size() != weights.size())
    throw std::invalid_argument("mixture_from_diagonals: size mismatch");
  const int d = static_cast<int>(diags.front().size());
  std::vector<MixtureComponent> comps;
  comps.reserve(diags.size());
  for (size_t i = 0; i < diags.size(); ++i) {
    CMatrix cov = CMatrix::Zero(d, d);
    cov.diagonal() = diags[i].cast<cxd>();
    comps.push_back({weights[i], std::move(cov)});
  }
  return GaussianMixture(d, std::move(comps));
}

inline std::vector<double> uniform_weights(size_t r) {
  return std::vector<double>(r, 1.0 / static_cast<double>(r));
}

// Transmit mixture f_x: components (alpha_i, C_i).
inline GaussianMixture mixture_of_x(const std::vector<Permutation>& set_p,
                                    const PowerAllocation& pa,
                                    const std::vector<double>& weights) {
  return mixture_from_diagonals(conditional_covariances(set_p, pa), weights);
}

// Receive mixture f_y built straight from diagonal transmit covariances:
// components (alpha_i, D_i = H diag(d_i) H^H + I_M). Works for schemes whose
// transmit covariances are singular (inactive antennas), since D_i is
// positive-definite regardless.
inline GaussianMixture mixture_of_y_from_diagonals(const ChannelRealization& ch,
                                                   const std::vector<RVector>& diags,
                                                   const std::vector<double>& weights) {
  if (diags.empty() || diags.size() != weights.size())
    throw std::invalid_argument("mixture_of_y_from_diagonals: size mismatch");
  const int m = ch.rx();
  const int n = ch.tx();
  const CMatrix& h = ch.matrix();
  std::vector<CMatrix> outer;
  outer.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) outer.push_back(h.col(k) * h.col(k).adjoint());
  std::vector<MixtureComponent> comps;
  comps.reserve(diags.size());
  for (size_t i = 0; i < diags.size(); ++i) {
    if (diags[i].size() != n)
      throw std::invalid_argument("mixture_of_y_from_diagonals: dimension mismatch");
    CMatrix d = CMatrix::Identity(m, m);
    for (int k = 0; k < n; ++k)
      if (diags[i][k] != 0.0) d += diags[i][k] * outer[static_cast<size_t>(k)];
    comps.push_back({weights[i], std::move(d)});
  }
  return GaussianMixture(m, std::move(comps));
}

// Receive mixture f_y: components (alpha_i, D_i = H C_i H^H + I_M).
inline GaussianMixture mixture_of_y(const ChannelRealization& ch, const GaussianMixture& mix_x) {
  if (mix_x.dim() != ch.tx()) throw std::invalid_argument("mixture_of_y: dimension mismatch");
  const int m = ch.rx();
  const CMatrix& h = ch.matrix();
  std::vector<MixtureComponent> comps;
  comps.reserve(static_cast<size_t>(mix_x.size()));
  for (const auto& c : mix_x.components()) {
    CMatrix d = h * c.covariance * h.adjoint();
    d += CMatrix::Identity(m, m);
    comps.push_back({c.weight, std::move(d)});
  }
  return GaussianMixture(m, std::move(comps));
}

// Mixture density at a point: sum_i alpha_i exp(-z^H Sigma_i^{-1} z) /
// (pi^d det Sigma_i), evaluated in log space per component.
inline double pdf_eval(const GaussianMixture& mix, const CVector& z) {
  if (z.size() != mix.dim()) throw std::invalid_argument("pdf_eval: dimension mismatch");
  const double log_pi = std::log(std::numbers::pi);
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> logs;
  logs.reserve(static_cast<size_t>(mix.size()));
  for (const auto& c : mix.components()) {
    if (c.weight <= 0.0) continue;
    Eigen::LLT<CMatrix> llt(c.covariance);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("pdf_eval: covariance not positive-definite");
    double log_det = 0.0;
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < mix.dim(); ++i) log_det += 2.0 * std::log(std::real(l(i, i)));
    const CVector w = llt.matrixL().solve(z);
    const double quad = w.squaredNorm();
    const double lg = std::log(c.weight) - quad - mix.dim() * log_pi - log_det;
    logs.push_back(lg);
    best = std::max(best, lg);
  }
  if (logs.empty()) return 0.0;
  double acc = 0.0;
  for (double lg : logs) acc += std::exp(lg - best);
  return std::exp(best) * acc;
}

// Moment-preserving merge of components i and j: weights add, the covariance
// is their weight-normalized convex combination. The mean outer-product term
// vanishes because every component is zero-mean.
inline GaussianMixture merge_components(const GaussianMixture& mix, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= mix.size() || j >= mix.size())
    throw std::invalid_argument("merge_components: invalid indices");
  const auto& a = mix.component(i);
  const auto& b = mix.component(j);
  const double w = a.weight + b.weight;
  MixtureComponent merged;
  merged.weight = w;
  if (w > 0.0)
    merged.covariance = (a.weight / w) * a.covariance + (b.weight / w) * b.covariance;
  else
    merged.covariance = 0.5 * (a.covariance + b.covariance);
  std::vector<MixtureComponent> comps;
  comps.reserve(static_cast<size_t>(mix.size()) - 1);
  for (int k = 0; k < mix.size(); ++k)
    if (k != i && k != j) comps.push_back(mix.component(k));
  comps.push_back(std::move(merged));
  return GaussianMixture(mix.dim(), std::move(comps));
}

// Salmond distance D_s^2(i,j) = tr(C~^{-1} dW_ij) with dW_ij built from the
// mean difference. Zero-mean components make dW vanish, so the distance is
// identically zero here; the overall covariance must still be invertible.
inline double salmond_distance(const GaussianMixture& mix, int i, int j) {
  if (i == j || i < 0 || j < 0 || i >= mix.size() || j >= mix.size())
    throw std::invalid_argument("salmond_distance: invalid indices");
  Eigen::LLT<CMatrix> llt(mix.overall_covariance());
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("salmond_distance: overall covariance is singular");
  return 0.0;  // dW_ij = (a_i a_j / (a_i + a_j)) * 0 * 0^T
}

// Upper bound on the differential entropy of the mixture, in bits:
//   sum_i alpha_i (log2(1/alpha_i) + log2((pi e)^d det Sigma_i)).
// Zero-weight components contribute nothing (0 * log(1/0) := 0).
inline double entropy_upper_bound(const GaussianMixture& mix) {
  double acc = 0.0;
  for (const auto& c : mix.components()) {
    if (c.weight <= 0.0) continue;
    acc += c.weight * (-std::log2(c.weight) + mix.dim() * kLog2PiE +
                       log2_det_hermitian(c.covariance));
  }
  return acc;
}

struct MergeRecord {
  std::vector<int> merged_indices;  // original component indices merged so far
  double alpha_tilde;
  CMatrix sigma_tilde;
};

struct RefineResult {
  double tight_bound;                // min over all stages, bits
  int best_prefix;                   // number of leading components merged at the min (1 = none)
  std::vector<double> stage_bounds;  // stage k-1: first k components merged, k = 1..r
  std::vector<MergeRecord> schedule; // the r-1 successive merges
};

// Progressive refinement: compute the bound for the original mixture, then
// merge components left to right (the order is immaterial for zero-mean
// mixtures), recomputing the bound after each merge. Returns the minimum
// over all r stages; stage r is the single moment-matched Gaussian.
inline RefineResult refine_bound(const GaussianMixture& mix) {
  const int r = mix.size();
  const int d = mix.dim();

  // Per-component entropy pieces, reused by every stage.
  std::vector<double> comp_terms(static_cast<size_t>(r), 0.0);
  for (int i = 0; i < r; ++i) {
    const auto& c = mix.component(i);
    if (c.weight > 0.0)
      comp_terms[static_cast<size_t>(i)] =
          c.weight * (-std::log2(c.weight) + d * kLog2PiE + log2_det_hermitian(c.covariance));
  }
  std::vector<double> suffix(static_cast<size_t>(r) + 1, 0.0);
  for (int i = r - 1; i >= 0; --i)
    suffix[static_cast<size_t>(i)] = suffix[static_cast<size_t>(i) + 1] + comp_terms[static_cast<size_t>(i)];

  RefineResult res;
  res.stage_bounds.reserve(static_cast<size_t>(r));
  res.stage_bounds.push_back(suffix[0]);
  res.tight_bound = suffix[0];
  res.best_prefix = 1;

  double prefix_weight = mix.component(0).weight;
  CMatrix prefix_sum = mix.component(0).weight * mix.component(0).covariance;
  std::vector<int> merged_idx = {0};
  for (int k = 2; k <= r; ++k) {
    const auto& c = mix.component(k - 1);
    prefix_weight += c.weight;
    prefix_sum += c.weight * c.covariance;
    merged_idx.push_back(k - 1);

    MergeRecord rec;
    rec.merged_indices = merged_idx;
    rec.alpha_tilde = prefix_weight;
    rec.sigma_tilde = prefix_weight > 0.0 ? CMatrix(prefix_sum / prefix_weight)
                                          : CMatrix(prefix_sum);
    double bound = suffix[static_cast<size_t>(k)];
    if (prefix_weight > 0.0)
      bound += prefix_weight * (-std::log2(prefix_weight) + d * kLog2PiE +
                                log2_det_hermitian(rec.sigma_tilde));
    res.stage_bounds.push_back(bound);
    if (bound < res.tight_bound) {
      res.tight_bound = bound;
      res.best_prefix = k;
    }
    res.schedule.push_back(std::move(rec));
  }
  return res;
}

}  // namespace pmm
