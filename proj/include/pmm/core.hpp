#pragma once
// Domain types shared across the lab: permutations (the modulated precoder
// index), per-antenna power allocations, Gray-labelled PSK constellations,
// channel realizations with cached SVD, and zero-mean complex Gaussian
// mixtures. All types are immutable values after construction.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmm {

using cxd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// A permutation of {0..n-1}; stands for the n x n permutation matrix P with
// row i carrying its single 1 in column pi[i]. Stored as an index vector so
// applying P is an O(n) gather; the dense form exists for display and tests.
class Permutation {
 public:
  explicit Permutation(std::vector<int> pi) : pi_(std::move(pi)) {
    const int n = static_cast<int>(pi_.size());
    if (n == 0) throw std::invalid_argument("Permutation: empty index vector");
    std::vector<char> seen(static_cast<size_t>(n), 0);
    for (int v : pi_) {
      if (v < 0 || v >= n) throw std::invalid_argument("Permutation: index out of range");
      if (seen[static_cast<size_t>(v)]) throw std::invalid_argument("Permutation: repeated index");
      seen[static_cast<size_t>(v)] = 1;
    }
  }

  static Permutation identity(int n) {
    std::vector<int> pi(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pi[static_cast<size_t>(i)] = i;
    return Permutation(std::move(pi));
  }

  int size() const { return static_cast<int>(pi_.size()); }
  int operator[](int i) const { return pi_[static_cast<size_t>(i)]; }
  const std::vector<int>& indices() const { return pi_; }

  Permutation inverse() const {
    std::vector<int> q(pi_.size());
    for (int i = 0; i < size(); ++i) q[static_cast<size_t>(pi_[static_cast<size_t>(i)])] = i;
    return Permutation(std::move(q));
  }

  // y = P v, i.e. y[i] = v[pi[i]].
  template <class Vec>
  Vec apply(const Vec& v) const {
    Vec out(v.size());
    for (int i = 0; i < size(); ++i) out[i] = v[pi_[static_cast<size_t>(i)]];
    return out;
  }

  Eigen::MatrixXd to_matrix() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
    for (int i = 0; i < size(); ++i) m(i, pi_[static_cast<size_t>(i)]) = 1.0;
    return m;
  }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.pi_ == b.pi_; }
  friend bool operator!=(const Permutation& a, const Permutation& b) { return !(a == b); }

 private:
  std::vector<int> pi_;
};

// Per-antenna transmit powers gamma_i (the squared diagonal of the amplitude
// matrix), positive, pairwise distinct and summing to the total power rho.
// Distinctness is what makes the permutation detectable at the receiver.
class PowerAllocation {
 public:
  // Relative (to rho) tolerance below which two powers count as equal.
  static constexpr double kDistinctnessTol = 1e-6;

  PowerAllocation(std::vector<double> gamma, double rho,
                  double distinctness_tol = kDistinctnessTol)
      : gamma_(std::move(gamma)), rho_(rho) {
    if (gamma_.empty()) throw std::invalid_argument("PowerAllocation: empty");
    if (!(rho_ > 0.0)) throw std::invalid_argument("PowerAllocation: rho must be positive");
    double sum = 0.0;
    for (double g : gamma_) {
      if (!(g > 0.0) || g > rho_ * (1.0 + 1e-12))
        throw std::invalid_argument("PowerAllocation: powers must satisfy 0 < gamma_i <= rho");
      sum += g;
    }
    if (std::abs(sum - rho_) > 1e-9 * rho_)
      throw std::invalid_argument("PowerAllocation: powers must sum to rho");
    for (size_t i = 0; i < gamma_.size(); ++i)
      for (size_t j = i + 1; j < gamma_.size(); ++j)
        if (std::abs(gamma_[i] - gamma_[j]) <= distinctness_tol * rho_)
          throw std::invalid_argument("PowerAllocation: powers must be pairwise distinct");
  }

  int size() const { return static_cast<int>(gamma_.size()); }
  double operator[](int i) const { return gamma_[static_cast<size_t>(i)]; }
  const std::vector<double>& gamma() const { return gamma_; }
  double rho() const { return rho_; }

  std::vector<double> amplitudes() const {  // sqrt(gamma_i), the Gamma diagonal
    std::vector<double> a(gamma_.size());
    for (size_t i = 0; i < gamma_.size(); ++i) a[i] = std::sqrt(gamma_[i]);
    return a;
  }

 private:
  std::vector<double> gamma_;
  double rho_;
};

// Generic power allocation table (fractions of rho) plus the sparser PA-2
// preset used in the SER study.
inline const std::vector<double>& power_table_fractions(int n) {
  static const std::vector<double> t3 = {0.39, 0.33, 0.28};
  static const std::vector<double> t4 = {0.34, 0.28, 0.22, 0.16};
  static const std::vector<double> t6 = {0.27, 0.23, 0.19, 0.14, 0.10, 0.07};
  switch (n) {
    case 3: return t3;
    case 4: return t4;
    case 6: return t6;
    default: throw std::invalid_argument("power_table_fractions: only N in {3,4,6}");
  }
}

inline const std::vector<double>& pa2_fractions() {
  static const std::vector<double> p = {0.45, 0.30, 0.15, 0.10};
  return p;
}

// Table presets for N in {3,4,6}; otherwise a deterministic arithmetic
// progression gamma_i proportional to (N+1-i), normalized to rho.
inline PowerAllocation default_power_allocation(int n, double rho) {
  if (n < 2) throw std::invalid_argument("default_power_allocation: N must be >= 2");
  std::vector<double> g(static_cast<size_t>(n));
  if (n == 3 || n == 4 || n == 6) {
    const auto& f = power_table_fractions(n);
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = f[static_cast<size_t>(i)] * rho;
  } else {
    const double norm = 0.5 * n * (n + 1);
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = rho * (n - i) / norm;
  }
  // Nudge the sum exactly onto rho (table rows already sum to 1).
  double sum = 0.0;
  for (double v : g) sum += v;
  for (double& v : g) v *= rho / sum;
  return PowerAllocation(std::move(g), rho);
}

inline PowerAllocation pa2_power_allocation(double rho) {
  std::vector<double> g(4);
  for (int i = 0; i < 4; ++i) g[static_cast<size_t>(i)] = pa2_fractions()[static_cast<size_t>(i)] * rho;
  return PowerAllocation(std::move(g), rho);
}

// Gray-labelled Q-ary PSK, points exp(j*2*pi*k/Q). Unit modulus is required
// by the zero-forcing permutation detector, so PSK is the only family here.
class Constellation {
 public:
  static Constellation psk(int order) { return Constellation(order); }

  int order() const { return order_; }
  int bits_per_symbol() const { return bits_; }
  const std::vector<cxd>& points() const { return points_; }
  cxd point(int index) const { return points_[static_cast<size_t>(index)]; }

  unsigned label_of_index(int index) const {
    return static_cast<unsigned>(index) ^ (static_cast<unsigned>(index) >> 1);
  }
  int index_of_label(unsigned label) const {
    if (label >= static_cast<unsigned>(order_))
      throw std::invalid_argument("Constellation: label out of range");
    return index_of_label_[label];
  }
  cxd modulate(unsigned label) const { return points_[static_cast<size_t>(index_of_label(label))]; }

  int nearest_index(cxd z) const {
    int best = 0;
    double best_d = std::norm(z - points_[0]);
    for (int k = 1; k < order_; ++k) {
      const double d = std::norm(z - points_[static_cast<size_t>(k)]);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }
  unsigned demap(cxd z) const { return label_of_index(nearest_index(z)); }

 private:
  explicit Constellation(int order) : order_(order) {
    if (order < 2 || (order & (order - 1)) != 0)
      throw std::invalid_argument("Constellation: order must be a power of two >= 2");
    bits_ = 0;
    while ((1 << bits_) < order) ++bits_;
    points_.resize(static_cast<size_t>(order));
    index_of_label_.resize(static_cast<size_t>(order));
    for (int k = 0; k < order; ++k) {
      points_[static_cast<size_t>(k)] = std::polar(1.0, 2.0 * M_PI * k / order);
      index_of_label_[label_of_index(k)] = k;
    }
  }

  int order_;
  int bits_;
  std::vector<cxd> points_;
  std::vector<int> index_of_label_;
};

struct ChannelSvd {
  CMatrix u;                 // M x M unitary
  Eigen::VectorXd singular_values;  // descending, length min(M,N)
  CMatrix v;                 // N x N unitary
};

class MissingSvdError : public std::runtime_error {
 public:
  MissingSvdError() : std::runtime_error("ChannelRealization: SVD not computed") {}
};

// One M x N flat-fading realization. The SVD is computed on demand, cached,
// and phase-normalized (first nonzero entry of each right singular vector
// made real-positive) so repeated decompositions are bit-identical.
class ChannelRealization {
 public:
  explicit ChannelRealization(CMatrix h) : h_(std::move(h)) {
    if (h_.rows() < 1 || h_.cols() < 1)
      throw std::invalid_argument("ChannelRealization: empty matrix");
  }

  const CMatrix& matrix() const { return h_; }
  int rx() const { return static_cast<int>(h_.rows()); }
  int tx() const { return static_cast<int>(h_.cols()); }

  bool has_svd() const { return svd_.has_value(); }

  void compute_svd() {
    if (svd_) return;
    Eigen::JacobiSVD<CMatrix> dec(h_, Eigen::ComputeFullU | Eigen::ComputeFullV);
    ChannelSvd s;
    s.u = dec.matrixU();
    s.v = dec.matrixV();
    s.singular_values = dec.singularValues();
    const int p = static_cast<int>(s.singular_values.size());
    for (int k = 0; k < s.v.cols(); ++k) {
      int lead = -1;
      for (int i = 0; i < s.v.rows(); ++i) {
        if (std::abs(s.v(i, k)) > 1e-12) {
          lead = i;
          break;
        }
      }
      if (lead < 0) continue;
      const cxd phase = s.v(lead, k) / std::abs(s.v(lead, k));
      s.v.col(k) *= std::conj(phase);
      if (k < p && k < s.u.cols()) s.u.col(k) *= std::conj(phase);
    }
    // Trailing U columns (beyond the rank) get their own convention.
    for (int k = p; k < s.u.cols(); ++k) {
      int lead = -1;
      for (int i = 0; i < s.u.rows(); ++i) {
        if (std::abs(s.u(i, k)) > 1e-12) {
          lead = i;
          break;
        }
      }
      if (lead < 0) continue;
      const cxd phase = s.u(lead, k) / std::abs(s.u(lead, k));
      s.u.col(k) *= std::conj(phase);
    }
    svd_ = std::move(s);
  }

  const ChannelSvd& svd() const {
    if (!svd_) throw MissingSvdError();
    return *svd_;
  }

 private:
  CMatrix h_;
  std::optional<ChannelSvd> svd_;
};

struct MixtureComponent {
  double weight;
  CMatrix covariance;  // Hermitian positive-definite
};

// Zero-mean complex Gaussian mixture. The type has no mean field: every
// mixture in this model is zero-mean, which makes the moment-preserving
// merge a plain convex combination of covariances.
class GaussianMixture {
 public:
  GaussianMixture(int dim, std::vector<MixtureComponent> components)
      : dim_(dim), components_(std::move(components)) {
    if (dim_ < 1) throw std::invalid_argument("GaussianMixture: dimension must be >= 1");
    if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
    double sum = 0.0;
    for (auto& c : components_) {
      if (c.weight < -1e-15 || c.weight > 1.0 + 1e-12)
        throw std::invalid_argument("GaussianMixture: weight outside [0,1]");
      if (c.covariance.rows() != dim_ || c.covariance.cols() != dim_)
        throw std::invalid_argument("GaussianMixture: covariance dimension mismatch");
      const double scale = std::max(1.0, c.covariance.cwiseAbs().maxCoeff());
      if ((c.covariance - c.covariance.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("GaussianMixture: covariance not Hermitian");
      c.covariance = (0.5 * (c.covariance + c.covariance.adjoint())).eval();
      if (c.weight > 0.0) {
        Eigen::LLT<CMatrix> llt(c.covariance);
        if (llt.info() != Eigen::Success)
          throw std::invalid_argument("GaussianMixture: covariance not positive-definite");
      }
      sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12)
      throw std::invalid_argument("GaussianMixture: weights must sum to 1");
  }

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(components_.size()); }
  const MixtureComponent& component(int i) const { return components_[static_cast<size_t>(i)]; }
  const std::vector<MixtureComponent>& components() const { return components_; }

  CMatrix overall_covariance() const {
    CMatrix c = CMatrix::Zero(dim_, dim_);
    for (const auto& comp : components_) c += comp.weight * comp.covariance;
    return c;
  }

 private:
  int dim_;
  std::vector<MixtureComponent> components_;
};

inline Eigen::MatrixXd permutation_to_matrix(const Permutation& p) { return p.to_matrix(); }

}  // namespace pmm
