#pragma once
// Receivers and their cost model. ML scans all r*Q^N (permutation, symbol)
// hypotheses for the smallest residual; ZF projects with the channel
// pseudoinverse, picks the permutation by the power-weighted correlation,
// restores symbol positions and slices per antenna. Flop counts use
// standard per-operation accounting with no simplification.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "codec.hpp"
#include "core.hpp"

namespace pmm {

struct DetectionResult {
  Permutation perm;
  std::vector<int> symbol_indices;  // constellation point index per antenna
  CVector symbols;                  // the points themselves
  std::uint64_t bits;               // recovered (a+b)-bit word
};

class SearchSpaceError : public std::runtime_error {
 public:
  explicit SearchSpaceError(const std::string& what) : std::runtime_error(what) {}
};

class SingularChannelError : public std::runtime_error {
 public:
  SingularChannelError() : std::runtime_error("detect_zf: H^H H is rank deficient") {}
};

namespace detail {

inline DetectionResult make_result(Permutation p, std::vector<int> sym_idx,
                                   const Constellation& c, const BitBlockSplit& split) {
  CVector symbols(static_cast<int>(sym_idx.size()));
  for (int k = 0; k < symbols.size(); ++k) symbols[k] = c.point(sym_idx[static_cast<size_t>(k)]);
  const std::uint64_t sym_word = pack_symbol_word(sym_idx, c);
  const std::uint64_t word = pack_word(sym_word, permutation_to_bits(p), split);
  return {std::move(p), std::move(sym_idx), std::move(symbols), word};
}

}  // namespace detail

// Joint exhaustive search over r*Q^N hypotheses minimizing ||y - H P Gamma s||^2.
// Ties break to the first hypothesis in (permutation rank, symbol index)
// lexicographic order. Refuses search spaces above `search_cap`.
inline DetectionResult detect_ml(const CVector& y, const ChannelRealization& ch,
                                 const std::vector<Permutation>& set_p,
                                 const PowerAllocation& pa, const Constellation& c,
                                 std::uint64_t search_cap = 1ull << 24) {
  const int n = ch.tx();
  const int m = ch.rx();
  if (y.size() != m || pa.size() != n)
    throw std::invalid_argument("detect_ml: dimension mismatch");
  const int q = c.order();
  double qn = 1.0;
  for (int k = 0; k < n; ++k) qn *= q;
  const double w = static_cast<double>(set_p.size()) * qn;
  if (w > static_cast<double>(search_cap))
    throw SearchSpaceError("detect_ml: search space of " + std::to_string(w) +
                           " hypotheses exceeds the cap of " + std::to_string(search_cap));
  const BitBlockSplit split = split_bits(n, q);

  double best_cost = std::numeric_limits<double>::infinity();
  int best_perm = -1;
  std::vector<int> best_sym;

  const CMatrix& h = ch.matrix();
  const auto amp = pa.amplitudes();
  CMatrix b(m, n);  // column k: sqrt(gamma_k) * h_{p^{-1}(k)}
  std::vector<int> sym(static_cast<size_t>(n), 0);
  for (size_t rank = 0; rank < set_p.size(); ++rank) {
    const Permutation inv = set_p[rank].inverse();
    for (int k = 0; k < n; ++k) b.col(k) = amp[static_cast<size_t>(k)] * h.col(inv[k]);

    // Lexicographic odometer over symbol indices, antenna N-1 fastest;
    // each digit change updates the hypothesis vector incrementally.
    std::fill(sym.begin(), sym.end(), 0);
    CVector hyp = CVector::Zero(m);
    for (int k = 0; k < n; ++k) hyp += b.col(k) * c.point(0);
    for (;;) {
      const double cost = (y - hyp).squaredNorm();
      if (cost < best_cost) {
        best_cost = cost;
        best_perm = static_cast<int>(rank);
        best_sym = sym;
      }
      int digit = n - 1;
      while (digit >= 0) {
        const int old = sym[static_cast<size_t>(digit)];
        const int next = (old + 1) % q;
        sym[static_cast<size_t>(digit)] = next;
        hyp += b.col(digit) * (c.point(next) - c.point(old));
        if (next != 0) break;
        --digit;
      }
      if (digit < 0) break;  // odometer wrapped: this permutation is done
    }
  }
  return detail::make_result(set_p[static_cast<size_t>(best_perm)], std::move(best_sym), c, split);
}

// Zero-forcing: (1) pseudoinverse via Cholesky solve of (H^H H) X = H^H,
// (2) y~ = H_zf y, (3) permutation by argmax ||Gamma P^H y~||^2, (4) restore
// symbol positions, (5) per-antenna nearest constellation point. Requires
// N <= M and a unit-modulus constellation (PSK by construction).
inline DetectionResult detect_zf(const CVector& y, const ChannelRealization& ch,
                                 const std::vector<Permutation>& set_p,
                                 const PowerAllocation& pa, const Constellation& c) {
  const int n = ch.tx();
  const int m = ch.rx();
  if (n > m) throw std::invalid_argument("detect_zf: requires N <= M");
  if (y.size() != m || pa.size() != n)
    throw std::invalid_argument("detect_zf: dimension mismatch");
  const BitBlockSplit split = split_bits(n, c.order());

  const CMatrix& h = ch.matrix();
  const CMatrix gram = h.adjoint() * h;
  Eigen::LLT<CMatrix> llt(gram);
  if (llt.info() != Eigen::Success) throw SingularChannelError();
  // LLT accepts semidefinite inputs with zero pivots; inspect them.
  const double pivot_floor = std::sqrt(std::real(gram.trace()) / n) * 1e-7;
  for (int i = 0; i < n; ++i)
    if (!(std::real(llt.matrixLLT()(i, i)) > pivot_floor)) throw SingularChannelError();
  const CVector y_eq = llt.solve(h.adjoint() * y);  // = H_zf y

  // argmax over the usable set of sum_j gamma[p(j)] |y~_j|^2
  // (the power-weighted correlation; ties go to the lowest rank).
  int best_rank = 0;
  double best_score = -1.0;
  for (size_t rank = 0; rank < set_p.size(); ++rank) {
    const Permutation& p = set_p[rank];
    double score = 0.0;
    for (int j = 0; j < n; ++j) score += pa[p[j]] * std::norm(y_eq[j]);
    if (score > best_score) {
      best_score = score;
      best_rank = static_cast<int>(rank);
    }
  }
  const Permutation& p = set_p[static_cast<size_t>(best_rank)];

  // y~_P = P^H y~ puts each symbol back at its antenna slot; slice per slot.
  const Permutation inv = p.inverse();
  std::vector<int> sym(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) sym[static_cast<size_t>(k)] = c.nearest_index(y_eq[inv[k]]);
  return detail::make_result(p, std::move(sym), c, split);
}

namespace detail {

inline unsigned long long checked_mul(unsigned long long a, unsigned long long b) {
  unsigned long long out = 0;
  if (__builtin_mul_overflow(a, b, &out))
    throw std::overflow_error("flop count overflows 64 bits");
  return out;
}

inline unsigned long long checked_add(unsigned long long a, unsigned long long b) {
  unsigned long long out = 0;
  if (__builtin_add_overflow(a, b, &out))
    throw std::overflow_error("flop count overflows 64 bits");
  return out;
}

inline unsigned long long checked_pow(unsigned long long base, int exp) {
  unsigned long long out = 1;
  for (int i = 0; i < exp; ++i) out = checked_mul(out, base);
  return out;
}

}  // namespace detail

// r Q^N (N^2 + N + (2N-1)M + 3M - 1) flops: joint search cost.
inline unsigned long long ml_flops(int n, int m, int q, std::uint64_t r) {
  if (n < 1 || m < 1 || q < 1 || r < 1) throw std::invalid_argument("ml_flops: positive args");
  const auto un = static_cast<unsigned long long>(n);
  const auto um = static_cast<unsigned long long>(m);
  const unsigned long long per =
      un * un + un + (2 * un - 1) * um + 3 * um - 1;
  return detail::checked_mul(detail::checked_mul(r, detail::checked_pow(q, n)), per);
}

// 4M^3 + 2(N^2 M + (M-1)N) + r(4M-1) + 2NQ flops: pseudoinverse creation,
// permutation scan, symbol slicing. Evaluated for any (N, M) so the cost
// curves extend past the detector's own N <= M domain.
inline unsigned long long zf_flops(int n, int m, int q, std::uint64_t r) {
  if (n < 1 || m < 1 || q < 1 || r < 1) throw std::invalid_argument("zf_flops: positive args");
  const auto un = static_cast<unsigned long long>(n);
  const auto um = static_cast<unsigned long long>(m);
  unsigned long long acc = detail::checked_mul(4, detail::checked_pow(um, 3));
  acc = detail::checked_add(acc, 2 * (un * un * um + (um - 1) * un));
  acc = detail::checked_add(acc, detail::checked_mul(r, 4 * um - 1));
  acc = detail::checked_add(acc, 2 * un * static_cast<unsigned long long>(q));
  return acc;
}

// Square-channel variant: H_zf = H^{-1} directly, 4M^3 for the inversion.
inline unsigned long long zf_flops_square(int m, int q, std::uint64_t r) {
  if (m < 1 || q < 1 || r < 1) throw std::invalid_argument("zf_flops_square: positive args");
  const auto um = static_cast<unsigned long long>(m);
  unsigned long long acc = detail::checked_mul(4, detail::checked_pow(um, 3));
  acc = detail::checked_add(acc, detail::checked_mul(r, 4 * um - 1));
  acc = detail::checked_add(acc, 2 * um * static_cast<unsigned long long>(q));
  return acc;
}

}  // namespace pmm
