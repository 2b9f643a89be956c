#pragma once
// Bitstream <-> transmit-vector mapping. Each channel use consumes a+b bits:
// the first block of a = N*log2(Q) bits picks the constellation symbols
// (antenna-major, antenna 0 in the most significant log2(Q)-bit group), the
// second block of b = floor(log2(N!)) bits picks the permutation matrix by
// lexicographic rank. In the packed (a+b)-bit word the symbol block occupies
// the high a bits and the permutation block the low b bits.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "core.hpp"

namespace pmm {

struct BitBlockSplit {
  int symbol_bits;                   // a
  int index_bits;                    // b
  std::uint64_t usable_permutations; // r = 2^b
  int total_bits() const { return symbol_bits + index_bits; }
};

inline std::uint64_t factorial_u64(int n) {
  if (n < 0 || n > 20) throw std::invalid_argument("factorial_u64: need 0 <= n <= 20");
  std::uint64_t f = 1;
  for (int k = 2; k <= n; ++k) f *= static_cast<std::uint64_t>(k);
  return f;
}

inline BitBlockSplit split_bits(int n, int q) {
  if (n < 1) throw std::invalid_argument("split_bits: N must be >= 1");
  if (q < 2 || (q & (q - 1)) != 0)
    throw std::invalid_argument("split_bits: Q must be a power of two >= 2");
  int bq = 0;
  while ((1 << bq) < q) ++bq;
  const std::uint64_t fact = factorial_u64(n);
  int b = 0;
  while ((1ull << (b + 1)) <= fact) ++b;
  BitBlockSplit s{n * bq, b, 1ull << b};
  if (s.total_bits() > 64)
    throw std::invalid_argument("split_bits: a+b exceeds the 64-bit word size");
  return s;
}

// Lexicographic unranking over permutations of (0..n-1) via the factorial
// number system, so the N=3 mapping table falls out of the rank order.
inline Permutation bits_to_permutation(std::uint64_t word, int n) {
  const BitBlockSplit s = split_bits(n, 2);
  if (word >= s.usable_permutations)
    throw std::out_of_range("bits_to_permutation: word outside the usable set");
  std::vector<int> avail(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) avail[static_cast<size_t>(i)] = i;
  std::vector<int> pi(static_cast<size_t>(n));
  std::uint64_t rem = word;
  for (int k = 0; k < n; ++k) {
    const std::uint64_t f = factorial_u64(n - 1 - k);
    const auto idx = static_cast<size_t>(rem / f);
    rem %= f;
    pi[static_cast<size_t>(k)] = avail[idx];
    avail.erase(avail.begin() + static_cast<std::ptrdiff_t>(idx));
  }
  return Permutation(std::move(pi));
}

inline std::uint64_t permutation_rank(const Permutation& p) {
  const int n = p.size();
  std::vector<int> avail(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) avail[static_cast<size_t>(i)] = i;
  std::uint64_t rank = 0;
  for (int k = 0; k < n; ++k) {
    const auto it = std::find(avail.begin(), avail.end(), p[k]);
    rank += static_cast<std::uint64_t>(it - avail.begin()) * factorial_u64(n - 1 - k);
    avail.erase(it);
  }
  return rank;
}

// Inverse of bits_to_permutation; rejects permutations outside the usable
// set (ranks r..N!-1 are never emitted by the encoder).
inline std::uint64_t permutation_to_bits(const Permutation& p) {
  const BitBlockSplit s = split_bits(p.size(), 2);
  const std::uint64_t rank = permutation_rank(p);
  if (rank >= s.usable_permutations)
    throw std::out_of_range("permutation_to_bits: permutation outside the usable set");
  return rank;
}

// The first r lexicographic permutations: the usable set.
inline std::vector<Permutation> usable_permutations(int n) {
  const BitBlockSplit s = split_bits(n, 2);
  std::vector<Permutation> set;
  set.reserve(static_cast<size_t>(s.usable_permutations));
  for (std::uint64_t w = 0; w < s.usable_permutations; ++w)
    set.push_back(bits_to_permutation(w, n));
  return set;
}

inline CVector modulate_symbols(std::uint64_t word, const Constellation& c, int n) {
  const int bq = c.bits_per_symbol();
  if (n * bq > 64) throw std::invalid_argument("modulate_symbols: block exceeds 64 bits");
  if (n * bq < 64 && (word >> (n * bq)) != 0)
    throw std::invalid_argument("modulate_symbols: word longer than N*log2(Q) bits");
  CVector s(n);
  for (int k = 0; k < n; ++k) {
    const auto label =
        static_cast<unsigned>((word >> ((n - 1 - k) * bq)) & ((1ull << bq) - 1ull));
    s[k] = c.modulate(label);
  }
  return s;
}

inline std::uint64_t pack_symbol_word(const std::vector<int>& point_indices,
                                      const Constellation& c) {
  const int bq = c.bits_per_symbol();
  const int n = static_cast<int>(point_indices.size());
  std::uint64_t word = 0;
  for (int k = 0; k < n; ++k)
    word |= static_cast<std::uint64_t>(c.label_of_index(point_indices[static_cast<size_t>(k)]))
            << ((n - 1 - k) * bq);
  return word;
}

// x = P * Gamma * s, computed as the gather x[i] = sqrt(gamma[p[i]]) * s[p[i]].
inline CVector precode(const Permutation& p, const PowerAllocation& pa, const CVector& s) {
  const int n = p.size();
  if (pa.size() != n || s.size() != n) throw std::invalid_argument("precode: dimension mismatch");
  CVector x(n);
  for (int i = 0; i < n; ++i) {
    const int j = p[i];
    x[i] = std::sqrt(pa[j]) * s[j];
  }
  return x;
}

// CSIT variant x = V * P * Gamma * s; requires the channel SVD and N = M.
inline CVector precode_csit(const Permutation& p, const PowerAllocation& pa, const CVector& s,
                            const ChannelRealization& ch) {
  if (ch.tx() != ch.rx())
    throw std::invalid_argument("precode_csit: restricted to square channels (N = M)");
  const auto& svd = ch.svd();  // throws MissingSvdError if absent
  return svd.v * precode(p, pa, s);
}

// Packs (symbol block, permutation block) into one (a+b)-bit word.
inline std::uint64_t pack_word(std::uint64_t symbol_word, std::uint64_t perm_word,
                               const BitBlockSplit& s) {
  return (symbol_word << s.index_bits) | perm_word;
}

inline std::uint64_t symbol_word_of(std::uint64_t word, const BitBlockSplit& s) {
  return word >> s.index_bits;
}

inline std::uint64_t perm_word_of(std::uint64_t word, const BitBlockSplit& s) {
  return word & (s.usable_permutations - 1ull);
}

struct EncodedUse {
  Permutation perm;
  CVector symbols;  // s
  CVector x;        // P Gamma s
};

inline EncodedUse encode_word(std::uint64_t word, const BitBlockSplit& split,
                              const Constellation& c, const PowerAllocation& pa) {
  Permutation p = bits_to_permutation(perm_word_of(word, split), pa.size());
  CVector s = modulate_symbols(symbol_word_of(word, split), c, pa.size());
  CVector x = precode(p, pa, s);
  return {std::move(p), std::move(s), std::move(x)};
}

}  // namespace pmm
