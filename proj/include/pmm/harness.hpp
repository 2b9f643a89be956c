#pragma once
// Monte Carlo sweep orchestration: symbol-error-rate runs, rate-curve
// ensembles, and the power-optimization study. Every (SNR point, trial) cell
// draws from its own derived substream, so reruns of the same SweepSpec are
// bit-identical and comparison runs that share a master seed see common
// random numbers (the detectors and power presets consume no randomness).
// Channels are drawn fresh per transmission (fast fading).

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "channel.hpp"
#include "codec.hpp"
#include "core.hpp"
#include "detect.hpp"
#include "gmm.hpp"
#include "optpower.hpp"
#include "rate.hpp"
#include "rng.hpp"

namespace pmm {

enum class Scheme { pmm, sm, gsm, vblast_capacity };
enum class Detector { ml, zf };
enum class PowerPreset { table2, pa2, custom, optimized };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::pmm: return "pmm";
    case Scheme::sm: return "sm";
    case Scheme::gsm: return "gsm";
    case Scheme::vblast_capacity: return "vblast-capacity";
  }
  return "?";
}
inline const char* to_string(Detector d) { return d == Detector::ml ? "ml" : "zf"; }
inline const char* to_string(PowerPreset p) {
  switch (p) {
    case PowerPreset::table2: return "table2";
    case PowerPreset::pa2: return "pa2";
    case PowerPreset::custom: return "custom";
    case PowerPreset::optimized: return "optimized";
  }
  return "?";
}

struct SnrGrid {
  double start_db = 0.0;
  double stop_db = 20.0;
  double step_db = 2.0;

  std::vector<double> points() const {
    if (step_db <= 0.0 && stop_db != start_db)
      throw std::invalid_argument("SnrGrid: step must be positive");
    std::vector<double> p;
    if (stop_db == start_db) {
      p.push_back(start_db);
      return p;
    }
    for (double v = start_db; v <= stop_db + 1e-9; v += step_db) p.push_back(v);
    if (p.empty()) throw std::invalid_argument("SnrGrid: empty grid");
    return p;
  }
};

struct SweepSpec {
  Scheme scheme = Scheme::pmm;
  int n = 4;
  int m = 4;
  int q = 4;
  Detector detector = Detector::ml;
  PowerPreset power = PowerPreset::table2;
  std::vector<double> custom_power_fractions;  // fractions of rho, preset == custom
  int n_act = 2;                               // gsm only
  SnrGrid snr;
  std::int64_t bits_per_point = 100000;  // SER runs
  int channels_per_point = 500;          // rate/optimize ensembles
  std::uint64_t master_seed = 1;
};

struct SerPoint {
  double snr_db = 0.0;
  std::int64_t tuple_errors = 0;   // uses with any mismatch in (P, s_1..s_N)
  std::int64_t tuples_sent = 0;
  std::int64_t symbol_errors = 0;  // mismatched constellation positions
  std::int64_t symbols_sent = 0;
  double ser = 0.0;         // tuple error rate (the headline metric)
  double ser_symbol = 0.0;  // per-constellation-symbol rate
  double wilson_lo = 0.0;   // 95% interval on the tuple rate
  double wilson_hi = 0.0;
};

struct RatePoint {
  double snr_db = 0.0;
  double mean_bits = 0.0;
  double std_error = 0.0;
  int channels = 0;
};

struct OptimizePoint {
  double snr_db = 0.0;
  double generic_mean = 0.0;    // R_tight at the generic allocation
  double optimized_mean = 0.0;  // R_tight at the optimized allocation
  double improvement = 0.0;
  double max_kkt = 0.0;
  double min_per_channel_gain = 0.0;  // worst optimized-minus-generic over channels
  int channels = 0;
};

inline std::pair<double, double> wilson_interval(std::int64_t errors, std::int64_t trials) {
  if (trials <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;  // 97.5% normal quantile
  const double p = static_cast<double>(errors) / static_cast<double>(trials);
  const double n = static_cast<double>(trials);
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  // Degenerate counts pin the corresponding endpoint so the interval always
  // contains the point estimate.
  const double lo = errors == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = errors == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

inline PowerAllocation power_for(const SweepSpec& spec, double rho) {
  switch (spec.power) {
    case PowerPreset::table2: return default_power_allocation(spec.n, rho);
    case PowerPreset::pa2:
      if (spec.n != 4) throw std::invalid_argument("pa2 preset is defined for N = 4");
      return pa2_power_allocation(rho);
    case PowerPreset::custom: {
      std::vector<double> g(spec.custom_power_fractions);
      if (static_cast<int>(g.size()) != spec.n)
        throw std::invalid_argument("custom power file does not match N");
      for (double& v : g) v *= rho;
      return PowerAllocation(std::move(g), rho);
    }
    case PowerPreset::optimized:
      throw std::invalid_argument("optimized preset is resolved per channel, not here");
  }
  throw std::invalid_argument("unknown power preset");
}

inline void validate_ser_spec(const SweepSpec& spec) {
  if (spec.n < 2 || spec.m < 1) throw std::invalid_argument("run_ser: need N >= 2, M >= 1");
  if (spec.detector == Detector::zf && spec.n > spec.m)
    throw std::invalid_argument("run_ser: zero-forcing requires N <= M");
  if (spec.bits_per_point < 10000)
    throw std::invalid_argument("run_ser: SER runs need at least 10^4 bits per point");
}

// Monte Carlo symbol error rate. One "tuple" is a channel use; it counts as
// errored when any part of the recovered (permutation, symbol vector)
// differs from what was sent.
inline std::vector<SerPoint> run_ser(const SweepSpec& spec) {
  validate_ser_spec(spec);
  const BitBlockSplit split = split_bits(spec.n, spec.q);
  const Constellation constellation = Constellation::psk(spec.q);
  const auto set_p = usable_permutations(spec.n);
  const auto grid = spec.snr.points();
  const std::int64_t uses =
      (spec.bits_per_point + split.total_bits() - 1) / split.total_bits();

  std::vector<SerPoint> out;
  out.reserve(grid.size());
  for (size_t pi = 0; pi < grid.size(); ++pi) {
    const double rho = std::pow(10.0, grid[pi] / 10.0);
    const PowerAllocation pa = power_for(spec, rho);
    SerPoint pt;
    pt.snr_db = grid[pi];
    for (std::int64_t t = 0; t < uses; ++t) {
      RandomStream rng = derive_stream(spec.master_seed, pi, static_cast<std::uint64_t>(t));
      const std::uint64_t word = rng.bits(split.total_bits());
      const ChannelRealization ch = draw_channel(spec.m, spec.n, rng);
      const EncodedUse tx = encode_word(word, split, constellation, pa);
      const CVector y = transmit(ch, tx.x, rng);
      const DetectionResult rx = spec.detector == Detector::ml
                                     ? detect_ml(y, ch, set_p, pa, constellation)
                                     : detect_zf(y, ch, set_p, pa, constellation);
      pt.tuples_sent += 1;
      pt.symbols_sent += spec.n;
      if (rx.bits != word) pt.tuple_errors += 1;
      for (int k = 0; k < spec.n; ++k)
        if (rx.symbols[k] != tx.symbols[k]) pt.symbol_errors += 1;
    }
    pt.ser = static_cast<double>(pt.tuple_errors) / static_cast<double>(pt.tuples_sent);
    pt.ser_symbol = static_cast<double>(pt.symbol_errors) / static_cast<double>(pt.symbols_sent);
    const auto [lo, hi] = wilson_interval(pt.tuple_errors, pt.tuples_sent);
    pt.wilson_lo = lo;
    pt.wilson_hi = hi;
    out.push_back(pt);
  }
  return out;
}

// Ensemble-averaged scheme rate per SNR point, with standard errors.
inline std::vector<RatePoint> run_rate(const SweepSpec& spec) {
  if (spec.channels_per_point < 1) throw std::invalid_argument("run_rate: need channels >= 1");
  const auto grid = spec.snr.points();
  std::vector<Permutation> set_p;
  if (spec.scheme == Scheme::pmm) set_p = usable_permutations(spec.n);

  std::vector<RatePoint> out;
  out.reserve(grid.size());
  for (size_t pi = 0; pi < grid.size(); ++pi) {
    const double rho = std::pow(10.0, grid[pi] / 10.0);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int c = 0; c < spec.channels_per_point; ++c) {
      RandomStream rng = derive_stream(spec.master_seed, pi, static_cast<std::uint64_t>(c));
      ChannelRealization ch = draw_channel(spec.m, spec.n, rng);
      double rate = 0.0;
      switch (spec.scheme) {
        case Scheme::pmm: {
          if (spec.power == PowerPreset::optimized) {
            ch.compute_svd();
            const PowerAllocation generic = default_power_allocation(spec.n, rho);
            const int u = refine_merge_prefix_csit(ch, set_p, generic);
            const auto opt =
                optimize_power(ch, set_p, u, rho, OptimizerConfig{}, &generic.gamma());
            rate = opt.achieved_rate;
          } else {
            rate = pmm_rate(ch, set_p, power_for(spec, rho));
          }
          break;
        }
        case Scheme::sm: rate = sm_rate(ch, rho); break;
        case Scheme::gsm: rate = gsm_rate(ch, rho, spec.n_act); break;
        case Scheme::vblast_capacity: rate = vblast_capacity(ch, rho); break;
      }
      sum += rate;
      sum_sq += rate * rate;
    }
    RatePoint pt;
    pt.snr_db = grid[pi];
    pt.channels = spec.channels_per_point;
    pt.mean_bits = sum / spec.channels_per_point;
    if (spec.channels_per_point > 1) {
      const double var =
          std::max(0.0, (sum_sq - sum * sum / spec.channels_per_point) /
                            (spec.channels_per_point - 1));
      pt.std_error = std::sqrt(var / spec.channels_per_point);
    }
    out.push_back(pt);
  }
  return out;
}

// Per-SNR ensemble of generic-vs-optimized R_tight on the CSIT path. The
// merge prefix is fixed from the generic allocation's refinement and the
// solver is warm-started at the generic point, so optimized >= generic holds
// per channel by construction.
inline std::vector<OptimizePoint> run_optimize(const SweepSpec& spec,
                                               const OptimizerConfig& cfg = {}) {
  if (spec.n != spec.m)
    throw std::invalid_argument("run_optimize: the CSIT path needs N = M");
  const auto grid = spec.snr.points();
  const auto set_p = usable_permutations(spec.n);

  std::vector<OptimizePoint> out;
  out.reserve(grid.size());
  for (size_t pi = 0; pi < grid.size(); ++pi) {
    const double rho = std::pow(10.0, grid[pi] / 10.0);
    const PowerAllocation generic = default_power_allocation(spec.n, rho);
    OptimizePoint pt;
    pt.snr_db = grid[pi];
    pt.channels = spec.channels_per_point;
    pt.min_per_channel_gain = std::numeric_limits<double>::infinity();
    for (int c = 0; c < spec.channels_per_point; ++c) {
      RandomStream rng = derive_stream(spec.master_seed, pi, static_cast<std::uint64_t>(c));
      ChannelRealization ch = draw_channel(spec.m, spec.n, rng);
      ch.compute_svd();
      const int u = refine_merge_prefix_csit(ch, set_p, generic);
      const double generic_rate = r_tight_csit(ch, set_p, generic, u);
      const auto opt = optimize_power(ch, set_p, u, rho, cfg, &generic.gamma());
      pt.generic_mean += generic_rate;
      pt.optimized_mean += opt.achieved_rate;
      pt.max_kkt = std::max(pt.max_kkt, opt.kkt_residual);
      pt.min_per_channel_gain =
          std::min(pt.min_per_channel_gain, opt.achieved_rate - generic_rate);
    }
    pt.generic_mean /= spec.channels_per_point;
    pt.optimized_mean /= spec.channels_per_point;
    pt.improvement = pt.optimized_mean - pt.generic_mean;
    out.push_back(pt);
  }
  return out;
}

}  // namespace pmm
