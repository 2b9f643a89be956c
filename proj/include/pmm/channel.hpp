#pragma once
// Rayleigh channel and unit-variance complex noise generation, the forward
// model y = Hx + n, and the CSIT parallel-channel post-processing. Noise
// covariance is always the identity; SNR sweeps scale the transmit power rho,
// never the noise, so SNR(dB) = 10*log10(rho).

#include <stdexcept>

#include "core.hpp"
#include "rng.hpp"

namespace pmm {

// Entries i.i.d. circularly-symmetric complex Gaussian, zero mean, unit
// variance (real and imaginary parts each carry variance 1/2).
inline ChannelRealization draw_channel(int rx, int tx, RandomStream& rng) {
  if (rx < 1 || tx < 1) throw std::invalid_argument("draw_channel: M, N must be >= 1");
  CMatrix h(rx, tx);
  for (int j = 0; j < rx; ++j)
    for (int k = 0; k < tx; ++k) h(j, k) = rng.complex_gaussian();
  return ChannelRealization(std::move(h));
}

inline CVector draw_noise(int m, RandomStream& rng) {
  CVector n(m);
  for (int j = 0; j < m; ++j) n[j] = rng.complex_gaussian();
  return n;
}

// Noise-free forward model.
inline CVector apply_channel(const ChannelRealization& ch, const CVector& x) {
  if (x.size() != ch.tx()) throw std::invalid_argument("apply_channel: dimension mismatch");
  return ch.matrix() * x;
}

// y = Hx + n with fresh unit-variance noise.
inline CVector transmit(const ChannelRealization& ch, const CVector& x, RandomStream& rng) {
  return apply_channel(ch, x) + draw_noise(ch.rx(), rng);
}

// y_tilde = U^H y; turns the CSIT-precoded link into parallel subchannels
// (Lambda P Gamma s + rotated noise). Unitary U preserves the noise law.
inline CVector csit_postprocess(const ChannelRealization& ch, const CVector& y) {
  if (y.size() != ch.rx()) throw std::invalid_argument("csit_postprocess: dimension mismatch");
  const auto& svd = ch.svd();  // throws MissingSvdError if absent
  return svd.u.adjoint() * y;
}

}  // namespace pmm
