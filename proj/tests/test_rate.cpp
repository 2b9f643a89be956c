#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "pmm/channel.hpp"
#include "pmm/codec.hpp"
#include "pmm/rate.hpp"
#include "pmm/rng.hpp"

using namespace pmm;

TEST_CASE("capacity closed forms", "[rate]") {
  const ChannelRealization ident(CMatrix::Identity(2, 2));
  CHECK(capacity(ident, std::vector<double>{1.0, 1.0}) == Catch::Approx(2.0).epsilon(1e-12));
  const ChannelRealization zero(CMatrix::Zero(2, 2));
  CHECK(capacity(zero, std::vector<double>{0.7, 0.3}) == 0.0);
}

TEST_CASE("vblast capacity", "[rate]") {
  const ChannelRealization ident(CMatrix::Identity(2, 2));
  CHECK(vblast_capacity(ident, 2.0) == Catch::Approx(2.0).epsilon(1e-12));

  RandomStream rng = derive_stream(51, 0, 0);
  const ChannelRealization ch = draw_channel(3, 3, rng);
  CHECK(vblast_capacity(ch, 5.0) ==
        Catch::Approx(capacity(ch, std::vector<double>(3, 5.0 / 3.0))).epsilon(1e-12));

  double prev = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double c = vblast_capacity(ch, 0.1 + k * 0.8);
    CHECK(c >= prev);
    prev = c;
  }
}

TEST_CASE("single-component mixture rate equals capacity", "[rate]") {
  RandomStream rng = derive_stream(52, 0, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.bits(1));
    const ChannelRealization ch = draw_channel(n, n, rng);
    const PowerAllocation pa = default_power_allocation(n, 1.0 + 3.0 * rng.uniform());
    const double rate =
        pmm_rate(ch, {Permutation::identity(n)}, pa, std::vector<double>{1.0}, true);
    CHECK(std::abs(rate - capacity(ch, pa)) < 1e-12);
  }
}

TEST_CASE("hand-expanded two-antenna rate", "[rate]") {
  // H = I2, gamma = (0.6, 0.4) rho, both permutations, uniform weights:
  // unrefined rate = 1 + log2((1 + 0.6 rho)(1 + 0.4 rho)).
  const ChannelRealization ident(CMatrix::Identity(2, 2));
  for (double rho : {0.3, 1.0, 4.0, 50.0}) {
    const PowerAllocation pa({0.6 * rho, 0.4 * rho}, rho);
    const auto set_p = usable_permutations(2);
    REQUIRE(set_p.size() == 2);
    const double unrefined = pmm_rate(ident, set_p, pa, false);
    const double expect = 1.0 + std::log2((1.0 + 0.6 * rho) * (1.0 + 0.4 * rho));
    CHECK(unrefined == Catch::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("rate vanishes as rho -> 0 and grows with rho", "[rate]") {
  RandomStream rng = derive_stream(53, 0, 0);
  const ChannelRealization ch = draw_channel(3, 3, rng);
  const auto set_p = usable_permutations(3);

  CHECK(std::abs(pmm_rate(ch, set_p, default_power_allocation(3, 1e-9))) < 1e-6);

  double prev = -1.0;
  for (int k = 0; k < 20; ++k) {
    const double rho = std::pow(10.0, -1.0 + 0.15 * k);
    const double r = pmm_rate(ch, set_p, default_power_allocation(3, rho));
    CHECK(r >= prev - 1e-12);
    CHECK(r >= 0.0);
    prev = r;
  }
}

TEST_CASE("refinement never increases the rate", "[rate]") {
  RandomStream rng = derive_stream(54, 0, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(rng.bits(1));
    const ChannelRealization ch = draw_channel(n, n, rng);
    const PowerAllocation pa = default_power_allocation(n, std::pow(10.0, 2.0 * rng.uniform()));
    const auto set_p = usable_permutations(n);
    CHECK(pmm_rate(ch, set_p, pa, true) <= pmm_rate(ch, set_p, pa, false) + 1e-12);
  }
}

TEST_CASE("sm covariance set and miso collapse", "[rate]") {
  const auto covs = sm_covariances(4, 2.0);
  REQUIRE(covs.size() == 4);
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 4; ++k) CHECK(covs[static_cast<size_t>(i)][k] == (k == i ? 2.0 : 0.0));
  }

  // N = 1: rate is log2(1 + rho ||h||^2) for the MISO column.
  RandomStream rng = derive_stream(55, 0, 0);
  CMatrix h(3, 1);
  for (int i = 0; i < 3; ++i) h(i, 0) = rng.complex_gaussian();
  const ChannelRealization ch(h);
  const double rho = 2.5;
  CHECK(sm_rate(ch, rho) == Catch::Approx(std::log2(1.0 + rho * h.squaredNorm())).epsilon(1e-12));
}

TEST_CASE("gsm covariances and edge cases", "[rate]") {
  // N = 4, n_act = 2: C(4,2) = 6 -> v = 4 lexicographic subsets.
  const auto covs = gsm_covariances(4, 2.0, 2);
  REQUIRE(covs.size() == 4);
  const std::vector<std::vector<int>> expect = {{0, 1}, {0, 2}, {0, 3}, {1, 2}};
  for (size_t i = 0; i < covs.size(); ++i) {
    for (int k = 0; k < 4; ++k) {
      const bool active = std::find(expect[i].begin(), expect[i].end(), k) != expect[i].end();
      CHECK(covs[i][k] == (active ? 1.0 : 0.0));
    }
  }

  // n_act = N: the single combination is the equal-power covariance.
  RandomStream rng = derive_stream(56, 0, 0);
  const ChannelRealization ch = draw_channel(4, 4, rng);
  CHECK(gsm_rate(ch, 3.0, 4) == Catch::Approx(vblast_capacity(ch, 3.0)).epsilon(1e-12));

  CHECK_THROWS_AS(gsm_covariances(4, 1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(gsm_covariances(4, 1.0, 5), std::invalid_argument);
}

TEST_CASE("csit rate with flat singular values matches the diagonal-channel rate", "[rate]") {
  // H = I has Lambda = I, so the parallel-channel formula reduces to the
  // unrefined mixture rate of the diagonal channel.
  ChannelRealization ident(CMatrix::Identity(3, 3));
  ident.compute_svd();
  const PowerAllocation pa = default_power_allocation(3, 2.0);
  const auto set_p = usable_permutations(3);
  CHECK(csit_rate(ident, set_p, pa) ==
        Catch::Approx(pmm_rate(ident, set_p, pa, false)).epsilon(1e-12));
}

TEST_CASE("r_tight endpoints", "[rate]") {
  RandomStream rng = derive_stream(57, 0, 0);
  ChannelRealization ch = draw_channel(3, 3, rng);
  ch.compute_svd();
  const PowerAllocation pa = default_power_allocation(3, 1.5);
  const auto set_p = usable_permutations(3);
  const int r = static_cast<int>(set_p.size());

  // u = 1: nothing merged.
  CHECK(r_tight_csit(ch, set_p, pa, 1) == Catch::Approx(csit_rate(ch, set_p, pa)).epsilon(1e-12));

  // u = r: Y = 0 and X = log2 det(I + Lambda Cbar Lambda) with the full average.
  const auto& lambda = ch.svd().singular_values;
  RVector avg = RVector::Zero(3);
  for (const auto& p : set_p)
    for (int k = 0; k < 3; ++k) avg[k] += pa[p[k]] / r;
  double x = 0.0;
  for (int k = 0; k < 3; ++k) x += std::log2(1.0 + lambda[k] * lambda[k] * avg[k]);
  CHECK(r_tight_csit(ch, set_p, pa, r) == Catch::Approx(x).epsilon(1e-12));

  CHECK_THROWS_AS(r_tight_csit(ch, set_p, pa, 0), std::invalid_argument);
  CHECK_THROWS_AS(r_tight_csit(ch, set_p, pa, r + 1), std::invalid_argument);

  const int u = refine_merge_prefix_csit(ch, set_p, pa);
  CHECK(u >= 1);
  CHECK(u <= r);
  for (int v = 1; v <= r; ++v)
    CHECK(r_tight_csit(ch, set_p, pa, u) <= r_tight_csit(ch, set_p, pa, v) + 1e-12);
}

TEST_CASE("csit path requires a square channel with svd", "[rate]") {
  RandomStream rng = derive_stream(58, 0, 0);
  ChannelRealization rect = draw_channel(4, 2, rng);
  rect.compute_svd();
  const auto set_p = usable_permutations(2);
  const PowerAllocation pa = default_power_allocation(2, 1.0);
  CHECK_THROWS_AS(csit_rate(rect, set_p, pa), std::invalid_argument);

  ChannelRealization square = draw_channel(2, 2, rng);
  CHECK_THROWS_AS(csit_rate(square, set_p, pa), MissingSvdError);
}

TEST_CASE("scheme ordering smoke check at 4x4", "[rate]") {
  // Small-ensemble version of the headline ordering; the acceptance suite
  // runs the full 500-channel comparison.
  RandomStream rng = derive_stream(59, 0, 0);
  const auto set_p = usable_permutations(4);
  for (double snr_db : {0.0, 10.0, 20.0}) {
    const double rho = std::pow(10.0, snr_db / 10.0);
    double pmm_sum = 0.0, sm_sum = 0.0, gsm_sum = 0.0;
    const int channels = 50;
    for (int c = 0; c < channels; ++c) {
      const ChannelRealization ch = draw_channel(4, 4, rng);
      pmm_sum += pmm_rate(ch, set_p, default_power_allocation(4, rho));
      sm_sum += sm_rate(ch, rho);
      gsm_sum += gsm_rate(ch, rho, 2);
    }
    CHECK(pmm_sum / channels >= sm_sum / channels);
    CHECK(pmm_sum / channels >= gsm_sum / channels);
  }
}
