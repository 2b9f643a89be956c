#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <set>

#include "pmm/channel.hpp"
#include "pmm/codec.hpp"
#include "pmm/gmm.hpp"
#include "pmm/rng.hpp"

using namespace pmm;

namespace {

GaussianMixture random_receive_mixture(int n, int m, double rho, RandomStream& rng) {
  const ChannelRealization ch = draw_channel(m, n, rng);
  const PowerAllocation pa = default_power_allocation(n, rho);
  const auto set_p = usable_permutations(n);
  return mixture_of_y(ch, mixture_of_x(set_p, pa, uniform_weights(set_p.size())));
}

}  // namespace

TEST_CASE("conditional covariances permute the power diagonal", "[gmm]") {
  const PowerAllocation pa = default_power_allocation(3, 1.0);
  const auto set_p = usable_permutations(3);
  const auto covs = conditional_covariances(set_p, pa);
  REQUIRE(covs.size() == 4);
  const double g1 = 0.39, g2 = 0.33, g3 = 0.28;
  CHECK(covs[0] == (RVector(3) << g1, g2, g3).finished());  // identity
  CHECK(covs[1] == (RVector(3) << g1, g3, g2).finished());
  CHECK(covs[2] == (RVector(3) << g2, g1, g3).finished());
  CHECK(covs[3] == (RVector(3) << g2, g3, g1).finished());
}

TEST_CASE("covariances are pairwise distinct when powers are (exhaustive N <= 5)", "[gmm]") {
  for (int n = 2; n <= 5; ++n) {
    const PowerAllocation pa = default_power_allocation(n, 1.0);
    const auto covs = conditional_covariances(usable_permutations(n), pa);
    std::set<std::vector<double>> seen;
    for (const auto& c : covs)
      seen.insert(std::vector<double>(c.data(), c.data() + c.size()));
    CHECK(seen.size() == covs.size());
  }
}

TEST_CASE("mixture_of_x averages the conditional covariances", "[gmm]") {
  const PowerAllocation pa = default_power_allocation(3, 1.0);
  const auto set_p = usable_permutations(3);
  const GaussianMixture mix = mixture_of_x(set_p, pa, uniform_weights(4));
  const CMatrix c = mix.overall_covariance();
  // Hand average of the four permuted diagonals:
  // ((g1+g1+g2+g2)/4, (g2+g3+g1+g3)/4, (g3+g2+g3+g1)/4) = (0.36, 0.32, 0.32).
  CHECK(std::real(c(0, 0)) == Catch::Approx(0.36).epsilon(1e-12));
  CHECK(std::real(c(1, 1)) == Catch::Approx(0.32).epsilon(1e-12));
  CHECK(std::real(c(2, 2)) == Catch::Approx(0.32).epsilon(1e-12));

  // r = 1 degenerates to the single conditional Gaussian.
  const GaussianMixture single = mixture_of_x({Permutation::identity(3)}, pa, {1.0});
  CHECK(single.size() == 1);
  CHECK((single.overall_covariance().diagonal().real() -
         (RVector(3) << 0.39, 0.33, 0.28).finished())
            .norm() < 1e-15);

  CHECK_THROWS_AS(mixture_of_x(set_p, pa, {0.5, 0.5, 0.25, 0.25}), std::invalid_argument);
}

TEST_CASE("transmit mixture trace equals rho for any weights", "[gmm]") {
  RandomStream rng = derive_stream(41, 0, 0);
  const double rho = 3.7;
  const PowerAllocation pa = default_power_allocation(4, rho);
  const auto set_p = usable_permutations(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> w(set_p.size());
    double sum = 0.0;
    for (auto& v : w) {
      v = rng.uniform_pos();
      sum += v;
    }
    for (auto& v : w) v /= sum;
    const GaussianMixture mix = mixture_of_x(set_p, pa, w);
    for (const auto& comp : mix.components())
      CHECK(std::real(comp.covariance.trace()) == Catch::Approx(rho).epsilon(1e-12));
    CHECK(std::real(mix.overall_covariance().trace()) == Catch::Approx(rho).epsilon(1e-12));
  }
}

TEST_CASE("mixture_of_y adds identity noise", "[gmm]") {
  const PowerAllocation pa = default_power_allocation(3, 1.0);
  const auto set_p = usable_permutations(3);
  const GaussianMixture mix_x = mixture_of_x(set_p, pa, uniform_weights(4));

  const ChannelRealization zero(CMatrix::Zero(2, 3));
  const GaussianMixture y0 = mixture_of_y(zero, mix_x);
  for (const auto& c : y0.components())
    CHECK((c.covariance - CMatrix::Identity(2, 2)).norm() < 1e-15);

  const ChannelRealization ident(CMatrix::Identity(3, 3));
  const GaussianMixture y1 = mixture_of_y(ident, mix_x);
  for (int i = 0; i < 4; ++i)
    CHECK((y1.component(i).covariance -
           (mix_x.component(i).covariance + CMatrix::Identity(3, 3)))
              .norm() < 1e-14);
}

TEST_CASE("pdf peak and convexity", "[gmm]") {
  const CMatrix eye = CMatrix::Identity(2, 2);
  const GaussianMixture single(2, {{1.0, eye}});
  CHECK(pdf_eval(single, CVector::Zero(2)) ==
        Catch::Approx(1.0 / (M_PI * M_PI)).epsilon(1e-12));

  RandomStream rng = derive_stream(42, 0, 0);
  GaussianMixture mix = random_receive_mixture(3, 3, 1.0, rng);
  for (int t = 0; t < 25; ++t) {
    CVector z(3);
    for (int k = 0; k < 3; ++k) z[k] = 2.0 * rng.complex_gaussian();
    double convex = 0.0;
    for (const auto& c : mix.components())
      convex += c.weight * pdf_eval(GaussianMixture(3, {{1.0, c.covariance}}), z);
    CHECK(pdf_eval(mix, z) == Catch::Approx(convex).epsilon(1e-10));
  }
}

TEST_CASE("pdf integrates to one (importance check, d <= 3)", "[gmm]") {
  RandomStream rng = derive_stream(43, 0, 0);
  for (int d : {2, 3}) {
    GaussianMixture mix = random_receive_mixture(d, d, 1.5, rng);
    // Importance-sample from a single Gaussian with the overall covariance.
    const CMatrix proposal_cov = 1.5 * mix.overall_covariance();
    const GaussianMixture proposal(d, {{1.0, proposal_cov}});
    Eigen::LLT<CMatrix> llt(proposal_cov);
    double acc = 0.0;
    const int draws = 200000;
    for (int t = 0; t < draws; ++t) {
      CVector w(d);
      for (int k = 0; k < d; ++k) w[k] = rng.complex_gaussian();
      const CVector z = llt.matrixL() * w;
      acc += pdf_eval(mix, z) / pdf_eval(proposal, z);
    }
    CHECK(acc / draws == Catch::Approx(1.0).epsilon(0.02));
  }
}

TEST_CASE("moment-preserving merge", "[gmm]") {
  RandomStream rng = derive_stream(44, 0, 0);
  GaussianMixture mix = random_receive_mixture(3, 3, 2.0, rng);

  // Equal weights average the covariances.
  const GaussianMixture merged = merge_components(mix, 0, 1);
  REQUIRE(merged.size() == 3);
  const auto& last = merged.component(2);
  CHECK(last.weight == Catch::Approx(0.5).epsilon(1e-12));
  CHECK((last.covariance -
         0.5 * (mix.component(0).covariance + mix.component(1).covariance))
            .norm() < 1e-12);

  // Trace of the weighted sum is conserved by any merge.
  const auto weighted_trace = [](const GaussianMixture& m) {
    double acc = 0.0;
    for (const auto& c : m.components()) acc += c.weight * std::real(c.covariance.trace());
    return acc;
  };
  CHECK(weighted_trace(merged) == Catch::Approx(weighted_trace(mix)).epsilon(1e-12));

  // Merging everything yields the single overall Gaussian.
  GaussianMixture all = mix;
  while (all.size() > 1) all = merge_components(all, 0, all.size() - 1);
  CHECK((all.component(0).covariance - mix.overall_covariance()).norm() < 1e-12);
  CHECK(all.component(0).weight == Catch::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(merge_components(mix, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(merge_components(mix, 0, 9), std::invalid_argument);
}

TEST_CASE("overall covariance is invariant under any merge sequence", "[gmm]") {
  RandomStream rng = derive_stream(45, 0, 0);
  GaussianMixture mix = random_receive_mixture(4, 4, 1.0, rng);
  const CMatrix before = mix.overall_covariance();
  GaussianMixture cur = mix;
  while (cur.size() > 1) {
    const int i = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cur.size()));
    int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cur.size()));
    if (j == i) j = (i + 1) % cur.size();
    cur = merge_components(cur, i, j);
    CHECK((cur.overall_covariance() - before).cwiseAbs().maxCoeff() < 1e-12);
    double wsum = 0.0;
    for (const auto& c : cur.components()) {
      CHECK(c.weight >= 0.0);
      CHECK(c.weight <= 1.0 + 1e-12);
      wsum += c.weight;
    }
    CHECK(wsum == Catch::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("salmond distance is identically zero for zero-mean mixtures", "[gmm]") {
  RandomStream rng = derive_stream(46, 0, 0);
  // All 24 permutations of N=4 (test-only superset of the usable set).
  std::vector<int> perm = {0, 1, 2, 3};
  std::vector<Permutation> all;
  do {
    all.push_back(Permutation(perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  const ChannelRealization ch = draw_channel(4, 4, rng);
  const GaussianMixture mix = mixture_of_y(
      ch, mixture_of_x(all, default_power_allocation(4, 1.0), uniform_weights(all.size())));
  for (int i = 0; i < mix.size(); ++i)
    for (int j = 0; j < mix.size(); ++j)
      if (i != j) CHECK(salmond_distance(mix, i, j) == 0.0);
}

TEST_CASE("entropy upper bound", "[gmm]") {
  const CMatrix eye = CMatrix::Identity(2, 2);
  CHECK(entropy_upper_bound(GaussianMixture(2, {{1.0, eye}})) ==
        Catch::Approx(2.0 * kLog2PiE).epsilon(1e-12));

  // Uniform weights add exactly log2 r over the weighted Gaussian entropies.
  for (int r : {2, 4, 8}) {
    std::vector<MixtureComponent> comps;
    for (int i = 0; i < r; ++i) comps.push_back({1.0 / r, eye});
    CHECK(entropy_upper_bound(GaussianMixture(2, comps)) ==
          Catch::Approx(std::log2(r) + 2.0 * kLog2PiE).epsilon(1e-12));
  }

  // Zero-weight components are skipped.
  CHECK(entropy_upper_bound(GaussianMixture(2, {{1.0, eye}, {0.0, eye}})) ==
        Catch::Approx(2.0 * kLog2PiE).epsilon(1e-12));
}

TEST_CASE("refine_bound basics", "[gmm]") {
  const CMatrix eye = CMatrix::Identity(2, 2);

  // r = 1: nothing to merge.
  const GaussianMixture single(2, {{1.0, 2.0 * eye}});
  const RefineResult r1 = refine_bound(single);
  CHECK(r1.tight_bound == entropy_upper_bound(single));
  CHECK(r1.best_prefix == 1);
  CHECK(r1.schedule.empty());

  // Two identical components: unmerged = 1 + per-component entropy, merged
  // drops the weight-entropy bit; the minimum is the merged stage.
  const CMatrix sigma = 3.0 * eye;
  const GaussianMixture twin(2, {{0.5, sigma}, {0.5, sigma}});
  const RefineResult r2 = refine_bound(twin);
  const double gauss = 2.0 * kLog2PiE + log2_det_hermitian(sigma);
  REQUIRE(r2.stage_bounds.size() == 2);
  CHECK(r2.stage_bounds[0] == Catch::Approx(1.0 + gauss).epsilon(1e-12));
  CHECK(r2.stage_bounds[1] == Catch::Approx(gauss).epsilon(1e-12));
  CHECK(r2.tight_bound == Catch::Approx(gauss).epsilon(1e-12));
  CHECK(r2.best_prefix == 2);
}

TEST_CASE("refined bound never exceeds the unrefined bound", "[gmm]") {
  RandomStream rng = derive_stream(47, 0, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.bits(2) % 3);
    const double rho = std::pow(10.0, -1.0 + 3.0 * rng.uniform());
    GaussianMixture mix = random_receive_mixture(n, n, rho, rng);
    const RefineResult res = refine_bound(mix);
    CHECK(res.tight_bound <= entropy_upper_bound(mix) + 1e-12);
    // the merge schedule tracks cumulative prefixes with conserved weight
    for (const auto& rec : res.schedule) {
      double w = 0.0;
      for (int idx : rec.merged_indices) w += mix.component(idx).weight;
      CHECK(rec.alpha_tilde == Catch::Approx(w).epsilon(1e-12));
    }
  }
}

TEST_CASE("merge order does not change the refined bound", "[gmm]") {
  // All sequential pairwise merge paths for r = 4 visit family minima that
  // agree to 1e-9 (zero-mean case).
  RandomStream rng = derive_stream(48, 0, 0);
  for (int trial = 0; trial < 10; ++trial) {
    GaussianMixture mix = random_receive_mixture(3, 3, std::pow(10.0, rng.uniform() * 2), rng);
    REQUIRE(mix.size() == 4);

    std::vector<double> minima;
    const auto explore = [&](auto&& self, const GaussianMixture& cur, double running_min) -> void {
      if (cur.size() == 1) {
        minima.push_back(running_min);
        return;
      }
      for (int i = 0; i < cur.size(); ++i)
        for (int j = i + 1; j < cur.size(); ++j) {
          const GaussianMixture next = merge_components(cur, i, j);
          self(self, next, std::min(running_min, entropy_upper_bound(next)));
        }
    };
    explore(explore, mix, entropy_upper_bound(mix));

    const double lo = *std::min_element(minima.begin(), minima.end());
    const double hi = *std::max_element(minima.begin(), minima.end());
    CHECK(hi - lo < 1e-9);
    CHECK(refine_bound(mix).tight_bound == Catch::Approx(lo).margin(1e-9));
  }
}

TEST_CASE("refined bound approaches the pure-noise entropy as rho -> 0", "[gmm]") {
  RandomStream rng = derive_stream(49, 0, 0);
  for (int n : {2, 3, 4}) {
    GaussianMixture mix = random_receive_mixture(n, n, 1e-9, rng);
    CHECK(std::abs(refine_bound(mix).tight_bound - n * kLog2PiE) < 1e-6);
  }
}
