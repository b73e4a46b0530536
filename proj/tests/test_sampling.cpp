#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "rase/sampling.hpp"

using namespace rase;

TEST_SUITE_BEGIN("sampling");

namespace {

SubstreamRng make_rng(uint64_t k) { return SubstreamRng(99, 0, 0, k); }

}  // namespace

TEST_CASE("uniform draws satisfy the subspace invariants") {
  SamplerScratch scratch(20);
  for (int k = 0; k < 2000; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    const Subspace s = sample_uniform(20, 7, rng, scratch);
    CHECK(s.size() >= 1);
    CHECK(s.size() <= 7);
    for (int i = 1; i < s.size(); ++i) {
      CHECK(s.indices[static_cast<size_t>(i)] > s.indices[static_cast<size_t>(i - 1)]);
    }
    CHECK(s.indices.back() < 20);
  }
}

TEST_CASE("D = 1 gives uniform singleton marginals") {
  const int draws = 10000;
  SamplerScratch scratch(5);
  std::vector<int> counts(5, 0);
  for (int k = 0; k < draws; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    const Subspace s = sample_uniform(5, 1, rng, scratch);
    REQUIRE(s.size() == 1);
    counts[static_cast<size_t>(s.indices[0])]++;
  }
  for (int c : counts) {
    const double freq = static_cast<double>(c) / draws;
    CHECK(freq > 0.17);  // exact marginal 0.2, binomial 3-sigma ~ 0.012
    CHECK(freq < 0.23);
  }
}

TEST_CASE("D = p = 2 realizes the hierarchical law") {
  const int draws = 10000;
  SamplerScratch scratch(2);
  std::map<std::vector<int>, int> counts;
  for (int k = 0; k < draws; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    counts[sample_uniform(2, 2, rng, scratch).indices]++;
  }
  REQUIRE(counts.size() == 3);
  // Sizes 1 and 2 each have probability 1/2; singletons split evenly.
  const double f1 = (counts[{0}] + counts[{1}]) / static_cast<double>(draws);
  const double f2 = counts[{0, 1}] / static_cast<double>(draws);
  CHECK(f1 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(f2 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(counts[{0}] == doctest::Approx(counts[{1}]).epsilon(0.15));
}

TEST_CASE("update_weights threshold and floor") {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(100);
  eta[0] = 0.5;
  eta[1] = 0.02;
  const Eigen::VectorXd tilde = update_weights(eta, 0.1, 100);
  // 0.02 <= 0.1 / log(100) ~ 0.0217 floors to 0.1 / 100.
  CHECK(tilde[0] == 0.5);
  CHECK(tilde[1] == doctest::Approx(0.001));
  CHECK(tilde[2] == doctest::Approx(0.001));

  Eigen::VectorXd ones = Eigen::VectorXd::Ones(100);
  CHECK(update_weights(ones, 0.1, 100)[7] == 1.0);
  CHECK_THROWS_AS(update_weights(eta, 0.0, 100), RaseError);
}

TEST_CASE("weighted sampling concentrates on a dominant feature") {
  const int p = 12;
  Eigen::VectorXd weights = Eigen::VectorXd::Constant(p, 1e-4);
  weights[3] = 1.0;
  SamplerScratch scratch(p);
  int containing = 0;
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    const Subspace s = sample_weighted(weights, 4, rng, scratch);
    containing += std::count(s.indices.begin(), s.indices.end(), 3) > 0 ? 1 : 0;
  }
  CHECK(static_cast<double>(containing) / draws > 0.99);
}

TEST_CASE("uniform weights reproduce the uniform sampler's singleton marginals") {
  const int p = 10;
  const int draws = 100000;
  SamplerScratch scratch(p);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(p, 0.37);
  std::vector<int> weighted_counts(p, 0), uniform_counts(p, 0);
  for (int k = 0; k < draws; ++k) {
    auto rng1 = SubstreamRng(4, 1, 0, static_cast<uint64_t>(k));
    for (int idx : sample_weighted(flat, 4, rng1, scratch).indices) weighted_counts[static_cast<size_t>(idx)]++;
    auto rng2 = SubstreamRng(4, 2, 0, static_cast<uint64_t>(k));
    for (int idx : sample_uniform(p, 4, rng2, scratch).indices) uniform_counts[static_cast<size_t>(idx)]++;
  }
  // Chi-square distance between the two singleton marginal histograms;
  // 9 degrees of freedom, 3-sigma ~ 21.7 at alpha ~ 0.01.
  double total_w = 0.0, total_u = 0.0;
  for (int j = 0; j < p; ++j) {
    total_w += weighted_counts[static_cast<size_t>(j)];
    total_u += uniform_counts[static_cast<size_t>(j)];
  }
  double chi2 = 0.0;
  for (int j = 0; j < p; ++j) {
    const double expected = total_w / p;
    chi2 += (weighted_counts[static_cast<size_t>(j)] - expected) *
            (weighted_counts[static_cast<size_t>(j)] - expected) / expected;
  }
  CHECK(chi2 < 27.9);  // chi-square(9) 0.999 quantile
  CHECK(total_w == doctest::Approx(total_u).epsilon(0.02));
}

TEST_CASE("weighted sampling with d = p exhausts every feature") {
  const int p = 6;
  Eigen::VectorXd weights(p);
  weights << 5, 1, 0.01, 2, 0.5, 0.25;
  SamplerScratch scratch(p);
  for (int k = 0; k < 200; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    const Subspace s = sample_weighted(weights, p, rng, scratch);
    if (s.size() == p) {
      CHECK(s.indices == Subspace::full(p).indices);
    }
  }
  Eigen::VectorXd bad = weights;
  bad[2] = 0.0;
  auto rng = make_rng(0);
  CHECK_THROWS_AS(sample_weighted(bad, 3, rng, scratch), RaseError);
}

TEST_CASE("coverage probability closed cases") {
  CHECK(coverage_probability(4, 1, 2) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(coverage_probability(1, 1, 1) == doctest::Approx(1.0));
  // p* = D = p: only d = p is admissible and covers, giving 1/D.
  CHECK(coverage_probability(5, 5, 5) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(coverage_probability(4, 3, 2), RaseError);
}

TEST_CASE("coverage probability matches exact big-integer arithmetic") {
  for (auto [p, p_star, max_size] :
       {std::tuple{400, 3, 20}, std::tuple{50, 2, 10}, std::tuple{1000, 4, 31}}) {
    const double fast = coverage_probability(p, p_star, max_size);
    const double exact = oracle::coverage_probability_bigint(p, p_star, max_size);
    CHECK(fast == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("uniform coverage frequency agrees with the formula") {
  const int p = 10, p_star = 2, max_size = 4;
  const double exact = coverage_probability(p, p_star, max_size);
  const int draws = 100000;
  SamplerScratch scratch(p);
  int covered = 0;
  for (int k = 0; k < draws; ++k) {
    auto rng = make_rng(static_cast<uint64_t>(k));
    const Subspace s = sample_uniform(p, max_size, rng, scratch);
    const bool has0 = std::find(s.indices.begin(), s.indices.end(), 0) != s.indices.end();
    const bool has1 = std::find(s.indices.begin(), s.indices.end(), 1) != s.indices.end();
    covered += has0 && has1 ? 1 : 0;
  }
  const double freq = static_cast<double>(covered) / draws;
  const double mc_sd = std::sqrt(exact * (1.0 - exact) / draws);
  CHECK(std::abs(freq - exact) < 3.0 * mc_sd);
}

TEST_CASE("draws are reproducible from the substream key") {
  SamplerScratch scratch(40);
  for (uint64_t key = 0; key < 50; ++key) {
    SubstreamRng a(12345, 3, key, key + 7);
    SubstreamRng b(12345, 3, key, key + 7);
    CHECK(sample_uniform(40, 9, a, scratch).indices == sample_uniform(40, 9, b, scratch).indices);
  }
}

TEST_SUITE_END();
