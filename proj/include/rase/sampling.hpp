#pragma once

#include <Eigen/Dense>
#include <numeric>
#include <variant>
#include <vector>

#include "rase/dataset.hpp"
#include "rase/rng.hpp"

namespace rase {

struct UniformSubspaceDist {
  int p = 0;
  int max_size = 0;  // D
};

struct WeightedSubspaceDist {
  int p = 0;
  int max_size = 0;
  Eigen::VectorXd eta_tilde;  // strictly positive weights, length p
};

using SubspaceDistribution = std::variant<UniformSubspaceDist, WeightedSubspaceDist>;

// Reusable per-thread buffers for subspace draws.
struct SamplerScratch {
  std::vector<int> perm;
  std::vector<double> weights;
  std::vector<int> swaps;

  explicit SamplerScratch(int p) : perm(static_cast<size_t>(p)), weights(static_cast<size_t>(p)) {
    std::iota(perm.begin(), perm.end(), 0);
  }
};

// Hierarchical uniform draw: size d ~ Uniform{1..D}, then a uniform size-d
// subset via a partial Fisher-Yates shuffle. Result is sorted.
Subspace sample_uniform(int p, int max_size, SubstreamRng& rng, SamplerScratch& scratch);

// Weight update of the iterative scheme: keep eta_l when it clears C0/log(p),
// floor it at C0/p otherwise.
Eigen::VectorXd update_weights(const Eigen::VectorXd& eta, double c0, int p);

// Restrictive multinomial draw: size d ~ Uniform{1..D}, then d sequential
// weighted draws without replacement. Result is sorted.
Subspace sample_weighted(const Eigen::VectorXd& eta_tilde, int max_size, SubstreamRng& rng,
                         SamplerScratch& scratch);

Subspace sample_subspace(const SubspaceDistribution& dist, SubstreamRng& rng,
                         SamplerScratch& scratch);

// P(S covers a fixed set of p_star features) under the hierarchical uniform
// law: (1/D) * sum_{d = p_star}^{D} C(p - p_star, d - p_star) / C(p, d),
// evaluated in log space.
double coverage_probability(int p, int p_star, int max_size);

}  // namespace rase
