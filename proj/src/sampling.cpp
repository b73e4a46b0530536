#include "rase/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "rase/error.hpp"
#include "rase/numerics.hpp"

namespace rase {

namespace {

void check_bounds(int p, int max_size) {
  if (p < 1 || max_size < 1 || max_size > p) {
    raise(ErrorKind::InvalidBound,
          "need 1 <= D <= p, got D = " + std::to_string(max_size) + ", p = " + std::to_string(p));
  }
}

}  // namespace

Subspace sample_uniform(int p, int max_size, SubstreamRng& rng, SamplerScratch& scratch) {
  check_bounds(p, max_size);
  const int d = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_size)));
  auto& perm = scratch.perm;
  auto& swaps = scratch.swaps;
  swaps.clear();
  for (int i = 0; i < d; ++i) {
    const int r = i + static_cast<int>(rng.next_below(static_cast<uint64_t>(p - i)));
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(r)]);
    swaps.push_back(r);
  }
  Subspace s;
  s.indices.assign(perm.begin(), perm.begin() + d);
  std::sort(s.indices.begin(), s.indices.end());
  // Undo the partial shuffle so the scratch permutation stays the identity.
  for (int i = d - 1; i >= 0; --i) {
    std::swap(perm[static_cast<size_t>(i)], perm[static_cast<size_t>(swaps[static_cast<size_t>(i)])]);
  }
  return s;
}

Eigen::VectorXd update_weights(const Eigen::VectorXd& eta, double c0, int p) {
  if (c0 <= 0.0) raise(ErrorKind::InvalidBound, "C0 must be positive");
  if (p < 2 || eta.size() != p) raise(ErrorKind::InvalidBound, "need p >= 2 weights");
  const double threshold = c0 / std::log(static_cast<double>(p));
  const double floor_value = c0 / p;
  Eigen::VectorXd out(p);
  for (int l = 0; l < p; ++l) {
    out[l] = eta[l] > threshold ? eta[l] : floor_value;
  }
  return out;
}

Subspace sample_weighted(const Eigen::VectorXd& eta_tilde, int max_size, SubstreamRng& rng,
                         SamplerScratch& scratch) {
  const int p = static_cast<int>(eta_tilde.size());
  check_bounds(p, max_size);
  for (int l = 0; l < p; ++l) {
    if (!(eta_tilde[l] > 0.0) || !std::isfinite(eta_tilde[l])) {
      raise(ErrorKind::InvalidBound, "weighted sampling needs strictly positive finite weights");
    }
  }
  const int d = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_size)));
  auto& weights = scratch.weights;
  std::copy(eta_tilde.data(), eta_tilde.data() + p, weights.begin());
  Subspace s;
  s.indices.reserve(static_cast<size_t>(d));
  for (int draw = 0; draw < d; ++draw) {
    double total = 0.0;
    for (int l = 0; l < p; ++l) total += weights[static_cast<size_t>(l)];
    const double target = rng.next_unit() * total;
    double cumulative = 0.0;
    int chosen = -1;
    for (int l = 0; l < p; ++l) {
      const double w = weights[static_cast<size_t>(l)];
      if (w <= 0.0) continue;
      cumulative += w;
      if (cumulative > target) {
        chosen = l;
        break;
      }
    }
    if (chosen < 0) {
      // Rounding pushed the target past the last positive weight.
      for (int l = p - 1; l >= 0; --l) {
        if (weights[static_cast<size_t>(l)] > 0.0) {
          chosen = l;
          break;
        }
      }
    }
    s.indices.push_back(chosen);
    weights[static_cast<size_t>(chosen)] = 0.0;
  }
  std::sort(s.indices.begin(), s.indices.end());
  return s;
}

Subspace sample_subspace(const SubspaceDistribution& dist, SubstreamRng& rng,
                         SamplerScratch& scratch) {
  if (const auto* u = std::get_if<UniformSubspaceDist>(&dist)) {
    return sample_uniform(u->p, u->max_size, rng, scratch);
  }
  const auto& w = std::get<WeightedSubspaceDist>(dist);
  return sample_weighted(w.eta_tilde, w.max_size, rng, scratch);
}

double coverage_probability(int p, int p_star, int max_size) {
  if (p_star < 1 || p_star > max_size || max_size > p) {
    raise(ErrorKind::InvalidBound, "coverage_probability needs 1 <= p* <= D <= p");
  }
  auto log_choose = [](int n, int k) {
    return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0);
  };
  double sum = 0.0;
  for (int d = p_star; d <= max_size; ++d) {
    sum += std::exp(log_choose(p - p_star, d - p_star) - log_choose(p, d));
  }
  return sum / max_size;
}

}  // namespace rase
