#include "rase/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rase/error.hpp"
#include "rase/rng.hpp"
#include "rase/sampling.hpp"

namespace rase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int resolve_threads(int requested) {
#ifdef _OPENMP
  return std::max(1, requested);
#else
  (void)requested;
  return 1;
#endif
}

struct LearnerJob {
  const LabeledDataset& data;
  const ClassSplit& split;
  const SubspaceScorer& scorer;
  const SubspaceDistribution& dist;
  const EnsembleConfig& config;
  int iteration;
};

// Draws, scores, and selects for one learner, then fits the winner. If the
// winner cannot be fitted, the remaining candidates are tried in score order,
// then singletons; only when even those fail does fitting abort, since B1 is
// part of the model contract.
TrainedLearner train_one_learner(const LearnerJob& job, int learner_index, ScorerWorkspace& ws,
                                 SamplerScratch& scratch) {
  const int b2 = job.config.b2;
  std::vector<Subspace> candidates;
  candidates.reserve(static_cast<size_t>(b2));
  for (int k = 0; k < b2; ++k) {
    SubstreamRng rng(job.config.seed, static_cast<uint64_t>(job.iteration),
                     static_cast<uint64_t>(learner_index), static_cast<uint64_t>(k));
    candidates.push_back(sample_subspace(job.dist, rng, scratch));
  }
  std::vector<double> scores(static_cast<size_t>(b2));
  for (int k = 0; k < b2; ++k) scores[static_cast<size_t>(k)] = job.scorer.score(candidates[static_cast<size_t>(k)], ws);

  std::vector<int> order(static_cast<size_t>(b2));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = std::isnan(scores[static_cast<size_t>(a)]) ? kInf : scores[static_cast<size_t>(a)];
    const double sb = std::isnan(scores[static_cast<size_t>(b)]) ? kInf : scores[static_cast<size_t>(b)];
    if (sa != sb) return sa < sb;
    return subspace_less(candidates[static_cast<size_t>(a)], candidates[static_cast<size_t>(b)]);
  });
  // With every candidate rejected, fall back to the smallest subspace first.
  if (!(scores[static_cast<size_t>(order.front())] < kInf)) {
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return subspace_less(candidates[static_cast<size_t>(a)], candidates[static_cast<size_t>(b)]);
    });
  }

  for (int k : order) {
    const Subspace& s = candidates[static_cast<size_t>(k)];
    try {
      return fit_base(job.config.base, restrict(job.data, s), job.split, s);
    } catch (const RaseError&) {
      continue;
    }
  }
  for (int j = 0; j < job.data.p(); ++j) {
    const Subspace s = Subspace::single(j);
    try {
      return fit_base(job.config.base, restrict(job.data, s), job.split, s);
    } catch (const RaseError&) {
      continue;
    }
  }
  raise(ErrorKind::FitFailure, "no candidate subspace admits a base-classifier fit");
}

std::vector<TrainedLearner> train_round_serial(const LearnerJob& job) {
  std::vector<TrainedLearner> learners(static_cast<size_t>(job.config.b1));
  ScorerWorkspace ws;
  SamplerScratch scratch(job.data.p());
  for (int j = 0; j < job.config.b1; ++j) {
    learners[static_cast<size_t>(j)] = train_one_learner(job, j, ws, scratch);
  }
  return learners;
}

std::vector<TrainedLearner> train_round_parallel(const LearnerJob& job, int threads) {
  std::vector<TrainedLearner> learners(static_cast<size_t>(job.config.b1));
#ifdef _OPENMP
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
#pragma omp parallel num_threads(threads)
  {
    ScorerWorkspace ws;
    SamplerScratch scratch(job.data.p());
#pragma omp for schedule(dynamic)
    for (int j = 0; j < job.config.b1; ++j) {
      if (failed.load(std::memory_order_relaxed)) continue;
      try {
        learners[static_cast<size_t>(j)] = train_one_learner(job, j, ws, scratch);
      } catch (...) {
#pragma omp critical
        {
          if (!failure) failure = std::current_exception();
        }
        failed.store(true, std::memory_order_relaxed);
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
#else
  (void)threads;
  learners = train_round_serial(job);
#endif
  return learners;
}

Eigen::VectorXd selection_frequencies(const std::vector<TrainedLearner>& learners, int p) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(p);
  for (const auto& learner : learners) {
    for (int idx : learner.subspace.indices) counts[idx] += 1;
  }
  return counts.cast<double>() / static_cast<double>(learners.size());
}

// Integer vote counts per row; order-independent, so any thread partition of
// the learners yields identical results.
std::vector<int> vote_counts(const std::vector<TrainedLearner>& learners,
                             const Eigen::MatrixXd& x, int threads) {
  const int m = static_cast<int>(x.rows());
  const int b1 = static_cast<int>(learners.size());
  std::vector<int> counts(static_cast<size_t>(m), 0);
#ifdef _OPENMP
  if (threads > 1) {
#pragma omp parallel num_threads(threads)
    {
      std::vector<int> local(static_cast<size_t>(m), 0);
      std::vector<uint8_t> votes(static_cast<size_t>(m));
      Eigen::MatrixXd scratch;
#pragma omp for schedule(dynamic)
      for (int j = 0; j < b1; ++j) {
        learner_votes(learners[static_cast<size_t>(j)], x, votes.data(), scratch);
        for (int i = 0; i < m; ++i) local[static_cast<size_t>(i)] += votes[static_cast<size_t>(i)];
      }
#pragma omp critical
      for (int i = 0; i < m; ++i) counts[static_cast<size_t>(i)] += local[static_cast<size_t>(i)];
    }
    return counts;
  }
#else
  (void)threads;
#endif
  std::vector<uint8_t> votes(static_cast<size_t>(m));
  Eigen::MatrixXd scratch;
  for (int j = 0; j < b1; ++j) {
    learner_votes(learners[static_cast<size_t>(j)], x, votes.data(), scratch);
    for (int i = 0; i < m; ++i) counts[static_cast<size_t>(i)] += votes[static_cast<size_t>(i)];
  }
  return counts;
}

RaseModel fit_impl(const LabeledDataset& dataset, EnsembleConfig config, bool parallel) {
  if (config.b1 < 1 || config.b2 < 1) raise(ErrorKind::InvalidBound, "B1 and B2 must be >= 1");
  if (config.iterations < 0) raise(ErrorKind::InvalidBound, "iteration count must be >= 0");
  const ClassSplit split = class_split(dataset);
  const int p = dataset.p();
  if (config.d_max == 0) {
    config.d_max = default_subspace_cap(config, dataset.n(), split.n0, split.n1, p);
  }
  if (config.d_max < 1 || config.d_max > p) {
    raise(ErrorKind::InvalidBound, "subspace cap D must satisfy 1 <= D <= p");
  }
  if (config.criterion.c_n < 0.0) config.criterion.c_n = default_penalty(dataset.n());
  const int threads = resolve_threads(config.threads);

  const SubspaceScorer scorer(dataset, split, config.base, config.criterion);

  SubspaceDistribution dist = UniformSubspaceDist{p, config.d_max};
  std::vector<TrainedLearner> learners;
  Eigen::VectorXd eta;
  for (int t = 0; t <= config.iterations; ++t) {
    LearnerJob job{dataset, split, scorer, dist, config, t};
    learners = parallel && threads > 1 ? train_round_parallel(job, threads)
                                       : train_round_serial(job);
    eta = selection_frequencies(learners, p);
    if (t < config.iterations) {
      dist = WeightedSubspaceDist{p, config.d_max, update_weights(eta, config.c0, p)};
    }
  }

  RaseModel model;
  model.learners = std::move(learners);
  model.eta = std::move(eta);
  model.config = config;
  model.n_features = p;

  const std::vector<int> counts = vote_counts(model.learners, dataset.features,
                                              parallel ? threads : 1);
  Eigen::VectorXd nu(dataset.n());
  for (int i = 0; i < dataset.n(); ++i) {
    nu[i] = static_cast<double>(counts[static_cast<size_t>(i)]) / config.b1;
  }
  model.alpha_hat = select_threshold(nu, dataset.labels, split.pi0_hat, split.pi1_hat);
  return model;
}

}  // namespace

int default_subspace_cap(const EnsembleConfig& config, int n, int n0, int n1, int p) {
  if (config.base.kind == BaseKind::Qda) {
    const int cap0 = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n0))));
    const int cap1 = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n1))));
    return std::max(1, std::min({p, cap0, cap1}));
  }
  return std::max(1, std::min(p, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))))));
}

RaseModel fit(const LabeledDataset& dataset, EnsembleConfig config) {
  return fit_impl(dataset, config, true);
}

RaseModel fit_reference(const LabeledDataset& dataset, EnsembleConfig config) {
  return fit_impl(dataset, config, false);
}

RaseModel fit_iterative(const LabeledDataset& dataset, EnsembleConfig config) {
  if (config.iterations < 1) raise(ErrorKind::InvalidBound, "iterative fitting needs T >= 1");
  return fit_impl(dataset, config, true);
}

Eigen::VectorXd predict_scores(const RaseModel& model, const Eigen::MatrixXd& x, int threads) {
  if (x.cols() != model.n_features) {
    raise(ErrorKind::DimensionMismatch,
          "expected " + std::to_string(model.n_features) + " features, got " +
              std::to_string(x.cols()));
  }
  const std::vector<int> counts = vote_counts(model.learners, x, resolve_threads(threads));
  Eigen::VectorXd nu(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    nu[i] = static_cast<double>(counts[static_cast<size_t>(i)]) /
            static_cast<double>(model.learners.size());
  }
  return nu;
}

double predict_score(const RaseModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return predict_scores(model, x.transpose(), 1)[0];
}

Eigen::VectorXi predict(const RaseModel& model, const Eigen::MatrixXd& x, int threads) {
  const Eigen::VectorXd nu = predict_scores(model, x, threads);
  Eigen::VectorXi labels(nu.size());
  for (Eigen::Index i = 0; i < nu.size(); ++i) labels[i] = nu[i] > model.alpha_hat ? 1 : 0;
  return labels;
}

int predict_one(const RaseModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  return predict_score(model, x) > model.alpha_hat ? 1 : 0;
}

double select_threshold(const Eigen::VectorXd& nu_train, const Eigen::VectorXi& labels,
                        double pi0, double pi1) {
  const int n = static_cast<int>(nu_train.size());
  if (n < 1 || labels.size() != n) {
    raise(ErrorKind::DimensionMismatch, "threshold selection needs matching nu and labels");
  }
  std::vector<double> distinct(nu_train.data(), nu_train.data() + n);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  std::vector<double> candidates;
  candidates.reserve(distinct.size() + 3);
  candidates.push_back(0.0);
  candidates.push_back(1.0);
  candidates.push_back(0.5);
  for (size_t i = 1; i < distinct.size(); ++i) {
    candidates.push_back(0.5 * (distinct[i - 1] + distinct[i]));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const int n0 = static_cast<int>(std::count(labels.data(), labels.data() + n, 0));
  const int n1 = n - n0;

  double best_alpha = 0.5;
  double best_error = kInf;
  for (double alpha : candidates) {
    int wrong0 = 0, wrong1 = 0;  // class 0 voted above alpha; class 1 at or below
    for (int i = 0; i < n; ++i) {
      if (labels[i] == 0) {
        if (nu_train[i] > alpha) ++wrong0;
      } else {
        if (nu_train[i] <= alpha) ++wrong1;
      }
    }
    const double g0 = n0 > 0 ? static_cast<double>(n0 - wrong0) / n0 : 0.0;
    const double g1 = n1 > 0 ? static_cast<double>(wrong1) / n1 : 0.0;
    const double error = pi0 * (1.0 - g0) + pi1 * g1;
    const bool better =
        error < best_error ||
        (error == best_error &&
         (std::abs(alpha - 0.5) < std::abs(best_alpha - 0.5) ||
          (std::abs(alpha - 0.5) == std::abs(best_alpha - 0.5) && alpha < best_alpha)));
    if (better) {
      best_error = error;
      best_alpha = alpha;
    }
  }
  return best_alpha;
}

std::vector<std::pair<int, double>> feature_ranking(const RaseModel& model) {
  std::vector<std::pair<int, double>> ranking;
  ranking.reserve(static_cast<size_t>(model.eta.size()));
  for (int l = 0; l < model.eta.size(); ++l) ranking.emplace_back(l, model.eta[l]);
  std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  return ranking;
}

double misclassification_rate(const RaseModel& model, const LabeledDataset& test, int threads) {
  const Eigen::VectorXi pred = predict(model, test.features, threads);
  int errors = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    if (pred[i] != test.labels[i]) ++errors;
  }
  return static_cast<double>(errors) / static_cast<double>(test.n());
}

}  // namespace rase
