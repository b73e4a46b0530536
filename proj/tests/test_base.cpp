#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rase/base.hpp"
#include "rase/numerics.hpp"
#include "rase/rng.hpp"

using namespace rase;

TEST_SUITE_BEGIN("base");

namespace {

LabeledDataset dataset_from(Eigen::MatrixXd f, std::vector<int> y) {
  Eigen::VectorXi labels(static_cast<Eigen::Index>(y.size()));
  for (size_t i = 0; i < y.size(); ++i) labels[static_cast<Eigen::Index>(i)] = y[i];
  return LabeledDataset::create(std::move(f), std::move(labels));
}

BaseClassifier base_of(BaseKind kind) {
  BaseClassifier base;
  base.kind = kind;
  return base;
}

}  // namespace

TEST_CASE("LDA separates 1-d classes and is zero at the midpoint") {
  Eigen::MatrixXd f(6, 1);
  f << -2.0, -1.6, -1.8, 2.1, 1.9, 2.0;
  auto data = dataset_from(f, {0, 0, 0, 1, 1, 1});
  const auto split = class_split(data);
  const auto learner = fit_base(base_of(BaseKind::Lda), data, split, Subspace{{0}});
  int errors = 0;
  for (int i = 0; i < 6; ++i) {
    errors += predict_label(learner, f.row(i).transpose()) != data.labels[i] ? 1 : 0;
  }
  CHECK(errors == 0);

  const auto& params = std::get<LdaParams>(learner.params);
  Eigen::VectorXd midpoint = 0.5 * (params.mean0 + params.mean1);
  CHECK(decision_score(learner, midpoint) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("LDA score is invariant under invertible affine maps") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto data = oracle::random_dataset(40, 3, gen);
    const auto split = class_split(data);
    const auto learner = fit_base(base_of(BaseKind::Lda), data, split, Subspace{{0, 1, 2}});

    Eigen::MatrixXd map = oracle::random_matrix(3, 3, gen) + 3.0 * Eigen::MatrixXd::Identity(3, 3);
    Eigen::VectorXd shift = oracle::random_matrix(3, 1, gen);
    LabeledDataset mapped = data;
    mapped.features = (data.features * map.transpose()).rowwise() + shift.transpose();
    const auto mapped_learner = fit_base(base_of(BaseKind::Lda), mapped, split, Subspace{{0, 1, 2}});

    for (int i = 0; i < 8; ++i) {
      const Eigen::VectorXd x = data.features.row(i).transpose();
      const Eigen::VectorXd tx = map * x + shift;
      CHECK(decision_score(learner, x) ==
            doctest::Approx(decision_score(mapped_learner, tx)).epsilon(1e-6));
    }
  }
}

TEST_CASE("QDA score equals the plug-in Gaussian log ratio") {
  std::mt19937_64 gen(55);
  const auto data = oracle::random_dataset(60, 3, gen);
  const auto split = class_split(data);
  const auto learner = fit_base(base_of(BaseKind::Qda), data, split, Subspace{{0, 1, 2}});
  const auto& q = std::get<QdaParams>(learner.params);

  // The oracle evaluates the two fitted Gaussian log densities directly.
  const Eigen::MatrixXd cov0 = class_covariance_mle(data, split, q.mean0, 0);
  const Eigen::MatrixXd cov1 = class_covariance_mle(data, split, q.mean1, 1);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd x = data.features.row(i).transpose();
    const double expected = std::log(split.pi1_hat / split.pi0_hat) +
                            oracle::gaussian_logpdf(x, q.mean1, cov1) -
                            oracle::gaussian_logpdf(x, q.mean0, cov0);
    CHECK(decision_score(learner, x) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("QDA with equal class moments reproduces the LDA score") {
  std::mt19937_64 gen(77);
  // Mirrored classes: identical sample covariance per class by construction.
  const Eigen::MatrixXd block = oracle::random_matrix(20, 2, gen);
  Eigen::MatrixXd f(40, 2);
  f.topRows(20) = block;
  f.bottomRows(20) = block.rowwise() + Eigen::RowVector2d(2.5, -1.0);
  std::vector<int> y(40, 0);
  std::fill(y.begin() + 20, y.end(), 1);
  const auto data = dataset_from(f, y);
  const auto split = class_split(data);

  const auto lda = fit_base(base_of(BaseKind::Lda), data, split, Subspace{{0, 1}});
  const auto qda = fit_base(base_of(BaseKind::Qda), data, split, Subspace{{0, 1}});
  for (int i = 0; i < 12; ++i) {
    const Eigen::VectorXd x = data.features.row(i).transpose();
    CHECK(decision_score(qda, x) == doctest::Approx(decision_score(lda, x)).epsilon(1e-8));
  }
}

TEST_CASE("kNN majority vote hand example") {
  Eigen::MatrixXd f(5, 1);
  f << 0.0, 0.1, 0.2, 5.0, -5.0;
  auto data = dataset_from(f, {1, 1, 0, 0, 1});
  const auto split = class_split(data);
  BaseClassifier base = base_of(BaseKind::Knn);
  base.k_grid = {3};
  const auto learner = fit_base(base, data, split, Subspace{{0}});
  // Query at 0.05: nearest three are rows 0, 1, 2 with labels {1, 1, 0}.
  Eigen::VectorXd x(1);
  x << 0.05;
  CHECK(decision_score(learner, x) == doctest::Approx(2.0 / 3.0 - 0.5));
  CHECK(predict_label(learner, x) == 1);
}

TEST_CASE("kNN fit picks the grid k with the lowest LOO error") {
  std::mt19937_64 gen(13);
  const auto data = oracle::random_dataset(60, 2, gen, 2.5);
  const auto split = class_split(data);
  const auto learner = fit_base(base_of(BaseKind::Knn), data, split, Subspace{{0, 1}});
  const auto& params = std::get<KnnParams>(learner.params);
  double best = 2.0;
  int best_k = 0;
  for (int k : {3, 5, 7, 9, 11}) {
    const double err = loo_knn_error(data.features, data.labels, k);
    if (err < best) {
      best = err;
      best_k = k;
    }
  }
  CHECK(params.k == best_k);
}

TEST_CASE("loo_knn_error trivia and oracle comparison") {
  Eigen::MatrixXd clusters(8, 1);
  clusters << 0, 0.1, 0.2, 0.3, 10, 10.1, 10.2, 10.3;
  auto data = dataset_from(clusters, {0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(loo_knn_error(data.features, data.labels, 1) == 0.0);

  auto same = dataset_from(clusters, {0, 0, 0, 0, 0, 0, 0, 1});
  Eigen::VectorXi all_zero = Eigen::VectorXi::Zero(8);
  CHECK(loo_knn_error(clusters, all_zero, 3) == 0.0);

  CHECK_THROWS_AS(loo_knn_error(clusters, all_zero, 8), RaseError);

  // Brute-force recount on a random instance.
  std::mt19937_64 gen(3);
  const auto random_data = oracle::random_dataset(40, 2, gen, 1.0);
  const int k = 3;
  int brute_errors = 0;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::pair<double, int>> dist;
    for (int j = 0; j < 40; ++j) {
      if (j == i) continue;
      dist.emplace_back(
          (random_data.features.row(i) - random_data.features.row(j)).squaredNorm(), j);
    }
    std::sort(dist.begin(), dist.end());
    int ones = 0;
    for (int t = 0; t < k; ++t) ones += random_data.labels[dist[static_cast<size_t>(t)].second];
    const int pred = ones * 2 > k ? 1 : 0;
    brute_errors += pred != random_data.labels[i] ? 1 : 0;
  }
  CHECK(loo_knn_error(random_data.features, random_data.labels, k) ==
        doctest::Approx(brute_errors / 40.0));
}

TEST_CASE("even-k ties resolve by prior, then class 0") {
  // 1-d points 0..3 with alternating labels and k = 2: rows 1-3 all
  // misclassify under the tie rule (equal priors push ties to class 0).
  Eigen::MatrixXd f(4, 1);
  f << 0, 1, 2, 3;
  Eigen::VectorXi y(4);
  y << 0, 1, 0, 1;
  CHECK(loo_knn_error(f, y, 2) == doctest::Approx(0.75));
}

TEST_CASE("gamma_mle recovers parameters and satisfies the score equation") {
  SubstreamRng rng(2024, 9, 9, 9);
  std::vector<double> sample(10000);
  for (auto& v : sample) v = rng.next_gamma(2.0, 1.5);
  const auto [shape, scale] = gamma_mle(sample);
  CHECK(shape == doctest::Approx(2.0).epsilon(0.05));
  CHECK(scale == doctest::Approx(1.5).epsilon(0.05));

  // Score equation residual: log(a) - digamma(a) - (log mean - mean log).
  double mean = 0.0, mean_log = 0.0;
  for (double v : sample) {
    mean += v;
    mean_log += std::log(v);
  }
  mean /= sample.size();
  mean_log /= sample.size();
  const double residual = std::log(shape) - digamma(shape) - (std::log(mean) - mean_log);
  CHECK(std::abs(residual) < 1e-8);
  CHECK(shape * scale == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("gamma_mle moment initializer identities hold at one Newton fixed point") {
  // For a sample whose moment estimate already solves the score equation the
  // first Newton step is below tolerance; verify with a nearly-exact case.
  std::vector<double> tiny = {1.0, 1.0, 1.0};
  CHECK_THROWS_AS(gamma_mle(tiny), RaseError);  // zero variance
  std::vector<double> with_zero = {0.0, 1.0, 2.0};
  CHECK_THROWS_AS(gamma_mle(with_zero), RaseError);
  std::vector<double> single = {2.0};
  CHECK_THROWS_AS(gamma_mle(single), RaseError);
}

TEST_CASE("gamma fit on simulated marginals is consistent") {
  SubstreamRng rng(7, 1, 2, 3);
  const int n = 10000;
  Eigen::MatrixXd f(n, 1);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    f(i, 0) = y[i] == 0 ? rng.next_gamma(2.0, 1.5) : rng.next_gamma(3.0, 0.5);
  }
  auto data = LabeledDataset::create(f, y);
  const auto split = class_split(data);
  const auto learner = fit_base(base_of(BaseKind::Gamma), data, split, Subspace{{0}});
  const auto& g = std::get<GammaParams>(learner.params);
  CHECK(g.shape0[0] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(g.scale0[0] == doctest::Approx(1.5).epsilon(0.05));
  CHECK(g.shape1[0] == doctest::Approx(3.0).epsilon(0.05));
  CHECK(g.scale1[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("gamma classifier with identical marginals votes by prior") {
  Eigen::MatrixXd f(8, 2);
  f << 1, 2, 2, 1, 3, 5, 4, 3, 1, 2, 2, 1, 3, 5, 4, 3;  // class blocks identical
  auto data = dataset_from(f, {0, 0, 0, 1, 1, 1, 1, 1});
  GammaParams params;
  params.shape0 = params.shape1 = Eigen::Vector2d(2.0, 3.0);
  params.scale0 = params.scale1 = Eigen::Vector2d(1.0, 0.5);
  params.log_prior_ratio = std::log(5.0 / 3.0);
  TrainedLearner learner{Subspace{{0, 1}}, params};
  for (int i = 0; i < 8; ++i) {
    CHECK(decision_score(learner, f.row(i).transpose()) ==
          doctest::Approx(params.log_prior_ratio));
  }
}

TEST_CASE("gamma classifier scores -inf on negative coordinates") {
  GammaParams params;
  params.shape0 = params.shape1 = Eigen::VectorXd::Ones(1);
  params.scale0 = params.scale1 = Eigen::VectorXd::Ones(1);
  TrainedLearner learner{Subspace{{0}}, params};
  Eigen::VectorXd x(1);
  x << -0.5;
  CHECK(decision_score(learner, x) == -std::numeric_limits<double>::infinity());
  CHECK(predict_label(learner, x) == 0);
}

TEST_CASE("fit failures carry the FitFailure kind") {
  Eigen::MatrixXd f(4, 2);
  f << 1, -1, 2, 3, 4, 5, 6, 7;
  auto data = dataset_from(f, {0, 0, 1, 1});
  const auto split = class_split(data);
  try {
    fit_base(base_of(BaseKind::Gamma), data, split, Subspace{{0, 1}});
    FAIL("expected FitFailure");
  } catch (const RaseError& e) {
    CHECK(e.kind() == ErrorKind::FitFailure);
  }

  // QDA with one row in a class cannot produce a usable covariance.
  std::mt19937_64 gen(1);
  Eigen::MatrixXd g = oracle::random_matrix(3, 2, gen);
  auto tiny = dataset_from(g, {0, 1, 1});
  CHECK_THROWS_AS(fit_base(base_of(BaseKind::Qda), tiny, class_split(tiny), Subspace{{0, 1}}),
                  RaseError);
}

TEST_CASE("decision_score validates dimensions") {
  std::mt19937_64 gen(2);
  const auto data = oracle::random_dataset(30, 2, gen);
  const auto learner =
      fit_base(base_of(BaseKind::Lda), data, class_split(data), Subspace{{0, 1}});
  Eigen::VectorXd wrong(3);
  wrong.setZero();
  CHECK_THROWS_AS(decision_score(learner, wrong), RaseError);
}

TEST_SUITE_END();
