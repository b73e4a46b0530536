#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "rase/numerics.hpp"

using namespace rase;

TEST_SUITE_BEGIN("numerics");

TEST_CASE("class means on hand data") {
  Eigen::MatrixXd features(4, 2);
  features << 0, 0, 2, 2, 5, 1, 5, 1;
  Eigen::VectorXi labels(4);
  labels << 0, 0, 1, 1;
  const auto data = LabeledDataset::create(features, labels);
  const auto split = class_split(data);
  const auto [m0, m1] = class_means(data, split);
  CHECK(m0.isApprox(Eigen::Vector2d(1, 1)));
  CHECK(m1.isApprox(Eigen::Vector2d(5, 1)));
}

TEST_CASE("class means match a naive summation oracle") {
  std::mt19937_64 gen(42);
  const auto data = oracle::random_dataset(50, 3, gen);
  const auto split = class_split(data);
  const auto [m0, m1] = class_means(data, split);
  CHECK((m0 - oracle::naive_mean(data.features, split.indices0)).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((m1 - oracle::naive_mean(data.features, split.indices1)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("pooled covariance hand example") {
  // 1-d: class 0 = {0, 2}, class 1 = {1, 3}; each class scatter is 2, so the
  // MLE with the 1/n convention is (2 + 2) / 4 = 1.
  Eigen::MatrixXd features(4, 1);
  features << 0, 2, 1, 3;
  Eigen::VectorXi labels(4);
  labels << 0, 0, 1, 1;
  const auto data = LabeledDataset::create(features, labels);
  const auto split = class_split(data);
  const auto [m0, m1] = class_means(data, split);
  const auto cov = pooled_covariance_mle(data, split, m0, m1);
  CHECK(cov(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("pooled covariance of identical rows is zero") {
  Eigen::MatrixXd features(4, 2);
  features << 3, 1, 3, 1, -2, 5, -2, 5;
  Eigen::VectorXi labels(4);
  labels << 0, 0, 1, 1;
  const auto data = LabeledDataset::create(features, labels);
  const auto split = class_split(data);
  const auto [m0, m1] = class_means(data, split);
  CHECK(pooled_covariance_mle(data, split, m0, m1).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("pooled equals the prior-weighted class covariances") {
  std::mt19937_64 gen(7);
  const auto data = oracle::random_dataset(60, 4, gen);
  const auto split = class_split(data);
  const auto [m0, m1] = class_means(data, split);
  const Eigen::MatrixXd pooled = pooled_covariance_mle(data, split, m0, m1);
  const Eigen::MatrixXd combined = split.pi0_hat * class_covariance_mle(data, split, m0, 0) +
                                   split.pi1_hat * class_covariance_mle(data, split, m1, 1);
  CHECK((pooled - combined).lpNorm<Eigen::Infinity>() < 1e-12);

  const Eigen::MatrixXd naive =
      (oracle::naive_scatter(data.features, split.indices0, m0) +
       oracle::naive_scatter(data.features, split.indices1, m1)) /
      data.n();
  CHECK((pooled - naive).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("spd factorization on closed forms") {
  const auto identity = spd_inverse_logdet(Eigen::Matrix3d::Identity());
  CHECK(identity.log_det == doctest::Approx(0.0));
  CHECK(identity.inverse.isApprox(Eigen::Matrix3d::Identity()));
  CHECK(identity.ridge_used == 0.0);

  Eigen::Matrix2d diag = Eigen::Vector2d(2, 4).asDiagonal();
  const auto fact = spd_inverse_logdet(diag);
  CHECK(fact.log_det == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  CHECK(fact.inverse.isApprox(Eigen::Vector2d(0.5, 0.25).asDiagonal().toDenseMatrix(), 1e-12));
}

TEST_CASE("spd factorization residual and eigenvalue identity on random SPD") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd a = oracle::random_spd(5, gen);
    const auto fact = spd_inverse_logdet(a);
    const Eigen::MatrixXd residual =
        a * fact.inverse - Eigen::MatrixXd::Identity(5, 5);
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-8);

    const Eigen::VectorXd eigenvalues =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues();
    CHECK(fact.log_det == doctest::Approx(eigenvalues.array().log().sum()).epsilon(1e-8));
  }
}

TEST_CASE("spd factorization ridges or rejects singular input") {
  Eigen::Matrix2d singular;
  singular << 1, 1, 1, 1;
  const auto fact = try_spd_inverse_logdet(singular);
  if (fact) CHECK(fact->ridge_used > 0.0);

  Eigen::Matrix2d negative = -Eigen::Matrix2d::Identity();
  CHECK(!try_spd_inverse_logdet(negative));
  CHECK_THROWS_AS(spd_inverse_logdet(negative), RaseError);
}

TEST_CASE("digamma special values and recurrence") {
  constexpr double kEulerGamma = 0.5772156649015328606;
  CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEulerGamma).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-12));
  for (double x = 0.1; x < 50.0; x += 0.7) {
    CHECK(digamma(x + 1.0) - digamma(x) == doctest::Approx(1.0 / x).epsilon(1e-10));
  }
  CHECK_THROWS_AS(digamma(0.0), RaseError);
  CHECK_THROWS_AS(digamma(-1.5), RaseError);
}

TEST_CASE("digamma matches a high-precision series evaluation") {
  // Reference via the recurrence pushed far up plus the asymptotic head in
  // long double arithmetic.
  auto reference = [](double x) {
    long double shift = 0.0L;
    long double xl = x;
    while (xl < 64.0L) {
      shift -= 1.0L / xl;
      xl += 1.0L;
    }
    const long double inv = 1.0L / xl;
    const long double inv2 = inv * inv;
    long double value = std::log(xl) - 0.5L * inv;
    value -= inv2 * (1.0L / 12.0L - inv2 * (1.0L / 120.0L - inv2 * (1.0L / 252.0L)));
    return static_cast<double>(shift + value);
  };
  for (double x : {0.07, 0.9, 2.3, 10.5, 33.0, 150.0}) {
    CHECK(digamma(x) == doctest::Approx(reference(x)).epsilon(1e-10));
  }
}

TEST_CASE("log_gamma against closed forms and std::lgamma") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0));
  CHECK(log_gamma(0.5) == doctest::Approx(std::log(std::sqrt(M_PI))).epsilon(1e-12));
  for (double x : {0.1, 0.73, 1.0, 3.5, 7.3, 11.9, 40.0, 123.4}) {
    CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-10));
  }
  CHECK_THROWS_AS(log_gamma(0.0), RaseError);
}

TEST_CASE("trigamma recurrence") {
  for (double x = 0.2; x < 30.0; x += 0.9) {
    CHECK(trigamma(x) - trigamma(x + 1.0) == doctest::Approx(1.0 / (x * x)).epsilon(1e-10));
  }
}

TEST_CASE("kth_nn_distance_within hand example") {
  Eigen::MatrixXd points(3, 1);
  points << 0, 1, 3;
  const Eigen::VectorXd d1 = kth_nn_distance_within(points, 1);
  CHECK(d1.isApprox(Eigen::Vector3d(1, 1, 2)));
  const Eigen::VectorXd d2 = kth_nn_distance_within(points, 2);  // k = m-1: farthest
  CHECK(d2.isApprox(Eigen::Vector3d(3, 2, 3)));
  CHECK_THROWS_AS(kth_nn_distance_within(points, 3), RaseError);
}

TEST_CASE("kth_nn distances match the brute-force oracle") {
  std::mt19937_64 gen(19);
  const Eigen::MatrixXd points = oracle::random_matrix(30, 2, gen);
  for (int k : {1, 3, 29}) {
    const Eigen::VectorXd fast = kth_nn_distance_within(points, k);
    const Eigen::VectorXd brute = oracle::brute_force_kth_nn(points, points, k, true);
    CHECK((fast - brute).lpNorm<Eigen::Infinity>() == 0.0);
  }
  const Eigen::MatrixXd queries = oracle::random_matrix(17, 2, gen);
  for (int k : {1, 4, 30}) {
    const Eigen::VectorXd fast = kth_nn_distance_between(queries, points, k);
    const Eigen::VectorXd brute = oracle::brute_force_kth_nn(queries, points, k, false);
    CHECK((fast - brute).lpNorm<Eigen::Infinity>() == 0.0);
  }
  CHECK_THROWS_AS(kth_nn_distance_between(queries, points, 31), RaseError);
}

TEST_CASE("kth_nn distances are nondecreasing in k") {
  std::mt19937_64 gen(23);
  const Eigen::MatrixXd points = oracle::random_matrix(25, 3, gen);
  Eigen::VectorXd previous = kth_nn_distance_within(points, 1);
  for (int k = 2; k < 25; ++k) {
    const Eigen::VectorXd current = kth_nn_distance_within(points, k);
    CHECK((current - previous).minCoeff() >= 0.0);
    previous = current;
  }
}

TEST_SUITE_END();
