#pragma once

#include <Eigen/Dense>
#include <optional>
#include <utility>

#include "rase/dataset.hpp"

namespace rase {

// Per-class Gaussian MLE summary of a restricted dataset. The pooled
// covariance divides by n; the per-class ones divide by n_r.
struct GaussianSummary {
  Eigen::VectorXd mean0;
  Eigen::VectorXd mean1;
  std::optional<Eigen::MatrixXd> cov_pooled;
  std::optional<Eigen::MatrixXd> cov0;
  std::optional<Eigen::MatrixXd> cov1;
  double pi0_hat = 0.0;
  double pi1_hat = 0.0;
};

struct SpdFactorization {
  Eigen::MatrixXd inverse;
  double log_det = 0.0;
  double ridge_used = 0.0;  // absolute ridge added to the diagonal, if any
};

std::pair<Eigen::VectorXd, Eigen::VectorXd> class_means(const LabeledDataset& restricted,
                                                        const ClassSplit& split);

Eigen::MatrixXd pooled_covariance_mle(const LabeledDataset& restricted, const ClassSplit& split,
                                      const Eigen::VectorXd& mean0, const Eigen::VectorXd& mean1);

Eigen::MatrixXd class_covariance_mle(const LabeledDataset& restricted, const ClassSplit& split,
                                     const Eigen::VectorXd& mean_r, int class_r);

// Cholesky inverse + log-determinant with an escalating ridge
// (lambda * mean diagonal for lambda in {1e-10, 1e-8, 1e-6}) before giving up.
// Empty result means the caller should reject the subspace.
std::optional<SpdFactorization> try_spd_inverse_logdet(const Eigen::MatrixXd& m);

// Throwing wrapper: SingularMatrix if all ridge levels fail.
SpdFactorization spd_inverse_logdet(const Eigen::MatrixXd& m);

double digamma(double x);
double trigamma(double x);
double log_gamma(double x);

// Distance from each row to its k-th nearest neighbor among the other rows of
// `points`. Exact brute force; ties broken by row index.
Eigen::VectorXd kth_nn_distance_within(const Eigen::MatrixXd& points, int k);

// Same, but neighbors come from `references` and no row is excluded.
Eigen::VectorXd kth_nn_distance_between(const Eigen::MatrixXd& queries,
                                        const Eigen::MatrixXd& references, int k);

namespace detail {

// Shared k-smallest scan over a column of squared distances; (d2, index)
// lexicographic order makes neighbor ranking deterministic under ties.
// Writes the k smallest (excluding `exclude` when >= 0) into d2_out/idx_out.
void k_smallest_sqdist(const double* sq_norms, const double* gram_col, double self_sq_norm,
                       int count, int exclude, int k, double* d2_out, int* idx_out);

}  // namespace detail

}  // namespace rase
