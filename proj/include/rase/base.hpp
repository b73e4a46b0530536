#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "rase/dataset.hpp"

namespace rase {

enum class BaseKind { Lda, Qda, Knn, Gamma };

const char* base_kind_name(BaseKind kind);

struct BaseClassifier {
  BaseKind kind = BaseKind::Lda;
  std::vector<int> k_grid = {3, 5, 7, 9, 11};  // used by Knn only
};

struct LdaParams {
  Eigen::VectorXd mean0;
  Eigen::VectorXd mean1;
  Eigen::MatrixXd cov_inv;
  double log_prior_ratio = 0.0;  // log(pi1 / pi0)
};

struct QdaParams {
  Eigen::VectorXd mean0;
  Eigen::VectorXd mean1;
  Eigen::MatrixXd cov0_inv;
  Eigen::MatrixXd cov1_inv;
  double logdet0 = 0.0;
  double logdet1 = 0.0;
  double log_prior_ratio = 0.0;
};

struct KnnParams {
  int k = 0;
  Eigen::MatrixXd train;   // rows restricted to the subspace
  Eigen::VectorXi labels;
  double pi0 = 0.0;
  double pi1 = 0.0;
};

struct GammaParams {
  Eigen::VectorXd shape0;
  Eigen::VectorXd scale0;
  Eigen::VectorXd shape1;
  Eigen::VectorXd scale1;
  double log_prior_ratio = 0.0;
};

struct TrainedLearner {
  Subspace subspace;
  std::variant<LdaParams, QdaParams, KnnParams, GammaParams> params;

  BaseKind kind() const {
    switch (params.index()) {
      case 0: return BaseKind::Lda;
      case 1: return BaseKind::Qda;
      case 2: return BaseKind::Knn;
      default: return BaseKind::Gamma;
    }
  }
};

// MLE fit of the chosen base model on an already-restricted dataset.
// For kNN the neighbor count is picked from the grid by leave-one-out error
// (ties toward the smaller k). Throws FitFailure with the reason.
TrainedLearner fit_base(const BaseClassifier& base, const LabeledDataset& restricted,
                        const ClassSplit& split, const Subspace& subspace);

// Signed vote score on one restricted point; the learner votes 1 iff > 0.
// LDA/QDA return the Gaussian log-ratio forms, Gamma the log posterior ratio
// (-inf on a negative coordinate), kNN the neighbor vote fraction minus 1/2.
double decision_score(const TrainedLearner& learner, const Eigen::Ref<const Eigen::VectorXd>& x_s);

// Applies the vote rule, including the even-k kNN tie rule (larger empirical
// prior wins, exact tie goes to class 0).
int predict_label(const TrainedLearner& learner, const Eigen::Ref<const Eigen::VectorXd>& x_s);

// Votes for every row of a full-p matrix; the learner slices its own columns.
// `restricted_scratch` avoids reallocation across learners.
void learner_votes(const TrainedLearner& learner, const Eigen::MatrixXd& x_full,
                   uint8_t* votes_out, Eigen::MatrixXd& restricted_scratch);

// Gamma MLE via Newton on the shape profile likelihood
// log(alpha) - digamma(alpha) = log(mean) - mean(log); scale = mean / shape.
// Starts from the moment estimator. Returns (shape, scale).
std::pair<double, double> gamma_mle(const std::vector<double>& values);

// Leave-one-out error of k-NN on a restricted dataset.
double loo_knn_error(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels, int k);

// One pass over the grid; returns (best error, best k), ties toward smaller k.
// Grid entries exceeding n-1 are skipped; throws KTooLarge if none is usable.
std::pair<double, int> loo_knn_grid(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels,
                                    const std::vector<int>& k_grid);

}  // namespace rase
