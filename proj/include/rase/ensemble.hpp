#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rase/base.hpp"
#include "rase/criteria.hpp"
#include "rase/dataset.hpp"

namespace rase {

struct EnsembleConfig {
  int b1 = 200;                 // weak learners
  int b2 = 500;                 // candidate subspaces per learner
  int d_max = 0;                // subspace size cap D; 0 = data-driven default
  BaseClassifier base;
  CriterionConfig criterion;
  int iterations = 0;           // T; 0 runs the plain algorithm
  double c0 = 0.1;              // weight floor constant of the iterative scheme
  uint64_t seed = 0;
  int threads = 1;
};

// D defaults to min(p, floor(sqrt(n))); the QDA base uses per-class counts.
int default_subspace_cap(const EnsembleConfig& config, int n, int n0, int n1, int p);

struct RaseModel {
  std::vector<TrainedLearner> learners;
  double alpha_hat = 0.5;
  Eigen::VectorXd eta;
  EnsembleConfig config;
  int n_features = 0;
};

// Algorithm: for each of B1 learners draw B2 subspaces, keep the criterion
// minimizer, fit the base classifier on it; then tune the vote threshold on
// the training set. iterations > 0 reruns the loop with selection-frequency
// weighted sampling. Learner work is keyed by (iteration, learner, candidate)
// RNG substreams, so results are identical for any thread count.
RaseModel fit(const LabeledDataset& dataset, EnsembleConfig config);

// Same algorithm without any OpenMP constructs; kept as the reference the
// parallel path is checked against.
RaseModel fit_reference(const LabeledDataset& dataset, EnsembleConfig config);

// Alias matching the two-step description of the iterative method;
// config.iterations must be >= 1.
RaseModel fit_iterative(const LabeledDataset& dataset, EnsembleConfig config);

// Vote fraction nu in [0, 1] for each row of a full-p matrix.
Eigen::VectorXd predict_scores(const RaseModel& model, const Eigen::MatrixXd& x, int threads = 1);

double predict_score(const RaseModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Label 1 iff nu > alpha_hat (strict).
Eigen::VectorXi predict(const RaseModel& model, const Eigen::MatrixXd& x, int threads = 1);

int predict_one(const RaseModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

// Threshold minimizing the empirical weighted error over the midpoints of
// consecutive distinct vote fractions plus {0, 1/2, 1}; ties resolve toward
// 1/2, then toward the smaller candidate.
double select_threshold(const Eigen::VectorXd& nu_train, const Eigen::VectorXi& labels,
                        double pi0, double pi1);

// (feature, eta) pairs sorted by eta descending, ties by feature index.
// Features are 0-based here; I/O layers convert.
std::vector<std::pair<int, double>> feature_ranking(const RaseModel& model);

double misclassification_rate(const RaseModel& model, const LabeledDataset& test, int threads = 1);

}  // namespace rase
