#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rase/base.hpp"
#include "rase/dataset.hpp"

namespace rase {

enum class CriterionType { RicParametric, RicNonparametric, TrainingError, LooCv };

const char* criterion_type_name(CriterionType type);

struct CriterionConfig {
  CriterionType type = CriterionType::RicParametric;
  double c_n = -1.0;  // penalty scale; negative means the log(n)/n default
  int k0 = 0;         // nonparametric neighbor orders; 0 means floor(sqrt(n_r))
  int k1 = 0;
};

inline double default_penalty(int n) { return std::log(static_cast<double>(n)) / n; }

// RIC closed forms. All return +infinity instead of throwing when a
// covariance stays singular through ridge escalation or a Gamma fit fails,
// so ensemble fitting can treat bad subspaces as rejected candidates.
double ric_lda(const LabeledDataset& restricted, const ClassSplit& split, double c_n);
double ric_qda(const LabeledDataset& restricted, const ClassSplit& split, double c_n);
double ric_gamma(const LabeledDataset& restricted, const ClassSplit& split, double c_n);

// KL(Gamma(shape, scale) || Gamma(shape2, scale2)), closed form.
double gamma_kl_divergence(double shape, double scale, double shape2, double scale2);

// Nearest-neighbor RIC. `deg` is the degree-of-freedom multiplier on c_n
// (|S| + 1 when paired with the LDA base). Throws KTooLarge on invalid k.
double ric_nonparametric(const LabeledDataset& restricted, const ClassSplit& split, double c_n,
                         int k0, int k1, double deg);

// One direction of the nearest-neighbor divergence estimate,
// KL(f_queries || f_references); exposed for the hand-checkable examples.
double nonparametric_kl(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& references,
                        int k_within, int k_cross);

// In-sample misclassification rate of the base fit; FitFailure becomes +inf.
double training_error(const LabeledDataset& restricted, const ClassSplit& split,
                      const BaseClassifier& base);

// Leave-one-out error: neighbor-exclusion over the k grid for kNN, refit per
// held-out row otherwise.
double loo_cv_error(const LabeledDataset& restricted, const ClassSplit& split,
                    const BaseClassifier& base);

// Scratch buffers reused across candidate evaluations (one per thread).
struct ScorerWorkspace {
  Eigen::VectorXd delta;
  Eigen::MatrixXd slice0;
  Eigen::MatrixXd slice1;
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x1;
  Eigen::MatrixXd gram;
  Eigen::MatrixXd gram_cross;
  Eigen::MatrixXd restricted;
};

// Criterion evaluation bound to one dataset. Sufficient statistics that do
// not depend on the candidate (full-p means and covariances, per-feature
// Gamma divergences) are computed once, so one candidate costs O(|S|^3) for
// the parametric criteria instead of a fresh pass over the data. Scores agree
// with the standalone operations above up to floating-point noise.
class SubspaceScorer {
 public:
  SubspaceScorer(const LabeledDataset& data, const ClassSplit& split, const BaseClassifier& base,
                 const CriterionConfig& criterion);

  double score(const Subspace& s, ScorerWorkspace& ws) const;

  int resolved_k0() const { return k0_; }
  int resolved_k1() const { return k1_; }
  double penalty_scale() const { return c_n_; }

 private:
  double score_ric_lda(const Subspace& s, ScorerWorkspace& ws) const;
  double score_ric_qda(const Subspace& s, ScorerWorkspace& ws) const;
  double score_ric_gamma(const Subspace& s) const;
  double score_nonparametric(const Subspace& s, ScorerWorkspace& ws) const;

  const LabeledDataset& data_;
  const ClassSplit& split_;
  BaseClassifier base_;
  CriterionType type_;
  double c_n_ = 0.0;
  int k0_ = 0;
  int k1_ = 0;

  Eigen::VectorXd mean0_full_;
  Eigen::VectorXd mean1_full_;
  Eigen::MatrixXd pooled_full_;
  Eigen::MatrixXd cov0_full_;
  Eigen::MatrixXd cov1_full_;
  Eigen::VectorXd gamma_kl_weight_;
  Eigen::MatrixXd class0_rows_;
  Eigen::MatrixXd class1_rows_;
};

// Argmin with deterministic tie-breaking: score, then subspace size, then
// lexicographic order. When every score is +inf the smallest candidate wins.
int pick_best_candidate(const std::vector<Subspace>& candidates,
                        const std::vector<double>& scores);

struct SelectionResult {
  Subspace winner;
  double score = 0.0;
};

SelectionResult select_optimal(const LabeledDataset& data, const ClassSplit& split,
                               const std::vector<Subspace>& candidates,
                               const BaseClassifier& base, const CriterionConfig& criterion);

}  // namespace rase
