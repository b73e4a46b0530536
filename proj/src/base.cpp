#include "rase/base.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rase/error.hpp"
#include "rase/numerics.hpp"

namespace rase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Guards log(0) from user-supplied zeros; model data is positive a.s.
inline double safe_log(double x) { return std::log(std::max(x, 1e-300)); }

int knn_vote(const int* neighbor_labels, int k, double pi0, double pi1) {
  int ones = 0;
  for (int i = 0; i < k; ++i) ones += neighbor_labels[i];
  const int zeros = k - ones;
  if (ones > zeros) return 1;
  if (ones < zeros) return 0;
  return pi1 > pi0 ? 1 : 0;
}

struct LooGridResult {
  double best_error = kInf;
  int best_k = 0;
};

LooGridResult loo_knn_grid_impl(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels,
                                const std::vector<int>& k_grid) {
  const int n = static_cast<int>(points.rows());
  int k_max = 0;
  for (int k : k_grid) {
    if (k >= 1 && k <= n - 1) k_max = std::max(k_max, k);
  }
  if (k_max == 0) {
    raise(ErrorKind::KTooLarge, "no grid entry satisfies k <= n-1 with n = " + std::to_string(n));
  }
  const int n1 = labels.sum();
  const double pi1 = static_cast<double>(n1) / n;
  const double pi0 = 1.0 - pi1;

  Eigen::MatrixXd gram(n, n);
  gram.noalias() = points * points.transpose();
  Eigen::VectorXd sq_norms = gram.diagonal();

  std::vector<double> d2(static_cast<size_t>(k_max));
  std::vector<int> idx(static_cast<size_t>(k_max));
  std::vector<int> neighbor_labels(static_cast<size_t>(k_max));
  std::vector<int> errors(k_grid.size(), 0);

  for (int i = 0; i < n; ++i) {
    detail::k_smallest_sqdist(sq_norms.data(), gram.col(i).data(), sq_norms[i], n, i, k_max,
                              d2.data(), idx.data());
    for (int t = 0; t < k_max; ++t) neighbor_labels[static_cast<size_t>(t)] = labels[idx[static_cast<size_t>(t)]];
    for (size_t g = 0; g < k_grid.size(); ++g) {
      const int k = k_grid[g];
      if (k < 1 || k > n - 1) continue;
      if (knn_vote(neighbor_labels.data(), k, pi0, pi1) != labels[i]) ++errors[g];
    }
  }

  LooGridResult result;
  for (size_t g = 0; g < k_grid.size(); ++g) {
    const int k = k_grid[g];
    if (k < 1 || k > n - 1) continue;
    const double err = static_cast<double>(errors[g]) / n;
    if (err < result.best_error || (err == result.best_error && k < result.best_k)) {
      result.best_error = err;
      result.best_k = k;
    }
  }
  return result;
}

TrainedLearner fit_lda(const LabeledDataset& restricted, const ClassSplit& split,
                       const Subspace& subspace) {
  auto [mean0, mean1] = class_means(restricted, split);
  Eigen::MatrixXd cov = pooled_covariance_mle(restricted, split, mean0, mean1);
  auto fact = try_spd_inverse_logdet(cov);
  if (!fact) raise(ErrorKind::FitFailure, "singular pooled covariance after ridge escalation");
  LdaParams params;
  params.mean0 = std::move(mean0);
  params.mean1 = std::move(mean1);
  params.cov_inv = std::move(fact->inverse);
  params.log_prior_ratio = std::log(split.pi1_hat / split.pi0_hat);
  return TrainedLearner{subspace, std::move(params)};
}

TrainedLearner fit_qda(const LabeledDataset& restricted, const ClassSplit& split,
                       const Subspace& subspace) {
  if (split.n0 < 2 || split.n1 < 2) {
    raise(ErrorKind::FitFailure, "QDA needs at least two rows per class");
  }
  auto [mean0, mean1] = class_means(restricted, split);
  auto fact0 = try_spd_inverse_logdet(class_covariance_mle(restricted, split, mean0, 0));
  auto fact1 = try_spd_inverse_logdet(class_covariance_mle(restricted, split, mean1, 1));
  if (!fact0 || !fact1) {
    raise(ErrorKind::FitFailure, "singular class covariance after ridge escalation");
  }
  QdaParams params;
  params.mean0 = std::move(mean0);
  params.mean1 = std::move(mean1);
  params.cov0_inv = std::move(fact0->inverse);
  params.cov1_inv = std::move(fact1->inverse);
  params.logdet0 = fact0->log_det;
  params.logdet1 = fact1->log_det;
  params.log_prior_ratio = std::log(split.pi1_hat / split.pi0_hat);
  return TrainedLearner{subspace, std::move(params)};
}

TrainedLearner fit_knn(const BaseClassifier& base, const LabeledDataset& restricted,
                       const ClassSplit& split, const Subspace& subspace) {
  LooGridResult grid;
  try {
    grid = loo_knn_grid_impl(restricted.features, restricted.labels, base.k_grid);
  } catch (const RaseError& e) {
    raise(ErrorKind::FitFailure, e.what());
  }
  KnnParams params;
  params.k = grid.best_k;
  params.train = restricted.features;
  params.labels = restricted.labels;
  params.pi0 = split.pi0_hat;
  params.pi1 = split.pi1_hat;
  return TrainedLearner{subspace, std::move(params)};
}

TrainedLearner fit_gamma(const LabeledDataset& restricted, const ClassSplit& split,
                         const Subspace& subspace) {
  const int d = restricted.p();
  if ((restricted.features.array() < 0.0).any()) {
    raise(ErrorKind::FitFailure, "Gamma base requires nonnegative feature values");
  }
  GammaParams params;
  params.shape0.resize(d);
  params.scale0.resize(d);
  params.shape1.resize(d);
  params.scale1.resize(d);
  std::vector<double> values;
  for (int j = 0; j < d; ++j) {
    for (int r = 0; r < 2; ++r) {
      const auto& rows = r == 0 ? split.indices0 : split.indices1;
      values.clear();
      values.reserve(rows.size());
      for (int i : rows) values.push_back(restricted.features(i, j));
      try {
        auto [shape, scale] = gamma_mle(values);
        if (r == 0) {
          params.shape0[j] = shape;
          params.scale0[j] = scale;
        } else {
          params.shape1[j] = shape;
          params.scale1[j] = scale;
        }
      } catch (const RaseError& e) {
        raise(ErrorKind::FitFailure,
              std::string("Gamma MLE failed on feature ") + std::to_string(j + 1) + ": " + e.what());
      }
    }
  }
  params.log_prior_ratio = std::log(split.pi1_hat / split.pi0_hat);
  return TrainedLearner{subspace, std::move(params)};
}

double gamma_log_density_ratio(const GammaParams& g, const Eigen::Ref<const Eigen::VectorXd>& x) {
  double score = g.log_prior_ratio;
  for (int j = 0; j < x.size(); ++j) {
    const double v = x[j];
    if (v < 0.0) return -kInf;
    const double a0 = g.shape0[j], b0 = g.scale0[j];
    const double a1 = g.shape1[j], b1 = g.scale1[j];
    const double log1 = -a1 * std::log(b1) - log_gamma(a1) + (a1 - 1.0) * safe_log(v) - v / b1;
    const double log0 = -a0 * std::log(b0) - log_gamma(a0) + (a0 - 1.0) * safe_log(v) - v / b0;
    score += log1 - log0;
  }
  return score;
}

}  // namespace

const char* base_kind_name(BaseKind kind) {
  switch (kind) {
    case BaseKind::Lda: return "lda";
    case BaseKind::Qda: return "qda";
    case BaseKind::Knn: return "knn";
    case BaseKind::Gamma: return "gamma";
  }
  return "?";
}

TrainedLearner fit_base(const BaseClassifier& base, const LabeledDataset& restricted,
                        const ClassSplit& split, const Subspace& subspace) {
  if (restricted.p() != subspace.size()) {
    raise(ErrorKind::DimensionMismatch, "restricted width does not match subspace size");
  }
  switch (base.kind) {
    case BaseKind::Lda: return fit_lda(restricted, split, subspace);
    case BaseKind::Qda: return fit_qda(restricted, split, subspace);
    case BaseKind::Knn: return fit_knn(base, restricted, split, subspace);
    case BaseKind::Gamma: return fit_gamma(restricted, split, subspace);
  }
  raise(ErrorKind::FitFailure, "unknown base classifier");
}

double decision_score(const TrainedLearner& learner, const Eigen::Ref<const Eigen::VectorXd>& x_s) {
  if (x_s.size() != learner.subspace.size()) {
    raise(ErrorKind::DimensionMismatch, "point dimension does not match learner subspace");
  }
  if (const auto* lda = std::get_if<LdaParams>(&learner.params)) {
    // L_S(x) = log(pi1/pi0) + (x - (mu0 + mu1)/2)^T Sigma^-1 (mu1 - mu0)
    Eigen::VectorXd centered = x_s - 0.5 * (lda->mean0 + lda->mean1);
    return lda->log_prior_ratio + centered.dot(lda->cov_inv * (lda->mean1 - lda->mean0));
  }
  if (const auto* qda = std::get_if<QdaParams>(&learner.params)) {
    Eigen::VectorXd c0 = x_s - qda->mean0;
    Eigen::VectorXd c1 = x_s - qda->mean1;
    return qda->log_prior_ratio - 0.5 * (qda->logdet1 - qda->logdet0) -
           0.5 * c1.dot(qda->cov1_inv * c1) + 0.5 * c0.dot(qda->cov0_inv * c0);
  }
  if (const auto* knn = std::get_if<KnnParams>(&learner.params)) {
    const int n = static_cast<int>(knn->train.rows());
    Eigen::VectorXd sq_norms = knn->train.rowwise().squaredNorm();
    Eigen::VectorXd gram_col = knn->train * x_s;
    std::vector<double> d2(static_cast<size_t>(knn->k));
    std::vector<int> idx(static_cast<size_t>(knn->k));
    detail::k_smallest_sqdist(sq_norms.data(), gram_col.data(), x_s.squaredNorm(), n, -1, knn->k,
                              d2.data(), idx.data());
    int ones = 0;
    for (int t = 0; t < knn->k; ++t) ones += knn->labels[idx[static_cast<size_t>(t)]];
    return static_cast<double>(ones) / knn->k - 0.5;
  }
  return gamma_log_density_ratio(std::get<GammaParams>(learner.params), x_s);
}

int predict_label(const TrainedLearner& learner, const Eigen::Ref<const Eigen::VectorXd>& x_s) {
  const double score = decision_score(learner, x_s);
  if (score > 0.0) return 1;
  if (score == 0.0 && learner.kind() == BaseKind::Knn) {
    const auto& knn = std::get<KnnParams>(learner.params);
    return knn.pi1 > knn.pi0 ? 1 : 0;
  }
  return 0;
}

void learner_votes(const TrainedLearner& learner, const Eigen::MatrixXd& x_full,
                   uint8_t* votes_out, Eigen::MatrixXd& restricted_scratch) {
  const int m = static_cast<int>(x_full.rows());
  restrict_into(x_full, learner.subspace, restricted_scratch);
  const Eigen::MatrixXd& xs = restricted_scratch;

  if (const auto* lda = std::get_if<LdaParams>(&learner.params)) {
    Eigen::VectorXd direction = lda->cov_inv * (lda->mean1 - lda->mean0);
    const double offset =
        lda->log_prior_ratio - 0.5 * (lda->mean0 + lda->mean1).dot(direction);
    Eigen::VectorXd scores = xs * direction;
    for (int i = 0; i < m; ++i) votes_out[i] = scores[i] + offset > 0.0 ? 1 : 0;
    return;
  }
  if (const auto* qda = std::get_if<QdaParams>(&learner.params)) {
    Eigen::MatrixXd c0 = xs.rowwise() - qda->mean0.transpose();
    Eigen::MatrixXd c1 = xs.rowwise() - qda->mean1.transpose();
    Eigen::VectorXd q0 = ((c0 * qda->cov0_inv).array() * c0.array()).rowwise().sum();
    Eigen::VectorXd q1 = ((c1 * qda->cov1_inv).array() * c1.array()).rowwise().sum();
    const double offset = qda->log_prior_ratio - 0.5 * (qda->logdet1 - qda->logdet0);
    for (int i = 0; i < m; ++i) {
      votes_out[i] = offset - 0.5 * q1[i] + 0.5 * q0[i] > 0.0 ? 1 : 0;
    }
    return;
  }
  if (const auto* knn = std::get_if<KnnParams>(&learner.params)) {
    const int n = static_cast<int>(knn->train.rows());
    Eigen::VectorXd train_norms = knn->train.rowwise().squaredNorm();
    Eigen::VectorXd query_norms = xs.rowwise().squaredNorm();
    // Chunked gram keeps the buffer modest for large test sets.
    const int chunk = std::max(1, std::min(m, 4 * 1024 * 1024 / std::max(1, n * 8)));
    Eigen::MatrixXd gram(n, chunk);
    std::vector<double> d2(static_cast<size_t>(knn->k));
    std::vector<int> idx(static_cast<size_t>(knn->k));
    for (int start = 0; start < m; start += chunk) {
      const int cols = std::min(chunk, m - start);
      gram.leftCols(cols).noalias() = knn->train * xs.middleRows(start, cols).transpose();
      for (int c = 0; c < cols; ++c) {
        detail::k_smallest_sqdist(train_norms.data(), gram.col(c).data(), query_norms[start + c],
                                  n, -1, knn->k, d2.data(), idx.data());
        int ones = 0;
        for (int t = 0; t < knn->k; ++t) ones += knn->labels[idx[static_cast<size_t>(t)]];
        const int zeros = knn->k - ones;
        int vote;
        if (ones > zeros) vote = 1;
        else if (ones < zeros) vote = 0;
        else vote = knn->pi1 > knn->pi0 ? 1 : 0;
        votes_out[start + c] = static_cast<uint8_t>(vote);
      }
    }
    return;
  }
  const auto& g = std::get<GammaParams>(learner.params);
  for (int i = 0; i < m; ++i) {
    votes_out[i] = gamma_log_density_ratio(g, xs.row(i).transpose()) > 0.0 ? 1 : 0;
  }
}

std::pair<double, double> gamma_mle(const std::vector<double>& values) {
  const size_t n = values.size();
  if (n < 2) raise(ErrorKind::DegenerateSample, "need at least two values");
  double sum = 0.0, sum_log = 0.0, min_v = kInf, max_v = -kInf;
  for (double v : values) {
    if (!(v > 0.0)) {
      raise(ErrorKind::DegenerateSample, "values must be strictly positive for the log moment");
    }
    sum += v;
    sum_log += std::log(v);
    min_v = std::min(min_v, v);
    max_v = std::max(max_v, v);
  }
  const double mean = sum / n;
  if (max_v - min_v <= 0.0) raise(ErrorKind::DegenerateSample, "sample has zero variance");
  const double s = std::log(mean) - sum_log / n;  // > 0 by Jensen for non-constant samples
  if (!(s > 0.0)) raise(ErrorKind::DegenerateSample, "log-moment gap is not positive");

  double variance = 0.0;
  for (double v : values) variance += (v - mean) * (v - mean);
  variance /= n;
  double shape = mean * mean / variance;  // moment initializer
  if (!(shape > 0.0) || !std::isfinite(shape)) shape = 1.0;

  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const double g = std::log(shape) - digamma(shape) - s;
    const double dg = 1.0 / shape - trigamma(shape);
    double step = g / dg;
    double next = shape - step;
    while (next <= 0.0) {
      step *= 0.5;
      next = shape - step;
    }
    shape = next;
    if (std::abs(step) < 1e-10 || std::abs(step) <= 4.0 * 1e-16 * shape) {
      converged = true;
      break;
    }
  }
  if (!converged) raise(ErrorKind::NonConvergence, "Newton iteration did not converge");
  return {shape, sum / n / shape};
}

double loo_knn_error(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels, int k) {
  const int n = static_cast<int>(points.rows());
  if (k < 1 || k > n - 1) {
    raise(ErrorKind::KTooLarge, "leave-one-out needs 1 <= k <= n-1");
  }
  return loo_knn_grid_impl(points, labels, {k}).best_error;
}

std::pair<double, int> loo_knn_grid(const Eigen::MatrixXd& points, const Eigen::VectorXi& labels,
                                    const std::vector<int>& k_grid) {
  auto result = loo_knn_grid_impl(points, labels, k_grid);
  return {result.best_error, result.best_k};
}

}  // namespace rase
