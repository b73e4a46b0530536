#include "rase/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rase/error.hpp"
#include "rase/numerics.hpp"

namespace rase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDistanceFloor = 1e-12;  // duplicate-point guard before logs

void slice_symmetric(const Eigen::MatrixXd& full, const Subspace& s, Eigen::MatrixXd& out) {
  const int d = s.size();
  out.resize(d, d);
  for (int b = 0; b < d; ++b) {
    const int col = s.indices[static_cast<size_t>(b)];
    for (int a = 0; a < d; ++a) {
      out(a, b) = full(s.indices[static_cast<size_t>(a)], col);
    }
  }
}

void slice_vector(const Eigen::VectorXd& full0, const Eigen::VectorXd& full1, const Subspace& s,
                  Eigen::VectorXd& delta) {
  const int d = s.size();
  delta.resize(d);
  for (int a = 0; a < d; ++a) {
    const int idx = s.indices[static_cast<size_t>(a)];
    delta[a] = full1[idx] - full0[idx];
  }
}

// Same ridge ladder as try_spd_inverse_logdet, but only the quadratic form
// v^T M^-1 v is needed.
bool ridge_quadform(Eigen::MatrixXd& m, const Eigen::VectorXd& v, double* out) {
  const double mean_diag = m.diagonal().mean();
  static constexpr double kRidgeLevels[] = {0.0, 1e-10, 1e-8, 1e-6};
  double applied = 0.0;
  for (double level : kRidgeLevels) {
    const double ridge = level * mean_diag - applied;
    if (level > 0.0) {
      m.diagonal().array() += ridge;
      applied += ridge;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) continue;
    const double quad = v.dot(llt.solve(v));
    if (!std::isfinite(quad)) continue;
    *out = quad;
    return true;
  }
  return false;
}

double deg_lda(int d) { return d + 1.0; }
double deg_qda(int d) { return 0.5 * d * (d + 3.0) + 1.0; }
double deg_gamma(int d) { return 2.0 * d + 1.0; }

int auto_neighbor_order(int n_r) {
  const int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_r))));
  return std::clamp(k, 1, std::max(1, n_r - 1));
}

void check_np_orders(int k0, int k1, int n0, int n1) {
  if (k0 < 1 || k0 > n0 - 1 || k1 < 1 || k1 > n1 - 1) {
    raise(ErrorKind::KTooLarge, "nonparametric RIC needs 1 <= k0 <= n0-1 and 1 <= k1 <= n1-1");
  }
}

void gather_class_rows(const LabeledDataset& data, const std::vector<int>& rows,
                       Eigen::MatrixXd& out) {
  out.resize(static_cast<Eigen::Index>(rows.size()), data.p());
  for (size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.features.row(rows[i]);
  }
}

// Sum over queries of log(rho_cross / rho_within) with the floor applied to
// both distances; within excludes self, cross does not.
double log_distance_ratio_sum(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& cross_refs,
                              const Eigen::MatrixXd& gram_within,
                              const Eigen::MatrixXd& gram_cross, int k_within, int k_cross) {
  const int m = static_cast<int>(queries.rows());
  const int mc = static_cast<int>(cross_refs.rows());
  Eigen::VectorXd q_norms = gram_within.diagonal();
  Eigen::VectorXd c_norms = cross_refs.rowwise().squaredNorm();
  const int k_buf = std::max(k_within, k_cross);
  std::vector<double> d2(static_cast<size_t>(k_buf));
  std::vector<int> idx(static_cast<size_t>(k_buf));
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    detail::k_smallest_sqdist(q_norms.data(), gram_within.col(i).data(), q_norms[i], m, i,
                              k_within, d2.data(), idx.data());
    const double within = std::max(std::sqrt(d2[static_cast<size_t>(k_within - 1)]), kDistanceFloor);
    detail::k_smallest_sqdist(c_norms.data(), gram_cross.col(i).data(), q_norms[i], mc, -1,
                              k_cross, d2.data(), idx.data());
    const double cross = std::max(std::sqrt(d2[static_cast<size_t>(k_cross - 1)]), kDistanceFloor);
    total += std::log(cross / within);
  }
  return total;
}

double np_kl_from_grams(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& cross_refs,
                        const Eigen::MatrixXd& gram_within, const Eigen::MatrixXd& gram_cross,
                        int k_within, int k_cross) {
  const double m = static_cast<double>(queries.rows());
  const double mc = static_cast<double>(cross_refs.rows());
  const double dims = static_cast<double>(queries.cols());
  const double ratio_sum = log_distance_ratio_sum(queries, cross_refs, gram_within, gram_cross,
                                                  k_within, k_cross);
  return dims / m * ratio_sum + std::log(mc / (m - 1.0)) + digamma(k_within) - digamma(k_cross);
}

}  // namespace

const char* criterion_type_name(CriterionType type) {
  switch (type) {
    case CriterionType::RicParametric: return "ric";
    case CriterionType::RicNonparametric: return "ric-np";
    case CriterionType::TrainingError: return "train-err";
    case CriterionType::LooCv: return "loo";
  }
  return "?";
}

double ric_lda(const LabeledDataset& restricted, const ClassSplit& split, double c_n) {
  auto [mean0, mean1] = class_means(restricted, split);
  Eigen::MatrixXd cov = pooled_covariance_mle(restricted, split, mean0, mean1);
  Eigen::VectorXd delta = mean1 - mean0;
  double quad = 0.0;
  if (!ridge_quadform(cov, delta, &quad)) return kInf;
  return -quad + c_n * deg_lda(restricted.p());
}

double ric_qda(const LabeledDataset& restricted, const ClassSplit& split, double c_n) {
  auto [mean0, mean1] = class_means(restricted, split);
  const Eigen::MatrixXd cov0 = class_covariance_mle(restricted, split, mean0, 0);
  const Eigen::MatrixXd cov1 = class_covariance_mle(restricted, split, mean1, 1);
  auto fact0 = try_spd_inverse_logdet(cov0);
  auto fact1 = try_spd_inverse_logdet(cov1);
  if (!fact0 || !fact1) return kInf;
  const Eigen::VectorXd delta = mean1 - mean0;
  const double pi0 = split.pi0_hat;
  const double pi1 = split.pi1_hat;
  const double quad = delta.dot((pi1 * fact0->inverse + pi0 * fact1->inverse) * delta);
  const double trace =
      ((fact1->inverse - fact0->inverse).array() * (pi1 * cov1 - pi0 * cov0).array()).sum();
  const double logdet_term = (pi1 - pi0) * (fact1->log_det - fact0->log_det);
  return -quad + trace + logdet_term + c_n * deg_qda(restricted.p());
}

double gamma_kl_divergence(double shape, double scale, double shape2, double scale2) {
  return (shape - shape2) * digamma(shape) - log_gamma(shape) + log_gamma(shape2) +
         shape2 * std::log(scale2 / scale) + shape * (scale - scale2) / scale2;
}

double ric_gamma(const LabeledDataset& restricted, const ClassSplit& split, double c_n) {
  const int d = restricted.p();
  double weighted_kl = 0.0;
  std::vector<double> values;
  for (int j = 0; j < d; ++j) {
    double a0, b0, a1, b1;
    try {
      values.clear();
      for (int i : split.indices0) values.push_back(restricted.features(i, j));
      std::tie(a0, b0) = gamma_mle(values);
      values.clear();
      for (int i : split.indices1) values.push_back(restricted.features(i, j));
      std::tie(a1, b1) = gamma_mle(values);
    } catch (const RaseError&) {
      return kInf;
    }
    weighted_kl += split.pi0_hat * gamma_kl_divergence(a0, b0, a1, b1) +
                   split.pi1_hat * gamma_kl_divergence(a1, b1, a0, b0);
  }
  return -2.0 * weighted_kl + c_n * deg_gamma(d);
}

double nonparametric_kl(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& references,
                        int k_within, int k_cross) {
  const int m = static_cast<int>(queries.rows());
  const int mc = static_cast<int>(references.rows());
  if (k_within < 1 || k_within > m - 1 || k_cross < 1 || k_cross > mc) {
    raise(ErrorKind::KTooLarge, "neighbor order out of range for the sample sizes");
  }
  Eigen::MatrixXd gram_within = queries * queries.transpose();
  Eigen::MatrixXd gram_cross = references * queries.transpose();
  return np_kl_from_grams(queries, references, gram_within, gram_cross, k_within, k_cross);
}

double ric_nonparametric(const LabeledDataset& restricted, const ClassSplit& split, double c_n,
                         int k0, int k1, double deg) {
  check_np_orders(k0, k1, split.n0, split.n1);
  Eigen::MatrixXd x0, x1;
  gather_class_rows(restricted, split.indices0, x0);
  gather_class_rows(restricted, split.indices1, x1);
  const double kl01 = nonparametric_kl(x0, x1, k0, k1);
  const double kl10 = nonparametric_kl(x1, x0, k1, k0);
  return -2.0 * (split.pi0_hat * kl01 + split.pi1_hat * kl10) + c_n * deg;
}

double training_error(const LabeledDataset& restricted, const ClassSplit& split,
                      const BaseClassifier& base) {
  TrainedLearner learner;
  try {
    learner = fit_base(base, restricted, split, Subspace::full(restricted.p()));
  } catch (const RaseError&) {
    return kInf;
  }
  int errors = 0;
  for (int i = 0; i < restricted.n(); ++i) {
    if (predict_label(learner, restricted.features.row(i).transpose()) != restricted.labels[i]) {
      ++errors;
    }
  }
  return static_cast<double>(errors) / restricted.n();
}

double loo_cv_error(const LabeledDataset& restricted, const ClassSplit& split,
                    const BaseClassifier& base) {
  if (base.kind == BaseKind::Knn) {
    try {
      return loo_knn_grid(restricted.features, restricted.labels, base.k_grid).first;
    } catch (const RaseError&) {
      return kInf;
    }
  }
  const int n = restricted.n();
  const int d = restricted.p();
  LabeledDataset holdout;
  holdout.features.resize(n - 1, d);
  holdout.labels.resize(n - 1);
  int errors = 0;
  for (int leave = 0; leave < n; ++leave) {
    int row = 0;
    for (int i = 0; i < n; ++i) {
      if (i == leave) continue;
      holdout.features.row(row) = restricted.features.row(i);
      holdout.labels[row] = restricted.labels[i];
      ++row;
    }
    try {
      const ClassSplit sub_split = class_split(holdout);
      TrainedLearner learner = fit_base(base, holdout, sub_split, Subspace::full(d));
      if (predict_label(learner, restricted.features.row(leave).transpose()) !=
          restricted.labels[leave]) {
        ++errors;
      }
    } catch (const RaseError&) {
      return kInf;
    }
  }
  return static_cast<double>(errors) / n;
}

SubspaceScorer::SubspaceScorer(const LabeledDataset& data, const ClassSplit& split,
                               const BaseClassifier& base, const CriterionConfig& criterion)
    : data_(data), split_(split), base_(base), type_(criterion.type) {
  c_n_ = criterion.c_n >= 0.0 ? criterion.c_n : default_penalty(data.n());

  switch (type_) {
    case CriterionType::RicParametric: {
      if (base_.kind == BaseKind::Knn) {
        raise(ErrorKind::UsageError, "the parametric RIC has no closed form for the kNN base");
      }
      std::tie(mean0_full_, mean1_full_) = class_means(data_, split_);
      if (base_.kind == BaseKind::Lda) {
        pooled_full_ = pooled_covariance_mle(data_, split_, mean0_full_, mean1_full_);
      } else if (base_.kind == BaseKind::Qda) {
        cov0_full_ = class_covariance_mle(data_, split_, mean0_full_, 0);
        cov1_full_ = class_covariance_mle(data_, split_, mean1_full_, 1);
      } else {
        // Per-feature Gamma divergences; a failed fit poisons the feature so
        // every subspace containing it scores +inf.
        const int p = data_.p();
        gamma_kl_weight_.resize(p);
        std::vector<double> values;
        for (int j = 0; j < p; ++j) {
          try {
            values.clear();
            for (int i : split_.indices0) values.push_back(data_.features(i, j));
            auto [a0, b0] = gamma_mle(values);
            values.clear();
            for (int i : split_.indices1) values.push_back(data_.features(i, j));
            auto [a1, b1] = gamma_mle(values);
            gamma_kl_weight_[j] = split_.pi0_hat * gamma_kl_divergence(a0, b0, a1, b1) +
                                  split_.pi1_hat * gamma_kl_divergence(a1, b1, a0, b0);
          } catch (const RaseError&) {
            gamma_kl_weight_[j] = kInf;
          }
        }
      }
      break;
    }
    case CriterionType::RicNonparametric: {
      k0_ = criterion.k0 > 0 ? criterion.k0 : auto_neighbor_order(split_.n0);
      k1_ = criterion.k1 > 0 ? criterion.k1 : auto_neighbor_order(split_.n1);
      check_np_orders(k0_, k1_, split_.n0, split_.n1);
      gather_class_rows(data_, split_.indices0, class0_rows_);
      gather_class_rows(data_, split_.indices1, class1_rows_);
      break;
    }
    case CriterionType::TrainingError:
    case CriterionType::LooCv:
      break;
  }
}

double SubspaceScorer::score_ric_lda(const Subspace& s, ScorerWorkspace& ws) const {
  slice_symmetric(pooled_full_, s, ws.slice0);
  slice_vector(mean0_full_, mean1_full_, s, ws.delta);
  double quad = 0.0;
  if (!ridge_quadform(ws.slice0, ws.delta, &quad)) return kInf;
  return -quad + c_n_ * deg_lda(s.size());
}

double SubspaceScorer::score_ric_qda(const Subspace& s, ScorerWorkspace& ws) const {
  slice_symmetric(cov0_full_, s, ws.slice0);
  slice_symmetric(cov1_full_, s, ws.slice1);
  slice_vector(mean0_full_, mean1_full_, s, ws.delta);
  auto fact0 = try_spd_inverse_logdet(ws.slice0);
  auto fact1 = try_spd_inverse_logdet(ws.slice1);
  if (!fact0 || !fact1) return kInf;
  const double pi0 = split_.pi0_hat;
  const double pi1 = split_.pi1_hat;
  const double quad = ws.delta.dot((pi1 * fact0->inverse + pi0 * fact1->inverse) * ws.delta);
  const double trace =
      ((fact1->inverse - fact0->inverse).array() * (pi1 * ws.slice1 - pi0 * ws.slice0).array())
          .sum();
  const double logdet_term = (pi1 - pi0) * (fact1->log_det - fact0->log_det);
  return -quad + trace + logdet_term + c_n_ * deg_qda(s.size());
}

double SubspaceScorer::score_ric_gamma(const Subspace& s) const {
  double weighted_kl = 0.0;
  for (int idx : s.indices) {
    weighted_kl += gamma_kl_weight_[idx];
    if (weighted_kl == kInf) return kInf;
  }
  return -2.0 * weighted_kl + c_n_ * deg_gamma(s.size());
}

double SubspaceScorer::score_nonparametric(const Subspace& s, ScorerWorkspace& ws) const {
  restrict_into(class0_rows_, s, ws.x0);
  restrict_into(class1_rows_, s, ws.x1);
  ws.gram.noalias() = ws.x0 * ws.x0.transpose();
  ws.gram_cross.noalias() = ws.x1 * ws.x0.transpose();
  const double kl01 = np_kl_from_grams(ws.x0, ws.x1, ws.gram, ws.gram_cross, k0_, k1_);
  ws.gram.noalias() = ws.x1 * ws.x1.transpose();
  ws.gram_cross.noalias() = ws.x0 * ws.x1.transpose();
  const double kl10 = np_kl_from_grams(ws.x1, ws.x0, ws.gram, ws.gram_cross, k1_, k0_);
  return -2.0 * (split_.pi0_hat * kl01 + split_.pi1_hat * kl10) + c_n_ * deg_lda(s.size());
}

double SubspaceScorer::score(const Subspace& s, ScorerWorkspace& ws) const {
  switch (type_) {
    case CriterionType::RicParametric:
      if (base_.kind == BaseKind::Lda) return score_ric_lda(s, ws);
      if (base_.kind == BaseKind::Qda) return score_ric_qda(s, ws);
      return score_ric_gamma(s);
    case CriterionType::RicNonparametric:
      return score_nonparametric(s, ws);
    case CriterionType::TrainingError: {
      LabeledDataset restricted = restrict(data_, s);
      return training_error(restricted, split_, base_);
    }
    case CriterionType::LooCv: {
      if (base_.kind == BaseKind::Knn) {
        restrict_into(data_.features, s, ws.restricted);
        try {
          return loo_knn_grid(ws.restricted, data_.labels, base_.k_grid).first;
        } catch (const RaseError&) {
          return kInf;
        }
      }
      LabeledDataset restricted = restrict(data_, s);
      return loo_cv_error(restricted, split_, base_);
    }
  }
  return kInf;
}

int pick_best_candidate(const std::vector<Subspace>& candidates,
                        const std::vector<double>& scores) {
  int best = -1;
  bool any_finite = false;
  for (size_t k = 0; k < candidates.size(); ++k) {
    const double sc = std::isnan(scores[k]) ? kInf : scores[k];
    if (best < 0) {
      best = static_cast<int>(k);
      any_finite = sc < kInf;
      continue;
    }
    const double best_sc = std::isnan(scores[static_cast<size_t>(best)])
                               ? kInf
                               : scores[static_cast<size_t>(best)];
    if (!any_finite && sc >= kInf) {
      // All +inf so far: secondary rule only.
      if (subspace_less(candidates[k], candidates[static_cast<size_t>(best)])) {
        best = static_cast<int>(k);
      }
      continue;
    }
    if (sc < best_sc ||
        (sc == best_sc && subspace_less(candidates[k], candidates[static_cast<size_t>(best)]))) {
      best = static_cast<int>(k);
      any_finite = any_finite || sc < kInf;
    }
  }
  return best;
}

SelectionResult select_optimal(const LabeledDataset& data, const ClassSplit& split,
                               const std::vector<Subspace>& candidates,
                               const BaseClassifier& base, const CriterionConfig& criterion) {
  if (candidates.empty()) raise(ErrorKind::InvalidBound, "candidate list is empty");
  SubspaceScorer scorer(data, split, base, criterion);
  ScorerWorkspace ws;
  std::vector<double> scores(candidates.size());
  for (size_t k = 0; k < candidates.size(); ++k) scores[k] = scorer.score(candidates[k], ws);
  const int best = pick_best_candidate(candidates, scores);
  return SelectionResult{candidates[static_cast<size_t>(best)], scores[static_cast<size_t>(best)]};
}

}  // namespace rase
