#include "rase/numerics.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "rase/error.hpp"

namespace rase {

std::pair<Eigen::VectorXd, Eigen::VectorXd> class_means(const LabeledDataset& restricted,
                                                        const ClassSplit& split) {
  if (split.n0 == 0 || split.n1 == 0) raise(ErrorKind::EmptyClass, "class_means needs both classes");
  const int d = restricted.p();
  Eigen::VectorXd mean0 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mean1 = Eigen::VectorXd::Zero(d);
  for (int i : split.indices0) mean0 += restricted.features.row(i).transpose();
  for (int i : split.indices1) mean1 += restricted.features.row(i).transpose();
  mean0 /= split.n0;
  mean1 /= split.n1;
  return {std::move(mean0), std::move(mean1)};
}

namespace {

// Accumulates sum over rows of (x - mean)(x - mean)^T for one class.
Eigen::MatrixXd centered_scatter(const LabeledDataset& restricted, const std::vector<int>& rows,
                                 const Eigen::VectorXd& mean) {
  const int d = restricted.p();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd centered(d);
  for (int i : rows) {
    centered = restricted.features.row(i).transpose() - mean;
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered);
  }
  scatter.triangularView<Eigen::StrictlyUpper>() = scatter.transpose();
  return scatter;
}

}  // namespace

Eigen::MatrixXd pooled_covariance_mle(const LabeledDataset& restricted, const ClassSplit& split,
                                      const Eigen::VectorXd& mean0, const Eigen::VectorXd& mean1) {
  Eigen::MatrixXd scatter =
      centered_scatter(restricted, split.indices0, mean0) +
      centered_scatter(restricted, split.indices1, mean1);
  return scatter / restricted.n();
}

Eigen::MatrixXd class_covariance_mle(const LabeledDataset& restricted, const ClassSplit& split,
                                     const Eigen::VectorXd& mean_r, int class_r) {
  const std::vector<int>& rows = class_r == 0 ? split.indices0 : split.indices1;
  return centered_scatter(restricted, rows, mean_r) / static_cast<double>(rows.size());
}

std::optional<SpdFactorization> try_spd_inverse_logdet(const Eigen::MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  const double mean_diag = m.diagonal().mean();
  static constexpr double kRidgeLevels[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double level : kRidgeLevels) {
    const double ridge = level * mean_diag;
    Eigen::MatrixXd work = m;
    if (ridge > 0.0) work.diagonal().array() += ridge;
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() != Eigen::Success) continue;
    const auto& l = llt.matrixLLT();
    double log_det = 0.0;
    bool ok = true;
    for (int i = 0; i < d; ++i) {
      const double diag = l(i, i);
      if (!(diag > 0.0) || !std::isfinite(diag)) {
        ok = false;
        break;
      }
      log_det += std::log(diag);
    }
    if (!ok) continue;
    SpdFactorization fact;
    fact.inverse = llt.solve(Eigen::MatrixXd::Identity(d, d));
    fact.log_det = 2.0 * log_det;
    fact.ridge_used = ridge;
    if (!fact.inverse.allFinite()) continue;
    return fact;
  }
  return std::nullopt;
}

SpdFactorization spd_inverse_logdet(const Eigen::MatrixXd& m) {
  auto fact = try_spd_inverse_logdet(m);
  if (!fact) raise(ErrorKind::SingularMatrix, "matrix not positive definite after ridge escalation");
  return std::move(*fact);
}

// Recurrence up to x >= 12, then the Stirling-type asymptotic series.
double digamma(double x) {
  if (!(x > 0.0)) raise(ErrorKind::DomainError, "digamma requires x > 0");
  double result = 0.0;
  while (x < 12.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // - sum B_{2n} / (2n x^{2n})
  const double series = inv2 * (1.0 / 12.0 -
                        inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                        inv2 * (1.0 / 240.0 -
                        inv2 * (1.0 / 132.0 -
                        inv2 * (691.0 / 32760.0 -
                        inv2 * (1.0 / 12.0)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

double trigamma(double x) {
  if (!(x > 0.0)) raise(ErrorKind::DomainError, "trigamma requires x > 0");
  double result = 0.0;
  while (x < 12.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series = 1.0 +
                        inv * (0.5 +
                        inv * (1.0 / 6.0 -
                        inv2 * (1.0 / 30.0 -
                        inv2 * (1.0 / 42.0 -
                        inv2 * (1.0 / 30.0 -
                        inv2 * (5.0 / 66.0 -
                        inv2 * (691.0 / 2730.0)))))));
  return result + inv * series;
}

double log_gamma(double x) {
  if (!(x > 0.0)) raise(ErrorKind::DomainError, "log_gamma requires x > 0");
  double shift = 0.0;
  while (x < 12.0) {
    shift -= std::log(x);
    x += 1.0;
  }
  static const double kHalfLog2Pi = 0.5 * std::log(2.0 * M_PI);
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series = inv * (1.0 / 12.0 -
                        inv2 * (1.0 / 360.0 -
                        inv2 * (1.0 / 1260.0 -
                        inv2 * (1.0 / 1680.0 -
                        inv2 * (1.0 / 1188.0)))));
  return shift + (x - 0.5) * std::log(x) - x + kHalfLog2Pi + series;
}

namespace detail {

void k_smallest_sqdist(const double* sq_norms, const double* gram_col, double self_sq_norm,
                       int count, int exclude, int k, double* d2_out, int* idx_out) {
  int filled = 0;
  for (int j = 0; j < count; ++j) {
    if (j == exclude) continue;
    double d2 = self_sq_norm + sq_norms[j] - 2.0 * gram_col[j];
    if (d2 < 0.0) d2 = 0.0;
    if (filled == k) {
      const double worst = d2_out[k - 1];
      if (d2 > worst || (d2 == worst && j > idx_out[k - 1])) continue;
    }
    int pos = filled < k ? filled : k - 1;
    while (pos > 0 && (d2_out[pos - 1] > d2 || (d2_out[pos - 1] == d2 && idx_out[pos - 1] > j))) {
      d2_out[pos] = d2_out[pos - 1];
      idx_out[pos] = idx_out[pos - 1];
      --pos;
    }
    d2_out[pos] = d2;
    idx_out[pos] = j;
    if (filled < k) ++filled;
  }
}

}  // namespace detail

namespace {

Eigen::VectorXd kth_nn_core(const Eigen::MatrixXd& queries, const Eigen::MatrixXd& references,
                            int k, bool exclude_self) {
  const int m = static_cast<int>(queries.rows());
  const int mr = static_cast<int>(references.rows());
  Eigen::MatrixXd gram = references * queries.transpose();  // mr x m, column i = query i
  Eigen::VectorXd ref_norms = references.rowwise().squaredNorm();
  Eigen::VectorXd query_norms = queries.rowwise().squaredNorm();
  Eigen::VectorXd out(m);
  std::vector<double> d2(static_cast<size_t>(k));
  std::vector<int> idx(static_cast<size_t>(k));
  for (int i = 0; i < m; ++i) {
    detail::k_smallest_sqdist(ref_norms.data(), gram.col(i).data(), query_norms[i], mr,
                              exclude_self ? i : -1, k, d2.data(), idx.data());
    // The norm expansion used for selection carries rounding noise; report
    // the chosen neighbor's distance from the plain difference form.
    const int j = idx[static_cast<size_t>(k - 1)];
    double exact = 0.0;
    for (Eigen::Index c = 0; c < queries.cols(); ++c) {
      const double diff = queries(i, c) - references(j, c);
      exact += diff * diff;
    }
    out[i] = std::sqrt(exact);
  }
  return out;
}

}  // namespace

Eigen::VectorXd kth_nn_distance_within(const Eigen::MatrixXd& points, int k) {
  const int m = static_cast<int>(points.rows());
  if (k < 1 || k > m - 1) {
    raise(ErrorKind::KTooLarge,
          "within-sample k = " + std::to_string(k) + " needs 1 <= k <= m-1 with m = " +
              std::to_string(m));
  }
  return kth_nn_core(points, points, k, true);
}

Eigen::VectorXd kth_nn_distance_between(const Eigen::MatrixXd& queries,
                                        const Eigen::MatrixXd& references, int k) {
  const int mr = static_cast<int>(references.rows());
  if (k < 1 || k > mr) {
    raise(ErrorKind::KTooLarge,
          "between-sample k = " + std::to_string(k) + " needs 1 <= k <= m' with m' = " +
              std::to_string(mr));
  }
  if (queries.cols() != references.cols()) {
    raise(ErrorKind::DimensionMismatch, "query and reference dimensions differ");
  }
  return kth_nn_core(queries, references, k, false);
}

}  // namespace rase
