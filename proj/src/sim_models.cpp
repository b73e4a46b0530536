#include "rase/sim_models.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <numeric>

#include "rase/error.hpp"
#include "rase/rng.hpp"

namespace rase {

namespace {

Eigen::MatrixXd ar1_covariance(int p) {
  Eigen::MatrixXd sigma(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(0.5, std::abs(i - j));
  }
  return sigma;
}

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    raise(ErrorKind::NonPdParameters, std::string(what) + " is not positive definite");
  }
  return llt.matrixL();
}

struct GaussianModel {
  Eigen::VectorXd mean0;
  Eigen::VectorXd mean1;
  Eigen::MatrixXd chol0;  // lower factors used for sampling
  Eigen::MatrixXd chol1;
};

GaussianModel build_model1(bool prime) {
  const int p = 400;
  GaussianModel model;
  const Eigen::MatrixXd sigma = ar1_covariance(p);
  Eigen::VectorXd direction = Eigen::VectorXd::Zero(p);
  if (prime) {
    for (int j = 0; j < 50; ++j) direction[j] = std::pow(0.9, j + 1);
  } else {
    direction[0] = 3.0 * 0.556;
    direction[1] = 1.5 * 0.556;
    direction[4] = 2.0 * 0.556;
  }
  model.mean0 = Eigen::VectorXd::Zero(p);
  model.mean1 = sigma * direction;
  model.chol0 = cholesky_or_throw(sigma, "model 1 covariance");
  model.chol1 = model.chol0;
  return model;
}

GaussianModel build_model3() {
  const int p = 200;
  Eigen::MatrixXd omega0 = Eigen::MatrixXd::Identity(p, p);
  for (int i = 0; i + 1 < p; ++i) {
    omega0(i, i + 1) = 0.3;
    omega0(i + 1, i) = 0.3;
  }
  Eigen::MatrixXd omega1 = omega0;
  auto bump = [&](int a, int b, double v) {
    omega1(a - 1, b - 1) += v;
    if (a != b) omega1(b - 1, a - 1) += v;
  };
  bump(10, 10, -0.3758);
  bump(10, 30, 0.0616);
  bump(10, 50, 0.2037);
  bump(30, 30, -0.5482);
  bump(30, 50, 0.0286);
  bump(50, 50, -0.4614);

  auto invert = [p](const Eigen::MatrixXd& omega, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(omega);
    if (llt.info() != Eigen::Success) {
      raise(ErrorKind::NonPdParameters, std::string(what) + " is not positive definite");
    }
    return llt.solve(Eigen::MatrixXd::Identity(p, p)).eval();
  };

  GaussianModel model;
  model.chol0 = cholesky_or_throw(invert(omega0, "model 3 class-0 precision"), "model 3 class-0 covariance");
  model.chol1 = cholesky_or_throw(invert(omega1, "model 3 class-1 precision"), "model 3 class-1 covariance");
  model.mean0 = Eigen::VectorXd::Zero(p);
  // The class-1 mean places the two linear signals; the magnitude is a
  // calibration constant of this generator.
  model.mean1 = Eigen::VectorXd::Zero(p);
  model.mean1[0] = 0.6;
  model.mean1[1] = 0.6;
  return model;
}

LabeledDataset draw_gaussian(const GaussianModel& model, int n, SubstreamRng& rng) {
  const int p = static_cast<int>(model.mean0.size());
  Eigen::MatrixXd features(n, p);
  Eigen::VectorXi labels(n);
  Eigen::VectorXd z(p);
  for (int i = 0; i < n; ++i) {
    const int y = rng.next_unit() < 0.5 ? 0 : 1;
    labels[i] = y;
    for (int j = 0; j < p; ++j) z[j] = rng.next_gaussian();
    const auto& chol = y == 0 ? model.chol0 : model.chol1;
    const auto& mean = y == 0 ? model.mean0 : model.mean1;
    features.row(i) = (mean + chol.triangularView<Eigen::Lower>() * z).transpose();
  }
  return LabeledDataset{std::move(features), std::move(labels)};
}

struct GammaModelParams {
  Eigen::VectorXd shape0, scale0, shape1, scale1;
};

GammaModelParams build_model2() {
  const int p = 400;
  GammaModelParams params;
  params.shape0 = Eigen::VectorXd::Ones(p);
  params.shape1 = Eigen::VectorXd::Ones(p);
  params.scale0 = Eigen::VectorXd::Ones(p);
  params.scale1 = Eigen::VectorXd::Ones(p);
  params.shape0.head(5) << 2.0, 1.5, 1.5, 2.0, 2.0;
  params.shape1.head(5) << 2.5, 1.5, 1.5, 1.0, 1.0;
  params.scale0.head(5) << 1.5, 3.0, 1.0, 1.0, 1.0;
  params.scale1.head(5) << 2.0, 1.0, 3.0, 1.0, 1.0;
  return params;
}

LabeledDataset draw_gamma(const GammaModelParams& params, int n, SubstreamRng& rng) {
  const int p = static_cast<int>(params.shape0.size());
  Eigen::MatrixXd features(n, p);
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    const int y = rng.next_unit() < 0.5 ? 0 : 1;
    labels[i] = y;
    const auto& shape = y == 0 ? params.shape0 : params.shape1;
    const auto& scale = y == 0 ? params.scale0 : params.scale1;
    for (int j = 0; j < p; ++j) features(i, j) = rng.next_gamma(shape[j], scale[j]);
  }
  return LabeledDataset{std::move(features), std::move(labels)};
}

LabeledDataset draw_clusters(const Eigen::MatrixXd& center_means, int n, double noise_sd,
                             SubstreamRng& rng) {
  const int p = static_cast<int>(center_means.cols());
  Eigen::MatrixXd features(n, p);
  Eigen::VectorXi labels(n);
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(rng.next_below(10));
    labels[i] = c < 5 ? 0 : 1;
    for (int j = 0; j < p; ++j) {
      features(i, j) = center_means(c, j) + noise_sd * rng.next_gaussian();
    }
  }
  return LabeledDataset{std::move(features), std::move(labels)};
}

}  // namespace

SimModel parse_sim_model(const std::string& name) {
  if (name == "1") return SimModel::M1;
  if (name == "1p") return SimModel::M1Prime;
  if (name == "2") return SimModel::M2Gamma;
  if (name == "3") return SimModel::M3Qda;
  if (name == "4") return SimModel::M4Knn;
  if (name == "4p") return SimModel::M4Prime;
  raise(ErrorKind::UsageError, "unknown model '" + name + "' (expected 1, 1p, 2, 3, 4, or 4p)");
}

const char* sim_model_name(SimModel model) {
  switch (model) {
    case SimModel::M1: return "1";
    case SimModel::M1Prime: return "1p";
    case SimModel::M2Gamma: return "2";
    case SimModel::M3Qda: return "3";
    case SimModel::M4Knn: return "4";
    case SimModel::M4Prime: return "4p";
  }
  return "?";
}

int sim_feature_count(SimModel model) {
  switch (model) {
    case SimModel::M1:
    case SimModel::M1Prime:
    case SimModel::M2Gamma: return 400;
    default: return 200;
  }
}

Subspace sim_signal_set(SimModel model) {
  switch (model) {
    case SimModel::M1: return Subspace{{0, 1, 4}};
    case SimModel::M1Prime: {
      Subspace s;
      s.indices.resize(50);
      std::iota(s.indices.begin(), s.indices.end(), 0);
      return s;
    }
    case SimModel::M2Gamma:
    case SimModel::M4Knn: return Subspace{{0, 1, 2, 3, 4}};
    case SimModel::M3Qda: return Subspace{{0, 1, 9, 29, 49}};
    case SimModel::M4Prime: {
      Subspace s;
      s.indices.resize(30);
      std::iota(s.indices.begin(), s.indices.end(), 0);
      return s;
    }
  }
  raise(ErrorKind::UsageError, "unknown simulation model");
}

BaseClassifier sim_matched_base(SimModel model) {
  BaseClassifier base;
  switch (model) {
    case SimModel::M1:
    case SimModel::M1Prime: base.kind = BaseKind::Lda; break;
    case SimModel::M2Gamma: base.kind = BaseKind::Gamma; break;
    case SimModel::M3Qda: base.kind = BaseKind::Qda; break;
    case SimModel::M4Knn:
    case SimModel::M4Prime: base.kind = BaseKind::Knn; break;
  }
  return base;
}

SimData generate(const SimSpec& spec) {
  if (spec.n < 1 || spec.n_test < 0) raise(ErrorKind::InvalidBound, "sample sizes must be positive");
  SubstreamRng rng(spec.seed, rng_domain::kSimulation, static_cast<uint64_t>(spec.model), 0);
  SimData out;
  out.s_star = sim_signal_set(spec.model);
  switch (spec.model) {
    case SimModel::M1:
    case SimModel::M1Prime: {
      const GaussianModel model = build_model1(spec.model == SimModel::M1Prime);
      out.train = draw_gaussian(model, spec.n, rng);
      out.test = draw_gaussian(model, spec.n_test, rng);
      break;
    }
    case SimModel::M2Gamma: {
      const GammaModelParams params = build_model2();
      out.train = draw_gamma(params, spec.n, rng);
      out.test = draw_gamma(params, spec.n_test, rng);
      break;
    }
    case SimModel::M3Qda: {
      const GaussianModel model = build_model3();
      out.train = draw_gaussian(model, spec.n, rng);
      out.test = draw_gaussian(model, spec.n_test, rng);
      break;
    }
    case SimModel::M4Knn:
    case SimModel::M4Prime: {
      const int p = 200;
      const int signals = spec.model == SimModel::M4Knn ? 5 : 30;
      const double noise_sd = spec.model == SimModel::M4Knn ? 0.5 : std::sqrt(2.0);
      // Ten full-p centers; only the signal coordinates carry into the means.
      Eigen::MatrixXd center_means = Eigen::MatrixXd::Zero(10, p);
      for (int c = 0; c < 10; ++c) {
        for (int j = 0; j < p; ++j) {
          const double value = rng.next_gaussian();
          if (j < signals) center_means(c, j) = value;
        }
      }
      out.train = draw_clusters(center_means, spec.n, noise_sd, rng);
      out.test = draw_clusters(center_means, spec.n_test, noise_sd, rng);
      break;
    }
  }
  return out;
}

TrainedLearner signal_oracle(SimModel model, const LabeledDataset& train) {
  const Subspace s_star = sim_signal_set(model);
  const LabeledDataset restricted = restrict(train, s_star);
  return fit_base(sim_matched_base(model), restricted, class_split(train), s_star);
}

double learner_test_error(const TrainedLearner& learner, const LabeledDataset& test) {
  std::vector<uint8_t> votes(static_cast<size_t>(test.n()));
  Eigen::MatrixXd scratch;
  learner_votes(learner, test.features, votes.data(), scratch);
  int errors = 0;
  for (int i = 0; i < test.n(); ++i) {
    if (static_cast<int>(votes[static_cast<size_t>(i)]) != test.labels[i]) ++errors;
  }
  return static_cast<double>(errors) / test.n();
}

}  // namespace rase
