#include "rase/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "rase/error.hpp"

namespace rase {

namespace {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) raise(ErrorKind::DataError, "failed to format a double");
  return std::string(buf, ptr);
}

double parse_double(std::string_view token, int line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    raise(ErrorKind::DataError,
          "line " + std::to_string(line) + ": cannot parse numeric value '" + std::string(token) +
              "'");
  }
  return value;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json vector_to_json(const Eigen::VectorXi& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd json_to_vector(const json& arr, const char* what) {
  if (!arr.is_array()) raise(ErrorKind::SchemaError, std::string(what) + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) raise(ErrorKind::SchemaError, std::string(what) + " must be numeric");
    v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  }
  return v;
}

Eigen::VectorXi json_to_int_vector(const json& arr, const char* what) {
  if (!arr.is_array()) raise(ErrorKind::SchemaError, std::string(what) + " must be an array");
  Eigen::VectorXi v(static_cast<Eigen::Index>(arr.size()));
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number_integer()) {
      raise(ErrorKind::SchemaError, std::string(what) + " must hold integers");
    }
    v[static_cast<Eigen::Index>(i)] = arr[i].get<int>();
  }
  return v;
}

Eigen::MatrixXd json_to_matrix(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) {
    raise(ErrorKind::SchemaError, std::string(what) + " must be a non-empty array of rows");
  }
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = static_cast<Eigen::Index>(rows[0].size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const json& row = rows[static_cast<size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != c) {
      raise(ErrorKind::SchemaError, std::string(what) + " rows must have equal lengths");
    }
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = row[static_cast<size_t>(j)].get<double>();
  }
  return m;
}

json subspace_to_json(const Subspace& s) {
  json arr = json::array();
  for (int idx : s.indices) arr.push_back(idx + 1);  // 1-based on disk
  return arr;
}

Subspace subspace_from_json(const json& arr, int p) {
  if (!arr.is_array() || arr.empty()) raise(ErrorKind::SchemaError, "subspace must be a non-empty array");
  std::vector<int> indices;
  indices.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) raise(ErrorKind::SchemaError, "subspace indices must be integers");
    indices.push_back(v.get<int>() - 1);
  }
  try {
    return Subspace::checked(std::move(indices), p);
  } catch (const RaseError& e) {
    raise(ErrorKind::SchemaError, std::string("invalid subspace: ") + e.what());
  }
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) raise(ErrorKind::SchemaError, std::string("missing field '") + key + "'");
  return *it;
}

BaseKind parse_base_kind(const std::string& name) {
  if (name == "lda") return BaseKind::Lda;
  if (name == "qda") return BaseKind::Qda;
  if (name == "knn") return BaseKind::Knn;
  if (name == "gamma") return BaseKind::Gamma;
  raise(ErrorKind::SchemaError, "unknown base classifier '" + name + "'");
}

CriterionType parse_criterion_type(const std::string& name) {
  if (name == "ric") return CriterionType::RicParametric;
  if (name == "ric-np") return CriterionType::RicNonparametric;
  if (name == "train-err") return CriterionType::TrainingError;
  if (name == "loo") return CriterionType::LooCv;
  raise(ErrorKind::SchemaError, "unknown criterion '" + name + "'");
}

}  // namespace

LabeledDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::DataError, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) raise(ErrorKind::DataError, "'" + path + "' is empty");
  const auto header = split_line(trim_cr(line));
  int label_col = -1;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "y") {
      if (label_col >= 0) raise(ErrorKind::DataError, "duplicate label column 'y'");
      label_col = static_cast<int>(c);
    }
  }
  if (label_col < 0) raise(ErrorKind::DataError, "'" + path + "' has no label column named 'y'");
  const int p = static_cast<int>(header.size()) - 1;
  if (p < 1) raise(ErrorKind::DataError, "'" + path + "' has no feature columns");

  std::vector<double> values;
  std::vector<int> labels;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto trimmed = trim_cr(line);
    if (trimmed.empty()) continue;
    const auto fields = split_line(trimmed);
    if (fields.size() != header.size()) {
      raise(ErrorKind::DataError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields, found " +
                                      std::to_string(fields.size()));
    }
    for (size_t c = 0; c < fields.size(); ++c) {
      const double v = parse_double(fields[c], line_no);
      if (static_cast<int>(c) == label_col) {
        if (v != 0.0 && v != 1.0) {
          raise(ErrorKind::DataError,
                "line " + std::to_string(line_no) + ": label must be 0 or 1");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        if (!std::isfinite(v)) {
          raise(ErrorKind::DataError,
                "line " + std::to_string(line_no) + ": non-finite feature value");
        }
        values.push_back(v);
      }
    }
  }
  const int n = static_cast<int>(labels.size());
  if (n == 0) raise(ErrorKind::DataError, "'" + path + "' has a header but no data rows");
  Eigen::MatrixXd features(n, p);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) features(i, j) = values[static_cast<size_t>(i) * p + j];
  }
  Eigen::VectorXi label_vec(n);
  for (int i = 0; i < n; ++i) label_vec[i] = labels[static_cast<size_t>(i)];
  return LabeledDataset::create(std::move(features), std::move(label_vec));
}

void save_csv(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::DataError, "cannot write '" + path + "'");
  for (int j = 0; j < dataset.p(); ++j) out << 'x' << (j + 1) << ',';
  out << "y\n";
  for (int i = 0; i < dataset.n(); ++i) {
    for (int j = 0; j < dataset.p(); ++j) out << format_double(dataset.features(i, j)) << ',';
    out << dataset.labels[i] << '\n';
  }
  if (!out) raise(ErrorKind::DataError, "write to '" + path + "' failed");
}

std::string model_to_json_string(const RaseModel& model) {
  json root;
  root["format_version"] = kModelFormatVersion;
  root["alpha_hat"] = model.alpha_hat;
  root["n_features"] = model.n_features;
  root["eta"] = vector_to_json(model.eta);

  json config;
  config["b1"] = model.config.b1;
  config["b2"] = model.config.b2;
  config["d_max"] = model.config.d_max;
  config["base"] = base_kind_name(model.config.base.kind);
  config["k_grid"] = model.config.base.k_grid;
  config["criterion"] = criterion_type_name(model.config.criterion.type);
  config["c_n"] = model.config.criterion.c_n;
  config["k0"] = model.config.criterion.k0;
  config["k1"] = model.config.criterion.k1;
  config["iterations"] = model.config.iterations;
  config["c0"] = model.config.c0;
  config["seed"] = model.config.seed;
  root["config"] = std::move(config);

  json learners = json::array();
  for (const auto& learner : model.learners) {
    json entry;
    entry["subspace"] = subspace_to_json(learner.subspace);
    if (const auto* lda = std::get_if<LdaParams>(&learner.params)) {
      entry["kind"] = "lda";
      entry["mean0"] = vector_to_json(lda->mean0);
      entry["mean1"] = vector_to_json(lda->mean1);
      entry["cov_inv"] = matrix_to_json(lda->cov_inv);
      entry["log_prior_ratio"] = lda->log_prior_ratio;
    } else if (const auto* qda = std::get_if<QdaParams>(&learner.params)) {
      entry["kind"] = "qda";
      entry["mean0"] = vector_to_json(qda->mean0);
      entry["mean1"] = vector_to_json(qda->mean1);
      entry["cov0_inv"] = matrix_to_json(qda->cov0_inv);
      entry["cov1_inv"] = matrix_to_json(qda->cov1_inv);
      entry["logdet0"] = qda->logdet0;
      entry["logdet1"] = qda->logdet1;
      entry["log_prior_ratio"] = qda->log_prior_ratio;
    } else if (const auto* knn = std::get_if<KnnParams>(&learner.params)) {
      entry["kind"] = "knn";
      entry["k"] = knn->k;
      entry["train"] = matrix_to_json(knn->train);
      entry["labels"] = vector_to_json(knn->labels);
      entry["pi0"] = knn->pi0;
      entry["pi1"] = knn->pi1;
    } else {
      const auto& g = std::get<GammaParams>(learner.params);
      entry["kind"] = "gamma";
      entry["shape0"] = vector_to_json(g.shape0);
      entry["scale0"] = vector_to_json(g.scale0);
      entry["shape1"] = vector_to_json(g.shape1);
      entry["scale1"] = vector_to_json(g.scale1);
      entry["log_prior_ratio"] = g.log_prior_ratio;
    }
    learners.push_back(std::move(entry));
  }
  root["learners"] = std::move(learners);
  return root.dump(1);
}

RaseModel model_from_json_string(const std::string& text) {
  json root = json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    raise(ErrorKind::SchemaError, "model file is not valid JSON");
  }
  const auto& version = require(root, "format_version");
  if (!version.is_number_integer()) raise(ErrorKind::SchemaError, "format_version must be an integer");
  if (version.get<int>() > kModelFormatVersion) {
    raise(ErrorKind::SchemaError,
          "model format_version " + std::to_string(version.get<int>()) +
              " is newer than supported version " + std::to_string(kModelFormatVersion));
  }
  if (version.get<int>() < 1) raise(ErrorKind::SchemaError, "format_version must be >= 1");

  RaseModel model;
  model.alpha_hat = require(root, "alpha_hat").get<double>();
  model.n_features = require(root, "n_features").get<int>();
  model.eta = json_to_vector(require(root, "eta"), "eta");
  if (model.eta.size() != model.n_features) {
    raise(ErrorKind::SchemaError, "eta length does not match n_features");
  }

  const json& config = require(root, "config");
  model.config.b1 = require(config, "b1").get<int>();
  model.config.b2 = require(config, "b2").get<int>();
  model.config.d_max = require(config, "d_max").get<int>();
  model.config.base.kind = parse_base_kind(require(config, "base").get<std::string>());
  model.config.base.k_grid = require(config, "k_grid").get<std::vector<int>>();
  model.config.criterion.type = parse_criterion_type(require(config, "criterion").get<std::string>());
  model.config.criterion.c_n = require(config, "c_n").get<double>();
  model.config.criterion.k0 = require(config, "k0").get<int>();
  model.config.criterion.k1 = require(config, "k1").get<int>();
  model.config.iterations = require(config, "iterations").get<int>();
  model.config.c0 = require(config, "c0").get<double>();
  model.config.seed = require(config, "seed").get<uint64_t>();
  // The worker count is an execution knob, not part of the model identity;
  // it is not persisted so files are byte-identical across thread counts.
  model.config.threads = 1;

  const json& learners = require(root, "learners");
  if (!learners.is_array() || learners.empty()) {
    raise(ErrorKind::SchemaError, "learners must be a non-empty array");
  }
  for (const auto& entry : learners) {
    TrainedLearner learner;
    learner.subspace = subspace_from_json(require(entry, "subspace"), model.n_features);
    const std::string kind = require(entry, "kind").get<std::string>();
    const int d = learner.subspace.size();
    auto check_len = [&](const Eigen::VectorXd& v, const char* what) {
      if (v.size() != d) raise(ErrorKind::SchemaError, std::string(what) + " length mismatch");
    };
    if (kind == "lda") {
      LdaParams params;
      params.mean0 = json_to_vector(require(entry, "mean0"), "mean0");
      params.mean1 = json_to_vector(require(entry, "mean1"), "mean1");
      params.cov_inv = json_to_matrix(require(entry, "cov_inv"), "cov_inv");
      params.log_prior_ratio = require(entry, "log_prior_ratio").get<double>();
      check_len(params.mean0, "mean0");
      check_len(params.mean1, "mean1");
      if (params.cov_inv.rows() != d || params.cov_inv.cols() != d) {
        raise(ErrorKind::SchemaError, "cov_inv shape mismatch");
      }
      learner.params = std::move(params);
    } else if (kind == "qda") {
      QdaParams params;
      params.mean0 = json_to_vector(require(entry, "mean0"), "mean0");
      params.mean1 = json_to_vector(require(entry, "mean1"), "mean1");
      params.cov0_inv = json_to_matrix(require(entry, "cov0_inv"), "cov0_inv");
      params.cov1_inv = json_to_matrix(require(entry, "cov1_inv"), "cov1_inv");
      params.logdet0 = require(entry, "logdet0").get<double>();
      params.logdet1 = require(entry, "logdet1").get<double>();
      params.log_prior_ratio = require(entry, "log_prior_ratio").get<double>();
      check_len(params.mean0, "mean0");
      check_len(params.mean1, "mean1");
      if (params.cov0_inv.rows() != d || params.cov0_inv.cols() != d ||
          params.cov1_inv.rows() != d || params.cov1_inv.cols() != d) {
        raise(ErrorKind::SchemaError, "class covariance shape mismatch");
      }
      learner.params = std::move(params);
    } else if (kind == "knn") {
      KnnParams params;
      params.k = require(entry, "k").get<int>();
      params.train = json_to_matrix(require(entry, "train"), "train");
      params.labels = json_to_int_vector(require(entry, "labels"), "labels");
      params.pi0 = require(entry, "pi0").get<double>();
      params.pi1 = require(entry, "pi1").get<double>();
      if (params.train.cols() != d) raise(ErrorKind::SchemaError, "train width mismatch");
      if (params.labels.size() != params.train.rows()) {
        raise(ErrorKind::SchemaError, "labels length does not match train rows");
      }
      if (params.k < 1 || params.k > static_cast<int>(params.train.rows())) {
        raise(ErrorKind::SchemaError, "stored k is out of range");
      }
      learner.params = std::move(params);
    } else if (kind == "gamma") {
      GammaParams params;
      params.shape0 = json_to_vector(require(entry, "shape0"), "shape0");
      params.scale0 = json_to_vector(require(entry, "scale0"), "scale0");
      params.shape1 = json_to_vector(require(entry, "shape1"), "shape1");
      params.scale1 = json_to_vector(require(entry, "scale1"), "scale1");
      params.log_prior_ratio = require(entry, "log_prior_ratio").get<double>();
      check_len(params.shape0, "shape0");
      check_len(params.scale0, "scale0");
      check_len(params.shape1, "shape1");
      check_len(params.scale1, "scale1");
      if ((params.shape0.array() <= 0).any() || (params.scale0.array() <= 0).any() ||
          (params.shape1.array() <= 0).any() || (params.scale1.array() <= 0).any()) {
        raise(ErrorKind::SchemaError, "Gamma shapes and scales must be positive");
      }
      learner.params = std::move(params);
    } else {
      raise(ErrorKind::SchemaError, "unknown learner kind '" + kind + "'");
    }
    model.learners.push_back(std::move(learner));
  }
  return model;
}

void save_model(const RaseModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(ErrorKind::DataError, "cannot write '" + path + "'");
  out << model_to_json_string(model) << '\n';
  if (!out) raise(ErrorKind::DataError, "write to '" + path + "' failed");
}

RaseModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::DataError, "cannot open '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json_string(buffer.str());
}

}  // namespace rase
