#include "rase/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "rase/error.hpp"

namespace rase {

LabeledDataset LabeledDataset::create(Eigen::MatrixXd features, Eigen::VectorXi labels) {
  if (features.rows() != labels.size()) {
    raise(ErrorKind::DimensionMismatch,
          "labels length " + std::to_string(labels.size()) + " does not match row count " +
              std::to_string(features.rows()));
  }
  if (!features.allFinite()) {
    raise(ErrorKind::DataError, "feature matrix contains non-finite values");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      raise(ErrorKind::DataError,
            "label at row " + std::to_string(i) + " is " + std::to_string(labels[i]) +
                "; labels must be 0 or 1");
    }
  }
  return LabeledDataset{std::move(features), std::move(labels)};
}

Subspace Subspace::full(int p) {
  Subspace s;
  s.indices.resize(static_cast<size_t>(p));
  std::iota(s.indices.begin(), s.indices.end(), 0);
  return s;
}

Subspace Subspace::checked(std::vector<int> indices, int p) {
  if (indices.empty()) raise(ErrorKind::InvalidBound, "subspace must be nonempty");
  for (size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] < 0 || indices[i] >= p) {
      raise(ErrorKind::IndexOutOfRange,
            "feature index " + std::to_string(indices[i]) + " out of range for p = " +
                std::to_string(p));
    }
    if (i > 0 && indices[i] <= indices[i - 1]) {
      raise(ErrorKind::InvalidBound, "subspace indices must be strictly increasing");
    }
  }
  return Subspace{std::move(indices)};
}

ClassSplit class_split(const LabeledDataset& dataset) {
  ClassSplit split;
  const int n = dataset.n();
  split.indices0.reserve(static_cast<size_t>(n));
  split.indices1.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    (dataset.labels[i] == 0 ? split.indices0 : split.indices1).push_back(i);
  }
  split.n0 = static_cast<int>(split.indices0.size());
  split.n1 = static_cast<int>(split.indices1.size());
  if (split.n0 == 0 || split.n1 == 0) {
    raise(ErrorKind::EmptyClass, "fitting requires at least one row of each class");
  }
  split.pi0_hat = static_cast<double>(split.n0) / n;
  split.pi1_hat = static_cast<double>(split.n1) / n;
  return split;
}

void restrict_into(const Eigen::MatrixXd& features, const Subspace& s, Eigen::MatrixXd& out) {
  out.resize(features.rows(), s.size());
  for (int k = 0; k < s.size(); ++k) {
    out.col(k) = features.col(s.indices[static_cast<size_t>(k)]);
  }
}

LabeledDataset restrict(const LabeledDataset& dataset, const Subspace& s) {
  for (int idx : s.indices) {
    if (idx < 0 || idx >= dataset.p()) {
      raise(ErrorKind::IndexOutOfRange,
            "feature index " + std::to_string(idx) + " out of range for p = " +
                std::to_string(dataset.p()));
    }
  }
  LabeledDataset out;
  restrict_into(dataset.features, s, out.features);
  out.labels = dataset.labels;
  return out;
}

bool subspace_less(const Subspace& a, const Subspace& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return std::lexicographical_compare(a.indices.begin(), a.indices.end(), b.indices.begin(),
                                      b.indices.end());
}

const char* error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::KTooLarge: return "KTooLarge";
    case ErrorKind::InvalidBound: return "InvalidBound";
    case ErrorKind::DegenerateSample: return "DegenerateSample";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::FitFailure: return "FitFailure";
    case ErrorKind::NonPdParameters: return "NonPdParameters";
    case ErrorKind::DataError: return "DataError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace rase
