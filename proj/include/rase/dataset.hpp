#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rase/error.hpp"

namespace rase {

// Binary-labeled feature matrix. Immutable after construction; every fitting
// routine shares it read-only across threads.
struct LabeledDataset {
  Eigen::MatrixXd features;  // n x p
  Eigen::VectorXi labels;    // entries in {0, 1}

  int n() const { return static_cast<int>(features.rows()); }
  int p() const { return static_cast<int>(features.cols()); }

  // Validates shapes, label values, and finiteness.
  static LabeledDataset create(Eigen::MatrixXd features, Eigen::VectorXi labels);
};

struct ClassSplit {
  std::vector<int> indices0;
  std::vector<int> indices1;
  int n0 = 0;
  int n1 = 0;
  double pi0_hat = 0.0;
  double pi1_hat = 0.0;
};

// Sorted, unique, 0-based feature indices. All user-facing I/O is 1-based;
// the conversion happens only at the I/O boundary.
struct Subspace {
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }

  static Subspace single(int index) { return Subspace{{index}}; }
  static Subspace full(int p);

  // Validates ordering/uniqueness and bounds against p.
  static Subspace checked(std::vector<int> indices, int p);

  bool operator==(const Subspace& other) const = default;
};

// Exact index partition with empirical priors; throws EmptyClass when either
// class is absent (fitting requires both).
ClassSplit class_split(const LabeledDataset& dataset);

// Column slice in subspace order; labels and row order unchanged.
LabeledDataset restrict(const LabeledDataset& dataset, const Subspace& s);

// The column-slice core, shared with scratch-buffer code paths.
void restrict_into(const Eigen::MatrixXd& features, const Subspace& s, Eigen::MatrixXd& out);

// Strict-weak order used by selection tie-breaking: smaller size first, then
// lexicographic on indices.
bool subspace_less(const Subspace& a, const Subspace& b);

}  // namespace rase
