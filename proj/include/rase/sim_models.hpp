#pragma once

#include <cstdint>
#include <string>

#include "rase/base.hpp"
#include "rase/dataset.hpp"

namespace rase {

// The six synthetic benchmark generators. Numbers 1-3 draw balanced labels;
// model 4 draws points around ten fixed cluster centers.
enum class SimModel { M1, M1Prime, M2Gamma, M3Qda, M4Knn, M4Prime };

SimModel parse_sim_model(const std::string& name);      // "1", "1p", "2", "3", "4", "4p"
const char* sim_model_name(SimModel model);

struct SimSpec {
  SimModel model = SimModel::M1;
  int n = 200;
  int n_test = 1000;
  uint64_t seed = 0;
};

struct SimData {
  LabeledDataset train;
  LabeledDataset test;
  Subspace s_star;
};

int sim_feature_count(SimModel model);
Subspace sim_signal_set(SimModel model);

// The base classifier that matches each generator's true model.
BaseClassifier sim_matched_base(SimModel model);

// Draws train and test from one sequential seeded stream; model 4 draws its
// cluster centers once per call and shares them between the two sets.
SimData generate(const SimSpec& spec);

// The matched base classifier fit on the signal features only.
TrainedLearner signal_oracle(SimModel model, const LabeledDataset& train);

// Test error of a single learner applied through its own subspace.
double learner_test_error(const TrainedLearner& learner, const LabeledDataset& test);

}  // namespace rase
