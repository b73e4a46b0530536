#pragma once

#include <string>

#include "rase/dataset.hpp"
#include "rase/ensemble.hpp"

namespace rase {

// CSV with a header row; the label column is named `y` (any position) and
// every other column is a numeric feature, kept in file order. Doubles are
// written with shortest round-trip formatting, so save/load is exact.
LabeledDataset load_csv(const std::string& path);
void save_csv(const LabeledDataset& dataset, const std::string& path);

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON model schema
// {format_version, config, alpha_hat, n_features, eta, learners[...]}.
// kNN learners embed their restricted training rows; parametric learners
// store parameters only. Loading a newer format_version is an error.
void save_model(const RaseModel& model, const std::string& path);
RaseModel load_model(const std::string& path);

std::string model_to_json_string(const RaseModel& model);
RaseModel model_from_json_string(const std::string& text);

}  // namespace rase
