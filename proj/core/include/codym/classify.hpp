#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "codym/model.hpp"
#include "codym/rng.hpp"

namespace codym {

// Conversation-level design matrix. Unstratified rows are one transition
// vector (2^(order+1) entries); stratified rows concatenate the patient and
// clinician vectors.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;  // 0/1
  std::vector<std::string> feature_names;
  std::vector<std::string> excluded_ids;

  std::size_t size() const { return rows.size(); }
  std::size_t width() const { return rows.empty() ? 0 : rows.front().size(); }
};

FeatureTable conversation_features(const Corpus& corpus, int order,
                                   const BinarizationRule& rule, bool stratified,
                                   const std::function<bool(const Conversation&)>& label_fn);

struct ForestConfig {
  int trees = 100;
  int features_per_split = 0;  // 0 -> ceil(sqrt(width))
  bool bootstrap = true;
  int max_depth = 0;  // 0 -> unlimited
  int min_samples_split = 2;
};

// Gini-impurity CART forest; split candidates are midpoints of consecutive
// sorted unique values, ties broken by lowest feature index then lowest
// threshold, so training is deterministic for a given rng. Prediction is a
// majority vote with ties going to the lower class id.
std::vector<int> rf_train_predict(const FeatureTable& train, const FeatureTable& test,
                                  const ForestConfig& config, Rng& rng);

struct ClassificationReport {
  int order = 0;
  bool stratified = false;
  int repeats = 0;
  double mu = 0.0;      // mean test accuracy, percent
  double sigma = 0.0;   // sample stddev, percent
  double p_value = 1.0; // one-sided z against 50%
  std::vector<double> accuracies;
};

// Per repeat: class-stratified random 80/20 split (train fraction per
// class, rounded down), train a forest, record test accuracy.
ClassificationReport repeated_holdout_eval(const FeatureTable& features,
                                           const ForestConfig& config, int repeats,
                                           double train_fraction, std::uint64_t seed);

}  // namespace codym
