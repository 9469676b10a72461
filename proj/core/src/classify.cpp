#include "codym/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "codym/stats.hpp"

namespace codym {

FeatureTable conversation_features(const Corpus& corpus, int order,
                                   const BinarizationRule& rule, bool stratified,
                                   const std::function<bool(const Conversation&)>& label_fn) {
  check_order(order);
  check_rule(rule);
  if (corpus.conversations.empty()) throw ValidationError("conversation_features: empty corpus");

  const int slots = transition_count_for(order);
  FeatureTable table;
  if (stratified) {
    for (int slot = 0; slot < slots; ++slot)
      table.feature_names.push_back("P:" + slot_name(slot, order));
    for (int slot = 0; slot < slots; ++slot)
      table.feature_names.push_back("C:" + slot_name(slot, order));
  } else {
    for (int slot = 0; slot < slots; ++slot)
      table.feature_names.push_back(slot_name(slot, order));
  }

  for (const auto& conversation : corpus.conversations) {
    const auto labels = label_conversation(conversation, rule);
    const auto events = state_sequence(labels, order);

    std::vector<double> row;
    bool usable = true;
    if (stratified) {
      for (Role role : {Role::Patient, Role::Clinician}) {
        std::vector<double> weight(std::size_t(slots), 0.0);
        double total = 0.0;
        for (const auto& event : events) {
          if (conversation.turns[event.turn_index].role != role) continue;
          weight[std::size_t(slot_of(event.state, event.label))] += 1.0;
          total += 1.0;
        }
        if (total == 0.0) {
          usable = false;
          break;
        }
        for (double w : weight) row.push_back(100.0 * w / total);
      }
    } else {
      std::vector<double> weight(std::size_t(slots), 0.0);
      double total = 0.0;
      for (const auto& event : events) {
        weight[std::size_t(slot_of(event.state, event.label))] += 1.0;
        total += 1.0;
      }
      if (total == 0.0) {
        usable = false;
      } else {
        for (double w : weight) row.push_back(100.0 * w / total);
      }
    }

    if (!usable) {
      table.excluded_ids.push_back(conversation.id);
      continue;
    }
    table.ids.push_back(conversation.id);
    table.rows.push_back(std::move(row));
    table.labels.push_back(label_fn(conversation) ? 1 : 0);
  }

  if (table.rows.empty())
    throw ValidationError("conversation_features: every conversation was excluded");
  return table;
}

namespace {

struct TreeNode {
  int feature = -1;          // -1 marks a leaf
  double threshold = 0.0;
  int left = -1, right = -1;
  int predicted = 0;
};

struct Dataset {
  const std::vector<std::vector<double>>* rows;
  const std::vector<int>* labels;
};

int majority(const Dataset& data, const std::vector<int>& indices) {
  int ones = 0;
  for (int i : indices) ones += (*data.labels)[std::size_t(i)];
  const int zeros = int(indices.size()) - ones;
  // Ties go to the lower class id.
  return ones > zeros ? 1 : 0;
}

double gini(int ones, int total) {
  if (total == 0) return 0.0;
  const double p = double(ones) / double(total);
  return 2.0 * p * (1.0 - p);
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& data, const ForestConfig& config, int features_per_split, Rng& rng)
      : data_(data), config_(config), features_per_split_(features_per_split), rng_(rng) {}

  std::vector<TreeNode> build(std::vector<int> indices) {
    nodes_.clear();
    grow(std::move(indices), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<int> indices, int depth) {
    const int node_id = int(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_[std::size_t(node_id)].predicted = majority(data_, indices);

    if (int(indices.size()) < config_.min_samples_split) return node_id;
    if (config_.max_depth > 0 && depth >= config_.max_depth) return node_id;

    int ones = 0;
    for (int i : indices) ones += (*data_.labels)[std::size_t(i)];
    if (ones == 0 || ones == int(indices.size())) return node_id;  // pure

    const auto split = best_split(indices, ones);
    if (split.feature < 0) return node_id;

    std::vector<int> left, right;
    for (int i : indices) {
      if ((*data_.rows)[std::size_t(i)][std::size_t(split.feature)] <= split.threshold)
        left.push_back(i);
      else
        right.push_back(i);
    }
    indices.clear();
    indices.shrink_to_fit();

    nodes_[std::size_t(node_id)].feature = split.feature;
    nodes_[std::size_t(node_id)].threshold = split.threshold;
    const int left_id = grow(std::move(left), depth + 1);
    nodes_[std::size_t(node_id)].left = left_id;
    const int right_id = grow(std::move(right), depth + 1);
    nodes_[std::size_t(node_id)].right = right_id;
    return node_id;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = std::numeric_limits<double>::infinity();
  };

  Split best_split(const std::vector<int>& indices, int total_ones) {
    const int width = int((*data_.rows).front().size());
    const int n = int(indices.size());
    const double parent = gini(total_ones, n);

    // Sample candidate features without replacement.
    std::vector<int> features(static_cast<std::size_t>(width));
    std::iota(features.begin(), features.end(), 0);
    for (int i = 0; i < features_per_split_ && i < width; ++i) {
      const int j = i + int(rng_.below(std::uint64_t(width - i)));
      std::swap(features[std::size_t(i)], features[std::size_t(j)]);
    }
    features.resize(std::size_t(std::min(features_per_split_, width)));
    // Evaluate in index order so ties resolve to the lowest feature.
    std::sort(features.begin(), features.end());

    Split best;
    std::vector<std::pair<double, int>> column(static_cast<std::size_t>(n));  // (value, label)
    for (int feature : features) {
      for (int i = 0; i < n; ++i) {
        const int row = indices[std::size_t(i)];
        column[std::size_t(i)] = {(*data_.rows)[std::size_t(row)][std::size_t(feature)],
                                  (*data_.labels)[std::size_t(row)]};
      }
      std::sort(column.begin(), column.end());

      int left_n = 0, left_ones = 0;
      for (int i = 0; i + 1 < n; ++i) {
        ++left_n;
        left_ones += column[std::size_t(i)].second;
        if (column[std::size_t(i)].first == column[std::size_t(i + 1)].first) continue;
        const double threshold =
            0.5 * (column[std::size_t(i)].first + column[std::size_t(i + 1)].first);
        const int right_n = n - left_n;
        const int right_ones = total_ones - left_ones;
        const double impurity = (double(left_n) * gini(left_ones, left_n) +
                                 double(right_n) * gini(right_ones, right_n)) /
                                double(n);
        // Strict improvement keeps ties at the lowest feature index and
        // lowest threshold, both already guaranteed by scan order.
        if (impurity < best.impurity - 1e-15) {
          best.feature = feature;
          best.threshold = threshold;
          best.impurity = impurity;
        }
      }
    }
    if (best.feature >= 0 && best.impurity >= parent - 1e-15) best.feature = -1;
    return best;
  }

  const Dataset& data_;
  const ForestConfig& config_;
  int features_per_split_;
  Rng& rng_;
  std::vector<TreeNode> nodes_;
};

int predict_tree(const std::vector<TreeNode>& tree, const std::vector<double>& row) {
  int node = 0;
  while (tree[std::size_t(node)].feature >= 0) {
    const auto& n = tree[std::size_t(node)];
    node = row[std::size_t(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return tree[std::size_t(node)].predicted;
}

}  // namespace

std::vector<int> rf_train_predict(const FeatureTable& train, const FeatureTable& test,
                                  const ForestConfig& config, Rng& rng) {
  if (train.rows.empty()) throw ValidationError("rf_train_predict: empty training set");
  if (config.trees < 1) throw ValidationError("rf_train_predict: need at least one tree");
  {
    const int ones = std::accumulate(train.labels.begin(), train.labels.end(), 0);
    if (ones == 0 || ones == int(train.labels.size()))
      throw ValidationError("rf_train_predict: training set has a single class");
  }
  const int width = int(train.width());
  for (const auto& row : test.rows)
    if (int(row.size()) != width) throw ValidationError("rf_train_predict: feature width mismatch");

  const int features_per_split =
      config.features_per_split > 0
          ? std::min(config.features_per_split, width)
          : int(std::ceil(std::sqrt(double(width))));

  Dataset data{&train.rows, &train.labels};
  const int n = int(train.rows.size());
  std::vector<int> votes(test.rows.size(), 0);

  for (int t = 0; t < config.trees; ++t) {
    std::vector<int> sample(static_cast<std::size_t>(n));
    if (config.bootstrap) {
      for (int i = 0; i < n; ++i) sample[std::size_t(i)] = int(rng.below(std::uint64_t(n)));
    } else {
      std::iota(sample.begin(), sample.end(), 0);
    }
    // A bootstrap resample can collapse to one class; such a tree becomes a
    // single majority leaf, which is fine.
    TreeBuilder builder(data, config, features_per_split, rng);
    const auto tree = builder.build(std::move(sample));
    for (std::size_t i = 0; i < test.rows.size(); ++i)
      votes[i] += predict_tree(tree, test.rows[i]);
  }

  std::vector<int> predictions(test.rows.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int ones = votes[i];
    const int zeros = config.trees - ones;
    predictions[i] = ones > zeros ? 1 : 0;  // tie -> lower class id
  }
  return predictions;
}

ClassificationReport repeated_holdout_eval(const FeatureTable& features,
                                           const ForestConfig& config, int repeats,
                                           double train_fraction, std::uint64_t seed) {
  if (repeats < 1) throw ValidationError("repeated_holdout_eval: repeats must be >= 1");
  if (train_fraction <= 0.0 || train_fraction >= 1.0)
    throw ValidationError("repeated_holdout_eval: train fraction outside (0,1)");

  std::vector<int> class0, class1;
  for (std::size_t i = 0; i < features.labels.size(); ++i)
    (features.labels[i] ? class1 : class0).push_back(int(i));
  if (class0.size() < 5 || class1.size() < 5)
    throw ValidationError("repeated_holdout_eval: each class needs >= 5 conversations (have " +
                          std::to_string(class0.size()) + " and " + std::to_string(class1.size()) +
                          ")");

  ClassificationReport report;
  report.repeats = repeats;
  report.accuracies.reserve(std::size_t(repeats));

  for (int r = 0; r < repeats; ++r) {
    Rng rng = Rng::stream(seed, std::uint64_t(r));

    FeatureTable train, test;
    train.feature_names = features.feature_names;
    test.feature_names = features.feature_names;
    for (const auto* cls : {&class0, &class1}) {
      std::vector<int> order = *cls;
      rng.shuffle(order);
      const std::size_t n_train = std::size_t(double(order.size()) * train_fraction);
      for (std::size_t i = 0; i < order.size(); ++i) {
        FeatureTable& dest = i < n_train ? train : test;
        const auto idx = std::size_t(order[i]);
        dest.ids.push_back(features.ids[idx]);
        dest.rows.push_back(features.rows[idx]);
        dest.labels.push_back(features.labels[idx]);
      }
    }

    const auto predictions = rf_train_predict(train, test, config, rng);
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
      if (predictions[i] == test.labels[i]) ++correct;
    report.accuracies.push_back(100.0 * double(correct) / double(predictions.size()));
  }

  report.mu = mean_of(report.accuracies);
  report.sigma = repeats > 1 ? sample_stddev(report.accuracies) : 0.0;
  if (report.sigma > 0.0) {
    report.p_value = one_sided_z_p(report.mu, report.sigma, 50.0);
  } else {
    // Degenerate accuracy distribution; take the z-score limit.
    report.p_value = report.mu > 50.0 ? 0.0 : 1.0;
  }
  return report;
}

}  // namespace codym
