// Copyright 2026 The Triage Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "triage/common/archive.hpp"
#include "triage/common/model_output.hpp"
#include "triage/corpus/sampling.hpp"
#include "triage/textprep/feature_selection.hpp"
#include "triage/textprep/hashing.hpp"

namespace triage::gbdt {

enum class CorpusFilter { kAll, kCriOnly };

struct GbdtConfig {
  std::size_t num_trees = 100;
  std::size_t max_leaves = 20;
  double learning_rate = 0.2;
  std::size_t min_examples_per_leaf = 10;
  std::size_t feature_top_k = 30000;
  CorpusFilter corpus_filter = CorpusFilter::kAll;
  std::size_t num_buckets = 10;
  double l2_regularization = 1.0;
  std::size_t max_bins = 64;
  /// Worker threads for family training; 0 picks the hardware concurrency.
  std::size_t threads = 0;

  static GbdtConfig general();
  static GbdtConfig cri_specialized();
  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

/// One regression tree in flattened form. Node 0 is the root; a node with
/// feature < 0 is a leaf. Examples go left when x[feature] <= threshold.
struct Tree {
  std::vector<std::int32_t> feature;  // dense column in the feature space
  std::vector<double> threshold;
  std::vector<std::int32_t> left;
  std::vector<std::int32_t> right;
  std::vector<double> value;  // leaf output, learning rate included

  std::size_t num_leaves() const;
  double max_abs_leaf() const;
  /// `row` holds (column, value) pairs sorted by column; absent columns are 0.
  double predict(std::span<const std::pair<std::uint32_t, double>> row) const;
};

struct ClassTrees {
  std::string team;
  std::vector<Tree> trees;
  /// Mean training log-loss before any tree and after each tree.
  std::vector<double> loss_history;
};

class GbdtModel {
 public:
  std::string model_id;
  textprep::FeatureSpace space;
  std::vector<ClassTrees> classes;

  std::vector<std::string> class_ids() const;
  /// Selected columns of `features`, as (column, value) sorted by column.
  std::vector<std::pair<std::uint32_t, double>> project(const textprep::HashedFeatureVector& features) const;
  /// Per-class raw scores (sum of leaf values), in class order.
  std::vector<double> raw_scores(const textprep::HashedFeatureVector& features) const;
  /// Confidence = sigmoid(raw) per class; top-5 by confidence.
  ModelOutput predict(const textprep::HashedFeatureVector& features) const;

  void save(Archive& archive) const;
  static GbdtModel load(const Archive& archive);
  void save(const std::filesystem::path& path) const;
  static GbdtModel load(const std::filesystem::path& path);
};

/// Labelled, hashed examples.
struct TrainingSet {
  std::vector<textprep::HashedFeatureVector> features;
  std::vector<std::string> labels;
};

/// Fits one-vs-all boosted trees over the selected features. Classes are the
/// distinct labels; a class listed in `expected_classes` without positives is
/// skipped with a warning. Throws TrainingError for an empty set, fewer than
/// two classes or a loss increase, ConfigError for a bad config.
GbdtModel train_gbdt(const TrainingSet& data, const textprep::FeatureSpace& space, const GbdtConfig& config,
                     std::span<const std::string> expected_classes = {});

using FeatureLookup = std::function<const textprep::HashedFeatureVector&(const corpus::Incident&)>;

/// Builds the bucket's training set (after the config's corpus filter).
TrainingSet make_training_set(const corpus::Bucket& bucket, const GbdtConfig& config,
                              const FeatureLookup& features);

/// One model per bucket: MI selection of feature_top_k columns on the
/// bucket, then train_gbdt. Models are named `<family>-<bucket>`. Buckets are
/// trained independently, in parallel when threads allow.
std::vector<GbdtModel> train_bucketed_family(std::span<const corpus::Bucket> buckets, const GbdtConfig& config,
                                             const FeatureLookup& features, const std::string& family);

double sigmoid(double x);

}  // namespace triage::gbdt
