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

#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"
#include "triage/common/random.hpp"
#include "triage/corpus/synthetic.hpp"
#include "triage/gbdt/gbdt.hpp"
#include "triage/textprep/pipeline.hpp"

using namespace triage;
using namespace triage::gbdt;
using textprep::FeatureSpace;
using textprep::HashedFeatureVector;

namespace {

HashedFeatureVector dense_row(const std::vector<double>& x) {
  HashedFeatureVector v;
  v.dim = 1024;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != 0.0) v.entries.push_back({static_cast<std::uint32_t>(i), x[i]});
  }
  return v;
}

FeatureSpace identity_space(std::size_t n) {
  FeatureSpace fs;
  fs.dim = 1024;
  for (std::uint32_t i = 0; i < n; ++i) {
    fs.selected.push_back(i);
    fs.mi_scores[i] = 1.0;
  }
  return fs;
}

Tree leaf(double v) {
  Tree t;
  t.feature = {-1};
  t.threshold = {0.0};
  t.left = {-1};
  t.right = {-1};
  t.value = {v};
  return t;
}

GbdtConfig small_config() {
  GbdtConfig c;
  c.num_trees = 1;
  c.max_leaves = 2;
  c.min_examples_per_leaf = 1;
  c.threads = 1;
  return c;
}

struct Fixture {
  corpus::Corpus corpus;
  std::map<std::string, HashedFeatureVector> features;
  FeatureLookup lookup() const {
    return [this](const corpus::Incident& inc) -> const HashedFeatureVector& { return features.at(inc.id); };
  }
};

Fixture synthetic_fixture(std::size_t teams, std::size_t per_team, std::uint64_t seed) {
  Fixture f;
  f.corpus = corpus::generate_synthetic({.num_teams = teams, .incidents_per_team = per_team}, seed);
  for (const auto& inc : f.corpus.incidents()) {
    f.features[inc.id] = textprep::featurize(textprep::prepare_tokens(inc), inc);
  }
  return f;
}

}  // namespace

TEST(Gbdt, StumpSplitsOnSeparatingFeature) {
  TrainingSet data;
  data.features = {dense_row({1, 0}), dense_row({1, 0}), dense_row({0, 0}), dense_row({0, 0})};
  data.labels = {"A", "A", "B", "B"};
  const auto model = train_gbdt(data, identity_space(2), small_config());
  ASSERT_EQ(model.classes.size(), 2u);
  for (const auto& ct : model.classes) {
    ASSERT_EQ(ct.trees.size(), 1u);
    EXPECT_EQ(ct.trees[0].feature[0], 0);
    EXPECT_DOUBLE_EQ(ct.trees[0].threshold[0], 0.0);
    ASSERT_EQ(ct.loss_history.size(), 2u);
    EXPECT_LT(ct.loss_history[1], ct.loss_history[0]);
    EXPECT_NEAR(ct.loss_history[0], std::log(2.0), 1e-12);
  }
  const auto out = model.predict(dense_row({1, 0}));
  EXPECT_EQ(out.top[0].team, "A");
}

TEST(Gbdt, ConfigValidation) {
  GbdtConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.num_trees = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(GbdtConfig::general().feature_top_k, 30000u);
  EXPECT_EQ(GbdtConfig::general().num_buckets, 10u);
  EXPECT_EQ(GbdtConfig::cri_specialized().feature_top_k, 50000u);
  EXPECT_EQ(GbdtConfig::cri_specialized().num_buckets, 3u);
  EXPECT_EQ(GbdtConfig::cri_specialized().corpus_filter, CorpusFilter::kCriOnly);
}

TEST(Gbdt, RejectsDegenerateBuckets) {
  TrainingSet empty;
  EXPECT_THROW(train_gbdt(empty, identity_space(1), small_config()), TrainingError);
  TrainingSet one;
  one.features = {dense_row({1}), dense_row({0})};
  one.labels = {"A", "A"};
  EXPECT_THROW(train_gbdt(one, identity_space(1), small_config()), TrainingError);
}

TEST(Gbdt, SkipsExpectedClassWithoutPositives) {
  TrainingSet data;
  data.features = {dense_row({1}), dense_row({0})};
  data.labels = {"A", "B"};
  const std::vector<std::string> expected = {"A", "B", "C"};
  const auto model = train_gbdt(data, identity_space(1), small_config(), expected);
  EXPECT_EQ(model.class_ids(), (std::vector<std::string>{"A", "B"}));
}

TEST(GbdtPredict, ZeroLeavesGiveOneHalf) {
  GbdtModel m;
  m.classes.push_back({"A", {leaf(0.0), leaf(0.0)}, {}});
  const auto out = m.predict(dense_row({}));
  ASSERT_EQ(out.top.size(), 1u);
  EXPECT_DOUBLE_EQ(out.top[0].confidence, 0.5);
}

TEST(GbdtPredict, SigmoidOfRawScores) {
  GbdtModel m;
  m.classes.push_back({"A", {leaf(1.5), leaf(0.5)}, {}});
  m.classes.push_back({"B", {leaf(-2.0)}, {}});
  const auto out = m.predict(dense_row({}));
  ASSERT_EQ(out.top.size(), 2u);
  EXPECT_EQ(out.top[0].team, "A");
  EXPECT_NEAR(out.top[0].confidence, 0.8807970779778823, 1e-12);
  EXPECT_EQ(out.top[1].team, "B");
  EXPECT_NEAR(out.top[1].confidence, 0.11920292202211755, 1e-12);
}

TEST(GbdtPredict, TopHasAtMostFiveClasses) {
  GbdtModel m;
  for (int i = 0; i < 7; ++i) m.classes.push_back({"T" + std::to_string(i), {leaf(i * 0.1)}, {}});
  EXPECT_EQ(m.predict(dense_row({})).top.size(), 5u);
  EXPECT_EQ(m.predict(dense_row({})).scores.size(), 7u);
}

// Exhaustive search for the best first split of each class, straight from the
// definitions: F0 = 0, gradient 0.5 - y, hessian 0.25.
TEST(Gbdt, FirstTreeMatchesExhaustiveStumpOracle) {
  Rng rng(50);
  const std::size_t n = 50, features = 8;
  std::vector<std::vector<double>> x(n, std::vector<double>(features));
  std::vector<std::string> labels(n);
  TrainingSet data;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % 3;
    labels[i] = "c" + std::to_string(c);
    for (std::size_t f = 0; f < features; ++f) {
      const bool informative = f == c || f == c + 3;
      x[i][f] = static_cast<double>(rng.below(informative ? 3 : 5)) + (informative ? 2.0 * rng.below(2) : 0.0);
    }
    data.features.push_back(dense_row(x[i]));
  }
  data.labels = labels;
  GbdtConfig cfg = small_config();
  cfg.min_examples_per_leaf = 4;
  const double lambda = cfg.l2_regularization;
  const auto model = train_gbdt(data, identity_space(features), cfg);

  for (const auto& ct : model.classes) {
    double best_gain = 0.0;
    int best_f = -1;
    double best_t = 0.0;
    double G = 0.0, H = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      G += 0.5 - (labels[i] == ct.team ? 1.0 : 0.0);
      H += 0.25;
    }
    for (std::size_t f = 0; f < features; ++f) {
      std::vector<double> values;
      for (std::size_t i = 0; i < n; ++i) values.push_back(x[i][f]);
      values.push_back(0.0);
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const double t = values[k];
        double gl = 0, hl = 0;
        std::size_t nl = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (x[i][f] <= t) {
            gl += 0.5 - (labels[i] == ct.team ? 1.0 : 0.0);
            hl += 0.25;
            ++nl;
          }
        }
        if (nl < cfg.min_examples_per_leaf || n - nl < cfg.min_examples_per_leaf) continue;
        const double gr = G - gl, hr = H - hl;
        const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - G * G / (H + lambda);
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_t = t;
        }
      }
    }
    ASSERT_GE(best_f, 0);
    EXPECT_EQ(ct.trees[0].feature[0], best_f) << ct.team;
    EXPECT_DOUBLE_EQ(ct.trees[0].threshold[0], best_t) << ct.team;
  }
}

TEST(Gbdt, LossIsMonotoneAndDeltaConfidenceBounded) {
  const auto f = synthetic_fixture(5, 60, 11);
  corpus::SamplingConfig sc;
  sc.num_buckets = 2;
  sc.per_class_cap = 40;
  const auto buckets = corpus::sample_and_partition(f.corpus, sc);
  GbdtConfig cfg;
  cfg.num_trees = 30;
  cfg.num_buckets = 2;
  cfg.feature_top_k = 2000;
  cfg.threads = 1;
  const auto models = train_bucketed_family(buckets, cfg, f.lookup(), "mart");
  ASSERT_EQ(models.size(), 2u);
  EXPECT_EQ(models[1].model_id, "mart-1");
  for (const auto& m : models) {
    for (const auto& ct : m.classes) {
      ASSERT_EQ(ct.loss_history.size(), cfg.num_trees + 1);
      for (std::size_t t = 1; t < ct.loss_history.size(); ++t) {
        EXPECT_LE(ct.loss_history[t], ct.loss_history[t - 1]) << ct.team << " tree " << t;
      }
      EXPECT_LT(ct.loss_history.back(), 0.5 * ct.loss_history.front());
    }
    // Adding one tree moves a confidence by at most 0.25 * max|leaf|.
    for (std::size_t i = 0; i < 50; ++i) {
      const auto row = m.project(f.features.at(f.corpus.incidents()[i].id));
      for (const auto& ct : m.classes) {
        double raw = 0.0;
        for (const auto& t : ct.trees) {
          const double before = sigmoid(raw);
          raw += t.predict(row);
          EXPECT_LE(std::abs(sigmoid(raw) - before), 0.25 * t.max_abs_leaf() + 1e-15);
          EXPECT_LE(t.num_leaves(), cfg.max_leaves);
        }
      }
    }
  }
}

TEST(Gbdt, TrainingIsDeterministicToTheByte) {
  const auto f = synthetic_fixture(4, 40, 3);
  corpus::SamplingConfig sc;
  sc.num_buckets = 1;
  const auto buckets = corpus::sample_and_partition(f.corpus, sc);
  GbdtConfig cfg;
  cfg.num_trees = 10;
  cfg.num_buckets = 1;
  cfg.threads = 1;
  const auto a = train_bucketed_family(buckets, cfg, f.lookup(), "mart");
  const auto b = train_bucketed_family(buckets, cfg, f.lookup(), "mart");
  const auto dir = std::filesystem::temp_directory_path() / "triage_gbdt_det";
  std::filesystem::create_directories(dir);
  a[0].save(dir / "a.bin");
  b[0].save(dir / "b.bin");
  EXPECT_EQ(read_file(dir / "a.bin"), read_file(dir / "b.bin"));

  const auto loaded = GbdtModel::load(dir / "a.bin");
  for (const auto& inc : f.corpus.incidents()) {
    const auto& x = f.features.at(inc.id);
    EXPECT_EQ(loaded.raw_scores(x), a[0].raw_scores(x));
  }
}

TEST(Gbdt, PredictionIgnoresCallOrder) {
  const auto f = synthetic_fixture(3, 30, 5);
  corpus::SamplingConfig sc;
  sc.num_buckets = 1;
  const auto buckets = corpus::sample_and_partition(f.corpus, sc);
  GbdtConfig cfg;
  cfg.num_trees = 5;
  cfg.num_buckets = 1;
  const auto m = train_bucketed_family(buckets, cfg, f.lookup(), "mart")[0];
  std::vector<std::vector<double>> forward, backward;
  for (const auto& inc : f.corpus.incidents()) forward.push_back(m.raw_scores(f.features.at(inc.id)));
  for (auto it = f.corpus.incidents().rbegin(); it != f.corpus.incidents().rend(); ++it) {
    backward.insert(backward.begin(), m.raw_scores(f.features.at(it->id)));
  }
  EXPECT_EQ(forward, backward);
}

TEST(GbdtFamily, BucketCountsAndCriFilter) {
  const auto f = synthetic_fixture(4, 80, 9);
  GbdtConfig cfg = GbdtConfig::cri_specialized();
  cfg.num_trees = 3;
  cfg.min_examples_per_leaf = 2;
  corpus::SamplingConfig sc;
  sc.num_buckets = 3;
  const auto buckets = corpus::sample_and_partition(f.corpus, sc);
  const auto models = train_bucketed_family(buckets, cfg, f.lookup(), "cri");
  ASSERT_EQ(models.size(), 3u);
  std::map<std::string, std::size_t> cri_teams;
  for (const auto& inc : f.corpus.incidents()) cri_teams[inc.owning_team] += inc.is_cri();
  for (const auto& m : models) {
    for (const auto& team : m.class_ids()) EXPECT_GT(cri_teams[team], 0u);
  }
  const auto set = make_training_set(buckets[0], cfg, f.lookup());
  EXPECT_LT(set.features.size(), buckets[0].incidents.size());

  EXPECT_THROW(train_bucketed_family(std::span(buckets).first(2), cfg, f.lookup(), "cri"), ConfigError);
  cfg.num_buckets = 1;
  EXPECT_EQ(train_bucketed_family(std::span(buckets).first(1), cfg, f.lookup(), "cri").size(), 1u);
}

TEST(GbdtArchive, RejectsMalformedTrees) {
  GbdtModel m;
  m.space = identity_space(1);
  Tree bad;
  bad.feature = {0};
  bad.threshold = {0.0};
  bad.left = {5};
  bad.right = {6};
  bad.value = {0.0};
  m.classes.push_back({"A", {bad}, {}});
  Archive a;
  m.save(a);
  EXPECT_THROW(GbdtModel::load(a), ValidationError);
}
