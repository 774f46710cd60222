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
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "triage/corpus/corpus.hpp"
#include "triage/corpus/sampling.hpp"
#include "triage/dnn/cnn.hpp"
#include "triage/eval/evaluate.hpp"
#include "triage/gbdt/gbdt.hpp"
#include "triage/retrieval/inverted_index.hpp"
#include "triage/retrieval/lsh.hpp"
#include "triage/textprep/hashing.hpp"
#include "triage/textprep/phrases.hpp"
#include "triage/textprep/tokenize.hpp"

namespace triage::service {

struct PipelineConfig {
  std::uint64_t seed = 0;
  /// Trailing window held out for evaluation and the retrain gate.
  double test_days = 3.0;
  /// Teams with fewer training incidents are folded into Other for the classifiers.
  std::size_t min_team_incidents = 10;
  double stoplist_threshold = 0.2;
  std::set<std::string> core_services{"svc-00", "svc-01", "svc-02"};
  /// Allowed recall@5 drop before a retrained artifact is held back.
  double gate_tolerance = 0.01;
  /// Bucket count and seed are taken from the family configs and `seed`.
  corpus::SamplingConfig sampling;
  gbdt::GbdtConfig mart = gbdt::GbdtConfig::general();
  gbdt::GbdtConfig cri = gbdt::GbdtConfig::cri_specialized();
  retrieval::InvertedIndexOptions index;
  retrieval::LshOptions lsh;
  /// Classes and seed are set by the pipeline.
  dnn::CnnConfig cnn;

  /// Throws ConfigError.
  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// `base` overridden by the keys present. Throws ConfigError on unknown
  /// keys or mistyped values.
  static PipelineConfig from_json(const nlohmann::json& j, PipelineConfig base);
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path, PipelineConfig base);
  static PipelineConfig load(const std::filesystem::path& path);
  /// Smaller models for tests and smoke runs.
  static PipelineConfig fast();
};

/// Per-request preprocessing shared by every model.
struct PreparedQuery {
  corpus::Incident incident;
  textprep::TokenStream tokens;
  textprep::HashedFeatureVector features;
};

struct ModelInfo {
  std::string id;
  std::string family;
};

/// Every trained model plus the preprocessing state it needs. Immutable
/// after construction and safe to share across threads.
class TriageSystem {
 public:
  TriageSystem(TriageSystem&&) noexcept;
  TriageSystem& operator=(TriageSystem&&) noexcept;
  ~TriageSystem();

  PreparedQuery prepare(const corpus::Incident& incident) const;
  /// mart-*, cri-*, idx, si, dnn.
  std::vector<ModelInfo> models() const;
  /// Throws NotFoundError for an unknown model id.
  ModelOutput predict(const std::string& model_id, const PreparedQuery& query) const;
  /// One output per family, buckets merged.
  std::vector<ModelOutput> family_outputs(const corpus::Incident& incident) const;
  eval::FamilyPredictor family_predictor() const;

  const PipelineConfig& config() const;
  const textprep::Stoplist& stoplist() const;
  /// Training incidents with their original labels.
  const corpus::Corpus& training_corpus() const;
  /// Teams folded into Other for the classifiers.
  const std::set<std::string>& other_members() const;
  /// Classifier classes (after the Other merge).
  const std::vector<std::string>& classes() const;
  const retrieval::InvertedIndex& inverted_index() const;
  const retrieval::LshIndex& similar_incidents() const;
  const std::string& corpus_fingerprint() const;

  /// Writes models, stoplist, training corpus and manifest into `dir`. The
  /// manifest version defaults to the directory name.
  void save(const std::filesystem::path& dir, const nlohmann::json& gate = nullptr,
            const std::string& version = "") const;
  static TriageSystem load(const std::filesystem::path& dir);

 private:
  struct State;
  explicit TriageSystem(std::unique_ptr<State> state);
  friend TriageSystem train_system(const corpus::Corpus&, const PipelineConfig&, const std::string&);
  std::unique_ptr<State> state_;
};

/// Trains every family on `train` (original labels).
TriageSystem train_system(const corpus::Corpus& train, const PipelineConfig& config,
                          const std::string& corpus_fingerprint = "");

/// Six standard slices plus ColdStart against the system's training corpus.
std::vector<eval::ScenarioSlice> system_slices(const TriageSystem& system);
eval::EvalReport evaluate_system(const TriageSystem& system, const corpus::Corpus& test, bool with_ablation = false);

/// Directory of versioned artifacts plus a CURRENT file naming the serving
/// version. Versions are written under a temporary name and renamed, and
/// CURRENT is replaced atomically.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::optional<std::string> current() const;
  std::vector<std::string> versions() const;
  std::filesystem::path version_dir(const std::string& version) const;
  /// Returns the new version name.
  std::string save(const TriageSystem& system, const nlohmann::json& gate = nullptr);
  void promote(const std::string& version);
  /// Throws NotFoundError when nothing was promoted.
  TriageSystem load_current() const;

 private:
  std::filesystem::path root_;
};

/// Loads a version directory, or the current version of a store root.
TriageSystem load_artifact(const std::filesystem::path& path);

struct RetrainResult {
  std::string version;
  bool promoted = false;
  double recall_at_5 = 0.0;
  std::optional<double> current_recall_at_5;
  double tolerance = 0.0;
  std::size_t test_incidents = 0;
  eval::EvalReport report;
  nlohmann::ordered_json to_json() const;
};

/// Splits off the trailing test window, trains, evaluates the new and the
/// current artifact on the same window and promotes the new one only when
/// its All-slice recall@5 is at least current - tolerance, or when
/// `force_promote` is set. Throws ValidationError when either side of the
/// split is empty.
RetrainResult retrain(ArtifactStore& store, const corpus::Corpus& corpus, const PipelineConfig& config,
                      bool force_promote = false);

}  // namespace triage::service
