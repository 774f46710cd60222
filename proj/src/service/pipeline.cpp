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

#include "triage/service/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"
#include "triage/common/hash.hpp"
#include "triage/ensemble/merge.hpp"
#include "triage/retrieval/document.hpp"
#include "triage/textprep/pipeline.hpp"

namespace triage::service {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kManifestFormat = 1;

// Reads known keys of one config object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  template <typename T>
  Section& take(const char* key, T& field) {
    seen_.insert(key);
    if (!j_.contains(key)) return *this;
    try {
      field = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config key " + path_ + key + " has the wrong type");
    }
    return *this;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError("unknown config key " + path_ + key);
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

ordered_json gbdt_json(const gbdt::GbdtConfig& c) {
  return {{"num_trees", c.num_trees},
          {"max_leaves", c.max_leaves},
          {"learning_rate", c.learning_rate},
          {"min_examples_per_leaf", c.min_examples_per_leaf},
          {"feature_top_k", c.feature_top_k},
          {"num_buckets", c.num_buckets},
          {"l2_regularization", c.l2_regularization},
          {"max_bins", c.max_bins},
          {"threads", c.threads}};
}

void read_gbdt(const json& j, const std::string& path, gbdt::GbdtConfig& c) {
  Section(j, path)
      .take("num_trees", c.num_trees)
      .take("max_leaves", c.max_leaves)
      .take("learning_rate", c.learning_rate)
      .take("min_examples_per_leaf", c.min_examples_per_leaf)
      .take("feature_top_k", c.feature_top_k)
      .take("num_buckets", c.num_buckets)
      .take("l2_regularization", c.l2_regularization)
      .take("max_bins", c.max_bins)
      .take("threads", c.threads)
      .finish();
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) { return hash_combine(fmix64(seed), stream); }

corpus::SamplingConfig family_sampling(const PipelineConfig& config, std::size_t buckets, std::uint64_t stream) {
  auto s = config.sampling;
  s.num_buckets = buckets;
  s.rng_seed = stream_seed(config.seed, stream);
  return s;
}

std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

// ---- PipelineConfig -------------------------------------------------------

void PipelineConfig::validate() const {
  if (!(test_days > 0.0)) throw ConfigError("test_days must be > 0");
  if (min_team_incidents < 1) throw ConfigError("min_team_incidents must be >= 1");
  if (!(stoplist_threshold > 0.0 && stoplist_threshold < 1.0)) throw ConfigError("stoplist_threshold must lie in (0,1)");
  if (!(gate_tolerance >= 0.0 && gate_tolerance <= 1.0)) throw ConfigError("gate_tolerance must lie in [0,1]");
  family_sampling(*this, mart.num_buckets, 1).validate();
  mart.validate();
  cri.validate();
  if (index.alpha < 0.0 || index.alpha > 1.0) throw ConfigError("index.alpha must lie in [0,1]");
  lsh.validate();
  cnn.validate();
}

ordered_json PipelineConfig::to_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["test_days"] = test_days;
  j["min_team_incidents"] = min_team_incidents;
  j["stoplist_threshold"] = stoplist_threshold;
  j["core_services"] = core_services;
  j["gate_tolerance"] = gate_tolerance;
  j["sampling"] = {{"per_class_cap", sampling.per_class_cap},
                   {"recency_halflife_days", sampling.recency_halflife_days},
                   {"same_title_cap", sampling.same_title_cap},
                   {"high_severity_quota", sampling.high_severity_quota},
                   {"max_bucket_examples", sampling.max_bucket_examples}};
  j["mart"] = gbdt_json(mart);
  j["cri"] = gbdt_json(cri);
  j["index"] = {{"alpha", index.alpha}, {"local_size", index.local_size}, {"global_size", index.global_size}};
  j["lsh"] = {{"num_hashes", lsh.num_hashes}, {"bands", lsh.bands},   {"shards", lsh.shards},
              {"neighbors", lsh.neighbors},   {"seed", lsh.seed}};
  j["cnn"] = {{"embed_dim", cnn.embed_dim},
              {"max_tokens", cnn.max_tokens},
              {"filter_counts", cnn.filter_counts},
              {"filter_width", cnn.filter_width},
              {"dropout_rate", cnn.dropout_rate},
              {"epochs", cnn.epochs},
              {"batch_size", cnn.batch_size},
              {"learning_rate", cnn.learning_rate},
              {"momentum", cnn.momentum},
              {"text_vocab", cnn.text_vocab},
              {"context_embed_dim", cnn.context_embed_dim},
              {"context_width", cnn.context_width},
              {"bn_momentum", cnn.bn_momentum}};
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j, PipelineConfig base) {
  PipelineConfig c = std::move(base);
  Section top(j, "");
  top.take("seed", c.seed)
      .take("test_days", c.test_days)
      .take("min_team_incidents", c.min_team_incidents)
      .take("stoplist_threshold", c.stoplist_threshold)
      .take("core_services", c.core_services)
      .take("gate_tolerance", c.gate_tolerance);
  if (const auto* s = top.child("sampling")) {
    Section(*s, "sampling.")
        .take("per_class_cap", c.sampling.per_class_cap)
        .take("recency_halflife_days", c.sampling.recency_halflife_days)
        .take("same_title_cap", c.sampling.same_title_cap)
        .take("high_severity_quota", c.sampling.high_severity_quota)
        .take("max_bucket_examples", c.sampling.max_bucket_examples)
        .finish();
  }
  if (const auto* s = top.child("mart")) read_gbdt(*s, "mart.", c.mart);
  if (const auto* s = top.child("cri")) read_gbdt(*s, "cri.", c.cri);
  if (const auto* s = top.child("index")) {
    Section(*s, "index.")
        .take("alpha", c.index.alpha)
        .take("local_size", c.index.local_size)
        .take("global_size", c.index.global_size)
        .finish();
  }
  if (const auto* s = top.child("lsh")) {
    Section(*s, "lsh.")
        .take("num_hashes", c.lsh.num_hashes)
        .take("bands", c.lsh.bands)
        .take("shards", c.lsh.shards)
        .take("neighbors", c.lsh.neighbors)
        .take("seed", c.lsh.seed)
        .finish();
  }
  if (const auto* s = top.child("cnn")) {
    Section(*s, "cnn.")
        .take("embed_dim", c.cnn.embed_dim)
        .take("max_tokens", c.cnn.max_tokens)
        .take("filter_counts", c.cnn.filter_counts)
        .take("filter_width", c.cnn.filter_width)
        .take("dropout_rate", c.cnn.dropout_rate)
        .take("epochs", c.cnn.epochs)
        .take("batch_size", c.cnn.batch_size)
        .take("learning_rate", c.cnn.learning_rate)
        .take("momentum", c.cnn.momentum)
        .take("text_vocab", c.cnn.text_vocab)
        .take("context_embed_dim", c.cnn.context_embed_dim)
        .take("context_width", c.cnn.context_width)
        .take("bn_momentum", c.cnn.bn_momentum)
        .finish();
  }
  top.finish();
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::from_json(const json& j) { return from_json(j, PipelineConfig{}); }

PipelineConfig PipelineConfig::load(const fs::path& path) { return load(path, PipelineConfig{}); }

PipelineConfig PipelineConfig::load(const fs::path& path, PipelineConfig base) {
  try {
    return from_json(read_json(path), std::move(base));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
}

PipelineConfig PipelineConfig::fast() {
  PipelineConfig c;
  c.sampling.per_class_cap = 120;
  for (auto* g : {&c.mart, &c.cri}) {
    g->num_trees = 15;
    g->feature_top_k = 4000;
  }
  c.cnn.epochs = 4;
  c.cnn.embed_dim = 16;
  c.cnn.filter_counts = {8, 16, 32};
  c.cnn.text_vocab = 1 << 12;
  c.cnn.context_embed_dim = 8;
  c.cnn.context_width = 16;
  return c;
}

// ---- TriageSystem ---------------------------------------------------------

struct TriageSystem::State {
  PipelineConfig config;
  textprep::Stoplist stoplist;
  corpus::Corpus train;
  std::set<std::string> other_members;
  std::vector<std::string> classes;
  std::vector<gbdt::GbdtModel> mart;
  std::vector<gbdt::GbdtModel> cri;
  retrieval::InvertedIndex index;
  retrieval::LshIndex similar;
  std::unique_ptr<dnn::CnnModel> cnn;
  std::string fingerprint;
};

TriageSystem::TriageSystem(std::unique_ptr<State> state) : state_(std::move(state)) {}
TriageSystem::TriageSystem(TriageSystem&&) noexcept = default;
TriageSystem& TriageSystem::operator=(TriageSystem&&) noexcept = default;
TriageSystem::~TriageSystem() = default;

PreparedQuery TriageSystem::prepare(const corpus::Incident& incident) const {
  PreparedQuery q;
  q.incident = incident;
  q.tokens = textprep::prepare_tokens(incident, state_->stoplist);
  q.features = textprep::featurize(q.tokens, incident);
  return q;
}

std::vector<ModelInfo> TriageSystem::models() const {
  std::vector<ModelInfo> out;
  for (const auto& m : state_->mart) out.push_back({m.model_id, "mart"});
  for (const auto& m : state_->cri) out.push_back({m.model_id, "cri"});
  out.push_back({retrieval::InvertedIndex::kModelId, "idx"});
  out.push_back({retrieval::LshIndex::kModelId, "si"});
  out.push_back({dnn::CnnModel::kModelId, "dnn"});
  return out;
}

ModelOutput TriageSystem::predict(const std::string& model_id, const PreparedQuery& query) const {
  for (const auto* family : {&state_->mart, &state_->cri}) {
    for (const auto& m : *family) {
      if (m.model_id == model_id) return m.predict(query.features);
    }
  }
  if (model_id == retrieval::InvertedIndex::kModelId) return state_->index.predict(query.tokens);
  if (model_id == retrieval::LshIndex::kModelId) return state_->similar.predict(query.tokens);
  if (model_id == dnn::CnnModel::kModelId) return state_->cnn->predict(query.incident);
  throw NotFoundError("unknown model " + model_id);
}

std::vector<ModelOutput> TriageSystem::family_outputs(const corpus::Incident& incident) const {
  const auto q = prepare(incident);
  std::map<std::string, std::vector<ModelOutput>> by_family;
  for (const auto& info : models()) by_family[info.family].push_back(predict(info.id, q));
  std::vector<ModelOutput> out;
  for (const auto& family : eval::kFamilies) {
    auto it = by_family.find(family);
    if (it == by_family.end()) continue;
    out.push_back(ensemble::merge_family(it->second, family));
  }
  return out;
}

eval::FamilyPredictor TriageSystem::family_predictor() const {
  return [this](const corpus::Incident& incident) { return family_outputs(incident); };
}

const PipelineConfig& TriageSystem::config() const { return state_->config; }
const textprep::Stoplist& TriageSystem::stoplist() const { return state_->stoplist; }
const corpus::Corpus& TriageSystem::training_corpus() const { return state_->train; }
const std::set<std::string>& TriageSystem::other_members() const { return state_->other_members; }
const std::vector<std::string>& TriageSystem::classes() const { return state_->classes; }
const retrieval::InvertedIndex& TriageSystem::inverted_index() const { return state_->index; }
const retrieval::LshIndex& TriageSystem::similar_incidents() const { return state_->similar; }
const std::string& TriageSystem::corpus_fingerprint() const { return state_->fingerprint; }

void TriageSystem::save(const fs::path& dir, const json& gate, const std::string& version) const {
  fs::create_directories(dir / "models");
  ordered_json manifest;
  manifest["format"] = kManifestFormat;
  manifest["version"] = version.empty() ? dir.filename().string() : version;
  manifest["corpus_fingerprint"] = state_->fingerprint;
  manifest["training_corpus"] = "corpus.jsonl";
  manifest["stoplist"] = "stoplist.json";
  manifest["classes"] = state_->classes;
  manifest["other_members"] = state_->other_members;
  manifest["models"] = ordered_json::array();
  manifest["feature_spaces"] = ordered_json::object();
  manifest["indexes"] = ordered_json::object();
  for (const auto& info : models()) {
    const auto file = "models/" + info.id + ".bin";
    manifest["models"].push_back({{"id", info.id}, {"family", info.family}, {"file", file}});
    if (info.family == "mart" || info.family == "cri") manifest["feature_spaces"][info.id] = file;
    if (info.family == "idx" || info.family == "si") manifest["indexes"][info.id] = file;
  }
  manifest["config"] = state_->config.to_json();
  manifest["eval_gate"] = gate;

  for (const auto* family : {&state_->mart, &state_->cri}) {
    for (const auto& m : *family) m.save(dir / "models" / (m.model_id + ".bin"));
  }
  Archive idx;
  state_->index.save(idx);
  idx.save(dir / "models" / "idx.bin");
  Archive si;
  state_->similar.save(si);
  si.save(dir / "models" / "si.bin");
  state_->cnn->save(dir / "models" / "dnn.bin");
  write_file_atomic(dir / "stoplist.json", state_->stoplist.to_json());
  corpus::save_corpus(state_->train, dir / "corpus.jsonl");
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

TriageSystem TriageSystem::load(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  try {
    if (manifest.at("format").get<int>() != kManifestFormat) throw ValidationError("unsupported manifest format");
    auto state = std::make_unique<State>();
    state->config = PipelineConfig::from_json(manifest.at("config"));
    state->stoplist = textprep::Stoplist::from_json(read_file(dir / manifest.at("stoplist").get<std::string>()));
    auto loaded = corpus::load_corpus(dir / manifest.at("training_corpus").get<std::string>());
    if (!loaded.rejects.empty()) throw ValidationError("artifact training corpus has invalid records");
    state->train = std::move(loaded.corpus);
    state->other_members = manifest.at("other_members").get<std::set<std::string>>();
    state->classes = manifest.at("classes").get<std::vector<std::string>>();
    state->fingerprint = manifest.at("corpus_fingerprint").get<std::string>();
    for (const auto& entry : manifest.at("models")) {
      const auto family = entry.at("family").get<std::string>();
      const auto path = dir / entry.at("file").get<std::string>();
      if (family == "mart") {
        state->mart.push_back(gbdt::GbdtModel::load(path));
      } else if (family == "cri") {
        state->cri.push_back(gbdt::GbdtModel::load(path));
      } else if (family == "idx") {
        state->index = retrieval::InvertedIndex::load(Archive::load(path));
      } else if (family == "si") {
        state->similar = retrieval::LshIndex::load(Archive::load(path));
      } else if (family == "dnn") {
        state->cnn = std::make_unique<dnn::CnnModel>(dnn::CnnModel::load(path));
      } else {
        throw ValidationError("unknown model family " + family);
      }
    }
    if (!state->cnn) throw ValidationError("artifact has no dnn model");
    return TriageSystem(std::move(state));
  } catch (const json::exception& e) {
    throw ValidationError("malformed manifest in " + dir.string() + ": " + e.what());
  }
}

TriageSystem train_system(const corpus::Corpus& train, const PipelineConfig& config,
                          const std::string& corpus_fingerprint) {
  config.validate();
  if (train.empty()) throw ValidationError("empty training corpus");
  auto state = std::make_unique<TriageSystem::State>();
  state->config = config;
  state->train = train;
  state->fingerprint =
      corpus_fingerprint.empty() ? hex(stable_hash(corpus::serialize_corpus(train))) : corpus_fingerprint;
  state->stoplist = textprep::build_stoplist(train, config.stoplist_threshold);

  const auto merged = corpus::merge_infrequent_teams(train, config.min_team_incidents);
  for (const auto& [team, count] : train.team_counts()) {
    if (count < config.min_team_incidents) state->other_members.insert(team);
  }
  state->classes = merged.teams();

  std::unordered_map<std::string, textprep::HashedFeatureVector> features;
  for (const auto& inc : merged.incidents()) {
    features.emplace(inc.id, textprep::featurize(textprep::prepare_tokens(inc, state->stoplist), inc));
  }
  const gbdt::FeatureLookup lookup = [&features](const corpus::Incident& inc) -> const textprep::HashedFeatureVector& {
    return features.at(inc.id);
  };

  const auto buckets = corpus::sample_and_partition(merged, family_sampling(config, config.mart.num_buckets, 1));
  state->mart = gbdt::train_bucketed_family(buckets, config.mart, lookup, "mart");

  const auto cri_corpus = merged.filter([](const corpus::Incident& inc) { return inc.is_cri(); });
  if (cri_corpus.teams().size() >= 2) {
    const auto cri_buckets =
        corpus::sample_and_partition(cri_corpus, family_sampling(config, config.cri.num_buckets, 2));
    state->cri = gbdt::train_bucketed_family(cri_buckets, config.cri, lookup, "cri");
  } else {
    spdlog::warn("fewer than two teams have CRIs; the CRI family is not trained");
  }

  const auto documents = retrieval::make_documents(merged, state->stoplist);
  state->index = retrieval::InvertedIndex::build(documents, config.index);
  state->similar = retrieval::LshIndex::build(documents, config.lsh);

  auto cnn_config = config.cnn;
  cnn_config.seed = stream_seed(config.seed, 3);
  cnn_config.classes = state->classes;
  state->cnn = std::make_unique<dnn::CnnModel>(dnn::train_cnn(merged, cnn_config, state->stoplist));
  return TriageSystem(std::move(state));
}

std::vector<eval::ScenarioSlice> system_slices(const TriageSystem& system) {
  auto slices = eval::standard_slices(system.config().core_services);
  slices.push_back(eval::cold_start_slice(system.training_corpus()));
  return slices;
}

eval::EvalReport evaluate_system(const TriageSystem& system, const corpus::Corpus& test, bool with_ablation) {
  const auto slices = system_slices(system);
  eval::EvalOptions options;
  options.other_members = system.other_members();
  const auto predictions = eval::predict_all(system.family_predictor(), test, options.threads);
  eval::EvalReport report;
  report.incidents = test.size();
  report.slices = eval::score_slices(predictions, test, slices, eval::kFamilies, options);
  if (with_ablation) {
    const auto subsets = eval::iteration_subsets();
    report.ablation = eval::ablation(predictions, test, slices, subsets, options);
  }
  return report;
}

// ---- ArtifactStore --------------------------------------------------------

ArtifactStore::ArtifactStore(fs::path root) : root_(std::move(root)) {}

std::optional<std::string> ArtifactStore::current() const {
  const auto pointer = root_ / "CURRENT";
  if (!fs::exists(pointer)) return std::nullopt;
  auto name = read_file(pointer);
  while (!name.empty() && (name.back() == '\n' || name.back() == '\r')) name.pop_back();
  if (name.empty()) return std::nullopt;
  return name;
}

std::vector<std::string> ArtifactStore::versions() const {
  std::vector<std::string> out;
  const auto dir = root_ / "versions";
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_directory() && name.size() == 5 && name[0] == 'v' &&
        std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      out.push_back(name);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

fs::path ArtifactStore::version_dir(const std::string& version) const { return root_ / "versions" / version; }

std::string ArtifactStore::save(const TriageSystem& system, const json& gate) {
  const auto existing = versions();
  const int next = existing.empty() ? 1 : std::stoi(existing.back().substr(1)) + 1;
  char name[16];
  std::snprintf(name, sizeof name, "v%04d", next);
  const auto staging = root_ / "versions" / (std::string(".") + name + ".tmp");
  fs::remove_all(staging);
  fs::create_directories(staging);
  system.save(staging, gate, name);
  fs::rename(staging, version_dir(name));
  return name;
}

void ArtifactStore::promote(const std::string& version) {
  if (!fs::exists(version_dir(version) / "manifest.json")) throw NotFoundError("no artifact version " + version);
  write_file_atomic(root_ / "CURRENT", version + "\n");
}

TriageSystem ArtifactStore::load_current() const {
  const auto version = current();
  if (!version) throw NotFoundError("no promoted artifact in " + root_.string());
  return TriageSystem::load(version_dir(*version));
}

TriageSystem load_artifact(const fs::path& path) {
  if (fs::exists(path / "manifest.json")) return TriageSystem::load(path);
  return ArtifactStore(path).load_current();
}

// ---- retrain --------------------------------------------------------------

ordered_json RetrainResult::to_json() const {
  ordered_json j;
  j["version"] = version;
  j["promoted"] = promoted;
  j["recall_at_5"] = recall_at_5;
  j["current_recall_at_5"] = current_recall_at_5 ? ordered_json(*current_recall_at_5) : ordered_json(nullptr);
  j["tolerance"] = tolerance;
  j["test_incidents"] = test_incidents;
  return j;
}

RetrainResult retrain(ArtifactStore& store, const corpus::Corpus& corpus, const PipelineConfig& config,
                      bool force_promote) {
  config.validate();
  if (corpus.empty()) throw ValidationError("empty corpus");
  const auto split = corpus::split_train_test(corpus, corpus::trailing_cutoff(corpus, config.test_days));
  if (split.warning) spdlog::warn("{}", *split.warning);
  if (split.train.empty() || split.test.empty()) throw ValidationError("temporal split leaves an empty side");

  RetrainResult result;
  result.tolerance = config.gate_tolerance;
  result.test_incidents = split.test.size();
  const auto fresh = train_system(split.train, config);
  result.report = evaluate_system(fresh, split.test);
  result.recall_at_5 = result.report.slice("All")->at_n[eval::kMaxN - 1].recall;

  std::optional<std::string> current_version = store.current();
  if (current_version) {
    const auto current = store.load_current();
    result.current_recall_at_5 = evaluate_system(current, split.test).slice("All")->at_n[eval::kMaxN - 1].recall;
  }
  result.promoted = force_promote || !result.current_recall_at_5 ||
                    result.recall_at_5 >= *result.current_recall_at_5 - result.tolerance;

  ordered_json gate;
  gate["recall_at_5"] = result.recall_at_5;
  gate["current_version"] = current_version ? ordered_json(*current_version) : ordered_json(nullptr);
  gate["current_recall_at_5"] =
      result.current_recall_at_5 ? ordered_json(*result.current_recall_at_5) : ordered_json(nullptr);
  gate["tolerance"] = result.tolerance;
  gate["test_incidents"] = result.test_incidents;
  gate["forced"] = force_promote;
  gate["promoted"] = result.promoted;
  result.version = store.save(fresh, gate);
  if (result.promoted) store.promote(result.version);
  spdlog::info("retrained {}: recall@5 {:.4f}, {}", result.version, result.recall_at_5,
               result.promoted ? "promoted" : "held back");
  return result;
}

}  // namespace triage::service
