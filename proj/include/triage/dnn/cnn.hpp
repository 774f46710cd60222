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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "triage/common/archive.hpp"
#include "triage/common/model_output.hpp"
#include "triage/common/random.hpp"
#include "triage/corpus/corpus.hpp"
#include "triage/textprep/phrases.hpp"

namespace triage::dnn {

inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

/// Contextual slots, in encoder order.
enum ContextField : std::size_t {
  kSourceName,
  kServiceId,
  kDeviceName,
  kRaisingDc,
  kSeverity,
  kIncidentType,
  kKeywords,
  kNumContextFields
};

struct CnnConfig {
  std::size_t embed_dim = 64;
  std::size_t max_tokens = 256;
  std::array<std::size_t, 3> filter_counts{32, 64, 128};
  std::size_t filter_width = 3;
  double dropout_rate = 0.3;
  double selu_lambda = kSeluLambda;
  double selu_alpha = kSeluAlpha;
  std::vector<std::string> classes;  // empty: taken from the training corpus
  std::size_t epochs = 8;
  std::size_t batch_size = 32;
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  /// Hashed text vocabulary size (rows of the word embedding table).
  std::size_t text_vocab = 1 << 14;
  std::size_t context_embed_dim = 16;
  /// Width of the fully connected layer closing the contextual encoder.
  std::size_t context_width = 64;
  double bn_momentum = 0.99;

  /// Throws ConfigError.
  void validate() const;
  /// Small configuration for gradient checks and toy runs.
  static CnnConfig reduced();
};

/// Model input: hashed token ids plus per-slot category ids (0 = <unk>).
struct CnnExample {
  std::vector<std::uint32_t> tokens;
  std::array<std::vector<std::uint32_t>, kNumContextFields> context;
};

/// Category value -> id maps for the contextual slots; id 0 is <unk>.
class ContextVocab {
 public:
  static ContextVocab build(const corpus::Corpus& train);
  static std::array<std::vector<std::string>, kNumContextFields> values_of(const corpus::Incident& incident);

  std::uint32_t id(std::size_t field, const std::string& value) const;
  /// Table rows per slot, <unk> included.
  std::array<std::size_t, kNumContextFields> sizes() const;
  const std::array<std::vector<std::string>, kNumContextFields>& values() const { return values_; }

  void save(Archive& archive) const;
  static ContextVocab load(const Archive& archive);

 private:
  void index();

  std::array<std::vector<std::string>, kNumContextFields> values_;  // sorted
  std::array<std::map<std::string, std::uint32_t>, kNumContextFields> ids_;
};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
struct Param {
  std::string name;
  Mat<Scalar> value;
  Mat<Scalar> grad;
  Mat<Scalar> velocity;
};

enum class Mode {
  kTrain,       // batch statistics, running averages updated, dropout on
  kBatchStats,  // batch statistics, nothing updated, dropout off
  kInference,   // running averages, dropout off
};

template <typename Scalar>
Mat<Scalar> softmax_rows(const Mat<Scalar>& logits);

template <typename Scalar>
Scalar selu(Scalar x, Scalar lambda = Scalar(kSeluLambda), Scalar alpha = Scalar(kSeluAlpha));

/// Text and context encoders, classifier, and their gradients.
template <typename Scalar>
class CnnNet {
 public:
  CnnNet(const CnnConfig& config, std::size_t num_classes, std::array<std::size_t, kNumContextFields> context_sizes);
  ~CnnNet();
  CnnNet(CnnNet&&) noexcept;
  CnnNet& operator=(CnnNet&&) noexcept;

  /// Mean cross-entropy; parameter gradients are overwritten.
  Scalar loss_and_gradients(std::span<const CnnExample> batch, std::span<const std::size_t> labels, Mode mode,
                            Rng* dropout_rng = nullptr);
  /// Mean cross-entropy without touching gradients or statistics.
  Scalar loss(std::span<const CnnExample> batch, std::span<const std::size_t> labels, Mode mode);
  Mat<Scalar> logits(std::span<const CnnExample> batch, Mode mode);
  Mat<Scalar> probabilities(std::span<const CnnExample> batch);

  /// Max-pooled text encoding (filter_counts[2] wide); zero for no tokens.
  RowVec<Scalar> encode_textual(const CnnExample& example);
  /// Context encoding (context_width wide).
  RowVec<Scalar> encode_contextual(const CnnExample& example);

  std::vector<Param<Scalar>*> params();
  Param<Scalar>* find(const std::string& name);
  /// Batch-norm running statistics: name -> (mean, var).
  std::vector<std::pair<std::string, std::pair<RowVec<Scalar>*, RowVec<Scalar>*>>> running_stats();

  void sgd_step(Scalar learning_rate, Scalar momentum);
  const CnnConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Largest relative error between analytic gradients and central
/// differences over every parameter, with |a - n| / max(|a| + |n|, 1e-6).
double gradient_check(CnnNet<double>& net, std::span<const CnnExample> batch, std::span<const std::size_t> labels,
                      double h = 1e-4);

/// Trained classifier ready for inference.
class CnnModel {
 public:
  inline static const std::string kModelId = "dnn";

  CnnModel(CnnConfig config, ContextVocab vocab, textprep::Stoplist stoplist);
  ~CnnModel();
  CnnModel(CnnModel&&) noexcept;
  CnnModel& operator=(CnnModel&&) noexcept;

  CnnExample make_example(const corpus::Incident& incident) const;
  ModelOutput predict(const corpus::Incident& incident) const;
  /// Class probabilities, in `classes()` order.
  std::vector<double> probabilities(const corpus::Incident& incident) const;

  struct Encoding {
    std::vector<float> values;
    bool empty = false;
  };
  Encoding encode_textual(const corpus::Incident& incident) const;
  Encoding encode_contextual(const corpus::Incident& incident) const;

  const std::vector<std::string>& classes() const { return config_.classes; }
  const CnnConfig& config() const { return config_; }
  const std::vector<double>& loss_history() const { return loss_history_; }
  CnnNet<float>& net() { return *net_; }

  void save(Archive& archive) const;
  static CnnModel load(const Archive& archive);
  void save(const std::filesystem::path& path) const;
  static CnnModel load(const std::filesystem::path& path);

 private:
  friend CnnModel train_cnn(const corpus::Corpus&, CnnConfig, const textprep::Stoplist&);

  CnnConfig config_;
  ContextVocab vocab_;
  textprep::Stoplist stoplist_;
  std::unique_ptr<CnnNet<float>> net_;
  std::vector<double> loss_history_;
};

/// Hashed id of a text token.
std::uint32_t token_id(const std::string& token, std::size_t vocab);

/// Mini-batch SGD with momentum on the prepared examples. Throws
/// ValidationError when a class has no examples or fewer than two classes
/// exist, TrainingError when the loss becomes non-finite.
CnnModel train_cnn(const corpus::Corpus& train, CnnConfig config, const textprep::Stoplist& stoplist = {});

}  // namespace triage::dnn
