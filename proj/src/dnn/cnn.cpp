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

#include "triage/dnn/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"
#include "triage/common/hash.hpp"
#include "triage/textprep/pipeline.hpp"

namespace triage::dnn {

namespace {

constexpr double kBnEpsilon = 1e-5;

const char* const kFieldNames[kNumContextFields] = {"source", "service", "device", "dc", "severity", "type",
                                                    "keywords"};

struct Segments {
  std::vector<Eigen::Index> start;
  std::vector<Eigen::Index> len;
  Eigen::Index total = 0;

  void add(Eigen::Index n) {
    start.push_back(total);
    len.push_back(n);
    total += n;
  }
};

template <typename S>
struct BnTape {
  Mat<S> xhat;
  RowVec<S> mean, var, inv_std;
  bool batch = false;
};

template <typename S>
struct BlockTape {
  std::array<Mat<S>, 3> xcat;
  std::array<BnTape<S>, 3> bn;
  std::array<Mat<S>, 3> selu_in;
  std::array<Mat<S>, 3> mask;  // empty when dropout is off
};

template <typename S>
struct Tape {
  Segments text_segs, ctx_segs;
  std::vector<std::uint32_t> text_ids;
  std::vector<std::vector<std::uint32_t>> ctx_ids;  // per context row
  BlockTape<S> text, ctx;
  Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> argmax;
  Mat<S> ctx_pool;
  Mat<S> ctx_out;
  Mat<S> text_out;
  BnTape<S> cls_bn;
  Mat<S> cls_mask;
  Mat<S> cls_in;
  Mat<S> logits;
};

template <typename S>
Mat<S> conv_forward(const Mat<S>& x, const Segments& segs, const Param<S>& w, const Param<S>& b,
                    std::size_t width, Mat<S>& xcat) {
  const Eigen::Index cin = x.cols();
  const auto half = static_cast<Eigen::Index>(width / 2);
  xcat.setZero(x.rows(), cin * static_cast<Eigen::Index>(width));
  for (std::size_t s = 0; s < segs.start.size(); ++s) {
    const auto st = segs.start[s], n = segs.len[s];
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(width); ++k) {
      const auto o = k - half;
      const auto cnt = n - std::abs(o);
      if (cnt <= 0) continue;
      xcat.block(st + std::max<Eigen::Index>(0, -o), k * cin, cnt, cin) =
          x.block(st + std::max<Eigen::Index>(0, o), 0, cnt, cin);
    }
  }
  Mat<S> y = xcat * w.value;
  y.rowwise() += b.value.row(0);
  return y;
}

template <typename S>
Mat<S> conv_backward(const Mat<S>& dy, const Segments& segs, Param<S>& w, Param<S>& b, std::size_t width,
                     const Mat<S>& xcat) {
  const Eigen::Index cin = xcat.cols() / static_cast<Eigen::Index>(width);
  const auto half = static_cast<Eigen::Index>(width / 2);
  w.grad.noalias() += xcat.transpose() * dy;
  b.grad.row(0) += dy.colwise().sum();
  const Mat<S> dxcat = dy * w.value.transpose();
  Mat<S> dx = Mat<S>::Zero(dy.rows(), cin);
  for (std::size_t s = 0; s < segs.start.size(); ++s) {
    const auto st = segs.start[s], n = segs.len[s];
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(width); ++k) {
      const auto o = k - half;
      const auto cnt = n - std::abs(o);
      if (cnt <= 0) continue;
      dx.block(st + std::max<Eigen::Index>(0, o), 0, cnt, cin) +=
          dxcat.block(st + std::max<Eigen::Index>(0, -o), k * cin, cnt, cin);
    }
  }
  return dx;
}

template <typename S>
Mat<S> bn_forward(const Mat<S>& x, const Param<S>& gamma, const Param<S>& beta, const RowVec<S>& run_mean,
                  const RowVec<S>& run_var, Mode mode, BnTape<S>& t) {
  t.batch = mode != Mode::kInference;
  if (x.rows() == 0) {
    t.xhat = x;
    return x;
  }
  if (t.batch) {
    t.mean = x.colwise().mean();
    const Mat<S> centered = x.rowwise() - t.mean;
    t.var = centered.array().square().colwise().mean().matrix();
    t.inv_std = (t.var.array() + S(kBnEpsilon)).rsqrt().matrix();
    t.xhat = (centered.array().rowwise() * t.inv_std.array()).matrix();
  } else {
    t.inv_std = (run_var.array() + S(kBnEpsilon)).rsqrt().matrix();
    t.xhat = ((x.rowwise() - run_mean).array().rowwise() * t.inv_std.array()).matrix();
  }
  Mat<S> y = (t.xhat.array().rowwise() * gamma.value.row(0).array()).matrix();
  y.rowwise() += beta.value.row(0);
  return y;
}

template <typename S>
Mat<S> bn_backward(const Mat<S>& dy, Param<S>& gamma, Param<S>& beta, const BnTape<S>& t) {
  if (dy.rows() == 0) return dy;
  gamma.grad.row(0) += (dy.array() * t.xhat.array()).colwise().sum().matrix();
  beta.grad.row(0) += dy.colwise().sum();
  const Mat<S> dxhat = (dy.array().rowwise() * gamma.value.row(0).array()).matrix();
  if (!t.batch) return (dxhat.array().rowwise() * t.inv_std.array()).matrix();
  const S n = static_cast<S>(dy.rows());
  const RowVec<S> s1 = dxhat.colwise().sum();
  const RowVec<S> s2 = (dxhat.array() * t.xhat.array()).colwise().sum().matrix();
  Mat<S> dx = n * dxhat;
  dx.rowwise() -= s1;
  dx -= (t.xhat.array().rowwise() * s2.array()).matrix();
  const RowVec<S> scale = t.inv_std / n;
  return (dx.array().rowwise() * scale.array()).matrix();
}

template <typename S>
Mat<S> dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Rng& rng) {
  Mat<S> mask(rows, cols);
  const S keep = S(1.0 / (1.0 - rate));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = rng.uniform() < rate ? S(0) : keep;
  return mask;
}

template <typename S>
void init_normal(Mat<S>& m, double stddev, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<S>(rng.normal() * stddev);
}

template <typename S>
std::vector<std::uint32_t> or_unknown(const std::vector<std::uint32_t>& ids) {
  return ids.empty() ? std::vector<std::uint32_t>{0} : ids;
}

}  // namespace

void CnnConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  for (auto f : filter_counts) {
    if (f < 1) throw ConfigError("filter counts must be >= 1");
  }
  if (!(filter_counts[0] < filter_counts[1] && filter_counts[1] < filter_counts[2])) {
    throw ConfigError("filter counts must be strictly increasing");
  }
  if (filter_width < 1 || filter_width % 2 == 0) throw ConfigError("filter_width must be odd");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must lie in [0,1)");
  if (!(selu_lambda > 0.0 && selu_alpha > 0.0)) throw ConfigError("selu parameters must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0,1)");
  if (text_vocab < 1) throw ConfigError("text_vocab must be >= 1");
  if (context_embed_dim < 1 || context_width < 1) throw ConfigError("context sizes must be >= 1");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw ConfigError("bn_momentum must lie in [0,1)");
}

CnnConfig CnnConfig::reduced() {
  CnnConfig c;
  c.embed_dim = 4;
  c.max_tokens = 16;
  c.filter_counts = {2, 3, 4};
  c.text_vocab = 32;
  c.context_embed_dim = 3;
  c.context_width = 3;
  c.batch_size = 4;
  return c;
}

std::uint32_t token_id(const std::string& token, std::size_t vocab) {
  return static_cast<std::uint32_t>(stable_hash(token) % vocab);
}

// ---- ContextVocab ---------------------------------------------------------

std::array<std::vector<std::string>, kNumContextFields> ContextVocab::values_of(const corpus::Incident& inc) {
  std::array<std::vector<std::string>, kNumContextFields> v;
  auto add = [&](std::size_t f, const std::string& s) {
    if (!s.empty()) v[f].push_back(s);
  };
  add(kSourceName, inc.source_name);
  add(kServiceId, inc.originating_service_id);
  add(kDeviceName, inc.occurring_device_name);
  add(kRaisingDc, inc.raising_dc);
  add(kSeverity, "sev" + std::to_string(inc.severity));
  add(kIncidentType, corpus::to_string(inc.incident_type));
  for (const auto& k : inc.keywords) add(kKeywords, k);
  return v;
}

ContextVocab ContextVocab::build(const corpus::Corpus& train) {
  std::array<std::set<std::string>, kNumContextFields> seen;
  for (const auto& inc : train.incidents()) {
    const auto v = values_of(inc);
    for (std::size_t f = 0; f < kNumContextFields; ++f) seen[f].insert(v[f].begin(), v[f].end());
  }
  ContextVocab vocab;
  for (std::size_t f = 0; f < kNumContextFields; ++f) vocab.values_[f].assign(seen[f].begin(), seen[f].end());
  vocab.index();
  return vocab;
}

void ContextVocab::index() {
  for (std::size_t f = 0; f < kNumContextFields; ++f) {
    ids_[f].clear();
    for (std::size_t i = 0; i < values_[f].size(); ++i) {
      ids_[f].emplace(values_[f][i], static_cast<std::uint32_t>(i + 1));
    }
  }
}

std::uint32_t ContextVocab::id(std::size_t field, const std::string& value) const {
  const auto it = ids_[field].find(value);
  return it == ids_[field].end() ? 0 : it->second;
}

std::array<std::size_t, kNumContextFields> ContextVocab::sizes() const {
  std::array<std::size_t, kNumContextFields> s{};
  for (std::size_t f = 0; f < kNumContextFields; ++f) s[f] = values_[f].size() + 1;
  return s;
}

void ContextVocab::save(Archive& a) const {
  for (std::size_t f = 0; f < kNumContextFields; ++f) a.put(std::string("dnn.vocab.") + kFieldNames[f], values_[f]);
}

ContextVocab ContextVocab::load(const Archive& a) {
  ContextVocab vocab;
  for (std::size_t f = 0; f < kNumContextFields; ++f) {
    vocab.values_[f] = a.get_str(std::string("dnn.vocab.") + kFieldNames[f]);
    if (!std::is_sorted(vocab.values_[f].begin(), vocab.values_[f].end())) {
      throw ValidationError(std::string("dnn archive: unsorted vocabulary for ") + kFieldNames[f]);
    }
  }
  vocab.index();
  return vocab;
}

// ---- math helpers -----------------------------------------------------------

template <typename S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Mat<S> p(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const S mx = logits.row(r).maxCoeff();
    p.row(r) = (logits.row(r).array() - mx).exp().matrix();
    p.row(r) /= p.row(r).sum();
  }
  return p;
}

template <typename S>
S selu(S x, S lambda, S alpha) {
  return x > S(0) ? lambda * x : lambda * alpha * (std::exp(x) - S(1));
}

// ---- CnnNet -----------------------------------------------------------------

template <typename S>
struct CnnNet<S>::Impl {
  struct Block {
    std::array<Param<S>*, 3> w{}, b{}, gamma{}, beta{};
    std::array<RowVec<S>, 3> run_mean, run_var;
  };

  CnnConfig cfg;
  std::size_t num_classes;
  std::array<std::size_t, kNumContextFields> ctx_sizes;
  std::vector<std::unique_ptr<Param<S>>> owned;

  Param<S>* text_embed = nullptr;
  std::array<Param<S>*, kNumContextFields> ctx_embed{};
  Block text, ctx;
  Param<S>* ctx_fc_w = nullptr;
  Param<S>* ctx_fc_b = nullptr;
  Param<S>* cls_gamma = nullptr;
  Param<S>* cls_beta = nullptr;
  RowVec<S> cls_run_mean, cls_run_var;
  Param<S>* cls_w = nullptr;
  Param<S>* cls_b = nullptr;

  Impl(const CnnConfig& c, std::size_t classes, std::array<std::size_t, kNumContextFields> sizes)
      : cfg(c), num_classes(classes), ctx_sizes(sizes) {
    cfg.validate();
    if (num_classes < 1) throw ConfigError("cnn needs at least one class");
    Rng rng = Rng::derive(cfg.seed, 0x1217);
    auto make = [&](std::string name, Eigen::Index rows, Eigen::Index cols, double stddev, double fill = 0.0) {
      auto p = std::make_unique<Param<S>>();
      p->name = std::move(name);
      p->value = Mat<S>::Constant(rows, cols, S(fill));
      if (stddev > 0.0) init_normal(p->value, stddev, rng);
      p->grad = Mat<S>::Zero(rows, cols);
      p->velocity = Mat<S>::Zero(rows, cols);
      owned.push_back(std::move(p));
      return owned.back().get();
    };
    const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto cd = static_cast<Eigen::Index>(cfg.context_embed_dim);
    const auto width = static_cast<Eigen::Index>(cfg.filter_width);
    text_embed = make("text.embed", static_cast<Eigen::Index>(cfg.text_vocab), d, 1.0);
    for (std::size_t f = 0; f < kNumContextFields; ++f) {
      ctx_embed[f] = make(std::string("ctx.embed.") + kFieldNames[f], static_cast<Eigen::Index>(ctx_sizes[f]), cd, 1.0);
    }
    auto make_block = [&](Block& blk, const std::string& prefix, Eigen::Index in) {
      for (std::size_t l = 0; l < 3; ++l) {
        const auto out = static_cast<Eigen::Index>(cfg.filter_counts[l]);
        const auto fan_in = width * in;
        const auto tag = prefix + ".conv" + std::to_string(l);
        blk.w[l] = make(tag + ".w", fan_in, out, 1.0 / std::sqrt(static_cast<double>(fan_in)));
        blk.b[l] = make(tag + ".b", 1, out, 0.0);
        const auto bn = prefix + ".bn" + std::to_string(l);
        blk.gamma[l] = make(bn + ".gamma", 1, out, 0.0, 1.0);
        blk.beta[l] = make(bn + ".beta", 1, out, 0.0);
        blk.run_mean[l] = RowVec<S>::Zero(out);
        blk.run_var[l] = RowVec<S>::Ones(out);
        in = out;
      }
    };
    make_block(text, "text", d);
    make_block(ctx, "ctx", cd);
    const auto top = static_cast<Eigen::Index>(cfg.filter_counts[2]);
    const auto cw = static_cast<Eigen::Index>(cfg.context_width);
    ctx_fc_w = make("ctx.fc.w", top, cw, 1.0 / std::sqrt(static_cast<double>(top)));
    ctx_fc_b = make("ctx.fc.b", 1, cw, 0.0);
    cls_gamma = make("cls.bn.gamma", 1, top + cw, 0.0, 1.0);
    cls_beta = make("cls.bn.beta", 1, top + cw, 0.0);
    cls_run_mean = RowVec<S>::Zero(top + cw);
    cls_run_var = RowVec<S>::Ones(top + cw);
    cls_w = make("cls.fc.w", top + cw, static_cast<Eigen::Index>(num_classes), 0.0);
    cls_b = make("cls.fc.b", 1, static_cast<Eigen::Index>(num_classes), 0.0);
  }

  Mat<S> block_forward(Mat<S> x, const Segments& segs, const Block& blk, Mode mode, BlockTape<S>& t,
                       Rng* rng) const {
    const S lambda = S(cfg.selu_lambda), alpha = S(cfg.selu_alpha);
    for (std::size_t l = 0; l < 3; ++l) {
      x = conv_forward(x, segs, *blk.w[l], *blk.b[l], cfg.filter_width, t.xcat[l]);
      t.selu_in[l] = bn_forward(x, *blk.gamma[l], *blk.beta[l], blk.run_mean[l], blk.run_var[l], mode, t.bn[l]);
      x = t.selu_in[l].unaryExpr([&](S v) { return selu(v, lambda, alpha); });
      t.mask[l].resize(0, 0);
      if (l >= 1 && mode == Mode::kTrain && cfg.dropout_rate > 0.0 && rng) {
        t.mask[l] = dropout_mask<S>(x.rows(), x.cols(), cfg.dropout_rate, *rng);
        x = (x.array() * t.mask[l].array()).matrix();
      }
    }
    return x;
  }

  Mat<S> block_backward(Mat<S> dy, const Segments& segs, Block& blk, const BlockTape<S>& t) {
    const S lambda = S(cfg.selu_lambda), alpha = S(cfg.selu_alpha);
    for (std::size_t l = 3; l-- > 0;) {
      if (t.mask[l].size() > 0) dy = (dy.array() * t.mask[l].array()).matrix();
      const Mat<S> deriv =
          t.selu_in[l].unaryExpr([&](S v) { return v > S(0) ? lambda : lambda * alpha * std::exp(v); });
      dy = (dy.array() * deriv.array()).matrix();
      dy = bn_backward(dy, *blk.gamma[l], *blk.beta[l], t.bn[l]);
      dy = conv_backward(dy, segs, *blk.w[l], *blk.b[l], cfg.filter_width, t.xcat[l]);
    }
    return dy;
  }

  Mat<S> forward(std::span<const CnnExample> batch, Mode mode, Tape<S>& t, Rng* rng) const {
    const auto n = static_cast<Eigen::Index>(batch.size());
    const auto d = static_cast<Eigen::Index>(cfg.embed_dim);
    const auto top = static_cast<Eigen::Index>(cfg.filter_counts[2]);

    // Text encoder.
    t.text_segs = {};
    t.text_ids.clear();
    for (const auto& ex : batch) {
      const auto len = std::min(ex.tokens.size(), cfg.max_tokens);
      t.text_segs.add(static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) {
        if (ex.tokens[i] >= cfg.text_vocab) throw ValidationError("token id outside the text vocabulary");
        t.text_ids.push_back(ex.tokens[i]);
      }
    }
    Mat<S> x(t.text_segs.total, d);
    for (Eigen::Index p = 0; p < x.rows(); ++p) x.row(p) = text_embed->value.row(t.text_ids[static_cast<std::size_t>(p)]);
    const Mat<S> h = block_forward(std::move(x), t.text_segs, text, mode, t.text, rng);
    t.text_out = Mat<S>::Zero(n, top);
    t.argmax.setConstant(n, top, -1);
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto st = t.text_segs.start[static_cast<std::size_t>(b)];
      const auto len = t.text_segs.len[static_cast<std::size_t>(b)];
      if (len == 0) continue;
      for (Eigen::Index c = 0; c < top; ++c) {
        Eigen::Index best = st;
        for (Eigen::Index p = st + 1; p < st + len; ++p) {
          if (h(p, c) > h(best, c)) best = p;
        }
        t.argmax(b, c) = best;
        t.text_out(b, c) = h(best, c);
      }
    }

    // Context encoder.
    const auto cd = static_cast<Eigen::Index>(cfg.context_embed_dim);
    const auto fields = static_cast<Eigen::Index>(kNumContextFields);
    t.ctx_segs = {};
    t.ctx_ids.assign(static_cast<std::size_t>(n * fields), {});
    Mat<S> cx(n * fields, cd);
    for (Eigen::Index b = 0; b < n; ++b) {
      t.ctx_segs.add(fields);
      for (std::size_t f = 0; f < kNumContextFields; ++f) {
        const auto row = b * fields + static_cast<Eigen::Index>(f);
        auto ids = or_unknown<S>(batch[static_cast<std::size_t>(b)].context[f]);
        cx.row(row).setZero();
        for (auto id : ids) {
          if (id >= ctx_sizes[f]) throw ValidationError("context id outside its vocabulary");
          cx.row(row) += ctx_embed[f]->value.row(id);
        }
        cx.row(row) /= static_cast<S>(ids.size());
        t.ctx_ids[static_cast<std::size_t>(row)] = std::move(ids);
      }
    }
    const Mat<S> ch = block_forward(std::move(cx), t.ctx_segs, ctx, mode, t.ctx, rng);
    t.ctx_pool = Mat<S>(n, top);
    for (Eigen::Index b = 0; b < n; ++b) t.ctx_pool.row(b) = ch.middleRows(b * fields, fields).colwise().mean();
    t.ctx_out = t.ctx_pool * ctx_fc_w->value;
    t.ctx_out.rowwise() += ctx_fc_b->value.row(0);

    // Classifier.
    Mat<S> z(n, top + t.ctx_out.cols());
    z << t.text_out, t.ctx_out;
    z = bn_forward(z, *cls_gamma, *cls_beta, cls_run_mean, cls_run_var, mode, t.cls_bn);
    t.cls_mask.resize(0, 0);
    if (mode == Mode::kTrain && cfg.dropout_rate > 0.0 && rng) {
      t.cls_mask = dropout_mask<S>(z.rows(), z.cols(), cfg.dropout_rate, *rng);
      z = (z.array() * t.cls_mask.array()).matrix();
    }
    t.cls_in = std::move(z);
    t.logits = t.cls_in * cls_w->value;
    t.logits.rowwise() += cls_b->value.row(0);
    return t.logits;
  }

  void backward(const Tape<S>& t, const Mat<S>& dlogits) {
    const auto n = dlogits.rows();
    const auto top = static_cast<Eigen::Index>(cfg.filter_counts[2]);
    const auto fields = static_cast<Eigen::Index>(kNumContextFields);
    cls_w->grad.noalias() += t.cls_in.transpose() * dlogits;
    cls_b->grad.row(0) += dlogits.colwise().sum();
    Mat<S> dz = dlogits * cls_w->value.transpose();
    if (t.cls_mask.size() > 0) dz = (dz.array() * t.cls_mask.array()).matrix();
    dz = bn_backward(dz, *cls_gamma, *cls_beta, t.cls_bn);

    const Mat<S> dctx_out = dz.rightCols(dz.cols() - top);
    ctx_fc_w->grad.noalias() += t.ctx_pool.transpose() * dctx_out;
    ctx_fc_b->grad.row(0) += dctx_out.colwise().sum();
    const Mat<S> dpool = dctx_out * ctx_fc_w->value.transpose();
    Mat<S> dch(n * fields, top);
    for (Eigen::Index b = 0; b < n; ++b) {
      dch.middleRows(b * fields, fields).rowwise() = dpool.row(b) / static_cast<S>(fields);
    }
    const Mat<S> dcx = block_backward(std::move(dch), t.ctx_segs, ctx, t.ctx);
    for (Eigen::Index row = 0; row < dcx.rows(); ++row) {
      const auto& ids = t.ctx_ids[static_cast<std::size_t>(row)];
      const auto f = static_cast<std::size_t>(row % fields);
      for (auto id : ids) ctx_embed[f]->grad.row(id) += dcx.row(row) / static_cast<S>(ids.size());
    }

    Mat<S> dh = Mat<S>::Zero(t.text_segs.total, top);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index c = 0; c < top; ++c) {
        const auto p = t.argmax(b, c);
        if (p >= 0) dh(p, c) += dz(b, c);
      }
    }
    const Mat<S> dx = block_backward(std::move(dh), t.text_segs, text, t.text);
    for (Eigen::Index p = 0; p < dx.rows(); ++p) text_embed->grad.row(t.text_ids[static_cast<std::size_t>(p)]) += dx.row(p);
  }

  void update_running(const Tape<S>& t) {
    const S m = S(cfg.bn_momentum);
    auto upd = [&](RowVec<S>& mean, RowVec<S>& var, const BnTape<S>& bt) {
      if (!bt.batch || bt.mean.size() == 0) return;
      mean = m * mean + (S(1) - m) * bt.mean;
      var = m * var + (S(1) - m) * bt.var;
    };
    for (std::size_t l = 0; l < 3; ++l) {
      upd(text.run_mean[l], text.run_var[l], t.text.bn[l]);
      upd(ctx.run_mean[l], ctx.run_var[l], t.ctx.bn[l]);
    }
    upd(cls_run_mean, cls_run_var, t.cls_bn);
  }

  static S cross_entropy(const Mat<S>& logits, std::span<const std::size_t> labels, Mat<S>* dlogits) {
    const auto n = logits.rows();
    if (static_cast<std::size_t>(n) != labels.size()) throw ValidationError("batch and labels differ in size");
    const Mat<S> p = softmax_rows(logits);
    S loss = 0;
    for (Eigen::Index b = 0; b < n; ++b) {
      const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)]);
      if (y >= logits.cols()) throw ValidationError("label outside the class list");
      const S mx = logits.row(b).maxCoeff();
      const S lse = mx + std::log((logits.row(b).array() - mx).exp().sum());
      loss += lse - logits(b, y);
    }
    if (dlogits) {
      *dlogits = p;
      for (Eigen::Index b = 0; b < n; ++b) (*dlogits)(b, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(b)])) -= S(1);
      *dlogits /= static_cast<S>(n);
    }
    return loss / static_cast<S>(n);
  }
};

template <typename S>
CnnNet<S>::CnnNet(const CnnConfig& config, std::size_t num_classes,
                  std::array<std::size_t, kNumContextFields> context_sizes)
    : impl_(std::make_unique<Impl>(config, num_classes, context_sizes)) {}

template <typename S>
CnnNet<S>::~CnnNet() = default;
template <typename S>
CnnNet<S>::CnnNet(CnnNet&&) noexcept = default;
template <typename S>
CnnNet<S>& CnnNet<S>::operator=(CnnNet&&) noexcept = default;

template <typename S>
S CnnNet<S>::loss_and_gradients(std::span<const CnnExample> batch, std::span<const std::size_t> labels, Mode mode,
                                Rng* dropout_rng) {
  if (batch.empty()) throw ValidationError("empty batch");
  for (auto& p : impl_->owned) p->grad.setZero();
  Tape<S> tape;
  const Mat<S> logits = impl_->forward(batch, mode, tape, dropout_rng);
  Mat<S> dlogits;
  const S loss = Impl::cross_entropy(logits, labels, &dlogits);
  impl_->backward(tape, dlogits);
  if (mode == Mode::kTrain) impl_->update_running(tape);
  return loss;
}

template <typename S>
S CnnNet<S>::loss(std::span<const CnnExample> batch, std::span<const std::size_t> labels, Mode mode) {
  if (mode == Mode::kTrain) throw ConfigError("loss() does not run in training mode");
  Tape<S> tape;
  return Impl::cross_entropy(impl_->forward(batch, mode, tape, nullptr), labels, nullptr);
}

template <typename S>
Mat<S> CnnNet<S>::logits(std::span<const CnnExample> batch, Mode mode) {
  if (mode == Mode::kTrain) throw ConfigError("logits() does not run in training mode");
  Tape<S> tape;
  return impl_->forward(batch, mode, tape, nullptr);
}

template <typename S>
Mat<S> CnnNet<S>::probabilities(std::span<const CnnExample> batch) {
  return softmax_rows(logits(batch, Mode::kInference));
}

template <typename S>
RowVec<S> CnnNet<S>::encode_textual(const CnnExample& example) {
  Tape<S> tape;
  impl_->forward(std::span(&example, 1), Mode::kInference, tape, nullptr);
  return tape.text_out.row(0);
}

template <typename S>
RowVec<S> CnnNet<S>::encode_contextual(const CnnExample& example) {
  Tape<S> tape;
  impl_->forward(std::span(&example, 1), Mode::kInference, tape, nullptr);
  return tape.ctx_out.row(0);
}

template <typename S>
std::vector<Param<S>*> CnnNet<S>::params() {
  std::vector<Param<S>*> out;
  for (auto& p : impl_->owned) out.push_back(p.get());
  return out;
}

template <typename S>
Param<S>* CnnNet<S>::find(const std::string& name) {
  for (auto& p : impl_->owned) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

template <typename S>
std::vector<std::pair<std::string, std::pair<RowVec<S>*, RowVec<S>*>>> CnnNet<S>::running_stats() {
  std::vector<std::pair<std::string, std::pair<RowVec<S>*, RowVec<S>*>>> out;
  auto& im = *impl_;
  for (std::size_t l = 0; l < 3; ++l) {
    out.push_back({"text.bn" + std::to_string(l), {&im.text.run_mean[l], &im.text.run_var[l]}});
    out.push_back({"ctx.bn" + std::to_string(l), {&im.ctx.run_mean[l], &im.ctx.run_var[l]}});
  }
  out.push_back({"cls.bn", {&im.cls_run_mean, &im.cls_run_var}});
  return out;
}

template <typename S>
void CnnNet<S>::sgd_step(S learning_rate, S momentum) {
  for (auto& p : impl_->owned) {
    p->velocity = momentum * p->velocity - learning_rate * p->grad;
    p->value += p->velocity;
  }
}

template <typename S>
const CnnConfig& CnnNet<S>::config() const {
  return impl_->cfg;
}

template class CnnNet<float>;
template class CnnNet<double>;
template Mat<float> softmax_rows(const Mat<float>&);
template Mat<double> softmax_rows(const Mat<double>&);
template float selu(float, float, float);
template double selu(double, double, double);

double gradient_check(CnnNet<double>& net, std::span<const CnnExample> batch, std::span<const std::size_t> labels,
                      double h) {
  net.loss_and_gradients(batch, labels, Mode::kBatchStats);
  double worst = 0.0;
  for (auto* p : net.params()) {
    const Mat<double> analytic = p->grad;
    for (Eigen::Index i = 0; i < p->value.size(); ++i) {
      double& v = p->value.data()[i];
      const double saved = v;
      v = saved + h;
      const double up = net.loss(batch, labels, Mode::kBatchStats);
      v = saved - h;
      const double down = net.loss(batch, labels, Mode::kBatchStats);
      v = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic.data()[i];
      worst = std::max(worst, std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-6));
    }
  }
  return worst;
}

// ---- CnnModel ---------------------------------------------------------------

CnnModel::CnnModel(CnnConfig config, ContextVocab vocab, textprep::Stoplist stoplist)
    : config_(std::move(config)), vocab_(std::move(vocab)), stoplist_(std::move(stoplist)) {
  net_ = std::make_unique<CnnNet<float>>(config_, config_.classes.size(), vocab_.sizes());
}

CnnModel::~CnnModel() = default;
CnnModel::CnnModel(CnnModel&&) noexcept = default;
CnnModel& CnnModel::operator=(CnnModel&&) noexcept = default;

CnnExample CnnModel::make_example(const corpus::Incident& incident) const {
  CnnExample ex;
  for (const auto& tok : textprep::prepare_tokens(incident, stoplist_).flatten()) {
    if (ex.tokens.size() == config_.max_tokens) break;
    ex.tokens.push_back(token_id(tok, config_.text_vocab));
  }
  const auto values = ContextVocab::values_of(incident);
  for (std::size_t f = 0; f < kNumContextFields; ++f) {
    for (const auto& v : values[f]) ex.context[f].push_back(vocab_.id(f, v));
  }
  return ex;
}

std::vector<double> CnnModel::probabilities(const corpus::Incident& incident) const {
  const auto ex = make_example(incident);
  const Mat<float> p = net_->probabilities(std::span(&ex, 1));
  std::vector<double> out(static_cast<std::size_t>(p.cols()));
  for (Eigen::Index c = 0; c < p.cols(); ++c) out[static_cast<std::size_t>(c)] = p(0, c);
  return out;
}

ModelOutput CnnModel::predict(const corpus::Incident& incident) const {
  const auto p = probabilities(incident);
  std::map<std::string, double> scores;
  for (std::size_t c = 0; c < p.size(); ++c) scores[config_.classes[c]] = p[c];
  return make_model_output(kModelId, std::move(scores));
}

CnnModel::Encoding CnnModel::encode_textual(const corpus::Incident& incident) const {
  const auto ex = make_example(incident);
  const RowVec<float> v = net_->encode_textual(ex);
  return {std::vector<float>(v.data(), v.data() + v.size()), ex.tokens.empty()};
}

CnnModel::Encoding CnnModel::encode_contextual(const corpus::Incident& incident) const {
  const auto ex = make_example(incident);
  const RowVec<float> v = net_->encode_contextual(ex);
  return {std::vector<float>(v.data(), v.data() + v.size()), false};
}

namespace {

nlohmann::json config_json(const CnnConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"max_tokens", c.max_tokens},
          {"filter_counts", c.filter_counts},
          {"filter_width", c.filter_width},
          {"dropout_rate", c.dropout_rate},
          {"selu_lambda", c.selu_lambda},
          {"selu_alpha", c.selu_alpha},
          {"classes", c.classes},
          {"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"seed", c.seed},
          {"text_vocab", c.text_vocab},
          {"context_embed_dim", c.context_embed_dim},
          {"context_width", c.context_width},
          {"bn_momentum", c.bn_momentum}};
}

CnnConfig config_from_json(const nlohmann::json& j) {
  CnnConfig c;
  c.embed_dim = j.at("embed_dim");
  c.max_tokens = j.at("max_tokens");
  c.filter_counts = j.at("filter_counts");
  c.filter_width = j.at("filter_width");
  c.dropout_rate = j.at("dropout_rate");
  c.selu_lambda = j.at("selu_lambda");
  c.selu_alpha = j.at("selu_alpha");
  c.classes = j.at("classes").get<std::vector<std::string>>();
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.learning_rate = j.at("learning_rate");
  c.momentum = j.at("momentum");
  c.seed = j.at("seed");
  c.text_vocab = j.at("text_vocab");
  c.context_embed_dim = j.at("context_embed_dim");
  c.context_width = j.at("context_width");
  c.bn_momentum = j.at("bn_momentum");
  return c;
}

std::vector<float> flat(const Mat<float>& m) { return {m.data(), m.data() + m.size()}; }

}  // namespace

void CnnModel::save(Archive& a) const {
  a.put_scalar("dnn.format", "1");
  a.put_scalar("dnn.config", config_json(config_).dump());
  a.put_scalar("dnn.stoplist", stoplist_.to_json());
  vocab_.save(a);
  for (auto* p : net_->params()) {
    a.put("dnn.param." + p->name, flat(p->value),
          {static_cast<std::uint64_t>(p->value.rows()), static_cast<std::uint64_t>(p->value.cols())});
  }
  for (const auto& [name, stats] : net_->running_stats()) {
    a.put("dnn.running." + name + ".mean", std::vector<float>(stats.first->data(), stats.first->data() + stats.first->size()));
    a.put("dnn.running." + name + ".var", std::vector<float>(stats.second->data(), stats.second->data() + stats.second->size()));
  }
  a.put("dnn.loss_history", loss_history_);
}

CnnModel CnnModel::load(const Archive& a) {
  if (a.get_scalar("dnn.format") != "1") throw ValidationError("dnn archive: unsupported format");
  CnnConfig config;
  textprep::Stoplist stoplist;
  try {
    config = config_from_json(nlohmann::json::parse(a.get_scalar("dnn.config")));
    config.validate();
    stoplist = textprep::Stoplist::from_json(a.get_scalar("dnn.stoplist"));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("dnn archive: bad config: ") + e.what());
  } catch (const ConfigError& e) {
    throw ValidationError(std::string("dnn archive: bad config: ") + e.what());
  }
  if (config.classes.size() < 2) throw ValidationError("dnn archive: fewer than two classes");
  CnnModel model(std::move(config), ContextVocab::load(a), std::move(stoplist));
  for (auto* p : model.net_->params()) {
    const auto key = "dnn.param." + p->name;
    const auto& shape = a.shape(key);
    const auto values = a.get_f32(key);
    if (shape.size() != 2 || shape[0] != static_cast<std::uint64_t>(p->value.rows()) ||
        shape[1] != static_cast<std::uint64_t>(p->value.cols()) ||
        values.size() != static_cast<std::size_t>(p->value.size())) {
      throw ValidationError("dnn archive: shape mismatch for " + p->name);
    }
    std::copy(values.begin(), values.end(), p->value.data());
    if (!p->value.allFinite()) throw ValidationError("dnn archive: non-finite values in " + p->name);
  }
  for (const auto& [name, stats] : model.net_->running_stats()) {
    const auto mean = a.get_f32("dnn.running." + name + ".mean");
    const auto var = a.get_f32("dnn.running." + name + ".var");
    if (mean.size() != static_cast<std::size_t>(stats.first->size()) ||
        var.size() != static_cast<std::size_t>(stats.second->size())) {
      throw ValidationError("dnn archive: running statistics mismatch for " + name);
    }
    std::copy(mean.begin(), mean.end(), stats.first->data());
    std::copy(var.begin(), var.end(), stats.second->data());
  }
  model.loss_history_ = a.get_f64("dnn.loss_history");
  return model;
}

void CnnModel::save(const std::filesystem::path& path) const {
  Archive a;
  save(a);
  a.save(path);
}

CnnModel CnnModel::load(const std::filesystem::path& path) { return load(Archive::load(path)); }

CnnModel train_cnn(const corpus::Corpus& train, CnnConfig config, const textprep::Stoplist& stoplist) {
  config.validate();
  if (config.classes.empty()) config.classes = train.teams();
  if (config.classes.size() < 2) throw ValidationError("cnn training needs at least two classes");
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < config.classes.size(); ++i) class_index.emplace(config.classes[i], i);
  if (class_index.size() != config.classes.size()) throw ValidationError("duplicate class ids");

  CnnModel model(config, ContextVocab::build(train), stoplist);
  std::vector<CnnExample> examples;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> per_class(config.classes.size(), 0);
  for (const auto& inc : train.incidents()) {
    const auto it = class_index.find(inc.owning_team);
    if (it == class_index.end()) continue;
    examples.push_back(model.make_example(inc));
    labels.push_back(it->second);
    ++per_class[it->second];
  }
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    if (per_class[c] == 0) throw ValidationError("class " + config.classes[c] + " has no training examples");
  }

  auto& net = *model.net_;
  Rng order_rng = Rng::derive(config.seed, 1);
  Rng dropout_rng = Rng::derive(config.seed, 2);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<CnnExample> batch;
  std::vector<std::size_t> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size();) {
      std::size_t end = std::min(order.size(), start + config.batch_size);
      // A trailing single example joins the previous batch (batch norm needs two rows).
      if (order.size() - end == 1) ++end;
      batch.clear();
      batch_labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(examples[order[i]]);
        batch_labels.push_back(labels[order[i]]);
      }
      const float loss = net.loss_and_gradients(batch, batch_labels, Mode::kTrain, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw TrainingError("cnn: loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batches) + " (learning_rate " + std::to_string(config.learning_rate) +
                            ")");
      }
      net.sgd_step(static_cast<float>(config.learning_rate), static_cast<float>(config.momentum));
      total += loss;
      ++batches;
      start = end;
    }
    model.loss_history_.push_back(batches ? total / static_cast<double>(batches) : 0.0);
    spdlog::debug("cnn epoch {} loss {:.5f}", epoch, model.loss_history_.back());
  }
  return model;
}

}  // namespace triage::dnn
