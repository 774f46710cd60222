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

#include "triage/gbdt/gbdt.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <thread>

#include <spdlog/spdlog.h>

#include "triage/common/error.hpp"

namespace triage::gbdt {

namespace {

constexpr double kGainEps = 1e-12;
constexpr double kLossSlack = 1e-12;
constexpr int kMaxHalvings = 40;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double example_loss(double y, double f) { return softplus(f) - y * f; }

// Training matrix in CSR form with per-column quantile bins. Bin 0 holds the
// value zero (absent); bin b >= 1 holds values in (edge[b-2], edge[b-1]].
struct BinnedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<std::uint8_t> bin;
  std::vector<std::vector<double>> edges;
  std::vector<std::uint32_t> hist_offset;  // per column, into the histogram arrays
  std::size_t hist_size = 0;

  std::uint8_t bin_of(std::size_t r, std::uint32_t c) const {
    const auto* b = col.data() + row_ptr[r];
    const auto* e = col.data() + row_ptr[r + 1];
    const auto* it = std::lower_bound(b, e, c);
    return (it != e && *it == c) ? bin[static_cast<std::size_t>(it - col.data())] : 0;
  }
  double threshold(std::uint32_t c, std::size_t b) const { return b == 0 ? 0.0 : edges[c][b - 1]; }
};

// Columns with fewer than `min_rows` non-zero rows can never yield a split
// with min_rows examples on the non-zero side, so they are left out.
BinnedMatrix bin_matrix(const TrainingSet& data, const textprep::FeatureSpace& space, std::size_t max_bins,
                        std::size_t min_rows) {
  BinnedMatrix m;
  m.rows = data.features.size();
  m.cols = space.size();
  std::vector<std::vector<std::pair<std::uint32_t, double>>> projected(m.rows);
  std::vector<std::vector<double>> values(m.cols);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (const auto& e : data.features[r].entries) {
      if (e.value <= 0.0) continue;
      if (auto c = space.column(e.index)) {
        projected[r].emplace_back(static_cast<std::uint32_t>(*c), e.value);
        values[*c].push_back(e.value);
      }
    }
  }
  for (auto& row : projected) {
    std::erase_if(row, [&](const auto& cv) { return values[cv.first].size() < min_rows; });
  }
  for (auto& v : values) {
    if (v.size() < min_rows) v.clear();
  }
  m.edges.resize(m.cols);
  const std::size_t max_edges = max_bins - 1;
  for (std::size_t c = 0; c < m.cols; ++c) {
    auto& v = values[c];
    std::sort(v.begin(), v.end());
    std::vector<double> uniq(v.begin(), v.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() <= max_edges) {
      m.edges[c] = std::move(uniq);
    } else {
      std::vector<double> edges;
      for (std::size_t q = 1; q <= max_edges; ++q) {
        const auto pos = std::min(v.size() - 1, (q * v.size()) / max_edges - (q == max_edges ? 1 : 0));
        edges.push_back(v[pos]);
      }
      edges.back() = v.back();
      edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
      m.edges[c] = std::move(edges);
    }
  }
  m.hist_offset.resize(m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) {
    m.hist_offset[c] = static_cast<std::uint32_t>(m.hist_size);
    m.hist_size += m.edges[c].size() + 1;
  }
  m.row_ptr.push_back(0);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (const auto& [c, x] : projected[r]) {
      const auto& ed = m.edges[c];
      const auto b = static_cast<std::size_t>(std::lower_bound(ed.begin(), ed.end(), x) - ed.begin()) + 1;
      m.col.push_back(c);
      m.bin.push_back(static_cast<std::uint8_t>(std::min(b, ed.size())));
    }
    m.row_ptr.push_back(static_cast<std::uint32_t>(m.col.size()));
  }
  return m;
}

struct Split {
  double gain = 0.0;
  std::int64_t col = -1;
  std::size_t bin = 0;
};

struct Leaf {
  std::int32_t node = 0;
  std::vector<std::uint32_t> rows;
  double g = 0.0;
  double h = 0.0;
  std::size_t hist = 0;
  Split split;
};

struct BinStats {
  double g = 0.0;
  double h = 0.0;
  double n = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinnedMatrix& m, const GbdtConfig& cfg) : m_(m), cfg_(cfg) {}

  Tree build(std::span<const double> grad, std::span<const double> hess, std::span<const double> target,
             std::span<double> score) {
    Tree tree;
    std::vector<Leaf> leaves;
    free_.clear();
    for (std::size_t i = 0; i < pool_.size(); ++i) free_.push_back(i);
    Leaf root;
    root.rows.resize(m_.rows);
    for (std::size_t r = 0; r < m_.rows; ++r) root.rows[r] = static_cast<std::uint32_t>(r);
    add_node(tree);
    sum_rows(root, grad, hess);
    if (splittable(root)) {
      root.hist = acquire();
      accumulate(root, grad, hess);
      find_split(root);
    }
    leaves.push_back(std::move(root));

    while (leaves.size() < cfg_.max_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (leaves[i].split.col < 0) continue;
        if (pick == leaves.size() || leaves[i].split.gain > leaves[pick].split.gain + kGainEps) pick = i;
      }
      if (pick == leaves.size()) break;
      Leaf parent = std::move(leaves[pick]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));
      const auto c = static_cast<std::uint32_t>(parent.split.col);
      const double thr = m_.threshold(c, parent.split.bin);
      Leaf l, r;
      for (auto row : parent.rows) {
        (m_.bin_of(row, c) <= parent.split.bin ? l.rows : r.rows).push_back(row);
      }
      l.node = add_node(tree);
      r.node = add_node(tree);
      const auto p = static_cast<std::size_t>(parent.node);
      tree.feature[p] = static_cast<std::int32_t>(c);
      tree.threshold[p] = thr;
      tree.left[p] = l.node;
      tree.right[p] = r.node;
      sum_rows(l, grad, hess);
      sum_rows(r, grad, hess);

      Leaf& small = l.rows.size() <= r.rows.size() ? l : r;
      Leaf& large = l.rows.size() <= r.rows.size() ? r : l;
      const bool split_small = splittable(small);
      const bool split_large = splittable(large);
      if (split_small || split_large) {
        small.hist = acquire();
        accumulate(small, grad, hess);
        if (split_large) {
          large.hist = parent.hist;
          auto& big = pool_[large.hist];
          const auto& sub = pool_[small.hist];
          for (std::size_t i = 0; i < big.size(); ++i) {
            big[i].g -= sub[i].g;
            big[i].h -= sub[i].h;
            big[i].n -= sub[i].n;
          }
          find_split(large);
        } else {
          free_.push_back(parent.hist);
        }
        if (split_small) find_split(small);
        free_.push_back(small.hist);
      } else {
        free_.push_back(parent.hist);
      }
      leaves.push_back(std::move(l));
      leaves.push_back(std::move(r));
    }

    for (const auto& leaf : leaves) {
      double v = -cfg_.learning_rate * leaf.g / (leaf.h + cfg_.l2_regularization);
      // Halve the step until the leaf's own loss does not increase.
      double before = 0.0;
      for (auto row : leaf.rows) before += example_loss(target[row], score[row]);
      for (int k = 0; k <= kMaxHalvings; ++k) {
        double after = 0.0;
        for (auto row : leaf.rows) after += example_loss(target[row], score[row] + v);
        if (after <= before) break;
        v = k == kMaxHalvings ? 0.0 : v * 0.5;
      }
      tree.value[static_cast<std::size_t>(leaf.node)] = v;
      for (auto row : leaf.rows) score[row] += v;
    }
    return tree;
  }

 private:
  static std::int32_t add_node(Tree& t) {
    t.feature.push_back(-1);
    t.threshold.push_back(0.0);
    t.left.push_back(-1);
    t.right.push_back(-1);
    t.value.push_back(0.0);
    return static_cast<std::int32_t>(t.feature.size() - 1);
  }

  bool splittable(const Leaf& leaf) const { return leaf.rows.size() >= 2 * cfg_.min_examples_per_leaf; }

  std::size_t acquire() {
    if (free_.empty()) {
      pool_.emplace_back(m_.hist_size);
      return pool_.size() - 1;
    }
    const auto i = free_.back();
    free_.pop_back();
    return i;
  }

  static void sum_rows(Leaf& leaf, std::span<const double> grad, std::span<const double> hess) {
    leaf.g = 0.0;
    leaf.h = 0.0;
    for (auto r : leaf.rows) {
      leaf.g += grad[r];
      leaf.h += hess[r];
    }
  }

  // Bin 0 (feature absent) is never accumulated; find_split derives it.
  void accumulate(const Leaf& leaf, std::span<const double> grad, std::span<const double> hess) {
    auto& hist = pool_[leaf.hist];
    std::fill(hist.begin(), hist.end(), BinStats{});
    for (auto r : leaf.rows) {
      const double g = grad[r], h = hess[r];
      for (auto k = m_.row_ptr[r]; k < m_.row_ptr[r + 1]; ++k) {
        auto& cell = hist[m_.hist_offset[m_.col[k]] + m_.bin[k]];
        cell.g += g;
        cell.h += h;
        cell.n += 1.0;
      }
    }
  }

  void find_split(Leaf& leaf) const {
    const auto& hist = pool_[leaf.hist];
    const double lambda = cfg_.l2_regularization;
    const double n_total = static_cast<double>(leaf.rows.size());
    const double parent_term = leaf.g * leaf.g / (leaf.h + lambda);
    const double min_leaf = static_cast<double>(cfg_.min_examples_per_leaf);
    Split best;
    for (std::size_t c = 0; c < m_.cols; ++c) {
      const auto nb = m_.edges[c].size() + 1;
      if (nb < 2) continue;
      const auto* cell = hist.data() + m_.hist_offset[c];
      double nz_g = 0.0, nz_h = 0.0, nz_n = 0.0;
      for (std::size_t b = 1; b < nb; ++b) {
        nz_g += cell[b].g;
        nz_h += cell[b].h;
        nz_n += cell[b].n;
      }
      if (nz_n < min_leaf) continue;
      double gl = leaf.g - nz_g, hl = leaf.h - nz_h, nl = n_total - nz_n;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        if (b > 0) {
          gl += cell[b].g;
          hl += cell[b].h;
          nl += cell[b].n;
        }
        const double nr = n_total - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const double gr = leaf.g - gl, hr = leaf.h - hl;
        if (hl + lambda <= kGainEps || hr + lambda <= kGainEps) continue;
        const double gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent_term;
        if (gain <= kGainEps) continue;
        const bool better = best.col < 0 || gain > best.gain + kGainEps ||
                            (gain >= best.gain - kGainEps &&
                             (static_cast<std::int64_t>(c) < best.col ||
                              (static_cast<std::int64_t>(c) == best.col && b < best.bin)));
        if (better) best = {gain, static_cast<std::int64_t>(c), b};
      }
    }
    leaf.split = best;
  }

  const BinnedMatrix& m_;
  const GbdtConfig& cfg_;
  std::vector<std::vector<BinStats>> pool_;
  std::vector<std::size_t> free_;
};

void put_trees(Archive& a, const std::vector<ClassTrees>& classes) {
  std::vector<std::string> teams;
  std::vector<std::uint64_t> trees_per_class, nodes_per_tree, loss_len;
  std::vector<std::int32_t> feature, left, right;
  std::vector<double> threshold, value, loss;
  for (const auto& ct : classes) {
    teams.push_back(ct.team);
    trees_per_class.push_back(ct.trees.size());
    loss_len.push_back(ct.loss_history.size());
    loss.insert(loss.end(), ct.loss_history.begin(), ct.loss_history.end());
    for (const auto& t : ct.trees) {
      nodes_per_tree.push_back(t.feature.size());
      feature.insert(feature.end(), t.feature.begin(), t.feature.end());
      left.insert(left.end(), t.left.begin(), t.left.end());
      right.insert(right.end(), t.right.begin(), t.right.end());
      threshold.insert(threshold.end(), t.threshold.begin(), t.threshold.end());
      value.insert(value.end(), t.value.begin(), t.value.end());
    }
  }
  a.put("classes", std::move(teams));
  a.put("trees_per_class", std::move(trees_per_class));
  a.put("nodes_per_tree", std::move(nodes_per_tree));
  a.put("node.feature", std::move(feature));
  a.put("node.left", std::move(left));
  a.put("node.right", std::move(right));
  a.put("node.threshold", std::move(threshold));
  a.put("node.value", std::move(value));
  a.put("loss.length", std::move(loss_len));
  a.put("loss.values", std::move(loss));
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GbdtConfig GbdtConfig::general() { return GbdtConfig{}; }

GbdtConfig GbdtConfig::cri_specialized() {
  GbdtConfig c;
  c.feature_top_k = 50000;
  c.corpus_filter = CorpusFilter::kCriOnly;
  c.num_buckets = 3;
  return c;
}

void GbdtConfig::validate() const {
  if (num_trees < 1) throw ConfigError("num_trees must be >= 1");
  if (max_leaves < 1) throw ConfigError("max_leaves must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must lie in (0,1]");
  if (min_examples_per_leaf < 1) throw ConfigError("min_examples_per_leaf must be >= 1");
  if (feature_top_k < 1) throw ConfigError("feature_top_k must be >= 1");
  if (num_buckets < 1) throw ConfigError("num_buckets must be >= 1");
  if (l2_regularization < 0.0) throw ConfigError("l2_regularization must be >= 0");
  if (max_bins < 2 || max_bins > 256) throw ConfigError("max_bins must lie in [2,256]");
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count(feature.begin(), feature.end(), -1));
}

double Tree::max_abs_leaf() const {
  double m = 0.0;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    if (feature[i] < 0) m = std::max(m, std::abs(value[i]));
  }
  return m;
}

double Tree::predict(std::span<const std::pair<std::uint32_t, double>> row) const {
  std::size_t n = 0;
  while (feature[n] >= 0) {
    const auto c = static_cast<std::uint32_t>(feature[n]);
    auto it = std::lower_bound(row.begin(), row.end(), c, [](const auto& e, std::uint32_t k) { return e.first < k; });
    const double x = (it != row.end() && it->first == c) ? it->second : 0.0;
    n = static_cast<std::size_t>(x <= threshold[n] ? left[n] : right[n]);
  }
  return value[n];
}

std::vector<std::string> GbdtModel::class_ids() const {
  std::vector<std::string> out;
  for (const auto& c : classes) out.push_back(c.team);
  return out;
}

std::vector<std::pair<std::uint32_t, double>> GbdtModel::project(
    const textprep::HashedFeatureVector& features) const {
  std::vector<std::pair<std::uint32_t, double>> row;
  for (const auto& e : features.entries) {
    if (auto c = space.column(e.index)) row.emplace_back(static_cast<std::uint32_t>(*c), e.value);
  }
  std::sort(row.begin(), row.end());
  return row;
}

std::vector<double> GbdtModel::raw_scores(const textprep::HashedFeatureVector& features) const {
  const auto row = project(features);
  std::vector<double> out;
  out.reserve(classes.size());
  for (const auto& ct : classes) {
    double s = 0.0;
    for (const auto& t : ct.trees) s += t.predict(row);
    out.push_back(s);
  }
  return out;
}

ModelOutput GbdtModel::predict(const textprep::HashedFeatureVector& features) const {
  const auto raw = raw_scores(features);
  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < classes.size(); ++i) scores[classes[i].team] = sigmoid(raw[i]);
  return make_model_output(model_id, std::move(scores));
}

void GbdtModel::save(Archive& a) const {
  a.put_scalar("model_id", model_id);
  space.save(a, "space");
  put_trees(a, classes);
}

GbdtModel GbdtModel::load(const Archive& a) {
  GbdtModel m;
  m.model_id = a.get_scalar("model_id");
  m.space = textprep::FeatureSpace::load(a, "space");
  const auto teams = a.get_str("classes");
  const auto trees_per_class = a.get_u64("trees_per_class");
  const auto nodes_per_tree = a.get_u64("nodes_per_tree");
  const auto feature = a.get_i32("node.feature");
  const auto left = a.get_i32("node.left");
  const auto right = a.get_i32("node.right");
  const auto threshold = a.get_f64("node.threshold");
  const auto value = a.get_f64("node.value");
  const auto loss_len = a.get_u64("loss.length");
  const auto loss = a.get_f64("loss.values");
  if (teams.size() != trees_per_class.size() || teams.size() != loss_len.size()) {
    throw ValidationError("gbdt archive: class arrays disagree");
  }
  const auto nodes = feature.size();
  if (left.size() != nodes || right.size() != nodes || threshold.size() != nodes || value.size() != nodes) {
    throw ValidationError("gbdt archive: node arrays disagree");
  }
  std::size_t tree_i = 0, node_i = 0, loss_i = 0;
  for (std::size_t c = 0; c < teams.size(); ++c) {
    ClassTrees ct;
    ct.team = teams[c];
    for (std::uint64_t t = 0; t < trees_per_class[c]; ++t) {
      if (tree_i >= nodes_per_tree.size()) throw ValidationError("gbdt archive: tree count mismatch");
      const auto n = nodes_per_tree[tree_i++];
      if (n == 0 || node_i + n > nodes) throw ValidationError("gbdt archive: node count mismatch");
      Tree tree;
      const auto b = static_cast<std::ptrdiff_t>(node_i), e = static_cast<std::ptrdiff_t>(node_i + n);
      tree.feature.assign(feature.begin() + b, feature.begin() + e);
      tree.left.assign(left.begin() + b, left.begin() + e);
      tree.right.assign(right.begin() + b, right.begin() + e);
      tree.threshold.assign(threshold.begin() + b, threshold.begin() + e);
      tree.value.assign(value.begin() + b, value.begin() + e);
      for (std::size_t k = 0; k < n; ++k) {
        if (tree.feature[k] < 0) continue;
        const auto l = tree.left[k], r = tree.right[k];
        if (l <= static_cast<std::int32_t>(k) || r <= static_cast<std::int32_t>(k) ||
            l >= static_cast<std::int32_t>(n) || r >= static_cast<std::int32_t>(n) ||
            static_cast<std::size_t>(tree.feature[k]) >= m.space.size()) {
          throw ValidationError("gbdt archive: malformed tree");
        }
      }
      node_i += n;
      ct.trees.push_back(std::move(tree));
    }
    if (loss_i + loss_len[c] > loss.size()) throw ValidationError("gbdt archive: loss history mismatch");
    ct.loss_history.assign(loss.begin() + static_cast<std::ptrdiff_t>(loss_i),
                           loss.begin() + static_cast<std::ptrdiff_t>(loss_i + loss_len[c]));
    loss_i += loss_len[c];
    m.classes.push_back(std::move(ct));
  }
  return m;
}

void GbdtModel::save(const std::filesystem::path& path) const {
  Archive a;
  save(a);
  a.save(path);
}

GbdtModel GbdtModel::load(const std::filesystem::path& path) { return load(Archive::load(path)); }

GbdtModel train_gbdt(const TrainingSet& data, const textprep::FeatureSpace& space, const GbdtConfig& config,
                     std::span<const std::string> expected_classes) {
  config.validate();
  if (data.features.size() != data.labels.size()) throw TrainingError("features and labels differ in length");
  if (data.features.empty()) throw TrainingError("cannot train on an empty bucket");

  std::map<std::string, std::size_t> positives;
  for (const auto& l : data.labels) ++positives[l];
  for (const auto& c : expected_classes) {
    if (!positives.count(c)) spdlog::warn("gbdt: class {} has no positives after filtering; skipped", c);
  }
  if (positives.size() < 2) throw TrainingError("bucket has fewer than two classes after filtering");

  const auto matrix = bin_matrix(data, space, config.max_bins, config.min_examples_per_leaf);
  GbdtModel model;
  model.space = space;
  const std::size_t n = data.labels.size();
  std::vector<double> target(n), score(n), grad(n), hess(n);
  TreeBuilder builder(matrix, config);

  for (const auto& [team, count] : positives) {
    ClassTrees ct;
    ct.team = team;
    for (std::size_t i = 0; i < n; ++i) target[i] = data.labels[i] == team ? 1.0 : 0.0;
    std::fill(score.begin(), score.end(), 0.0);
    auto mean_loss = [&] {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += example_loss(target[i], score[i]);
      return s / static_cast<double>(n);
    };
    ct.loss_history.push_back(mean_loss());
    for (std::size_t t = 0; t < config.num_trees; ++t) {
      for (std::size_t i = 0; i < n; ++i) {
        const double p = sigmoid(score[i]);
        grad[i] = p - target[i];
        hess[i] = p * (1.0 - p);
      }
      ct.trees.push_back(builder.build(grad, hess, target, score));
      const double loss = mean_loss();
      if (loss > ct.loss_history.back() + kLossSlack) {
        throw TrainingError("gbdt: training loss increased for class " + team + " at tree " + std::to_string(t));
      }
      ct.loss_history.push_back(loss);
    }
    model.classes.push_back(std::move(ct));
  }
  return model;
}

TrainingSet make_training_set(const corpus::Bucket& bucket, const GbdtConfig& config,
                              const FeatureLookup& features) {
  TrainingSet set;
  for (const auto* inc : bucket.incidents) {
    if (config.corpus_filter == CorpusFilter::kCriOnly && !inc->is_cri()) continue;
    set.features.push_back(features(*inc));
    set.labels.push_back(inc->owning_team);
  }
  return set;
}

std::vector<GbdtModel> train_bucketed_family(std::span<const corpus::Bucket> buckets, const GbdtConfig& config,
                                             const FeatureLookup& features, const std::string& family) {
  config.validate();
  if (buckets.size() != config.num_buckets) {
    throw ConfigError("expected " + std::to_string(config.num_buckets) + " buckets, got " +
                      std::to_string(buckets.size()));
  }
  std::vector<GbdtModel> models(buckets.size());
  std::vector<std::exception_ptr> errors(buckets.size());
  auto train_one = [&](std::size_t b) {
    try {
      auto set = make_training_set(buckets[b], config, features);
      std::vector<std::string> expected;
      for (const auto& [team, count] : buckets[b].class_counts) expected.push_back(team);
      if (set.features.size() < 2) throw TrainingError("bucket " + std::to_string(b) + " has fewer than two examples");
      const auto space = textprep::select_features_mi(set.features, set.labels, config.feature_top_k);
      models[b] = train_gbdt(set, space, config, expected);
      models[b].model_id = family + "-" + std::to_string(b);
    } catch (...) {
      errors[b] = std::current_exception();
    }
  };
  std::size_t threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, buckets.size());
  if (threads <= 1) {
    for (std::size_t b = 0; b < buckets.size(); ++b) train_one(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t b; (b = next.fetch_add(1)) < buckets.size();) train_one(b);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return models;
}

}  // namespace triage::gbdt
