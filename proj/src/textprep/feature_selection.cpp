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

#include "triage/textprep/feature_selection.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "triage/common/error.hpp"

namespace triage::textprep {

namespace {

constexpr double kMiFloor = 1e-12;

}  // namespace

std::optional<std::size_t> FeatureSpace::column(std::uint32_t index) const {
  auto it = std::lower_bound(selected.begin(), selected.end(), index);
  if (it == selected.end() || *it != index) return std::nullopt;
  return static_cast<std::size_t>(it - selected.begin());
}

void FeatureSpace::save(Archive& archive, const std::string& prefix) const {
  archive.put(prefix + ".dim", std::vector<std::uint64_t>{dim});
  std::vector<std::uint64_t> idx(selected.begin(), selected.end());
  std::vector<double> mi;
  mi.reserve(selected.size());
  for (auto i : selected) {
    auto it = mi_scores.find(i);
    mi.push_back(it == mi_scores.end() ? 0.0 : it->second);
  }
  archive.put(prefix + ".selected", std::move(idx));
  archive.put(prefix + ".mi", std::move(mi));
}

FeatureSpace FeatureSpace::load(const Archive& archive, const std::string& prefix) {
  FeatureSpace fs;
  fs.dim = archive.get_u64(prefix + ".dim").at(0);
  const auto idx = archive.get_u64(prefix + ".selected");
  const auto mi = archive.get_f64(prefix + ".mi");
  if (idx.size() != mi.size()) throw ValidationError("feature space arrays disagree in length");
  for (std::size_t i = 0; i < idx.size(); ++i) {
    fs.selected.push_back(static_cast<std::uint32_t>(idx[i]));
    fs.mi_scores[static_cast<std::uint32_t>(idx[i])] = mi[i];
  }
  if (!std::is_sorted(fs.selected.begin(), fs.selected.end())) {
    throw ValidationError("feature space indices are not sorted");
  }
  return fs;
}

std::map<std::uint32_t, double> mutual_information(std::span<const HashedFeatureVector> vectors,
                                                   std::span<const std::string> labels,
                                                   const MiOptions& options) {
  if (vectors.size() != labels.size()) throw ValidationError("vectors and labels differ in length");
  if (options.smoothing < 0.0) throw ConfigError("MI smoothing must be >= 0");

  std::map<std::string, std::size_t> class_of;
  for (const auto& l : labels) class_of.emplace(l, 0);
  std::size_t next = 0;
  for (auto& [label, id] : class_of) id = next++;
  const std::size_t num_classes = class_of.size();

  std::vector<std::size_t> y(labels.size());
  std::vector<double> class_total(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = class_of.at(labels[i]);
    class_total[y[i]] += 1.0;
  }

  std::unordered_map<std::uint32_t, std::vector<double>> present;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (const auto& e : vectors[i].entries) {
      if (e.value <= 0.0) continue;
      auto& row = present[e.index];
      if (row.empty()) row.assign(num_classes, 0.0);
      row[y[i]] += 1.0;
    }
  }

  const double n = static_cast<double>(labels.size());
  const double s = options.smoothing;
  const double total = n + 2.0 * s * static_cast<double>(num_classes);
  std::map<std::uint32_t, double> out;
  for (const auto& [index, row] : present) {
    double on = 0.0;
    for (double v : row) on += v;
    if (on == 0.0 || on == n) {
      out[index] = 0.0;
      continue;
    }
    const double p_on = (on + s * static_cast<double>(num_classes)) / total;
    const double p_off = 1.0 - p_on;
    double mi = 0.0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double p_c = (class_total[c] + 2.0 * s) / total;
      const double p1 = (row[c] + s) / total;
      const double p0 = (class_total[c] - row[c] + s) / total;
      if (p1 > 0.0) mi += p1 * std::log(p1 / (p_on * p_c));
      if (p0 > 0.0) mi += p0 * std::log(p0 / (p_off * p_c));
    }
    out[index] = mi > kMiFloor ? mi : 0.0;
  }
  return out;
}

FeatureSpace select_features_mi(std::span<const HashedFeatureVector> vectors,
                                std::span<const std::string> labels, std::size_t k,
                                const MiOptions& options) {
  if (k == 0) throw ConfigError("feature_top_k must be >= 1");
  if (vectors.size() != labels.size()) throw ValidationError("vectors and labels differ in length");
  if (vectors.size() < 2) throw ValidationError("MI selection needs at least two examples");
  if (std::all_of(labels.begin(), labels.end(), [&](const std::string& l) { return l == labels[0]; })) {
    throw ValidationError("MI selection needs at least two distinct labels");
  }
  FeatureSpace fs;
  fs.dim = vectors[0].dim;
  const auto mi = mutual_information(vectors, labels, options);
  std::vector<std::pair<double, std::uint32_t>> ranked;
  ranked.reserve(mi.size());
  // Ranking uses MI rounded to the zero floor, so mathematically equal scores
  // that differ by rounding noise still tie and fall back to the index.
  for (const auto& [index, score] : mi) {
    if (score > 0.0) ranked.emplace_back(std::round(score / kMiFloor) * kMiFloor, index);
  }
  const auto keep = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    [](const auto& a, const auto& b) {
                      if (a.first != b.first) return a.first > b.first;
                      return a.second < b.second;
                    });
  for (std::size_t i = 0; i < keep; ++i) {
    fs.selected.push_back(ranked[i].second);
    fs.mi_scores[ranked[i].second] = mi.at(ranked[i].second);
  }
  std::sort(fs.selected.begin(), fs.selected.end());
  return fs;
}

}  // namespace triage::textprep
