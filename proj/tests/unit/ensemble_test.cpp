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

#include <algorithm>
#include <set>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"
#include "triage/ensemble/merge.hpp"
#include "triage/ensemble/rules.hpp"

using namespace triage;
using namespace triage::ensemble;

namespace {

ModelOutput output(const std::string& id, std::map<std::string, double> scores) {
  return make_model_output(id, std::move(scores));
}

std::vector<ModelOutput> random_outputs(Rng& rng, std::size_t max_models = 16) {
  std::vector<ModelOutput> outs;
  const auto n = 1 + rng.below(max_models);
  for (std::size_t m = 0; m < n; ++m) {
    std::map<std::string, double> scores;
    const auto k = rng.below(8);
    for (std::size_t i = 0; i < k; ++i) {
      // Coarse grid so ties occur often.
      scores["t" + std::to_string(rng.below(12))] = static_cast<double>(rng.below(11)) / 10.0;
    }
    outs.push_back(output("m" + std::to_string(m), scores));
  }
  return outs;
}

// Straightforward restatement: collect every (team, confidence) pair.
std::vector<std::pair<std::string, double>> oracle(const std::vector<ModelOutput>& outs, std::size_t n) {
  std::map<std::string, double> best;
  for (const auto& o : outs) {
    for (const auto& ts : o.top) {
      if (!best.count(ts.team) || ts.confidence > best[ts.team]) best[ts.team] = ts.confidence;
    }
  }
  std::vector<std::pair<std::string, double>> v(best.begin(), best.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (v.size() > n) v.resize(n);
  return v;
}

std::vector<std::pair<std::string, double>> ranked(const Recommendation& r) {
  std::vector<std::pair<std::string, double>> v;
  for (const auto& t : r.teams) v.emplace_back(t.team, t.confidence);
  return v;
}

corpus::Incident incident(std::string title) {
  corpus::Incident inc;
  inc.id = "i1";
  inc.title = std::move(title);
  inc.source_name = "monitor-x";
  inc.keywords = {"disk", "latency"};
  inc.severity = 2;
  return inc;
}

Recommendation rec_with(std::string top) {
  Recommendation r;
  r.teams.push_back({std::move(top), 0.9, {"m"}});
  r.models_responded = 1;
  return r;
}

}  // namespace

TEST(Merge, WorkedExample) {
  const std::vector<ModelOutput> outs{output("A", {{"t1", 0.9}, {"t2", 0.5}}), output("B", {{"t2", 0.7}, {"t3", 0.6}})};
  const auto r = merge_outputs(outs);
  ASSERT_EQ(r.teams.size(), 3u);
  EXPECT_EQ(r.teams[0], (RecommendedTeam{"t1", 0.9, {"A"}}));
  EXPECT_EQ(r.teams[1], (RecommendedTeam{"t2", 0.7, {"B"}}));
  EXPECT_EQ(r.teams[2], (RecommendedTeam{"t3", 0.6, {"B"}}));
  EXPECT_EQ(r.models_responded, 2u);
}

TEST(Merge, SingleOutputIsIdentity) {
  const auto o = output("A", {{"x", 0.2}, {"y", 0.8}, {"z", 0.5}, {"w", 0.1}, {"v", 0.3}, {"u", 0.05}});
  const auto r = merge_outputs(std::vector{o});
  ASSERT_EQ(r.teams.size(), o.top.size());
  for (std::size_t i = 0; i < o.top.size(); ++i) {
    EXPECT_EQ(r.teams[i].team, o.top[i].team);
    EXPECT_EQ(r.teams[i].confidence, o.top[i].confidence);
  }
}

TEST(Merge, DisjointTiesBreakByTeamId) {
  std::vector<ModelOutput> outs;
  for (int m = 0; m < 16; ++m) outs.push_back(output("m" + std::to_string(m), {{"team-" + std::string(1, static_cast<char>('p' - m)), 0.5}}));
  const auto r = merge_outputs(outs);
  ASSERT_EQ(r.teams.size(), 5u);
  const std::vector<std::string> expect{"team-a", "team-b", "team-c", "team-d", "team-e"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(r.teams[i].team, expect[i]);
}

TEST(Merge, EmptyInputIsUnavailable) {
  EXPECT_THROW(merge_outputs(std::vector<ModelOutput>{}), UnavailableError);
}

TEST(Merge, TiedModelsAllContribute) {
  const std::vector<ModelOutput> outs{output("B", {{"t", 0.4}}), output("A", {{"t", 0.4}}), output("C", {{"t", 0.3}})};
  EXPECT_EQ(merge_outputs(outs).teams[0].models, (std::vector<std::string>{"A", "B"}));
}

TEST(Merge, WeightHook) {
  const std::vector<ModelOutput> outs{output("A", {{"t1", 0.9}}), output("B", {{"t2", 0.6}})};
  MergeOptions opts;
  opts.weights["A"] = 0.5;
  const auto r = merge_outputs(outs, opts);
  EXPECT_EQ(r.teams[0].team, "t2");
  EXPECT_DOUBLE_EQ(r.teams[1].confidence, 0.45);
}

TEST(MergeProperties, MatchesOracle) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    const auto outs = random_outputs(rng);
    const auto n = 1 + rng.below(7);
    MergeOptions opts;
    opts.n = n;
    EXPECT_EQ(ranked(merge_outputs(outs, opts)), oracle(outs, n));
  }
}

TEST(MergeProperties, Commutative) {
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    auto outs = random_outputs(rng);
    const auto base = merge_outputs(outs);
    rng.shuffle(std::span(outs));
    EXPECT_EQ(merge_outputs(outs), base);
  }
}

TEST(MergeProperties, Associative) {
  Rng rng(3);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_outputs(rng, 4), b = random_outputs(rng, 4), c = random_outputs(rng, 4);
    std::vector<ModelOutput> flat;
    for (const auto* part : {&a, &b, &c}) flat.insert(flat.end(), part->begin(), part->end());
    auto with = [](std::vector<ModelOutput> xs, const std::vector<ModelOutput>& ys) {
      xs.insert(xs.end(), ys.begin(), ys.end());
      return xs;
    };
    // (a + b) + c versus a + (b + c), groups collapsed through merge_family.
    const auto left = merge_outputs(with({merge_family(with(a, b), "ab")}, c));
    const auto right = merge_outputs(with(a, {merge_family(with(b, c), "bc")}));
    EXPECT_EQ(ranked(left), ranked(merge_outputs(flat)));
    EXPECT_EQ(ranked(right), ranked(merge_outputs(flat)));
  }
}

TEST(MergeProperties, MaxBoundAndNoInventedTeams) {
  Rng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const auto outs = random_outputs(rng);
    std::map<std::string, double> max_in;
    for (const auto& o : outs) {
      for (const auto& ts : o.top) max_in[ts.team] = std::max(max_in[ts.team], ts.confidence);
    }
    const auto r = merge_outputs(outs);
    std::set<std::string> seen;
    for (const auto& team : r.teams) {
      ASSERT_TRUE(max_in.count(team.team));
      EXPECT_EQ(team.confidence, max_in[team.team]);
      EXPECT_TRUE(seen.insert(team.team).second);
      EXPECT_FALSE(team.models.empty());
    }
    for (std::size_t i = 1; i < r.teams.size(); ++i) {
      EXPECT_TRUE(ranks_before({r.teams[i - 1].team, r.teams[i - 1].confidence}, {r.teams[i].team, r.teams[i].confidence}));
    }
  }
}

TEST(MergeProperties, RemovingAModelNeverRaisesConfidence) {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const auto outs = random_outputs(rng);
    if (outs.size() < 2) continue;
    MergeOptions all;
    all.n = 100;
    std::map<std::string, double> before;
    for (const auto& team : merge_outputs(outs, all).teams) before[team.team] = team.confidence;
    auto fewer = outs;
    fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(rng.below(fewer.size())));
    for (const auto& team : merge_outputs(fewer, all).teams) EXPECT_LE(team.confidence, before.at(team.team));
  }
}

TEST(MergeProperties, RecallPreservedOnSmallCases) {
  // Every assignment of three teams to two models with confidences on a 3-step grid.
  const std::vector<std::string> teams{"a", "b", "c"};
  const double grid[] = {0.0, 0.5, 1.0};
  for (int mask = 0; mask < 729; ++mask) {
    int code = mask;
    std::map<std::string, double> s1, s2;
    for (const auto& team : teams) {
      s1[team] = grid[code % 3];
      code /= 3;
      s2[team] = grid[code % 3];
      code /= 3;
    }
    const std::vector<ModelOutput> outs{output("m1", s1), output("m2", s2)};
    for (std::size_t n = 1; n <= 3; ++n) {
      MergeOptions opts;
      opts.n = n;
      const auto r = merge_outputs(outs, opts);
      std::set<std::string> merged;
      for (const auto& t : r.teams) merged.insert(t.team);
      const auto expect = oracle(outs, n);
      for (const auto& [team, conf] : expect) EXPECT_TRUE(merged.count(team));
    }
  }
}

TEST(MergeFamily, IdentityAndMax) {
  const auto a = output("mart-0", {{"x", 0.3}, {"y", 0.6}});
  const auto b = output("mart-1", {{"x", 0.7}});
  const auto one = merge_family(std::vector{a}, "mart");
  EXPECT_EQ(one.top, a.top);
  EXPECT_EQ(one.model_id, "mart");
  const auto two = merge_family(std::vector{a, b}, "mart");
  ASSERT_EQ(two.top.size(), 2u);
  EXPECT_EQ(two.top[0], (TeamScore{"x", 0.7}));
  EXPECT_EQ(two.top[1], (TeamScore{"y", 0.6}));
  EXPECT_EQ(merge_family(std::vector{b, a}, "mart").top, two.top);
}

TEST(Rules, PrecedenceAndFallback) {
  const auto rules = RuleSet::from_json(R"({"rules": [
    {"rule_id": "low", "priority": 2, "target_team": "t2", "when": [{"field": "title", "op": "contains", "value": "disk"}]},
    {"rule_id": "high", "priority": 1, "target_team": "t1", "when": [{"field": "keywords", "op": "equals", "value": "disk"},
                                                                       {"field": "severity", "op": "regex", "value": "^[0-2]$"}]}
  ]})");
  EXPECT_EQ(apply_rules(rules, incident("disk full"), rec_with("ml-team")), (RoutingDecision{"t1", "rule", "high"}));
  auto low_sev = incident("disk full");
  low_sev.severity = 4;
  EXPECT_EQ(apply_rules(rules, low_sev, rec_with("ml-team")), (RoutingDecision{"t2", "rule", "low"}));
  auto other = incident("cert expired");
  other.keywords.clear();
  EXPECT_EQ(apply_rules(rules, other, rec_with("ml-team")), (RoutingDecision{"ml-team", "ml", ""}));
  EXPECT_EQ(apply_rules(RuleSet{}, other, rec_with("y")), (RoutingDecision{"y", "ml", ""}));
  EXPECT_THROW(apply_rules(RuleSet{}, other, Recommendation{}), UnavailableError);
}

TEST(Rules, MalformedPredicatesAreSkipped) {
  const auto rules = RuleSet::from_json(R"({"rules": [
    {"rule_id": "bad-regex", "priority": 1, "target_team": "x", "when": [{"field": "title", "op": "regex", "value": "(["}]},
    {"rule_id": "bad-field", "priority": 2, "target_team": "x", "when": [{"field": "colour", "op": "equals", "value": "red"}]},
    {"rule_id": "bad-op", "priority": 3, "target_team": "x", "when": [{"field": "title", "op": "startswith", "value": "d"}]},
    {"rule_id": "good", "priority": 4, "target_team": "ok", "when": [{"field": "source_name", "op": "regex", "value": "^monitor-"}]}
  ]})");
  ASSERT_EQ(rules.rules().size(), 4u);
  EXPECT_FALSE(rules.rules()[0].malformed.empty());
  EXPECT_FALSE(rules.rules()[1].malformed.empty());
  EXPECT_FALSE(rules.rules()[2].malformed.empty());
  EXPECT_TRUE(rules.rules()[3].malformed.empty());
  EXPECT_EQ(apply_rules(rules, incident("disk"), rec_with("ml")).team, "ok");
}

TEST(Rules, LoaderRejectsStructuralErrors) {
  EXPECT_THROW(RuleSet::from_json("not json"), ValidationError);
  EXPECT_THROW(RuleSet::from_json(R"({"rules": {}})"), ValidationError);
  EXPECT_THROW(RuleSet::from_json(R"({"rules": [{"priority": 1, "target_team": "x", "when": []}]})"), ValidationError);
  EXPECT_THROW(RuleSet::from_json(R"({"rules": [
    {"rule_id": "a", "priority": 1, "target_team": "x", "when": []},
    {"rule_id": "b", "priority": 1, "target_team": "y", "when": []}]})"),
               ValidationError);
  EXPECT_THROW(RuleSet::from_json(R"({"rules": [
    {"rule_id": "a", "priority": 1, "target_team": "x", "when": []},
    {"rule_id": "a", "priority": 2, "target_team": "y", "when": []}]})"),
               ValidationError);
}
