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
#include <cmath>
#include <set>
#include <sstream>

#include "triage/common/error.hpp"
#include "triage/corpus/corpus.hpp"
#include "triage/corpus/sampling.hpp"
#include "triage/corpus/synthetic.hpp"

using namespace triage;
using namespace triage::corpus;

namespace {

const std::string kData = TRIAGE_TEST_DATA;

Incident make(const std::string& id, const std::string& team, std::int64_t t = 0,
              const std::string& title = "something broke") {
  Incident inc;
  inc.id = id;
  inc.owning_team = team;
  inc.created_at = t;
  inc.title = title;
  inc.routing_path = {team};
  return inc;
}

Corpus teams_corpus(const std::map<std::string, int>& counts) {
  std::vector<Incident> v;
  int n = 0;
  for (const auto& [team, c] : counts) {
    for (int i = 0; i < c; ++i) {
      v.push_back(make("I" + std::to_string(n), team, n, "title " + std::to_string(n)));
      ++n;
    }
  }
  return Corpus(std::move(v));
}

// Digit-free unique title; digits would collapse under title normalization.
std::string letters(int i) {
  std::string s = "t";
  do {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i > 0);
  return s;
}

}  // namespace

TEST(LoadCorpus, ThreeValidRecords) {
  const auto r = load_corpus(kData + "/three_valid.jsonl");
  EXPECT_EQ(r.corpus.size(), 3u);
  EXPECT_TRUE(r.rejects.empty());
  const auto* inc = r.corpus.find("INC-2");
  ASSERT_NE(inc, nullptr);
  EXPECT_TRUE(inc->is_cri());
  EXPECT_EQ(inc->reroute_count(), 1);
  EXPECT_EQ(r.corpus.find("INC-3")->status, IncidentStatus::kActive);
}

TEST(LoadCorpus, MissingOwningTeamIsReportedNotDropped) {
  const auto r = load_corpus(kData + "/two_valid_one_missing_team.jsonl");
  EXPECT_EQ(r.corpus.size(), 2u);
  ASSERT_EQ(r.rejects.size(), 1u);
  EXPECT_EQ(r.rejects[0].line, 3u);
  EXPECT_NE(r.rejects[0].reason.find("owning_team"), std::string::npos);
}

TEST(LoadCorpus, EmptyFileGivesEmptyCorpus) {
  const auto r = load_corpus(kData + "/empty.jsonl");
  EXPECT_TRUE(r.corpus.empty());
  EXPECT_TRUE(r.rejects.empty());
}

TEST(LoadCorpus, UnreadableFileIsIoError) {
  EXPECT_THROW(load_corpus(kData + "/does_not_exist.jsonl"), IoError);
}

TEST(LoadCorpus, RecordLevelRulesBecomeRejects) {
  std::istringstream in(
      R"({"id":"a","title":"t","owning_team":"__Other__"})" "\n"
      R"({"id":"b","title":"t","owning_team":"x","severity":7})" "\n"
      R"({"id":"c","title":"t","owning_team":"x","routing_path":["x","y"],"status":"resolved"})" "\n"
      R"({"id":"d","title":"","owning_team":"x"})" "\n"
      R"({not json)" "\n"
      R"({"id":"e","title":"t","owning_team":"x"})" "\n"
      R"({"id":"e","title":"t2","owning_team":"x"})" "\n");
  const auto r = parse_corpus(in);
  EXPECT_EQ(r.corpus.size(), 1u);
  EXPECT_EQ(r.rejects.size(), 6u);
}

TEST(LoadCorpus, SerializationRoundTrips) {
  const auto r = load_corpus(kData + "/three_valid.jsonl");
  std::istringstream in(serialize_corpus(r.corpus));
  const auto again = parse_corpus(in);
  ASSERT_EQ(again.corpus.size(), 3u);
  EXPECT_EQ(again.corpus.incidents(), r.corpus.incidents());
  EXPECT_EQ(serialize_corpus(again.corpus), serialize_corpus(r.corpus));
}

TEST(CorpusIndex, TeamIndexCoversEveryIncident) {
  const auto c = teams_corpus({{"A", 3}, {"B", 2}});
  std::set<std::string> ids;
  for (const auto& [team, members] : c.team_index()) {
    for (const auto& id : members) {
      EXPECT_EQ(c.find(id)->owning_team, team);
      EXPECT_TRUE(ids.insert(id).second);
    }
  }
  EXPECT_EQ(ids.size(), c.size());
  EXPECT_THROW(Corpus({make("x", "A"), make("x", "B")}), ValidationError);
}

TEST(MergeInfrequent, RelabelsRareTeams) {
  const auto c = teams_corpus({{"A", 10}, {"B", 2}});
  const auto m = merge_infrequent_teams(c, 3);
  const auto counts = m.team_counts();
  EXPECT_EQ(counts.size(), 2u);
  EXPECT_EQ(counts.at("A"), 10u);
  EXPECT_EQ(counts.at(std::string(kOtherTeam)), 2u);
  for (const auto& inc : m.incidents()) {
    if (inc.owning_team == kOtherTeam) {
      EXPECT_EQ(m.original_team(inc), "B");
    }
  }
}

TEST(MergeInfrequent, MinCountOneIsIdentity) {
  const auto c = teams_corpus({{"A", 10}, {"B", 2}});
  const auto m = merge_infrequent_teams(c, 1);
  EXPECT_EQ(m.incidents(), c.incidents());
  EXPECT_TRUE(m.original_teams().empty());
}

TEST(MergeInfrequent, AllRareCollapsesToOneClass) {
  const auto m = merge_infrequent_teams(teams_corpus({{"A", 1}, {"B", 1}}), 2);
  EXPECT_EQ(m.team_counts().size(), 1u);
  EXPECT_EQ(m.team_counts().begin()->first, kOtherTeam);
}

TEST(MergeInfrequent, Idempotent) {
  const auto c = teams_corpus({{"A", 10}, {"B", 2}, {"C", 4}, {"D", 1}});
  for (std::size_t k : {1u, 2u, 3u, 5u, 11u}) {
    const auto once = merge_infrequent_teams(c, k);
    const auto twice = merge_infrequent_teams(once, k);
    EXPECT_EQ(once.incidents(), twice.incidents()) << k;
    EXPECT_EQ(once.original_teams(), twice.original_teams()) << k;
  }
  EXPECT_THROW(merge_infrequent_teams(c, 0), ConfigError);
}

TEST(SplitTrainTest, PartitionsByTimestamp) {
  std::vector<Incident> v;
  for (int i = 0; i < 10; ++i) v.push_back(make("I" + std::to_string(i), "A", 100 * i));
  const Corpus c(std::move(v));
  auto s = split_train_test(c, 650);
  EXPECT_EQ(s.train.size(), 7u);
  EXPECT_EQ(s.test.size(), 3u);
  EXPECT_FALSE(s.warning);

  s = split_train_test(c, -1);
  EXPECT_EQ(s.train.size(), 0u);
  EXPECT_EQ(s.test.size(), 10u);
  EXPECT_TRUE(s.warning);

  s = split_train_test(c, 10000);
  EXPECT_EQ(s.train.size(), 10u);
  EXPECT_EQ(s.test.size(), 0u);
  EXPECT_TRUE(s.warning);
}

TEST(SplitTrainTest, DisjointAndExhaustiveForAnyCutoff) {
  const auto c = generate_synthetic({.num_teams = 3, .incidents_per_team = 30}, 1);
  const auto [lo, hi] = c.time_range();
  for (std::int64_t cut = lo - 10; cut <= hi + 10; cut += (hi - lo) / 37 + 1) {
    const auto s = split_train_test(c, cut);
    std::set<std::string> ids;
    for (const auto& i : s.train.incidents()) ids.insert(i.id);
    for (const auto& i : s.test.incidents()) EXPECT_TRUE(ids.insert(i.id).second);
    EXPECT_EQ(ids.size(), c.size());
  }
}

TEST(Sampling, CapBindsInEveryBucket) {
  std::vector<Incident> v;
  for (int i = 0; i < 1000; ++i) v.push_back(make("A" + std::to_string(i), "A", i * 60, letters(i % 97)));
  for (int i = 0; i < 3; ++i) v.push_back(make("B" + std::to_string(i), "B", i * 60));
  const Corpus c(std::move(v));
  SamplingConfig cfg;
  cfg.per_class_cap = 500;
  cfg.num_buckets = 10;
  const auto buckets = sample_and_partition(c, cfg);
  ASSERT_EQ(buckets.size(), 10u);
  for (const auto& b : buckets) {
    EXPECT_EQ(b.class_counts.at("A"), 500u);
    EXPECT_EQ(b.class_counts.at("B"), 3u);
    std::set<const Incident*> unique(b.incidents.begin(), b.incidents.end());
    EXPECT_EQ(unique.size(), b.incidents.size());
  }
  EXPECT_NE(buckets[0].incidents, buckets[1].incidents);
}

TEST(Sampling, SameTitleCapLimitsPool) {
  std::vector<Incident> v;
  for (int i = 0; i < 600; ++i) v.push_back(make("S" + std::to_string(1000 + i), "A", i, "VM down on node " + std::to_string(i)));
  const Corpus c(std::move(v));
  const auto pool = same_title_capped_pool(c, 50, normalize_title);
  EXPECT_EQ(pool.size(), 50u);
  for (const auto* inc : pool) EXPECT_GE(inc->created_at, 550);

  SamplingConfig cfg;
  cfg.num_buckets = 2;
  for (const auto& b : sample_and_partition(c, cfg)) EXPECT_EQ(b.class_counts.at("A"), 50u);
}

TEST(Sampling, QuotaSplitsCappedSlots) {
  std::vector<Incident> v;
  for (int i = 0; i < 300; ++i) {
    auto inc = make("H" + std::to_string(i), "A", i, "h" + letters(i));
    inc.severity = 1;
    v.push_back(inc);
    auto low = make("L" + std::to_string(i), "A", i, "l" + letters(i));
    low.severity = 4;
    v.push_back(low);
  }
  const Corpus c(std::move(v));
  SamplingConfig cfg;
  cfg.per_class_cap = 100;
  cfg.num_buckets = 3;
  for (const auto& b : sample_and_partition(c, cfg)) {
    const auto high = std::count_if(b.incidents.begin(), b.incidents.end(),
                                    [](const Incident* i) { return i->is_high_impact(); });
    EXPECT_EQ(high, 80);
    EXPECT_EQ(b.incidents.size(), 100u);
  }
}

TEST(Sampling, ShortHighImpactGroupIsBestEffort) {
  std::vector<Incident> v;
  for (int i = 0; i < 10; ++i) {
    auto inc = make("H" + std::to_string(i), "A", i, "h" + letters(i));
    inc.incident_type = IncidentType::kCri;
    v.push_back(inc);
  }
  for (int i = 0; i < 300; ++i) {
    auto low = make("L" + std::to_string(i), "A", i, "l" + letters(i));
    low.severity = 3;
    v.push_back(low);
  }
  SamplingConfig cfg;
  cfg.per_class_cap = 100;
  cfg.num_buckets = 1;
  const Corpus c(std::move(v));
  const auto b = sample_and_partition(c, cfg)[0];
  EXPECT_EQ(b.incidents.size(), 100u);
  EXPECT_EQ(std::count_if(b.incidents.begin(), b.incidents.end(),
                          [](const Incident* i) { return i->is_high_impact(); }),
            10);
}

TEST(Sampling, NewerIncidentsAreDrawnAtLeastAsOften) {
  std::vector<Incident> v;
  const std::int64_t day = 86400;
  for (int i = 0; i < 6; ++i) {
    v.push_back(make("R" + std::to_string(i), "A", 1000 * day - i * 30 * day, "r" + letters(i)));
  }
  SamplingConfig cfg;
  cfg.per_class_cap = 3;
  cfg.num_buckets = 2000;
  const Corpus c(std::move(v));
  const auto buckets = sample_and_partition(c, cfg);
  std::map<std::string, int> hits;
  for (const auto& b : buckets) {
    for (const auto* inc : b.incidents) ++hits[inc->id];
  }
  for (int i = 0; i + 1 < 6; ++i) {
    const double newer = hits["R" + std::to_string(i)];
    const double older = hits["R" + std::to_string(i + 1)];
    // Three binomial standard deviations of slack.
    EXPECT_GE(newer + 3.0 * std::sqrt(2000.0 * 0.25) * std::sqrt(2.0), older) << i;
  }
  EXPECT_GT(hits["R0"], hits["R5"]);
}

TEST(Sampling, SameSeedSameBuckets) {
  const auto c = generate_synthetic({.num_teams = 4, .incidents_per_team = 80}, 3);
  SamplingConfig cfg;
  cfg.per_class_cap = 30;
  cfg.num_buckets = 3;
  const auto a = sample_and_partition(c, cfg);
  const auto b = sample_and_partition(c, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].incidents, b[i].incidents);
}

TEST(Sampling, RejectsBadConfigs) {
  const auto c = teams_corpus({{"A", 3}, {"B", 3}});
  SamplingConfig cfg;
  cfg.per_class_cap = 0;
  EXPECT_THROW(sample_and_partition(c, cfg), ConfigError);
  cfg = {};
  cfg.high_severity_quota = 1.5;
  EXPECT_THROW(sample_and_partition(c, cfg), ConfigError);
  cfg = {};
  cfg.max_bucket_examples = 10;
  try {
    sample_and_partition(c, cfg);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("suggested cap 5"), std::string::npos);
  }
  EXPECT_THROW(sample_and_partition(Corpus{}, SamplingConfig{}), ValidationError);
}

TEST(Synthetic, SameSeedIsByteIdentical) {
  GeneratorSpec spec;
  EXPECT_EQ(serialize_corpus(generate_synthetic(spec, 7)), serialize_corpus(generate_synthetic(spec, 7)));
  EXPECT_NE(serialize_corpus(generate_synthetic(spec, 7)), serialize_corpus(generate_synthetic(spec, 8)));
}

TEST(Synthetic, CountsPerTeam) {
  const auto c = generate_synthetic({}, 7);
  EXPECT_EQ(c.size(), 4000u);
  ASSERT_EQ(c.team_index().size(), 20u);
  for (const auto& [team, ids] : c.team_index()) EXPECT_EQ(ids.size(), 200u) << team;
  for (const auto& inc : c.incidents()) EXPECT_EQ(validate(inc), "") << inc.id;
}

TEST(Synthetic, TemplateFractionYieldsSharedTitles) {
  const auto c = generate_synthetic({}, 7);
  std::map<std::pair<std::string, std::string>, int> freq;
  for (const auto& inc : c.incidents()) {
    if (!inc.is_cri()) ++freq[{normalize_title(inc.title), inc.owning_team}];
  }
  std::size_t lsi = 0, shared = 0;
  for (const auto& inc : c.incidents()) {
    if (inc.is_cri()) continue;
    ++lsi;
    if (freq[{normalize_title(inc.title), inc.owning_team}] >= 2) ++shared;
  }
  EXPECT_GE(static_cast<double>(shared) / static_cast<double>(lsi), 0.30);
}

TEST(Synthetic, HopMixAndColdStartTeams) {
  GeneratorSpec spec;
  spec.cold_start_team_fraction = 0.1;
  const auto c = generate_synthetic(spec, 7);
  std::size_t multi = 0;
  for (const auto& inc : c.incidents()) multi += inc.reroute_count() >= 2;
  const double frac = static_cast<double>(multi) / static_cast<double>(c.size());
  EXPECT_NEAR(frac, spec.multi_hop_fraction, 0.03);
  const auto counts = c.team_counts();
  EXPECT_EQ(counts.at(synthetic_team_id(19)), 6u);
  EXPECT_EQ(counts.at(synthetic_team_id(18)), 6u);
  const auto hi = c.time_range().second;
  for (const auto& id : c.team_index().at(synthetic_team_id(19))) {
    EXPECT_GE(c.find(id)->created_at, hi - 7 * 86400);
  }
}

TEST(Synthetic, NeedsTwoTeams) {
  EXPECT_THROW(generate_synthetic({.num_teams = 1}, 0), ConfigError);
}
