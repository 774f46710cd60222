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

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"
#include "triage/corpus/synthetic.hpp"
#include "triage/retrieval/inverted_index.hpp"
#include "triage/retrieval/lsh.hpp"

using namespace triage;
using namespace triage::retrieval;
using textprep::TokenStream;

namespace {

TokenStream stream(std::vector<std::string> tokens) {
  TokenStream ts;
  ts.sentences.push_back(std::move(tokens));
  return ts;
}

Document doc(std::string id, std::string team, std::vector<std::string> tokens) {
  return {std::move(id), std::move(team), stream(std::move(tokens))};
}

std::vector<std::string> repeat(const std::string& tok, int n) { return std::vector<std::string>(n, tok); }

std::vector<std::string> concat(std::initializer_list<std::vector<std::string>> parts) {
  std::vector<std::string> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::string word(std::size_t i) {
  std::string s = "w";
  do {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  } while (i);
  return s;
}

// Independent scorer straight from the tables.
double oracle_table(const std::map<std::string, double>& table, const InvertedIndex& idx,
                    const std::set<std::string>& q) {
  double mass = 0.0, hit = 0.0;
  for (const auto& t : q) {
    mass += idx.idf(t);
    if (table.count(t)) hit += idx.idf(t);
  }
  return mass > 0 ? hit / mass : 0.0;
}

}  // namespace

TEST(TeamIdf, Examples) {
  EXPECT_DOUBLE_EQ(team_idf(7, 7), 1.0);
  EXPECT_NEAR(team_idf(10, 1), std::log(5.5) + 1.0, 1e-15);
  EXPECT_NEAR(team_idf(10, 1), 2.7047, 5e-5);
}

TEST(TeamIdf, MonotoneInDocumentFrequency) {
  for (std::size_t t = 1; t < 50; ++t) {
    for (std::size_t df = 1; df < t; ++df) EXPECT_GE(team_idf(t, df), team_idf(t, df + 1));
    EXPECT_GE(team_idf(t, t), 1.0);
  }
}

TEST(InvertedIndex, IdfOverTeamDocuments) {
  std::vector<Document> docs{doc("1", "a", {"x", "y"}), doc("2", "b", {"x"}), doc("3", "b", {"y", "z"})};
  const auto idx = InvertedIndex::build(docs);
  EXPECT_DOUBLE_EQ(idx.idf("x"), 1.0);
  EXPECT_DOUBLE_EQ(idx.idf("y"), 1.0);
  EXPECT_NEAR(idx.idf("z"), std::log(3.0 / 2.0) + 1.0, 1e-15);
  EXPECT_EQ(idx.idf("missing"), 0.0);
}

TEST(InvertedIndex, SmallTeamTablesHoldAllTokens) {
  std::vector<Document> docs{doc("1", "a", {"p", "q", "r", "p"}), doc("2", "b", {"s"})};
  const auto idx = InvertedIndex::build(docs);
  EXPECT_EQ(idx.local_table("a").size(), 3u);
  EXPECT_EQ(idx.global_table("a").size(), 3u);
}

TEST(InvertedIndex, TableCaps) {
  std::vector<std::string> big;
  for (std::size_t i = 0; i < 900; ++i) big.push_back(word(i));
  std::vector<Document> docs{doc("1", "a", big), doc("2", "b", {"wa"})};
  const auto idx = InvertedIndex::build(docs);
  EXPECT_EQ(idx.local_table("a").size(), 200u);
  EXPECT_EQ(idx.global_table("a").size(), 500u);
  for (const auto& [tok, w] : idx.global_table("a")) EXPECT_DOUBLE_EQ(w, idx.idf(tok));
}

TEST(InvertedIndex, LocalRanksByTfIdfGlobalByTf) {
  // "common" is frequent but everywhere; "rare" is less frequent but unique.
  std::vector<Document> docs{doc("1", "a", concat({repeat("common", 5), repeat("rare", 4)})),
                             doc("2", "b", {"common"}), doc("3", "c", {"common"})};
  InvertedIndexOptions opts;
  opts.local_size = 1;
  opts.global_size = 1;
  const auto idx = InvertedIndex::build(docs, opts);
  EXPECT_TRUE(idx.local_table("a").count("rare"));
  EXPECT_TRUE(idx.global_table("a").count("common"));
}

TEST(InvertedIndex, BlendSubstitutionExample) {
  // Four equally rare query tokens; local keeps two of them, global one.
  std::vector<Document> docs{
      doc("1", "a", concat({repeat("t1", 5), repeat("t2", 4), repeat("t3", 3), repeat("t4", 2)})),
      doc("2", "b", {"z"})};
  InvertedIndexOptions opts;
  opts.local_size = 2;
  opts.global_size = 1;
  const auto idx = InvertedIndex::build(docs, opts);
  const std::vector<std::string> q{"t1", "t2", "t3", "t4"};
  EXPECT_DOUBLE_EQ(idx.local_score("a", q), 0.5);
  EXPECT_DOUBLE_EQ(idx.global_score("a", q), 0.25);
  const auto out = idx.predict(stream(q));
  ASSERT_EQ(out.top.size(), 1u);
  EXPECT_EQ(out.top[0].team, "a");
  EXPECT_NEAR(out.top[0].confidence, 0.3, 1e-12);
}

TEST(InvertedIndex, AlphaOneIsLocalScore) {
  std::vector<Document> docs{doc("1", "a", concat({repeat("t1", 3), {"t2"}})), doc("2", "b", {"t2", "z"})};
  InvertedIndexOptions opts;
  opts.alpha = 1.0;
  opts.local_size = 1;
  const auto idx = InvertedIndex::build(docs, opts);
  const std::vector<std::string> q{"t1", "t2", "z"};
  const auto out = idx.predict(stream(q));
  for (const auto& team : idx.teams()) EXPECT_EQ(out.scores.at(team), idx.local_score(team, q));
}

TEST(InvertedIndex, NoOverlapAndEmptyQueryAbstain) {
  std::vector<Document> docs{doc("1", "a", {"x"}), doc("2", "b", {"y"})};
  const auto idx = InvertedIndex::build(docs);
  const auto none = idx.predict(stream({"unseen"}));
  EXPECT_TRUE(none.empty());
  for (const auto& [team, s] : none.scores) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(idx.predict(TokenStream{}).empty());
}

TEST(InvertedIndex, BuildErrors) {
  EXPECT_THROW(InvertedIndex::build({}), ValidationError);
  std::vector<Document> docs{doc("1", "a", {"x"})};
  InvertedIndexOptions opts;
  opts.alpha = 1.5;
  EXPECT_THROW(InvertedIndex::build(docs, opts), ConfigError);
}

TEST(InvertedIndex, EmptyTeamGetsEmptyTables) {
  std::vector<Document> docs{doc("1", "a", {"x"}), {"2", "b", TokenStream{}}};
  const auto idx = InvertedIndex::build(docs);
  EXPECT_TRUE(idx.local_table("b").empty());
  EXPECT_EQ(idx.predict(stream({"x"})).top.size(), 1u);
}

TEST(InvertedIndex, FormulaMatchesOracleOnRandomTriples) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t teams = 2 + rng.below(5);
    std::vector<Document> docs;
    for (std::size_t t = 0; t < teams; ++t) {
      std::vector<std::string> toks;
      const auto n = 1 + rng.below(30);
      for (std::size_t i = 0; i < n; ++i) toks.push_back(word(rng.below(25)));
      docs.push_back(doc(std::to_string(t), "team" + std::to_string(t), toks));
    }
    InvertedIndexOptions opts;
    opts.alpha = rng.uniform();
    opts.local_size = 1 + rng.below(6);
    opts.global_size = 1 + rng.below(10);
    const auto idx = InvertedIndex::build(docs, opts);
    std::vector<std::string> q;
    const auto qn = 1 + rng.below(10);
    for (std::size_t i = 0; i < qn; ++i) q.push_back(word(rng.below(30)));
    const std::set<std::string> qs(q.begin(), q.end());
    const auto out = idx.predict(stream(q));
    for (const auto& team : idx.teams()) {
      const double l = oracle_table(idx.local_table(team), idx, qs);
      const double g = oracle_table(idx.global_table(team), idx, qs);
      const double expect = opts.alpha * l + (1.0 - opts.alpha) * g;
      EXPECT_NEAR(out.scores.at(team), expect, 1e-12);
      EXPECT_GE(out.scores.at(team), 0.0);
      EXPECT_LE(out.scores.at(team), 1.0);
    }
  }
}

TEST(InvertedIndex, QueryIsASet) {
  Rng rng(5);
  std::vector<Document> docs;
  for (int t = 0; t < 6; ++t) {
    std::vector<std::string> toks;
    for (int i = 0; i < 40; ++i) toks.push_back(word(rng.below(60)));
    docs.push_back(doc(std::to_string(t), "t" + std::to_string(t), toks));
  }
  const auto idx = InvertedIndex::build(docs);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> q;
    for (int i = 0; i < 12; ++i) q.push_back(word(rng.below(70)));
    const auto base = idx.predict(stream(q));
    auto shuffled = q;
    shuffled.insert(shuffled.end(), q.begin(), q.begin() + 4);
    rng.shuffle(std::span<std::string>(shuffled));
    TokenStream split;
    split.sentences = {{shuffled.begin(), shuffled.begin() + 5}, {shuffled.begin() + 5, shuffled.end()}};
    const auto other = idx.predict(split);
    EXPECT_EQ(base.scores, other.scores);
    EXPECT_EQ(base.top, other.top);
  }
}

TEST(InvertedIndex, SingleDocumentTeamIsReachable) {
  corpus::GeneratorSpec spec;
  spec.num_teams = 8;
  spec.incidents_per_team = 30;
  const auto c = corpus::generate_synthetic(spec, 3);
  auto docs = make_documents(c);
  const auto newcomer = doc("new-1", "newcomer", {"quasar", "flux", "capacitor", "timeout", "disk"});
  docs.push_back(newcomer);
  const auto idx = InvertedIndex::build(docs);
  const auto out = idx.predict(newcomer.tokens);
  ASSERT_FALSE(out.empty());
  EXPECT_EQ(out.top[0].team, "newcomer");
}

TEST(InvertedIndex, ArchiveRoundTrip) {
  corpus::GeneratorSpec spec;
  spec.num_teams = 5;
  spec.incidents_per_team = 20;
  const auto docs = make_documents(corpus::generate_synthetic(spec, 4));
  const auto idx = InvertedIndex::build(docs);
  Archive a;
  idx.save(a);
  const auto back = InvertedIndex::load(a);
  EXPECT_EQ(back.alpha(), idx.alpha());
  for (const auto& d : docs) {
    const auto x = idx.predict(d.tokens);
    const auto y = back.predict(d.tokens);
    EXPECT_EQ(x.scores, y.scores);
  }
  Archive bad;
  EXPECT_THROW(InvertedIndex::load(bad), ValidationError);
}

TEST(Shingles, UnigramsAndBigramsWithinSentences) {
  TokenStream ts;
  ts.sentences = {{"a", "b"}, {"c"}};
  EXPECT_EQ(shingles(ts), (std::vector<std::string>{"a", "a b", "b", "c"}));
}

TEST(Jaccard, SetArithmetic) {
  const std::vector<std::string> a{"a", "b", "c"}, b{"b", "c", "d"}, c{"x"};
  EXPECT_DOUBLE_EQ(jaccard(a, b), 0.5);
  EXPECT_DOUBLE_EQ(jaccard(a, c), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
  EXPECT_DOUBLE_EQ(jaccard({}, {}), 0.0);
}

TEST(MinHash, IdenticalSetsIdenticalSignatures) {
  const MinHasher h(128, 1);
  const std::vector<std::string> s{"a", "a b", "b"};
  EXPECT_EQ(h.sign(s), h.sign(s));
  EXPECT_DOUBLE_EQ(estimated_jaccard(h.sign(s), h.sign(s)), 1.0);
}

TEST(MinHash, EstimatesJaccardWithinMeanAbsoluteError) {
  const MinHasher h(128, 11);
  Rng rng(12);
  double err = 0.0;
  const int pairs = 10000;
  for (int p = 0; p < pairs; ++p) {
    std::set<std::string> a, b;
    const auto universe = 20 + rng.below(80);
    for (std::size_t i = 0; i < universe; ++i) {
      const auto w = word(i + 1000 * static_cast<std::size_t>(p));
      const double r = rng.uniform();
      if (r < 0.4) {
        a.insert(w);
        b.insert(w);
      } else if (r < 0.7) {
        a.insert(w);
      } else {
        b.insert(w);
      }
    }
    const std::vector<std::string> va(a.begin(), a.end()), vb(b.begin(), b.end());
    err += std::abs(estimated_jaccard(h.sign(va), h.sign(vb)) - jaccard(va, vb));
  }
  EXPECT_LE(err / pairs, 0.06);
}

TEST(Lsh, OptionsValidate) {
  LshOptions o;
  o.bands = 30;
  EXPECT_THROW(o.validate(), ConfigError);
  EXPECT_EQ(LshOptions{}.rows_per_band(), 4u);
}

TEST(Lsh, ExactMatchAndDisjoint) {
  std::vector<Document> docs{doc("1", "a", {"disk", "full", "on", "node"}),
                             doc("2", "b", {"cert", "expired", "for", "gateway"})};
  const auto idx = LshIndex::build(docs);
  const auto out = idx.predict(docs[0].tokens);
  ASSERT_EQ(out.top.size(), 1u);
  EXPECT_EQ(out.top[0].team, "a");
  EXPECT_DOUBLE_EQ(out.top[0].confidence, 1.0);
  EXPECT_TRUE(idx.predict(stream({"nothing", "shared", "here"})).empty());
  EXPECT_TRUE(idx.predict(TokenStream{}).empty());
}

TEST(Lsh, SkipsEmptyDocuments) {
  std::vector<Document> docs{doc("1", "a", {"x"}), {"2", "b", TokenStream{}}};
  EXPECT_EQ(LshIndex::build(docs).size(), 1u);
}

TEST(Lsh, HighSimilarityPairsAreCandidates) {
  // 1 - (1 - 0.8^4)^32 is within 1e-6 of 1.
  EXPECT_GT(1.0 - std::pow(1.0 - std::pow(0.8, 4), 32), 1.0 - 1e-6);
  Rng rng(21);
  int found = 0;
  for (int trial = 0; trial < 200; ++trial) {
    // Eight shared one-token sentences plus two private ones each: J = 8/12.
    std::vector<std::string> shared;
    for (int i = 0; i < 8; ++i) shared.push_back(word(rng.below(100000)));
    TokenStream a, b;
    for (const auto& w : shared) {
      a.sentences.push_back({w});
      b.sentences.push_back({w});
    }
    a.sentences.push_back({"only_a" + std::to_string(trial)});
    a.sentences.push_back({"also_a" + std::to_string(trial)});
    b.sentences.push_back({"only_b" + std::to_string(trial)});
    b.sentences.push_back({"also_b" + std::to_string(trial)});
    const auto sa = shingles(a), sb = shingles(b);
    ASSERT_NEAR(jaccard(sa, sb), 8.0 / 12.0, 1e-12);
    LshOptions o;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto idx = LshIndex::build(std::vector<Document>{{"a", "A", a}}, o);
    found += !idx.neighbors(b, 1).empty();
  }
  // J = 2/3: 1 - (1 - (2/3)^4)^32 ~ 0.9989.
  EXPECT_GE(found, 195);
}

TEST(Lsh, SingleTeamNeighborsGiveOneEntry) {
  std::vector<Document> docs;
  for (int i = 0; i < 5; ++i) docs.push_back(doc(std::to_string(i), "solo", {"a", "b", "c", word(i)}));
  const auto idx = LshIndex::build(docs);
  const auto out = idx.predict(stream({"a", "b", "c"}));
  ASSERT_EQ(out.top.size(), 1u);
  EXPECT_EQ(out.top[0].team, "solo");
}

TEST(Lsh, ConfidenceIsMaxSimilarityPerTeam) {
  corpus::GeneratorSpec spec;
  spec.num_teams = 6;
  spec.incidents_per_team = 40;
  const auto docs = make_documents(corpus::generate_synthetic(spec, 8));
  const auto idx = LshIndex::build(docs);
  for (std::size_t q = 0; q < docs.size(); q += 17) {
    const auto nb = idx.neighbors(docs[q].tokens, idx.options().neighbors);
    const auto out = idx.predict(docs[q].tokens);
    std::map<std::string, double> expect;
    for (const auto& n : nb) expect[n.team] = std::max(expect[n.team], n.similarity);
    EXPECT_EQ(out.scores, expect);
    for (std::size_t i = 1; i < nb.size(); ++i) {
      EXPECT_TRUE(nb[i - 1].similarity > nb[i].similarity ||
                  (nb[i - 1].similarity == nb[i].similarity && nb[i - 1].id < nb[i].id));
    }
  }
}

TEST(Lsh, ShardCountDoesNotChangeResults) {
  corpus::GeneratorSpec spec;
  spec.num_teams = 5;
  spec.incidents_per_team = 30;
  const auto docs = make_documents(corpus::generate_synthetic(spec, 9));
  LshOptions one;
  one.shards = 1;
  const auto a = LshIndex::build(docs, one);
  const auto b = LshIndex::build(docs);
  for (std::size_t q = 0; q < docs.size(); q += 7) EXPECT_EQ(a.neighbors(docs[q].tokens, 25), b.neighbors(docs[q].tokens, 25));
}

TEST(Lsh, ArchiveRoundTrip) {
  corpus::GeneratorSpec spec;
  spec.num_teams = 4;
  spec.incidents_per_team = 25;
  const auto docs = make_documents(corpus::generate_synthetic(spec, 10));
  const auto idx = LshIndex::build(docs);
  Archive a;
  idx.save(a);
  const auto back = LshIndex::load(a);
  ASSERT_EQ(back.size(), idx.size());
  for (std::size_t q = 0; q < docs.size(); q += 9) EXPECT_EQ(idx.neighbors(docs[q].tokens, 10), back.neighbors(docs[q].tokens, 10));
  Archive bad;
  bad.put_scalar("si.format", "1");
  bad.put("si.options", std::vector<std::uint64_t>{128, 30, 10, 25, 1});
  EXPECT_THROW(LshIndex::load(bad), ValidationError);
}

TEST(BruteForce, OrderAndTies) {
  std::vector<Document> docs{doc("b", "t", {"x", "y"}), doc("a", "t", {"x", "y"}), doc("c", "u", {"z"})};
  const auto nb = brute_force_neighbors(docs, stream({"x", "y"}), 3);
  ASSERT_EQ(nb.size(), 3u);
  EXPECT_EQ(nb[0].id, "a");
  EXPECT_EQ(nb[1].id, "b");
  EXPECT_DOUBLE_EQ(nb[0].similarity, 1.0);
  EXPECT_DOUBLE_EQ(nb[2].similarity, 0.0);
}
