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

#include "triage/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::corpus {

namespace {

constexpr std::array<const char*, 120> kBackgroundWords = {
    "service",   "error",      "failed",     "failure",    "timeout",   "request",   "requests",
    "latency",   "high",       "low",        "cluster",    "node",      "region",    "alert",
    "monitor",   "threshold",  "exceeded",   "detected",   "issue",     "problem",   "unable",
    "connect",   "connection", "restart",    "restarted",  "degraded",  "impact",    "impacted",
    "customer",  "customers",  "users",      "traffic",    "spike",     "drop",      "rate",
    "percent",   "observed",   "since",      "after",      "before",    "during",    "deployment",
    "rollout",   "change",     "config",     "update",     "version",   "health",    "check",
    "probe",     "returned",   "status",     "code",       "response",  "slow",      "stuck",
    "pending",   "queue",      "backlog",    "retry",      "retries",   "exception", "thrown",
    "stack",     "trace",      "log",        "logs",       "metric",    "metrics",   "dashboard",
    "investigate", "mitigate", "mitigated",  "escalate",   "engineer",  "team",      "owner",
    "ticket",    "case",       "report",     "reported",   "intermittent", "persistent", "recurring",
    "capacity",  "quota",      "limit",      "throttled",  "memory",    "cpu",       "disk",
    "usage",     "storage",    "network",    "packet",     "loss",      "dns",       "certificate",
    "expired",   "token",      "auth",       "login",      "access",    "denied",    "permission",
    "api",       "endpoint",   "gateway",    "proxy",      "database",  "query",     "replica",
    "backup",    "job",        "task",       "worker",     "host",      "machine",   "instance",
    "vm"};

constexpr const char* kConsonants = "bcdfghklmnprstvz";
constexpr const char* kVowels = "aeiou";

std::string pseudo_word(Rng& rng) {
  std::string w;
  const auto syllables = 2 + rng.below(2);
  for (std::uint64_t i = 0; i < syllables; ++i) {
    w += kConsonants[rng.below(16)];
    w += kVowels[rng.below(5)];
  }
  if (rng.bernoulli(0.4)) w += kConsonants[rng.below(16)];
  return w;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

std::string random_guid(Rng& rng) {
  static constexpr const char* hex = "0123456789abcdef";
  std::string g;
  for (int groups : {8, 4, 4, 4, 12}) {
    if (!g.empty()) g += '-';
    for (int i = 0; i < groups; ++i) g += hex[rng.below(16)];
  }
  return g;
}

struct Scenario {
  std::vector<std::string> words;  // topical subset
  std::vector<std::string> title;
  std::vector<std::string> summary;
};

struct Team {
  std::string id;
  std::vector<std::string> vocab;
  std::vector<Scenario> scenarios;
  std::vector<std::string> keywords;
  std::string home_service;
};

enum class Kind { kTemplate, kFreeLsi, kCri };

}  // namespace

std::string synthetic_team_id(std::size_t team) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "team-%02zu", team);
  return buf;
}

Corpus generate_synthetic(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.num_teams < 2) throw ConfigError("generator needs at least 2 teams");
  if (!spec.per_team_counts.empty() && spec.per_team_counts.size() != spec.num_teams) {
    throw ConfigError("per_team_counts must have one entry per team");
  }
  if (spec.scenarios_per_team < 1 || spec.team_vocab_size < 4) {
    throw ConfigError("generator needs >= 1 scenario and >= 4 topical words per team");
  }
  Rng rng(seed);

  std::vector<std::string> background;
  std::set<std::string> used;
  for (std::size_t i = 0; i < spec.background_vocab_size; ++i) {
    if (i < kBackgroundWords.size()) {
      background.emplace_back(kBackgroundWords[i]);
    } else {
      std::string w;
      do {
        w = pseudo_word(rng);
      } while (!used.insert(w).second);
      background.push_back("x" + w);
    }
    used.insert(background.back());
  }

  std::vector<Team> teams(spec.num_teams);
  for (std::size_t t = 0; t < spec.num_teams; ++t) {
    teams[t].id = synthetic_team_id(t);
    for (std::size_t i = 0; i < spec.team_vocab_size; ++i) {
      std::string w;
      do {
        w = pseudo_word(rng);
      } while (!used.insert(w).second);
      teams[t].vocab.push_back(w);
    }
    char svc[32];
    std::snprintf(svc, sizeof(svc), "svc-%02zu", t % std::max<std::size_t>(1, spec.num_services));
    teams[t].home_service = svc;
    for (int k = 0; k < 3; ++k) teams[t].keywords.push_back("kw-" + teams[t].id + "-" + std::to_string(k));
  }
  // Near-disjoint vocabularies: borrow a few words from other teams.
  for (std::size_t t = 0; t < spec.num_teams; ++t) {
    const auto borrow = static_cast<std::size_t>(std::llround(spec.vocab_overlap * spec.team_vocab_size));
    for (std::size_t i = 0; i < borrow; ++i) {
      const auto other = (t + 1 + rng.below(spec.num_teams - 1)) % spec.num_teams;
      teams[t].vocab[spec.team_vocab_size - 1 - i] = pick(teams[other].vocab, rng);
    }
  }
  for (auto& team : teams) {
    for (std::size_t s = 0; s < spec.scenarios_per_team; ++s) {
      Scenario sc;
      auto shuffled = team.vocab;
      rng.shuffle(std::span(shuffled));
      sc.words.assign(shuffled.begin(), shuffled.begin() + std::min<std::ptrdiff_t>(12, shuffled.size()));
      for (int i = 0; i < 4; ++i) sc.title.push_back(pick(sc.words, rng));
      sc.title.push_back(pick(background, rng));
      for (int i = 0; i < 16; ++i) {
        sc.summary.push_back(rng.bernoulli(0.7) ? pick(sc.words, rng) : pick(background, rng));
      }
      team.scenarios.push_back(std::move(sc));
    }
  }

  const auto cold_teams =
      static_cast<std::size_t>(std::llround(spec.cold_start_team_fraction * spec.num_teams));
  const double span_s = spec.span_days * 86400.0;

  struct Draft {
    Incident inc;
    std::size_t team;
    std::size_t seq;
  };
  std::vector<Draft> drafts;

  auto mutate = [&](const std::vector<std::string>& proto, double rate, const Team& team) {
    std::vector<std::string> out;
    out.reserve(proto.size());
    for (const auto& w : proto) {
      if (rng.bernoulli(rate)) {
        out.push_back(rng.bernoulli(0.5) ? pick(team.vocab, rng) : pick(background, rng));
      } else {
        out.push_back(w);
      }
    }
    return out;
  };

  for (std::size_t t = 0; t < spec.num_teams; ++t) {
    const Team& team = teams[t];
    const bool cold = t >= spec.num_teams - cold_teams;
    const std::size_t count = cold ? spec.cold_start_incidents
                                   : (spec.per_team_counts.empty() ? spec.incidents_per_team
                                                                   : spec.per_team_counts[t]);
    std::vector<Kind> kinds(count, Kind::kFreeLsi);
    std::size_t lsi = 0;
    for (auto& k : kinds) {
      if (rng.bernoulli(spec.cri_fraction)) {
        k = Kind::kCri;
      } else {
        ++lsi;
      }
    }
    const auto templates = static_cast<std::size_t>(std::ceil(spec.template_fraction * lsi));
    std::vector<std::size_t> lsi_slots;
    for (std::size_t i = 0; i < count; ++i) {
      if (kinds[i] != Kind::kCri) lsi_slots.push_back(i);
    }
    rng.shuffle(std::span(lsi_slots));
    std::vector<std::size_t> template_group(count, 0);
    for (std::size_t j = 0; j < templates && j < lsi_slots.size(); ++j) {
      kinds[lsi_slots[j]] = Kind::kTemplate;
      // Pair templates up so each used scenario title occurs at least twice.
      const std::size_t group = templates >= 2 ? std::min(j / 2, templates / 2 - 1) : 0;
      template_group[lsi_slots[j]] = group % spec.scenarios_per_team;
    }

    for (std::size_t i = 0; i < count; ++i) {
      Incident inc;
      const Kind kind = kinds[i];
      const Scenario& sc = kind == Kind::kTemplate ? team.scenarios[template_group[i]]
                                                   : pick(team.scenarios, rng);
      const auto node = std::to_string(1 + rng.below(9999));
      std::vector<std::string> sentences;
      switch (kind) {
        case Kind::kTemplate:
          inc.title = join(sc.title) + " on node " + node;
          sentences.push_back("<p>" + join(mutate(sc.summary, rng.uniform(0.0, 0.1), team)) + "</p>");
          sentences.push_back("correlation id " + random_guid(rng));
          break;
        case Kind::kFreeLsi: {
          std::vector<std::string> title;
          const auto n = 3 + rng.below(3);
          for (std::uint64_t k = 0; k < n; ++k) title.push_back(pick(sc.words, rng));
          title.push_back(pick(background, rng));
          inc.title = join(title);
          sentences.push_back(join(mutate(sc.summary, rng.uniform(0.1, 0.5), team)));
          if (rng.bernoulli(0.3)) sentences.push_back("observed on host " + node);
          break;
        }
        case Kind::kCri: {
          std::vector<std::string> title{"customer", "reports"};
          const auto n = 2 + rng.below(2);
          for (std::uint64_t k = 0; k < n; ++k) title.push_back(pick(sc.words, rng));
          title.push_back(pick(background, rng));
          inc.title = join(title);
          std::vector<std::string> head(sc.summary.begin(), sc.summary.begin() + 10);
          sentences.push_back("customer says " + join(mutate(head, rng.uniform(0.3, 0.6), team)));
          sentences.push_back("see https://portal.example.com/case/" + node);
          break;
        }
      }
      if (rng.bernoulli(0.6)) sentences.insert(sentences.begin(), "Incident created");
      if (rng.bernoulli(0.3)) sentences.push_back("resource is unhealthy");
      if (rng.bernoulli(0.3)) sentences.push_back("please investigate");
      for (const auto& s : sentences) {
        if (!inc.summary.empty()) inc.summary += ". ";
        inc.summary += s;
      }

      const auto entries = rng.below(6);
      for (std::uint64_t e = 0; e < entries; ++e) {
        std::vector<std::string> words;
        const auto n = 5 + rng.below(4);
        if (e < 3) {
          for (std::uint64_t k = 0; k < n; ++k) {
            words.push_back(rng.bernoulli(0.6) ? pick(sc.words, rng) : pick(background, rng));
          }
        } else {
          // Later entries drift into root-cause chatter about other services.
          const auto& other = teams[(t + 1 + rng.below(spec.num_teams - 1)) % spec.num_teams];
          for (std::uint64_t k = 0; k < n; ++k) {
            words.push_back(rng.bernoulli(0.7) ? pick(other.vocab, rng) : pick(background, rng));
          }
        }
        inc.discussion.push_back(join(words));
      }

      inc.incident_type = kind == Kind::kCri ? IncidentType::kCri : IncidentType::kLsi;
      if (rng.bernoulli(spec.high_severity_fraction)) {
        static constexpr double w[] = {0.1, 0.3, 0.6};
        inc.severity = static_cast<int>(rng.categorical(w));
      } else {
        inc.severity = 3 + static_cast<int>(rng.below(2));
      }
      inc.source_name = kind == Kind::kCri ? "customer-portal"
                                           : "monitor-" + team.id + "-" + std::to_string(rng.below(3));
      if (rng.bernoulli(0.8)) {
        inc.originating_service_id = team.home_service;
      } else {
        char svc[32];
        std::snprintf(svc, sizeof(svc), "svc-%02llu",
                      static_cast<unsigned long long>(rng.below(std::max<std::size_t>(1, spec.num_services))));
        inc.originating_service_id = svc;
      }
      inc.occurring_device_name = rng.bernoulli(0.6) ? "dev-" + team.id + "-" + std::to_string(rng.below(4))
                                                     : "dev-shared-" + std::to_string(rng.below(8));
      inc.raising_dc = "dc-" + std::to_string(rng.below(std::max<std::size_t>(1, spec.num_datacenters)));
      const auto kw = rng.below(3);
      for (std::uint64_t k = 0; k < kw; ++k) inc.keywords.push_back(pick(team.keywords, rng));

      const double u = rng.uniform();
      std::size_t hops = 0;
      if (u < spec.multi_hop_fraction) {
        hops = rng.bernoulli(0.7) ? 2 : 3;
      } else if (u < spec.multi_hop_fraction + spec.single_hop_fraction) {
        hops = 1;
      }
      for (std::size_t h = 0; h < hops; ++h) {
        inc.routing_path.push_back(teams[(t + 1 + rng.below(spec.num_teams - 1)) % spec.num_teams].id);
      }
      inc.routing_path.push_back(team.id);
      inc.owning_team = team.id;
      inc.mitigating_oce = "oce-" + team.id + "-" + std::to_string(rng.below(5));
      inc.status = IncidentStatus::kResolved;
      if (cold) {
        const double window = spec.cold_start_window_days * 86400.0;
        inc.created_at = spec.start_time + static_cast<std::int64_t>(span_s - window + rng.uniform() * window);
      } else {
        inc.created_at = spec.start_time + static_cast<std::int64_t>(rng.uniform() * span_s);
      }
      drafts.push_back({std::move(inc), t, i});
    }
  }

  std::sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    if (a.inc.created_at != b.inc.created_at) return a.inc.created_at < b.inc.created_at;
    if (a.team != b.team) return a.team < b.team;
    return a.seq < b.seq;
  });
  std::vector<Incident> incidents;
  incidents.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "INC-%06zu", i + 1);
    drafts[i].inc.id = id;
    incidents.push_back(std::move(drafts[i].inc));
  }
  return Corpus(std::move(incidents));
}

}  // namespace triage::corpus
