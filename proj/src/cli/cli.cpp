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

#include "triage/cli/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "triage/common/error.hpp"
#include "triage/common/files.hpp"
#include "triage/corpus/corpus.hpp"
#include "triage/corpus/synthetic.hpp"
#include "triage/eval/evaluate.hpp"
#include "triage/service/http.hpp"
#include "triage/service/pipeline.hpp"
#include "triage/service/service.hpp"

namespace triage::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct CliFile {
  json pipeline = json::object();
  json serve = json::object();
};

CliFile read_cli_file(const std::optional<fs::path>& path) {
  CliFile file;
  if (!path) return file;
  json j;
  try {
    j = read_json(*path);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path->string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config " + path->string() + " must be a JSON object");
  if (j.contains("serve")) {
    file.serve = j.at("serve");
    j.erase("serve");
  }
  file.pipeline = std::move(j);
  return file;
}

/// Defaults (or `base`) < config file < --seed.
service::PipelineConfig pipeline_config(const CliFile& file, service::PipelineConfig base,
                                        const std::optional<std::uint64_t>& seed) {
  auto config = service::PipelineConfig::from_json(file.pipeline, std::move(base));
  if (seed) config.seed = *seed;
  config.validate();
  return config;
}

corpus::Corpus read_corpus(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw NotFoundError("corpus file " + path.string() + " not found");
  auto loaded = corpus::load_corpus(path);
  if (!loaded.rejects.empty()) {
    spdlog::warn("{} invalid records skipped in {}", loaded.rejects.size(), path.string());
  }
  if (loaded.corpus.empty()) throw ValidationError("corpus " + path.string() + " has no valid incidents");
  return std::move(loaded.corpus);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

corpus::Corpus evaluation_window(const corpus::Corpus& corpus, const service::TriageSystem& system,
                                 bool whole_corpus) {
  if (whole_corpus) return corpus;
  auto split = corpus::split_train_test(corpus, corpus::trailing_cutoff(corpus, system.config().test_days));
  if (split.test.empty()) throw ValidationError("trailing evaluation window is empty");
  return std::move(split.test);
}

void keep_slices(std::vector<eval::SliceReport>& slices, const std::vector<std::string>& names) {
  if (names.empty()) return;
  for (const auto& name : names) {
    const bool known = std::any_of(slices.begin(), slices.end(), [&](const auto& s) { return s.name == name; });
    if (!known) throw ValidationError("unknown slice '" + name + "'");
  }
  std::erase_if(slices, [&](const auto& s) { return std::find(names.begin(), names.end(), s.name) == names.end(); });
}

void write_report(const eval::EvalReport& report, const fs::path& dir, const std::string& stem, std::ostream& out) {
  fs::create_directories(dir);
  write_file_atomic(dir / (stem + ".json"), report.to_json().dump(2) + "\n");
  write_file_atomic(dir / (stem + ".txt"), report.to_table());
  out << report.to_table();
}

std::string env_or(const EnvLookup& env, const char* name) {
  const char* value = env ? env(name) : nullptr;
  return value ? value : "";
}

service::HttpServer* active_server = nullptr;

void stop_active_server(int) {
  if (active_server) active_server->stop();
}

}  // namespace

fs::path resolve_artifact_dir(const std::optional<fs::path>& flag, const EnvLookup& env) {
  if (flag) return *flag;
  const auto from_env = env_or(env, "ARTIFACT_DIR");
  return from_env.empty() ? fs::path(kDefaultArtifactDir) : fs::path(from_env);
}

ServeSettings resolve_serve_settings(const ServeFlags& flags, const json& file_section, const EnvLookup& env) {
  ServeSettings s;
  if (const auto port = env_or(env, "SERVE_PORT"); !port.empty()) {
    try {
      std::size_t used = 0;
      s.port = std::stoi(port, &used);
      if (used != port.size()) throw std::invalid_argument(port);
    } catch (const std::exception&) {
      throw ConfigError("SERVE_PORT must be an integer, got '" + port + "'");
    }
  }
  if (const auto dir = env_or(env, "ARTIFACT_DIR"); !dir.empty()) s.artifact = dir;

  if (!file_section.is_null()) {
    if (!file_section.is_object()) throw ConfigError("config section 'serve' must be an object");
    try {
      for (const auto& [key, value] : file_section.items()) {
        if (key == "host") {
          s.host = value.get<std::string>();
        } else if (key == "port") {
          s.port = value.get<int>();
        } else if (key == "artifact") {
          s.artifact = value.get<std::string>();
        } else if (key == "corpus") {
          s.corpus = value.get<std::string>();
        } else if (key == "log_dir") {
          s.log_dir = value.get<std::string>();
        } else if (key == "rules_dir") {
          s.rules_dir = value.get<std::string>();
        } else if (key == "deadline_ms") {
          s.deadline_ms = value.get<int>();
        } else if (key == "fault_injection") {
          s.fault_injection = value.get<bool>();
        } else {
          throw ConfigError("unknown config key 'serve." + key + "'");
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("mistyped value in config section 'serve': ") + e.what());
    }
  }

  if (flags.host) s.host = *flags.host;
  if (flags.port) s.port = *flags.port;
  if (flags.artifact) s.artifact = *flags.artifact;
  if (flags.corpus) s.corpus = *flags.corpus;
  if (flags.log_dir) s.log_dir = *flags.log_dir;
  if (flags.rules_dir) s.rules_dir = *flags.rules_dir;
  if (flags.deadline_ms) s.deadline_ms = *flags.deadline_ms;
  s.fault_injection = s.fault_injection || flags.fault_injection;
  if (s.port < 0 || s.port > 65535) throw ConfigError("port must lie in 0..65535");
  if (s.deadline_ms <= 0) throw ConfigError("deadline_ms must be positive");
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Incident triage: synthetic corpora, training, evaluation and serving.", "triage"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  // generate
  corpus::GeneratorSpec spec;
  std::uint64_t gen_seed = 0;
  fs::path gen_out;
  auto* generate = app.add_subcommand("generate", "Write a synthetic incident corpus");
  generate->add_option("--teams", spec.num_teams, "Number of teams")->capture_default_str();
  generate->add_option("--per-team", spec.incidents_per_team, "Incidents per team")->capture_default_str();
  generate->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  generate->add_option("--out", gen_out, "Output JSONL file")->required();
  generate->add_option("--span-days", spec.span_days, "Days covered by the corpus")->capture_default_str();
  generate->add_option("--cri-fraction", spec.cri_fraction, "Fraction of customer-reported incidents")
      ->capture_default_str();
  generate->add_option("--cold-start-fraction", spec.cold_start_team_fraction,
                       "Fraction of teams that only appear at the end")
      ->capture_default_str();
  generate->add_option("--cold-start-incidents", spec.cold_start_incidents, "Incidents per cold-start team")
      ->capture_default_str();

  // shared flags
  std::optional<fs::path> corpus_path;
  std::optional<fs::path> artifact;
  std::optional<fs::path> config_path;
  std::optional<std::uint64_t> seed;
  bool fast = false;
  fs::path report_dir = ".";
  std::string slices;
  bool whole_corpus = false;

  auto* train = app.add_subcommand("train", "Train every model family and write a promoted artifact");
  train->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  train->add_option("--out", artifact, "Artifact store directory (default $ARTIFACT_DIR or ./artifacts)");
  train->add_option("--config", config_path, "Pipeline config (JSON)");
  train->add_option("--seed", seed, "Random seed (default 0)");
  train->add_flag("--fast", fast, "Start from the small smoke-test preset");

  auto* evaluate = app.add_subcommand("eval", "Evaluate an artifact on the trailing window of a corpus");
  auto* ablate = app.add_subcommand("ablate", "Evaluate family subsets on the trailing window of a corpus");
  std::string families;
  for (auto* sub : {evaluate, ablate}) {
    sub->add_option("--artifact", artifact, "Artifact store or version directory");
    sub->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required();
    sub->add_option("--out-dir", report_dir, "Directory for the report files")->capture_default_str();
    sub->add_option("--slices", slices, "Comma-separated slice names to report (default all)");
    sub->add_flag("--whole-corpus", whole_corpus, "Evaluate every incident instead of the trailing window");
  }
  ablate->add_option("--families", families,
                     "Comma-separated family subsets such as mart,mart+cri,all (default: iteration order)");

  ServeFlags serve_flags;
  auto* serve = app.add_subcommand("serve", "Serve the current artifact over HTTP");
  serve->add_option("--host", serve_flags.host, "Bind address (default 127.0.0.1)");
  serve->add_option("--port", serve_flags.port, "Port (default $SERVE_PORT or 8080)");
  serve->add_option("--artifact", serve_flags.artifact, "Artifact store (default $ARTIFACT_DIR or ./artifacts)");
  serve->add_option("--corpus", serve_flags.corpus, "Incident store (default: the artifact's training corpus)");
  serve->add_option("--log-dir", serve_flags.log_dir, "Directory for feedback and routing logs");
  serve->add_option("--rules-dir", serve_flags.rules_dir, "Directory of per-team routing rules");
  serve->add_option("--deadline-ms", serve_flags.deadline_ms, "Per-model deadline");
  serve->add_flag("--fault-injection", serve_flags.fault_injection, "Enable POST /admin/models/{id}/fail");
  serve->add_option("--config", config_path, "Config file with a 'serve' section");

  std::optional<double> tolerance;
  auto* retrain = app.add_subcommand("retrain", "Retrain and promote only when the recall gate passes");
  retrain->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  retrain->add_option("--artifact", artifact, "Artifact store (default $ARTIFACT_DIR or ./artifacts)");
  retrain->add_option("--config", config_path, "Pipeline config (JSON)");
  retrain->add_option("--seed", seed, "Random seed");
  retrain->add_option("--tolerance", tolerance, "Allowed recall@5 drop");
  retrain->add_flag("--fast", fast, "Start from the small smoke-test preset");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    const auto file = read_cli_file(config_path);
    if (generate->parsed()) {
      const auto corpus = corpus::generate_synthetic(spec, gen_seed);
      if (gen_out.has_parent_path()) fs::create_directories(gen_out.parent_path());
      corpus::save_corpus(corpus, gen_out);
      out << ordered_json{{"out", gen_out.string()}, {"incidents", corpus.size()}, {"teams", corpus.teams().size()}}
                 .dump()
          << "\n";
    } else if (train->parsed() || retrain->parsed()) {
      const bool forced = train->parsed();
      service::ArtifactStore store(resolve_artifact_dir(artifact, env));
      service::PipelineConfig base = fast ? service::PipelineConfig::fast() : service::PipelineConfig{};
      if (!forced && !fast && store.current()) base = store.load_current().config();
      auto config = pipeline_config(file, std::move(base), seed);
      if (tolerance) config.gate_tolerance = *tolerance;
      const auto corpus = read_corpus(*corpus_path);
      const auto result = service::retrain(store, corpus, config, forced);
      auto j = result.to_json();
      j["artifact"] = store.version_dir(result.version).string();
      out << j.dump() << "\n";
    } else if (evaluate->parsed() || ablate->parsed()) {
      const auto system = service::load_artifact(resolve_artifact_dir(artifact, env));
      const auto test = evaluation_window(read_corpus(*corpus_path), system, whole_corpus);
      const auto wanted = split_list(slices);
      if (evaluate->parsed()) {
        auto report = service::evaluate_system(system, test);
        keep_slices(report.slices, wanted);
        write_report(report, report_dir, "eval_report", out);
      } else {
        std::vector<std::vector<std::string>> subsets;
        for (const auto& item : split_list(families)) subsets.push_back(eval::parse_family_subset(item));
        if (subsets.empty()) subsets = eval::iteration_subsets();
        const auto slice_defs = service::system_slices(system);
        eval::EvalOptions options;
        options.other_members = system.other_members();
        eval::EvalReport report;
        report.incidents = test.size();
        report.ablation = eval::ablation(system.family_predictor(), test, slice_defs, subsets, options);
        for (auto& row : report.ablation) keep_slices(row.slices, wanted);
        write_report(report, report_dir, "ablation", out);
      }
    } else if (serve->parsed()) {
      const auto settings = resolve_serve_settings(serve_flags, file.serve, env);
      service::ServiceConfig config;
      config.artifact_root = settings.artifact;
      config.log_dir = settings.log_dir;
      config.rules_dir = settings.rules_dir;
      config.deadline_ms = settings.deadline_ms;
      std::optional<corpus::Corpus> store;
      if (!settings.corpus.empty()) store = read_corpus(settings.corpus);
      service::TriageService triage_service(config, std::move(store));
      service::HttpServer server(triage_service, {.fault_injection = settings.fault_injection});
      const int port = server.bind(settings.host, settings.port);
      active_server = &server;
      std::signal(SIGINT, stop_active_server);
      std::signal(SIGTERM, stop_active_server);
      out << ordered_json{{"listening", settings.host + ":" + std::to_string(port)},
                          {"artifact", settings.artifact.string()},
                          {"version", triage_service.health().manifest_version}}
                 .dump()
          << std::endl;
      server.serve();
      active_server = nullptr;
    }
  } catch (const Error& e) {
    err << ordered_json{{"error", {{"code", to_string(e.kind())}, {"message", e.what()}}}}.dump() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << ordered_json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

int run(int argc, const char* const* argv) {
  spdlog::set_default_logger(spdlog::stderr_logger_mt("triage"));
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr, [](const char* name) { return std::getenv(name); });
}

}  // namespace triage::cli
