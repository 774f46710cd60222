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
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "triage/cli/cli.hpp"
#include "triage/common/error.hpp"
#include "triage/common/files.hpp"

#include <arpa/inet.h>
#include <httplib.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace triage;
using namespace triage::cli;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("triage_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    Result r;
    r.code = run(args, out, err, [this](const char* name) -> const char* {
      const auto it = env_.find(name);
      return it == env_.end() ? nullptr : it->second.c_str();
    });
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void generate_small(const std::string& name = "c.jsonl") {
    ASSERT_EQ(cli({"generate", "--teams", "6", "--per-team", "60", "--span-days", "20", "--seed", "7", "--out",
                   path(name)})
                  .code,
              kExitOk);
  }
  void train_small(const std::string& store = "art") {
    const auto r = cli({"train", "--corpus", path("c.jsonl"), "--out", path(store), "--fast", "--log-level", "warn"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
  }

  fs::path dir_;
  std::map<std::string, std::string> env_;
};

int free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof addr;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), len);
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

json only_json_line(const std::string& text) {
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1) << text;
  return json::parse(text);
}

}  // namespace

TEST_F(CliTest, GenerateIsReproducible) {
  generate_small("a.jsonl");
  generate_small("b.jsonl");
  EXPECT_EQ(read_file(path("a.jsonl")), read_file(path("b.jsonl")));
  const auto r = cli({"generate", "--teams", "3", "--per-team", "15", "--seed", "8", "--out", path("c.jsonl")});
  const auto summary = only_json_line(r.out);
  EXPECT_EQ(summary["incidents"], 45);
  EXPECT_EQ(summary["teams"], 3);
  EXPECT_NE(read_file(path("a.jsonl")), read_file(path("c.jsonl")));
}

TEST_F(CliTest, UsageErrorsExitTwo) {
  auto r = cli({"generate", "--teams", "3", "--out", path("x.jsonl"), "--bogus"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
  EXPECT_FALSE(fs::exists(path("x.jsonl")));
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"train"}).code, kExitUsage);
  EXPECT_EQ(cli({"generate", "--teams", "many", "--out", path("x.jsonl")}).code, kExitUsage);
  EXPECT_EQ(cli({"ablate", "--corpus", path("c.jsonl"), "--log-level", "loud"}).code, kExitUsage);

  r = cli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("retrain"), std::string::npos);
  r = cli({"serve", "--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("--fault-injection"), std::string::npos);
}

TEST_F(CliTest, PipelineErrorsExitOneWithJsonLine) {
  auto r = cli({"train", "--corpus", path("missing.jsonl"), "--out", path("art")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(only_json_line(r.err)["error"]["code"], "not_found");

  std::ofstream(path("bad.json")) << R"({"seeed": 1})";
  generate_small();
  r = cli({"train", "--corpus", path("c.jsonl"), "--out", path("art"), "--config", path("bad.json")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_EQ(only_json_line(r.err)["error"]["code"], "config");

  r = cli({"eval", "--corpus", path("c.jsonl"), "--artifact", path("nothing-here")});
  EXPECT_EQ(r.code, kExitFailure);
  EXPECT_TRUE(only_json_line(r.err).contains("error"));
}

TEST_F(CliTest, TrainEvalAblateRetrain) {
  generate_small();
  train_small();
  const auto store = dir_ / "art";
  EXPECT_EQ(read_file(store / "CURRENT").substr(0, 5), "v0001");
  EXPECT_TRUE(fs::exists(store / "versions" / "v0001" / "manifest.json"));

  auto r = cli({"eval", "--artifact", store.string(), "--corpus", path("c.jsonl"), "--out-dir", path("rep")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto report = json::parse(read_file(dir_ / "rep" / "eval_report.json"));
  std::set<std::string> names;
  for (const auto& s : report["slices"]) names.insert(s["name"]);
  for (const auto* name : {"All", "Sev0-2", "Min2Hop", "CRI", "Sev0-2@CoreServices", "CRI(Sev0-2)@CoreServices"}) {
    EXPECT_TRUE(names.count(name)) << name;
  }
  EXPECT_EQ(read_file(dir_ / "rep" / "eval_report.txt"), r.out);

  r = cli({"ablate", "--artifact", store.string(), "--corpus", path("c.jsonl"), "--out-dir", path("rep"),
           "--families", "mart,mart+cri,mart+cri+idx,mart+cri+idx+si,all", "--slices", "All"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ablation = json::parse(read_file(dir_ / "rep" / "ablation.json"))["ablation"];
  ASSERT_EQ(ablation.size(), 5u);
  const std::vector<std::string> order{"mart", "mart+cri", "mart+cri+idx", "mart+cri+idx+si", "all"};
  for (std::size_t i = 0; i < order.size(); ++i) {
    EXPECT_EQ(ablation[i]["families"], order[i]);
    ASSERT_EQ(ablation[i]["slices"].size(), 1u);
    EXPECT_EQ(ablation[i]["slices"][0]["name"], "All");
  }
  EXPECT_EQ(cli({"ablate", "--artifact", store.string(), "--corpus", path("c.jsonl"), "--families", "mart+xyz"}).code,
            kExitFailure);
  EXPECT_EQ(cli({"eval", "--artifact", store.string(), "--corpus", path("c.jsonl"), "--out-dir", path("rep"),
                 "--slices", "Nope"})
                .code,
            kExitFailure);

  r = cli({"retrain", "--corpus", path("c.jsonl"), "--artifact", store.string(), "--log-level", "warn"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto result = only_json_line(r.out);
  EXPECT_EQ(result["version"], "v0002");
  EXPECT_EQ(result["promoted"], true);
  EXPECT_EQ(result["current_recall_at_5"], result["recall_at_5"]);
}

TEST_F(CliTest, TrainIsReproducible) {
  generate_small();
  train_small("a");
  train_small("b");
  const auto a = dir_ / "a" / "versions" / "v0001";
  const auto b = dir_ / "b" / "versions" / "v0001";
  std::size_t files = 0;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = fs::relative(entry.path(), a);
    EXPECT_EQ(read_file(entry.path()), read_file(b / rel)) << rel;
    ++files;
  }
  EXPECT_GT(files, 5u);
}

TEST_F(CliTest, ArtifactDirFromEnvironment) {
  generate_small();
  env_["ARTIFACT_DIR"] = path("from-env");
  ASSERT_EQ(cli({"train", "--corpus", path("c.jsonl"), "--fast", "--log-level", "warn"}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir_ / "from-env" / "CURRENT"));
  EXPECT_EQ(resolve_artifact_dir(fs::path("flag"), [](const char*) { return "env"; }), fs::path("flag"));
  EXPECT_EQ(resolve_artifact_dir(std::nullopt, [](const char*) { return "env"; }), fs::path("env"));
  EXPECT_EQ(resolve_artifact_dir(std::nullopt, [](const char*) { return nullptr; }), fs::path(kDefaultArtifactDir));
}

TEST(ServeSettings, Precedence) {
  const auto no_env = [](const char*) -> const char* { return nullptr; };
  const auto env = [](const char* name) -> const char* {
    if (std::string(name) == "SERVE_PORT") return "9001";
    if (std::string(name) == "ARTIFACT_DIR") return "/env/art";
    return nullptr;
  };
  auto s = resolve_serve_settings({}, json::object(), no_env);
  EXPECT_EQ(s.port, kDefaultPort);
  EXPECT_EQ(s.artifact, fs::path(kDefaultArtifactDir));
  EXPECT_FALSE(s.fault_injection);

  s = resolve_serve_settings({}, json::object(), env);
  EXPECT_EQ(s.port, 9001);
  EXPECT_EQ(s.artifact, fs::path("/env/art"));

  const auto file = json::parse(R"({"port": 9002, "deadline_ms": 250, "fault_injection": true})");
  s = resolve_serve_settings({}, file, env);
  EXPECT_EQ(s.port, 9002);
  EXPECT_EQ(s.artifact, fs::path("/env/art"));
  EXPECT_EQ(s.deadline_ms, 250);
  EXPECT_TRUE(s.fault_injection);

  ServeFlags flags;
  flags.port = 9003;
  flags.artifact = "/flag/art";
  s = resolve_serve_settings(flags, file, env);
  EXPECT_EQ(s.port, 9003);
  EXPECT_EQ(s.artifact, fs::path("/flag/art"));
  EXPECT_EQ(s.deadline_ms, 250);

  EXPECT_THROW(resolve_serve_settings({}, json::parse(R"({"prot": 1})"), no_env), ConfigError);
  EXPECT_THROW(resolve_serve_settings({}, json::parse(R"({"port": "x"})"), no_env), ConfigError);
  EXPECT_THROW(resolve_serve_settings({}, json::object(), [](const char*) { return "80a"; }), ConfigError);
  flags.port = 70000;
  EXPECT_THROW(resolve_serve_settings(flags, json::object(), no_env), ConfigError);
}

TEST_F(CliTest, ServeAnswersUntilInterrupted) {
  generate_small();
  train_small();
  const int port = free_port();
  std::ofstream(path("serve.json")) << json{{"serve", {{"artifact", path("art")}, {"log_dir", path("logs")}}}}.dump();
  Result served;
  std::thread server([&] {
    served = cli({"serve", "--port", std::to_string(port), "--config", path("serve.json"), "--fault-injection",
                  "--log-level", "warn"});
  });
  httplib::Client client("127.0.0.1", port);
  httplib::Result health;
  for (int attempt = 0; attempt < 100 && !health; ++attempt) {
    health = client.Get("/health");
    if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_TRUE(health);
  EXPECT_EQ(json::parse(health->body)["manifest_version"], "v0001");
  const auto failed = client.Post("/admin/models/idx/fail", "{}", "application/json");
  ASSERT_TRUE(failed) << httplib::to_string(failed.error());
  EXPECT_EQ(failed->status, 200) << failed->body;
  std::raise(SIGINT);
  server.join();
  EXPECT_EQ(served.code, kExitOk) << served.err;
  EXPECT_EQ(only_json_line(served.out)["listening"], "127.0.0.1:" + std::to_string(port));
}
