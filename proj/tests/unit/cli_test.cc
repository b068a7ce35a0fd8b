// Copyright 2026 The fedorch Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <unistd.h>

#include "drivers.hpp"
#include "fedorch/cli.hpp"
#include "fedorch/kv_config.hpp"

namespace fedorch {
namespace {

namespace fs = std::filesystem;
using testing::sample;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
  std::vector<Json> lines() const {
    std::vector<Json> v;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) v.push_back(Json::parse(line));
    }
    return v;
  }
};

Result orch(std::vector<std::string> args) {
  args.insert(args.begin(), "orch");
  std::vector<const char *> argv;
  for (const auto &a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("orch-cli-" + std::to_string(::getpid()) + "-" +
                                         ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    ::setenv("ORCH_CONFIG", sample("orch.conf").c_str(), 1);
  }
  void TearDown() override {
    ::unsetenv("ORCH_CONFIG");
    fs::remove_all(dir_);
  }
  std::vector<std::string> session() const {
    return {"--world", sample("scenarios/world.scn"), "--state", (dir_ / "state.jsonl").string()};
  }
  fs::path dir_;
};

TEST_F(Cli, ValidateExitCodes) {
  EXPECT_EQ(orch({"validate", sample("elastic-cluster.tpl")}).code, kExitOk);
  auto bad = orch({"--machine", "validate", sample("cycle.tpl")});
  EXPECT_EQ(bad.code, kExitDomainError);
  auto j = bad.lines().at(0);
  EXPECT_EQ(j.at("ok"), false);
  EXPECT_EQ(j.at("violations").at(0).at("kind"), "Cycle");
}

TEST_F(Cli, RankMatchesOracle) {
  auto r = orch({"--machine", "rank", "--config", sample("orch.conf"), "--snapshot", sample("snapshot.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto snaps = parse_snapshot_file(testing::read_file(sample("snapshot.txt")));
  const auto cfg = RankerConfig::from(KvConfig::load(sample("orch.conf")));
  const auto expect = testing::oracle_rank(snaps, cfg, std::nullopt);
  auto lines = r.lines();
  ASSERT_EQ(lines.size(), expect.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    EXPECT_EQ(lines[i].at("kind"), "ranked");
    EXPECT_EQ(lines[i].at("position"), i + 1);
    EXPECT_EQ(lines[i].at("provider"), expect[i]);
  }

  auto bob = orch({"--machine", "rank", "--config", sample("orch.conf"), "--snapshot", sample("snapshot.txt"),
                   "--user", "bob"});
  ASSERT_EQ(bob.code, kExitOk);
  EXPECT_EQ(bob.lines().at(0).at("provider"), "site-c");
  EXPECT_EQ(bob.lines().at(0).at("preferred"), true);
}

TEST_F(Cli, UsageErrors) {
  auto r = orch({"--machine", "rank", "--bogus"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_EQ(r.lines().at(0).at("error"), "UsageError");
  EXPECT_NE(r.lines().at(0).at("message").get<std::string>().find("--bogus"), std::string::npos);
  EXPECT_EQ(orch({}).code, kExitUsage);
}

TEST_F(Cli, DeploymentSession) {
  auto args = session();
  auto show = orch([&] {
    std::vector<std::string> v = {"--machine", "depshow", "no-such-uuid"};
    v.insert(v.end(), args.begin(), args.end());
    return v;
  }());
  EXPECT_EQ(show.code, kExitDomainError);
  EXPECT_EQ(show.lines().at(0).at("kind"), "error");
  EXPECT_EQ(show.lines().at(0).at("error"), "NotFound");

  std::vector<std::string> create = {"--machine", "depcreate", sample("two-cpu-job.tpl"), "--user", "alice"};
  create.insert(create.end(), args.begin(), args.end());
  auto c = orch(create);
  ASSERT_EQ(c.code, kExitOk) << c.out << c.err;
  const Json rec = c.lines().at(0);
  EXPECT_EQ(rec.at("state"), "CREATE_COMPLETE");
  const std::string uuid = rec.at("uuid");

  // A fresh process replays the journal and sees the same record.
  std::vector<std::string> again = {"--machine", "depshow", uuid};
  again.insert(again.end(), args.begin(), args.end());
  auto s = orch(again);
  ASSERT_EQ(s.code, kExitOk);
  EXPECT_EQ(s.lines().at(0), rec);

  std::vector<std::string> del = {"--machine", "depdel", uuid, "--user", "bob"};
  del.insert(del.end(), args.begin(), args.end());
  EXPECT_EQ(orch(del).code, kExitDomainError);
  del[4] = "alice";
  auto d = orch(del);
  ASSERT_EQ(d.code, kExitOk) << d.out;
  EXPECT_EQ(d.lines().at(0).at("state"), "DELETED");

  std::vector<std::string> list = {"--machine", "deplist"};
  list.insert(list.end(), args.begin(), args.end());
  auto l = orch(list);
  ASSERT_EQ(l.code, kExitOk);
  ASSERT_EQ(l.lines().size(), 1u);
  EXPECT_EQ(l.lines()[0].at("uuid"), uuid);
}

TEST_F(Cli, SimRunAndVerify) {
  const std::string report = (dir_ / "r.jsonl").string();
  auto r = orch({"sim", "run", sample("scenarios/utilization.scn"), "--report", report});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(orch({"sim", "verify", report}).code, kExitOk);

  std::string text = testing::read_file(report);
  const auto pos = text.find("\"kind\":\"instance_end\"");
  ASSERT_NE(pos, std::string::npos);
  const auto line_start = text.rfind('\n', pos) + 1;
  text.replace(line_start, text.find(',', line_start) - line_start, "{\"t\":19");
  {
    std::ofstream f(report, std::ios::trunc);
    f << text;
  }
  EXPECT_EQ(orch({"sim", "verify", report}).code, kExitDomainError);
}

}  // namespace
}  // namespace fedorch
