// Copyright 2026 The rankone Authors
//
// Licensed under the Apache License, Version 2.0 (see
// LICENSE or https://www.apache.org/licenses/LICENSE-2.0).
// This file may not be copied, modified, or distributed
// except according to those terms.

// Drives the built binary (path in RANKONE_CLI) end to end.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "rankone/json_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const char* bin = std::getenv("RANKONE_CLI");
    if (bin == nullptr) GTEST_SKIP() << "RANKONE_CLI not set";
    bin_ = bin;
    dir_ = fs::temp_directory_path() / ("rankone-cli-" + std::to_string(::getpid()) + "-" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    if (!dir_.empty()) fs::remove_all(dir_);
  }

  Outcome run(const std::string& args) {
    std::string cmd = "cd '" + dir_.string() + "' && '" + bin_ + "' " + args + " > out.txt 2> err.txt";
    int status = std::system(cmd.c_str());
    Outcome r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir_ / "out.txt");
    r.err = slurp(dir_ / "err.txt");
    return r;
  }

  rk::Json load(const std::string& name) { return rk::Json::parse(slurp(dir_ / name)); }

  std::string bin_;
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("site").code, 2);  // --D is required
}

TEST_F(Cli, SiteWritesFileAndNormalises) {
  Outcome r = run("site --D 12 --out s.json");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("normalised"), std::string::npos);
  rk::Json s = load("s.json");
  EXPECT_EQ(s["D"], "3");
  EXPECT_NE(r.out.find("site hash"), std::string::npos);
  EXPECT_EQ(run("site --D 1").code, 2);
  EXPECT_EQ(run("site --D 0").code, 2);
  EXPECT_EQ(run("site --D 4").code, 2);
}

TEST_F(Cli, SearchCheckpointResumes) {
  ASSERT_EQ(run("site --D -1 --out s.json").code, 0);
  Outcome first = run("search --site s.json --count 2 --checkpoint cp.json");
  ASSERT_EQ(first.code, 0) << first.err;
  EXPECT_EQ(load("cp.json")["pairs"].size(), 2U);
  Outcome second = run("search --site s.json --count 4 --checkpoint cp.json");
  ASSERT_EQ(second.code, 0) << second.err;
  EXPECT_NE(second.err.find("resuming"), std::string::npos);
  rk::Json cp = load("cp.json");
  ASSERT_EQ(cp["pairs"].size(), 4U);
  Outcome fresh = run("search --site s.json --count 4 --checkpoint fresh.json");
  ASSERT_EQ(fresh.code, 0);
  EXPECT_EQ(load("fresh.json")["pairs"], cp["pairs"]);
}

TEST_F(Cli, SearchExhaustionExitCode) {
  ASSERT_EQ(run("site --D -1 --out s.json").code, 0);
  EXPECT_EQ(run("--height 100000 search --site s.json --count 5").code, 3);
}

TEST_F(Cli, CertifyAndVerify) {
  ASSERT_EQ(run("site --D -1 --out s.json").code, 0);
  ASSERT_EQ(run("search --site s.json --count 1 --checkpoint cp.json").code, 0);
  rk::Json p = load("cp.json")["pairs"][0];
  std::string a = rk::rational_from_json(p["a"]).str(), b = rk::rational_from_json(p["b"]).str();
  Outcome c = run("certify --D -1 --a " + a + " --b " + b + " --site s.json --out c.json");
  ASSERT_EQ(c.code, 0) << c.out << c.err;
  EXPECT_EQ(load("c.json")["outcome"], "certified");
  EXPECT_EQ(run("verify c.json").code, 0);

  rk::Json cert = load("c.json");
  cert["ranks"]["ED_Q"] = "1";
  std::ofstream(dir_ / "bad.json") << cert.dump(2);
  Outcome v = run("verify bad.json");
  EXPECT_EQ(v.code, 1);
  EXPECT_NE(v.out.find("/ranks/ED_Q"), std::string::npos);
}

TEST_F(Cli, CertifyFailureAndInputErrors) {
  Outcome f = run("certify --D -1 --a 5 --b 8 --out f.json");
  EXPECT_EQ(f.code, 1);
  EXPECT_EQ(load("f.json")["outcome"], "failed");
  EXPECT_EQ(run("certify --D -1 --a 1 --b 1").code, 2);
  EXPECT_EQ(run("certify --D -1 --a x --b 8").code, 2);
  EXPECT_EQ(run("verify missing.json").code, 2);
}

TEST_F(Cli, DemoWritesDistinctCertificates) {
  Outcome r = run("demo --D 5 --count 3 --out-dir certs");
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<std::string> js;
  for (int i = 1; i <= 3; ++i) {
    std::string name = "certs/cert_" + std::to_string(i) + ".json";
    ASSERT_TRUE(fs::exists(dir_ / name)) << name;
    js.insert(load(name)["j_invariant"].dump());
    EXPECT_EQ(run("verify " + name).code, 0);
  }
  EXPECT_EQ(js.size(), 3U);
  rk::Json cp = load("certs/checkpoint.json");
  EXPECT_GE(cp["pairs"].size(), 3U);
  EXPECT_TRUE(cp["failed"].is_array());
}

TEST_F(Cli, SearchAcceptsHeightAfterSubcommand) {
  ASSERT_EQ(run("site --D -1 --out s.json").code, 0);
  EXPECT_EQ(run("search --site s.json --count 5 --height 100000").code, 3);
}

TEST_F(Cli, ConfigFile) {
  std::ofstream(dir_ / "cfg.ini") << "jobs = 2\n";
  ASSERT_EQ(run("--config cfg.ini site --D -1 --out s.json").code, 0);
  EXPECT_EQ(run("--config cfg.ini search --site s.json --count 1").code, 0);
}
