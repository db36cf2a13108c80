// Copyright 2026 The pacsim Authors
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


#include "pacsim/cli.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pacsim {
namespace {

namespace fs = std::filesystem;

struct CliRun {
    int code;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class CliTest : public ::testing::Test {
   protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("pacsim_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        unsetenv("PACSIM_SEED");
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path dir_;
};

TEST_F(CliTest, RmseWritesCsvWithPreamble) {
    const CliRun r = run({"rmse", "--n", "256", "--trials", "500", "--seed", "4"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.rfind("# pacsim rmse seed=4", 0), 0u);
    EXPECT_NE(r.out.find("# generated "), std::string::npos);
    EXPECT_NE(r.out.find("n,s_x,s_w,trials,seed,rmse_lsb,rmse_pct,bias,analytic_lsb\n256,"), std::string::npos);
}

TEST_F(CliTest, NoTimestampIsReproducible) {
    const std::vector<std::string> args{"rmse", "--n", "128", "--trials", "300", "--seed", "2", "--no-timestamp"};
    const CliRun a = run(args);
    EXPECT_EQ(a.out.find("# generated"), std::string::npos);
    EXPECT_EQ(a.out, run(args).out);
}

TEST_F(CliTest, UsageErrorsExitTwo) {
    EXPECT_EQ(run({"rmse", "--sx", "2"}).code, kExitUsage);
    EXPECT_EQ(run({"bogus"}).code, kExitUsage);
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"infer"}).code, kExitUsage);
    EXPECT_EQ(run({"cost", "--format", "xml"}).code, kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, RuntimeErrorsExitOne) {
    fs::create_directories(dir_ / "empty");
    const CliRun r = run({"infer", "--model-dir", (dir_ / "empty").string(), "--random-inputs", "1"});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_FALSE(r.err.empty());
}

TEST_F(CliTest, SeedFallsBackToEnvironment) {
    setenv("PACSIM_SEED", "123", 1);
    const CliRun r = run({"rmse", "--n", "64", "--trials", "10", "--no-timestamp"});
    EXPECT_EQ(r.out.rfind("# pacsim rmse seed=123", 0), 0u);
    const CliRun explicit_seed = run({"rmse", "--n", "64", "--trials", "10", "--no-timestamp", "--seed", "5"});
    EXPECT_EQ(explicit_seed.out.rfind("# pacsim rmse seed=5", 0), 0u);
    unsetenv("PACSIM_SEED");
}

TEST_F(CliTest, ConfigFileSuppliesOptions) {
    const fs::path cfg = dir_ / "run.toml";
    std::ofstream(cfg) << "[rmse]\nn = 96\ntrials = 50\nseed = 8\n";
    const CliRun r = run({"--config", cfg.string(), "rmse", "--no-timestamp"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("\n96,"), std::string::npos);
    EXPECT_NE(r.out.find("seed=8"), std::string::npos);
}

TEST_F(CliTest, OutFileMatchesStdout) {
    const fs::path f = dir_ / "cost.csv";
    const CliRun a = run({"cost", "--no-timestamp"});
    const CliRun b = run({"cost", "--no-timestamp", "--out", f.string()});
    EXPECT_EQ(b.code, 0);
    EXPECT_EQ(slurp(f), a.out);
}

TEST_F(CliTest, CostTableFormat) {
    const CliRun r = run({"cost", "--format", "table", "--no-timestamp"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("75"), std::string::npos);
}

TEST_F(CliTest, WorkersDoNotChangeOutput) {
    const std::string model = (dir_ / "m").string();
    ASSERT_EQ(run({"gen-model", "--dir", model, "--seed", "3", "--inputs", "4", "--no-timestamp"}).code, 0);
    const std::vector<std::vector<std::string>> commands{
        {"rmse", "--n", "512", "--trials", "2000", "--seed", "1"},
        {"sweep", "--n", "256,512,1024", "--trials", "500", "--seed", "1"},
        {"infer", "--model-dir", model, "--random-inputs", "6", "--compare-exact", "--seed", "1"},
        {"infer", "--model-dir", model, "--input", model + "/inputs.u8", "--thresholds", "0.1,0.2,0.3"},
        {"cost", "--dynamic-avg", "12"},
        {"profile", "--model-dir", model, "--random-inputs", "3", "--seed", "1"},
    };
    for (auto args : commands) {
        args.push_back("--no-timestamp");
        auto one = args, eight = args;
        one.insert(one.end(), {"--workers", "1"});
        eight.insert(eight.end(), {"--workers", "8"});
        const CliRun a = run(one);
        const CliRun b = run(eight);
        EXPECT_EQ(a.code, 0) << args[0] << ": " << a.err;
        EXPECT_EQ(a.out, b.out) << args[0];
        EXPECT_EQ(a.out, run(one).out) << args[0];
    }
    const std::string other = (dir_ / "m8").string();
    ASSERT_EQ(run({"gen-model", "--dir", other, "--seed", "3", "--inputs", "4", "--workers", "8"}).code, 0);
    for (const auto &entry : fs::directory_iterator(model)) {
        EXPECT_EQ(slurp(entry.path()), slurp(fs::path(other) / entry.path().filename())) << entry.path();
    }
}

TEST_F(CliTest, InferLogitsOut) {
    const std::string model = (dir_ / "m").string();
    ASSERT_EQ(run({"gen-model", "--dir", model, "--seed", "2"}).code, 0);
    const fs::path logits = dir_ / "logits.csv";
    const CliRun r = run({"infer", "--model-dir", model, "--random-inputs", "3", "--mode", "exact", "--logits-out",
                       logits.string(), "--no-timestamp"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(logits));
    EXPECT_NE(r.out.find("layer,mode,reduction_length"), std::string::npos);
}

TEST_F(CliTest, ProfileRawTensor) {
    const fs::path t = dir_ / "t.u8";
    std::ofstream(t, std::ios::binary) << std::string("\x01\x03\x00\x80", 4);
    const CliRun r = run({"profile", "--tensor", t.string(), "--no-timestamp"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find(",0,0.5"), std::string::npos);
}

}  // namespace
}  // namespace pacsim
