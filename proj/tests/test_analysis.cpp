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


#include "pacsim/analysis.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pacsim/error.hpp"
#include "pacsim/inference.hpp"
#include "pacsim/model_gen.hpp"

namespace pacsim {
namespace {

// Variance of the overlap count from the hypergeometric pmf, summed directly.
double pmf_std(int n, int sx, int sw) {
    auto choose = [](int a, int b) {
        if (b < 0 || b > a) return 0.0;
        return std::exp(std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0));
    };
    const double total = choose(n, sx);
    double mean = 0, sq = 0;
    for (int k = 0; k <= std::min(sx, sw); ++k) {
        const double p = choose(sw, k) * choose(n - sw, sx - k) / total;
        mean += p * k;
        sq += p * k * k;
    }
    return std::sqrt(sq - mean * mean);
}

TEST(HypergeometricTest, FrozenValues) {
    EXPECT_NEAR(hypergeometric_std(1024, 205, 410), 6.277073614, 1e-8);
    EXPECT_NEAR(hypergeometric_std(256, 77, 128), 3.67597, 1e-5);
    EXPECT_NEAR(hypergeometric_std(4096, 1229, 2048), 14.66671, 1e-5);
    EXPECT_THROW(hypergeometric_std(1, 1, 1), Error);
}

TEST(HypergeometricTest, MatchesPmf) {
    for (auto [n, sx, sw] : {std::tuple{10, 3, 4}, {50, 10, 25}, {200, 40, 80}, {64, 0, 10}}) {
        EXPECT_NEAR(hypergeometric_std(static_cast<std::size_t>(n), static_cast<std::size_t>(sx),
                                       static_cast<std::size_t>(sw)),
                    pmf_std(n, sx, sw), 1e-7);
    }
}

TEST(RandomBitvecTest, FixedCountHasExactCount) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto v = random_bitvec(1000, 0.3, seed);
        std::size_t ones = 0;
        for (auto b : v) {
            ASSERT_LE(b, 1);
            ones += b;
        }
        EXPECT_EQ(ones, 300u);
    }
    EXPECT_EQ(random_bitvec(100, 0.3, 7), random_bitvec(100, 0.3, 7));
    EXPECT_NE(random_bitvec(100, 0.3, 7), random_bitvec(100, 0.3, 8));
}

TEST(RandomBitvecTest, IidMean) {
    std::size_t ones = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        for (auto b : random_bitvec(1000, 0.2, seed, BitModel::iid)) ones += b;
    }
    EXPECT_NEAR(static_cast<double>(ones) / 50000.0, 0.2, 0.01);
}

TEST(RmseTest, AgreesWithHypergeometric) {
    RmseConfig cfg;
    cfg.n = 256;
    cfg.s_x = 0.3;
    cfg.s_w = 0.5;
    cfg.trials = 20000;
    cfg.seed = 3;
    const RmseResult r = rmse_experiment(cfg);
    EXPECT_NEAR(r.analytic_lsb, 3.67597, 1e-5);
    EXPECT_NEAR(r.rmse_lsb / r.analytic_lsb, 1.0, 0.05);
    EXPECT_NEAR(r.rmse_pct, 100.0 * r.rmse_lsb / 256.0, 1e-12);
    EXPECT_LT(std::abs(r.bias), 0.1);
}

TEST(RmseTest, WorkerCountDoesNotMatter) {
    RmseConfig cfg;
    cfg.n = 512;
    cfg.trials = 3001;
    cfg.seed = 9;
    const RmseResult a = rmse_experiment(cfg);
    cfg.workers = 7;
    EXPECT_EQ(rmse_experiment(cfg), a);
}

TEST(RmseTest, Validates) {
    RmseConfig cfg;
    cfg.s_x = 1.5;
    EXPECT_THROW(rmse_experiment(cfg), Error);
    cfg.s_x = 0.2;
    cfg.trials = 0;
    EXPECT_THROW(rmse_experiment(cfg), Error);
}

TEST(SweepTest, SlopeNearMinusHalf) {
    RmseConfig cfg;
    cfg.s_x = 0.3;
    cfg.s_w = 0.5;
    cfg.trials = 5000;
    cfg.seed = 1;
    const std::vector<std::size_t> ns{256, 1024, 4096};
    const SweepResult s = rmse_sweep(ns, cfg);
    ASSERT_EQ(s.rows.size(), 3u);
    ASSERT_TRUE(s.slope.has_value());
    EXPECT_NEAR(*s.slope, -0.5, 0.05);
}

TEST(SlopeTest, ExactPowerLaw) {
    const std::vector<double> x{1, 2, 4, 8};
    const std::vector<double> y{1, std::pow(2.0, -0.5), 0.5, std::pow(8.0, -0.5)};
    EXPECT_NEAR(*loglog_slope(x, y), -0.5, 1e-12);
    const std::vector<double> one{1};
    EXPECT_FALSE(loglog_slope(one, one).has_value());
}

TEST(ProfileTest, BitRatios) {
    const QuantTensor t({4}, {1, 3, 0, 128});
    const auto p = bit_sparsity_profile(t);
    ASSERT_EQ(p.size(), 8u);
    EXPECT_DOUBLE_EQ(p[0], 0.5);
    EXPECT_DOUBLE_EQ(p[1], 0.25);
    EXPECT_DOUBLE_EQ(p[7], 0.25);
    EXPECT_DOUBLE_EQ(p[4], 0.0);
}

TEST(ProfileTest, ModelRows) {
    DeskModelConfig cfg;
    cfg.calibration_inputs = 2;
    const ModelManifest m = generate_desk_model(1, cfg);
    const auto inputs = random_inputs(m, 2, 4);
    const auto rows = profile_model_sparsity(m, inputs);
    EXPECT_EQ(rows.size(), 3u * 8 * 2);
    for (const auto &r : rows) {
        EXPECT_GE(r.ratio, 0.0);
        EXPECT_LE(r.ratio, 1.0);
    }
    EXPECT_EQ(profile_model_sparsity(m, inputs, 3).size(), rows.size());
}

TEST(CsvTest, RmseHeader) {
    std::ostringstream os;
    write_rmse_csv(os, {}, std::nullopt, true);
    EXPECT_EQ(os.str(), "n,s_x,s_w,trials,seed,rmse_lsb,rmse_pct,bias,analytic_lsb,slope\n");
}

}  // namespace
}  // namespace pacsim
