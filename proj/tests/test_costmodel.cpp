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


#include "pacsim/costmodel.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pacsim/error.hpp"

namespace pacsim {
namespace {

TEST(CycleCountTest, OperandApproximation) {
    const CycleCount c = count_cycles(8, 8, 4);
    EXPECT_EQ(c.baseline_digital, 64);
    EXPECT_DOUBLE_EQ(c.digital, 16.0);
    EXPECT_DOUBLE_EQ(c.sparsity_ops, 48.0);
    EXPECT_DOUBLE_EQ(c.reduction_pct(), 75.0);
    EXPECT_DOUBLE_EQ(count_cycles(8, 8, 4, 12.0).reduction_pct(), 81.25);
    EXPECT_DOUBLE_EQ(count_cycles(8, 8, 0).digital, 64.0);
    EXPECT_DOUBLE_EQ(count_cycles(4, 8, 2).digital, 12.0);
}

TEST(TrafficTest, Formula) {
    // Baseline moves 8 bits per value; PACiM 4 MSBs plus 8 counters per group.
    for (std::size_t n : {1u, 2u, 64u, 127u, 128u, 512u, 4096u}) {
        const TrafficReport t = memory_traffic(10, n);
        EXPECT_EQ(t.baseline_bits, 2u * 10 * n * 8);
        int cw = 0;
        while ((std::size_t{1} << cw) <= n) ++cw;
        EXPECT_EQ(t.pacim_bits, 2u * 10 * (n * 4 + 8 * static_cast<std::uint64_t>(cw)));
    }
    EXPECT_DOUBLE_EQ(memory_traffic(1, 64).reduction_pct(), 39.0625);
    EXPECT_DOUBLE_EQ(memory_traffic(1, 128).reduction_pct(), 43.75);
    EXPECT_DOUBLE_EQ(memory_traffic(1, 512).reduction_pct(), 48.046875);
    EXPECT_EQ(memory_traffic(3, 64, 8, 0).pacim_bits, memory_traffic(3, 64, 8, 0).baseline_bits);
}

TEST(TrafficTest, MonotoneTowardsHalf) {
    double prev = -1.0;
    for (std::size_t n = 16; n <= (1u << 16); n *= 2) {
        const double r = memory_traffic(1, n).reduction_pct();
        EXPECT_GT(r, prev);
        EXPECT_LT(r, 50.0);
        prev = r;
    }
    EXPECT_GT(prev, 49.9);
}

TEST(EnergyTest, DefaultConstants) {
    const EnergyParams p;
    EXPECT_NEAR(p.e_dcim_1b_op_fj, 4.255138, 1e-6);
    EXPECT_NEAR(p.e_pcu_op_fj, 0.339453, 1e-6);
    EXPECT_NEAR(p.e_sram_bit_pj(), 0.474609375, 1e-12);
    EXPECT_NEAR(p.e_dcim_1b_op_fj / p.e_pcu_op_fj, 2945.92 / 235.01, 1e-9);
}

TEST(EnergyTest, LinearInOpCounts) {
    const EnergyParams p;
    const CostInputs a{100, 64, 300, 5000, 100};
    CostInputs b = a;
    b.digital_cycles *= 3;
    b.sparsity_ops *= 3;
    b.traffic_bits *= 3;
    b.dram_bits *= 3;
    const EnergyBreakdown ea = energy_estimate(a, p);
    const EnergyBreakdown eb = energy_estimate(b, p);
    EXPECT_NEAR(eb.total_j(), 3 * ea.total_j(), 1e-24);
    EXPECT_NEAR(ea.dcim_j, 100 * 64 * p.e_dcim_1b_op_fj * 1e-15, 1e-24);
    EXPECT_NEAR(ea.pcu_j, 300 * p.e_pcu_op_fj * 1e-15, 1e-24);
    EXPECT_NEAR(ea.sram_j, 5000 * p.e_sram_bit_pj() * 1e-12, 1e-24);
    EXPECT_NEAR(ea.dram_j, 100 * p.e_dram_bit_pj() * 1e-12, 1e-24);
}

TEST(EnergyTest, LayerCostGainBoundedByCycleRatio) {
    LayerCostSpec s;
    s.outputs = 1000;
    s.dp_length = 4096;
    const CostReport r = layer_cost(s, EnergyParams{});
    EXPECT_GT(r.compute_gain(), 3.9);
    EXPECT_LT(r.compute_gain(), 4.0);
    EXPECT_GT(r.pacim_tops_per_w(), r.baseline_tops_per_w());
    EXPECT_NEAR(r.baseline_tops_per_w(), 235.01, 1e-6);
}

TEST(EnergyParamsTest, JsonRoundTrip) {
    EnergyParams p;
    p.e_dram_access_pj = 150.0;
    const EnergyParams q = EnergyParams::from_json_string(p.to_json());
    EXPECT_DOUBLE_EQ(q.e_dram_access_pj, 150.0);
    EXPECT_DOUBLE_EQ(q.e_pcu_op_fj, p.e_pcu_op_fj);
    const EnergyParams partial = EnergyParams::from_json_string(R"({"e_sram_access_pj": 10})");
    EXPECT_DOUBLE_EQ(partial.e_sram_access_pj, 10.0);
    EXPECT_DOUBLE_EQ(partial.e_dram_access_pj, 200.0);
    EXPECT_THROW(EnergyParams::from_json_string(R"({"e_pcu_op_fj": -1})"), Error);
    EXPECT_THROW(EnergyParams::from_json_string("{oops"), Error);

    const auto file = std::filesystem::temp_directory_path() / "pacsim_energy_test.json";
    std::ofstream(file) << p.to_json();
    EXPECT_DOUBLE_EQ(EnergyParams::from_json_file(file).e_dram_access_pj, 150.0);
    std::filesystem::remove(file);
}

TEST(CostCsvTest, RowHasHeaderColumnCount) {
    std::ostringstream h, r;
    write_cost_csv_header(h);
    const LayerCostSpec s;
    write_cost_csv_row(r, s, layer_cost(s, EnergyParams{}));
    auto commas = [](const std::string &x) { return std::count(x.begin(), x.end(), ','); };
    EXPECT_EQ(commas(h.str()), commas(r.str()));
}

}  // namespace
}  // namespace pacsim
