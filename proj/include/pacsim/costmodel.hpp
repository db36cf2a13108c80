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

#ifndef PACSIM_COSTMODEL_HPP_
#define PACSIM_COSTMODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <span>
#include <string>

namespace pacsim {

/// Energy constants. Units: femtojoules per op, picojoules per access.
///
/// Defaults:
///   e_dcim_1b_op_fj   1000 / 235.01   D-CiM bank, 1b/1b binary MAC efficiency of 235.01 TOPS/W
///   e_pcu_op_fj       1000 / 2945.92  PCU + accumulator, 2945.92 TOPS/W
///   e_sram_access_pj  30.375          512 KB SRAM cache access
///   e_dram_access_pj  200             off-die DRAM access
///   access_width_bits 64              bits moved per access (per-bit energy = access / width)
struct EnergyParams {
    double e_dcim_1b_op_fj = 1000.0 / 235.01;
    double e_pcu_op_fj = 1000.0 / 2945.92;
    double e_sram_access_pj = 30.375;
    double e_dram_access_pj = 200.0;
    double access_width_bits = 64.0;

    double e_sram_bit_pj() const { return e_sram_access_pj / access_width_bits; }
    double e_dram_bit_pj() const { return e_dram_access_pj / access_width_bits; }

    /// Throws Error(out_of_range) unless every value is positive and finite.
    void validate() const;

    /// JSON object with the field names above; missing keys keep defaults.
    static EnergyParams from_json_file(const std::filesystem::path &path);
    static EnergyParams from_json_string(const std::string &text);
    std::string to_json() const;
};

struct CycleCount {
    int baseline_digital = 0;
    double digital = 0.0;
    double sparsity_ops = 0.0;

    double reduction_pct() const { return 100.0 * (1.0 - digital / baseline_digital); }
};

/// Digital bit-serial cycles per output: P*Q baseline, (P-a)*(Q-a) with
/// operand approximation of a bits, or `dynamic_avg` when given. The rest of
/// the grid moves to the sparsity domain.
CycleCount count_cycles(int act_bits, int weight_bits, int approx_bits, std::optional<double> dynamic_avg = {});

struct TrafficReport {
    std::uint64_t values = 0;
    std::uint64_t groups = 0;
    std::size_t group_len = 0;
    std::uint64_t baseline_bits = 0;
    std::uint64_t pacim_bits = 0;

    double reduction_pct() const {
        return baseline_bits ? 100.0 * (1.0 - static_cast<double>(pacim_bits) / static_cast<double>(baseline_bits))
                             : 0.0;
    }
    double pacim_bits_per_value() const {
        return values ? static_cast<double>(pacim_bits) / static_cast<double>(2 * values) : 0.0;
    }
};

/// Activation cache traffic (one write plus one read per value) for `groups`
/// encoding groups of `group_len` values each: a pixel's channels for CONV,
/// the whole vector for LINEAR. Baseline moves all P bits of each value;
/// PACiM moves the P - a MSBs plus P counters of ceil(log2(N+1)) bits per
/// group.
TrafficReport memory_traffic(std::uint64_t groups, std::size_t group_len, int act_bits = 8, int approx_bits = 4);

/// Op counts for one layer (or any workload).
struct CostInputs {
    double digital_cycles = 0.0;   ///< bit-serial digital cycles, summed over outputs
    std::size_t dp_length = 0;     ///< 1-bit ops per digital cycle
    double sparsity_ops = 0.0;     ///< scalar sparsity-domain ops, summed over outputs
    double traffic_bits = 0.0;     ///< cache bits moved
    double dram_bits = 0.0;        ///< optional weight loading
};

struct EnergyBreakdown {
    double dcim_j = 0.0;
    double pcu_j = 0.0;
    double sram_j = 0.0;
    double dram_j = 0.0;

    double compute_j() const { return dcim_j + pcu_j; }
    double total_j() const { return dcim_j + pcu_j + sram_j + dram_j; }
};

EnergyBreakdown energy_estimate(const CostInputs &in, const EnergyParams &params);

/// Per-layer comparison of the all-digital baseline against PACiM.
struct LayerCostSpec {
    std::uint64_t outputs = 1;     ///< MAC outputs in the layer
    std::size_t dp_length = 1024;  ///< reduction length of one output
    std::uint64_t act_groups = 1;  ///< activation encoding groups
    std::size_t group_len = 1024;  ///< values per group (channels per pixel)
    int act_bits = 8;
    int weight_bits = 8;
    int approx_bits = 4;
    std::optional<double> dynamic_avg;
};

struct CostReport {
    CycleCount cycles;
    TrafficReport traffic;
    EnergyBreakdown baseline;
    EnergyBreakdown pacim;
    /// Binary MAC ops of the layer: outputs * dp_length * P * Q.
    double binary_ops = 0.0;

    double compute_gain() const { return baseline.compute_j() / pacim.compute_j(); }
    double total_gain() const { return baseline.total_j() / pacim.total_j(); }
    /// Binary ops per joule of compute, expressed in TOPS/W.
    double baseline_tops_per_w() const { return binary_ops / baseline.compute_j() * 1e-12; }
    double pacim_tops_per_w() const { return binary_ops / pacim.compute_j() * 1e-12; }
};

CostReport layer_cost(const LayerCostSpec &spec, const EnergyParams &params);

void write_cost_csv_header(std::ostream &out);
void write_cost_csv_row(std::ostream &out, const LayerCostSpec &spec, const CostReport &r);
/// Aligned human-readable table of the same rows.
void write_cost_table(std::ostream &out, std::span<const LayerCostSpec> specs, std::span<const CostReport> reports);

}  // namespace pacsim

#endif  // PACSIM_COSTMODEL_HPP_
