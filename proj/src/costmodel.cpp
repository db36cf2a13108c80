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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "pacsim/encoder.hpp"
#include "pacsim/error.hpp"

namespace pacsim {

namespace {

constexpr double kFemto = 1e-15;
constexpr double kPico = 1e-12;

std::string fmt(double v, int precision = 10) {
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

}  // namespace

void EnergyParams::validate() const {
    for (double v : {e_dcim_1b_op_fj, e_pcu_op_fj, e_sram_access_pj, e_dram_access_pj, access_width_bits}) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::out_of_range, "energy parameters must be positive");
    }
}

EnergyParams EnergyParams::from_json_string(const std::string &text) {
    EnergyParams p;
    try {
        const auto j = nlohmann::json::parse(text);
        p.e_dcim_1b_op_fj = j.value("e_dcim_1b_op_fj", p.e_dcim_1b_op_fj);
        p.e_pcu_op_fj = j.value("e_pcu_op_fj", p.e_pcu_op_fj);
        p.e_sram_access_pj = j.value("e_sram_access_pj", p.e_sram_access_pj);
        p.e_dram_access_pj = j.value("e_dram_access_pj", p.e_dram_access_pj);
        p.access_width_bits = j.value("access_width_bits", p.access_width_bits);
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorCode::io, std::string("energy parameter file: ") + e.what());
    }
    p.validate();
    return p;
}

EnergyParams EnergyParams::from_json_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_string(ss.str());
}

std::string EnergyParams::to_json() const {
    nlohmann::json j = {{"e_dcim_1b_op_fj", e_dcim_1b_op_fj},
                        {"e_pcu_op_fj", e_pcu_op_fj},
                        {"e_sram_access_pj", e_sram_access_pj},
                        {"e_dram_access_pj", e_dram_access_pj},
                        {"access_width_bits", access_width_bits}};
    return j.dump(2);
}

CycleCount count_cycles(int act_bits, int weight_bits, int approx_bits, std::optional<double> dynamic_avg) {
    if (act_bits < 1 || weight_bits < 1 || act_bits > 8 || weight_bits > 8) {
        throw Error(ErrorCode::out_of_range, "operand bit widths must lie in [1, 8]");
    }
    if (approx_bits < 0 || approx_bits > std::min(act_bits, weight_bits)) {
        throw Error(ErrorCode::out_of_range, "approx_bits exceeds operand width");
    }
    CycleCount c;
    c.baseline_digital = act_bits * weight_bits;
    c.digital = dynamic_avg ? *dynamic_avg
                            : static_cast<double>((act_bits - approx_bits) * (weight_bits - approx_bits));
    if (c.digital < 0.0 || c.digital > c.baseline_digital) {
        throw Error(ErrorCode::out_of_range, "dynamic average outside [0, P*Q]");
    }
    c.sparsity_ops = c.baseline_digital - c.digital;
    return c;
}

TrafficReport memory_traffic(std::uint64_t groups, std::size_t group_len, int act_bits, int approx_bits) {
    if (group_len == 0) throw Error(ErrorCode::empty_group, "traffic with group length 0");
    if (approx_bits < 0 || approx_bits > act_bits) throw Error(ErrorCode::out_of_range, "approx_bits exceeds width");
    TrafficReport t;
    t.groups = groups;
    t.group_len = group_len;
    t.values = groups * group_len;
    const std::uint64_t bw = static_cast<std::uint64_t>(act_bits);
    t.baseline_bits = 2 * t.values * bw;
    if (approx_bits == 0) {
        t.pacim_bits = t.baseline_bits;
    } else {
        const std::uint64_t per_group =
            group_len * (bw - static_cast<std::uint64_t>(approx_bits)) + bw * static_cast<std::uint64_t>(counter_width(group_len));
        t.pacim_bits = 2 * groups * per_group;
    }
    return t;
}

EnergyBreakdown energy_estimate(const CostInputs &in, const EnergyParams &params) {
    params.validate();
    EnergyBreakdown e;
    e.dcim_j = in.digital_cycles * static_cast<double>(in.dp_length) * params.e_dcim_1b_op_fj * kFemto;
    e.pcu_j = in.sparsity_ops * params.e_pcu_op_fj * kFemto;
    e.sram_j = in.traffic_bits * params.e_sram_bit_pj() * kPico;
    e.dram_j = in.dram_bits * params.e_dram_bit_pj() * kPico;
    return e;
}

CostReport layer_cost(const LayerCostSpec &spec, const EnergyParams &params) {
    CostReport r;
    r.cycles = count_cycles(spec.act_bits, spec.weight_bits, spec.approx_bits, spec.dynamic_avg);
    r.traffic = memory_traffic(spec.act_groups, spec.group_len, spec.act_bits, spec.approx_bits);
    const double outputs = static_cast<double>(spec.outputs);
    r.baseline = energy_estimate({outputs * r.cycles.baseline_digital, spec.dp_length, 0.0,
                                  static_cast<double>(r.traffic.baseline_bits), 0.0},
                                 params);
    r.pacim = energy_estimate({outputs * r.cycles.digital, spec.dp_length, outputs * r.cycles.sparsity_ops,
                               static_cast<double>(r.traffic.pacim_bits), 0.0},
                              params);
    r.binary_ops = outputs * static_cast<double>(spec.dp_length) * r.cycles.baseline_digital;
    return r;
}

void write_cost_csv_header(std::ostream &out) {
    out << "group_len,dp_length,outputs,act_bits,weight_bits,approx_bits,baseline_cycles,digital_cycles,"
           "sparsity_ops,cycle_reduction_pct,traffic_bits_baseline,traffic_bits_pacim,traffic_reduction_pct,"
           "energy_baseline_j,energy_pacim_j,energy_dcim_j,energy_pcu_j,energy_sram_j,compute_gain,"
           "baseline_tops_per_w_1b,pacim_tops_per_w_1b\n";
}

void write_cost_csv_row(std::ostream &out, const LayerCostSpec &spec, const CostReport &r) {
    out << spec.group_len << "," << spec.dp_length << "," << spec.outputs << "," << spec.act_bits << ","
        << spec.weight_bits << "," << spec.approx_bits << "," << r.cycles.baseline_digital << ","
        << fmt(r.cycles.digital) << "," << fmt(r.cycles.sparsity_ops) << "," << fmt(r.cycles.reduction_pct()) << ","
        << r.traffic.baseline_bits << "," << r.traffic.pacim_bits << "," << fmt(r.traffic.reduction_pct()) << ","
        << fmt(r.baseline.total_j()) << "," << fmt(r.pacim.total_j()) << "," << fmt(r.pacim.dcim_j) << ","
        << fmt(r.pacim.pcu_j) << "," << fmt(r.pacim.sram_j) << "," << fmt(r.compute_gain()) << ","
        << fmt(r.baseline_tops_per_w()) << "," << fmt(r.pacim_tops_per_w()) << "\n";
}

void write_cost_table(std::ostream &out, std::span<const LayerCostSpec> specs, std::span<const CostReport> reports) {
    out << std::left << std::setw(10) << "N" << std::setw(10) << "cycles" << std::setw(12) << "cycle red%"
        << std::setw(14) << "traffic red%" << std::setw(14) << "compute gain" << "PACiM TOPS/W (1b)\n";
    for (std::size_t i = 0; i < specs.size() && i < reports.size(); ++i) {
        const auto &r = reports[i];
        out << std::left << std::setw(10) << specs[i].group_len << std::setw(10) << fmt(r.cycles.digital, 4)
            << std::setw(12) << fmt(r.cycles.reduction_pct(), 4) << std::setw(14) << fmt(r.traffic.reduction_pct(), 4)
            << std::setw(14) << fmt(r.compute_gain(), 4) << fmt(r.pacim_tops_per_w(), 6) << "\n";
    }
}

}  // namespace pacsim
