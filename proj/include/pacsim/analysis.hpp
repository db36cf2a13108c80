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

#ifndef PACSIM_ANALYSIS_HPP_
#define PACSIM_ANALYSIS_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pacsim/bitplane.hpp"

namespace pacsim {

struct ModelManifest;

/// How random binary vectors are drawn.
///   fixed_count: exactly round(ratio * n) ones at uniformly random positions
///   iid:         every bit independently Bernoulli(ratio)
enum class BitModel { fixed_count, iid };

const char *bit_model_name(BitModel m);
BitModel parse_bit_model(const std::string &name);

std::vector<std::uint8_t> random_bitvec(std::size_t n, double sparsity_ratio, std::uint64_t seed,
                                        BitModel model = BitModel::fixed_count);

struct RmseConfig {
    std::size_t n = 1024;
    double s_x = 0.2;
    double s_w = 0.4;
    std::uint64_t trials = 100000;
    std::uint64_t seed = 0;
    int workers = 1;
    BitModel model = BitModel::fixed_count;
};

struct RmseResult {
    std::size_t n = 0;
    double s_x = 0.0;
    double s_w = 0.0;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    double rmse_lsb = 0.0;
    double rmse_pct = 0.0;
    double bias = 0.0;
    /// Closed-form standard deviation for the fixed-count model at the
    /// nominal counts; NaN for the iid model.
    double analytic_lsb = 0.0;

    friend bool operator==(const RmseResult &, const RmseResult &) = default;
};

/// Monte-Carlo error of the single-plane PAC estimate: per trial, draws x and
/// w with independent sub-seeds and records popcount(x & w) - S_x S_w / n.
/// Errors are accumulated as exact integers, so the result does not depend on
/// the worker count.
RmseResult rmse_experiment(const RmseConfig &cfg);

/// Exact standard deviation of popcount(x & w) when a vector with S_x ones is
/// uniformly permuted against a fixed vector with S_w ones. Throws for n < 2.
double hypergeometric_std(std::size_t n, std::size_t sx, std::size_t sw);

struct SweepResult {
    std::vector<RmseResult> rows;
    /// Least-squares slope of log(rmse_pct) against log(n); empty when fewer
    /// than two points have non-zero error.
    std::optional<double> slope;
};

SweepResult rmse_sweep(std::span<const std::size_t> n_list, const RmseConfig &base);

/// Log-log least-squares slope; empty if fewer than two usable points.
std::optional<double> loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// Fraction of ones per bit index over all elements. Throws for empty tensors.
std::vector<double> bit_sparsity_profile(const QuantTensor &t);

struct ProfileRow {
    std::string layer;
    std::string tensor;  // "weight" or "activation"
    int bit = 0;
    double ratio = 0.0;
};

/// Weight profile of every layer and, when inputs are given, the mean
/// activation profile of each layer's input over those inputs.
std::vector<ProfileRow> profile_model_sparsity(const ModelManifest &model, std::span<const QuantTensor> inputs,
                                               int workers = 1);

void write_rmse_csv(std::ostream &out, std::span<const RmseResult> rows, const std::optional<double> &slope = {},
                    bool with_slope = false);
void write_profile_csv(std::ostream &out, std::span<const ProfileRow> rows);

}  // namespace pacsim

#endif  // PACSIM_ANALYSIS_HPP_
