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

#ifndef PACSIM_INFERENCE_HPP_
#define PACSIM_INFERENCE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pacsim/bitplane.hpp"
#include "pacsim/pac_core.hpp"

namespace pacsim {

struct QuantParams {
    double scale = 1.0;
    int zero_point = 0;
};

enum class LayerKind { conv2d, linear };
enum class MacMode { exact, hybrid };
enum class ActivationFn { none, relu };
enum class PoolKind { none, max, global_avg };

const char *mac_mode_name(MacMode m);

struct LayerSpec {
    std::string name;
    LayerKind kind = LayerKind::conv2d;
    /// conv2d: {H, W, C_in}. linear: {fan_in}; any input whose element count
    /// equals fan_in is accepted and read in row-major order.
    Shape in_shape;
    std::size_t out_channels = 0;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    /// conv2d: C_out x K x K x C_in. linear: C_out x fan_in.
    QuantTensor weights;

    MacMode mode = MacMode::exact;
    int approx_bits = 4;
    std::optional<Thresholds> thresholds;
    std::optional<std::size_t> pac_chunk;

    /// Folded batch norm (and bias): real = acc_real * bn_scale[c] + bn_bias[c].
    std::vector<float> bn_scale;
    std::vector<float> bn_bias;
    ActivationFn activation = ActivationFn::none;
    QuantParams output;

    PoolKind pool = PoolKind::none;
    std::size_t pool_size = 2;

    std::size_t reduction_length() const;
    /// Accumulator shape, before pooling.
    Shape out_shape() const;
    /// Shape handed to the next layer.
    Shape pooled_shape() const;
};

struct ModelManifest {
    Shape input_shape;
    QuantParams input;
    std::vector<LayerSpec> layers;

    /// Throws Error(manifest) naming the offending layer index.
    void validate() const;
};

/// Reads `manifest.json` and its tensor files from `dir`.
ModelManifest load_model(const std::filesystem::path &dir);
/// Writes `manifest.json` plus one raw file per tensor into `dir`.
void save_model(const ModelManifest &model, const std::filesystem::path &dir);

/// Raw little-endian uint8 input file holding one or more inputs of the
/// manifest's input shape back to back.
std::vector<QuantTensor> load_inputs(const ModelManifest &model, const std::filesystem::path &file);
void save_inputs(const std::vector<QuantTensor> &inputs, const std::filesystem::path &file);

struct ExecOptions {
    int workers = 1;
    /// Also compute the EXACT accumulators on the same input.
    bool with_exact_reference = false;
};

/// Zero-point-corrected accumulators of one layer, sum (x - z_x)(w - z_w),
/// in H' x W' x C_out (conv2d) or C_out (linear) order.
struct Accumulators {
    Shape shape;
    std::vector<std::int64_t> values;
    /// Real value of one accumulator unit, s_x * s_w.
    double scale = 1.0;
    /// Deterministic cycles used per output.
    std::vector<std::uint8_t> digital_cells;
    /// Speculation value of each input window (one per pixel for conv2d,
    /// one for linear).
    std::vector<double> spec;
    /// Set when ExecOptions::with_exact_reference is true.
    std::vector<std::int64_t> exact_values;
};

Accumulators conv2d(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts = {});
Accumulators linear(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts = {});

/// BN, activation and requantisation to 8-bit codes:
/// q = clamp(round(real / s_out) + z_out, 0, 255), ties away from zero.
/// Throws Error(non_finite) if any intermediate is not finite.
QuantTensor postprocess(const Accumulators &acc, const LayerSpec &layer);

/// Max or global-average pooling on H x W x C codes; identity for PoolKind::none.
QuantTensor apply_pool(const QuantTensor &t, const LayerSpec &layer);

/// Runs one layer end to end: MAC, postprocess, pool.
QuantTensor run_layer(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts = {},
                      Accumulators *acc_out = nullptr);

struct LayerRunStats {
    std::string name;
    MacMode mode = MacMode::exact;
    std::size_t reduction_length = 0;
    std::uint64_t outputs = 0;
    std::uint64_t digital_cells = 0;
    std::uint64_t windows = 0;
    double spec_sum = 0.0;
    double spec_min = 1.0;
    double spec_max = 0.0;
    /// Deviation of the layer's accumulators from EXACT on the same input.
    std::uint64_t compared = 0;
    long double dev_sq_sum = 0.0L;
    std::int64_t dev_max_abs = 0;
    std::int64_t exact_min = 0;
    std::int64_t exact_max = 0;

    double avg_digital_cells() const { return outputs ? static_cast<double>(digital_cells) / outputs : 0.0; }
    double mean_spec() const { return windows ? spec_sum / static_cast<double>(windows) : 0.0; }
    double dev_rmse() const;
    /// exact_max - exact_min over everything compared so far.
    double dynamic_range() const { return compared ? static_cast<double>(exact_max - exact_min) : 0.0; }
    /// 100 * dev_rmse / dynamic_range.
    double dev_rmse_pct() const;

    void merge(const LayerRunStats &other);
};

struct RunOptions {
    int workers = 1;
    /// Collect deviation statistics and also run an all-EXACT pass.
    bool compare_exact = false;
};

struct NetworkResult {
    QuantTensor logits;
    std::vector<LayerRunStats> layers;
    /// Logits of the all-EXACT pass when compare_exact is set.
    std::optional<QuantTensor> exact_logits;
};

/// Errors from a layer are rethrown as Error(manifest...) prefixed with the
/// layer index and name, keeping the original code.
NetworkResult run_network(const ModelManifest &model, const QuantTensor &input, const RunOptions &opts = {});

/// Index of the largest code, first one on ties.
std::size_t argmax(const QuantTensor &t);

/// Copy of `model` with every layer forced to EXACT.
ModelManifest exact_variant(const ModelManifest &model);

}  // namespace pacsim

#endif  // PACSIM_INFERENCE_HPP_
