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

#include "pacsim/model_gen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pacsim/rng.hpp"

namespace pacsim {

namespace {

enum Stream : std::uint64_t { kWeights = 1, kBnScale = 2, kBnBias = 3, kCalibration = 4, kInputs = 5 };

double normal(SplitMix64 &rng) {
    // Box-Muller; u1 in (0, 1].
    const double u1 = 1.0 - rng.uniform();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

QuantTensor random_weights(Shape shape, double spread, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<std::uint8_t> codes(shape_elements(shape));
    for (auto &c : codes) c = static_cast<std::uint8_t>(std::clamp(std::round(128.0 + spread * normal(rng)), 0.0, 255.0));
    return QuantTensor(std::move(shape), std::move(codes), 8, 1.0 / 128.0, 128);
}

// Sets bn_scale/bn_bias and the output quantisation of `layer` from EXACT
// accumulators over `inputs`, then returns the layer's outputs.
std::vector<QuantTensor> calibrate(LayerSpec &layer, const std::vector<QuantTensor> &inputs, std::uint64_t seed,
                                  int workers, double clip_percentile) {
    const std::size_t C = layer.out_channels;
    std::vector<double> sum(C, 0.0);
    std::vector<double> sq(C, 0.0);
    std::vector<std::size_t> count(C, 0);
    std::vector<Accumulators> accs;
    for (const auto &x : inputs) {
        const ExecOptions opts{workers, false};
        Accumulators a = layer.kind == LayerKind::conv2d ? conv2d(x, layer, opts) : linear(x, layer, opts);
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const double r = static_cast<double>(a.values[i]) * a.scale;
            sum[i % C] += r;
            sq[i % C] += r * r;
            ++count[i % C];
        }
        accs.push_back(std::move(a));
    }

    SplitMix64 rs(derive_seed(seed, kBnScale));
    SplitMix64 rb(derive_seed(seed, kBnBias));
    layer.bn_scale.resize(C);
    layer.bn_bias.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double mean = sum[c] / static_cast<double>(count[c]);
        const double var = std::max(sq[c] / static_cast<double>(count[c]) - mean * mean, 1e-12);
        const double gain = (0.75 + 0.5 * rs.uniform()) / std::sqrt(var);
        const double shift = 0.5 * (2.0 * rb.uniform() - 1.0);
        layer.bn_scale[c] = static_cast<float>(gain);
        layer.bn_bias[c] = static_cast<float>(-mean * gain + shift);
    }

    // Output range from the post-activation reals.
    std::vector<double> reals;
    for (const auto &a : accs) {
        for (std::size_t i = 0; i < a.values.size(); ++i) {
            const std::size_t c = i % C;
            double r = static_cast<double>(a.values[i]) * a.scale * layer.bn_scale[c] + layer.bn_bias[c];
            if (layer.activation == ActivationFn::relu) r = std::max(r, 0.0);
            reals.push_back(r);
        }
    }
    std::sort(reals.begin(), reals.end());
    if (layer.activation == ActivationFn::relu) {
        const auto k = static_cast<std::size_t>(clip_percentile / 100.0 * static_cast<double>(reals.size() - 1));
        layer.output = {std::max(reals[k], 1e-6) / 255.0, 0};
    } else {
        const double lo = std::min(reals.front(), 0.0);
        const double hi = std::max(reals.back(), 0.0);
        const double scale = std::max(hi - lo, 1e-6) / 255.0;
        layer.output = {scale, static_cast<int>(std::clamp(std::round(-lo / scale), 0.0, 255.0))};
    }

    std::vector<QuantTensor> outs;
    outs.reserve(accs.size());
    for (const auto &a : accs) outs.push_back(apply_pool(postprocess(a, layer), layer));
    return outs;
}

}  // namespace

std::vector<QuantTensor> random_inputs(const ModelManifest &model, std::size_t count, std::uint64_t seed) {
    std::vector<QuantTensor> out;
    out.reserve(count);
    const std::size_t size = shape_elements(model.input_shape);
    for (std::size_t i = 0; i < count; ++i) {
        SplitMix64 rng(derive_seed(seed, i, kInputs));
        std::vector<std::uint8_t> codes(size);
        for (auto &c : codes) c = static_cast<std::uint8_t>(rng.below(256));
        out.emplace_back(model.input_shape, std::move(codes), 8, model.input.scale, model.input.zero_point);
    }
    return out;
}

ModelManifest generate_desk_model(std::uint64_t seed, const DeskModelConfig &cfg) {
    ModelManifest m;
    m.input_shape = {cfg.height, cfg.width, cfg.in_channels};
    m.input = {1.0 / 255.0, 0};

    LayerSpec conv1;
    conv1.name = "conv1";
    conv1.kind = LayerKind::conv2d;
    conv1.in_shape = m.input_shape;
    conv1.out_channels = cfg.conv1_channels;
    conv1.kernel = 3;
    conv1.stride = 1;
    conv1.padding = 1;
    conv1.mode = MacMode::exact;
    conv1.approx_bits = cfg.approx_bits;
    conv1.activation = ActivationFn::relu;
    conv1.pool = PoolKind::max;
    conv1.pool_size = 2;

    LayerSpec conv2;
    conv2.name = "conv2";
    conv2.kind = LayerKind::conv2d;
    conv2.in_shape = {cfg.height / 2, cfg.width / 2, cfg.conv1_channels};
    conv2.out_channels = cfg.conv2_channels;
    conv2.kernel = 3;
    conv2.stride = 1;
    conv2.padding = 1;
    conv2.mode = MacMode::hybrid;
    conv2.approx_bits = cfg.approx_bits;
    conv2.activation = ActivationFn::relu;

    LayerSpec fc;
    fc.name = "fc";
    fc.kind = LayerKind::linear;
    fc.in_shape = {(cfg.height / 2) * (cfg.width / 2) * cfg.conv2_channels};
    fc.out_channels = cfg.classes;
    fc.mode = MacMode::hybrid;
    fc.approx_bits = cfg.approx_bits;
    fc.activation = ActivationFn::none;

    m.layers = {conv1, conv2, fc};
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        auto &l = m.layers[i];
        const Shape ws = l.kind == LayerKind::conv2d ? Shape{l.out_channels, l.kernel, l.kernel, l.in_shape[2]}
                                                     : Shape{l.out_channels, l.in_shape[0]};
        l.weights = random_weights(ws, cfg.weight_spread, derive_seed(seed, i, kWeights));
    }

    // Calibration runs EXACT so the generated model does not depend on the
    // approximation under test.
    auto acts = random_inputs(m, cfg.calibration_inputs, derive_seed(seed, 0, kCalibration));
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        LayerSpec exact = m.layers[i];
        exact.mode = MacMode::exact;
        acts = calibrate(exact, acts, derive_seed(seed, i), cfg.workers, cfg.clip_percentile);
        m.layers[i].bn_scale = exact.bn_scale;
        m.layers[i].bn_bias = exact.bn_bias;
        m.layers[i].output = exact.output;
    }
    m.validate();
    return m;
}

}  // namespace pacsim
