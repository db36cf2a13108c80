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

#ifndef PACSIM_MODEL_GEN_HPP_
#define PACSIM_MODEL_GEN_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pacsim/inference.hpp"

namespace pacsim {

/// Shape of the generated desk-scale CNN:
///   conv1  k3 s1 p1, C_in -> conv1_channels, ReLU, 2x2 max-pool   (EXACT)
///   conv2  k3 s1 p1, conv1_channels -> conv2_channels, ReLU       (HYBRID)
///   fc     flatten -> classes                                     (HYBRID)
struct DeskModelConfig {
    std::size_t height = 8;
    std::size_t width = 8;
    std::size_t in_channels = 3;
    std::size_t conv1_channels = 64;
    std::size_t conv2_channels = 32;
    std::size_t classes = 10;
    int approx_bits = 4;
    /// Standard deviation of weight codes around the weight zero point.
    double weight_spread = 48.0;
    std::size_t calibration_inputs = 32;
    /// ReLU outputs are clipped at this percentile of the calibration
    /// activations; codes above it saturate at 255.
    double clip_percentile = 99.0;
    /// Threads used by the calibration passes; does not affect the result.
    int workers = 1;
};

/// Uniformly random 8-bit input codes for `model`, one tensor per index.
std::vector<QuantTensor> random_inputs(const ModelManifest &model, std::size_t count, std::uint64_t seed);

/// Seeded generator: random weights, then batch-norm and output
/// quantisation calibrated layer by layer on random inputs with an EXACT
/// forward pass. Identical seed and config give an identical model.
ModelManifest generate_desk_model(std::uint64_t seed, const DeskModelConfig &cfg = {});

}  // namespace pacsim

#endif  // PACSIM_MODEL_GEN_HPP_
