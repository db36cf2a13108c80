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


// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the bit-plane or hybrid MAC code.

#ifndef PACSIM_TESTS_ORACLES_HPP_
#define PACSIM_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pacsim/inference.hpp"

namespace oracle {

inline std::vector<std::uint8_t> random_codes(std::size_t n, std::mt19937_64 &rng, int bit_width = 8) {
    std::uniform_int_distribution<int> d(0, (1 << bit_width) - 1);
    std::vector<std::uint8_t> v(n);
    for (auto &x : v) x = static_cast<std::uint8_t>(d(rng));
    return v;
}

inline std::uint64_t dot(const std::vector<std::uint8_t> &a, const std::vector<std::uint8_t> &b) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<std::uint64_t>(a[i]) * b[i];
    return s;
}

inline std::uint64_t popcount_and(const std::vector<std::uint8_t> &a, const std::vector<std::uint8_t> &b) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] & b[i]) ? 1 : 0;
    return s;
}

// Zero-point corrected accumulators, straight nested loops.
inline std::vector<std::int64_t> conv_acc(const pacsim::QuantTensor &in, const pacsim::LayerSpec &l) {
    const long H = static_cast<long>(in.shape()[0]);
    const long W = static_cast<long>(in.shape()[1]);
    const long C = static_cast<long>(in.shape()[2]);
    const long K = static_cast<long>(l.kernel);
    const long S = static_cast<long>(l.stride);
    const long P = static_cast<long>(l.padding);
    const long OH = (H + 2 * P - K) / S + 1;
    const long OW = (W + 2 * P - K) / S + 1;
    const long CO = static_cast<long>(l.out_channels);
    const int zx = in.zero_point();
    const int zw = l.weights.zero_point();
    std::vector<std::int64_t> out;
    for (long oy = 0; oy < OH; ++oy) {
        for (long ox = 0; ox < OW; ++ox) {
            for (long co = 0; co < CO; ++co) {
                std::int64_t acc = 0;
                for (long ky = 0; ky < K; ++ky) {
                    for (long kx = 0; kx < K; ++kx) {
                        for (long ci = 0; ci < C; ++ci) {
                            const long y = oy * S + ky - P;
                            const long x = ox * S + kx - P;
                            int xv = zx;
                            if (y >= 0 && y < H && x >= 0 && x < W) xv = in[static_cast<std::size_t>((y * W + x) * C + ci)];
                            const int wv = l.weights[static_cast<std::size_t>(((co * K + ky) * K + kx) * C + ci)];
                            acc += static_cast<std::int64_t>(xv - zx) * (wv - zw);
                        }
                    }
                }
                out.push_back(acc);
            }
        }
    }
    return out;
}

inline std::vector<std::int64_t> linear_acc(const pacsim::QuantTensor &in, const pacsim::LayerSpec &l) {
    const std::size_t n = in.size();
    const int zx = in.zero_point();
    const int zw = l.weights.zero_point();
    std::vector<std::int64_t> out(l.out_channels, 0);
    for (std::size_t o = 0; o < l.out_channels; ++o) {
        for (std::size_t i = 0; i < n; ++i) {
            out[o] += static_cast<std::int64_t>(in[i] - zx) * (l.weights[o * n + i] - zw);
        }
    }
    return out;
}

inline std::uint8_t requantize(std::int64_t acc, double acc_scale, float bn_s, float bn_b, bool relu,
                               const pacsim::QuantParams &q) {
    double r = static_cast<double>(acc) * acc_scale * static_cast<double>(bn_s) + static_cast<double>(bn_b);
    if (relu && r < 0.0) r = 0.0;
    double c = std::round(r / q.scale) + q.zero_point;
    if (c < 0.0) c = 0.0;
    if (c > 255.0) c = 255.0;
    return static_cast<std::uint8_t>(c);
}

// Integer forward pass of an all-EXACT network; returns the final codes.
inline std::vector<std::uint8_t> forward(const pacsim::ModelManifest &m, const pacsim::QuantTensor &input) {
    pacsim::QuantTensor cur = input;
    for (const auto &l : m.layers) {
        const bool conv = l.kind == pacsim::LayerKind::conv2d;
        const std::vector<std::int64_t> acc = conv ? conv_acc(cur, l) : linear_acc(cur, l);
        const std::size_t C = l.out_channels;
        std::vector<std::uint8_t> codes(acc.size());
        for (std::size_t i = 0; i < acc.size(); ++i) {
            codes[i] = requantize(acc[i], cur.scale() * l.weights.scale(), l.bn_scale[i % C], l.bn_bias[i % C],
                                  l.activation == pacsim::ActivationFn::relu, l.output);
        }
        pacsim::Shape shape = l.out_shape();
        if (conv && l.pool != pacsim::PoolKind::none) {
            const std::size_t H = shape[0], W = shape[1];
            std::vector<std::uint8_t> pooled;
            if (l.pool == pacsim::PoolKind::max) {
                const std::size_t s = l.pool_size;
                for (std::size_t y = 0; y + s <= H; y += s) {
                    for (std::size_t x = 0; x + s <= W; x += s) {
                        for (std::size_t c = 0; c < C; ++c) {
                            std::uint8_t mx = 0;
                            for (std::size_t dy = 0; dy < s; ++dy) {
                                for (std::size_t dx = 0; dx < s; ++dx) {
                                    mx = std::max(mx, codes[((y + dy) * W + x + dx) * C + c]);
                                }
                            }
                            pooled.push_back(mx);
                        }
                    }
                }
                shape = {H / s, W / s, C};
            } else {
                for (std::size_t c = 0; c < C; ++c) {
                    double sum = 0;
                    for (std::size_t i = 0; i < H * W; ++i) sum += codes[i * C + c];
                    pooled.push_back(static_cast<std::uint8_t>(std::floor(sum / static_cast<double>(H * W) + 0.5)));
                }
                shape = {1, 1, C};
            }
            codes = std::move(pooled);
        }
        cur = pacsim::QuantTensor(shape, std::move(codes), 8, l.output.scale, l.output.zero_point);
    }
    return {cur.values().begin(), cur.values().end()};
}

}  // namespace oracle

#endif  // PACSIM_TESTS_ORACLES_HPP_
