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

#include "pacsim/bitplane.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pacsim/error.hpp"

namespace pacsim {

namespace {

std::size_t words_for(std::size_t n) { return (n + 63) / 64; }

void check_bit_width(int bit_width, ErrorCode code) {
    if (bit_width < 1 || bit_width > kMaxBitWidth) {
        throw Error(code, "bit width " + std::to_string(bit_width) + " outside [1, 8]");
    }
}

void check_values(std::span<const std::uint8_t> values, int bit_width) {
    const unsigned limit = 1u << bit_width;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= limit) {
            throw Error(ErrorCode::malformed_tensor, "value " + std::to_string(values[i]) + " at index " +
                                                         std::to_string(i) + " does not fit in " +
                                                         std::to_string(bit_width) + " bits");
        }
    }
}

}  // namespace

std::size_t shape_elements(const Shape &shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

QuantTensor::QuantTensor(Shape shape, std::vector<std::uint8_t> values, int bit_width, double scale, int zero_point)
    : shape_(std::move(shape)), values_(std::move(values)), bit_width_(bit_width), scale_(scale),
      zero_point_(zero_point) {
    check_bit_width(bit_width_, ErrorCode::malformed_tensor);
    if (shape_elements(shape_) != values_.size()) {
        throw Error(ErrorCode::malformed_tensor, "shape holds " + std::to_string(shape_elements(shape_)) +
                                                     " elements but " + std::to_string(values_.size()) +
                                                     " values were given");
    }
    if (!(scale_ > 0.0) || !std::isfinite(scale_)) {
        throw Error(ErrorCode::malformed_tensor, "scale must be positive and finite");
    }
    if (zero_point_ < 0 || zero_point_ >= (1 << bit_width_)) {
        throw Error(ErrorCode::malformed_tensor, "zero point " + std::to_string(zero_point_) + " out of range");
    }
    check_values(values_, bit_width_);
}

BitPlanes::BitPlanes(int bit_width, std::size_t length)
    : bit_width_(bit_width), length_(length), words_(words_for(length)),
      data_(static_cast<std::size_t>(bit_width) * words_for(length), 0) {
    check_bit_width(bit_width, ErrorCode::malformed_plane);
}

BitPlanes BitPlanes::from_logical(const std::vector<std::vector<std::uint8_t>> &planes) {
    if (planes.empty()) throw Error(ErrorCode::malformed_plane, "no planes given");
    const std::size_t n = planes.front().size();
    BitPlanes out(static_cast<int>(planes.size()), n);
    for (std::size_t p = 0; p < planes.size(); ++p) {
        if (planes[p].size() != n) throw Error(ErrorCode::malformed_plane, "planes have different lengths");
        auto words = out.plane(static_cast<int>(p));
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint8_t b = planes[p][i];
            if (b > 1) {
                throw Error(ErrorCode::malformed_plane, "plane " + std::to_string(p) + " element " +
                                                            std::to_string(i) + " is " + std::to_string(b));
            }
            words[i / 64] |= static_cast<std::uint64_t>(b) << (i % 64);
        }
    }
    return out;
}

std::vector<std::uint8_t> BitPlanes::logical_plane(int p) const {
    std::vector<std::uint8_t> out(length_);
    for (std::size_t i = 0; i < length_; ++i) out[i] = bit(p, i) ? 1 : 0;
    return out;
}

void BitPlanes::assign(std::span<const std::uint8_t> values, int bit_width) {
    const std::size_t words = words_for(values.size());
    bit_width_ = bit_width;
    length_ = values.size();
    words_ = words;
    data_.assign(static_cast<std::size_t>(bit_width) * words, 0);
    // Gather 64 elements at a time so each plane word is written once.
    for (std::size_t w = 0; w < words; ++w) {
        const std::size_t begin = w * 64;
        const std::size_t end = std::min(begin + 64, length_);
        for (int p = 0; p < bit_width; ++p) {
            std::uint64_t word = 0;
            for (std::size_t i = begin; i < end; ++i) {
                word |= static_cast<std::uint64_t>((values[i] >> p) & 1u) << (i - begin);
            }
            data_[static_cast<std::size_t>(p) * words + w] = word;
        }
    }
}

std::uint64_t SparsityVector::weighted_sum() const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < counts.size(); ++p) s += static_cast<std::uint64_t>(counts[p]) << p;
    return s;
}

BitPlanes decompose(const QuantTensor &t) {
    BitPlanes b;
    b.assign(t.values(), t.bit_width());
    return b;
}

BitPlanes decompose(std::span<const std::uint8_t> values, int bit_width) {
    check_bit_width(bit_width, ErrorCode::malformed_tensor);
    check_values(values, bit_width);
    BitPlanes b;
    b.assign(values, bit_width);
    return b;
}

std::vector<std::uint8_t> recompose(const BitPlanes &b) {
    std::vector<std::uint8_t> out(b.group_len(), 0);
    for (int p = 0; p < b.bit_width(); ++p) {
        auto words = b.plane(p);
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = static_cast<std::uint8_t>(out[i] | (((words[i / 64] >> (i % 64)) & 1u) << p));
        }
    }
    return out;
}

SparsityVector count_sparsity(const BitPlanes &b) {
    if (b.group_len() == 0) throw Error(ErrorCode::empty_group, "cannot count sparsity of an empty group");
    SparsityVector s{b.bit_width(), std::vector<std::uint32_t>(static_cast<std::size_t>(b.bit_width()), 0),
                     b.group_len()};
    for (int p = 0; p < b.bit_width(); ++p) {
        std::uint64_t c = 0;
        for (auto w : b.plane(p)) c += static_cast<std::uint64_t>(std::popcount(w));
        s.counts[static_cast<std::size_t>(p)] = static_cast<std::uint32_t>(c);
    }
    return s;
}

SparsityVector count_sparsity(std::span<const std::uint8_t> values, int bit_width) {
    if (values.empty()) throw Error(ErrorCode::empty_group, "cannot count sparsity of an empty group");
    check_bit_width(bit_width, ErrorCode::malformed_tensor);
    SparsityVector s{bit_width, std::vector<std::uint32_t>(static_cast<std::size_t>(bit_width), 0), values.size()};
    for (auto v : values) {
        for (int p = 0; p < bit_width; ++p) s.counts[static_cast<std::size_t>(p)] += (v >> p) & 1u;
    }
    return s;
}

std::vector<SparsityVector> count_sparsity(const QuantTensor &t, std::size_t group_axis) {
    const Shape &shape = t.shape();
    if (group_axis >= shape.size()) {
        throw Error(ErrorCode::shape_mismatch, "group axis " + std::to_string(group_axis) + " out of range");
    }
    const std::size_t n = shape[group_axis];
    if (n == 0) throw Error(ErrorCode::empty_group, "group axis has length 0");
    std::size_t outer = 1;
    std::size_t inner = 1;
    for (std::size_t a = 0; a < group_axis; ++a) outer *= shape[a];
    for (std::size_t a = group_axis + 1; a < shape.size(); ++a) inner *= shape[a];

    const int bw = t.bit_width();
    std::vector<SparsityVector> out(outer * inner,
                                    SparsityVector{bw, std::vector<std::uint32_t>(static_cast<std::size_t>(bw), 0), n});
    auto values = t.values();
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t k = 0; k < n; ++k) {
            const std::uint8_t *row = values.data() + (o * n + k) * inner;
            for (std::size_t i = 0; i < inner; ++i) {
                auto &counts = out[o * inner + i].counts;
                for (int p = 0; p < bw; ++p) counts[static_cast<std::size_t>(p)] += (row[i] >> p) & 1u;
            }
        }
    }
    return out;
}

}  // namespace pacsim
