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

#ifndef PACSIM_BITPLANE_HPP_
#define PACSIM_BITPLANE_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pacsim {

constexpr int kMaxBitWidth = 8;

using Shape = std::vector<std::size_t>;

std::size_t shape_elements(const Shape &shape);

/// Unsigned affine-quantized tensor. Values are codes in [0, 2^bit_width);
/// the real value of a code v is scale * (v - zero_point). Storage is
/// row-major over `shape`.
///
/// Layout conventions used throughout the library:
///   activations (CONV)   H x W x C, channel-last per pixel
///   weights (CONV)       C_out x K x K x C_in, so the reduction order of one
///                        filter is kernel-row, kernel-col, input-channel
///   weights (LINEAR)     C_out x fan_in
class QuantTensor {
   public:
    QuantTensor() = default;

    /// Throws Error(malformed_tensor) if any invariant is violated.
    QuantTensor(Shape shape, std::vector<std::uint8_t> values, int bit_width = 8, double scale = 1.0,
                int zero_point = 0);

    const Shape &shape() const noexcept { return shape_; }
    std::span<const std::uint8_t> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    int bit_width() const noexcept { return bit_width_; }
    double scale() const noexcept { return scale_; }
    int zero_point() const noexcept { return zero_point_; }
    std::uint8_t operator[](std::size_t i) const { return values_[i]; }

    double dequantize(std::size_t i) const { return scale_ * (static_cast<int>(values_[i]) - zero_point_); }

   private:
    Shape shape_;
    std::vector<std::uint8_t> values_;
    int bit_width_ = 8;
    double scale_ = 1.0;
    int zero_point_ = 0;
};

/// Bit-plane decomposition of a flat value array. Plane p holds bit p of
/// every element, packed 64 elements per word, LSB first. Padding bits in
/// the last word are always zero.
class BitPlanes {
   public:
    BitPlanes() = default;
    BitPlanes(int bit_width, std::size_t length);

    /// Builds planes from logical 0/1 bytes, planes[p][i] = bit p of element i.
    /// Throws Error(malformed_plane) on any byte outside {0,1} or ragged planes.
    static BitPlanes from_logical(const std::vector<std::vector<std::uint8_t>> &planes);

    int bit_width() const noexcept { return bit_width_; }
    std::size_t group_len() const noexcept { return length_; }
    std::size_t word_count() const noexcept { return words_; }

    bool bit(int p, std::size_t i) const {
        return (data_[static_cast<std::size_t>(p) * words_ + i / 64] >> (i % 64)) & 1u;
    }
    std::span<const std::uint64_t> plane(int p) const {
        return {data_.data() + static_cast<std::size_t>(p) * words_, words_};
    }
    std::span<std::uint64_t> plane(int p) { return {data_.data() + static_cast<std::size_t>(p) * words_, words_}; }

    /// Logical view of plane p, one byte per element.
    std::vector<std::uint8_t> logical_plane(int p) const;

    /// Re-fills the planes from `values` without validation; values must be
    /// < 2^bit_width. Reuses storage when the length is unchanged.
    void assign(std::span<const std::uint8_t> values, int bit_width);

   private:
    int bit_width_ = 0;
    std::size_t length_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> data_;
};

/// Per-bit counts of ones over one reduction group of length N.
struct SparsityVector {
    int bit_width = 0;
    std::vector<std::uint32_t> counts;
    std::size_t group_len = 0;

    /// Sum over p of 2^p * counts[p]; equals the sum of the group's values.
    std::uint64_t weighted_sum() const;
    /// counts[p] / N.
    double ratio(int p) const { return static_cast<double>(counts[static_cast<std::size_t>(p)]) / group_len; }

    friend bool operator==(const SparsityVector &, const SparsityVector &) = default;
};

BitPlanes decompose(const QuantTensor &t);
/// Validating overload for bare value arrays. Throws Error(malformed_tensor).
BitPlanes decompose(std::span<const std::uint8_t> values, int bit_width);

std::vector<std::uint8_t> recompose(const BitPlanes &b);

/// Counts ones per plane over the whole flat group. Throws Error(empty_group).
SparsityVector count_sparsity(const BitPlanes &b);

/// Counts along one axis of a tensor: one SparsityVector per position of the
/// remaining axes, in row-major order of those axes.
std::vector<SparsityVector> count_sparsity(const QuantTensor &t, std::size_t group_axis);

/// Direct per-value counting, no plane materialisation.
SparsityVector count_sparsity(std::span<const std::uint8_t> values, int bit_width);

}  // namespace pacsim

#endif  // PACSIM_BITPLANE_HPP_
