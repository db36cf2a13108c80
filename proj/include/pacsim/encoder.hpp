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

#ifndef PACSIM_ENCODER_HPP_
#define PACSIM_ENCODER_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pacsim/bitplane.hpp"

namespace pacsim {

/// Resumable sparsity counter for one reduction group. Models the on-die
/// encoder counters plus the intermediate buffer that lets encoding resume
/// after the group was split across weight reloads.
class EncoderState {
   public:
    EncoderState(int bit_width, std::size_t group_target);

    int bit_width() const noexcept { return bit_width_; }
    std::size_t group_target() const noexcept { return group_target_; }
    std::size_t counted() const noexcept { return counted_; }
    std::span<const std::uint32_t> counters() const noexcept { return counters_; }

    /// Absorbs one chunk. Throws Error(overflow) if the group target would be
    /// exceeded, Error(malformed_tensor) for codes that do not fit bit_width.
    void absorb(std::span<const std::uint8_t> chunk);

    bool complete() const noexcept { return counted_ == group_target_; }

    /// Throws Error(underflow) unless exactly group_target values were absorbed.
    SparsityVector finish() const;

    /// "PSES", u32 bit_width, u32 group_target, u32 counted, bit_width x u32
    /// counters; all little-endian.
    std::vector<std::uint8_t> serialize() const;
    static EncoderState deserialize(std::span<const std::uint8_t> bytes);

   private:
    int bit_width_;
    std::size_t group_target_;
    std::size_t counted_ = 0;
    std::vector<std::uint32_t> counters_;
};

struct CompressionStats {
    std::uint64_t raw_bits = 0;
    std::uint64_t encoded_bits = 0;
    double ratio = 0.0;
    int counter_bits = 0;
    /// Same figures with ceil(log2 N)-bit counters, which cannot represent
    /// the all-ones count N but match the commonly quoted 8 x 7 bits at N=128.
    int short_counter_bits = 0;
    std::uint64_t short_encoded_bits = 0;
    double short_ratio = 0.0;
};

/// ceil(log2(N + 1)): bits needed to hold any count in [0, N].
int counter_width(std::size_t n);

/// One SparsityVector per pixel of an H x W x C activation, counted over C.
std::vector<SparsityVector> encode_conv(const QuantTensor &act);

/// One SparsityVector over a whole 1-D activation vector.
SparsityVector encode_linear(const QuantTensor &act);

/// Feeds every chunk into `state` and returns the finished vector.
SparsityVector encode_chunked(std::span<const std::vector<std::uint8_t>> chunks, EncoderState &state);

CompressionStats compression_stats(int bit_width, std::size_t n);

/// Sparsity dump: 16-byte header ("PSPD", u32 P, u32 N, u32 groups) then
/// P u32 counters per group, little-endian. All groups must share P and N.
void write_sparsity_dump(std::ostream &out, std::span<const SparsityVector> groups);
std::vector<SparsityVector> read_sparsity_dump(std::istream &in);

}  // namespace pacsim

#endif  // PACSIM_ENCODER_HPP_
