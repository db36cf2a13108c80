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

#include "pacsim/encoder.hpp"

#include <algorithm>
#include <bit>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

#include "bytes.hpp"
#include "pacsim/error.hpp"

namespace pacsim {

namespace {

constexpr std::uint8_t kStateMagic[4] = {'P', 'S', 'E', 'S'};
constexpr std::uint8_t kDumpMagic[4] = {'P', 'S', 'P', 'D'};

}  // namespace

EncoderState::EncoderState(int bit_width, std::size_t group_target)
    : bit_width_(bit_width), group_target_(group_target), counters_(static_cast<std::size_t>(bit_width), 0) {
    if (bit_width < 1 || bit_width > kMaxBitWidth) {
        throw Error(ErrorCode::out_of_range, "encoder bit width " + std::to_string(bit_width));
    }
    if (group_target == 0) throw Error(ErrorCode::empty_group, "encoder group target is 0");
}

void EncoderState::absorb(std::span<const std::uint8_t> chunk) {
    if (chunk.size() > group_target_ - counted_) {
        throw Error(ErrorCode::overflow, "chunk of " + std::to_string(chunk.size()) + " values exceeds remaining " +
                                             std::to_string(group_target_ - counted_));
    }
    const unsigned limit = 1u << bit_width_;
    for (auto v : chunk) {
        if (v >= limit) throw Error(ErrorCode::malformed_tensor, "code " + std::to_string(v) + " too wide");
    }
    for (auto v : chunk) {
        for (int p = 0; p < bit_width_; ++p) counters_[static_cast<std::size_t>(p)] += (v >> p) & 1u;
    }
    counted_ += chunk.size();
}

SparsityVector EncoderState::finish() const {
    if (!complete()) {
        throw Error(ErrorCode::underflow, "group has " + std::to_string(counted_) + " of " +
                                              std::to_string(group_target_) + " values");
    }
    return SparsityVector{bit_width_, counters_, group_target_};
}

std::vector<std::uint8_t> EncoderState::serialize() const {
    std::vector<std::uint8_t> out(std::begin(kStateMagic), std::end(kStateMagic));
    detail::put_u32(out, static_cast<std::uint32_t>(bit_width_));
    detail::put_u32(out, static_cast<std::uint32_t>(group_target_));
    detail::put_u32(out, static_cast<std::uint32_t>(counted_));
    for (auto c : counters_) detail::put_u32(out, c);
    return out;
}

EncoderState EncoderState::deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16 || !std::equal(std::begin(kStateMagic), std::end(kStateMagic), bytes.begin())) {
        throw Error(ErrorCode::io, "not an encoder state record");
    }
    const auto bw = static_cast<int>(detail::get_u32(bytes, 4));
    EncoderState s(bw, detail::get_u32(bytes, 8));
    s.counted_ = detail::get_u32(bytes, 12);
    if (bytes.size() != 16 + 4 * static_cast<std::size_t>(bw)) throw Error(ErrorCode::io, "encoder state size");
    if (s.counted_ > s.group_target_) throw Error(ErrorCode::io, "encoder state counted exceeds target");
    for (int p = 0; p < bw; ++p) {
        const std::uint32_t c = detail::get_u32(bytes, 16 + 4 * static_cast<std::size_t>(p));
        if (c > s.counted_) throw Error(ErrorCode::io, "encoder counter exceeds counted values");
        s.counters_[static_cast<std::size_t>(p)] = c;
    }
    return s;
}

int counter_width(std::size_t n) { return static_cast<int>(std::bit_width(n)); }

std::vector<SparsityVector> encode_conv(const QuantTensor &act) {
    if (act.shape().size() != 3) throw Error(ErrorCode::shape_mismatch, "CONV activation must be H x W x C");
    if (act.shape()[2] == 0) throw Error(ErrorCode::empty_group, "CONV activation has no channels");
    return count_sparsity(act, 2);
}

SparsityVector encode_linear(const QuantTensor &act) {
    if (act.shape().size() != 1) throw Error(ErrorCode::shape_mismatch, "LINEAR activation must be 1-D");
    return count_sparsity(act.values(), act.bit_width());
}

SparsityVector encode_chunked(std::span<const std::vector<std::uint8_t>> chunks, EncoderState &state) {
    for (const auto &c : chunks) state.absorb(c);
    return state.finish();
}

CompressionStats compression_stats(int bit_width, std::size_t n) {
    if (n == 0) throw Error(ErrorCode::empty_group, "compression of an empty group");
    CompressionStats s;
    s.raw_bits = static_cast<std::uint64_t>(bit_width) * n;
    s.counter_bits = counter_width(n);
    s.encoded_bits = static_cast<std::uint64_t>(bit_width) * static_cast<std::uint64_t>(s.counter_bits);
    s.ratio = 1.0 - static_cast<double>(s.encoded_bits) / static_cast<double>(s.raw_bits);
    s.short_counter_bits = std::max(1, counter_width(n - 1));
    s.short_encoded_bits = static_cast<std::uint64_t>(bit_width) * static_cast<std::uint64_t>(s.short_counter_bits);
    s.short_ratio = 1.0 - static_cast<double>(s.short_encoded_bits) / static_cast<double>(s.raw_bits);
    return s;
}

void write_sparsity_dump(std::ostream &out, std::span<const SparsityVector> groups) {
    const int p = groups.empty() ? 0 : groups.front().bit_width;
    const std::size_t n = groups.empty() ? 0 : groups.front().group_len;
    std::vector<std::uint8_t> bytes(std::begin(kDumpMagic), std::end(kDumpMagic));
    detail::put_u32(bytes, static_cast<std::uint32_t>(p));
    detail::put_u32(bytes, static_cast<std::uint32_t>(n));
    detail::put_u32(bytes, static_cast<std::uint32_t>(groups.size()));
    for (const auto &g : groups) {
        if (g.bit_width != p || g.group_len != n) {
            throw Error(ErrorCode::shape_mismatch, "sparsity dump groups must share bit width and length");
        }
        for (auto c : g.counts) detail::put_u32(bytes, c);
    }
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "failed to write sparsity dump");
}

std::vector<SparsityVector> read_sparsity_dump(std::istream &in) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 16 || !std::equal(std::begin(kDumpMagic), std::end(kDumpMagic), bytes.begin())) {
        throw Error(ErrorCode::io, "not a sparsity dump");
    }
    const auto p = static_cast<int>(detail::get_u32(bytes, 4));
    const std::size_t n = detail::get_u32(bytes, 8);
    const std::size_t count = detail::get_u32(bytes, 12);
    if (bytes.size() != 16 + count * 4 * static_cast<std::size_t>(p)) {
        throw Error(ErrorCode::io, "sparsity dump size does not match its header");
    }
    std::vector<SparsityVector> out;
    out.reserve(count);
    std::size_t off = 16;
    for (std::size_t g = 0; g < count; ++g) {
        SparsityVector s{p, std::vector<std::uint32_t>(static_cast<std::size_t>(p)), n};
        for (auto &c : s.counts) {
            c = detail::get_u32(bytes, off);
            if (c > n) throw Error(ErrorCode::io, "sparsity count exceeds group length");
            off += 4;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace pacsim
