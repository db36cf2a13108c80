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

#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "oracles.hpp"
#include "pacsim/error.hpp"

namespace pacsim {
namespace {

std::vector<std::vector<std::uint8_t>> random_partition(const std::vector<std::uint8_t> &v, std::mt19937_64 &rng) {
    std::vector<std::vector<std::uint8_t>> chunks;
    std::size_t i = 0;
    while (i < v.size()) {
        const std::size_t len = 1 + rng() % std::min<std::size_t>(v.size() - i, 300);
        chunks.emplace_back(v.begin() + static_cast<long>(i), v.begin() + static_cast<long>(i + len));
        i += len;
    }
    return chunks;
}

TEST(EncoderTest, ConvCountsPerPixel) {
    const QuantTensor act({1, 2, 3}, {1, 2, 3, 255, 0, 128});
    const auto groups = encode_conv(act);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].weighted_sum(), 6u);
    EXPECT_EQ(groups[1].weighted_sum(), 383u);
    EXPECT_EQ(groups[1].counts[7], 2u);
    EXPECT_EQ(groups[0].group_len, 3u);
}

TEST(EncoderTest, LinearCountsWholeVector) {
    const QuantTensor act({4}, {1, 1, 2, 3});
    const SparsityVector s = encode_linear(act);
    EXPECT_EQ(s.counts[0], 3u);
    EXPECT_EQ(s.counts[1], 2u);
    EXPECT_EQ(s.group_len, 4u);
}

TEST(EncoderTest, SingleChunkEqualsOneShot) {
    std::mt19937_64 rng(1);
    const auto v = oracle::random_codes(100, rng);
    EncoderState st(8, 100);
    const std::vector<std::vector<std::uint8_t>> chunks{v};
    EXPECT_EQ(encode_chunked(chunks, st), count_sparsity(v, 8));
}

TEST(EncoderTest, RandomPartitionsWithSerialization) {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t n = 1 + rng() % 4096;
        const auto v = oracle::random_codes(n, rng);
        const auto chunks = random_partition(v, rng);
        EncoderState st(8, n);
        for (const auto &c : chunks) {
            st.absorb(c);
            st = EncoderState::deserialize(st.serialize());
        }
        EXPECT_TRUE(st.complete());
        EXPECT_EQ(st.finish(), count_sparsity(v, 8));
    }
}

TEST(EncoderTest, SerializationLayout) {
    EncoderState st(2, 5);
    st.absorb(std::vector<std::uint8_t>{3, 1});
    const auto bytes = st.serialize();
    const std::vector<std::uint8_t> expect{'P', 'S', 'E', 'S', 2, 0, 0, 0, 5, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0};
    EXPECT_EQ(bytes, expect);
}

TEST(EncoderTest, Errors) {
    EncoderState st(8, 3);
    st.absorb(std::vector<std::uint8_t>{1, 2});
    try {
        st.finish();
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::underflow);
    }
    try {
        st.absorb(std::vector<std::uint8_t>{1, 2});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::overflow);
    }
    EncoderState narrow(2, 3);
    EXPECT_THROW(narrow.absorb(std::vector<std::uint8_t>{4}), Error);
    std::vector<std::uint8_t> junk{'X', 'X', 'X', 'X'};
    EXPECT_THROW(EncoderState::deserialize(junk), Error);
}

TEST(CompressionTest, CounterWidth) {
    EXPECT_EQ(counter_width(1), 1);
    EXPECT_EQ(counter_width(64), 7);
    EXPECT_EQ(counter_width(127), 7);
    EXPECT_EQ(counter_width(128), 8);
    EXPECT_EQ(counter_width(512), 10);
    EXPECT_EQ(counter_width(4096), 13);
}

TEST(CompressionTest, Values) {
    const CompressionStats a = compression_stats(8, 128);
    EXPECT_EQ(a.raw_bits, 1024u);
    EXPECT_EQ(a.encoded_bits, 64u);
    EXPECT_DOUBLE_EQ(a.ratio, 0.9375);
    EXPECT_EQ(a.short_encoded_bits, 56u);
    EXPECT_DOUBLE_EQ(a.short_ratio, 1.0 - 56.0 / 1024.0);
    const CompressionStats b = compression_stats(8, 512);
    EXPECT_EQ(b.encoded_bits, 80u);
    EXPECT_DOUBLE_EQ(b.ratio, 0.98046875);
    EXPECT_DOUBLE_EQ(compression_stats(8, 1).ratio, 0.0);
}

TEST(SparsityDumpTest, RoundTrip) {
    std::mt19937_64 rng(3);
    std::vector<SparsityVector> groups;
    for (int g = 0; g < 5; ++g) groups.push_back(count_sparsity(oracle::random_codes(64, rng), 8));
    std::stringstream ss;
    write_sparsity_dump(ss, groups);
    EXPECT_EQ(ss.str().size(), 16u + 5 * 8 * 4);
    EXPECT_EQ(ss.str().substr(0, 4), "PSPD");
    EXPECT_EQ(read_sparsity_dump(ss), groups);
}

TEST(SparsityDumpTest, RejectsTruncated) {
    std::vector<SparsityVector> groups{count_sparsity(std::vector<std::uint8_t>{1, 2, 3}, 8)};
    std::stringstream ss;
    write_sparsity_dump(ss, groups);
    std::string s = ss.str();
    s.pop_back();
    std::stringstream cut(s);
    EXPECT_THROW(read_sparsity_dump(cut), Error);
}

}  // namespace
}  // namespace pacsim
