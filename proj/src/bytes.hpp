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

#ifndef PACSIM_BYTES_HPP_
#define PACSIM_BYTES_HPP_

// Little-endian field helpers shared by the binary file formats.

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

#include "pacsim/error.hpp"

namespace pacsim::detail {

inline void put_u32(std::vector<std::uint8_t> &out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
    if (offset + 4 > in.size()) throw Error(ErrorCode::io, "truncated record");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[offset + static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

inline void put_f32(std::vector<std::uint8_t> &out, float f) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
}

inline float get_f32(std::span<const std::uint8_t> in, std::size_t offset) {
    const std::uint32_t bits = get_u32(in, offset);
    float f = 0;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

}  // namespace pacsim::detail

#endif  // PACSIM_BYTES_HPP_
