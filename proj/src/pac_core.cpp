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

#include "pacsim/pac_core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "pacsim/error.hpp"

namespace pacsim {

namespace {

void check_bits(int bits) {
    if (bits < 1 || bits > kMaxBitWidth) {
        throw Error(ErrorCode::out_of_range, "operand bit width " + std::to_string(bits) + " outside [1, 8]");
    }
}

void check_operands(const BitPlanes &x, const BitPlanes &w) {
    if (x.group_len() != w.group_len()) {
        throw Error(ErrorCode::length_mismatch, "activation group length " + std::to_string(x.group_len()) +
                                                     " vs weight group length " + std::to_string(w.group_len()));
    }
    if (x.group_len() == 0) throw Error(ErrorCode::empty_group, "MAC over an empty group");
}

void check_map(const BitPlanes &x, const BitPlanes &w, const CycleMap &map) {
    if (map.act_bits() != x.bit_width() || map.weight_bits() != w.bit_width()) {
        throw Error(ErrorCode::shape_mismatch, "cycle map is " + std::to_string(map.act_bits()) + "x" +
                                                    std::to_string(map.weight_bits()) + " but operands are " +
                                                    std::to_string(x.bit_width()) + "x" +
                                                    std::to_string(w.bit_width()));
    }
}

// Ones of `plane` in element range [begin, end).
std::uint64_t count_range(std::span<const std::uint64_t> plane, std::size_t begin, std::size_t end) {
    std::uint64_t c = 0;
    std::size_t i = begin;
    while (i < end) {
        const std::size_t word = i / 64;
        const std::size_t lo = i % 64;
        const std::size_t hi = std::min<std::size_t>(64, lo + (end - i));
        std::uint64_t mask = hi == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << hi) - 1);
        mask &= ~((std::uint64_t{1} << lo) - 1);
        c += static_cast<std::uint64_t>(std::popcount(plane[word] & mask));
        i += hi - lo;
    }
    return c;
}

std::uint64_t deterministic_part(const BitPlanes &x, const BitPlanes &w, const CycleMap &map) {
    std::uint64_t acc = 0;
    for (int p = 0; p < x.bit_width(); ++p) {
        for (int q = 0; q < w.bit_width(); ++q) {
            if (map.is_deterministic(p, q)) acc += exact_binary_mac(x.plane(p), w.plane(q)) << (p + q);
        }
    }
    return acc;
}

// Numerator of sum_{(p,q) in A} 2^(p+q) S_x[p] S_w[q] / n over one group.
unsigned __int128 approximate_numerator(std::span<const std::uint32_t> sx, std::span<const std::uint32_t> sw,
                                        const CycleMap &map) {
    unsigned __int128 num = 0;
    for (int p = 0; p < map.act_bits(); ++p) {
        for (int q = 0; q < map.weight_bits(); ++q) {
            if (!map.is_deterministic(p, q)) {
                num += (static_cast<unsigned __int128>(sx[static_cast<std::size_t>(p)]) *
                        sw[static_cast<std::size_t>(q)])
                       << (p + q);
            }
        }
    }
    return num;
}

}  // namespace

CycleMap::CycleMap(int act_bits, int weight_bits, CycleDomain fill) : act_bits_(act_bits), weight_bits_(weight_bits) {
    check_bits(act_bits);
    check_bits(weight_bits);
    cells_.assign(static_cast<std::size_t>(act_bits * weight_bits), fill);
}

CycleMap CycleMap::operand_approx(int act_bits, int weight_bits, int approx_bits) {
    if (approx_bits < 0 || approx_bits > std::min(act_bits, weight_bits)) {
        throw Error(ErrorCode::out_of_range, "approx bits " + std::to_string(approx_bits) + " exceeds operand width");
    }
    CycleMap m(act_bits, weight_bits, CycleDomain::approximate);
    for (int p = approx_bits; p < act_bits; ++p) {
        for (int q = approx_bits; q < weight_bits; ++q) m.set(p, q, CycleDomain::deterministic);
    }
    return m;
}

std::size_t CycleMap::index(int p, int q) const {
    if (p < 0 || p >= act_bits_ || q < 0 || q >= weight_bits_) {
        throw Error(ErrorCode::out_of_range, "cycle (" + std::to_string(p) + ", " + std::to_string(q) + ") outside map");
    }
    return static_cast<std::size_t>(p * weight_bits_ + q);
}

int CycleMap::deterministic_count() const {
    return static_cast<int>(std::count(cells_.begin(), cells_.end(), CycleDomain::deterministic));
}

std::vector<std::pair<int, int>> CycleMap::deterministic_cells() const {
    std::vector<std::pair<int, int>> out;
    for (int p = 0; p < act_bits_; ++p) {
        for (int q = 0; q < weight_bits_; ++q) {
            if (is_deterministic(p, q)) out.emplace_back(p, q);
        }
    }
    return out;
}

void Thresholds::validate() const {
    const bool finite = std::isfinite(th0) && std::isfinite(th1) && std::isfinite(th2);
    if (!finite || th0 < 0.0 || th0 > th1 || th1 > th2 || th2 > 1.0) {
        throw Error(ErrorCode::out_of_range, "thresholds must satisfy 0 <= th0 <= th1 <= th2 <= 1");
    }
}

std::uint64_t exact_binary_mac(std::span<const std::uint64_t> x_plane, std::span<const std::uint64_t> w_plane) {
    if (x_plane.size() != w_plane.size()) {
        throw Error(ErrorCode::length_mismatch, "plane word counts differ");
    }
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < x_plane.size(); ++i) {
        c += static_cast<std::uint64_t>(std::popcount(x_plane[i] & w_plane[i]));
    }
    return c;
}

std::uint64_t exact_binary_mac(std::span<const std::uint8_t> x_bits, std::span<const std::uint8_t> w_bits) {
    if (x_bits.size() != w_bits.size()) {
        throw Error(ErrorCode::length_mismatch, "binary vectors of length " + std::to_string(x_bits.size()) +
                                                     " and " + std::to_string(w_bits.size()));
    }
    if (x_bits.empty()) throw Error(ErrorCode::empty_group, "binary MAC over an empty vector");
    auto x = BitPlanes::from_logical({std::vector<std::uint8_t>(x_bits.begin(), x_bits.end())});
    auto w = BitPlanes::from_logical({std::vector<std::uint8_t>(w_bits.begin(), w_bits.end())});
    return exact_binary_mac(x.plane(0), w.plane(0));
}

std::uint64_t exact_mac(const BitPlanes &x, const BitPlanes &w) {
    check_operands(x, w);
    std::uint64_t acc = 0;
    for (int p = 0; p < x.bit_width(); ++p) {
        for (int q = 0; q < w.bit_width(); ++q) acc += exact_binary_mac(x.plane(p), w.plane(q)) << (p + q);
    }
    return acc;
}

Rational pac_estimate(std::uint64_t sx, std::uint64_t sw, std::uint64_t n) {
    if (n == 0) throw Error(ErrorCode::out_of_range, "PAC estimate with n = 0");
    if (sx > n || sw > n) {
        throw Error(ErrorCode::out_of_range, "sparsity counts (" + std::to_string(sx) + ", " + std::to_string(sw) +
                                                  ") exceed n = " + std::to_string(n));
    }
    return Rational::from_wide(static_cast<__int128>(sx) * sw, static_cast<__int128>(n));
}

Rational hybrid_mac_exact(const BitPlanes &x, const BitPlanes &w, const CycleMap &map, const HybridOptions &opts) {
    check_operands(x, w);
    check_map(x, w, map);
    const std::size_t n = x.group_len();
    const std::size_t chunk = opts.pac_chunk.value_or(n);
    if (chunk == 0) throw Error(ErrorCode::out_of_range, "PAC chunk size must be positive");

    Rational acc = Rational::from_wide(deterministic_part(x, w, map), 1);
    std::vector<std::uint32_t> sx(static_cast<std::size_t>(x.bit_width()));
    std::vector<std::uint32_t> sw(static_cast<std::size_t>(w.bit_width()));
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        const std::size_t end = std::min(n, begin + chunk);
        for (int p = 0; p < x.bit_width(); ++p) {
            sx[static_cast<std::size_t>(p)] = static_cast<std::uint32_t>(count_range(x.plane(p), begin, end));
        }
        for (int q = 0; q < w.bit_width(); ++q) {
            sw[static_cast<std::size_t>(q)] = static_cast<std::uint32_t>(count_range(w.plane(q), begin, end));
        }
        acc += Rational::from_wide(static_cast<__int128>(approximate_numerator(sx, sw, map)),
                                   static_cast<__int128>(end - begin));
    }
    return acc;
}

std::int64_t hybrid_mac(const BitPlanes &x, const BitPlanes &w, const CycleMap &map, const HybridOptions &opts) {
    return hybrid_mac_exact(x, w, map, opts).round();
}

std::int64_t hybrid_mac(const BitPlanes &x, const BitPlanes &w, const SparsityVector &sx, const SparsityVector &sw,
                        const CycleMap &map) {
    check_operands(x, w);
    check_map(x, w, map);
    if (sx.group_len != x.group_len() || sw.group_len != w.group_len()) {
        throw Error(ErrorCode::length_mismatch, "sparsity vectors do not cover the operand group");
    }
    const auto det = static_cast<std::int64_t>(deterministic_part(x, w, map));
    const unsigned __int128 num = approximate_numerator(sx.counts, sw.counts, map);
    const unsigned __int128 n = x.group_len();
    // Non-negative, so half-away-from-zero is floor((2 num + n) / 2n).
    const auto approx = static_cast<std::int64_t>((2 * num + n) / (2 * n));
    return det + approx;
}

double speculate(const SparsityVector &sx) {
    if (sx.group_len == 0) throw Error(ErrorCode::empty_group, "speculation over an empty group");
    const double max_code = static_cast<double>((1u << sx.bit_width) - 1);
    return static_cast<double>(sx.weighted_sum()) / (static_cast<double>(sx.group_len) * max_code);
}

int demotion_count(double spec, const Thresholds &th) {
    if (spec > th.th2) return 0;
    if (spec > th.th1) return 2;
    if (spec > th.th0) return 4;
    return 6;
}

CycleMap configure_cycles(double spec, const Thresholds &th, const CycleMap &base) {
    if (!(spec >= 0.0 && spec <= 1.0)) {
        throw Error(ErrorCode::out_of_range, "speculation value " + std::to_string(spec) + " outside [0, 1]");
    }
    th.validate();
    auto cells = base.deterministic_cells();
    std::stable_sort(cells.begin(), cells.end(), [](const auto &a, const auto &b) {
        const int sa = a.first + a.second;
        const int sb = b.first + b.second;
        return sa != sb ? sa < sb : a.second < b.second;
    });
    const std::size_t demote = std::min<std::size_t>(static_cast<std::size_t>(demotion_count(spec, th)), cells.size());
    CycleMap out = base;
    for (std::size_t i = 0; i < demote; ++i) out.set(cells[i].first, cells[i].second, CycleDomain::approximate);
    return out;
}

}  // namespace pacsim
