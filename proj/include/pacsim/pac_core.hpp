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

#ifndef PACSIM_PAC_CORE_HPP_
#define PACSIM_PAC_CORE_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pacsim/bitplane.hpp"
#include "pacsim/rational.hpp"

namespace pacsim {

enum class CycleDomain : std::uint8_t { deterministic, approximate };

/// Partition of the P x Q grid of (activation bit, weight bit) cycles into
/// a deterministic set computed exactly and an approximate set computed
/// from bit-level sparsity.
class CycleMap {
   public:
    CycleMap() = default;
    CycleMap(int act_bits, int weight_bits, CycleDomain fill);

    /// Operand-based approximation: (p, q) is deterministic iff both p and q
    /// are at or above `approx_bits`. approx_bits = 0 gives the all-exact map.
    static CycleMap operand_approx(int act_bits, int weight_bits, int approx_bits);

    int act_bits() const noexcept { return act_bits_; }
    int weight_bits() const noexcept { return weight_bits_; }

    CycleDomain at(int p, int q) const { return cells_[index(p, q)]; }
    void set(int p, int q, CycleDomain d) { cells_[index(p, q)] = d; }
    bool is_deterministic(int p, int q) const { return at(p, q) == CycleDomain::deterministic; }

    int deterministic_count() const;
    int approximate_count() const { return act_bits_ * weight_bits_ - deterministic_count(); }

    /// (p, q) pairs of the deterministic set, row-major.
    std::vector<std::pair<int, int>> deterministic_cells() const;

    friend bool operator==(const CycleMap &, const CycleMap &) = default;

   private:
    std::size_t index(int p, int q) const;

    int act_bits_ = 0;
    int weight_bits_ = 0;
    std::vector<CycleDomain> cells_;
};

/// Speculation thresholds, 0 <= th0 <= th1 <= th2 <= 1.
struct Thresholds {
    double th0 = 0.0;
    double th1 = 0.0;
    double th2 = 0.0;

    /// Throws Error(out_of_range) when the ordering or bounds are violated.
    void validate() const;
};

/// Popcount of the elementwise AND of two binary planes.
std::uint64_t exact_binary_mac(std::span<const std::uint64_t> x_plane, std::span<const std::uint64_t> w_plane);

/// Logical-bit overload; throws Error(length_mismatch) or Error(malformed_plane).
std::uint64_t exact_binary_mac(std::span<const std::uint8_t> x_bits, std::span<const std::uint8_t> w_bits);

/// Bit-serial MAC over all P x Q cycles; equals the integer dot product.
std::uint64_t exact_mac(const BitPlanes &x, const BitPlanes &w);

/// Point estimate S_x * S_w / n of one binary MAC cycle.
Rational pac_estimate(std::uint64_t sx, std::uint64_t sw, std::uint64_t n);

struct HybridOptions {
    /// When set, sparsity is counted over consecutive chunks of this many
    /// elements and each chunk contributes its own estimate.
    std::optional<std::size_t> pac_chunk;
};

/// Hybrid MAC with the approximate part kept as an exact rational.
Rational hybrid_mac_exact(const BitPlanes &x, const BitPlanes &w, const CycleMap &map, const HybridOptions &opts = {});

/// Hybrid MAC rounded once to the nearest integer (ties away from zero).
std::int64_t hybrid_mac(const BitPlanes &x, const BitPlanes &w, const CycleMap &map, const HybridOptions &opts = {});

/// Fast path for callers that already hold both sparsity vectors over the
/// full group (no chunking).
std::int64_t hybrid_mac(const BitPlanes &x, const BitPlanes &w, const SparsityVector &sx, const SparsityVector &sw,
                        const CycleMap &map);

/// Normalised weighted activation sparsity in [0, 1]:
/// sum_p 2^p S_x[p] / (N * (2^P - 1)), i.e. mean code over max code.
double speculate(const SparsityVector &sx);

/// Number of deterministic cells demoted for a given speculation value:
/// 0 above th2, 2 in (th1, th2], 4 in (th0, th1], 6 at or below th0.
int demotion_count(double spec, const Thresholds &th);

/// Demotes deterministic cells of `base` to approximate in ascending order of
/// p + q, ties broken by smaller q. Throws Error(out_of_range) for spec
/// outside [0, 1].
CycleMap configure_cycles(double spec, const Thresholds &th, const CycleMap &base);

}  // namespace pacsim

#endif  // PACSIM_PAC_CORE_HPP_
