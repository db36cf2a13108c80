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

#ifndef PACSIM_RATIONAL_HPP_
#define PACSIM_RATIONAL_HPP_

#include <cstdint>
#include <string>

#include "pacsim/error.hpp"

namespace pacsim {

/// Exact rational with a positive denominator, always kept in lowest terms.
/// Intermediate products go through 128-bit integers; a result that does not
/// fit back into 64 bits raises Error(overflow).
class Rational {
   public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) { set(num, den); }

    std::int64_t num() const noexcept { return num_; }
    std::int64_t den() const noexcept { return den_; }

    double to_double() const noexcept { return static_cast<double>(num_) / static_cast<double>(den_); }

    /// Nearest integer, ties rounded away from zero.
    std::int64_t round() const noexcept {
        const std::int64_t twice_abs = 2 * (num_ < 0 ? -num_ : num_);
        const std::int64_t mag = (twice_abs + den_) / (2 * den_);
        return num_ < 0 ? -mag : mag;
    }

    friend Rational operator+(const Rational &a, const Rational &b) {
        const __int128 n = static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_;
        const __int128 d = static_cast<__int128>(a.den_) * b.den_;
        return from_wide(n, d);
    }
    friend Rational operator*(const Rational &a, const Rational &b) {
        return from_wide(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
    }
    Rational &operator+=(const Rational &o) { return *this = *this + o; }

    friend bool operator==(const Rational &a, const Rational &b) noexcept {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend bool operator<(const Rational &a, const Rational &b) noexcept {
        return static_cast<__int128>(a.num_) * b.den_ < static_cast<__int128>(b.num_) * a.den_;
    }
    friend bool operator<=(const Rational &a, const Rational &b) noexcept { return !(b < a); }

    std::string to_string() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }

    /// Reduces a wide fraction; throws Error(overflow) if it does not fit.
    static Rational from_wide(__int128 n, __int128 d) {
        if (d == 0) throw Error(ErrorCode::out_of_range, "zero denominator");
        if (d < 0) {
            n = -n;
            d = -d;
        }
        const __int128 g = gcd_wide(n < 0 ? -n : n, d);
        if (g > 1) {
            n /= g;
            d /= g;
        }
        constexpr __int128 lim = static_cast<__int128>(INT64_MAX);
        if (n > lim || n < -lim || d > lim) throw Error(ErrorCode::overflow, "rational does not fit in 64 bits");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

   private:
    static __int128 gcd_wide(__int128 a, __int128 b) {
        while (b != 0) {
            const __int128 t = a % b;
            a = b;
            b = t;
        }
        return a == 0 ? 1 : a;
    }

    void set(std::int64_t num, std::int64_t den) { *this = from_wide(num, den); }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

}  // namespace pacsim

#endif  // PACSIM_RATIONAL_HPP_
