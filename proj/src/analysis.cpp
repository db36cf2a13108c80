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

#include "pacsim/analysis.hpp"

#include <bit>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "pacsim/error.hpp"
#include "pacsim/inference.hpp"
#include "pacsim/parallel.hpp"
#include "pacsim/rng.hpp"

namespace pacsim {

namespace {

std::size_t target_ones(std::size_t n, double ratio) {
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw Error(ErrorCode::out_of_range, "sparsity ratio " + std::to_string(ratio) + " outside [0, 1]");
    }
    return static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
}

// Packed random vector. Fixed-count placement uses Floyd's sampling, which
// yields a uniformly random k-subset with exactly k draws.
void fill_packed(std::vector<std::uint64_t> &words, std::size_t n, double ratio, std::uint64_t seed, BitModel model) {
    words.assign((n + 63) / 64, 0);
    SplitMix64 rng(seed);
    auto test = [&](std::size_t i) { return (words[i / 64] >> (i % 64)) & 1u; };
    auto set = [&](std::size_t i) { words[i / 64] |= std::uint64_t{1} << (i % 64); };
    if (model == BitModel::iid) {
        if (!(ratio >= 0.0 && ratio <= 1.0)) throw Error(ErrorCode::out_of_range, "sparsity ratio outside [0, 1]");
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.uniform() < ratio) set(i);
        }
        return;
    }
    const std::size_t k = target_ones(n, ratio);
    for (std::size_t j = n - k; j < n; ++j) {
        const std::size_t t = rng.below(j + 1);
        set(test(t) ? j : t);
    }
}

struct ErrorSums {
    std::int64_t sum = 0;
    unsigned __int128 sq = 0;
};

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

}  // namespace

const char *bit_model_name(BitModel m) { return m == BitModel::iid ? "iid" : "fixed"; }

BitModel parse_bit_model(const std::string &name) {
    if (name == "fixed" || name == "fixed_count") return BitModel::fixed_count;
    if (name == "iid") return BitModel::iid;
    throw Error(ErrorCode::out_of_range, "unknown bit model '" + name + "'");
}

std::vector<std::uint8_t> random_bitvec(std::size_t n, double sparsity_ratio, std::uint64_t seed, BitModel model) {
    std::vector<std::uint64_t> words;
    fill_packed(words, n, sparsity_ratio, seed, model);
    std::vector<std::uint8_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = (words[i / 64] >> (i % 64)) & 1u;
    return out;
}

double hypergeometric_std(std::size_t n, std::size_t sx, std::size_t sw) {
    if (n < 2) throw Error(ErrorCode::out_of_range, "hypergeometric std needs n >= 2");
    if (sx > n || sw > n) throw Error(ErrorCode::out_of_range, "counts exceed n");
    const long double N = static_cast<long double>(n);
    const long double v = static_cast<long double>(sx) * static_cast<long double>(sw) *
                          static_cast<long double>(n - sx) * static_cast<long double>(n - sw) / (N * N * (N - 1));
    return static_cast<double>(std::sqrt(v));
}

RmseResult rmse_experiment(const RmseConfig &cfg) {
    if (cfg.n == 0) throw Error(ErrorCode::empty_group, "rmse experiment with n = 0");
    if (cfg.trials == 0) throw Error(ErrorCode::out_of_range, "rmse experiment needs at least one trial");
    if (!(cfg.s_x >= 0.0 && cfg.s_x <= 1.0 && cfg.s_w >= 0.0 && cfg.s_w <= 1.0)) {
        throw Error(ErrorCode::out_of_range, "sparsity ratios must lie in [0, 1]");
    }
    const std::size_t n = cfg.n;
    const int blocks = std::max(1, cfg.workers);
    std::vector<ErrorSums> partial(static_cast<std::size_t>(blocks));

    parallel_blocks(cfg.trials, blocks, [&](std::size_t block, std::size_t begin, std::size_t end) {
        std::vector<std::uint64_t> x;
        std::vector<std::uint64_t> w;
        ErrorSums acc;
        for (std::size_t t = begin; t < end; ++t) {
            fill_packed(x, n, cfg.s_x, derive_seed(cfg.seed, t, 0), cfg.model);
            fill_packed(w, n, cfg.s_w, derive_seed(cfg.seed, t, 1), cfg.model);
            std::int64_t sx = 0;
            std::int64_t sw = 0;
            std::int64_t overlap = 0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                sx += std::popcount(x[i]);
                sw += std::popcount(w[i]);
                overlap += std::popcount(x[i] & w[i]);
            }
            // Error scaled by n keeps everything integral: n * (ov - sx sw / n).
            const std::int64_t e = static_cast<std::int64_t>(n) * overlap - sx * sw;
            acc.sum += e;
            acc.sq += static_cast<unsigned __int128>(static_cast<__int128>(e) * e);
        }
        partial[block] = acc;
    });

    ErrorSums total;
    for (const auto &p : partial) {
        total.sum += p.sum;
        total.sq += p.sq;
    }
    RmseResult r;
    r.n = n;
    r.s_x = cfg.s_x;
    r.s_w = cfg.s_w;
    r.trials = cfg.trials;
    r.seed = cfg.seed;
    const long double nn = static_cast<long double>(n);
    const long double trials = static_cast<long double>(cfg.trials);
    r.rmse_lsb = static_cast<double>(std::sqrt(static_cast<long double>(total.sq) / trials) / nn);
    r.rmse_pct = 100.0 * r.rmse_lsb / static_cast<double>(n);
    r.bias = static_cast<double>(static_cast<long double>(total.sum) / trials / nn);
    if (cfg.model == BitModel::fixed_count && n >= 2) {
        r.analytic_lsb = hypergeometric_std(n, target_ones(n, cfg.s_x), target_ones(n, cfg.s_w));
    } else {
        r.analytic_lsb = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

std::optional<double> loglog_slope(std::span<const double> xs, std::span<const double> ys) {
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;
        const double lx = std::log(xs[i]);
        const double ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    if (m < 2) return std::nullopt;
    const double denom = static_cast<double>(m) * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (static_cast<double>(m) * sxy - sx * sy) / denom;
}

SweepResult rmse_sweep(std::span<const std::size_t> n_list, const RmseConfig &base) {
    if (n_list.empty()) throw Error(ErrorCode::out_of_range, "sweep needs at least one DP length");
    SweepResult out;
    std::vector<double> xs;
    std::vector<double> ys;
    for (auto n : n_list) {
        RmseConfig cfg = base;
        cfg.n = n;
        out.rows.push_back(rmse_experiment(cfg));
        xs.push_back(static_cast<double>(n));
        ys.push_back(out.rows.back().rmse_pct);
    }
    out.slope = loglog_slope(xs, ys);
    return out;
}

std::vector<double> bit_sparsity_profile(const QuantTensor &t) {
    if (t.size() == 0) throw Error(ErrorCode::empty_group, "cannot profile an empty tensor");
    const SparsityVector s = count_sparsity(t.values(), t.bit_width());
    std::vector<double> out;
    for (int p = 0; p < s.bit_width; ++p) out.push_back(s.ratio(p));
    return out;
}

std::vector<ProfileRow> profile_model_sparsity(const ModelManifest &model, std::span<const QuantTensor> inputs,
                                               int workers) {
    std::vector<ProfileRow> rows;
    const std::size_t L = model.layers.size();
    std::vector<std::vector<std::uint64_t>> act_counts(L);
    std::vector<std::uint64_t> act_total(L, 0);
    for (const auto &input : inputs) {
        QuantTensor x = input;
        for (std::size_t i = 0; i < L; ++i) {
            if (x.size() == 0) throw Error(ErrorCode::empty_group, "layer " + std::to_string(i) + " has an empty input");
            const SparsityVector s = count_sparsity(x.values(), x.bit_width());
            act_counts[i].resize(s.counts.size(), 0);
            for (std::size_t p = 0; p < s.counts.size(); ++p) act_counts[i][p] += s.counts[p];
            act_total[i] += x.size();
            x = run_layer(x, model.layers[i], ExecOptions{workers, false});
        }
    }
    for (std::size_t i = 0; i < L; ++i) {
        const auto &l = model.layers[i];
        const auto w = bit_sparsity_profile(l.weights);
        for (std::size_t p = 0; p < w.size(); ++p) rows.push_back({l.name, "weight", static_cast<int>(p), w[p]});
        if (act_total[i] > 0) {
            for (std::size_t p = 0; p < act_counts[i].size(); ++p) {
                rows.push_back({l.name, "activation", static_cast<int>(p),
                                static_cast<double>(act_counts[i][p]) / static_cast<double>(act_total[i])});
            }
        }
    }
    return rows;
}

void write_rmse_csv(std::ostream &out, std::span<const RmseResult> rows, const std::optional<double> &slope,
                    bool with_slope) {
    out << "n,s_x,s_w,trials,seed,rmse_lsb,rmse_pct,bias,analytic_lsb";
    if (with_slope) out << ",slope";
    out << "\n";
    for (const auto &r : rows) {
        out << r.n << "," << fmt(r.s_x) << "," << fmt(r.s_w) << "," << r.trials << "," << r.seed << ","
            << fmt(r.rmse_lsb) << "," << fmt(r.rmse_pct) << "," << fmt(r.bias) << ","
            << (std::isnan(r.analytic_lsb) ? std::string("nan") : fmt(r.analytic_lsb));
        if (with_slope) out << "," << (slope ? fmt(*slope) : std::string("undefined"));
        out << "\n";
    }
}

void write_profile_csv(std::ostream &out, std::span<const ProfileRow> rows) {
    out << "layer,tensor,bit,ratio\n";
    for (const auto &r : rows) out << r.layer << "," << r.tensor << "," << r.bit << "," << fmt(r.ratio) << "\n";
}

}  // namespace pacsim
