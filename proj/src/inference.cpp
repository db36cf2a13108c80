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

#include "pacsim/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>

#include "bytes.hpp"
#include "json.hpp"
#include "pacsim/encoder.hpp"
#include "pacsim/error.hpp"
#include "pacsim/parallel.hpp"

namespace pacsim {

namespace {

using nlohmann::json;

std::string shape_str(const Shape &s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
    return out + "]";
}

// Per-filter weight operands, prepared once per layer call.
struct WeightOperands {
    std::vector<BitPlanes> planes;
    std::vector<SparsityVector> sparsity;
    std::vector<std::int64_t> sums;
};

WeightOperands prepare_weights(const LayerSpec &layer, std::size_t n) {
    WeightOperands w;
    const auto values = layer.weights.values();
    for (std::size_t f = 0; f < layer.out_channels; ++f) {
        auto row = values.subspan(f * n, n);
        BitPlanes planes;
        planes.assign(row, layer.weights.bit_width());
        auto s = count_sparsity(planes);
        w.sums.push_back(static_cast<std::int64_t>(s.weighted_sum()));
        w.sparsity.push_back(std::move(s));
        w.planes.push_back(std::move(planes));
    }
    return w;
}

CycleMap base_map(const LayerSpec &layer, int act_bits) {
    const int wbits = layer.weights.bit_width();
    if (layer.mode == MacMode::exact) return CycleMap(act_bits, wbits, CycleDomain::deterministic);
    return CycleMap::operand_approx(act_bits, wbits, layer.approx_bits);
}

// MACs of one input window against every filter. Writes C_out accumulators
// starting at `out_offset`.
class WindowMac {
   public:
    WindowMac(const LayerSpec &layer, const WeightOperands &w, int act_bits, int zx, bool with_exact)
        : layer_(layer), w_(w), act_bits_(act_bits), zx_(zx), zw_(layer.weights.zero_point()),
          with_exact_(with_exact), base_(base_map(layer, act_bits)) {}

    double run(std::span<const std::uint8_t> window, Accumulators &acc, std::size_t out_offset) {
        planes_.assign(window, act_bits_);
        const SparsityVector sx = count_sparsity(planes_);
        const double spec = speculate(sx);
        const auto n = static_cast<std::int64_t>(window.size());
        // Sum of activation codes straight from the encoder counts.
        const auto sum_x = static_cast<std::int64_t>(sx.weighted_sum());

        const bool hybrid = layer_.mode == MacMode::hybrid;
        const CycleMap map = hybrid && layer_.thresholds ? configure_cycles(spec, *layer_.thresholds, base_) : base_;
        const auto cells = static_cast<std::uint8_t>(map.deterministic_count());

        for (std::size_t f = 0; f < layer_.out_channels; ++f) {
            const std::int64_t correction = -zw_ * sum_x - zx_ * w_.sums[f] + n * zx_ * zw_;
            std::int64_t raw = 0;
            std::int64_t exact = 0;
            bool have_exact = false;
            if (!hybrid) {
                raw = static_cast<std::int64_t>(exact_mac(planes_, w_.planes[f]));
                exact = raw;
                have_exact = true;
            } else if (layer_.pac_chunk) {
                raw = hybrid_mac(planes_, w_.planes[f], map, HybridOptions{layer_.pac_chunk});
            } else {
                raw = hybrid_mac(planes_, w_.planes[f], sx, w_.sparsity[f], map);
            }
            acc.values[out_offset + f] = raw + correction;
            acc.digital_cells[out_offset + f] = cells;
            if (with_exact_) {
                if (!have_exact) exact = static_cast<std::int64_t>(exact_mac(planes_, w_.planes[f]));
                acc.exact_values[out_offset + f] = exact + correction;
            }
        }
        return spec;
    }

   private:
    const LayerSpec &layer_;
    const WeightOperands &w_;
    int act_bits_;
    std::int64_t zx_;
    std::int64_t zw_;
    bool with_exact_;
    CycleMap base_;
    BitPlanes planes_;
};

void init_acc(Accumulators &acc, Shape shape, std::size_t windows, double scale, bool with_exact) {
    const std::size_t total = shape_elements(shape);
    acc.shape = std::move(shape);
    acc.values.assign(total, 0);
    acc.digital_cells.assign(total, 0);
    acc.spec.assign(windows, 0.0);
    acc.scale = scale;
    if (with_exact) acc.exact_values.assign(total, 0);
}

void check_mode(const LayerSpec &layer, int act_bits) {
    if (layer.mode == MacMode::hybrid &&
        (layer.approx_bits < 0 || layer.approx_bits > std::min(act_bits, layer.weights.bit_width()))) {
        throw Error(ErrorCode::out_of_range, "approx_bits " + std::to_string(layer.approx_bits) +
                                                  " exceeds operand bit widths");
    }
}

std::vector<std::uint8_t> read_file(const std::filesystem::path &p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path &p, const std::vector<std::uint8_t> &bytes) {
    std::ofstream out(p, std::ios::binary);
    out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::io, "cannot write " + p.string());
}

std::vector<float> read_f32_file(const std::filesystem::path &p, std::size_t count, const std::string &what) {
    const auto bytes = read_file(p);
    if (bytes.size() != 4 * count) {
        throw Error(ErrorCode::manifest, what + " file " + p.filename().string() + " holds " +
                                             std::to_string(bytes.size()) + " bytes, expected " +
                                             std::to_string(4 * count));
    }
    std::vector<float> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = detail::get_f32(bytes, 4 * i);
    return out;
}

std::vector<std::uint8_t> f32_bytes(const std::vector<float> &v) {
    std::vector<std::uint8_t> out;
    out.reserve(4 * v.size());
    for (float f : v) detail::put_f32(out, f);
    return out;
}

const char *kind_name(LayerKind k) { return k == LayerKind::conv2d ? "conv2d" : "linear"; }
const char *act_name(ActivationFn a) { return a == ActivationFn::relu ? "relu" : "none"; }
const char *pool_name(PoolKind p) {
    switch (p) {
        case PoolKind::max:
            return "max";
        case PoolKind::global_avg:
            return "global_avg";
        case PoolKind::none:
            break;
    }
    return "none";
}

template <typename Enum>
Enum parse_enum(const json &j, const char *key, std::initializer_list<std::pair<const char *, Enum>> options,
                Enum fallback) {
    if (!j.contains(key)) return fallback;
    const auto s = j.at(key).get<std::string>();
    for (const auto &[name, value] : options) {
        if (s == name) return value;
    }
    throw Error(ErrorCode::manifest, std::string("unknown ") + key + " '" + s + "'");
}

Shape json_shape(const json &j) { return j.get<Shape>(); }

}  // namespace

const char *mac_mode_name(MacMode m) { return m == MacMode::exact ? "exact" : "hybrid"; }

std::size_t LayerSpec::reduction_length() const {
    if (kind == LayerKind::linear) return in_shape.empty() ? 0 : shape_elements(in_shape);
    return in_shape.size() == 3 ? kernel * kernel * in_shape[2] : 0;
}

Shape LayerSpec::out_shape() const {
    if (kind == LayerKind::linear) return {out_channels};
    if (in_shape.size() != 3 || stride == 0 || in_shape[0] + 2 * padding < kernel ||
        in_shape[1] + 2 * padding < kernel) {
        throw Error(ErrorCode::shape_mismatch, "conv2d geometry does not fit input " + shape_str(in_shape));
    }
    return {(in_shape[0] + 2 * padding - kernel) / stride + 1, (in_shape[1] + 2 * padding - kernel) / stride + 1,
            out_channels};
}

Shape LayerSpec::pooled_shape() const {
    Shape s = out_shape();
    if (pool == PoolKind::none) return s;
    if (s.size() != 3) throw Error(ErrorCode::shape_mismatch, "pooling needs an H x W x C output");
    if (pool == PoolKind::global_avg) return {1, 1, s[2]};
    if (pool_size == 0 || s[0] < pool_size || s[1] < pool_size) {
        throw Error(ErrorCode::shape_mismatch, "pool size does not fit output " + shape_str(s));
    }
    return {s[0] / pool_size, s[1] / pool_size, s[2]};
}

void ModelManifest::validate() const {
    if (layers.empty()) throw Error(ErrorCode::manifest, "model has no layers");
    if (!(input.scale > 0.0) || input.zero_point < 0 || input.zero_point > 255) {
        throw Error(ErrorCode::manifest, "input quantisation parameters invalid");
    }
    Shape current = input_shape;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto &l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + l.name + "): ";
        try {
            if (l.out_channels == 0) throw Error(ErrorCode::manifest, "out_channels is 0");
            if (l.kind == LayerKind::conv2d) {
                if (l.in_shape != current) {
                    throw Error(ErrorCode::manifest, "input shape " + shape_str(l.in_shape) + " but previous layer gives " +
                                                         shape_str(current));
                }
                const Shape ws{l.out_channels, l.kernel, l.kernel, l.in_shape.at(2)};
                if (l.weights.shape() != ws) {
                    throw Error(ErrorCode::manifest, "weights " + shape_str(l.weights.shape()) + ", expected " + shape_str(ws));
                }
            } else {
                if (l.in_shape.size() != 1 || l.in_shape[0] != shape_elements(current)) {
                    throw Error(ErrorCode::manifest, "fan-in " + shape_str(l.in_shape) + " does not match previous output " +
                                                         shape_str(current));
                }
                const Shape ws{l.out_channels, l.in_shape[0]};
                if (l.weights.shape() != ws) {
                    throw Error(ErrorCode::manifest, "weights " + shape_str(l.weights.shape()) + ", expected " + shape_str(ws));
                }
            }
            if (l.reduction_length() == 0) throw Error(ErrorCode::manifest, "empty reduction");
            if (l.bn_scale.size() != l.out_channels || l.bn_bias.size() != l.out_channels) {
                throw Error(ErrorCode::manifest, "batch-norm parameters do not match out_channels");
            }
            if (!(l.output.scale > 0.0) || l.output.zero_point < 0 || l.output.zero_point > 255) {
                throw Error(ErrorCode::manifest, "output quantisation parameters invalid");
            }
            if (l.approx_bits < 0 || l.approx_bits > std::min(8, l.weights.bit_width())) {
                throw Error(ErrorCode::manifest, "approx_bits out of range");
            }
            if (l.thresholds) l.thresholds->validate();
            if (l.pac_chunk && *l.pac_chunk == 0) throw Error(ErrorCode::manifest, "pac_chunk must be positive");
            current = l.pooled_shape();
        } catch (const Error &e) {
            throw Error(ErrorCode::manifest, where + e.detail());
        }
    }
}

ModelManifest load_model(const std::filesystem::path &dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception &e) {
        throw Error(ErrorCode::manifest, std::string("manifest.json: ") + e.what());
    }

    ModelManifest m;
    std::size_t index = 0;
    try {
        if (j.value("format", "") != "pacsim-model") throw Error(ErrorCode::manifest, "not a pacsim-model manifest");
        const auto &ji = j.at("input");
        m.input_shape = json_shape(ji.at("shape"));
        m.input = {ji.at("scale").get<double>(), ji.at("zero_point").get<int>()};
        for (const auto &jl : j.at("layers")) {
            LayerSpec l;
            l.name = jl.value("name", "layer" + std::to_string(index));
            l.kind = parse_enum<LayerKind>(jl, "kind", {{"conv2d", LayerKind::conv2d}, {"linear", LayerKind::linear}},
                                           LayerKind::conv2d);
            l.in_shape = json_shape(jl.at("in_shape"));
            l.out_channels = jl.at("out_channels").get<std::size_t>();
            l.kernel = jl.value("kernel", std::size_t{1});
            l.stride = jl.value("stride", std::size_t{1});
            l.padding = jl.value("padding", std::size_t{0});
            const auto &jw = jl.at("weights");
            const Shape ws = json_shape(jw.at("shape"));
            auto wbytes = read_file(dir / jw.at("file").get<std::string>());
            if (wbytes.size() != shape_elements(ws)) {
                throw Error(ErrorCode::manifest, "weight file holds " + std::to_string(wbytes.size()) +
                                                     " bytes, shape needs " + std::to_string(shape_elements(ws)));
            }
            l.weights = QuantTensor(ws, std::move(wbytes), jw.value("bit_width", 8), jw.at("scale").get<double>(),
                                    jw.at("zero_point").get<int>());
            l.mode = parse_enum<MacMode>(jl, "mode", {{"exact", MacMode::exact}, {"hybrid", MacMode::hybrid}},
                                         MacMode::exact);
            l.approx_bits = jl.value("approx_bits", 4);
            if (jl.contains("thresholds")) {
                const auto t = jl.at("thresholds").get<std::vector<double>>();
                if (t.size() != 3) throw Error(ErrorCode::manifest, "thresholds needs three values");
                l.thresholds = Thresholds{t[0], t[1], t[2]};
            }
            if (jl.contains("pac_chunk")) l.pac_chunk = jl.at("pac_chunk").get<std::size_t>();
            const auto &jb = jl.at("bn");
            l.bn_scale = read_f32_file(dir / jb.at("scale_file").get<std::string>(), l.out_channels, "bn scale");
            l.bn_bias = read_f32_file(dir / jb.at("bias_file").get<std::string>(), l.out_channels, "bn bias");
            l.activation = parse_enum<ActivationFn>(jl, "activation",
                                                    {{"relu", ActivationFn::relu}, {"none", ActivationFn::none}},
                                                    ActivationFn::none);
            const auto &jo = jl.at("output");
            l.output = {jo.at("scale").get<double>(), jo.at("zero_point").get<int>()};
            if (jl.contains("pool")) {
                const auto &jp = jl.at("pool");
                l.pool = parse_enum<PoolKind>(
                    jp, "kind",
                    {{"none", PoolKind::none}, {"max", PoolKind::max}, {"global_avg", PoolKind::global_avg}},
                    PoolKind::none);
                l.pool_size = jp.value("size", std::size_t{2});
            }
            m.layers.push_back(std::move(l));
            ++index;
        }
    } catch (const json::exception &e) {
        throw Error(ErrorCode::manifest, "layer " + std::to_string(index) + ": " + e.what());
    } catch (const Error &e) {
        if (e.code() == ErrorCode::manifest && e.detail().rfind("layer", 0) == 0) throw;
        throw Error(ErrorCode::manifest, "layer " + std::to_string(index) + ": " + e.detail());
    }
    m.validate();
    return m;
}

void save_model(const ModelManifest &model, const std::filesystem::path &dir) {
    model.validate();
    std::filesystem::create_directories(dir);
    json j;
    j["format"] = "pacsim-model";
    j["version"] = 1;
    j["input"] = {{"shape", model.input_shape}, {"scale", model.input.scale}, {"zero_point", model.input.zero_point}};
    j["layers"] = json::array();
    for (const auto &l : model.layers) {
        const std::string wfile = l.name + ".weight.u8";
        const std::string sfile = l.name + ".bn_scale.f32";
        const std::string bfile = l.name + ".bn_bias.f32";
        write_file(dir / wfile, {l.weights.values().begin(), l.weights.values().end()});
        write_file(dir / sfile, f32_bytes(l.bn_scale));
        write_file(dir / bfile, f32_bytes(l.bn_bias));
        json jl;
        jl["name"] = l.name;
        jl["kind"] = kind_name(l.kind);
        jl["in_shape"] = l.in_shape;
        jl["out_channels"] = l.out_channels;
        if (l.kind == LayerKind::conv2d) {
            jl["kernel"] = l.kernel;
            jl["stride"] = l.stride;
            jl["padding"] = l.padding;
        }
        jl["weights"] = {{"file", wfile},
                         {"shape", l.weights.shape()},
                         {"bit_width", l.weights.bit_width()},
                         {"scale", l.weights.scale()},
                         {"zero_point", l.weights.zero_point()}};
        jl["bn"] = {{"scale_file", sfile}, {"bias_file", bfile}};
        jl["activation"] = act_name(l.activation);
        jl["output"] = {{"scale", l.output.scale}, {"zero_point", l.output.zero_point}};
        jl["mode"] = mac_mode_name(l.mode);
        jl["approx_bits"] = l.approx_bits;
        if (l.thresholds) jl["thresholds"] = {l.thresholds->th0, l.thresholds->th1, l.thresholds->th2};
        if (l.pac_chunk) jl["pac_chunk"] = *l.pac_chunk;
        if (l.pool != PoolKind::none) jl["pool"] = {{"kind", pool_name(l.pool)}, {"size", l.pool_size}};
        j["layers"].push_back(std::move(jl));
    }
    std::ofstream out(dir / "manifest.json");
    out << j.dump(2) << "\n";
    if (!out) throw Error(ErrorCode::io, "cannot write manifest.json");
}

std::vector<QuantTensor> load_inputs(const ModelManifest &model, const std::filesystem::path &file) {
    const auto bytes = read_file(file);
    const std::size_t size = shape_elements(model.input_shape);
    if (size == 0 || bytes.empty() || bytes.size() % size != 0) {
        throw Error(ErrorCode::io, file.filename().string() + " holds " + std::to_string(bytes.size()) +
                                       " bytes, not a multiple of the input size " + std::to_string(size));
    }
    std::vector<QuantTensor> out;
    for (std::size_t off = 0; off < bytes.size(); off += size) {
        out.emplace_back(model.input_shape,
                         std::vector<std::uint8_t>(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                                                   bytes.begin() + static_cast<std::ptrdiff_t>(off + size)),
                         8, model.input.scale, model.input.zero_point);
    }
    return out;
}

void save_inputs(const std::vector<QuantTensor> &inputs, const std::filesystem::path &file) {
    std::vector<std::uint8_t> bytes;
    for (const auto &t : inputs) bytes.insert(bytes.end(), t.values().begin(), t.values().end());
    write_file(file, bytes);
}

Accumulators conv2d(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts) {
    if (layer.kind != LayerKind::conv2d) throw Error(ErrorCode::shape_mismatch, "conv2d called on a linear layer");
    if (input.shape() != layer.in_shape) {
        throw Error(ErrorCode::shape_mismatch, "input " + shape_str(input.shape()) + " vs layer input " +
                                                    shape_str(layer.in_shape));
    }
    check_mode(layer, input.bit_width());
    const std::size_t H = layer.in_shape[0];
    const std::size_t W = layer.in_shape[1];
    const std::size_t C = layer.in_shape[2];
    const std::size_t K = layer.kernel;
    const std::size_t n = layer.reduction_length();
    if (layer.weights.shape() != Shape{layer.out_channels, K, K, C}) {
        throw Error(ErrorCode::shape_mismatch, "weights " + shape_str(layer.weights.shape()));
    }
    const Shape out = layer.out_shape();
    const std::size_t OH = out[0];
    const std::size_t OW = out[1];

    Accumulators acc;
    init_acc(acc, out, OH * OW, input.scale() * layer.weights.scale(), opts.with_exact_reference);
    const WeightOperands w = prepare_weights(layer, n);
    const auto zx = input.zero_point();
    const auto values = input.values();

    parallel_blocks(OH * OW, opts.workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        WindowMac mac(layer, w, input.bit_width(), zx, opts.with_exact_reference);
        std::vector<std::uint8_t> window(n);
        for (std::size_t pix = begin; pix < end; ++pix) {
            const std::size_t oy = pix / OW;
            const std::size_t ox = pix % OW;
            // im2col in kernel-row, kernel-col, input-channel order; padding
            // holds the input zero point so it dequantises to 0.
            std::size_t k = 0;
            for (std::size_t ky = 0; ky < K; ++ky) {
                for (std::size_t kx = 0; kx < K; ++kx) {
                    const auto iy = static_cast<std::ptrdiff_t>(oy * layer.stride + ky) -
                                    static_cast<std::ptrdiff_t>(layer.padding);
                    const auto ix = static_cast<std::ptrdiff_t>(ox * layer.stride + kx) -
                                    static_cast<std::ptrdiff_t>(layer.padding);
                    const bool inside = iy >= 0 && ix >= 0 && static_cast<std::size_t>(iy) < H &&
                                        static_cast<std::size_t>(ix) < W;
                    if (inside) {
                        const std::uint8_t *src =
                            values.data() + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C;
                        std::copy(src, src + C, window.begin() + static_cast<std::ptrdiff_t>(k));
                    } else {
                        std::fill_n(window.begin() + static_cast<std::ptrdiff_t>(k), C, static_cast<std::uint8_t>(zx));
                    }
                    k += C;
                }
            }
            acc.spec[pix] = mac.run(window, acc, pix * layer.out_channels);
        }
    });
    return acc;
}

Accumulators linear(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts) {
    if (layer.kind != LayerKind::linear) throw Error(ErrorCode::shape_mismatch, "linear called on a conv2d layer");
    const std::size_t n = layer.reduction_length();
    if (input.size() != n) {
        throw Error(ErrorCode::shape_mismatch, "input has " + std::to_string(input.size()) + " elements, fan-in is " +
                                                    std::to_string(n));
    }
    if (layer.weights.shape() != Shape{layer.out_channels, n}) {
        throw Error(ErrorCode::shape_mismatch, "weights " + shape_str(layer.weights.shape()));
    }
    check_mode(layer, input.bit_width());

    Accumulators acc;
    init_acc(acc, layer.out_shape(), 1, input.scale() * layer.weights.scale(), opts.with_exact_reference);
    const WeightOperands w = prepare_weights(layer, n);

    // One encoded window shared by every output neuron; split the filters
    // across workers.
    parallel_blocks(layer.out_channels, opts.workers, [&](std::size_t block, std::size_t begin, std::size_t end) {
        LayerSpec slice_spec;
        slice_spec.mode = layer.mode;
        slice_spec.approx_bits = layer.approx_bits;
        slice_spec.thresholds = layer.thresholds;
        slice_spec.pac_chunk = layer.pac_chunk;
        slice_spec.weights = layer.weights;
        slice_spec.out_channels = end - begin;
        WeightOperands ws;
        ws.planes.assign(w.planes.begin() + static_cast<std::ptrdiff_t>(begin),
                         w.planes.begin() + static_cast<std::ptrdiff_t>(end));
        ws.sparsity.assign(w.sparsity.begin() + static_cast<std::ptrdiff_t>(begin),
                           w.sparsity.begin() + static_cast<std::ptrdiff_t>(end));
        ws.sums.assign(w.sums.begin() + static_cast<std::ptrdiff_t>(begin),
                       w.sums.begin() + static_cast<std::ptrdiff_t>(end));
        WindowMac mac(slice_spec, ws, input.bit_width(), input.zero_point(), opts.with_exact_reference);
        const double spec = mac.run(input.values(), acc, begin);
        if (block == 0) acc.spec[0] = spec;
    });
    return acc;
}

QuantTensor postprocess(const Accumulators &acc, const LayerSpec &layer) {
    const std::size_t channels = acc.shape.back();
    if (layer.bn_scale.size() != channels || layer.bn_bias.size() != channels) {
        throw Error(ErrorCode::shape_mismatch, "batch-norm parameters do not match accumulator channels");
    }
    if (!(layer.output.scale > 0.0) || !std::isfinite(layer.output.scale)) {
        throw Error(ErrorCode::non_finite, "output scale must be positive and finite");
    }
    std::vector<std::uint8_t> codes(acc.values.size());
    for (std::size_t i = 0; i < acc.values.size(); ++i) {
        const std::size_t c = i % channels;
        double real = static_cast<double>(acc.values[i]) * acc.scale * static_cast<double>(layer.bn_scale[c]) +
                      static_cast<double>(layer.bn_bias[c]);
        if (layer.activation == ActivationFn::relu) real = std::max(real, 0.0);
        const double scaled = real / layer.output.scale;
        if (!std::isfinite(scaled)) {
            throw Error(ErrorCode::non_finite, "output " + std::to_string(i) + " is not finite");
        }
        const double q = std::round(scaled) + layer.output.zero_point;
        codes[i] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
    }
    return QuantTensor(acc.shape, std::move(codes), 8, layer.output.scale, layer.output.zero_point);
}

QuantTensor apply_pool(const QuantTensor &t, const LayerSpec &layer) {
    if (layer.pool == PoolKind::none) return t;
    if (t.shape().size() != 3) throw Error(ErrorCode::shape_mismatch, "pooling needs an H x W x C tensor");
    const std::size_t H = t.shape()[0];
    const std::size_t W = t.shape()[1];
    const std::size_t C = t.shape()[2];
    const auto v = t.values();
    if (layer.pool == PoolKind::global_avg) {
        std::vector<std::uint8_t> out(C);
        const std::uint64_t count = H * W;
        for (std::size_t c = 0; c < C; ++c) {
            std::uint64_t sum = 0;
            for (std::size_t i = 0; i < H * W; ++i) sum += v[i * C + c];
            out[c] = static_cast<std::uint8_t>((2 * sum + count) / (2 * count));
        }
        return QuantTensor({1, 1, C}, std::move(out), t.bit_width(), t.scale(), t.zero_point());
    }
    const std::size_t s = layer.pool_size;
    const std::size_t OH = H / s;
    const std::size_t OW = W / s;
    std::vector<std::uint8_t> out(OH * OW * C, 0);
    for (std::size_t oy = 0; oy < OH; ++oy) {
        for (std::size_t ox = 0; ox < OW; ++ox) {
            for (std::size_t c = 0; c < C; ++c) {
                std::uint8_t m = 0;
                for (std::size_t dy = 0; dy < s; ++dy) {
                    for (std::size_t dx = 0; dx < s; ++dx) m = std::max(m, v[((oy * s + dy) * W + ox * s + dx) * C + c]);
                }
                out[(oy * OW + ox) * C + c] = m;
            }
        }
    }
    return QuantTensor({OH, OW, C}, std::move(out), t.bit_width(), t.scale(), t.zero_point());
}

QuantTensor run_layer(const QuantTensor &input, const LayerSpec &layer, const ExecOptions &opts,
                      Accumulators *acc_out) {
    Accumulators acc = layer.kind == LayerKind::conv2d ? conv2d(input, layer, opts) : linear(input, layer, opts);
    QuantTensor out = apply_pool(postprocess(acc, layer), layer);
    if (acc_out) *acc_out = std::move(acc);
    return out;
}

double LayerRunStats::dev_rmse() const {
    return compared ? static_cast<double>(std::sqrt(dev_sq_sum / static_cast<long double>(compared))) : 0.0;
}

double LayerRunStats::dev_rmse_pct() const {
    const double range = dynamic_range();
    return range > 0.0 ? 100.0 * dev_rmse() / range : 0.0;
}

void LayerRunStats::merge(const LayerRunStats &o) {
    if (o.compared) {
        exact_min = compared ? std::min(exact_min, o.exact_min) : o.exact_min;
        exact_max = compared ? std::max(exact_max, o.exact_max) : o.exact_max;
    }
    if (o.windows) {
        spec_min = windows ? std::min(spec_min, o.spec_min) : o.spec_min;
        spec_max = windows ? std::max(spec_max, o.spec_max) : o.spec_max;
    }
    outputs += o.outputs;
    digital_cells += o.digital_cells;
    windows += o.windows;
    spec_sum += o.spec_sum;
    compared += o.compared;
    dev_sq_sum += o.dev_sq_sum;
    dev_max_abs = std::max(dev_max_abs, o.dev_max_abs);
}

ModelManifest exact_variant(const ModelManifest &model) {
    ModelManifest m = model;
    for (auto &l : m.layers) l.mode = MacMode::exact;
    return m;
}

NetworkResult run_network(const ModelManifest &model, const QuantTensor &input, const RunOptions &opts) {
    if (input.shape() != model.input_shape) {
        throw Error(ErrorCode::shape_mismatch, "input " + shape_str(input.shape()) + " vs model input " +
                                                    shape_str(model.input_shape));
    }
    NetworkResult result;
    QuantTensor x = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const auto &layer = model.layers[i];
        try {
            Accumulators acc;
            QuantTensor y = run_layer(x, layer, ExecOptions{opts.workers, opts.compare_exact}, &acc);

            LayerRunStats s;
            s.name = layer.name;
            s.mode = layer.mode;
            s.reduction_length = layer.reduction_length();
            s.outputs = acc.values.size();
            for (auto c : acc.digital_cells) s.digital_cells += c;
            s.windows = acc.spec.size();
            for (double v : acc.spec) {
                s.spec_sum += v;
                s.spec_min = std::min(s.spec_min, v);
                s.spec_max = std::max(s.spec_max, v);
            }
            if (opts.compare_exact) {
                s.compared = acc.values.size();
                s.exact_min = std::numeric_limits<std::int64_t>::max();
                s.exact_max = std::numeric_limits<std::int64_t>::min();
                for (std::size_t k = 0; k < acc.values.size(); ++k) {
                    const std::int64_t d = acc.values[k] - acc.exact_values[k];
                    s.dev_sq_sum += static_cast<long double>(d) * static_cast<long double>(d);
                    s.dev_max_abs = std::max(s.dev_max_abs, d < 0 ? -d : d);
                    s.exact_min = std::min(s.exact_min, acc.exact_values[k]);
                    s.exact_max = std::max(s.exact_max, acc.exact_values[k]);
                }
            }
            result.layers.push_back(std::move(s));
            x = std::move(y);
        } catch (const Error &e) {
            throw Error(e.code(), "layer " + std::to_string(i) + " (" + layer.name + "): " + e.detail());
        }
    }
    result.logits = std::move(x);
    if (opts.compare_exact) {
        result.exact_logits = run_network(exact_variant(model), input, RunOptions{opts.workers, false}).logits;
    }
    return result;
}

std::size_t argmax(const QuantTensor &t) {
    const auto v = t.values();
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace pacsim
