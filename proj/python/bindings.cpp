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


#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "pacsim/analysis.hpp"
#include "pacsim/bitplane.hpp"
#include "pacsim/cli.hpp"
#include "pacsim/costmodel.hpp"
#include "pacsim/encoder.hpp"
#include "pacsim/error.hpp"
#include "pacsim/inference.hpp"
#include "pacsim/model_gen.hpp"
#include "pacsim/pac_core.hpp"

namespace py = pybind11;
using namespace pacsim;

namespace {

using Codes = std::vector<std::uint8_t>;

py::tuple as_pair(const Rational &r) { return py::make_tuple(r.num(), r.den()); }

CycleMap map_for(int approx_bits, std::optional<std::tuple<double, double, double>> thresholds, double spec) {
    CycleMap m = CycleMap::operand_approx(8, 8, approx_bits);
    if (thresholds) {
        const auto [a, b, c] = *thresholds;
        m = configure_cycles(spec, Thresholds{a, b, c}, m);
    }
    return m;
}

py::dict rmse_dict(const RmseResult &r) {
    py::dict d;
    d["n"] = r.n;
    d["s_x"] = r.s_x;
    d["s_w"] = r.s_w;
    d["trials"] = r.trials;
    d["seed"] = r.seed;
    d["rmse_lsb"] = r.rmse_lsb;
    d["rmse_pct"] = r.rmse_pct;
    d["bias"] = r.bias;
    d["analytic_lsb"] = r.analytic_lsb;
    return d;
}

py::dict stats_dict(const LayerRunStats &s) {
    py::dict d;
    d["name"] = s.name;
    d["mode"] = mac_mode_name(s.mode);
    d["reduction_length"] = s.reduction_length;
    d["outputs"] = s.outputs;
    d["avg_digital_cycles"] = s.avg_digital_cells();
    d["mean_spec"] = s.mean_spec();
    d["dev_rmse"] = s.dev_rmse();
    d["dynamic_range"] = s.dynamic_range();
    d["dev_rmse_pct"] = s.dev_rmse_pct();
    d["dev_max_abs"] = s.dev_max_abs;
    return d;
}

}  // namespace

PYBIND11_MODULE(_pacsim, m) {
    m.doc() = "Bit-exact simulator for sparsity-domain approximate MACs";

    // Library errors surface as PacsimError(ValueError) with a `code` attribute.
    auto &exc = py::register_exception<Error>(m, "PacsimError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error &e) {
            py::object type = py::module_::import("pacsim._pacsim").attr("PacsimError");
            py::object inst = type(e.what());
            inst.attr("code") = error_code_name(e.code());
            PyErr_SetObject(type.ptr(), inst.ptr());
        }
    });
    (void)exc;

    // Bit planes and sparsity.
    py::class_<SparsityVector>(m, "SparsityVector")
        .def_readonly("bit_width", &SparsityVector::bit_width)
        .def_readonly("counts", &SparsityVector::counts)
        .def_readonly("group_len", &SparsityVector::group_len)
        .def("weighted_sum", &SparsityVector::weighted_sum)
        .def("ratio", &SparsityVector::ratio, py::arg("bit"))
        .def("__eq__", [](const SparsityVector &a, const SparsityVector &b) { return a == b; })
        .def("__repr__", [](const SparsityVector &s) {
            std::ostringstream os;
            os << "SparsityVector(N=" << s.group_len << ", counts=[";
            for (std::size_t i = 0; i < s.counts.size(); ++i) os << (i ? ", " : "") << s.counts[i];
            os << "])";
            return os.str();
        });

    m.def(
        "decompose",
        [](const Codes &values, int bit_width) {
            const BitPlanes b = decompose(values, bit_width);
            std::vector<Codes> planes;
            for (int p = 0; p < bit_width; ++p) planes.push_back(b.logical_plane(p));
            return planes;
        },
        py::arg("values"), py::arg("bit_width") = 8, "Logical bit planes, planes[p][i] = bit p of values[i].");
    m.def(
        "recompose", [](const std::vector<Codes> &planes) { return recompose(BitPlanes::from_logical(planes)); },
        py::arg("planes"));
    m.def(
        "count_sparsity", [](const Codes &values, int bit_width) { return count_sparsity(values, bit_width); },
        py::arg("values"), py::arg("bit_width") = 8);

    // MAC kernels.
    m.def(
        "exact_binary_mac",
        [](const Codes &x, const Codes &w) {
            return exact_binary_mac(std::span<const std::uint8_t>(x), std::span<const std::uint8_t>(w));
        },
        py::arg("x_bits"), py::arg("w_bits"));
    m.def(
        "exact_mac", [](const Codes &x, const Codes &w) { return exact_mac(decompose(x, 8), decompose(w, 8)); },
        py::arg("x"), py::arg("w"));
    m.def(
        "pac_estimate", [](std::uint64_t sx, std::uint64_t sw, std::uint64_t n) { return as_pair(pac_estimate(sx, sw, n)); },
        py::arg("s_x"), py::arg("s_w"), py::arg("n"), "S_x * S_w / n as (numerator, denominator).");
    m.def(
        "hybrid_mac",
        [](const Codes &x, const Codes &w, int approx_bits, std::optional<std::tuple<double, double, double>> th,
           std::optional<std::size_t> pac_chunk) {
            const BitPlanes bx = decompose(x, 8), bw = decompose(w, 8);
            const CycleMap map = map_for(approx_bits, th, th ? speculate(count_sparsity(bx)) : 0.0);
            return hybrid_mac(bx, bw, map, HybridOptions{pac_chunk});
        },
        py::arg("x"), py::arg("w"), py::arg("approx_bits") = 4, py::arg("thresholds") = py::none(),
        py::arg("pac_chunk") = py::none());
    m.def(
        "hybrid_mac_exact",
        [](const Codes &x, const Codes &w, int approx_bits) {
            return as_pair(hybrid_mac_exact(decompose(x, 8), decompose(w, 8), CycleMap::operand_approx(8, 8, approx_bits)));
        },
        py::arg("x"), py::arg("w"), py::arg("approx_bits") = 4, "Unrounded hybrid MAC as (numerator, denominator).");
    m.def(
        "speculate", [](const Codes &x) { return speculate(count_sparsity(x, 8)); }, py::arg("x"));
    m.def(
        "configure_cycles",
        [](double spec, std::tuple<double, double, double> th, int approx_bits) {
            const auto [a, b, c] = th;
            return configure_cycles(spec, Thresholds{a, b, c}, CycleMap::operand_approx(8, 8, approx_bits))
                .deterministic_cells();
        },
        py::arg("spec"), py::arg("thresholds"), py::arg("approx_bits") = 4,
        "Deterministic (p, q) cells after speculation-driven demotion.");

    // Encoder.
    py::class_<EncoderState>(m, "EncoderState")
        .def(py::init<int, std::size_t>(), py::arg("bit_width"), py::arg("group_target"))
        .def("absorb", [](EncoderState &s, const Codes &chunk) { s.absorb(chunk); }, py::arg("chunk"))
        .def("finish", &EncoderState::finish)
        .def("complete", &EncoderState::complete)
        .def_property_readonly("counted", &EncoderState::counted)
        .def("serialize", [](const EncoderState &s) {
            const auto b = s.serialize();
            return py::bytes(reinterpret_cast<const char *>(b.data()), b.size());
        })
        .def_static("deserialize", [](const py::bytes &b) {
            const std::string s = b;
            return EncoderState::deserialize(std::span(reinterpret_cast<const std::uint8_t *>(s.data()), s.size()));
        });
    m.def("counter_width", &counter_width, py::arg("n"));
    m.def(
        "compression_stats",
        [](int bit_width, std::size_t n) {
            const CompressionStats c = compression_stats(bit_width, n);
            py::dict d;
            d["raw_bits"] = c.raw_bits;
            d["encoded_bits"] = c.encoded_bits;
            d["ratio"] = c.ratio;
            d["counter_bits"] = c.counter_bits;
            d["short_encoded_bits"] = c.short_encoded_bits;
            d["short_ratio"] = c.short_ratio;
            return d;
        },
        py::arg("bit_width"), py::arg("n"));

    // Statistics.
    m.def("hypergeometric_std", &hypergeometric_std, py::arg("n"), py::arg("s_x"), py::arg("s_w"));
    m.def(
        "rmse_experiment",
        [](std::size_t n, double sx, double sw, std::uint64_t trials, std::uint64_t seed, int workers,
           const std::string &model) {
            RmseConfig cfg{n, sx, sw, trials, seed, workers, parse_bit_model(model)};
            py::gil_scoped_release release;
            const RmseResult r = rmse_experiment(cfg);
            py::gil_scoped_acquire acquire;
            return rmse_dict(r);
        },
        py::arg("n") = 1024, py::arg("s_x") = 0.2, py::arg("s_w") = 0.4, py::arg("trials") = 100000,
        py::arg("seed") = 0, py::arg("workers") = 1, py::arg("model") = "fixed");

    // Accounting.
    m.def(
        "count_cycles",
        [](int p, int q, int a, std::optional<double> dyn) {
            const CycleCount c = count_cycles(p, q, a, dyn);
            return py::make_tuple(c.baseline_digital, c.digital, c.reduction_pct());
        },
        py::arg("act_bits") = 8, py::arg("weight_bits") = 8, py::arg("approx_bits") = 4,
        py::arg("dynamic_avg") = py::none(), "(baseline cycles, digital cycles, reduction %).");
    m.def(
        "memory_traffic",
        [](std::uint64_t groups, std::size_t n, int p, int a) {
            const TrafficReport t = memory_traffic(groups, n, p, a);
            return py::make_tuple(t.baseline_bits, t.pacim_bits, t.reduction_pct());
        },
        py::arg("groups"), py::arg("group_len"), py::arg("act_bits") = 8, py::arg("approx_bits") = 4,
        "(baseline bits, PACiM bits, reduction %).");
    m.def("energy_ratio", [] {
        const EnergyParams p;
        return p.e_dcim_1b_op_fj / p.e_pcu_op_fj;
    });

    // Models.
    py::class_<ModelManifest>(m, "Model")
        .def_static("load", &load_model, py::arg("dir"))
        .def_static(
            "generate", [](std::uint64_t seed, int approx_bits) {
                DeskModelConfig cfg;
                cfg.approx_bits = approx_bits;
                return generate_desk_model(seed, cfg);
            },
            py::arg("seed") = 0, py::arg("approx_bits") = 4)
        .def("save", [](const ModelManifest &mm, const std::filesystem::path &dir) { save_model(mm, dir); }, py::arg("dir"))
        .def_property_readonly("input_shape", [](const ModelManifest &mm) { return mm.input_shape; })
        .def_property_readonly("layer_names", [](const ModelManifest &mm) {
            std::vector<std::string> names;
            for (const auto &l : mm.layers) names.push_back(l.name);
            return names;
        })
        .def(
            "random_inputs",
            [](const ModelManifest &mm, std::size_t count, std::uint64_t seed) {
                std::vector<Codes> out;
                for (const auto &t : random_inputs(mm, count, seed)) out.emplace_back(t.values().begin(), t.values().end());
                return out;
            },
            py::arg("count"), py::arg("seed") = 0)
        .def(
            "run",
            [](const ModelManifest &mm, const Codes &input, bool compare_exact, int workers) {
                const QuantTensor in(mm.input_shape, input, 8, mm.input.scale, mm.input.zero_point);
                NetworkResult r;
                {
                    py::gil_scoped_release release;
                    r = run_network(mm, in, RunOptions{workers, compare_exact});
                }
                py::dict d;
                d["logits"] = Codes(r.logits.values().begin(), r.logits.values().end());
                d["argmax"] = argmax(r.logits);
                if (r.exact_logits) {
                    d["exact_logits"] = Codes(r.exact_logits->values().begin(), r.exact_logits->values().end());
                    d["exact_argmax"] = argmax(*r.exact_logits);
                }
                py::list layers;
                for (const auto &s : r.layers) layers.append(stats_dict(s));
                d["layers"] = layers;
                return d;
            },
            py::arg("input"), py::arg("compare_exact") = false, py::arg("workers") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string> &args) {
            std::ostringstream out, err;
            int code;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command line in-process; returns (exit code, stdout, stderr).");
}
