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

#include "pacsim/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "pacsim/analysis.hpp"
#include "pacsim/costmodel.hpp"
#include "pacsim/encoder.hpp"
#include "pacsim/error.hpp"
#include "pacsim/inference.hpp"
#include "pacsim/model_gen.hpp"

namespace pacsim {

namespace {

struct CommonFlags {
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out = "-";
    bool no_timestamp = false;
};

std::uint64_t default_seed() {
    if (const char *env = std::getenv("PACSIM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception &) {
            throw Error(ErrorCode::out_of_range, std::string("PACSIM_SEED is not an unsigned integer: ") + env);
        }
    }
    return 0;
}

void add_common(CLI::App *sub, CommonFlags &f) {
    sub->add_option("--seed", f.seed, "Random seed (default: $PACSIM_SEED or 0)");
    sub->add_option("--workers", f.workers, "Worker threads; results do not depend on it")
        ->check(CLI::Range(1, 1024));
    sub->add_option("--out,-o", f.out, "Output file, '-' for stdout");
    sub->add_flag("--no-timestamp", f.no_timestamp, "Omit the timestamp comment line");
}

// Output sink that is either the caller's stream or a file.
class Sink {
   public:
    Sink(const std::string &path, std::ostream &fallback) {
        if (path == "-") {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error(ErrorCode::io, "cannot open " + path + " for writing");
            stream_ = file_.get();
        }
    }
    std::ostream &os() { return *stream_; }
    void close() {
        stream_->flush();
        if (!*stream_) throw Error(ErrorCode::io, "write failed");
    }

   private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream *stream_ = nullptr;
};

void write_preamble(std::ostream &os, const std::string &command, const CommonFlags &f,
                    const std::string &params = {}) {
    os << "# pacsim " << command << " seed=" << f.seed;
    if (!params.empty()) os << " " << params;
    os << "\n";
    if (!f.no_timestamp) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        os << "# generated " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "\n";
    }
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(10) << v;
    return os.str();
}

struct RmseFlags {
    std::vector<std::size_t> n{1024};
    double sx = 0.2;
    double sw = 0.4;
    std::uint64_t trials = 100000;
    std::string model = "fixed";
};

void add_rmse_flags(CLI::App *sub, RmseFlags &f, bool list) {
    auto *opt = sub->add_option("--n", f.n, list ? "Comma-separated DP lengths" : "DP length")
                    ->check(CLI::PositiveNumber);
    if (list) {
        opt->delimiter(',');
        f.n = {256, 512, 1024, 2048, 4096};
    } else {
        opt->expected(1);
    }
    sub->add_option("--sx", f.sx, "Activation bit sparsity ratio")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--sw", f.sw, "Weight bit sparsity ratio")->check(CLI::Range(0.0, 1.0));
    sub->add_option("--trials", f.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
    sub->add_option("--model", f.model, "Bit placement model")->check(CLI::IsMember({"fixed", "iid"}));
}

RmseConfig rmse_config(const RmseFlags &f, const CommonFlags &c) {
    RmseConfig cfg;
    cfg.s_x = f.sx;
    cfg.s_w = f.sw;
    cfg.trials = f.trials;
    cfg.seed = c.seed;
    cfg.workers = c.workers;
    cfg.model = parse_bit_model(f.model);
    return cfg;
}

void cmd_rmse(const RmseFlags &f, const CommonFlags &c, std::ostream &out) {
    RmseConfig cfg = rmse_config(f, c);
    cfg.n = f.n.at(0);
    const RmseResult r = rmse_experiment(cfg);
    Sink sink(c.out, out);
    write_preamble(sink.os(), "rmse", c, "model=" + f.model);
    write_rmse_csv(sink.os(), std::span(&r, 1));
    sink.close();
}

void cmd_sweep(const RmseFlags &f, const CommonFlags &c, std::ostream &out) {
    const SweepResult s = rmse_sweep(f.n, rmse_config(f, c));
    Sink sink(c.out, out);
    write_preamble(sink.os(), "sweep", c, "model=" + f.model);
    write_rmse_csv(sink.os(), s.rows, s.slope, true);
    sink.close();
}

struct InferFlags {
    std::string model_dir;
    std::string input;
    std::size_t random_inputs = 0;
    std::optional<int> approx_bits;
    std::vector<double> thresholds;
    std::string mode = "manifest";
    bool compare_exact = false;
    std::string logits_out;
};

Thresholds parse_thresholds(const std::vector<double> &t) {
    if (t.size() != 3) throw Error(ErrorCode::out_of_range, "--thresholds needs exactly three values");
    Thresholds th{t[0], t[1], t[2]};
    th.validate();
    return th;
}

void apply_overrides(ModelManifest &m, const InferFlags &f) {
    for (std::size_t i = 0; i < m.layers.size(); ++i) {
        auto &l = m.layers[i];
        if (f.mode == "exact") l.mode = MacMode::exact;
        // The first layer stays EXACT under a blanket hybrid override.
        if (f.mode == "hybrid" && i > 0) l.mode = MacMode::hybrid;
        if (l.mode == MacMode::hybrid) {
            if (f.approx_bits) l.approx_bits = *f.approx_bits;
            if (!f.thresholds.empty()) l.thresholds = parse_thresholds(f.thresholds);
        }
    }
    m.validate();
}

std::vector<QuantTensor> infer_inputs(const ModelManifest &m, const std::string &input, std::size_t random,
                                      std::uint64_t seed) {
    if (!input.empty()) return load_inputs(m, input);
    return random_inputs(m, random == 0 ? 1 : random, seed);
}

void cmd_infer(const InferFlags &f, const CommonFlags &c, std::ostream &out) {
    ModelManifest model = load_model(f.model_dir);
    apply_overrides(model, f);
    const auto inputs = infer_inputs(model, f.input, f.random_inputs, c.seed);

    std::vector<LayerRunStats> stats;
    std::vector<QuantTensor> logits;
    std::size_t agree = 0;
    for (const auto &x : inputs) {
        NetworkResult r = run_network(model, x, RunOptions{c.workers, f.compare_exact});
        if (stats.empty()) {
            stats = r.layers;
        } else {
            for (std::size_t i = 0; i < stats.size(); ++i) stats[i].merge(r.layers[i]);
        }
        if (r.exact_logits && argmax(*r.exact_logits) == argmax(r.logits)) ++agree;
        logits.push_back(std::move(r.logits));
    }

    Sink sink(c.out, out);
    auto &os = sink.os();
    write_preamble(os, "infer", c, "inputs=" + std::to_string(inputs.size()));
    os << "layer,mode,reduction_length,outputs,avg_digital_cycles,mean_spec,min_spec,max_spec,dev_rmse,"
          "dynamic_range,dev_rmse_pct,dev_max_abs,argmax_agreement\n";
    for (std::size_t i = 0; i < stats.size(); ++i) {
        const auto &s = stats[i];
        os << s.name << "," << mac_mode_name(s.mode) << "," << s.reduction_length << "," << s.outputs << ","
           << fmt(s.avg_digital_cells()) << "," << fmt(s.mean_spec()) << "," << fmt(s.spec_min) << ","
           << fmt(s.spec_max) << ",";
        if (f.compare_exact) {
            os << fmt(s.dev_rmse()) << "," << fmt(s.dynamic_range()) << "," << fmt(s.dev_rmse_pct()) << ","
               << s.dev_max_abs;
        } else {
            os << ",,,";
        }
        os << ",\n";
    }
    os << "network,,,,,,,,,,,,";
    if (f.compare_exact) os << fmt(static_cast<double>(agree) / static_cast<double>(inputs.size()));
    os << "\n";
    sink.close();

    if (!f.logits_out.empty()) {
        Sink lsink(f.logits_out, out);
        auto &ls = lsink.os();
        write_preamble(ls, "infer logits", c);
        ls << "input";
        for (std::size_t k = 0; k < logits.front().size(); ++k) ls << ",logit" << k;
        ls << ",argmax\n";
        for (std::size_t i = 0; i < logits.size(); ++i) {
            ls << i;
            for (auto v : logits[i].values()) ls << "," << static_cast<int>(v);
            ls << "," << argmax(logits[i]) << "\n";
        }
        lsink.close();
    }
}

struct CostFlags {
    int act_bits = 8;
    int weight_bits = 8;
    int approx_bits = 4;
    std::vector<std::size_t> n{64, 128, 256, 512, 1024, 2048, 4096};
    std::size_t kernel = 3;
    std::uint64_t pixels = 1;
    std::optional<std::size_t> out_channels;
    std::optional<double> dynamic_avg;
    std::string params;
    std::string format = "csv";
};

void cmd_cost(const CostFlags &f, const CommonFlags &c, std::ostream &out) {
    const EnergyParams params = f.params.empty() ? EnergyParams{} : EnergyParams::from_json_file(f.params);
    std::vector<LayerCostSpec> specs;
    std::vector<CostReport> reports;
    for (auto n : f.n) {
        LayerCostSpec s;
        s.group_len = n;
        s.dp_length = f.kernel * f.kernel * n;
        s.act_groups = f.pixels;
        s.outputs = f.pixels * f.out_channels.value_or(n);
        s.act_bits = f.act_bits;
        s.weight_bits = f.weight_bits;
        s.approx_bits = f.approx_bits;
        s.dynamic_avg = f.dynamic_avg;
        reports.push_back(layer_cost(s, params));
        specs.push_back(s);
    }
    Sink sink(c.out, out);
    auto &os = sink.os();
    if (f.format == "table") {
        write_cost_table(os, specs, reports);
    } else {
        write_preamble(os, "cost", c);
        write_cost_csv_header(os);
        for (std::size_t i = 0; i < specs.size(); ++i) write_cost_csv_row(os, specs[i], reports[i]);
    }
    sink.close();
}

struct ProfileFlags {
    std::string model_dir;
    std::string tensor;
    std::size_t random_inputs = 0;
    std::string input;
};

void cmd_profile(const ProfileFlags &f, const CommonFlags &c, std::ostream &out) {
    std::vector<ProfileRow> rows;
    if (!f.tensor.empty()) {
        std::ifstream in(f.tensor, std::ios::binary);
        if (!in) throw Error(ErrorCode::io, "cannot open " + f.tensor);
        std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        const std::size_t size = bytes.size();
        const QuantTensor t({size}, std::move(bytes));
        const auto ratios = bit_sparsity_profile(t);
        const std::string name = std::filesystem::path(f.tensor).filename().string();
        for (std::size_t p = 0; p < ratios.size(); ++p) rows.push_back({name, "tensor", static_cast<int>(p), ratios[p]});
    } else {
        const ModelManifest model = load_model(f.model_dir);
        std::vector<QuantTensor> inputs;
        if (!f.input.empty() || f.random_inputs > 0) inputs = infer_inputs(model, f.input, f.random_inputs, c.seed);
        rows = profile_model_sparsity(model, inputs, c.workers);
    }
    Sink sink(c.out, out);
    write_preamble(sink.os(), "profile", c);
    write_profile_csv(sink.os(), rows);
    sink.close();
}

struct GenFlags {
    std::string dir;
    std::size_t inputs = 0;
    int approx_bits = 4;
};

void cmd_gen_model(const GenFlags &f, const CommonFlags &c, std::ostream &out) {
    DeskModelConfig cfg;
    cfg.approx_bits = f.approx_bits;
    cfg.workers = c.workers;
    const ModelManifest m = generate_desk_model(c.seed, cfg);
    save_model(m, f.dir);
    if (f.inputs > 0) save_inputs(random_inputs(m, f.inputs, c.seed), std::filesystem::path(f.dir) / "inputs.u8");
    Sink sink(c.out, out);
    write_preamble(sink.os(), "gen-model", c);
    sink.os() << "layer,kind,mode,reduction_length,out_channels\n";
    for (const auto &l : m.layers) {
        sink.os() << l.name << "," << (l.kind == LayerKind::conv2d ? "conv2d" : "linear") << "," << mac_mode_name(l.mode)
                  << "," << l.reduction_length() << "," << l.out_channels << "\n";
    }
    sink.close();
}

}  // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"pacsim: probabilistic approximate computation simulator for compute-in-memory", "pacsim"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; keys mirror the flags, flags win");

    CommonFlags common;
    try {
        common.seed = default_seed();
    } catch (const Error &e) {
        err << e.what() << "\n";
        return kExitUsage;
    }

    RmseFlags rmse_flags;
    RmseFlags sweep_flags;
    InferFlags infer_flags;
    CostFlags cost_flags;
    ProfileFlags profile_flags;
    GenFlags gen_flags;

    auto *rmse = app.add_subcommand("rmse", "Monte-Carlo RMSE of the PAC estimate at one DP length");
    add_common(rmse, common);
    add_rmse_flags(rmse, rmse_flags, false);

    auto *sweep = app.add_subcommand("sweep", "RMSE over several DP lengths with log-log slope");
    add_common(sweep, common);
    add_rmse_flags(sweep, sweep_flags, true);

    auto *infer = app.add_subcommand("infer", "Run a model directory with exact or hybrid MACs");
    add_common(infer, common);
    infer->add_option("--model-dir", infer_flags.model_dir, "Model directory with manifest.json")
        ->required()
        ->check(CLI::ExistingDirectory);
    auto *in_opt = infer->add_option("--input", infer_flags.input, "Raw uint8 input file")->check(CLI::ExistingFile);
    infer->add_option("--random-inputs", infer_flags.random_inputs, "Number of seeded random inputs")
        ->excludes(in_opt);
    infer->add_option("--approx-bits", infer_flags.approx_bits, "Override approx bits of hybrid layers")
        ->check(CLI::Range(0, 8));
    infer->add_option("--thresholds", infer_flags.thresholds, "TH0,TH1,TH2 for dynamic cycle configuration")
        ->delimiter(',')
        ->expected(3);
    infer->add_option("--mode", infer_flags.mode, "exact, hybrid, or manifest")
        ->check(CLI::IsMember({"exact", "hybrid", "manifest"}));
    infer->add_flag("--compare-exact", infer_flags.compare_exact, "Report deviation from EXACT and argmax agreement");
    infer->add_option("--logits-out", infer_flags.logits_out, "Write logits CSV here");

    auto *cost = app.add_subcommand("cost", "Cycle, traffic and energy accounting");
    add_common(cost, common);
    cost->add_option("--P", cost_flags.act_bits, "Activation bits")->check(CLI::Range(1, 8));
    cost->add_option("--Q", cost_flags.weight_bits, "Weight bits")->check(CLI::Range(1, 8));
    cost->add_option("--approx-bits", cost_flags.approx_bits, "Approximated LSBs per operand")->check(CLI::Range(0, 8));
    cost->add_option("--n", cost_flags.n, "Comma-separated channel counts N")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    cost->add_option("--kernel", cost_flags.kernel, "Kernel size; DP length = kernel^2 * N")->check(CLI::PositiveNumber);
    cost->add_option("--pixels", cost_flags.pixels, "Output pixels (encoding groups)")->check(CLI::PositiveNumber);
    cost->add_option("--out-channels", cost_flags.out_channels, "Output channels (default N)")
        ->check(CLI::PositiveNumber);
    cost->add_option("--dynamic-avg", cost_flags.dynamic_avg, "Average digital cycles under dynamic configuration")
        ->check(CLI::Range(0.0, 64.0));
    cost->add_option("--params", cost_flags.params, "Energy parameter JSON file")->check(CLI::ExistingFile);
    cost->add_option("--format", cost_flags.format, "csv or table")->check(CLI::IsMember({"csv", "table"}));

    auto *profile = app.add_subcommand("profile", "Per-bit sparsity of model weights/activations or a raw tensor");
    add_common(profile, common);
    auto *pm = profile->add_option("--model-dir", profile_flags.model_dir, "Model directory")
                   ->check(CLI::ExistingDirectory);
    auto *pt = profile->add_option("--tensor", profile_flags.tensor, "Raw uint8 tensor file")->check(CLI::ExistingFile);
    pm->excludes(pt);
    profile->add_option("--random-inputs", profile_flags.random_inputs, "Seeded random inputs for activations")
        ->needs(pm);
    profile->add_option("--input", profile_flags.input, "Raw uint8 input file for activations")
        ->needs(pm)
        ->check(CLI::ExistingFile);

    auto *gen = app.add_subcommand("gen-model", "Emit a seeded desk-scale CNN model directory");
    add_common(gen, common);
    gen->add_option("--dir", gen_flags.dir, "Output model directory")->required();
    gen->add_option("--inputs", gen_flags.inputs, "Also write this many seeded random inputs to inputs.u8");
    gen->add_option("--approx-bits", gen_flags.approx_bits, "Approx bits of the hybrid layers")->check(CLI::Range(0, 8));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        if (profile->parsed() && profile_flags.model_dir.empty() && profile_flags.tensor.empty()) {
            throw CLI::RequiredError("profile needs --model-dir or --tensor");
        }
    } catch (const CLI::ParseError &e) {
        if (e.get_exit_code() == 0) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return kExitOk;
        }
        err << "usage error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (rmse->parsed()) cmd_rmse(rmse_flags, common, out);
        if (sweep->parsed()) cmd_sweep(sweep_flags, common, out);
        if (infer->parsed()) cmd_infer(infer_flags, common, out);
        if (cost->parsed()) cmd_cost(cost_flags, common, out);
        if (profile->parsed()) cmd_profile(profile_flags, common, out);
        if (gen->parsed()) cmd_gen_model(gen_flags, common, out);
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace pacsim
