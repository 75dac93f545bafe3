#include "attnlego/workbench.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "attnlego/controller.hpp"
#include "attnlego/reference.hpp"
#include "attnlego/softmax.hpp"
#include "attnlego/stats.hpp"
#include "attnlego/tensor_file.hpp"
#include "attnlego/trace.hpp"

namespace attnlego {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw std::runtime_error(path + ": cannot open for writing");
    return f;
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
    try {
        return fn();
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kExitUsage;
}

Int8Matrix load_matrix(const std::string& flag, const std::string& path) {
    if (path.empty())
        throw UsageError(flag + " is required");
    return to_matrix(read_tensor_file(path), path);
}

void check_shape(const Int8Matrix& m, int rows, int cols, const std::string& path) {
    if (m.rows != rows || m.cols != cols)
        throw std::runtime_error(path + ": tensor is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                                 ", config requires " + std::to_string(rows) + "x" + std::to_string(cols));
}

std::optional<bool> all_spans_equal(const json& modules, const std::string& module, const std::string& prefix,
                                    uint64_t expected) {
    if (!modules.contains(module))
        return std::nullopt;
    std::optional<bool> ok;
    for (const auto& [op, o] : modules.at(module).at("ops").items()) {
        if (!op.starts_with(prefix))
            continue;
        const bool match = o.at("min_span").get<uint64_t>() == expected && o.at("max_span").get<uint64_t>() == expected;
        ok = ok.value_or(true) && match;
    }
    return ok;
}

json optional_json(const std::optional<bool>& b) { return b ? json(*b) : json(nullptr); }

}  // namespace

AttentionConfig load_config(const std::optional<std::string>& config_path, const std::optional<std::string>& preset,
                            const std::optional<std::string>& adc) {
    AttentionConfig c;
    if (config_path) {
        std::ifstream in(*config_path);
        if (!in)
            throw std::runtime_error(*config_path + ": cannot open for reading");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw std::runtime_error(*config_path + ": invalid JSON: " + e.what());
        }
        if (preset && j.is_object())
            j["preset"] = *preset;
        try {
            c = config_from_json(j);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(*config_path + ": " + e.what());
        }
    } else if (preset) {
        try {
            c = AttentionConfig::from_preset(*preset);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    } else {
        throw UsageError("one of --config or --preset is required");
    }
    if (adc) {
        try {
            c.adc.mode = parse_adc_mode(*adc);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    return c;
}

LoadedInputs load_inputs(const InputOptions& opts) {
    LoadedInputs in;
    AttentionConfig c = load_config(opts.config_path, opts.preset, opts.adc);
    in.weights.wq = load_matrix("--weights-q", opts.weights_q);
    in.weights.wk = load_matrix("--weights-k", opts.weights_k);
    in.weights.wv = load_matrix("--weights-v", opts.weights_v);
    in.tokens = load_matrix("--tokens", opts.tokens);
    check_shape(in.weights.wq, c.d_model, c.d_k, opts.weights_q);
    check_shape(in.weights.wk, c.d_model, c.d_k, opts.weights_k);
    check_shape(in.weights.wv, c.d_model, c.d_k, opts.weights_v);
    check_shape(in.tokens, c.seq_len, c.d_model, opts.tokens);
    in.config = resolve_shifts(in.weights, in.tokens, c);
    return in;
}

json stats_report(std::istream& trace_text) {
    const auto trace = parse_trace(trace_text);
    const RunStats s = compute_stats(trace);
    json report = to_json(s);
    const json& modules = report.at("modules");
    report["checks"] = {
        {"cim_span_64", optional_json(all_spans_equal(modules, "input_process", "cim.", 64))},
        {"column_write_span_128", optional_json(all_spans_equal(modules, "input_process", "write.", 128))},
    };
    return report;
}

int cmd_gen_lut(const GenLutOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        QFormat in_fmt, out_fmt;
        ExpLut lut;
        try {
            in_fmt = QFormat::parse(opts.in_format);
            out_fmt = QFormat::parse(opts.out_format);
            lut = generate_exp_lut(in_fmt, out_fmt);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
        if (opts.output.empty() || opts.output == "-") {
            lut.write_text(out);
        } else {
            auto f = open_out(opts.output);
            lut.write_text(f);
        }
        return kExitOk;
    });
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.output.empty())
            throw UsageError("--output is required");
        const LoadedInputs in = load_inputs(opts);
        const InferenceResult r = run_inference(in.weights, in.tokens, in.config);
        write_tensor_file(opts.output, to_tensor(r.values.outputs));
        if (opts.trace) {
            auto f = open_out(*opts.trace);
            write_trace(f, r.trace);
        }
        if (opts.stats) {
            auto f = open_out(*opts.stats);
            f << to_json(r.stats).dump(2) << "\n";
        }
        out << "total_cycles " << r.stats.total_cycles << "\n";
        out << "trace_digest " << std::hex << trace_digest(r.trace) << std::dec << "\n";
        return kExitOk;
    });
}

int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.mode != "bitexact" && opts.mode != "float")
            throw UsageError("--mode must be bitexact or float, got '" + opts.mode + "'");
        if (!(opts.tolerance >= 0.0))
            throw UsageError("--tolerance must be non-negative");
        const LoadedInputs in = load_inputs(opts);
        const InferenceResult sim = run_inference(in.weights, in.tokens, in.config);

        json report = {{"mode", opts.mode}, {"tolerance", opts.tolerance}, {"config", to_json(in.config)}};
        bool pass = true;
        if (opts.mode == "bitexact") {
            const FixedAttention ref = attention_fixed_reference(in.weights, in.tokens, in.config);
            auto add = [&](const std::string& name, const auto& a, const auto& b) {
                const ComparisonReport c = compare(std::span(a.data), std::span(b.data), 0.0);
                report["tensors"][name] = to_json(c);
                pass = pass && c.bit_exact;
            };
            add("q", sim.values.q, ref.q);
            add("k", sim.values.k, ref.k);
            add("v", sim.values.v, ref.v);
            add("scores", sim.values.scores, ref.scores);
            add("probs", sim.values.probs, ref.probs);
            add("outputs", sim.values.outputs, ref.outputs);
        } else {
            const RealMatrix expected = attention_float_from_inputs(in.weights, in.tokens);
            const RealMatrix got = dequantize(sim.values.outputs);
            const ComparisonReport c = compare(std::span(got.data), std::span(expected.data), opts.tolerance);
            report["tensors"]["outputs"] = to_json(c);
            pass = c.within_tolerance;
        }
        report["pass"] = pass;
        const std::string text = report.dump(2);
        if (opts.output) {
            auto f = open_out(*opts.output);
            f << text << "\n";
        }
        out << text << "\n" << (pass ? "PASS" : "FAIL") << "\n";
        return pass ? kExitOk : kExitCheckFailed;
    });
}

int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.trace.empty())
            throw UsageError("--trace is required");
        std::ifstream in(opts.trace);
        if (!in)
            throw std::runtime_error(opts.trace + ": cannot open for reading");
        json report;
        try {
            report = stats_report(in);
        } catch (const std::runtime_error& e) {
            throw std::runtime_error(opts.trace + ": " + e.what());
        }
        const std::string text = report.dump(2);
        if (opts.output) {
            auto f = open_out(*opts.output);
            f << text << "\n";
        } else {
            out << text << "\n";
        }
        return kExitOk;
    });
}

int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opts.output_dir.empty())
            throw UsageError("--output is required");
        const AttentionConfig c = load_config(opts.config_path, opts.preset);
        uint64_t seed = 1;
        if (opts.seed) {
            seed = *opts.seed;
        } else if (const char* env = std::getenv("ATTNLEGO_SEED")) {
            try {
                seed = std::stoull(env);
            } catch (const std::exception&) {
                throw UsageError(std::string("ATTNLEGO_SEED is not an unsigned integer: '") + env + "'");
            }
        }
        std::mt19937_64 rng(seed);
        // Clamped Gaussian codes: weights sd 40, tokens sd 16.
        auto random_matrix = [&](int rows, int cols, double scale, double sd) {
            std::normal_distribution<double> dist(0.0, sd);
            Int8Matrix m(rows, cols, scale);
            for (auto& x : m.data)
                x = static_cast<int8_t>(std::clamp(std::nearbyint(dist(rng)), -128.0, 127.0));
            return m;
        };
        const std::filesystem::path dir(opts.output_dir);
        std::filesystem::create_directories(dir);
        for (const char* name : {"wq", "wk", "wv"})
            write_tensor_file((dir / (std::string(name) + ".algo")).string(),
                              to_tensor(random_matrix(c.d_model, c.d_k, 1.0 / 128, 40.0)));
        write_tensor_file((dir / "tokens.algo").string(), to_tensor(random_matrix(c.seq_len, c.d_model, 1.0 / 64, 16.0)));
        out << "seed " << seed << "\n";
        return kExitOk;
    });
}

}  // namespace attnlego
