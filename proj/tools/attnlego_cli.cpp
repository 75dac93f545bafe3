#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "attnlego/workbench.hpp"

namespace {

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
    app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

void input_flags(CLI::App* app, attnlego::InputOptions& o) {
    optional_flag(app, "--config", o.config_path, "JSON run configuration");
    optional_flag(app, "--preset", o.preset, "paper-default or desk-small");
    optional_flag(app, "--adc", o.adc, "ADC mode override: ideal or quantized");
    app->add_option("--weights-q", o.weights_q, "W_Q tensor file")->required();
    app->add_option("--weights-k", o.weights_k, "W_K tensor file")->required();
    app->add_option("--weights-v", o.weights_v, "W_V tensor file")->required();
    app->add_option("--tokens", o.tokens, "token tensor file")->required();
}

}  // namespace

int main(int argc, char** argv) {
    using namespace attnlego;
    CLI::App app{"AttentionLego cycle-level simulator"};
    app.require_subcommand(1);

    GenLutOptions lut;
    auto* gen_lut = app.add_subcommand("gen-lut", "write the 256-entry exponent table");
    gen_lut->add_option("--in-format", lut.in_format, "table input format")->capture_default_str();
    gen_lut->add_option("--out-format", lut.out_format, "table output format")->capture_default_str();
    gen_lut->add_option("--output", lut.output, "output path (stdout when omitted)");

    RunOptions run;
    auto* run_cmd = app.add_subcommand("run", "simulate one inference");
    input_flags(run_cmd, run);
    run_cmd->add_option("--output", run.output, "output tensor file")->required();
    optional_flag(run_cmd, "--trace", run.trace, "trace output path");
    optional_flag(run_cmd, "--stats", run.stats, "stats JSON output path");

    CheckOptions check;
    auto* check_cmd = app.add_subcommand("check", "compare the simulator against a reference");
    input_flags(check_cmd, check);
    check_cmd->add_option("--mode", check.mode, "bitexact or float")->capture_default_str();
    check_cmd->add_option("--tolerance", check.tolerance, "float mode bound on |error|")->capture_default_str();
    optional_flag(check_cmd, "--output", check.output, "report JSON output path");

    StatsOptions stats;
    auto* stats_cmd = app.add_subcommand("stats", "cycle report from a trace file");
    stats_cmd->add_option("--trace", stats.trace, "trace file")->required();
    optional_flag(stats_cmd, "--output", stats.output, "report JSON output path");

    GenDataOptions data;
    auto* data_cmd = app.add_subcommand("gen-data", "random weights and tokens for a configuration");
    optional_flag(data_cmd, "--config", data.config_path, "JSON run configuration");
    optional_flag(data_cmd, "--preset", data.preset, "paper-default or desk-small");
    data_cmd->add_option("--output", data.output_dir, "output directory")->required();
    optional_flag(data_cmd, "--seed", data.seed, "RNG seed (default: ATTNLEGO_SEED, else 1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    if (*gen_lut)
        return cmd_gen_lut(lut, std::cout, std::cerr);
    if (*run_cmd)
        return cmd_run(run, std::cout, std::cerr);
    if (*check_cmd)
        return cmd_check(check, std::cout, std::cerr);
    if (*stats_cmd)
        return cmd_stats(stats, std::cout, std::cerr);
    return cmd_gen_data(data, std::cout, std::cerr);
}
