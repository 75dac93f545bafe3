#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "attnlego/config.hpp"

namespace attnlego {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

/// Bad flags or flag combinations; maps to kExitUsage.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct InputOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> preset;
    std::optional<std::string> adc;
    std::string weights_q, weights_k, weights_v;
    std::string tokens;
};

struct RunOptions : InputOptions {
    std::string output;
    std::optional<std::string> trace;
    std::optional<std::string> stats;
};

struct CheckOptions : InputOptions {
    std::string mode = "bitexact";
    double tolerance = 0.0;
    std::optional<std::string> output;
};

struct GenLutOptions {
    std::string in_format = "Q4.3";
    std::string out_format = "UQ1.15";
    std::string output;
};

struct StatsOptions {
    std::string trace;
    std::optional<std::string> output;
};

struct GenDataOptions {
    std::optional<std::string> config_path;
    std::optional<std::string> preset;
    std::string output_dir;
    std::optional<uint64_t> seed;
};

struct LoadedInputs {
    AttentionConfig config;  // shifts resolved
    AttentionWeights weights;
    Int8Matrix tokens;
};

/// --config file (its own preset key replaced by --preset when both are
/// given) or --preset alone; --adc overrides the ADC mode.
AttentionConfig load_config(const std::optional<std::string>& config_path, const std::optional<std::string>& preset,
                            const std::optional<std::string>& adc = std::nullopt);
LoadedInputs load_inputs(const InputOptions& opts);

/// Trace-only report plus the fixed cycle-count checks.
nlohmann::json stats_report(std::istream& trace_text);

int cmd_gen_lut(const GenLutOptions& opts, std::ostream& out, std::ostream& err);
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_check(const CheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& opts, std::ostream& out, std::ostream& err);
/// Random weights and tokens for a config. Seed: --seed, else ATTNLEGO_SEED, else 1.
int cmd_gen_data(const GenDataOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace attnlego
