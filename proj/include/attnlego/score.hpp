#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "attnlego/kernels.hpp"
#include "attnlego/pim_macro.hpp"

namespace attnlego {

struct ScoreConfig {
    int d_k = 128;
    int seq_len = 2048;
    /// Geometry of each square APIM in a col_cim stack.
    ApimGeometry apim{32, 32, 16, 16};
    AdcConfig adc{};
    int shift = 0;
    /// Cycles to write one K row into the array.
    int k_load_cycles = 32;
    kernels::Exec exec = kernels::Exec::parallel;

    int apim_dim() const { return apim.rows; }
    int col_cims() const { return (seq_len + apim.cols - 1) / apim.cols; }
    int stacks_per_col_cim() const { return d_k / apim.rows; }
    /// Width of K_address (11 for seq_len 2048).
    int address_bits() const;
    /// Q_mode latency: stacked MVMs plus one accumulate/requantize cycle.
    int q_mode_cycles() const { return apim.mvm_cycles() + 1; }
    void validate() const;
};

enum class ScoreFsm { idle, k_mode, q_mode };
std::string_view to_string(ScoreFsm s);

struct ScoreControl {
    bool reset = false;
    bool cs = false;
    bool k_mode_enable = false;
    bool q_mode_enable = false;
    int k_address = 0;
    std::vector<int8_t> k_input;
    std::vector<int8_t> q_input;
};

struct ScoreOutputs {
    bool input_done = false;
    bool output_done = false;
    std::vector<int8_t> qk_output;
};

struct ScoreState {
    ScoreFsm state = ScoreFsm::idle;
    int pending_address = 0;
    int cycle_counter = 0;
};

/// QK^T engine: ceil(seq_len/32) col_cims, each d_k/32 stacked 32x32 APIMs,
/// holding K^T stationary (token j is column j of the array).
class ScoreModule {
public:
    explicit ScoreModule(ScoreConfig config);

    const ScoreOutputs& step(const ScoreControl& control);

    /// Drives K_mode to completion; returns cycles.
    int load_k_row(int k_address, std::span<const int8_t> k_row);
    struct ScoreRow {
        std::vector<int8_t> scores;
        int cycles = 0;
    };
    ScoreRow compute_score_row(std::span<const int8_t> q_row);

    /// Wide stack sums of q . K^T for every token; no clocking.
    std::vector<int64_t> score_sums(std::span<const int8_t> q_row) const;

    /// Stored K value for (token, dim), read back from the array cells.
    int8_t stored_k(int token, int dim) const;
    uint32_t max_cell_writes() const;

    const ScoreState& state() const { return state_; }
    const ScoreOutputs& outputs() const { return out_; }
    const ScoreConfig& config() const { return config_; }

private:
    void write_k_rows(int cycle);

    ScoreConfig config_;
    std::vector<kernels::MacroStack> col_cims_;
    ScoreState state_;
    ScoreOutputs out_;
    std::vector<int8_t> k_latch_;
    std::vector<int8_t> pending_;
};

}  // namespace attnlego
