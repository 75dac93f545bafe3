#include "attnlego/score.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "attnlego/errors.hpp"

namespace attnlego {

std::string_view to_string(ScoreFsm s) {
    switch (s) {
    case ScoreFsm::idle: return "idle";
    case ScoreFsm::k_mode: return "k_mode";
    case ScoreFsm::q_mode: return "q_mode";
    }
    return "?";
}

int ScoreConfig::address_bits() const {
    return seq_len <= 1 ? 1 : std::bit_width(static_cast<unsigned>(seq_len - 1));
}

void ScoreConfig::validate() const {
    apim.validate();
    adc.validate();
    if (apim.rows != apim.cols)
        throw std::invalid_argument("ScoreConfig: score APIMs must be square");
    if (d_k <= 0 || d_k % apim.rows != 0)
        throw std::invalid_argument("ScoreConfig: d_k must be a positive multiple of the APIM size");
    if (seq_len <= 0)
        throw std::invalid_argument("ScoreConfig: seq_len must be positive");
    if (k_load_cycles < 1)
        throw std::invalid_argument("ScoreConfig: k_load_cycles must be >= 1");
    if (shift < 0 || shift > 40)
        throw std::invalid_argument("ScoreConfig: shift out of range");
}

ScoreModule::ScoreModule(ScoreConfig config) : config_(std::move(config)) {
    config_.validate();
    col_cims_.assign(config_.col_cims(),
                     kernels::MacroStack(config_.stacks_per_col_cim(), ApimMacro(config_.apim, config_.adc)));
}

int8_t ScoreModule::stored_k(int token, int dim) const {
    if (token < 0 || token >= config_.seq_len || dim < 0 || dim >= config_.d_k)
        throw IndexError("stored_k: index out of range");
    const int n = config_.apim_dim();
    return col_cims_[token / n][dim / n].read_cell(dim % n, token % n);
}

uint32_t ScoreModule::max_cell_writes() const {
    uint32_t m = 0;
    for (const auto& stack : col_cims_)
        for (const auto& macro : stack)
            m = std::max(m, macro.max_write_count());
    return m;
}

std::vector<int64_t> ScoreModule::score_sums(std::span<const int8_t> q_row) const {
    if (static_cast<int>(q_row.size()) != config_.d_k)
        throw ShapeError("compute_score_row: q_row has " + std::to_string(q_row.size()) + " words, expected d_k " +
                         std::to_string(config_.d_k));
    std::vector<int64_t> sums(static_cast<size_t>(config_.col_cims()) * config_.apim.cols);
    kernels::tiled_mvm(col_cims_, q_row, sums, config_.exec);
    sums.resize(config_.seq_len);
    return sums;
}

void ScoreModule::write_k_rows(int cycle) {
    // Cycle i writes rows [i*n/L, (i+1)*n/L) of every stacked APIM in parallel.
    const int n = config_.apim_dim();
    const int L = config_.k_load_cycles;
    const int lo = static_cast<int>(int64_t{cycle} * n / L);
    const int hi = static_cast<int>(int64_t{cycle + 1} * n / L);
    const int token = state_.pending_address;
    auto& stack = col_cims_[token / n];
    for (int r = lo; r < hi; ++r)
        for (size_t s = 0; s < stack.size(); ++s)
            stack[s].write_cell(r, token % n, k_latch_[s * n + r]);
}

const ScoreOutputs& ScoreModule::step(const ScoreControl& control) {
    out_.input_done = false;
    out_.output_done = false;
    if (control.reset) {
        state_ = ScoreState{};
        k_latch_.clear();
        pending_.clear();
        return out_;
    }

    if (state_.state == ScoreFsm::idle) {
        if (!control.cs)
            return out_;
        if (control.k_mode_enable) {
            if (control.k_address < 0 || control.k_address >= config_.seq_len)
                throw IndexError("score: K_address " + std::to_string(control.k_address) + " outside [0, " +
                                 std::to_string(config_.seq_len) + ")");
            if (static_cast<int>(control.k_input.size()) != config_.d_k)
                throw ShapeError("score: K_input must hold d_k words");
            state_.state = ScoreFsm::k_mode;
            state_.pending_address = control.k_address;
            state_.cycle_counter = 0;
            k_latch_ = control.k_input;
        } else if (control.q_mode_enable) {
            if (static_cast<int>(control.q_input.size()) != config_.d_k)
                throw ShapeError("score: Q_input must hold d_k words");
            state_.state = ScoreFsm::q_mode;
            state_.cycle_counter = 0;
            const auto sums = score_sums(control.q_input);
            pending_.resize(sums.size());
            for (size_t j = 0; j < sums.size(); ++j)
                pending_[j] = requantize_to_int8(sums[j], config_.shift);
        } else {
            return out_;
        }
    }

    if (state_.state == ScoreFsm::k_mode) {
        write_k_rows(state_.cycle_counter);
        if (++state_.cycle_counter >= config_.k_load_cycles) {
            out_.input_done = true;
            state_ = ScoreState{};
        }
    } else if (state_.state == ScoreFsm::q_mode) {
        if (++state_.cycle_counter >= config_.q_mode_cycles()) {
            out_.output_done = true;
            out_.qk_output = std::move(pending_);
            pending_.clear();
            state_ = ScoreState{};
        }
    }
    return out_;
}

int ScoreModule::load_k_row(int k_address, std::span<const int8_t> k_row) {
    if (state_.state != ScoreFsm::idle)
        throw BusyError("score: load_k_row while not idle");
    if (k_address < 0 || k_address >= config_.seq_len)
        throw IndexError("load_k_row: K_address " + std::to_string(k_address) + " outside [0, " +
                         std::to_string(config_.seq_len) + ")");
    ScoreControl c;
    c.cs = true;
    c.k_mode_enable = true;
    c.k_address = k_address;
    c.k_input.assign(k_row.begin(), k_row.end());
    int cycles = 1;
    const ScoreOutputs* o = &step(c);
    const ScoreControl hold;
    while (!o->input_done) {
        o = &step(hold);
        ++cycles;
    }
    return cycles;
}

ScoreModule::ScoreRow ScoreModule::compute_score_row(std::span<const int8_t> q_row) {
    if (state_.state != ScoreFsm::idle)
        throw BusyError("score: compute_score_row while not idle");
    if (static_cast<int>(q_row.size()) != config_.d_k)
        throw ShapeError("compute_score_row: q_row has " + std::to_string(q_row.size()) + " words, expected d_k " +
                         std::to_string(config_.d_k));
    ScoreControl c;
    c.cs = true;
    c.q_mode_enable = true;
    c.q_input.assign(q_row.begin(), q_row.end());
    int cycles = 1;
    const ScoreOutputs* o = &step(c);
    const ScoreControl hold;
    while (!o->output_done) {
        o = &step(hold);
        ++cycles;
    }
    return {o->qk_output, cycles};
}

}  // namespace attnlego
