#include "attnlego/input_process.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "attnlego/errors.hpp"

namespace attnlego {

IpMode decode_ip_mode(bool web, bool cimeb) {
    if (web && cimeb)
        return IpMode::read;
    if (!web && cimeb)
        return IpMode::write;
    if (web && !cimeb)
        return IpMode::cim;
    return IpMode::idle;
}

std::optional<Bank> decode_weight_sel(uint8_t weight_sel) {
    switch (weight_sel) {
    case 0b000: return Bank::q;
    case 0b001: return Bank::k;
    case 0b010: return Bank::v;
    default: return std::nullopt;
    }
}

uint8_t encode_weight_sel(Bank bank) { return static_cast<uint8_t>(bank); }

std::string_view to_string(IpMode mode) {
    switch (mode) {
    case IpMode::idle: return "idle";
    case IpMode::write: return "write";
    case IpMode::read: return "read";
    case IpMode::cim: return "cim";
    }
    return "?";
}

std::string_view to_string(Bank bank) {
    switch (bank) {
    case Bank::q: return "q";
    case Bank::k: return "k";
    case Bank::v: return "v";
    }
    return "?";
}

void InputProcessConfig::validate() const {
    macro.validate();
    adc.validate();
    if (d_model <= 0 || d_model % macro.rows != 0)
        throw std::invalid_argument("InputProcessConfig: d_model must be a positive multiple of the macro rows");
    if (d_k <= 0 || d_k > macro.cols)
        throw std::invalid_argument("InputProcessConfig: d_k must be in [1, macro cols]");
    for (int s : shifts)
        if (s < 0 || s > 40)
            throw std::invalid_argument("InputProcessConfig: requantization shift out of range");
}

InputProcess::InputProcess(InputProcessConfig config) : config_(std::move(config)) {
    config_.validate();
    for (auto& bank : banks_)
        bank.assign(config_.macros_per_bank(), ApimMacro(config_.macro, config_.adc));
}

uint32_t InputProcess::max_cell_writes() const {
    uint32_t m = 0;
    for (const auto& bank : banks_)
        for (const auto& macro : bank)
            m = std::max(m, macro.max_write_count());
    return m;
}

std::vector<int64_t> InputProcess::projection_sums(Bank bank, std::span<const int8_t> x) const {
    if (static_cast<int>(x.size()) != config_.d_model)
        throw ShapeError("compute_projection: x has " + std::to_string(x.size()) + " words, expected d_model " +
                         std::to_string(config_.d_model));
    const auto& stack = banks_[static_cast<size_t>(bank)];
    std::vector<int64_t> sums(config_.macro.cols);
    kernels::tiled_mvm(std::span(&stack, 1), x, sums, config_.exec);
    sums.resize(config_.d_k);
    return sums;
}

std::vector<int8_t> InputProcess::project(Bank bank, std::span<const int8_t> x) const {
    const auto sums = projection_sums(bank, x);
    std::vector<int8_t> row(config_.d_k);
    const int shift = config_.shifts[static_cast<size_t>(bank)];
    for (int c = 0; c < config_.d_k; ++c)
        row[c] = requantize_to_int8(sums[c], shift);
    return row;
}

void InputProcess::latch(const IpControl& control, IpMode mode, Bank bank) {
    if (mode == IpMode::write || mode == IpMode::read) {
        if (control.col_sel < 0 || control.col_sel >= config_.d_k)
            throw IndexError("input_process: col_sel " + std::to_string(control.col_sel) + " outside [0, " +
                             std::to_string(config_.d_k) + ")");
    }
    if (mode == IpMode::write || mode == IpMode::cim) {
        if (static_cast<int>(control.data_in.size()) != config_.d_model)
            throw ShapeError("input_process: data_in has " + std::to_string(control.data_in.size()) +
                             " words, expected d_model " + std::to_string(config_.d_model));
    }
    state_.mode = mode;
    state_.busy = true;
    state_.cycle_counter = 0;
    state_.selected_bank = bank;
    col_sel_ = control.col_sel;
    with_v_ = false;
    switch (mode) {
    case IpMode::write:
        buffer_ = control.data_in;
        break;
    case IpMode::read:
        buffer_.assign(config_.d_model, 0);
        break;
    case IpMode::cim:
        pending_ = project(bank, control.data_in);
        with_v_ = control.with_v && bank == Bank::q;
        if (with_v_)
            pending_v_ = project(Bank::v, control.data_in);
        break;
    case IpMode::idle:
        break;
    }
}

void InputProcess::finish() {
    out_.done = true;
    switch (state_.mode) {
    case IpMode::read: out_.mem_data_out = buffer_; break;
    case IpMode::cim:
        out_.data_out = std::move(pending_);
        out_.data_out_v = with_v_ ? std::move(pending_v_) : std::vector<int8_t>{};
        break;
    default: break;
    }
    state_.mode = IpMode::idle;
    state_.busy = false;
    state_.cycle_counter = 0;
}

const IpOutputs& InputProcess::step(const IpControl& control) {
    out_.done = false;
    if (control.reset) {
        state_ = InputProcessState{};
        buffer_.clear();
        pending_.clear();
        pending_v_.clear();
        return out_;
    }

    if (!state_.busy) {
        if (!control.cs)
            return out_;
        const IpMode mode = decode_ip_mode(control.web, control.cimeb);
        if (mode == IpMode::idle)
            return out_;
        const auto bank = decode_weight_sel(control.weight_sel);
        if (!bank)
            return out_;
        latch(control, mode, *bank);
    }

    const int r = state_.cycle_counter;
    auto& stack = banks_[static_cast<size_t>(state_.selected_bank)];
    const int rows = config_.macro.rows;
    switch (state_.mode) {
    case IpMode::write:
        for (size_t m = 0; m < stack.size(); ++m)
            stack[m].write_cell(r, col_sel_, buffer_[m * rows + r]);
        break;
    case IpMode::read:
        for (size_t m = 0; m < stack.size(); ++m)
            buffer_[m * rows + r] = stack[m].read_cell(r, col_sel_);
        break;
    default: break;
    }
    ++state_.cycle_counter;

    const int needed = state_.mode == IpMode::cim ? cim_cycles() : rows;
    if (state_.cycle_counter >= needed)
        finish();
    return out_;
}

int InputProcess::write_column(Bank bank, int col_sel, std::span<const int8_t> column) {
    if (state_.busy)
        throw BusyError("input_process: write_column while busy");
    if (col_sel < 0 || col_sel >= config_.d_k)
        throw IndexError("write_column: col_sel " + std::to_string(col_sel) + " outside [0, " +
                         std::to_string(config_.d_k) + ")");
    IpControl c;
    c.cs = true;
    c.web = false;
    c.cimeb = true;
    c.weight_sel = encode_weight_sel(bank);
    c.col_sel = col_sel;
    c.data_in.assign(column.begin(), column.end());
    int cycles = 1;
    const IpOutputs* o = &step(c);
    const IpControl hold;
    while (!o->done) {
        o = &step(hold);
        ++cycles;
    }
    return cycles;
}

InputProcess::ReadResult InputProcess::read_column(Bank bank, int col_sel) {
    if (state_.busy)
        throw BusyError("input_process: read_column while busy");
    if (col_sel < 0 || col_sel >= config_.d_k)
        throw IndexError("read_column: col_sel " + std::to_string(col_sel) + " outside [0, " +
                         std::to_string(config_.d_k) + ")");
    IpControl c;
    c.cs = true;
    c.web = true;
    c.cimeb = true;
    c.weight_sel = encode_weight_sel(bank);
    c.col_sel = col_sel;
    int cycles = 1;
    const IpOutputs* o = &step(c);
    const IpControl hold;
    while (!o->done) {
        o = &step(hold);
        ++cycles;
    }
    return {o->mem_data_out, cycles};
}

InputProcess::Projection InputProcess::compute_projection(Bank bank, std::span<const int8_t> x) {
    if (state_.busy)
        throw BusyError("input_process: compute_projection while busy");
    if (static_cast<int>(x.size()) != config_.d_model)
        throw ShapeError("compute_projection: x has " + std::to_string(x.size()) + " words, expected d_model " +
                         std::to_string(config_.d_model));
    IpControl c;
    c.cs = true;
    c.web = true;
    c.cimeb = false;
    c.weight_sel = encode_weight_sel(bank);
    c.data_in.assign(x.begin(), x.end());
    int cycles = 1;
    const IpOutputs* o = &step(c);
    const IpControl hold;
    while (!o->done) {
        o = &step(hold);
        ++cycles;
    }
    return {o->data_out, cycles};
}

}  // namespace attnlego
