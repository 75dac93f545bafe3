#include "attnlego/pim_macro.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "attnlego/errors.hpp"

namespace attnlego {

void ApimGeometry::validate() const {
    if (rows <= 0 || cols <= 0 || input_parallelism <= 0 || output_parallelism <= 0)
        throw std::invalid_argument("ApimGeometry: dimensions must be positive");
    if (rows % input_parallelism != 0)
        throw std::invalid_argument("ApimGeometry: input_parallelism must divide rows");
    if (cols % output_parallelism != 0)
        throw std::invalid_argument("ApimGeometry: output_parallelism must divide cols");
}

ApimMacro::ApimMacro(ApimGeometry geometry, AdcConfig adc)
    : geometry_(geometry), adc_(adc) {
    geometry_.validate();
    adc_.validate();
    const auto n = static_cast<size_t>(geometry_.rows) * static_cast<size_t>(geometry_.cols);
    cells_.assign(n, 0);
    writes_.assign(n, 0);
}

void ApimMacro::check_index(int row, int col, const char* op) const {
    if (row < 0 || row >= geometry_.rows || col < 0 || col >= geometry_.cols)
        throw IndexError(std::string(op) + ": cell (" + std::to_string(row) + ", " + std::to_string(col) +
                         ") outside " + std::to_string(geometry_.rows) + "x" + std::to_string(geometry_.cols) +
                         " macro");
}

void ApimMacro::write_cell(int row, int col, int8_t value) {
    check_index(row, col, "write_cell");
    const auto i = static_cast<size_t>(row) * geometry_.cols + col;
    cells_[i] = value;
    ++writes_[i];
}

int8_t ApimMacro::read_cell(int row, int col) const {
    check_index(row, col, "read_cell");
    return cells_[static_cast<size_t>(row) * geometry_.cols + col];
}

uint32_t ApimMacro::write_count(int row, int col) const {
    check_index(row, col, "write_count");
    return writes_[static_cast<size_t>(row) * geometry_.cols + col];
}

uint32_t ApimMacro::max_write_count() const {
    return writes_.empty() ? 0 : *std::max_element(writes_.begin(), writes_.end());
}

void ApimMacro::mvm_step(std::span<const int8_t> inputs, int row_step, int col_group, std::span<int64_t> out) const {
    const int rpp = geometry_.rows_per_port();
    const int cpp = geometry_.cols_per_port();
    if (row_step < 0 || row_step >= rpp || col_group < 0 || col_group >= cpp)
        throw IndexError("mvm_step: (row_step " + std::to_string(row_step) + ", col_group " +
                         std::to_string(col_group) + ") outside " + std::to_string(rpp) + "x" +
                         std::to_string(cpp) + " step grid");
    if (static_cast<int>(inputs.size()) != geometry_.input_parallelism)
        throw ShapeError("mvm_step: expected " + std::to_string(geometry_.input_parallelism) + " inputs");
    if (static_cast<int>(out.size()) != geometry_.output_parallelism)
        throw ShapeError("mvm_step: expected " + std::to_string(geometry_.output_parallelism) + " outputs");

    for (int q = 0; q < geometry_.output_parallelism; ++q) {
        const int col = q * cpp + col_group;
        int64_t analog = 0;
        for (int p = 0; p < geometry_.input_parallelism; ++p) {
            const int row = p * rpp + row_step;
            analog += int64_t{inputs[p]} * cells_[static_cast<size_t>(row) * geometry_.cols + col];
        }
        out[q] = adc_convert(analog, adc_);
    }
}

std::vector<int64_t> ApimMacro::mvm_step(std::span<const int8_t> inputs, int row_step, int col_group) const {
    std::vector<int64_t> out(geometry_.output_parallelism);
    mvm_step(inputs, row_step, col_group, out);
    return out;
}

ApimMacro::MvmResult ApimMacro::mvm_full(std::span<const int8_t> input) const {
    MvmResult r;
    r.outputs.resize(geometry_.cols);
    r.cycles = mvm_full_into(input, r.outputs);
    return r;
}

bool ApimMacro::dense_path_exact() const {
    // |sum| <= rows * 128 * 128 must stay inside the 24-bit accumulator.
    return adc_.mode == AdcMode::ideal &&
           int64_t{geometry_.rows} * 128 * 128 <= (int64_t{1} << (kMacroAccumulatorBits - 1)) - 1;
}

int ApimMacro::mvm_full_into(std::span<const int8_t> input, std::span<int32_t> out) const {
    if (!dense_path_exact())
        return mvm_full_stepped(input, out);
    if (static_cast<int>(input.size()) != geometry_.rows)
        throw ShapeError("mvm_full: input length " + std::to_string(input.size()) + " != rows " +
                         std::to_string(geometry_.rows));
    if (static_cast<int>(out.size()) != geometry_.cols)
        throw ShapeError("mvm_full: output length must equal cols");

    const int cols = geometry_.cols;
    std::fill(out.begin(), out.end(), 0);
    int32_t* acc = out.data();
    for (int r = 0; r < geometry_.rows; ++r) {
        const int32_t x = input[r];
        if (x == 0)
            continue;
        const int8_t* w = cells_.data() + static_cast<size_t>(r) * cols;
        for (int c = 0; c < cols; ++c)
            acc[c] += x * w[c];
    }
    return geometry_.mvm_cycles();
}

int ApimMacro::mvm_full_stepped(std::span<const int8_t> input, std::span<int32_t> out,
                                const std::function<void(int, int)>& on_step) const {
    if (static_cast<int>(input.size()) != geometry_.rows)
        throw ShapeError("mvm_full: input length " + std::to_string(input.size()) + " != rows " +
                         std::to_string(geometry_.rows));
    if (static_cast<int>(out.size()) != geometry_.cols)
        throw ShapeError("mvm_full: output length must equal cols");

    const int rpp = geometry_.rows_per_port();
    const int cpp = geometry_.cols_per_port();
    std::vector<int64_t> acc(geometry_.cols, 0);
    std::vector<int8_t> active(geometry_.input_parallelism);
    std::vector<int64_t> partial(geometry_.output_parallelism);
    int cycles = 0;
    for (int rs = 0; rs < rpp; ++rs) {
        for (int p = 0; p < geometry_.input_parallelism; ++p)
            active[p] = input[p * rpp + rs];
        for (int cg = 0; cg < cpp; ++cg) {
            mvm_step(active, rs, cg, partial);
            for (int q = 0; q < geometry_.output_parallelism; ++q) {
                const int col = q * cpp + cg;
                acc[col] = saturating_accumulate(acc[col], partial[q], kMacroAccumulatorBits);
            }
            if (on_step)
                on_step(rs, cg);
            ++cycles;
        }
    }
    for (int c = 0; c < geometry_.cols; ++c)
        out[c] = static_cast<int32_t>(acc[c]);
    return cycles;
}

}  // namespace attnlego
