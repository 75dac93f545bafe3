#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "attnlego/numerics.hpp"

namespace attnlego {

/// Port-sharing geometry of one APIM macro. Each input port drives
/// rows/input_parallelism rows and each output port shares
/// cols/output_parallelism columns, so one MVM takes
/// rows_per_port * cols_per_port steps.
struct ApimGeometry {
    int rows = 128;
    int cols = 128;
    int input_parallelism = 16;
    int output_parallelism = 16;

    int rows_per_port() const { return rows / input_parallelism; }
    int cols_per_port() const { return cols / output_parallelism; }
    int mvm_cycles() const { return rows_per_port() * cols_per_port(); }
    void validate() const;

    friend bool operator==(const ApimGeometry&, const ApimGeometry&) = default;
};

/// Width of the per-column accumulator behind each macro.
inline constexpr int kMacroAccumulatorBits = 24;

/// Weight-stationary array of signed 8-bit cells with a stepped MVM.
class ApimMacro {
public:
    explicit ApimMacro(ApimGeometry geometry = {}, AdcConfig adc = {});

    void write_cell(int row, int col, int8_t value);
    int8_t read_cell(int row, int col) const;

    /// One MVM step: output port q produces the ADC-converted dot product of
    /// the input_parallelism active inputs with column q*cols_per_port +
    /// col_group. Input port p drives row p*rows_per_port + row_step.
    void mvm_step(std::span<const int8_t> inputs, int row_step, int col_group, std::span<int64_t> out) const;
    std::vector<int64_t> mvm_step(std::span<const int8_t> inputs, int row_step, int col_group) const;

    struct MvmResult {
        std::vector<int32_t> outputs;
        int cycles = 0;
    };

    /// Full matrix-vector product over all (row_step, col_group) pairs,
    /// accumulated per column into 24-bit saturating accumulators.
    MvmResult mvm_full(std::span<const int8_t> input) const;

    /// Same as mvm_full, writing into a caller buffer of `cols` entries.
    /// Returns the cycle count. With an ideal ADC and at most 256 rows the
    /// dense product is used; it equals the stepped result bit for bit.
    int mvm_full_into(std::span<const int8_t> input, std::span<int32_t> out) const;

    /// The literal step-by-step walk (row_step-major, then col_group).
    /// `on_step` is invoked once per visited pair.
    int mvm_full_stepped(std::span<const int8_t> input, std::span<int32_t> out,
                         const std::function<void(int row_step, int col_group)>& on_step = {}) const;

    const ApimGeometry& geometry() const { return geometry_; }
    const AdcConfig& adc() const { return adc_; }

    /// Number of write_cell calls that touched (row, col).
    uint32_t write_count(int row, int col) const;
    uint32_t max_write_count() const;

private:
    void check_index(int row, int col, const char* op) const;
    bool dense_path_exact() const;

    ApimGeometry geometry_;
    AdcConfig adc_;
    std::vector<int8_t> cells_;  // row-major
    std::vector<uint32_t> writes_;
};

}  // namespace attnlego
