#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "attnlego/kernels.hpp"
#include "attnlego/numerics.hpp"
#include "attnlego/pim_macro.hpp"

namespace attnlego {

/// Row-major int8 matrix with a real-valued scale (value = code * scale).
struct Int8Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<int8_t> data;
    double scale = 1.0;

    Int8Matrix() = default;
    Int8Matrix(int r, int c, double s = 1.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0), scale(s) {}

    int8_t& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    int8_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    std::span<const int8_t> row(int r) const { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    std::span<int8_t> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    bool empty() const { return data.empty(); }

    friend bool operator==(const Int8Matrix&, const Int8Matrix&) = default;
};

struct UInt8Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<uint8_t> data;

    UInt8Matrix() = default;
    UInt8Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0) {}
    uint8_t at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    std::span<const uint8_t> row(int r) const { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }
    std::span<uint8_t> row(int r) { return {data.data() + static_cast<size_t>(r) * cols, static_cast<size_t>(cols)}; }

    friend bool operator==(const UInt8Matrix&, const UInt8Matrix&) = default;
};

/// W_Q, W_K, W_V, each d_model x d_k; a projection is x^T W.
struct AttentionWeights {
    Int8Matrix wq, wk, wv;
};

/// Every geometry/format/timing parameter of one simulated accelerator.
/// Shift fields left empty mean "auto" and must be resolved (see
/// resolve_shifts) before simulation.
struct AttentionConfig {
    std::string preset = "paper-default";
    int d_model = 4096;
    int d_k = 128;
    int seq_len = 2048;
    ApimGeometry projection_apim{128, 128, 16, 16};
    ApimGeometry score_apim{32, 32, 16, 16};
    AdcConfig adc{};
    std::optional<int> shift_q, shift_k, shift_v, shift_score, shift_value;
    QFormat lut_in = QFormat{true, 4, 3};
    QFormat lut_out = QFormat{false, 1, 15};
    int softmax_lanes = 32;
    int bus_width = 64;
    bool pipeline = true;
    bool qkv_sequential = true;
    int k_load_cycles = 32;
    int value_latency = 0;
    kernels::Exec exec = kernels::Exec::parallel;

    static AttentionConfig paper_default();
    static AttentionConfig desk_small();
    static AttentionConfig from_preset(const std::string& name);

    bool shifts_resolved() const;
    void validate() const;
};

nlohmann::json to_json(const AttentionConfig& c);

/// Expands "preset" first, then applies every other key. Unknown keys,
/// wrong types and invalid values throw std::invalid_argument.
AttentionConfig config_from_json(const nlohmann::json& j);

}  // namespace attnlego
