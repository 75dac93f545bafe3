#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

#include "attnlego/config.hpp"

namespace attnlego {

struct RealMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    RealMatrix() = default;
    RealMatrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), 0.0) {}
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

// ---- floating-point oracle ------------------------------------------------

/// e^v_i / sum_j e^v_j with max subtraction.
std::vector<double> softmax_float(std::span<const double> v);

/// softmax(Q K^T / sqrt(d_k)) V in double precision, softmax per row.
RealMatrix attention_float(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v, int d_k);

RealMatrix dequantize(const Int8Matrix& m);
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);

/// Float attention of the real-valued tokens and weights (X W_Q, X W_K, X W_V).
RealMatrix attention_float_from_inputs(const AttentionWeights& weights, const Int8Matrix& tokens);

// ---- bit-exact fixed-point reference ---------------------------------------

/// Every intermediate of the quantized datapath. Scales on q/k/v/outputs
/// carry the real value of one code; scores are in the LUT input format.
struct FixedAttention {
    Int8Matrix q, k, v;
    Int8Matrix scores;
    UInt8Matrix probs;
    Int8Matrix outputs;
};

/// Plain-loop mirror of the simulated arithmetic: same ADC grouping,
/// accumulator widths, requantization shifts and exponent table.
FixedAttention attention_fixed_reference(const AttentionWeights& weights, const Int8Matrix& tokens,
                                         const AttentionConfig& config);

/// Wide (pre-requantization) projection sums tokens x W, seq_len x d_k.
std::vector<int64_t> projection_sums(const Int8Matrix& w, const Int8Matrix& tokens, const AttentionConfig& config);

/// Fills every "auto" shift. Projection shifts are the smallest that keep the
/// token set from saturating int8; the score shift folds 1/sqrt(d_k) and the
/// operand scales into the LUT input scale (nearest power of two); the value
/// shift renormalizes Q0.8 probabilities.
AttentionConfig resolve_shifts(const AttentionWeights& weights, const Int8Matrix& tokens, AttentionConfig config);

/// Real scale of one code of a projection output for the given bank shift.
double projection_scale(const Int8Matrix& tokens, const Int8Matrix& w, int shift);

/// Ratio of the score scale actually realized by shift_score to the ideal
/// LUT input scale (1.0 when the power-of-two fold is exact).
double score_scale_ratio(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config);

/// Real value of one output code.
double output_scale(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config);

/// Shape/precondition checks shared with the simulator entry point.
void check_inputs(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config);

// ---- comparison -----------------------------------------------------------

struct ComparisonReport {
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;
    bool bit_exact = true;
    bool within_tolerance = true;
    size_t mismatch_count = 0;
    /// First mismatching flat indices (capped).
    std::vector<size_t> mismatches;
};

inline constexpr size_t kMaxReportedMismatches = 32;

/// Integer codes; errors are in LSB units.
ComparisonReport compare(std::span<const int8_t> simulated, std::span<const int8_t> reference, double tolerance);
ComparisonReport compare(std::span<const uint8_t> simulated, std::span<const uint8_t> reference, double tolerance);
ComparisonReport compare(std::span<const double> simulated, std::span<const double> reference, double tolerance);

nlohmann::json to_json(const ComparisonReport& r);

}  // namespace attnlego
