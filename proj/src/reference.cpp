#include "attnlego/reference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "attnlego/errors.hpp"
#include "attnlego/kernels.hpp"
#include "attnlego/pim_macro.hpp"
#include "attnlego/softmax.hpp"

namespace attnlego {

// ---- float ----------------------------------------------------------------

std::vector<double> softmax_float(std::span<const double> v) {
    if (v.empty())
        throw std::invalid_argument("softmax_float: empty vector");
    const double m = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - m);
        sum += out[i];
    }
    for (double& x : out)
        x /= sum;
    return out;
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) + " and " + std::to_string(b.rows));
    RealMatrix c(a.rows, b.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            const double x = a.at(i, k);
            for (int j = 0; j < b.cols; ++j)
                c.at(i, j) += x * b.at(k, j);
        }
    return c;
}

RealMatrix attention_float(const RealMatrix& q, const RealMatrix& k, const RealMatrix& v, int d_k) {
    if (q.cols != k.cols)
        throw ShapeError("attention_float: Q and K widths differ");
    if (k.rows != v.rows)
        throw ShapeError("attention_float: K and V lengths differ");
    if (d_k <= 0)
        throw std::invalid_argument("attention_float: d_k must be positive");
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d_k));
    RealMatrix out(q.rows, v.cols);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < q.rows; ++i) {
        std::vector<double> s(k.rows);
        for (int j = 0; j < k.rows; ++j) {
            double dot = 0.0;
            for (int d = 0; d < q.cols; ++d)
                dot += q.at(i, d) * k.at(j, d);
            s[j] = dot * inv_sqrt;
        }
        const auto a = softmax_float(s);
        for (int j = 0; j < k.rows; ++j)
            for (int c = 0; c < v.cols; ++c)
                out.at(i, c) += a[j] * v.at(j, c);
    }
    return out;
}

RealMatrix dequantize(const Int8Matrix& m) {
    RealMatrix r(m.rows, m.cols);
    for (size_t i = 0; i < m.data.size(); ++i)
        r.data[i] = m.data[i] * m.scale;
    return r;
}

RealMatrix attention_float_from_inputs(const AttentionWeights& weights, const Int8Matrix& tokens) {
    const RealMatrix x = dequantize(tokens);
    return attention_float(matmul(x, dequantize(weights.wq)), matmul(x, dequantize(weights.wk)),
                           matmul(x, dequantize(weights.wv)), weights.wq.cols);
}

// ---- fixed ------------------------------------------------------------------

void check_inputs(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config) {
    config.validate();
    if (weights.wq.empty() || weights.wk.empty() || weights.wv.empty())
        throw PreconditionError("weights missing: W_Q, W_K and W_V must all be loaded");
    for (const Int8Matrix* w : {&weights.wq, &weights.wk, &weights.wv})
        if (w->rows != config.d_model || w->cols != config.d_k)
            throw ShapeError("weight matrix is " + std::to_string(w->rows) + "x" + std::to_string(w->cols) +
                             ", expected d_model x d_k = " + std::to_string(config.d_model) + "x" +
                             std::to_string(config.d_k));
    if (tokens.rows != config.seq_len || tokens.cols != config.d_model)
        throw ShapeError("tokens are " + std::to_string(tokens.rows) + "x" + std::to_string(tokens.cols) +
                         ", expected seq_len x d_model = " + std::to_string(config.seq_len) + "x" +
                         std::to_string(config.d_model));
}

namespace {

constexpr int kAcc = kMacroAccumulatorBits;
constexpr int kStack = kernels::kStackAdderBits;

// Adds one macro's contribution, grouped by row step as the ADC sees it,
// into `total` (stack adder, macro order).
void fold_macro(std::span<const int32_t> partial, int rpp, int cols, const AdcConfig& adc, std::span<int64_t> total) {
    for (int c = 0; c < cols; ++c) {
        int64_t acc = 0;
        for (int rs = 0; rs < rpp; ++rs)
            acc = saturating_accumulate(acc, adc_convert(partial[static_cast<size_t>(rs) * cols + c], adc), kAcc);
        total[c] = saturating_accumulate(total[c], acc, kStack);
    }
}

void check_mirror_geometry(const ApimGeometry& g) {
    // One ADC input is a sum of input_parallelism products, held in int32.
    if (int64_t{g.input_parallelism} * 128 * 128 > INT32_MAX)
        throw std::invalid_argument("reference: input_parallelism too large");
}

}  // namespace

std::vector<int64_t> projection_sums(const Int8Matrix& w, const Int8Matrix& tokens, const AttentionConfig& config) {
    const ApimGeometry& g = config.projection_apim;
    check_mirror_geometry(g);
    const int n = tokens.rows;
    const int d_model = config.d_model;
    const int d_k = config.d_k;
    const int rpp = g.rows_per_port();
    std::vector<int64_t> sums(static_cast<size_t>(n) * d_k, 0);

#pragma omp parallel for schedule(static)
    for (int t = 0; t < n; ++t) {
        std::vector<int32_t> partial(static_cast<size_t>(rpp) * d_k);
        std::span<int64_t> total(sums.data() + static_cast<size_t>(t) * d_k, static_cast<size_t>(d_k));
        for (int base = 0; base < d_model; base += g.rows) {
            std::fill(partial.begin(), partial.end(), 0);
            for (int r = 0; r < g.rows; ++r) {
                const int32_t x = tokens.at(t, base + r);
                int32_t* dst = partial.data() + static_cast<size_t>(r % rpp) * d_k;
                const int8_t* wr = w.data.data() + static_cast<size_t>(base + r) * d_k;
                for (int c = 0; c < d_k; ++c)
                    dst[c] += x * wr[c];
            }
            fold_macro(partial, rpp, d_k, config.adc, total);
        }
    }
    return sums;
}

double projection_scale(const Int8Matrix& tokens, const Int8Matrix& w, int shift) {
    return tokens.scale * w.scale * std::ldexp(1.0, shift);
}

namespace {

Int8Matrix requantize_matrix(const std::vector<int64_t>& sums, int rows, int cols, int shift, double scale) {
    Int8Matrix m(rows, cols, scale);
    for (size_t i = 0; i < sums.size(); ++i)
        m.data[i] = requantize_to_int8(sums[i], shift);
    return m;
}

int smallest_non_saturating_shift(const std::vector<int64_t>& sums) {
    int64_t lo = 0, hi = 0;
    for (int64_t s : sums) {
        lo = std::min(lo, s);
        hi = std::max(hi, s);
    }
    for (int shift = 0; shift <= 40; ++shift)
        if (shift_round_half_even(lo, shift) >= -128 && shift_round_half_even(hi, shift) <= 127)
            return shift;
    return 40;
}

}  // namespace

AttentionConfig resolve_shifts(const AttentionWeights& weights, const Int8Matrix& tokens, AttentionConfig config) {
    check_inputs(weights, tokens, config);
    if (!config.shift_q)
        config.shift_q = smallest_non_saturating_shift(projection_sums(weights.wq, tokens, config));
    if (!config.shift_k)
        config.shift_k = smallest_non_saturating_shift(projection_sums(weights.wk, tokens, config));
    if (!config.shift_v)
        config.shift_v = smallest_non_saturating_shift(projection_sums(weights.wv, tokens, config));
    if (!config.shift_score) {
        const double sq = projection_scale(tokens, weights.wq, *config.shift_q);
        const double sk = projection_scale(tokens, weights.wk, *config.shift_k);
        // 2^s * sq * sk / sqrt(d_k) should equal the LUT input scale.
        const double ideal = std::log2(config.lut_in.scale() * std::sqrt(static_cast<double>(config.d_k)) / (sq * sk));
        config.shift_score = static_cast<int>(std::clamp(std::nearbyint(ideal), 0.0, 40.0));
    }
    if (!config.shift_value)
        config.shift_value = kProbabilityFractionBits;
    return config;
}

double score_scale_ratio(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config) {
    if (!config.shifts_resolved())
        throw PreconditionError("score_scale_ratio: shifts unresolved");
    const double sq = projection_scale(tokens, weights.wq, *config.shift_q);
    const double sk = projection_scale(tokens, weights.wk, *config.shift_k);
    return std::ldexp(1.0, *config.shift_score) * sq * sk /
           (std::sqrt(static_cast<double>(config.d_k)) * config.lut_in.scale());
}

double output_scale(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config) {
    if (!config.shifts_resolved())
        throw PreconditionError("output_scale: shifts unresolved");
    return projection_scale(tokens, weights.wv, *config.shift_v) *
           std::ldexp(1.0, *config.shift_value - kProbabilityFractionBits);
}

FixedAttention attention_fixed_reference(const AttentionWeights& weights, const Int8Matrix& tokens,
                                         const AttentionConfig& config) {
    check_inputs(weights, tokens, config);
    if (!config.shifts_resolved())
        throw PreconditionError("attention_fixed_reference: requantization shifts must be resolved");
    const int n = config.seq_len;
    const int d_k = config.d_k;

    FixedAttention r;
    r.q = requantize_matrix(projection_sums(weights.wq, tokens, config), n, d_k, *config.shift_q,
                            projection_scale(tokens, weights.wq, *config.shift_q));
    r.k = requantize_matrix(projection_sums(weights.wk, tokens, config), n, d_k, *config.shift_k,
                            projection_scale(tokens, weights.wk, *config.shift_k));
    r.v = requantize_matrix(projection_sums(weights.wv, tokens, config), n, d_k, *config.shift_v,
                            projection_scale(tokens, weights.wv, *config.shift_v));

    // Scores, with K^T laid out d_k x n.
    const ApimGeometry& g = config.score_apim;
    check_mirror_geometry(g);
    const int rpp = g.rows_per_port();
    std::vector<int8_t> kt(static_cast<size_t>(d_k) * n);
    for (int j = 0; j < n; ++j)
        for (int d = 0; d < d_k; ++d)
            kt[static_cast<size_t>(d) * n + j] = r.k.at(j, d);

    r.scores = Int8Matrix(n, n, config.lut_in.scale());
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n; ++t) {
        std::vector<int32_t> partial(static_cast<size_t>(rpp) * n);
        std::vector<int64_t> total(n, 0);
        for (int base = 0; base < d_k; base += g.rows) {
            std::fill(partial.begin(), partial.end(), 0);
            for (int d = 0; d < g.rows; ++d) {
                const int32_t qd = r.q.at(t, base + d);
                int32_t* dst = partial.data() + static_cast<size_t>(d % rpp) * n;
                const int8_t* kr = kt.data() + static_cast<size_t>(base + d) * n;
                for (int j = 0; j < n; ++j)
                    dst[j] += qd * kr[j];
            }
            fold_macro(partial, rpp, n, config.adc, total);
        }
        for (int j = 0; j < n; ++j)
            r.scores.at(t, j) = requantize_to_int8(total[j], *config.shift_score);
    }

    // Softmax over each whole score row.
    const ExpLut lut = generate_exp_lut(config.lut_in, config.lut_out);
    r.probs = UInt8Matrix(n, n);
    for (int t = 0; t < n; ++t) {
        const auto row = r.scores.row(t);
        const int8_t m = *std::max_element(row.begin(), row.end());
        int64_t sum = 0;
        for (int8_t s : row)
            sum += lut.lookup(static_cast<int8_t>(saturate_signed(int64_t{s} - m, 8)));
        auto p = r.probs.row(t);
        for (int j = 0; j < n; ++j) {
            const int64_t e = lut.lookup(static_cast<int8_t>(saturate_signed(int64_t{row[j]} - m, 8)));
            p[j] = static_cast<uint8_t>(
                std::clamp<int64_t>(div_round_half_even(e << kProbabilityFractionBits, sum), 0, 255));
        }
    }

    // Value stage.
    r.outputs = Int8Matrix(n, d_k, output_scale(weights, tokens, config));
#pragma omp parallel for schedule(static)
    for (int t = 0; t < n; ++t) {
        std::vector<int64_t> acc(d_k, 0);
        for (int j = 0; j < n; ++j) {
            const int64_t p = r.probs.at(t, j);
            if (p == 0)
                continue;
            for (int c = 0; c < d_k; ++c)
                acc[c] += p * r.v.at(j, c);
        }
        for (int c = 0; c < d_k; ++c)
            r.outputs.at(t, c) = requantize_to_int8(acc[c], *config.shift_value);
    }
    return r;
}

// ---- compare ----------------------------------------------------------------

namespace {

template <typename T>
ComparisonReport compare_impl(std::span<const T> sim, std::span<const T> ref, double tolerance) {
    if (sim.size() != ref.size())
        throw ShapeError("compare: sizes differ (" + std::to_string(sim.size()) + " vs " +
                         std::to_string(ref.size()) + ")");
    ComparisonReport r;
    double total = 0.0;
    for (size_t i = 0; i < sim.size(); ++i) {
        const double err = std::abs(static_cast<double>(sim[i]) - static_cast<double>(ref[i]));
        if (sim[i] != ref[i]) {
            r.bit_exact = false;
            ++r.mismatch_count;
            if (r.mismatches.size() < kMaxReportedMismatches)
                r.mismatches.push_back(i);
        }
        r.max_abs_error = std::max(r.max_abs_error, err);
        total += err;
    }
    r.mean_abs_error = sim.empty() ? 0.0 : total / static_cast<double>(sim.size());
    r.within_tolerance = r.max_abs_error <= tolerance;
    return r;
}

}  // namespace

ComparisonReport compare(std::span<const int8_t> simulated, std::span<const int8_t> reference, double tolerance) {
    return compare_impl(simulated, reference, tolerance);
}

ComparisonReport compare(std::span<const uint8_t> simulated, std::span<const uint8_t> reference, double tolerance) {
    return compare_impl(simulated, reference, tolerance);
}

ComparisonReport compare(std::span<const double> simulated, std::span<const double> reference, double tolerance) {
    return compare_impl(simulated, reference, tolerance);
}

nlohmann::json to_json(const ComparisonReport& r) {
    return {{"max_abs_error", r.max_abs_error},
            {"mean_abs_error", r.mean_abs_error},
            {"bit_exact", r.bit_exact},
            {"within_tolerance", r.within_tolerance},
            {"mismatch_count", r.mismatch_count},
            {"mismatches", r.mismatches}};
}

}  // namespace attnlego
