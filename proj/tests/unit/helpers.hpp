#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "attnlego/config.hpp"
#include "attnlego/reference.hpp"
#include "oracle/oracle.hpp"

namespace testutil {

inline attnlego::Int8Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale, int lo = -128,
                                          int hi = 127) {
    std::uniform_int_distribution<int> d(lo, hi);
    attnlego::Int8Matrix m(rows, cols, scale);
    for (auto& x : m.data)
        x = static_cast<int8_t>(d(rng));
    return m;
}

inline attnlego::Int8Matrix gaussian_matrix(std::mt19937_64& rng, int rows, int cols, double scale, double sd) {
    std::normal_distribution<double> d(0.0, sd);
    attnlego::Int8Matrix m(rows, cols, scale);
    for (auto& x : m.data)
        x = static_cast<int8_t>(std::clamp(std::nearbyint(d(rng)), -128.0, 127.0));
    return m;
}

struct Instance {
    attnlego::AttentionWeights weights;
    attnlego::Int8Matrix tokens;
    attnlego::AttentionConfig config;  // shifts resolved
};

inline Instance random_instance(uint64_t seed, attnlego::AttentionConfig base = attnlego::AttentionConfig::desk_small()) {
    std::mt19937_64 rng(seed);
    Instance in;
    in.weights.wq = random_matrix(rng, base.d_model, base.d_k, 1.0 / 128);
    in.weights.wk = random_matrix(rng, base.d_model, base.d_k, 1.0 / 128);
    in.weights.wv = random_matrix(rng, base.d_model, base.d_k, 1.0 / 128);
    in.tokens = random_matrix(rng, base.seq_len, base.d_model, 1.0 / 64);
    in.config = attnlego::resolve_shifts(in.weights, in.tokens, base);
    return in;
}

/// Clamped Gaussian codes: weights sd 40, tokens sd 16.
inline Instance typical_instance(uint64_t seed, attnlego::AttentionConfig base = attnlego::AttentionConfig::desk_small()) {
    std::mt19937_64 rng(seed);
    Instance in;
    in.weights.wq = gaussian_matrix(rng, base.d_model, base.d_k, 1.0 / 128, 40.0);
    in.weights.wk = gaussian_matrix(rng, base.d_model, base.d_k, 1.0 / 128, 40.0);
    in.weights.wv = gaussian_matrix(rng, base.d_model, base.d_k, 1.0 / 128, 40.0);
    in.tokens = gaussian_matrix(rng, base.seq_len, base.d_model, 1.0 / 64, 16.0);
    in.config = attnlego::resolve_shifts(in.weights, in.tokens, base);
    return in;
}

inline oracle::Problem to_problem(const Instance& in) {
    const auto& c = in.config;
    oracle::Problem p;
    p.d_model = c.d_model;
    p.d_k = c.d_k;
    p.seq_len = c.seq_len;
    p.wq = in.weights.wq.data;
    p.wk = in.weights.wk.data;
    p.wv = in.weights.wv.data;
    p.x = in.tokens.data;
    const auto geo = [](const attnlego::ApimGeometry& g) {
        return oracle::Geometry{g.rows, g.cols, g.input_parallelism, g.output_parallelism};
    };
    p.proj = geo(c.projection_apim);
    p.score = geo(c.score_apim);
    p.adc = oracle::Adc{c.adc.mode == attnlego::AdcMode::quantized, c.adc.bits, c.adc.full_scale};
    p.shift_q = *c.shift_q;
    p.shift_k = *c.shift_k;
    p.shift_v = *c.shift_v;
    p.shift_score = *c.shift_score;
    p.shift_value = *c.shift_value;
    return p;
}

}  // namespace testutil
