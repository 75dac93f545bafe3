#include "oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace oracle {

int64_t adc(int64_t s, const Adc& a) {
    if (!a.quantized)
        return s;
    const int64_t half = int64_t{1} << (a.bits - 1);
    const int64_t step = std::max<int64_t>(1, a.full_scale / half);
    int64_t best = -half;
    for (int64_t c = -half; c < half; ++c) {
        const int64_t d_new = std::llabs(s - c * step);
        const int64_t d_best = std::llabs(s - best * step);
        if (d_new < d_best || (d_new == d_best && c % 2 == 0))
            best = c;
    }
    return best * step;
}

int64_t round_shift(int64_t v, int shift) {
    if (shift == 0)
        return v;
    const int64_t den = int64_t{1} << shift;
    int64_t q = v / den;
    int64_t r = v % den;
    if (r < 0) {
        r += den;
        q -= 1;
    }
    if (2 * r > den || (2 * r == den && (q & 1)))
        q += 1;
    return q;
}

int64_t clamp_bits(int64_t v, int bits) {
    const int64_t hi = (int64_t{1} << (bits - 1)) - 1;
    return std::clamp(v, -hi - 1, hi);
}

int8_t requant8(int64_t v, int shift) { return static_cast<int8_t>(clamp_bits(round_shift(v, shift), 8)); }

std::vector<int64_t> macro_mvm(const std::vector<int8_t>& w, const std::vector<int8_t>& x, const Geometry& g,
                               const Adc& a) {
    const int rpp = g.rows / g.in_par;
    const int cpp = g.cols / g.out_par;
    std::vector<int64_t> acc(g.cols, 0);
    for (int rs = 0; rs < rpp; ++rs)
        for (int cg = 0; cg < cpp; ++cg)
            for (int q = 0; q < g.out_par; ++q) {
                const int col = q * cpp + cg;
                int64_t s = 0;
                for (int p = 0; p < g.in_par; ++p) {
                    const int row = p * rpp + rs;
                    s += int64_t{w[static_cast<size_t>(row) * g.cols + col]} * x[row];
                }
                acc[col] = clamp_bits(acc[col] + adc(s, a), 24);
            }
    return acc;
}

std::vector<int64_t> stack_mvm(const std::vector<int8_t>& w, int k_rows, int n_cols, const std::vector<int8_t>& x,
                               const Geometry& g, const Adc& a) {
    std::vector<int64_t> total(g.cols, 0);
    for (int m = 0; m < k_rows / g.rows; ++m) {
        std::vector<int8_t> tile(static_cast<size_t>(g.rows) * g.cols, 0);
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < n_cols; ++c)
                tile[static_cast<size_t>(r) * g.cols + c] = w[static_cast<size_t>(m * g.rows + r) * n_cols + c];
        const std::vector<int8_t> xs(x.begin() + m * g.rows, x.begin() + (m + 1) * g.rows);
        const auto part = macro_mvm(tile, xs, g, a);
        for (int c = 0; c < g.cols; ++c)
            total[c] = clamp_bits(total[c] + part[c], 32);
    }
    total.resize(n_cols);
    return total;
}

std::vector<uint16_t> exp_table(int in_frac, int out_frac) {
    std::vector<uint16_t> t(256);
    for (int i = 0; i < 256; ++i) {
        const int code = i < 128 ? i : i - 256;
        const double e = std::exp(code / std::pow(2.0, in_frac)) * std::pow(2.0, out_frac);
        t[i] = static_cast<uint16_t>(std::min(65535.0, std::nearbyint(e)));
    }
    return t;
}

std::vector<uint8_t> softmax_q8(const std::vector<int8_t>& v, const std::vector<uint16_t>& table) {
    const int m = *std::max_element(v.begin(), v.end());
    std::vector<int64_t> e(v.size());
    int64_t sum = 0;
    for (size_t i = 0; i < v.size(); ++i) {
        const int d = std::max(-128, v[i] - m);
        e[i] = table[static_cast<uint8_t>(static_cast<int8_t>(d))];
        sum += e[i];
    }
    std::vector<uint8_t> p(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        // round(num / sum) half to even, by remainder comparison.
        const int64_t num = e[i] * 256;
        int64_t q = num / sum;
        const int64_t r = num % sum;
        if (2 * r > sum || (2 * r == sum && (q & 1)))
            ++q;
        p[i] = static_cast<uint8_t>(std::min<int64_t>(q, 255));
    }
    return p;
}

namespace {

std::vector<int8_t> project(const Problem& p, const std::vector<int8_t>& w, int shift) {
    std::vector<int8_t> out(static_cast<size_t>(p.seq_len) * p.d_k);
    for (int t = 0; t < p.seq_len; ++t) {
        const std::vector<int8_t> xt(p.x.begin() + static_cast<size_t>(t) * p.d_model,
                                     p.x.begin() + static_cast<size_t>(t + 1) * p.d_model);
        const auto sums = stack_mvm(w, p.d_model, p.d_k, xt, p.proj, p.adc);
        for (int c = 0; c < p.d_k; ++c)
            out[static_cast<size_t>(t) * p.d_k + c] = requant8(sums[c], shift);
    }
    return out;
}

}  // namespace

Result attention(const Problem& p) {
    Result r;
    r.q = project(p, p.wq, p.shift_q);
    r.k = project(p, p.wk, p.shift_k);
    r.v = project(p, p.wv, p.shift_v);

    // K^T as a d_k x seq_len matrix, cut into score-APIM-wide column blocks.
    const int n = p.seq_len;
    const int blk = p.score.cols;
    r.scores.resize(static_cast<size_t>(n) * n);
    for (int t = 0; t < n; ++t) {
        const std::vector<int8_t> qt(r.q.begin() + static_cast<size_t>(t) * p.d_k,
                                     r.q.begin() + static_cast<size_t>(t + 1) * p.d_k);
        for (int j0 = 0; j0 < n; j0 += blk) {
            const int width = std::min(blk, n - j0);
            std::vector<int8_t> kt(static_cast<size_t>(p.d_k) * width);
            for (int d = 0; d < p.d_k; ++d)
                for (int j = 0; j < width; ++j)
                    kt[static_cast<size_t>(d) * width + j] = r.k[static_cast<size_t>(j0 + j) * p.d_k + d];
            const auto sums = stack_mvm(kt, p.d_k, width, qt, p.score, p.adc);
            for (int j = 0; j < width; ++j)
                r.scores[static_cast<size_t>(t) * n + j0 + j] = requant8(sums[j], p.shift_score);
        }
    }

    const auto table = exp_table(3, 15);
    r.probs.resize(static_cast<size_t>(n) * n);
    for (int t = 0; t < n; ++t) {
        const std::vector<int8_t> row(r.scores.begin() + static_cast<size_t>(t) * n,
                                      r.scores.begin() + static_cast<size_t>(t + 1) * n);
        const auto pr = softmax_q8(row, table);
        std::copy(pr.begin(), pr.end(), r.probs.begin() + static_cast<size_t>(t) * n);
    }

    r.outputs.resize(static_cast<size_t>(n) * p.d_k);
    for (int t = 0; t < n; ++t)
        for (int c = 0; c < p.d_k; ++c) {
            int64_t acc = 0;
            for (int j = 0; j < n; ++j)
                acc += int64_t{r.probs[static_cast<size_t>(t) * n + j]} * r.v[static_cast<size_t>(j) * p.d_k + c];
            r.outputs[static_cast<size_t>(t) * p.d_k + c] = requant8(acc, p.shift_value);
        }
    return r;
}

}  // namespace oracle
