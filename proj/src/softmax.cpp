#include "attnlego/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "attnlego/errors.hpp"

namespace attnlego {

void ExpLut::write_text(std::ostream& os) const {
    for (size_t i = 0; i < entries.size(); ++i)
        os << i << ' ' << entries[i] << '\n';
}

ExpLut generate_exp_lut(const QFormat& in_format, const QFormat& out_format) {
    in_format.validate();
    out_format.validate();
    if (!in_format.is_signed || in_format.width() != 8)
        throw std::invalid_argument("generate_exp_lut: input format must be signed 8-bit, got " +
                                    in_format.to_string());
    if (out_format.is_signed || out_format.width() != 16)
        throw std::invalid_argument("generate_exp_lut: output format must be unsigned 16-bit, got " +
                                    out_format.to_string());
    ExpLut lut;
    lut.in_format = in_format;
    lut.out_format = out_format;
    for (int code = -128; code < 128; ++code) {
        const double x = dequantize(FixedWord{code, in_format});
        lut.entries[static_cast<uint8_t>(code)] = static_cast<uint16_t>(quantize(std::exp(x), out_format).raw);
    }
    return lut;
}

std::string_view to_string(SoftmaxPhase p) {
    switch (p) {
    case SoftmaxPhase::idle: return "idle";
    case SoftmaxPhase::sum_phase: return "sum_phase";
    case SoftmaxPhase::normalize_phase: return "normalize_phase";
    }
    return "?";
}

SoftmaxEngine::SoftmaxEngine(ExpLut lut, int lane_count) : lut_(std::move(lut)) {
    if (lane_count < 1)
        throw std::invalid_argument("SoftmaxEngine: lane_count must be >= 1");
    state_.lane_count = lane_count;
}

int SoftmaxEngine::chunks() const {
    return static_cast<int>((v_.size() + state_.lane_count - 1) / state_.lane_count);
}

int SoftmaxEngine::cycles_for(int n) const {
    if (n <= 0)
        throw std::invalid_argument("softmax: empty vector");
    return 2 * ((n + state_.lane_count - 1) / state_.lane_count);
}

const SoftmaxOutputs& SoftmaxEngine::step(const SoftmaxControl& control) {
    out_.done = false;
    if (control.reset) {
        const int lanes = state_.lane_count;
        state_ = SoftmaxState{};
        state_.lane_count = lanes;
        v_.clear();
        e_.clear();
        return out_;
    }

    if (state_.phase == SoftmaxPhase::idle) {
        if (!control.cs || !control.enable)
            return out_;
        if (control.v.empty())
            throw std::invalid_argument("softmax: empty vector");
        v_ = control.v;
        e_.assign(v_.size(), 0);
        max_ = *std::max_element(v_.begin(), v_.end());
        state_.phase = SoftmaxPhase::sum_phase;
        state_.accumulator = 0;
        state_.chunk = 0;
    }

    const size_t lanes = static_cast<size_t>(state_.lane_count);
    const size_t lo = static_cast<size_t>(state_.chunk) * lanes;
    const size_t hi = std::min(v_.size(), lo + lanes);
    if (state_.phase == SoftmaxPhase::sum_phase) {
        for (size_t i = lo; i < hi; ++i) {
            const auto d = static_cast<int8_t>(saturate_signed(int64_t{v_[i]} - max_, 8));
            e_[i] = lut_.lookup(d);
            state_.accumulator += e_[i];
        }
        if (++state_.chunk == chunks()) {
            state_.phase = SoftmaxPhase::normalize_phase;
            state_.chunk = 0;
            out_.p.assign(v_.size(), 0);
        }
    } else if (state_.phase == SoftmaxPhase::normalize_phase) {
        const auto sum = static_cast<int64_t>(state_.accumulator);
        for (size_t i = lo; i < hi; ++i) {
            const int64_t q = div_round_half_even(int64_t{e_[i]} << kProbabilityFractionBits, sum);
            out_.p[i] = static_cast<uint8_t>(std::clamp<int64_t>(q, 0, 255));
        }
        if (++state_.chunk == chunks()) {
            out_.done = true;
            state_.phase = SoftmaxPhase::idle;
            state_.chunk = 0;
        }
    }
    return out_;
}

SoftmaxEngine::Result SoftmaxEngine::softmax_vector(std::span<const int8_t> v) {
    if (v.empty())
        throw std::invalid_argument("softmax_vector: empty vector");
    if (state_.phase != SoftmaxPhase::idle)
        throw BusyError("softmax: softmax_vector while busy");
    SoftmaxControl c;
    c.cs = true;
    c.enable = true;
    c.v.assign(v.begin(), v.end());
    int cycles = 1;
    const SoftmaxOutputs* o = &step(c);
    const SoftmaxControl hold;
    while (!o->done) {
        o = &step(hold);
        ++cycles;
    }
    return {o->p, cycles};
}

}  // namespace attnlego
