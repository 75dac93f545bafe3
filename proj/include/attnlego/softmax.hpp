#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "attnlego/numerics.hpp"

namespace attnlego {

inline const QFormat kLutInFormat{true, 4, 3};
inline const QFormat kLutOutFormat{false, 1, 15};
/// Probabilities leave the engine as unsigned Q0.8.
inline constexpr int kProbabilityFractionBits = 8;

/// 256-entry exponent table: 8-bit fixed-point x in, 16-bit e^x out.
struct ExpLut {
    std::array<uint16_t, 256> entries{};
    QFormat in_format = kLutInFormat;
    QFormat out_format = kLutOutFormat;

    /// Indexed by the two's-complement code reinterpreted as unsigned.
    uint16_t lookup(int8_t x) const { return entries[static_cast<uint8_t>(x)]; }

    /// 256 lines of "index value" in decimal, index 0..255.
    void write_text(std::ostream& os) const;
};

ExpLut generate_exp_lut(const QFormat& in_format = kLutInFormat, const QFormat& out_format = kLutOutFormat);

enum class SoftmaxPhase { idle, sum_phase, normalize_phase };
std::string_view to_string(SoftmaxPhase p);

struct SoftmaxControl {
    bool reset = false;
    bool cs = false;
    bool enable = false;
    std::vector<int8_t> v;
};

struct SoftmaxOutputs {
    bool done = false;
    std::vector<uint8_t> p;
};

struct SoftmaxState {
    SoftmaxPhase phase = SoftmaxPhase::idle;
    int lane_count = 32;
    uint64_t accumulator = 0;
    int chunk = 0;
};

/// Lane-parallel softmax. A vector of n words is processed in
/// ceil(n/lanes) chunks: one summation cycle per chunk, then one
/// normalization cycle per chunk. The max pre-pass happens on load.
class SoftmaxEngine {
public:
    explicit SoftmaxEngine(ExpLut lut = generate_exp_lut(), int lane_count = 32);

    const SoftmaxOutputs& step(const SoftmaxControl& control);

    struct Result {
        std::vector<uint8_t> p;
        int cycles = 0;
    };
    Result softmax_vector(std::span<const int8_t> v);

    int cycles_for(int n) const;

    const ExpLut& lut() const { return lut_; }
    const SoftmaxState& state() const { return state_; }
    const SoftmaxOutputs& outputs() const { return out_; }
    int lane_count() const { return state_.lane_count; }

private:
    int chunks() const;

    ExpLut lut_;
    SoftmaxState state_;
    SoftmaxOutputs out_;
    std::vector<int8_t> v_;
    std::vector<uint16_t> e_;
    int8_t max_ = 0;
};

}  // namespace attnlego
