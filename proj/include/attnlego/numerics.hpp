#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace attnlego {

/// Two's-complement (or unsigned) fixed-point format Qi.f.
///
/// Width is sign + integer + fraction bits and must lie in [1, 32]. Signed
/// formats cover [-2^i, 2^i - 2^-f]; unsigned formats cover [0, 2^i - 2^-f].
struct QFormat {
    bool is_signed = true;
    int integer_bits = 0;
    int fraction_bits = 7;

    constexpr int width() const { return (is_signed ? 1 : 0) + integer_bits + fraction_bits; }
    double scale() const;
    int64_t min_code() const;
    int64_t max_code() const;
    double min_value() const;
    double max_value() const;
    void validate() const;

    /// "Q4.3" for signed, "UQ1.15" for unsigned.
    std::string to_string() const;
    static QFormat parse(std::string_view text);

    friend bool operator==(const QFormat&, const QFormat&) = default;
};

struct FixedWord {
    int64_t raw = 0;
    QFormat format;
};

FixedWord quantize(double value, const QFormat& format);
double dequantize(const FixedWord& word);

/// num / den rounded half-to-even. den must be positive.
int64_t div_round_half_even(int64_t num, int64_t den);

/// Arithmetic right shift by `shift` >= 0 with round-half-to-even.
int64_t shift_round_half_even(int64_t value, int shift);

/// Clamp to the signed `width`-bit range, width in [1, 63].
int64_t saturate_signed(int64_t value, int width);

int64_t saturating_accumulate(int64_t acc, int64_t addend, int width);

/// Narrow a wide accumulator to the int8 datapath: shift, round, saturate.
int8_t requantize_to_int8(int64_t acc, int shift);

enum class AdcMode { ideal, quantized };

struct AdcConfig {
    AdcMode mode = AdcMode::ideal;
    int bits = 6;
    int64_t full_scale = 16 * 127 * 127;

    /// Reconstruction step, full_scale / 2^(bits-1) rounded down (at least 1).
    int64_t step() const;
    void validate() const;

    friend bool operator==(const AdcConfig&, const AdcConfig&) = default;
};

/// Digital partial sum reconstructed from one analog column sum.
int64_t adc_convert(int64_t analog_sum, const AdcConfig& adc);

std::string_view to_string(AdcMode mode);
AdcMode parse_adc_mode(std::string_view text);

}  // namespace attnlego
