#include "attnlego/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace attnlego {

double QFormat::scale() const { return std::ldexp(1.0, -fraction_bits); }

int64_t QFormat::min_code() const {
    return is_signed ? -(int64_t{1} << (integer_bits + fraction_bits)) : 0;
}

int64_t QFormat::max_code() const { return (int64_t{1} << (integer_bits + fraction_bits)) - 1; }

double QFormat::min_value() const { return static_cast<double>(min_code()) * scale(); }
double QFormat::max_value() const { return static_cast<double>(max_code()) * scale(); }

void QFormat::validate() const {
    if (integer_bits < 0 || fraction_bits < 0)
        throw std::invalid_argument("QFormat: negative bit count");
    if (width() < 1 || width() > 32)
        throw std::invalid_argument("QFormat: width must be in [1, 32], got " + std::to_string(width()));
}

std::string QFormat::to_string() const {
    return (is_signed ? "Q" : "UQ") + std::to_string(integer_bits) + "." + std::to_string(fraction_bits);
}

QFormat QFormat::parse(std::string_view text) {
    QFormat f;
    std::string_view rest = text;
    if (rest.starts_with("UQ")) {
        f.is_signed = false;
        rest.remove_prefix(2);
    } else if (rest.starts_with("Q")) {
        f.is_signed = true;
        rest.remove_prefix(1);
    } else {
        throw std::invalid_argument("bad Q-format '" + std::string(text) + "' (expected Qi.f or UQi.f)");
    }
    auto dot = rest.find('.');
    if (dot == std::string_view::npos)
        throw std::invalid_argument("bad Q-format '" + std::string(text) + "' (missing '.')");
    auto parse_int = [&](std::string_view s) {
        int v = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc{} || p != s.data() + s.size())
            throw std::invalid_argument("bad Q-format '" + std::string(text) + "'");
        return v;
    };
    f.integer_bits = parse_int(rest.substr(0, dot));
    f.fraction_bits = parse_int(rest.substr(dot + 1));
    f.validate();
    return f;
}

FixedWord quantize(double value, const QFormat& format) {
    format.validate();
    if (!std::isfinite(value))
        throw std::invalid_argument("quantize: non-finite input");
    // Round half to even via the default floating-point rounding mode.
    double scaled = std::nearbyint(std::ldexp(value, format.fraction_bits));
    scaled = std::clamp(scaled, static_cast<double>(format.min_code()), static_cast<double>(format.max_code()));
    return FixedWord{static_cast<int64_t>(scaled), format};
}

double dequantize(const FixedWord& word) { return static_cast<double>(word.raw) * word.format.scale(); }

int64_t div_round_half_even(int64_t num, int64_t den) {
    if (den <= 0)
        throw std::invalid_argument("div_round_half_even: denominator must be positive");
    int64_t q = num / den;
    int64_t r = num % den;
    if (r < 0) {
        q -= 1;
        r += den;
    }
    // 0 <= r < den
    if (2 * r > den || (2 * r == den && (q & 1) != 0))
        ++q;
    return q;
}

int64_t shift_round_half_even(int64_t value, int shift) {
    if (shift < 0 || shift > 62)
        throw std::invalid_argument("shift_round_half_even: shift out of range");
    if (shift == 0)
        return value;
    return div_round_half_even(value, int64_t{1} << shift);
}

int64_t saturate_signed(int64_t value, int width) {
    if (width < 1 || width > 63)
        throw std::invalid_argument("saturate_signed: width out of range");
    const int64_t hi = (int64_t{1} << (width - 1)) - 1;
    const int64_t lo = -(int64_t{1} << (width - 1));
    return std::clamp(value, lo, hi);
}

int64_t saturating_accumulate(int64_t acc, int64_t addend, int width) {
    if (width < 1 || width > 32)
        throw std::invalid_argument("saturating_accumulate: width must be in [1, 32]");
    // Operands are bounded well inside int64 for width <= 32.
    return saturate_signed(acc + addend, width);
}

int8_t requantize_to_int8(int64_t acc, int shift) {
    return static_cast<int8_t>(saturate_signed(shift_round_half_even(acc, shift), 8));
}

int64_t AdcConfig::step() const { return std::max<int64_t>(1, full_scale >> (bits - 1)); }

void AdcConfig::validate() const {
    if (bits < 1 || bits > 32)
        throw std::invalid_argument("AdcConfig: bits must be in [1, 32]");
    if (full_scale <= 0)
        throw std::invalid_argument("AdcConfig: full_scale must be positive");
}

int64_t adc_convert(int64_t analog_sum, const AdcConfig& adc) {
    if (adc.mode == AdcMode::ideal)
        return analog_sum;
    const int64_t step = adc.step();
    const int64_t top = (int64_t{1} << (adc.bits - 1)) - 1;
    const int64_t code = std::clamp(div_round_half_even(analog_sum, step), -top - 1, top);
    return code * step;
}

std::string_view to_string(AdcMode mode) { return mode == AdcMode::ideal ? "ideal" : "quantized"; }

AdcMode parse_adc_mode(std::string_view text) {
    if (text == "ideal")
        return AdcMode::ideal;
    if (text == "quantized")
        return AdcMode::quantized;
    throw std::invalid_argument("unknown ADC mode '" + std::string(text) + "'");
}

}  // namespace attnlego
