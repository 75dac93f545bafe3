#include <stdexcept>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"

#include "attnlego/numerics.hpp"
#include "oracle/oracle.hpp"

using namespace attnlego;

namespace {
const QFormat kQ07{true, 0, 7};
}

TEST_CASE("qformat width, range and text form") {
    CHECK(kQ07.width() == 8);
    CHECK(kQ07.min_code() == -128);
    CHECK(kQ07.max_code() == 127);
    CHECK(kQ07.min_value() == -1.0);
    CHECK(kQ07.max_value() == doctest::Approx(1.0 - 1.0 / 128));

    const QFormat uq{false, 1, 15};
    CHECK(uq.width() == 16);
    CHECK(uq.min_code() == 0);
    CHECK(uq.max_code() == 65535);
    CHECK(uq.to_string() == "UQ1.15");
    CHECK(QFormat::parse("Q4.3") == QFormat{true, 4, 3});
    CHECK(QFormat::parse("UQ1.15") == uq);
    CHECK(QFormat::parse(QFormat{true, 10, 21}.to_string()) == QFormat{true, 10, 21});

    CHECK_THROWS_AS(QFormat::parse("Q4"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("X4.3"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("Q4.x"), std::invalid_argument);
    CHECK_THROWS_AS(QFormat::parse("Q20.20"), std::invalid_argument);
    CHECK_THROWS_AS((QFormat{false, 0, 0}.validate()), std::invalid_argument);
    CHECK_NOTHROW((QFormat{false, 32, 0}.validate()));
}

TEST_CASE("quantize examples") {
    CHECK(quantize(0.0, kQ07).raw == 0);
    CHECK(quantize(0.0, QFormat{false, 1, 15}).raw == 0);
    CHECK(quantize(0.5, kQ07).raw == 64);
    CHECK(quantize(2.0, kQ07).raw == 127);
    CHECK(quantize(-5.0, kQ07).raw == -128);
    CHECK(quantize(-1.0, QFormat{false, 1, 15}).raw == 0);
}

TEST_CASE("quantize rounds half to even") {
    CHECK(quantize(0.5 / 128, kQ07).raw == 0);
    CHECK(quantize(1.5 / 128, kQ07).raw == 2);
    CHECK(quantize(2.5 / 128, kQ07).raw == 2);
    CHECK(quantize(-0.5 / 128, kQ07).raw == 0);
    CHECK(quantize(-1.5 / 128, kQ07).raw == -2);
}

TEST_CASE("quantize rejects non-finite input") {
    CHECK_THROWS_AS(quantize(std::numeric_limits<double>::quiet_NaN(), kQ07), std::invalid_argument);
    CHECK_THROWS_AS(quantize(std::numeric_limits<double>::infinity(), kQ07), std::invalid_argument);
    CHECK_THROWS_AS(quantize(-std::numeric_limits<double>::infinity(), kQ07), std::invalid_argument);
}

TEST_CASE("dequantize examples") {
    CHECK(dequantize(FixedWord{0, kQ07}) == 0.0);
    CHECK(dequantize(FixedWord{64, kQ07}) == 0.5);
    CHECK(dequantize(FixedWord{-128, kQ07}) == -1.0);
}

TEST_CASE("grid values round-trip and quantize is monotone") {
    for (const QFormat f : {kQ07, QFormat{true, 4, 3}, QFormat{false, 1, 15}, QFormat{true, 2, 9}}) {
        for (int64_t code = f.min_code(); code <= f.max_code(); ++code) {
            const double x = dequantize(FixedWord{code, f});
            REQUIRE(quantize(x, f).raw == code);
        }
    }
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    for (int i = 0; i < 20000; ++i) {
        double a = d(rng), b = d(rng);
        if (a > b)
            std::swap(a, b);
        REQUIRE(quantize(a, kQ07).raw <= quantize(b, kQ07).raw);
        const double clamped = std::clamp(a, kQ07.min_value(), kQ07.max_value());
        REQUIRE(std::abs(dequantize(quantize(a, kQ07)) - clamped) <= kQ07.scale() / 2);
    }
}

TEST_CASE("rounded division and shifts") {
    CHECK(div_round_half_even(5, 2) == 2);
    CHECK(div_round_half_even(7, 2) == 4);
    CHECK(div_round_half_even(-5, 2) == -2);
    CHECK(div_round_half_even(-7, 2) == -4);
    CHECK(div_round_half_even(10, 3) == 3);
    CHECK(div_round_half_even(-10, 3) == -3);
    CHECK_THROWS_AS(div_round_half_even(1, 0), std::invalid_argument);
    CHECK(shift_round_half_even(12, 3) == 2);  // 1.5 -> 2
    CHECK(shift_round_half_even(20, 3) == 2);  // 2.5 -> 2
    CHECK(shift_round_half_even(-12, 3) == -2);
    CHECK_THROWS_AS(shift_round_half_even(1, -1), std::invalid_argument);
    for (int64_t v = -5000; v <= 5000; v += 7)
        for (int s = 0; s < 12; ++s)
            REQUIRE(shift_round_half_even(v, s) == oracle::round_shift(v, s));
    for (int64_t v = -70000; v <= 70000; v += 13)
        for (int s : {0, 3, 8, 11})
            REQUIRE(requantize_to_int8(v, s) == oracle::requant8(v, s));
}

TEST_CASE("saturating accumulate examples") {
    CHECK(saturating_accumulate(0, 5, 16) == 5);
    CHECK(saturating_accumulate(32767, 1, 16) == 32767);
    CHECK(saturating_accumulate(-10, -40, 8) == -50);
    CHECK(saturating_accumulate(-100, -40, 8) == -128);
    CHECK(saturating_accumulate(0, int64_t{1} << 40, 32) == INT32_MAX);
    CHECK_THROWS_AS(saturating_accumulate(0, 0, 33), std::invalid_argument);
    CHECK_THROWS_AS(saturating_accumulate(0, 0, 0), std::invalid_argument);
}

TEST_CASE("saturating accumulate equals exact addition when nothing saturates") {
    const int width = 6;  // range [-32, 31]
    const int ops[] = {-9, -4, -1, 0, 2, 5, 8};
    for (int a : ops)
        for (int b : ops)
            for (int c : ops) {
                const int64_t left = saturating_accumulate(saturating_accumulate(a, b, width), c, width);
                const int64_t right = saturating_accumulate(a, saturating_accumulate(b, c, width), width);
                const int64_t exact = a + b + c;
                const bool intermediate_ok = std::abs(a + b) <= 31 && std::abs(b + c) <= 31;
                if (intermediate_ok && exact >= -32 && exact <= 31) {
                    REQUIRE(left == exact);
                    REQUIRE(right == exact);
                }
            }
}

TEST_CASE("adc examples") {
    CHECK(adc_convert(1234, AdcConfig{AdcMode::ideal, 6, 258064}) == 1234);
    const AdcConfig q{AdcMode::quantized, 6, 258048};
    CHECK(q.step() == 8064);
    CHECK(adc_convert(8064, q) == 8064);
    CHECK(adc_convert(1'000'000'000, q) == 249984);
    CHECK(adc_convert(-1'000'000'000, q) == -32 * 8064);
    CHECK(AdcConfig{}.full_scale == 16 * 127 * 127);
    CHECK(AdcConfig{}.step() == 8064);
    CHECK_THROWS_AS((AdcConfig{AdcMode::quantized, 0, 10}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((AdcConfig{AdcMode::quantized, 6, 0}.validate()), std::invalid_argument);
    CHECK(parse_adc_mode("quantized") == AdcMode::quantized);
    CHECK_THROWS_AS(parse_adc_mode("analog"), std::invalid_argument);
}

TEST_CASE("adc ideal mode is the identity regardless of bits") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int64_t> d(-(int64_t{1} << 40), int64_t{1} << 40);
    for (int bits : {1, 3, 6, 12})
        for (int i = 0; i < 1000; ++i) {
            const int64_t s = d(rng);
            REQUIRE(adc_convert(s, AdcConfig{AdcMode::ideal, bits, 100}) == s);
        }
}

TEST_CASE("quantized adc matches the exhaustive codebook oracle") {
    for (const auto& [bits, fs] : {std::pair{6, int64_t{258048}}, {6, int64_t{258064}}, {3, int64_t{1000}}, {1, int64_t{7}}}) {
        const AdcConfig a{AdcMode::quantized, bits, fs};
        const oracle::Adc o{true, bits, fs};
        const int64_t span = 2 * fs;
        for (int64_t s = -span; s <= span; s += std::max<int64_t>(1, span / 4000))
            REQUIRE(adc_convert(s, a) == oracle::adc(s, o));
        for (int64_t k = -40; k <= 40; ++k) {
            const int64_t edge = k * a.step() + a.step() / 2;
            for (int64_t s = edge - 2; s <= edge + 2; ++s)
                REQUIRE(adc_convert(s, a) == oracle::adc(s, o));
        }
    }
}

TEST_CASE("quantized adc error bound") {
    const AdcConfig a{AdcMode::quantized, 6, 258048};
    const int64_t step = a.step();
    const int64_t top_unsaturated = 31 * step + step / 2;
    for (int64_t s = -a.full_scale; s <= a.full_scale; ++s) {
        const int64_t err = std::abs(adc_convert(s, a) - s);
        if (s <= top_unsaturated)
            REQUIRE(2 * err <= step);
        else
            REQUIRE(err <= step);  // positive codes stop at 31
    }
}
