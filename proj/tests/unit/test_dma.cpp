#include <stdexcept>
#include <random>

#include "doctest.h"

#include "attnlego/dma.hpp"
#include "attnlego/errors.hpp"

using namespace attnlego;

namespace {
std::vector<int8_t> random_bytes(std::mt19937_64& rng, size_t n) {
    std::vector<int8_t> v(n);
    for (auto& b : v)
        b = static_cast<int8_t>(rng() & 0xff);
    return v;
}
}  // namespace

TEST_CASE("transfer cycle formula") {
    CHECK(transfer_cycles(4096 * 8, 64) == 512);
    CHECK(transfer_cycles(0, 64) == 0);
    CHECK(transfer_cycles(1, 64) == 1);
    CHECK(transfer_cycles(65, 64) == 2);
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5000; ++i) {
        const int64_t bits = static_cast<int64_t>(rng() % ((1 << 20) + 1));
        for (int bus : {8, 16, 24, 32, 64}) {
            const int64_t c = transfer_cycles(bits, bus);
            REQUIRE(c * bus >= bits);
            REQUIRE((c == 0 || (c - 1) * bus < bits));
        }
    }
    CHECK_THROWS_AS(transfer_cycles(-1, 64), std::invalid_argument);
}

TEST_CASE("beat packing is little-endian and lossless") {
    const std::vector<int8_t> payload{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto beats = serialize_beats(payload, 64);
    REQUIRE(beats.size() == 2);
    CHECK(beats[0] == 0x0807060504030201ULL);
    CHECK(beats[1] == 0x09ULL);
    std::mt19937_64 rng(2);
    for (int bus : {8, 16, 32, 40, 64})
        for (size_t n : {0, 1, 7, 8, 9, 4096}) {
            const auto p = random_bytes(rng, n);
            REQUIRE(deserialize_beats(serialize_beats(p, bus), bus, n) == p);
        }
    CHECK_THROWS_AS(serialize_beats(payload, 12), std::invalid_argument);
    CHECK_THROWS_AS(DmaChannel(ChannelId::mem_to_ip, 128), std::invalid_argument);
}

TEST_CASE("512-cycle transfer completes on step 512 with atomic delivery") {
    DmaChannel ch(ChannelId::mem_to_ip, 64);
    std::mt19937_64 rng(3);
    const auto p = random_bytes(rng, 4096);
    const Transfer t = ch.start_transfer(p, "memory", "input_process");
    CHECK(t.cycles == 512);
    CHECK(t.payload_bits == 32768);
    CHECK(t.source == "memory");
    CHECK(ch.busy());
    for (int i = 1; i < 512; ++i) {
        REQUIRE_FALSE(ch.step());
        REQUIRE(ch.delivered().empty());
    }
    CHECK(ch.step());
    CHECK(ch.state() == ChannelState::done);
    CHECK(ch.delivered() == p);
    CHECK_FALSE(ch.step());
    CHECK(ch.state() == ChannelState::idle);
    CHECK(ch.starts() == 1);
    CHECK(ch.completions() == 1);
}

TEST_CASE("dma edge cases") {
    DmaChannel idle(ChannelId::ip_to_score);
    CHECK_FALSE(idle.step());
    CHECK(idle.state() == ChannelState::idle);

    DmaChannel one(ChannelId::ip_to_score);
    one.start_transfer({1, 2, 3});
    CHECK(one.step());

    DmaChannel empty(ChannelId::score_to_softmax);
    const Transfer t = empty.start_transfer({});
    CHECK(t.cycles == 0);
    CHECK_FALSE(empty.busy());
    CHECK(empty.completions() == 1);

    DmaChannel busy(ChannelId::mem_to_ip);
    busy.start_transfer(std::vector<int8_t>(100, 0));
    CHECK_THROWS_AS(busy.start_transfer({1}), BusyError);
}

TEST_CASE("completions track starts over many transfers") {
    std::mt19937_64 rng(4);
    DmaChannel ch(ChannelId::mem_to_ip, 16);
    for (int i = 0; i < 200; ++i) {
        const auto p = random_bytes(rng, rng() % 50);
        ch.start_transfer(p);
        int steps = 0;
        if (!p.empty())
            while (!ch.step())
                ++steps;
        if (!p.empty()) {
            REQUIRE(steps + 1 == transfer_cycles(static_cast<int64_t>(p.size()) * 8, 16));
            REQUIRE(ch.delivered() == p);
        }
    }
    CHECK(ch.starts() == ch.completions());
}
