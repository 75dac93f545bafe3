#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace attnlego {

enum class ChannelId { mem_to_ip, ip_to_score, score_to_softmax };
enum class ChannelState { idle, transferring, done };

std::string_view to_string(ChannelId id);
std::string_view to_string(ChannelState s);

struct Transfer {
    ChannelId channel = ChannelId::mem_to_ip;
    int64_t payload_bits = 0;
    std::string source;
    std::string destination;
    int64_t cycles = 0;
};

/// ceil(payload_bits / bus_width).
int64_t transfer_cycles(int64_t payload_bits, int bus_width);

/// Little-endian packing of bytes into bus beats of bus_width bits.
std::vector<uint64_t> serialize_beats(std::span<const int8_t> payload, int bus_width);
std::vector<int8_t> deserialize_beats(std::span<const uint64_t> beats, int bus_width, size_t payload_bytes);

/// One DMA channel. A transfer moves one beat per cycle and hands the
/// reassembled payload to the destination only on its final cycle.
class DmaChannel {
public:
    explicit DmaChannel(ChannelId id, int bus_width = 64);

    /// Zero-length payloads complete immediately without consuming a cycle.
    Transfer start_transfer(std::vector<int8_t> payload, std::string source = {}, std::string destination = {});

    /// Advance one clock; returns true on the completion cycle.
    bool step();

    bool busy() const { return state_ == ChannelState::transferring; }
    ChannelId id() const { return id_; }
    ChannelState state() const { return state_; }
    int bus_width() const { return bus_width_; }
    int64_t remaining_cycles() const { return remaining_; }

    /// Payload of the most recent completed transfer (empty before completion).
    const std::vector<int8_t>& delivered() const { return delivered_; }
    std::vector<int8_t> take_delivered() { return std::move(delivered_); }
    const Transfer& current() const { return current_; }

    uint64_t starts() const { return starts_; }
    uint64_t completions() const { return completions_; }

private:
    ChannelId id_;
    int bus_width_;
    ChannelState state_ = ChannelState::idle;
    Transfer current_;
    std::vector<uint64_t> beats_;
    std::vector<uint64_t> received_;
    size_t payload_bytes_ = 0;
    int64_t remaining_ = 0;
    std::vector<int8_t> delivered_;
    uint64_t starts_ = 0;
    uint64_t completions_ = 0;
};

}  // namespace attnlego
