#include "attnlego/dma.hpp"

#include <stdexcept>

#include "attnlego/errors.hpp"

namespace attnlego {

std::string_view to_string(ChannelId id) {
    switch (id) {
    case ChannelId::mem_to_ip: return "dma.mem_to_ip";
    case ChannelId::ip_to_score: return "dma.ip_to_score";
    case ChannelId::score_to_softmax: return "dma.score_to_softmax";
    }
    return "?";
}

std::string_view to_string(ChannelState s) {
    switch (s) {
    case ChannelState::idle: return "idle";
    case ChannelState::transferring: return "transferring";
    case ChannelState::done: return "done";
    }
    return "?";
}

namespace {
void check_bus_width(int bus_width) {
    if (bus_width < 8 || bus_width > 64 || bus_width % 8 != 0)
        throw std::invalid_argument("DMA bus width must be a multiple of 8 in [8, 64], got " +
                                    std::to_string(bus_width));
}
}  // namespace

int64_t transfer_cycles(int64_t payload_bits, int bus_width) {
    if (bus_width <= 0)
        throw std::invalid_argument("transfer_cycles: bus width must be positive");
    if (payload_bits < 0)
        throw std::invalid_argument("transfer_cycles: negative payload");
    return (payload_bits + bus_width - 1) / bus_width;
}

std::vector<uint64_t> serialize_beats(std::span<const int8_t> payload, int bus_width) {
    check_bus_width(bus_width);
    const size_t per_beat = static_cast<size_t>(bus_width / 8);
    std::vector<uint64_t> beats((payload.size() + per_beat - 1) / per_beat, 0);
    for (size_t i = 0; i < payload.size(); ++i)
        beats[i / per_beat] |= uint64_t{static_cast<uint8_t>(payload[i])} << (8 * (i % per_beat));
    return beats;
}

std::vector<int8_t> deserialize_beats(std::span<const uint64_t> beats, int bus_width, size_t payload_bytes) {
    check_bus_width(bus_width);
    const size_t per_beat = static_cast<size_t>(bus_width / 8);
    if (beats.size() * per_beat < payload_bytes)
        throw ShapeError("deserialize_beats: not enough beats for payload");
    std::vector<int8_t> out(payload_bytes);
    for (size_t i = 0; i < payload_bytes; ++i)
        out[i] = static_cast<int8_t>(static_cast<uint8_t>(beats[i / per_beat] >> (8 * (i % per_beat))));
    return out;
}

DmaChannel::DmaChannel(ChannelId id, int bus_width) : id_(id), bus_width_(bus_width) { check_bus_width(bus_width); }

Transfer DmaChannel::start_transfer(std::vector<int8_t> payload, std::string source, std::string destination) {
    if (state_ == ChannelState::transferring)
        throw BusyError(std::string(to_string(id_)) + ": transfer already in flight");
    current_ = Transfer{id_, static_cast<int64_t>(payload.size()) * 8, std::move(source), std::move(destination), 0};
    current_.cycles = transfer_cycles(current_.payload_bits, bus_width_);
    ++starts_;
    delivered_.clear();
    if (current_.cycles == 0) {
        ++completions_;
        state_ = ChannelState::idle;
        return current_;
    }
    beats_ = serialize_beats(payload, bus_width_);
    payload_bytes_ = payload.size();
    received_.clear();
    received_.reserve(beats_.size());
    remaining_ = current_.cycles;
    state_ = ChannelState::transferring;
    return current_;
}

bool DmaChannel::step() {
    if (state_ == ChannelState::done)
        state_ = ChannelState::idle;
    if (state_ != ChannelState::transferring)
        return false;
    received_.push_back(beats_[received_.size()]);
    if (--remaining_ > 0)
        return false;
    delivered_ = deserialize_beats(received_, bus_width_, payload_bytes_);
    beats_.clear();
    received_.clear();
    state_ = ChannelState::done;
    ++completions_;
    return true;
}

}  // namespace attnlego
