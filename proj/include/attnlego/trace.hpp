#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace attnlego {

/// One observable event. Text form: cycle<TAB>module<TAB>event<TAB>digest-hex.
struct TraceRecord {
    uint64_t cycle = 0;
    std::string module;
    std::string event;
    uint64_t digest = 0;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// 64-bit FNV-1a.
uint64_t fnv1a(std::span<const uint8_t> bytes, uint64_t seed = 0xcbf29ce484222325ULL);
uint64_t digest_of(std::span<const int8_t> data);
uint64_t digest_of(std::span<const uint8_t> data);

/// Digest over the text form of every record.
uint64_t trace_digest(std::span<const TraceRecord> trace);

std::string format_record(const TraceRecord& r);
void write_trace(std::ostream& os, std::span<const TraceRecord> trace);

/// Throws std::runtime_error naming the offending line on malformed input.
std::vector<TraceRecord> parse_trace(std::istream& is);

}  // namespace attnlego
