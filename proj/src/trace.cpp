#include "attnlego/trace.hpp"

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace attnlego {

uint64_t fnv1a(std::span<const uint8_t> bytes, uint64_t seed) {
    uint64_t h = seed;
    for (uint8_t b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t digest_of(std::span<const int8_t> data) {
    return fnv1a({reinterpret_cast<const uint8_t*>(data.data()), data.size()});
}

uint64_t digest_of(std::span<const uint8_t> data) { return fnv1a(data); }

std::string format_record(const TraceRecord& r) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.digest));
    return std::to_string(r.cycle) + '\t' + r.module + '\t' + r.event + '\t' + hex;
}

uint64_t trace_digest(std::span<const TraceRecord> trace) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& r : trace) {
        const std::string line = format_record(r) + '\n';
        h = fnv1a({reinterpret_cast<const uint8_t*>(line.data()), line.size()}, h);
    }
    return h;
}

void write_trace(std::ostream& os, std::span<const TraceRecord> trace) {
    for (const auto& r : trace)
        os << format_record(r) << '\n';
}

std::vector<TraceRecord> parse_trace(std::istream& is) {
    std::vector<TraceRecord> out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto fail = [&](const char* why) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + why);
        };
        size_t t1 = line.find('\t');
        size_t t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
        size_t t3 = t2 == std::string::npos ? t2 : line.find('\t', t2 + 1);
        if (t3 == std::string::npos || line.find('\t', t3 + 1) != std::string::npos)
            fail("expected 4 tab-separated fields");
        TraceRecord r;
        auto [p1, e1] = std::from_chars(line.data(), line.data() + t1, r.cycle);
        if (t1 == 0 || e1 != std::errc{} || p1 != line.data() + t1)
            fail("bad cycle");
        r.module = line.substr(t1 + 1, t2 - t1 - 1);
        r.event = line.substr(t2 + 1, t3 - t2 - 1);
        if (r.module.empty() || r.event.empty())
            fail("empty module or event");
        const char* d0 = line.data() + t3 + 1;
        const char* d1 = line.data() + line.size();
        auto [p2, e2] = std::from_chars(d0, d1, r.digest, 16);
        if (d0 == d1 || e2 != std::errc{} || p2 != d1)
            fail("bad digest");
        if (!out.empty() && r.cycle < out.back().cycle)
            fail("cycle order decreases");
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace attnlego
