#include "attnlego/stats.hpp"

#include <algorithm>
#include <charconv>
#include <optional>
#include <stdexcept>
#include <utility>

namespace attnlego {

namespace {

std::string outer_of(const std::string& leaf) {
    if (leaf.starts_with("S0_"))
        return "S0_ready";
    return leaf;
}

struct OpenOp {
    std::string op;
    uint64_t start = 0;
};

}  // namespace

RunStats compute_stats(std::span<const TraceRecord> trace) {
    RunStats s;
    if (trace.empty())
        return s;

    std::optional<std::pair<std::string, uint64_t>> current;  // leaf state, entry cycle
    std::optional<uint64_t> halt;
    std::map<std::string, OpenOp> open;

    for (const auto& r : trace) {
        const std::string& e = r.event;
        if (r.module == "controller") {
            if (e.starts_with("enter:")) {
                const std::string state = e.substr(6);
                if (current)
                    s.state_cycles[current->first] += r.cycle - current->second;
                if (state == "halt") {
                    halt = r.cycle;
                    current.reset();
                } else {
                    current = {state, r.cycle};
                    ++s.state_visits[state];
                }
            } else if (e.starts_with("enable:")) {
                const auto colon = e.find(':', 7);
                ++s.modules[e.substr(7, colon == std::string::npos ? std::string::npos : colon - 7)].enables;
            } else if (e.starts_with("value_stage:")) {
                uint64_t v = 0;
                const std::string num = e.substr(12);
                std::from_chars(num.data(), num.data() + num.size(), v);
                s.value_stage_cycles += v;
            }
            continue;
        }
        if (e.starts_with("start:")) {
            open[r.module] = OpenOp{e.substr(6), r.cycle};
        } else if (e.starts_with("done:")) {
            auto& m = s.modules[r.module];
            ++m.dones;
            auto it = open.find(r.module);
            if (it == open.end())
                continue;
            const uint64_t span = r.cycle - it->second.start + 1;
            auto& op = m.ops[it->second.op];
            op.min_span = op.count == 0 ? span : std::min(op.min_span, span);
            op.max_span = std::max(op.max_span, span);
            ++op.count;
            op.total_cycles += span;
            m.busy_cycles += span;
            open.erase(it);
        }
    }

    s.total_cycles = halt ? *halt : trace.back().cycle;
    if (current)
        s.state_cycles[current->first] += s.total_cycles - current->second;
    for (const auto& [leaf, cycles] : s.state_cycles)
        s.outer_cycles[outer_of(leaf)] += cycles;
    for (auto& [name, m] : s.modules)
        m.utilization = s.total_cycles == 0 ? 0.0 : static_cast<double>(m.busy_cycles) / s.total_cycles;
    return s;
}

nlohmann::json to_json(const RunStats& s) {
    nlohmann::json modules = nlohmann::json::object();
    for (const auto& [name, m] : s.modules) {
        nlohmann::json ops = nlohmann::json::object();
        for (const auto& [op, o] : m.ops)
            ops[op] = {{"count", o.count}, {"total_cycles", o.total_cycles}, {"min_span", o.min_span},
                       {"max_span", o.max_span}};
        modules[name] = {{"busy_cycles", m.busy_cycles},
                         {"utilization", m.utilization},
                         {"enables", m.enables},
                         {"dones", m.dones},
                         {"ops", ops}};
    }
    return {{"total_cycles", s.total_cycles},
            {"state_cycles", s.state_cycles},
            {"state_visits", s.state_visits},
            {"outer_cycles", s.outer_cycles},
            {"modules", modules},
            {"value_stage_cycles_outside_model", s.value_stage_cycles}};
}

}  // namespace attnlego
