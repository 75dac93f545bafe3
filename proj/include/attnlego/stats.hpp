#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "json.hpp"

#include "attnlego/trace.hpp"

namespace attnlego {

struct OpStats {
    uint64_t count = 0;
    uint64_t total_cycles = 0;
    uint64_t min_span = 0;
    uint64_t max_span = 0;
};

struct ModuleStats {
    uint64_t busy_cycles = 0;
    double utilization = 0.0;
    uint64_t enables = 0;
    uint64_t dones = 0;
    std::map<std::string, OpStats> ops;
};

/// Cycle accounting reconstructed from a trace alone.
struct RunStats {
    uint64_t total_cycles = 0;
    /// Leaf controller states (S0_x inner states, S1, S2, S3); partitions total_cycles.
    std::map<std::string, uint64_t> state_cycles;
    std::map<std::string, uint64_t> state_visits;
    /// Outer states S0..S3; also partitions total_cycles.
    std::map<std::string, uint64_t> outer_cycles;
    std::map<std::string, ModuleStats> modules;
    /// Functional value stage; not part of the hardware cycle model.
    uint64_t value_stage_cycles = 0;
};

RunStats compute_stats(std::span<const TraceRecord> trace);
nlohmann::json to_json(const RunStats& s);

}  // namespace attnlego
