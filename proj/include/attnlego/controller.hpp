#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attnlego/config.hpp"
#include "attnlego/dma.hpp"
#include "attnlego/input_process.hpp"
#include "attnlego/reference.hpp"
#include "attnlego/score.hpp"
#include "attnlego/softmax.hpp"
#include "attnlego/stats.hpp"
#include "attnlego/trace.hpp"

namespace attnlego {

enum class OuterState { S0_ready, S1_move_q, S2_compute, S3_move_score, halt };
enum class InnerState { S0_0_load_weights, S0_1_load_input, S0_2_compute_K, S0_3_load_K_and_first_q };

/// Leaf state name as it appears in traces, e.g. "S0_2_compute_K".
std::string state_name(OuterState outer, InnerState inner);

/// Clocked entities in their fixed per-tick stepping order.
enum class ModuleId : uint8_t {
    dma_mem_to_ip,
    dma_ip_to_score,
    dma_score_to_softmax,
    input_process,
    score,
    softmax,
    controller,
};
inline constexpr size_t kModuleCount = 7;
std::string_view module_name(ModuleId id);

struct SimClock {
    uint64_t cycle = 0;
    std::bitset<kModuleCount> stall_mask;

    bool stalled(ModuleId m) const { return stall_mask.test(static_cast<size_t>(m)); }
};

struct InferenceResult {
    /// Simulated values, same layout and scales as the fixed reference.
    FixedAttention values;
    std::vector<TraceRecord> trace;
    RunStats stats;
};

/// One accelerator instance: the five modules, the memory image, and the
/// top controller's nested FSM. Single-threaded and deterministic.
class AttentionSystem {
public:
    AttentionSystem(AttentionWeights weights, Int8Matrix tokens, AttentionConfig config);

    /// One clock: dma channels, input_process, score, softmax, controller.
    /// After halt only the cycle count advances.
    void tick();
    bool finished() const { return outer_ == OuterState::halt; }
    /// Ticks until halt; the value stage runs on entering halt.
    void run();
    InferenceResult take_result();

    const SimClock& clock() const { return clock_; }
    const std::vector<TraceRecord>& trace() const { return trace_; }
    OuterState outer_state() const { return outer_; }
    InnerState inner_state() const { return inner_; }
    int token_index() const { return token_; }
    uint64_t visits(const std::string& leaf_state) const;

    const InputProcess& input_process() const { return ip_; }
    const ScoreModule& score() const { return score_; }
    const SoftmaxEngine& softmax() const { return softmax_; }
    const DmaChannel& channel(ChannelId id) const { return dma_[static_cast<size_t>(id)]; }
    /// Number of commands issued and not yet acknowledged by a done.
    int outstanding() const;

    /// Test hook: hold a module in the stall mask regardless of state.
    void force_stall(ModuleId m, bool on);

private:
    enum class Purpose { weight_column, token, k_row, q_row, score_row, none };

    struct DmaJob {
        std::vector<int8_t> payload;
        std::string source, destination;
        Purpose purpose = Purpose::none;
        int index = 0;
    };
    struct IpJob {
        IpControl control;
        std::string op;
        Bank bank = Bank::q;
        int token = 0;
        bool chain_v = false;  // issue the V projection of `token` when done
    };

    void record(ModuleId m, std::string event, uint64_t digest = 0);
    void enter(OuterState outer, std::optional<InnerState> inner = std::nullopt);
    void update_stall_mask();

    void step_dma(ChannelId id);
    void step_input_process();
    void step_score();
    void step_softmax();
    void step_controller();

    void issue_dma(ChannelId id, DmaJob job);
    void issue_write(Bank bank, int col, std::vector<int8_t> column);
    void issue_projection(Bank bank, int token, bool chain_v);
    void issue_k_load(int token, std::vector<int8_t> k_row);
    void issue_score_row(int token);
    void issue_softmax(int token);
    void issue_q_and_v(int token);
    void advance();

    bool issue_next();
    void transition();
    void run_value_stage();

    AttentionConfig config_;
    AttentionWeights weights_;
    Int8Matrix tokens_;

    InputProcess ip_;
    ScoreModule score_;
    SoftmaxEngine softmax_;
    std::array<DmaChannel, 3> dma_;

    SimClock clock_;
    std::bitset<kModuleCount> forced_stall_;
    std::vector<TraceRecord> trace_;

    OuterState outer_ = OuterState::S0_ready;
    InnerState inner_ = InnerState::S0_0_load_weights;
    int token_ = 0;
    int job_ = 0;
    std::map<std::string, uint64_t> visits_;

    // Pending commands, consumed by the target on its next unstalled tick.
    std::array<std::optional<DmaJob>, 3> dma_cmd_;
    std::array<DmaJob, 3> dma_active_;
    std::optional<IpJob> ip_cmd_;
    IpJob ip_active_;
    std::optional<ScoreControl> score_cmd_;
    int score_token_ = 0;
    std::optional<SoftmaxControl> softmax_cmd_;
    int softmax_token_ = 0;
    std::array<bool, kModuleCount> waiting_{};

    // On-chip buffers.
    std::vector<int8_t> staged_;       // last DMA delivery awaiting its consumer
    std::vector<int8_t> q_register_;   // score Q_input
    std::vector<int8_t> softmax_in_;   // softmax input row
    Int8Matrix x_buf_, q_buf_, k_buf_, v_buf_, scores_;
    UInt8Matrix probs_;
    Int8Matrix outputs_;
    bool value_done_ = false;
};

/// Executes the full schedule on a resolved configuration.
InferenceResult run_inference(const AttentionWeights& weights, const Int8Matrix& tokens,
                              const AttentionConfig& config);

}  // namespace attnlego
