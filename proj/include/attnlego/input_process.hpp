#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "attnlego/kernels.hpp"
#include "attnlego/pim_macro.hpp"

namespace attnlego {

enum class IpMode { idle, write, read, cim };

/// (web, cimeb): READ=(1,1), WRITE=(0,1), IDLE=(0,0), CIM=(1,0).
IpMode decode_ip_mode(bool web, bool cimeb);

enum class Bank : uint8_t { q = 0, k = 1, v = 2 };

/// weight_sel is a 3-bit field; Q=0b00, K=0b01, V=0b10. Bit 2 is reserved
/// and must be zero. Anything else decodes to nullopt.
std::optional<Bank> decode_weight_sel(uint8_t weight_sel);
uint8_t encode_weight_sel(Bank bank);

std::string_view to_string(IpMode mode);
std::string_view to_string(Bank bank);

struct InputProcessConfig {
    int d_model = 4096;
    int d_k = 128;
    ApimGeometry macro{};
    AdcConfig adc{};
    /// Requantization shift per bank, indexed by Bank.
    std::array<int, 3> shifts{0, 0, 0};
    kernels::Exec exec = kernels::Exec::parallel;

    int macros_per_bank() const { return d_model / macro.rows; }
    void validate() const;
};

/// Port-level inputs for one clock.
struct IpControl {
    bool reset = false;
    bool cs = false;
    bool web = false;
    bool cimeb = false;
    uint8_t weight_sel = 0;
    int col_sel = 0;
    std::vector<int8_t> data_in;
    /// CIM on the Q bank also produces the V row in the same window.
    bool with_v = false;
};

struct IpOutputs {
    bool done = false;
    std::vector<int8_t> data_out;      // d_k words after CIM
    std::vector<int8_t> data_out_v;    // d_k words when with_v
    std::vector<int8_t> mem_data_out;  // d_model words after READ
};

struct InputProcessState {
    IpMode mode = IpMode::idle;
    bool busy = false;
    int cycle_counter = 0;
    Bank selected_bank = Bank::q;
};

/// Q/K/V projection engine: three banks of vertically stacked APIMs.
class InputProcess {
public:
    explicit InputProcess(InputProcessConfig config);

    /// Advance one clock. Commands are accepted only while idle.
    const IpOutputs& step(const IpControl& control);

    // Convenience drivers that clock the FSM until done.
    int write_column(Bank bank, int col_sel, std::span<const int8_t> column);
    struct ReadResult {
        std::vector<int8_t> column;
        int cycles = 0;
    };
    ReadResult read_column(Bank bank, int col_sel);
    struct Projection {
        std::vector<int8_t> row;
        int cycles = 0;
    };
    Projection compute_projection(Bank bank, std::span<const int8_t> x);

    /// Wide (pre-requantization) stack sums of x^T W for one bank; no clocking.
    std::vector<int64_t> projection_sums(Bank bank, std::span<const int8_t> x) const;

    int write_cycles() const { return config_.macro.rows; }
    int read_cycles() const { return config_.macro.rows; }
    int cim_cycles() const { return config_.macro.mvm_cycles(); }

    const InputProcessState& state() const { return state_; }
    const IpOutputs& outputs() const { return out_; }
    const InputProcessConfig& config() const { return config_; }
    const kernels::MacroStack& bank(Bank b) const { return banks_[static_cast<size_t>(b)]; }

    /// Largest number of writes any weight cell has received.
    uint32_t max_cell_writes() const;

private:
    void latch(const IpControl& control, IpMode mode, Bank bank);
    void finish();
    std::vector<int8_t> project(Bank bank, std::span<const int8_t> x) const;

    InputProcessConfig config_;
    std::array<kernels::MacroStack, 3> banks_;
    InputProcessState state_;
    IpOutputs out_;
    int col_sel_ = 0;
    bool with_v_ = false;
    std::vector<int8_t> buffer_;  // latched write data or read register
    std::vector<int8_t> pending_, pending_v_;
};

}  // namespace attnlego
