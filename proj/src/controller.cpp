#include "attnlego/controller.hpp"

#include <stdexcept>

#include "attnlego/errors.hpp"

namespace attnlego {

std::string state_name(OuterState outer, InnerState inner) {
    switch (outer) {
    case OuterState::S0_ready:
        switch (inner) {
        case InnerState::S0_0_load_weights: return "S0_0_load_weights";
        case InnerState::S0_1_load_input: return "S0_1_load_input";
        case InnerState::S0_2_compute_K: return "S0_2_compute_K";
        case InnerState::S0_3_load_K_and_first_q: return "S0_3_load_K_and_first_q";
        }
        break;
    case OuterState::S1_move_q: return "S1_move_q";
    case OuterState::S2_compute: return "S2_compute";
    case OuterState::S3_move_score: return "S3_move_score";
    case OuterState::halt: return "halt";
    }
    return "?";
}

std::string_view module_name(ModuleId id) {
    switch (id) {
    case ModuleId::dma_mem_to_ip: return to_string(ChannelId::mem_to_ip);
    case ModuleId::dma_ip_to_score: return to_string(ChannelId::ip_to_score);
    case ModuleId::dma_score_to_softmax: return to_string(ChannelId::score_to_softmax);
    case ModuleId::input_process: return "input_process";
    case ModuleId::score: return "score";
    case ModuleId::softmax: return "softmax";
    case ModuleId::controller: return "controller";
    }
    return "?";
}

namespace {

size_t bit(ModuleId m) { return static_cast<size_t>(m); }
ModuleId module_of(ChannelId id) { return static_cast<ModuleId>(static_cast<uint8_t>(id)); }

InputProcessConfig ip_config(const AttentionConfig& c) {
    InputProcessConfig ip;
    ip.d_model = c.d_model;
    ip.d_k = c.d_k;
    ip.macro = c.projection_apim;
    ip.adc = c.adc;
    ip.shifts = {c.shift_q.value_or(0), c.shift_k.value_or(0), c.shift_v.value_or(0)};
    ip.exec = c.exec;
    return ip;
}

ScoreConfig score_config(const AttentionConfig& c) {
    ScoreConfig s;
    s.d_k = c.d_k;
    s.seq_len = c.seq_len;
    s.apim = c.score_apim;
    s.adc = c.adc;
    s.shift = c.shift_score.value_or(0);
    s.k_load_cycles = c.k_load_cycles;
    s.exec = c.exec;
    return s;
}

const AttentionConfig& checked(const AttentionWeights& w, const Int8Matrix& tokens, const AttentionConfig& c) {
    check_inputs(w, tokens, c);
    if (!c.shifts_resolved())
        throw PreconditionError("requantization shifts must be resolved before simulation");
    return c;
}

std::vector<int8_t> to_vec(std::span<const int8_t> s) { return {s.begin(), s.end()}; }

}  // namespace

AttentionSystem::AttentionSystem(AttentionWeights weights, Int8Matrix tokens, AttentionConfig config)
    : config_(checked(weights, tokens, config)),
      weights_(std::move(weights)),
      tokens_(std::move(tokens)),
      ip_(ip_config(config_)),
      score_(score_config(config_)),
      softmax_(generate_exp_lut(config_.lut_in, config_.lut_out), config_.softmax_lanes),
      dma_{DmaChannel(ChannelId::mem_to_ip, config_.bus_width), DmaChannel(ChannelId::ip_to_score, config_.bus_width),
           DmaChannel(ChannelId::score_to_softmax, config_.bus_width)} {
    const int n = config_.seq_len;
    const int d_k = config_.d_k;
    x_buf_ = Int8Matrix(n, config_.d_model, tokens_.scale);
    q_buf_ = Int8Matrix(n, d_k, projection_scale(tokens_, weights_.wq, *config_.shift_q));
    k_buf_ = Int8Matrix(n, d_k, projection_scale(tokens_, weights_.wk, *config_.shift_k));
    v_buf_ = Int8Matrix(n, d_k, projection_scale(tokens_, weights_.wv, *config_.shift_v));
    scores_ = Int8Matrix(n, n, config_.lut_in.scale());
    probs_ = UInt8Matrix(n, n);
    outputs_ = Int8Matrix(n, d_k, output_scale(weights_, tokens_, config_));

    enter(OuterState::S0_ready, InnerState::S0_0_load_weights);
    advance();
}

uint64_t AttentionSystem::visits(const std::string& leaf_state) const {
    auto it = visits_.find(leaf_state);
    return it == visits_.end() ? 0 : it->second;
}

int AttentionSystem::outstanding() const {
    int n = 0;
    for (bool w : waiting_)
        n += w ? 1 : 0;
    return n;
}

void AttentionSystem::force_stall(ModuleId m, bool on) { forced_stall_.set(bit(m), on); }

void AttentionSystem::record(ModuleId m, std::string event, uint64_t digest) {
    trace_.push_back(TraceRecord{clock_.cycle, std::string(module_name(m)), std::move(event), digest});
}

void AttentionSystem::enter(OuterState outer, std::optional<InnerState> inner) {
    outer_ = outer;
    if (inner)
        inner_ = *inner;
    job_ = 0;
    const std::string name = state_name(outer_, inner_);
    if (outer_ != OuterState::halt)
        ++visits_[name];
    record(ModuleId::controller, "enter:" + name);
}

void AttentionSystem::update_stall_mask() {
    std::bitset<kModuleCount> mask = forced_stall_;
    if (outer_ == OuterState::S1_move_q || outer_ == OuterState::S3_move_score) {
        mask.set(bit(ModuleId::input_process));
        mask.set(bit(ModuleId::score));
        mask.set(bit(ModuleId::softmax));
    }
    // Endpoints of an in-flight (or about to start) transfer do not compute.
    auto active = [&](ChannelId id) {
        const auto i = static_cast<size_t>(id);
        return dma_[i].busy() || dma_cmd_[i].has_value();
    };
    if (active(ChannelId::mem_to_ip))
        mask.set(bit(ModuleId::input_process));
    if (active(ChannelId::ip_to_score)) {
        mask.set(bit(ModuleId::input_process));
        mask.set(bit(ModuleId::score));
    }
    if (active(ChannelId::score_to_softmax)) {
        mask.set(bit(ModuleId::score));
        mask.set(bit(ModuleId::softmax));
    }
    const auto changed = mask ^ clock_.stall_mask;
    for (size_t i = 0; i < kModuleCount; ++i)
        if (changed.test(i))
            record(static_cast<ModuleId>(i), mask.test(i) ? "stall:on" : "stall:off");
    clock_.stall_mask = mask;
}

void AttentionSystem::tick() {
    ++clock_.cycle;
    if (finished())
        return;
    update_stall_mask();
    step_dma(ChannelId::mem_to_ip);
    step_dma(ChannelId::ip_to_score);
    step_dma(ChannelId::score_to_softmax);
    step_input_process();
    step_score();
    step_softmax();
    step_controller();
}

void AttentionSystem::run() {
    while (!finished())
        tick();
}

// ---- module stepping --------------------------------------------------------

void AttentionSystem::step_dma(ChannelId id) {
    const ModuleId m = module_of(id);
    if (clock_.stalled(m))
        return;
    const auto i = static_cast<size_t>(id);
    DmaChannel& ch = dma_[i];
    bool done = false;
    if (dma_cmd_[i]) {
        DmaJob job = std::move(*dma_cmd_[i]);
        dma_cmd_[i].reset();
        record(m, "start:transfer", digest_of(job.payload));
        const Transfer t = ch.start_transfer(std::move(job.payload), job.source, job.destination);
        dma_active_[i] = std::move(job);
        done = t.cycles == 0 ? true : ch.step();
    } else {
        done = ch.step();
    }
    if (!done)
        return;

    std::vector<int8_t> data = ch.take_delivered();
    record(m, "done:transfer", digest_of(data));
    waiting_[bit(m)] = false;
    const DmaJob& job = dma_active_[i];
    switch (job.purpose) {
    case Purpose::weight_column:
    case Purpose::k_row: staged_ = std::move(data); break;
    case Purpose::token: std::copy(data.begin(), data.end(), x_buf_.row(job.index).begin()); break;
    case Purpose::q_row: q_register_ = std::move(data); break;
    case Purpose::score_row: softmax_in_ = std::move(data); break;
    case Purpose::none: break;
    }
}

void AttentionSystem::step_input_process() {
    if (clock_.stalled(ModuleId::input_process))
        return;
    static const IpControl kIdle{};
    const bool latching = ip_cmd_.has_value();
    const IpOutputs& out = ip_.step(latching ? ip_cmd_->control : kIdle);
    if (latching) {
        ip_active_ = std::move(*ip_cmd_);
        ip_cmd_.reset();
        record(ModuleId::input_process, "start:" + ip_active_.op, digest_of(ip_active_.control.data_in));
    }
    if (!out.done)
        return;

    waiting_[bit(ModuleId::input_process)] = false;
    const IpJob& job = ip_active_;
    if (job.control.web && !job.control.cimeb) {
        record(ModuleId::input_process, "done:" + job.op, digest_of(out.data_out));
        Int8Matrix& dst = job.bank == Bank::q ? q_buf_ : job.bank == Bank::k ? k_buf_ : v_buf_;
        std::copy(out.data_out.begin(), out.data_out.end(), dst.row(job.token).begin());
        if (!out.data_out_v.empty())
            std::copy(out.data_out_v.begin(), out.data_out_v.end(), v_buf_.row(job.token).begin());
        if (job.chain_v)
            issue_projection(Bank::v, job.token, false);
    } else {
        record(ModuleId::input_process, "done:" + job.op, digest_of(job.control.data_in));
    }
}

void AttentionSystem::step_score() {
    if (clock_.stalled(ModuleId::score))
        return;
    static const ScoreControl kIdle{};
    const bool latching = score_cmd_.has_value();
    const ScoreOutputs& out = score_.step(latching ? *score_cmd_ : kIdle);
    if (latching) {
        const bool k_mode = score_cmd_->k_mode_enable;
        record(ModuleId::score, k_mode ? "start:k_mode" : "start:q_mode",
               digest_of(k_mode ? score_cmd_->k_input : score_cmd_->q_input));
        score_cmd_.reset();
    }
    if (out.input_done) {
        waiting_[bit(ModuleId::score)] = false;
        record(ModuleId::score, "done:k_mode");
    } else if (out.output_done) {
        waiting_[bit(ModuleId::score)] = false;
        record(ModuleId::score, "done:q_mode", digest_of(out.qk_output));
        std::copy(out.qk_output.begin(), out.qk_output.end(), scores_.row(score_token_).begin());
    }
}

void AttentionSystem::step_softmax() {
    if (clock_.stalled(ModuleId::softmax))
        return;
    static const SoftmaxControl kIdle{};
    const bool latching = softmax_cmd_.has_value();
    const SoftmaxOutputs& out = softmax_.step(latching ? *softmax_cmd_ : kIdle);
    if (latching) {
        record(ModuleId::softmax, "start:softmax", digest_of(softmax_cmd_->v));
        softmax_cmd_.reset();
    }
    if (out.done) {
        waiting_[bit(ModuleId::softmax)] = false;
        record(ModuleId::softmax, "done:softmax", digest_of(out.p));
        std::copy(out.p.begin(), out.p.end(), probs_.row(softmax_token_).begin());
    }
}

void AttentionSystem::step_controller() {
    if (outstanding() > 0)
        return;
    advance();
}

// ---- controller FSM ---------------------------------------------------------

void AttentionSystem::issue_dma(ChannelId id, DmaJob job) {
    const ModuleId m = module_of(id);
    record(ModuleId::controller, "enable:" + std::string(module_name(m)) + ":transfer", digest_of(job.payload));
    dma_cmd_[static_cast<size_t>(id)] = std::move(job);
    waiting_[bit(m)] = true;
}

void AttentionSystem::issue_write(Bank bank, int col, std::vector<int8_t> column) {
    IpJob job;
    job.control.cs = true;
    job.control.web = false;
    job.control.cimeb = true;
    job.control.weight_sel = encode_weight_sel(bank);
    job.control.col_sel = col;
    job.control.data_in = std::move(column);
    job.op = "write." + std::string(to_string(bank));
    job.bank = bank;
    record(ModuleId::controller, "enable:input_process:" + job.op, digest_of(job.control.data_in));
    ip_cmd_ = std::move(job);
    waiting_[bit(ModuleId::input_process)] = true;
}

void AttentionSystem::issue_projection(Bank bank, int token, bool chain_v) {
    IpJob job;
    job.control.cs = true;
    job.control.web = true;
    job.control.cimeb = false;
    job.control.weight_sel = encode_weight_sel(bank);
    job.control.data_in = to_vec(x_buf_.row(token));
    job.control.with_v = bank == Bank::q && chain_v && !config_.qkv_sequential;
    job.chain_v = bank == Bank::q && chain_v && config_.qkv_sequential;
    job.op = "cim." + std::string(to_string(bank));
    if (job.control.with_v)
        job.op += "+v";
    job.bank = bank;
    job.token = token;
    record(ModuleId::controller, "enable:input_process:" + job.op, digest_of(job.control.data_in));
    ip_cmd_ = std::move(job);
    waiting_[bit(ModuleId::input_process)] = true;
}

void AttentionSystem::issue_q_and_v(int token) { issue_projection(Bank::q, token, true); }

void AttentionSystem::issue_k_load(int token, std::vector<int8_t> k_row) {
    ScoreControl c;
    c.cs = true;
    c.k_mode_enable = true;
    c.k_address = token;
    c.k_input = std::move(k_row);
    record(ModuleId::controller, "enable:score:k_mode", digest_of(c.k_input));
    score_cmd_ = std::move(c);
    waiting_[bit(ModuleId::score)] = true;
}

void AttentionSystem::issue_score_row(int token) {
    ScoreControl c;
    c.cs = true;
    c.q_mode_enable = true;
    c.q_input = q_register_;
    record(ModuleId::controller, "enable:score:q_mode", digest_of(c.q_input));
    score_cmd_ = std::move(c);
    score_token_ = token;
    waiting_[bit(ModuleId::score)] = true;
}

void AttentionSystem::issue_softmax(int token) {
    SoftmaxControl c;
    c.cs = true;
    c.enable = true;
    c.v = softmax_in_;
    record(ModuleId::controller, "enable:softmax:softmax", digest_of(c.v));
    softmax_cmd_ = std::move(c);
    softmax_token_ = token;
    waiting_[bit(ModuleId::softmax)] = true;
}

void AttentionSystem::advance() {
    while (!finished()) {
        if (issue_next())
            return;
        transition();
    }
}

bool AttentionSystem::issue_next() {
    const int n = config_.seq_len;
    const int d_k = config_.d_k;
    switch (outer_) {
    case OuterState::S0_ready:
        switch (inner_) {
        case InnerState::S0_0_load_weights: {
            if (job_ >= 3 * d_k * 2)
                return false;
            const int column = job_ / 2;
            const auto bank = static_cast<Bank>(column / d_k);
            const int col = column % d_k;
            if (job_ % 2 == 0) {
                const Int8Matrix& w = bank == Bank::q ? weights_.wq : bank == Bank::k ? weights_.wk : weights_.wv;
                DmaJob job{std::vector<int8_t>(w.rows), "memory", "input_process", Purpose::weight_column, column};
                for (int r = 0; r < w.rows; ++r)
                    job.payload[r] = w.at(r, col);
                issue_dma(ChannelId::mem_to_ip, std::move(job));
            } else {
                issue_write(bank, col, std::move(staged_));
            }
            ++job_;
            return true;
        }
        case InnerState::S0_1_load_input:
            if (job_ >= n)
                return false;
            issue_dma(ChannelId::mem_to_ip, DmaJob{to_vec(tokens_.row(job_)), "memory", "input_process", Purpose::token, job_});
            ++job_;
            return true;
        case InnerState::S0_2_compute_K:
            if (job_ >= n)
                return false;
            issue_projection(Bank::k, job_, false);
            ++job_;
            return true;
        case InnerState::S0_3_load_K_and_first_q:
            if (job_ < 2 * n) {
                const int t = job_ / 2;
                if (job_ % 2 == 0)
                    issue_dma(ChannelId::ip_to_score, DmaJob{to_vec(k_buf_.row(t)), "input_process", "score", Purpose::k_row, t});
                else
                    issue_k_load(t, std::move(staged_));
                ++job_;
                return true;
            }
            if (job_ == 2 * n) {
                issue_q_and_v(0);
                ++job_;
                return true;
            }
            return false;
        }
        return false;

    case OuterState::S1_move_q:
        if (job_ > 0)
            return false;
        issue_dma(ChannelId::ip_to_score, DmaJob{to_vec(q_buf_.row(token_)), "input_process", "score", Purpose::q_row, token_});
        ++job_;
        return true;

    case OuterState::S2_compute: {
        // Score of the current token, softmax of the previous one, and the
        // projections of the next one; concurrent when pipelined.
        const bool has_score = token_ < n;
        const bool has_softmax = token_ >= 1;
        const bool has_next = token_ + 1 < n;
        if (config_.pipeline) {
            if (job_ > 0)
                return false;
            if (has_score)
                issue_score_row(token_);
            if (has_softmax)
                issue_softmax(token_ - 1);
            if (has_next)
                issue_q_and_v(token_ + 1);
            ++job_;
            return has_score || has_softmax || has_next;
        }
        while (job_ < 3) {
            const int which = job_++;
            if (which == 0 && has_score) {
                issue_score_row(token_);
                return true;
            }
            if (which == 1 && has_softmax) {
                issue_softmax(token_ - 1);
                return true;
            }
            if (which == 2 && has_next) {
                issue_q_and_v(token_ + 1);
                return true;
            }
        }
        return false;
    }

    case OuterState::S3_move_score:
        if (job_ > 0 || token_ >= n)
            return false;
        issue_dma(ChannelId::score_to_softmax,
                  DmaJob{to_vec(scores_.row(token_)), "score", "softmax", Purpose::score_row, token_});
        ++job_;
        return true;

    case OuterState::halt:
        return false;
    }
    return false;
}

void AttentionSystem::transition() {
    const int n = config_.seq_len;
    switch (outer_) {
    case OuterState::S0_ready:
        switch (inner_) {
        case InnerState::S0_0_load_weights: enter(OuterState::S0_ready, InnerState::S0_1_load_input); return;
        case InnerState::S0_1_load_input: enter(OuterState::S0_ready, InnerState::S0_2_compute_K); return;
        case InnerState::S0_2_compute_K: enter(OuterState::S0_ready, InnerState::S0_3_load_K_and_first_q); return;
        case InnerState::S0_3_load_K_and_first_q:
            token_ = 0;
            enter(OuterState::S1_move_q);
            return;
        }
        return;
    case OuterState::S1_move_q: enter(OuterState::S2_compute); return;
    case OuterState::S2_compute: enter(OuterState::S3_move_score); return;
    case OuterState::S3_move_score:
        if (token_ < n - 1) {
            ++token_;
            enter(OuterState::S1_move_q);
        } else if (token_ == n - 1) {
            // Drain: one more S2/S3 pair for the last token's softmax.
            token_ = n;
            enter(OuterState::S2_compute);
        } else {
            enter(OuterState::halt);
            run_value_stage();
        }
        return;
    case OuterState::halt: return;
    }
}

void AttentionSystem::run_value_stage() {
    if (value_done_)
        return;
    const int n = config_.seq_len;
    const int d_k = config_.d_k;
    std::vector<int64_t> acc(d_k);
    for (int t = 0; t < n; ++t) {
        std::fill(acc.begin(), acc.end(), 0);
        const auto p = probs_.row(t);
        for (int j = 0; j < n; ++j) {
            const auto v = v_buf_.row(j);
            for (int c = 0; c < d_k; ++c)
                acc[c] += int64_t{p[j]} * v[c];
        }
        for (int c = 0; c < d_k; ++c)
            outputs_.at(t, c) = requantize_to_int8(acc[c], *config_.shift_value);
    }
    value_done_ = true;
    record(ModuleId::controller,
           "value_stage:" + std::to_string(static_cast<uint64_t>(config_.value_latency) * static_cast<uint64_t>(n)),
           digest_of(outputs_.data));
}

InferenceResult AttentionSystem::take_result() {
    if (!finished())
        throw PreconditionError("take_result: simulation has not halted");
    InferenceResult r;
    r.values.q = q_buf_;
    r.values.k = k_buf_;
    r.values.v = v_buf_;
    r.values.scores = scores_;
    r.values.probs = probs_;
    r.values.outputs = outputs_;
    r.stats = compute_stats(trace_);
    r.trace = std::move(trace_);
    trace_.clear();
    return r;
}

InferenceResult run_inference(const AttentionWeights& weights, const Int8Matrix& tokens, const AttentionConfig& config) {
    AttentionSystem sys(weights, tokens, config);
    sys.run();
    return sys.take_result();
}

}  // namespace attnlego
