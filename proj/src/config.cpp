#include "attnlego/config.hpp"

#include <set>
#include <stdexcept>

namespace attnlego {

using nlohmann::json;

AttentionConfig AttentionConfig::paper_default() { return AttentionConfig{}; }

AttentionConfig AttentionConfig::desk_small() {
    AttentionConfig c;
    c.preset = "desk-small";
    c.d_model = 128;
    c.d_k = 32;
    c.seq_len = 32;
    return c;
}

AttentionConfig AttentionConfig::from_preset(const std::string& name) {
    if (name == "paper-default")
        return paper_default();
    if (name == "desk-small")
        return desk_small();
    throw std::invalid_argument("unknown preset '" + name + "' (expected paper-default or desk-small)");
}

bool AttentionConfig::shifts_resolved() const {
    return shift_q && shift_k && shift_v && shift_score && shift_value;
}

void AttentionConfig::validate() const {
    projection_apim.validate();
    score_apim.validate();
    adc.validate();
    lut_in.validate();
    lut_out.validate();
    if (!lut_in.is_signed || lut_in.width() != 8)
        throw std::invalid_argument("config: lut_in_format must be a signed 8-bit format");
    if (lut_out.is_signed || lut_out.width() != 16)
        throw std::invalid_argument("config: lut_out_format must be an unsigned 16-bit format");
    if (d_model <= 0 || d_model % projection_apim.rows != 0)
        throw std::invalid_argument("config: d_model must be a positive multiple of the projection APIM rows");
    if (d_k <= 0 || d_k > projection_apim.cols)
        throw std::invalid_argument("config: d_k must be in [1, projection APIM cols]");
    if (score_apim.rows != score_apim.cols)
        throw std::invalid_argument("config: score APIM must be square");
    if (d_k % score_apim.rows != 0)
        throw std::invalid_argument("config: d_k must be a multiple of the score APIM size");
    if (seq_len <= 0)
        throw std::invalid_argument("config: seq_len must be positive");
    if (softmax_lanes < 1)
        throw std::invalid_argument("config: softmax_lanes must be >= 1");
    if (bus_width < 8 || bus_width > 64 || bus_width % 8 != 0)
        throw std::invalid_argument("config: bus_width must be a multiple of 8 in [8, 64]");
    if (k_load_cycles < 1)
        throw std::invalid_argument("config: k_load_cycles must be >= 1");
    if (value_latency < 0)
        throw std::invalid_argument("config: value_latency must be >= 0");
    for (const auto* s : {&shift_q, &shift_k, &shift_v, &shift_score, &shift_value})
        if (*s && (**s < 0 || **s > 40))
            throw std::invalid_argument("config: shifts must be in [0, 40]");
}

namespace {

json shift_json(const std::optional<int>& s) { return s ? json(*s) : json("auto"); }

json geometry_json(const ApimGeometry& g) {
    return {{"rows", g.rows},
            {"cols", g.cols},
            {"input_parallelism", g.input_parallelism},
            {"output_parallelism", g.output_parallelism}};
}

template <typename T>
T get_as(const json& v, const std::string& key) {
    try {
        return v.get<T>();
    } catch (const json::exception&) {
        throw std::invalid_argument("config key '" + key + "' has the wrong type");
    }
}

int get_int(const json& v, const std::string& key) {
    if (!v.is_number_integer())
        throw std::invalid_argument("config key '" + key + "' must be an integer");
    return v.get<int>();
}

std::optional<int> get_shift(const json& v, const std::string& key) {
    if (v.is_string() && v.get<std::string>() == "auto")
        return std::nullopt;
    return get_int(v, key);
}

ApimGeometry get_geometry(const json& v, const std::string& key) {
    if (!v.is_object())
        throw std::invalid_argument("config key '" + key + "' must be an object");
    ApimGeometry g;
    for (const auto& [k, item] : v.items()) {
        const std::string full = key + "." + k;
        if (k == "rows")
            g.rows = get_int(item, full);
        else if (k == "cols")
            g.cols = get_int(item, full);
        else if (k == "input_parallelism")
            g.input_parallelism = get_int(item, full);
        else if (k == "output_parallelism")
            g.output_parallelism = get_int(item, full);
        else
            throw std::invalid_argument("unknown config key '" + full + "'");
    }
    return g;
}

}  // namespace

json to_json(const AttentionConfig& c) {
    return {{"preset", c.preset},
            {"d_model", c.d_model},
            {"d_k", c.d_k},
            {"seq_len", c.seq_len},
            {"projection_apim", geometry_json(c.projection_apim)},
            {"score_apim", geometry_json(c.score_apim)},
            {"adc_mode", std::string(to_string(c.adc.mode))},
            {"adc_bits", c.adc.bits},
            {"adc_full_scale", c.adc.full_scale},
            {"shift_q", shift_json(c.shift_q)},
            {"shift_k", shift_json(c.shift_k)},
            {"shift_v", shift_json(c.shift_v)},
            {"shift_score", shift_json(c.shift_score)},
            {"shift_value", shift_json(c.shift_value)},
            {"lut_in_format", c.lut_in.to_string()},
            {"lut_out_format", c.lut_out.to_string()},
            {"softmax_lanes", c.softmax_lanes},
            {"bus_width", c.bus_width},
            {"pipeline", c.pipeline},
            {"qkv_sequential", c.qkv_sequential},
            {"k_load_cycles", c.k_load_cycles},
            {"value_latency", c.value_latency}};
}

AttentionConfig config_from_json(const json& j) {
    if (!j.is_object())
        throw std::invalid_argument("config must be a JSON object");
    AttentionConfig c;
    if (j.contains("preset"))
        c = AttentionConfig::from_preset(get_as<std::string>(j.at("preset"), "preset"));
    for (const auto& [key, v] : j.items()) {
        if (key == "preset")
            continue;
        else if (key == "d_model")
            c.d_model = get_int(v, key);
        else if (key == "d_k")
            c.d_k = get_int(v, key);
        else if (key == "seq_len")
            c.seq_len = get_int(v, key);
        else if (key == "projection_apim")
            c.projection_apim = get_geometry(v, key);
        else if (key == "score_apim")
            c.score_apim = get_geometry(v, key);
        else if (key == "adc_mode")
            c.adc.mode = parse_adc_mode(get_as<std::string>(v, key));
        else if (key == "adc_bits")
            c.adc.bits = get_int(v, key);
        else if (key == "adc_full_scale") {
            if (!v.is_number_integer())
                throw std::invalid_argument("config key 'adc_full_scale' must be an integer");
            c.adc.full_scale = v.get<int64_t>();
        } else if (key == "shift_q")
            c.shift_q = get_shift(v, key);
        else if (key == "shift_k")
            c.shift_k = get_shift(v, key);
        else if (key == "shift_v")
            c.shift_v = get_shift(v, key);
        else if (key == "shift_score")
            c.shift_score = get_shift(v, key);
        else if (key == "shift_value")
            c.shift_value = get_shift(v, key);
        else if (key == "lut_in_format")
            c.lut_in = QFormat::parse(get_as<std::string>(v, key));
        else if (key == "lut_out_format")
            c.lut_out = QFormat::parse(get_as<std::string>(v, key));
        else if (key == "softmax_lanes")
            c.softmax_lanes = get_int(v, key);
        else if (key == "bus_width")
            c.bus_width = get_int(v, key);
        else if (key == "pipeline")
            c.pipeline = get_as<bool>(v, key);
        else if (key == "qkv_sequential")
            c.qkv_sequential = get_as<bool>(v, key);
        else if (key == "k_load_cycles")
            c.k_load_cycles = get_int(v, key);
        else if (key == "value_latency")
            c.value_latency = get_int(v, key);
        else
            throw std::invalid_argument("unknown config key '" + key + "'");
    }
    c.validate();
    return c;
}

}  // namespace attnlego
