#pragma once

// JSON (de)serialization for the config structs, shared by checkpoints and
// the experiment runner. Internal to the library.

#include <nlohmann/json.hpp>

#include "wuglab/adamw.hpp"
#include "wuglab/masking.hpp"
#include "wuglab/model.hpp"

namespace wuglab {

inline nlohmann::json model_cfg_to_json(const ModelConfig& c) {
    return {{"layers", c.layers},       {"heads", c.heads},
            {"hidden", c.hidden},       {"dropout", c.dropout},
            {"layer_norm_eps", c.layer_norm_eps}, {"init_std", c.init_std},
            {"max_seq_len", c.max_seq_len},       {"vocab_size", c.vocab_size}};
}

inline ModelConfig model_cfg_from_json(const nlohmann::json& j, ModelConfig c = {}) {
    if (j.contains("layers")) c.layers = j["layers"].get<int>();
    if (j.contains("heads")) c.heads = j["heads"].get<int>();
    if (j.contains("hidden")) c.hidden = j["hidden"].get<int>();
    if (j.contains("dropout")) c.dropout = j["dropout"].get<double>();
    if (j.contains("layer_norm_eps")) c.layer_norm_eps = j["layer_norm_eps"].get<double>();
    if (j.contains("init_std")) c.init_std = j["init_std"].get<double>();
    if (j.contains("max_seq_len")) c.max_seq_len = j["max_seq_len"].get<int>();
    if (j.contains("vocab_size")) c.vocab_size = j["vocab_size"].get<int>();
    return c;
}

inline nlohmann::json optim_cfg_to_json(const OptimizerConfig& c) {
    return {{"lr", c.lr},           {"beta1", c.beta1},
            {"beta2", c.beta2},     {"adam_eps", c.adam_eps},
            {"weight_decay", c.weight_decay}, {"warmup_steps", c.warmup_steps},
            {"batch", c.batch},     {"grad_accum", c.grad_accum},
            {"epochs", c.epochs}};
}

inline OptimizerConfig optim_cfg_from_json(const nlohmann::json& j, OptimizerConfig c = {}) {
    if (j.contains("lr")) c.lr = j["lr"].get<double>();
    if (j.contains("beta1")) c.beta1 = j["beta1"].get<double>();
    if (j.contains("beta2")) c.beta2 = j["beta2"].get<double>();
    if (j.contains("adam_eps")) c.adam_eps = j["adam_eps"].get<double>();
    if (j.contains("weight_decay")) c.weight_decay = j["weight_decay"].get<double>();
    if (j.contains("warmup_steps")) c.warmup_steps = j["warmup_steps"].get<int64_t>();
    if (j.contains("batch")) c.batch = j["batch"].get<int>();
    if (j.contains("grad_accum")) c.grad_accum = j["grad_accum"].get<int>();
    if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
    return c;
}

inline nlohmann::json masking_to_json(const MaskingPolicy& m) {
    return {{"rate", m.rate}, {"p_mask", m.p_mask}, {"p_random", m.p_random}, {"p_keep", m.p_keep}};
}

inline MaskingPolicy masking_from_json(const nlohmann::json& j, MaskingPolicy m = {}) {
    if (j.contains("rate")) m.rate = j["rate"].get<double>();
    if (j.contains("p_mask")) m.p_mask = j["p_mask"].get<double>();
    if (j.contains("p_random")) m.p_random = j["p_random"].get<double>();
    if (j.contains("p_keep")) m.p_keep = j["p_keep"].get<double>();
    return m;
}

} // namespace wuglab
