#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "wuglab/adamw.hpp"
#include "wuglab/masking.hpp"
#include "wuglab/model.hpp"

namespace wuglab {

// Versioned binary checkpoint: JSON header (configs, step, RNG state and the
// tensor directory) followed by little-endian float32 payloads in directory
// order (parameters, Adam first moments, Adam second moments).
struct Checkpoint {
    ModelConfig model_cfg;
    OptimizerConfig optim_cfg;
    MaskingPolicy masking;
    ModelParams<float> params;
    AdamState<float> adam;
    int64_t step = 0;        // optimizer updates completed
    int64_t next_line = 0;   // stream cursor for resume
    int64_t total_updates = 0;
    std::string rng_state;   // training RNG (masking + dropout)
    uint64_t run_seed = 0;
    uint64_t stream_hash = 0;
};

void save_checkpoint(const std::filesystem::path& path, Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace wuglab
