#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wuglab/bpe.hpp"
#include "wuglab/checkpoint.hpp"

namespace wuglab {

struct TrainOptions {
    std::filesystem::path out_dir;
    int64_t checkpoint_every = 0; // in optimizer updates; 0 = final only
    int64_t log_every = 50;       // CSV row cadence
    std::filesystem::path resume_from; // optional mid-run checkpoint
    bool quiet = true;
};

struct TrainResult {
    std::filesystem::path final_checkpoint;
    int64_t updates = 0;
    double first_window_loss = 0.0;
    double last_window_loss = 0.0;
};

// One pass over the stream, one line per example (no cross-line packing),
// gradient accumulation across micro-batches, AdamW with the linear
// warmup/decay schedule, periodic checkpoints and a CSV loss log.
TrainResult train_mlm(const std::vector<std::string>& stream_lines, const TokenizerModel& tok,
                      const ModelConfig& mc, const OptimizerConfig& oc, const MaskingPolicy& mp,
                      uint64_t seed, const TrainOptions& opt);

} // namespace wuglab
