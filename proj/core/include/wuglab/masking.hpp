#pragma once

#include <cstdint>
#include <vector>

#include "wuglab/bpe.hpp"
#include "wuglab/model.hpp"
#include "wuglab/rng.hpp"

namespace wuglab {

// MLM corruption: select ~rate of the non-special positions, then replace
// 80/10/10 with <mask> / a random regular token / the original.
struct MaskingPolicy {
    double rate = 0.15;
    double p_mask = 0.8;
    double p_random = 0.1;
    double p_keep = 0.1;

    void validate() const;
};

struct MaskedBatch {
    Batch batch;
    std::vector<Label> labels;
};

MaskedBatch mask_batch(const MaskingPolicy& policy, const Batch& batch,
                       const TokenizerModel& tok, Rng& rng);

} // namespace wuglab
