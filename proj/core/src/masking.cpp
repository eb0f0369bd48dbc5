#include "wuglab/masking.hpp"

#include <cmath>

#include "wuglab/errors.hpp"

namespace wuglab {

void MaskingPolicy::validate() const {
    if (rate < 0.0 || rate > 1.0) throw Error("mask rate must be in [0,1]");
    if (std::abs(p_mask + p_random + p_keep - 1.0) > 1e-9) {
        throw Error("mask replacement split must sum to 1");
    }
}

MaskedBatch mask_batch(const MaskingPolicy& policy, const Batch& batch, const TokenizerModel& tok,
                       Rng& rng) {
    policy.validate();
    MaskedBatch out;
    out.batch = batch;
    const int regular_base = static_cast<int>(tok.specials.size());
    const int regular_count = static_cast<int>(tok.vocab.size()) - regular_base;
    for (int b = 0; b < batch.bsz; ++b) {
        for (int t = 0; t < batch.seq; ++t) {
            int row = b * batch.seq + t;
            if (!batch.valid[static_cast<size_t>(row)]) continue;
            int id = batch.ids[static_cast<size_t>(row)];
            if (tok.is_special(id)) continue;
            if (rng.uniform() >= policy.rate) continue;
            out.labels.push_back({row, id});
            double r = rng.uniform();
            if (r < policy.p_mask) {
                out.batch.ids[static_cast<size_t>(row)] = tok.mask_id;
            } else if (r < policy.p_mask + policy.p_random && regular_count > 0) {
                out.batch.ids[static_cast<size_t>(row)] =
                    regular_base + static_cast<int>(rng.below(static_cast<uint64_t>(regular_count)));
            } // else keep the original token
        }
    }
    return out;
}

} // namespace wuglab
