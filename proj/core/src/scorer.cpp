#include "wuglab/scorer.hpp"

#include <algorithm>
#include <cmath>

#include "wuglab/errors.hpp"

namespace wuglab {

ModelScorer::ModelScorer(const Checkpoint& ckpt, const TokenizerModel& tok)
    : cfg_(ckpt.model_cfg), params_(ckpt.params), tok_(tok) {}

std::vector<double> ModelScorer::masked_token_logprobs(const std::vector<int>& ids,
                                                       const std::vector<int>& positions,
                                                       const std::vector<int>& targets) const {
    if (positions.size() != targets.size()) throw Error("positions/targets size mismatch");
    std::vector<double> out(positions.size());
    const int S = static_cast<int>(ids.size());
    const size_t kChunk = 64; // bound per-forward memory
    for (size_t chunk = 0; chunk < positions.size(); chunk += kChunk) {
        size_t chunk_end = std::min(chunk + kChunk, positions.size());
        int B = static_cast<int>(chunk_end - chunk);
        Batch batch;
        batch.bsz = B;
        batch.seq = S;
        batch.ids.resize(static_cast<size_t>(B) * S);
        batch.valid.assign(static_cast<size_t>(B) * S, 1);
        for (int b = 0; b < B; ++b) {
            std::copy(ids.begin(), ids.end(), batch.ids.begin() + static_cast<size_t>(b) * S);
            batch.ids[static_cast<size_t>(b) * S + positions[chunk + static_cast<size_t>(b)]] =
                tok_.mask_id;
        }
        Acts<float> acts;
        forward_encoder(cfg_, params_, batch, /*train=*/false, nullptr, acts);
        std::vector<int> rows(static_cast<size_t>(B));
        for (int b = 0; b < B; ++b) {
            rows[static_cast<size_t>(b)] = b * S + positions[chunk + static_cast<size_t>(b)];
        }
        forward_head(cfg_, params_, acts, rows);
        for (int b = 0; b < B; ++b) {
            const float* row = acts.logits.row(b);
            float maxv = row[0];
            for (int v = 1; v < cfg_.vocab_size; ++v) maxv = std::max(maxv, row[v]);
            double denom = 0.0;
            for (int v = 0; v < cfg_.vocab_size; ++v) {
                denom += std::exp(static_cast<double>(row[v] - maxv));
            }
            int target = targets[chunk + static_cast<size_t>(b)];
            out[chunk + static_cast<size_t>(b)] =
                static_cast<double>(row[target] - maxv) - std::log(denom);
        }
    }
    return out;
}

std::vector<double> ModelScorer::masked_distribution(const std::vector<int>& ids,
                                                     int position) const {
    Batch batch;
    batch.bsz = 1;
    batch.seq = static_cast<int>(ids.size());
    batch.ids = ids;
    batch.ids[static_cast<size_t>(position)] = tok_.mask_id;
    batch.valid.assign(ids.size(), 1);
    Acts<float> acts;
    forward_encoder(cfg_, params_, batch, /*train=*/false, nullptr, acts);
    forward_head(cfg_, params_, acts, {position});
    const float* row = acts.logits.row(0);
    float maxv = row[0];
    for (int v = 1; v < cfg_.vocab_size; ++v) maxv = std::max(maxv, row[v]);
    double denom = 0.0;
    for (int v = 0; v < cfg_.vocab_size; ++v) denom += std::exp(static_cast<double>(row[v] - maxv));
    double log_denom = std::log(denom);
    std::vector<double> out(static_cast<size_t>(cfg_.vocab_size));
    for (int v = 0; v < cfg_.vocab_size; ++v) {
        out[static_cast<size_t>(v)] = static_cast<double>(row[v] - maxv) - log_denom;
    }
    return out;
}

// ---- TableScorer ----

std::string TableScorer::key(const std::vector<int>& ids, int position) {
    std::string k = std::to_string(position) + ":";
    for (size_t i = 0; i < ids.size(); ++i) {
        k += (static_cast<int>(i) == position) ? "_" : std::to_string(ids[i]);
        k += ",";
    }
    return k;
}

void TableScorer::set(const std::vector<int>& ids, int position, const std::vector<double>& probs) {
    if (static_cast<int>(probs.size()) != vocab_size_) throw Error("TableScorer: bad row size");
    double total = 0.0;
    for (double p : probs) total += p;
    if (total <= 0.0) throw Error("TableScorer: non-positive mass");
    std::vector<double> norm(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) norm[i] = probs[i] / total;
    table_[key(ids, position)] = std::move(norm);
}

std::vector<double> TableScorer::masked_token_logprobs(const std::vector<int>& ids,
                                                       const std::vector<int>& positions,
                                                       const std::vector<int>& targets) const {
    std::vector<double> out(positions.size());
    for (size_t i = 0; i < positions.size(); ++i) {
        auto it = table_.find(key(ids, positions[i]));
        if (it == table_.end()) throw Error("TableScorer: no entry for masked position");
        out[i] = std::log(it->second[static_cast<size_t>(targets[i])]);
    }
    return out;
}

std::vector<double> TableScorer::masked_distribution(const std::vector<int>& ids,
                                                     int position) const {
    auto it = table_.find(key(ids, position));
    if (it == table_.end()) throw Error("TableScorer: no entry for masked position");
    std::vector<double> out(it->second.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(it->second[i]);
    return out;
}

} // namespace wuglab
