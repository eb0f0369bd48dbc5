#include "wuglab/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_map>

#include "wuglab/errors.hpp"
#include "wuglab/util.hpp"

namespace fs = std::filesystem;

namespace wuglab {

namespace {

// bos + pieces + eos, truncated to max_seq_len.
std::vector<int> encode_line(const TokenizerModel& tok, const std::string& line, int max_seq_len) {
    TokenSeq seq = encode(tok, line);
    int content_budget = max_seq_len - 2;
    if (static_cast<int>(seq.ids.size()) > content_budget) {
        seq.ids.resize(static_cast<size_t>(content_budget));
    }
    std::vector<int> ids;
    ids.reserve(seq.ids.size() + 2);
    ids.push_back(tok.bos_id);
    ids.insert(ids.end(), seq.ids.begin(), seq.ids.end());
    ids.push_back(tok.eos_id);
    return ids;
}

Batch make_batch(const std::vector<const std::vector<int>*>& examples, int pad_id) {
    Batch b;
    b.bsz = static_cast<int>(examples.size());
    b.seq = 0;
    for (const auto* e : examples) b.seq = std::max(b.seq, static_cast<int>(e->size()));
    b.ids.assign(static_cast<size_t>(b.bsz) * b.seq, pad_id);
    b.valid.assign(static_cast<size_t>(b.bsz) * b.seq, 0);
    for (int i = 0; i < b.bsz; ++i) {
        const auto& e = *examples[static_cast<size_t>(i)];
        for (size_t t = 0; t < e.size(); ++t) {
            b.ids[static_cast<size_t>(i) * b.seq + t] = e[t];
            b.valid[static_cast<size_t>(i) * b.seq + t] = 1;
        }
    }
    return b;
}

void scale_grads(ModelParams<float>& grads, float s) {
    for (auto& nt : grads.directory()) {
        for (auto& v : nt.tensor->a) v *= s;
    }
}

} // namespace

TrainResult train_mlm(const std::vector<std::string>& stream_lines, const TokenizerModel& tok,
                      const ModelConfig& mc, const OptimizerConfig& oc, const MaskingPolicy& mp,
                      uint64_t seed, const TrainOptions& opt) {
    mc.validate();
    oc.validate();
    mp.validate();
    if (stream_lines.empty()) throw Error("train_mlm: empty stream");
    ensure_dir(opt.out_dir);

    // Tokenize each distinct line once; the 18x concatenation makes the
    // stream highly repetitive.
    std::unordered_map<std::string, std::vector<int>> cache;
    std::vector<const std::vector<int>*> encoded(stream_lines.size());
    for (size_t i = 0; i < stream_lines.size(); ++i) {
        auto it = cache.find(stream_lines[i]);
        if (it == cache.end()) {
            it = cache.emplace(stream_lines[i], encode_line(tok, stream_lines[i], mc.max_seq_len))
                     .first;
        }
        encoded[i] = &it->second;
    }

    const int64_t n_lines = static_cast<int64_t>(stream_lines.size());
    const int64_t micro_total = (n_lines + oc.batch - 1) / oc.batch;
    const int64_t total_updates = (micro_total + oc.grad_accum - 1) / oc.grad_accum;

    ModelParams<float> params;
    AdamState<float> adam;
    Rng train_rng(derive_seed(seed, "train"));
    int64_t line_cursor = 0;
    int64_t step = 0;

    if (!opt.resume_from.empty()) {
        Checkpoint ckpt = load_checkpoint(opt.resume_from);
        params = std::move(ckpt.params);
        adam = std::move(ckpt.adam);
        step = ckpt.step;
        line_cursor = ckpt.next_line;
        train_rng.load_state(ckpt.rng_state);
    } else {
        params = init_params<float>(mc, derive_seed(seed, "init"));
        adam.build(mc);
    }

    ModelParams<float> grads;
    grads.build(mc);
    grads.zero_all();

    auto write_checkpoint = [&](const fs::path& path) {
        Checkpoint ckpt;
        ckpt.model_cfg = mc;
        ckpt.optim_cfg = oc;
        ckpt.masking = mp;
        ckpt.params = params;
        ckpt.adam = adam;
        ckpt.step = step;
        ckpt.next_line = line_cursor;
        ckpt.total_updates = total_updates;
        ckpt.rng_state = train_rng.save_state();
        ckpt.run_seed = seed;
        ckpt.stream_hash = fnv1a64(stream_lines);
        save_checkpoint(path, ckpt);
    };

    std::vector<std::string> log_rows = {"step,loss,lr"};
    double window_loss = 0.0;
    int64_t window_updates = 0;
    TrainResult result;
    bool first_window_recorded = false;

    while (line_cursor < n_lines) {
        // One optimizer update: up to grad_accum micro-batches.
        int micros_used = 0;
        double update_loss = 0.0;
        for (int g = 0; g < oc.grad_accum && line_cursor < n_lines; ++g) {
            int64_t end = std::min<int64_t>(line_cursor + oc.batch, n_lines);
            std::vector<const std::vector<int>*> window(encoded.begin() + line_cursor,
                                                        encoded.begin() + end);
            line_cursor = end;
            Batch batch = make_batch(window, tok.pad_id);
            MaskedBatch masked = mask_batch(mp, batch, tok, train_rng);
            if (masked.labels.empty()) continue; // nothing to learn from
            double loss = loss_and_grad(mc, params, masked.batch, masked.labels, /*train=*/true,
                                        &train_rng, grads);
            update_loss += loss;
            ++micros_used;
        }
        if (micros_used == 0) continue; // no labeled positions: no update, step unchanged

        if (micros_used > 1) scale_grads(grads, 1.0f / static_cast<float>(micros_used));
        ++step;
        adam.step = step;
        double lr_t = lr_at(step, total_updates, oc.warmup_steps, oc.lr);
        adamw_step(params, grads, adam, oc, lr_t);
        grads.zero_all();

        window_loss += update_loss / micros_used;
        ++window_updates;
        if (window_updates == opt.log_every || line_cursor >= n_lines) {
            double mean = window_loss / window_updates;
            char row[96];
            std::snprintf(row, sizeof(row), "%lld,%.6f,%.8g", static_cast<long long>(step), mean,
                          lr_t);
            log_rows.emplace_back(row);
            if (!first_window_recorded) {
                result.first_window_loss = mean;
                first_window_recorded = true;
            }
            result.last_window_loss = mean;
            if (!opt.quiet) {
                std::fprintf(stderr, "[train] step %lld/%lld loss %.4f lr %.3g\n",
                             static_cast<long long>(step), static_cast<long long>(total_updates),
                             mean, lr_t);
            }
            window_loss = 0.0;
            window_updates = 0;
        }
        if (opt.checkpoint_every > 0 && step % opt.checkpoint_every == 0 && line_cursor < n_lines) {
            write_checkpoint(opt.out_dir / ("checkpoint_" + std::to_string(step) + ".ckpt"));
        }
    }

    result.updates = step;
    result.final_checkpoint = opt.out_dir / "checkpoint_final.ckpt";
    write_checkpoint(result.final_checkpoint);
    write_lines_atomic(opt.out_dir / "train_log.csv", log_rows);
    return result;
}

} // namespace wuglab
