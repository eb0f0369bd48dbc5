#include <doctest.h>

#include <cmath>

#include "wuglab/adamw.hpp"
#include "wuglab/bpe.hpp"
#include "wuglab/masking.hpp"

using namespace wuglab;

namespace {

TokenizerModel small_tok() {
    std::vector<std::string> corpus = {"aa bb cc dd ee ff gg hh", "aa bb cc dd"};
    return train_bpe(corpus, 64, {"<wug#0>"});
}

Batch flat_batch(const std::vector<int>& ids) {
    Batch b;
    b.bsz = 1;
    b.seq = static_cast<int>(ids.size());
    b.ids = ids;
    b.valid.assign(ids.size(), 1);
    return b;
}

} // namespace

TEST_CASE("mask_batch: rate 0 changes nothing") {
    TokenizerModel tok = small_tok();
    MaskingPolicy mp;
    mp.rate = 0.0;
    Rng rng(1);
    Batch b = flat_batch({tok.bos_id, 10, 11, 12, tok.eos_id});
    MaskedBatch out = mask_batch(mp, b, tok, rng);
    CHECK(out.labels.empty());
    CHECK(out.batch.ids == b.ids);
}

TEST_CASE("mask_batch: rate 1 with pure mask split hits every eligible token") {
    TokenizerModel tok = small_tok();
    MaskingPolicy mp;
    mp.rate = 1.0;
    mp.p_mask = 1.0;
    mp.p_random = 0.0;
    mp.p_keep = 0.0;
    Rng rng(2);
    int wug = tok.id_of("<wug#0>");
    Batch b = flat_batch({tok.bos_id, 10, wug, 12, tok.eos_id});
    MaskedBatch out = mask_batch(mp, b, tok, rng);
    REQUIRE(out.labels.size() == 2); // the wug tag is special, bos/eos excluded
    CHECK(out.batch.ids[1] == tok.mask_id);
    CHECK(out.batch.ids[2] == wug);
    CHECK(out.batch.ids[3] == tok.mask_id);
    CHECK(out.labels[0].target == 10);
    CHECK(out.labels[1].target == 12);
}

TEST_CASE("mask_batch: selected fraction concentrates around the rate") {
    TokenizerModel tok = small_tok();
    MaskingPolicy mp; // 0.15, 80/10/10
    Rng rng(3);
    const int n = 100000;
    std::vector<int> ids(static_cast<size_t>(n), 10);
    Batch b = flat_batch(ids);
    MaskedBatch out = mask_batch(mp, b, tok, rng);
    double fraction = static_cast<double>(out.labels.size()) / n;
    CHECK(fraction >= 0.14);
    CHECK(fraction <= 0.16);

    // replacement split: ~80% mask token, ~10% kept original
    int masked = 0, kept = 0, random_tok = 0;
    for (const auto& label : out.labels) {
        int now = out.batch.ids[static_cast<size_t>(label.row)];
        if (now == tok.mask_id) ++masked;
        else if (now == label.target) ++kept;
        else ++random_tok;
    }
    double total = static_cast<double>(out.labels.size());
    CHECK(masked / total == doctest::Approx(0.8).epsilon(0.05));
    CHECK(kept / total == doctest::Approx(0.1).epsilon(0.25));
    CHECK(random_tok / total == doctest::Approx(0.1).epsilon(0.25));
}

TEST_CASE("mask_batch: pads never selected, policy validated") {
    TokenizerModel tok = small_tok();
    MaskingPolicy bad;
    bad.p_mask = 0.5;
    bad.p_random = 0.1;
    bad.p_keep = 0.1;
    Rng rng(4);
    Batch b = flat_batch({10});
    CHECK_THROWS(mask_batch(bad, b, tok, rng));

    MaskingPolicy mp;
    mp.rate = 1.0;
    Batch padded = flat_batch({tok.bos_id, 10, tok.eos_id, tok.pad_id, tok.pad_id});
    padded.valid = {1, 1, 1, 0, 0};
    MaskedBatch out = mask_batch(mp, padded, tok, rng);
    for (const auto& label : out.labels) CHECK(label.row == 1);
}

TEST_CASE("lr schedule: warmup peak and endpoint zero") {
    // step == warmup -> full lr; step == total -> 0
    CHECK(lr_at(24000, 100000, 24000, 2e-4) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(lr_at(100000, 100000, 24000, 2e-4) == doctest::Approx(0.0));
    CHECK(lr_at(12000, 100000, 24000, 2e-4) == doctest::Approx(1e-4).epsilon(1e-12));
    // runs shorter than warmup stay on the ramp
    CHECK(lr_at(500, 1000, 24000, 2e-4) == doctest::Approx(2e-4 * 500 / 24000.0).epsilon(1e-12));
    // no warmup: pure decay
    CHECK(lr_at(0, 10, 0, 1e-3) == doctest::Approx(1e-3));
}

TEST_CASE("adamw single step matches hand arithmetic") {
    // scalar parameter w=1, grad g=0.5, defaults lr=1e-3 wd=0.01
    ModelConfig mc;
    mc.layers = 1;
    mc.heads = 1;
    mc.hidden = 8;
    mc.vocab_size = 10;
    ModelParams<double> p, g;
    p.build(mc);
    g.build(mc);
    p.zero_all();
    g.zero_all();
    p.tok_emb.a[0] = 1.0;
    g.tok_emb.a[0] = 0.5;

    AdamState<double> state;
    state.build(mc);
    state.step = 1;

    OptimizerConfig oc;
    oc.lr = 1e-3;
    oc.beta1 = 0.9;
    oc.beta2 = 0.999;
    oc.adam_eps = 1e-8;
    oc.weight_decay = 0.01;
    adamw_step(p, g, state, oc, oc.lr);

    // hand: m=0.05, v=2.5e-4, mhat=0.5, vhat=0.25, denom=0.5+1e-8
    double mhat = 0.05 / (1 - 0.9);
    double vhat = 2.5e-4 / (1 - 0.999);
    double expected = 1.0 - 1e-3 * (mhat / (std::sqrt(vhat) + 1e-8) + 0.01 * 1.0);
    CHECK(p.tok_emb.a[0] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(state.m.tok_emb.a[0] == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(state.v.tok_emb.a[0] == doctest::Approx(2.5e-4).epsilon(1e-12));
}
