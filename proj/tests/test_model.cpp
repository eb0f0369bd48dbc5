#include <doctest.h>

#include <cmath>

#include "wuglab/model.hpp"
#include "wuglab/rng.hpp"

using namespace wuglab;

namespace {

template <class T>
Batch make_batch(const std::vector<std::vector<int>>& seqs, int pad_id = 0) {
    Batch b;
    b.bsz = static_cast<int>(seqs.size());
    b.seq = 0;
    for (const auto& s : seqs) b.seq = std::max(b.seq, static_cast<int>(s.size()));
    b.ids.assign(static_cast<size_t>(b.bsz) * b.seq, pad_id);
    b.valid.assign(b.ids.size(), 0);
    for (size_t i = 0; i < seqs.size(); ++i) {
        for (size_t t = 0; t < seqs[i].size(); ++t) {
            b.ids[i * static_cast<size_t>(b.seq) + t] = seqs[i][t];
            b.valid[i * static_cast<size_t>(b.seq) + t] = 1;
        }
    }
    return b;
}

ModelConfig tiny_cfg() {
    ModelConfig mc;
    mc.layers = 2;
    mc.heads = 2;
    mc.hidden = 16;
    mc.vocab_size = 50;
    mc.max_seq_len = 16;
    mc.dropout = 0.0;
    return mc;
}

} // namespace

TEST_CASE("init: sampled std tracks the configured value within 5%") {
    for (double target : {0.02, 0.002}) {
        ModelConfig mc;
        mc.layers = 1;
        mc.heads = 2;
        mc.hidden = 64;
        mc.vocab_size = 2000; // tok_emb has 128k entries
        mc.init_std = target;
        auto p = init_params<float>(mc, 7);
        double sum = 0, sum2 = 0;
        for (float v : p.tok_emb.a) {
            sum += v;
            sum2 += static_cast<double>(v) * v;
        }
        double n = static_cast<double>(p.tok_emb.size());
        double std_obs = std::sqrt(sum2 / n - (sum / n) * (sum / n));
        CHECK(std_obs == doctest::Approx(target).epsilon(0.05));
    }
}

TEST_CASE("init: biases zero, layer-norm gains one, determinism") {
    ModelConfig mc = tiny_cfg();
    auto a = init_params<float>(mc, 3);
    auto b = init_params<float>(mc, 3);
    for (float v : a.layers[0].bq.a) CHECK(v == 0.0f);
    for (float v : a.layers[0].ln1_g.a) CHECK(v == 1.0f);
    for (float v : a.lm_bias.a) CHECK(v == 0.0f);
    auto da = a.directory();
    auto db = b.directory();
    for (size_t i = 0; i < da.size(); ++i) {
        CHECK(da[i].tensor->a == db[i].tensor->a);
    }
    auto c = init_params<float>(mc, 4);
    CHECK(c.tok_emb.a != a.tok_emb.a);
}

TEST_CASE("forward: logits shape and softmax normalization") {
    ModelConfig mc = tiny_cfg();
    auto p = init_params<float>(mc, 1);
    Batch b = make_batch<float>({{2, 6, 7, 8, 9, 10, 11, 12, 13, 3}, {2, 14, 15, 16, 3}});
    Mat<float> logits = forward_full_logits(mc, p, b);
    CHECK(logits.rows == b.bsz * b.seq);
    CHECK(logits.cols == mc.vocab_size);
    for (int r = 0; r < logits.rows; ++r) {
        const float* row = logits.row(r);
        double maxv = row[0];
        for (int v = 1; v < mc.vocab_size; ++v) maxv = std::max<double>(maxv, row[v]);
        double denom = 0;
        for (int v = 0; v < mc.vocab_size; ++v) denom += std::exp(row[v] - maxv);
        double total = 0;
        for (int v = 0; v < mc.vocab_size; ++v) total += std::exp(row[v] - maxv) / denom;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("forward: pad tokens do not influence real positions") {
    ModelConfig mc = tiny_cfg();
    auto p = init_params<double>(mc, 2);
    Batch b1 = make_batch<double>({{2, 6, 7, 8, 3}});
    b1.seq = 9; // extend with pads
    b1.ids.resize(9, 0);
    b1.valid.resize(9, 0);
    Batch b2 = b1;
    b2.ids[6] = 17;
    b2.ids[8] = 33; // permute/replace pad-only tail content
    Acts<double> a1, a2;
    forward_encoder(mc, p, b1, false, nullptr, a1);
    forward_encoder(mc, p, b2, false, nullptr, a2);
    std::vector<int> rows = {0, 1, 2, 3, 4};
    forward_head(mc, p, a1, rows);
    forward_head(mc, p, a2, rows);
    for (size_t i = 0; i < a1.logits.a.size(); ++i) {
        CHECK(std::abs(a1.logits.a[i] - a2.logits.a[i]) < 1e-9);
    }
}

TEST_CASE("forward: SequenceTooLong") {
    ModelConfig mc = tiny_cfg();
    auto p = init_params<float>(mc, 1);
    std::vector<int> long_seq(static_cast<size_t>(mc.max_seq_len) + 1, 5);
    Batch b = make_batch<float>({long_seq});
    Acts<float> acts;
    CHECK_THROWS_AS(forward_encoder(mc, p, b, false, nullptr, acts), SequenceTooLong);
}

TEST_CASE("loss: uniform logits give ln V") {
    ModelConfig mc = tiny_cfg();
    ModelParams<double> p;
    p.build(mc);
    p.zero_all(); // all-zero weights -> all logits zero -> uniform softmax
    for (auto& v : p.emb_ln_g.a) v = 1.0;
    for (auto& l : p.layers) {
        for (auto& v : l.ln1_g.a) v = 1.0;
        for (auto& v : l.ln2_g.a) v = 1.0;
    }
    for (auto& v : p.head_ln_g.a) v = 1.0;
    ModelParams<double> grads;
    grads.build(mc);
    grads.zero_all();
    Batch b = make_batch<double>({{2, 6, 7, 3}});
    double loss = loss_and_grad(mc, p, b, {{1, 6}, {2, 7}}, false, nullptr, grads);
    CHECK(std::abs(loss - std::log(50.0)) < 1e-9);
}

TEST_CASE("loss: NoLabeledPositions and batch-mean invariance") {
    ModelConfig mc = tiny_cfg();
    auto p = init_params<double>(mc, 5);
    ModelParams<double> grads;
    grads.build(mc);
    grads.zero_all();
    Batch b = make_batch<double>({{2, 6, 7, 3}});
    CHECK_THROWS_AS(loss_and_grad(mc, p, b, {}, false, nullptr, grads), NoLabeledPositions);

    double l1 = loss_and_grad(mc, p, b, {{1, 9}}, false, nullptr, grads);
    Batch dup = make_batch<double>({{2, 6, 7, 3}, {2, 6, 7, 3}});
    grads.zero_all();
    double l2 = loss_and_grad(mc, p, dup, {{1, 9}, {1 + dup.seq, 9}}, false, nullptr, grads);
    CHECK(l1 == doctest::Approx(l2).epsilon(1e-12));
}

TEST_CASE("gradient check: analytic vs central finite differences") {
    ModelConfig mc = tiny_cfg(); // 2 layers, hidden 16, vocab 50, fp64 below
    auto p = init_params<double>(mc, 11);
    Batch b = make_batch<double>({{2, 6, 7, 8, 9, 3}, {2, 10, 11, 3}});
    std::vector<Label> labels = {{1, 6}, {3, 8}, {b.seq + 2, 11}};

    ModelParams<double> grads;
    grads.build(mc);
    grads.zero_all();
    loss_and_grad(mc, p, b, labels, false, nullptr, grads);

    const double eps = 1e-5;
    double max_rel = 0.0;
    auto dirs = p.directory();
    auto gdirs = grads.directory();
    ModelParams<double> scratch;
    scratch.build(mc);
    for (size_t ti = 0; ti < dirs.size(); ++ti) {
        Mat<double>& tensor = *dirs[ti].tensor;
        const Mat<double>& g = *gdirs[ti].tensor;
        // check a strided subset of large tensors, all of small ones
        size_t stride = tensor.size() > 400 ? 7 : 1;
        for (size_t i = 0; i < tensor.size(); i += stride) {
            double saved = tensor.a[i];
            tensor.a[i] = saved + eps;
            scratch.zero_all();
            double lp = loss_and_grad(mc, p, b, labels, false, nullptr, scratch);
            tensor.a[i] = saved - eps;
            scratch.zero_all();
            double lm = loss_and_grad(mc, p, b, labels, false, nullptr, scratch);
            tensor.a[i] = saved;
            double numeric = (lp - lm) / (2 * eps);
            double analytic = g.a[i];
            // The 1e-6 floor keeps central-difference rounding noise
            // (~1e-11 absolute on a ~4.0 loss) from swamping the ratio on
            // negligible gradients.
            double rel = std::abs(analytic - numeric) /
                         std::max({std::abs(analytic), std::abs(numeric), 1e-6});
            max_rel = std::max(max_rel, rel);
        }
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("eval forward is deterministic (dropout off)") {
    ModelConfig mc = tiny_cfg();
    mc.dropout = 0.1; // config has dropout, but eval mode must ignore it
    auto p = init_params<float>(mc, 21);
    Batch b = make_batch<float>({{2, 6, 7, 8, 3}});
    Mat<float> l1 = forward_full_logits(mc, p, b);
    Mat<float> l2 = forward_full_logits(mc, p, b);
    CHECK(l1.a == l2.a);
}

TEST_CASE("attention rows are probability distributions") {
    ModelConfig mc = tiny_cfg();
    auto p = init_params<float>(mc, 31);
    Batch b = make_batch<float>({{2, 6, 7, 8, 9, 3}, {2, 10, 3}});
    Acts<float> acts;
    forward_encoder(mc, p, b, false, nullptr, acts);
    for (const auto& layer : acts.layers) {
        for (int r = 0; r < layer.probs.rows; ++r) {
            const float* row = layer.probs.row(r);
            double sum = 0;
            for (int u = 0; u < layer.probs.cols; ++u) {
                CHECK(row[u] >= 0.0f);
                sum += row[u];
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}
