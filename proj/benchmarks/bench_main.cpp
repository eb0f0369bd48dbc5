#include <benchmark/benchmark.h>

#include "wuglab/adamw.hpp"
#include "wuglab/bpe.hpp"
#include "wuglab/corpus.hpp"
#include "wuglab/masking.hpp"
#include "wuglab/model.hpp"
#include "wuglab/rng.hpp"

using namespace wuglab;

namespace {

std::vector<std::string> tiny_corpus(int lines) {
    Rng rng(7);
    std::vector<std::string> words = {"the",  "cat",  "dog",   "house", "sees", "finds",
                                      "old",  "new",  "river", "stone", "bird", "table",
                                      "runs", "door", "keys",  "child", "opens"};
    std::vector<std::string> out;
    for (int i = 0; i < lines; ++i) {
        std::string s;
        int len = 4 + static_cast<int>(rng.below(8));
        for (int w = 0; w < len; ++w) {
            if (w) s += ' ';
            s += words[static_cast<size_t>(rng.below(words.size()))];
        }
        out.push_back(std::move(s));
    }
    return out;
}

Batch random_batch(int bsz, int seq, int vocab, uint64_t seed) {
    Rng rng(seed);
    Batch b;
    b.bsz = bsz;
    b.seq = seq;
    b.ids.resize(static_cast<size_t>(bsz) * seq);
    b.valid.assign(b.ids.size(), 1);
    for (auto& id : b.ids) id = 5 + static_cast<int>(rng.below(static_cast<uint64_t>(vocab - 5)));
    return b;
}

} // namespace

static void BM_MatmulNT(benchmark::State& state) {
    int n = static_cast<int>(state.range(0));
    Mat<float> a(224, n), b(n, n), c;
    Rng rng(1);
    for (auto& v : a.a) v = static_cast<float>(rng.normal(0, 1));
    for (auto& v : b.a) v = static_cast<float>(rng.normal(0, 1));
    for (auto _ : state) {
        matmul_nt(c, a, b);
        benchmark::DoNotOptimize(c.a.data());
    }
    state.SetItemsProcessed(state.iterations() * 2ll * 224 * n * n);
}
BENCHMARK(BM_MatmulNT)->Arg(128)->Arg(512);

static void BM_TrainStepToy(benchmark::State& state) {
    ModelConfig mc;
    mc.layers = 2;
    mc.heads = 4;
    mc.hidden = 128;
    mc.vocab_size = 2000;
    mc.dropout = 0.1;
    auto params = init_params<float>(mc, 1);
    ModelParams<float> grads;
    grads.build(mc);
    grads.zero_all();
    Batch batch = random_batch(16, 14, mc.vocab_size, 3);
    std::vector<Label> labels;
    for (int i = 0; i < 34; ++i) {
        int row = i * 6 % (16 * 14);
        labels.push_back({row, batch.ids[static_cast<size_t>(row)]});
    }
    Rng rng(5);
    for (auto _ : state) {
        grads.zero_all();
        double loss = loss_and_grad(mc, params, batch, labels, true, &rng, grads);
        benchmark::DoNotOptimize(loss);
    }
}
BENCHMARK(BM_TrainStepToy);

static void BM_BpeEncode(benchmark::State& state) {
    auto corpus = tiny_corpus(2000);
    auto tok = train_bpe(corpus, 300, {"<wug#0>"});
    size_t i = 0;
    for (auto _ : state) {
        auto seq = encode(tok, corpus[i++ % corpus.size()]);
        benchmark::DoNotOptimize(seq.ids.data());
    }
}
BENCHMARK(BM_BpeEncode);

static void BM_BuildStream(benchmark::State& state) {
    auto raw = tiny_corpus(5000);
    CleanCorpus clean = preprocess(raw, 1);
    std::vector<InjectedInstance> instances;
    for (int i = 0; i < 50; ++i) {
        instances.push_back({"inst/" + std::to_string(i), "the wug line " + std::to_string(i)});
    }
    for (auto _ : state) {
        auto stream = build_stream(clean, instances, 25, 18, 7);
        benchmark::DoNotOptimize(stream.lines.data());
    }
}
BENCHMARK(BM_BuildStream);

BENCHMARK_MAIN();
