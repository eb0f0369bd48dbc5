#include <doctest.h>

#include <filesystem>

#include "wuglab/corpus.hpp"
#include "wuglab/lexicon.hpp"
#include "wuglab/synth.hpp"
#include "wuglab/trainer.hpp"
#include "wuglab/util.hpp"

using namespace wuglab;

namespace {

std::filesystem::path tmp_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

struct TinySetup {
    std::vector<std::string> stream;
    TokenizerModel tok;
    ModelConfig mc;
    OptimizerConfig oc;
    MaskingPolicy mp;
};

TinySetup tiny_setup(int corpus_lines, int epochs) {
    Lexicon pools = load_lexicon(std::filesystem::path(WUGLAB_SOURCE_DIR) / "data" / "lexicons" /
                                 "pools.jsonl");
    auto raw = synth_corpus(pools, corpus_lines, 91);
    CleanCorpus clean = preprocess(raw, 92);
    TinySetup s;
    s.stream = build_stream(clean, {}, 0, epochs, 93).lines;
    s.tok = train_bpe(clean.sentences, 600, {"<wug#0>"});
    s.mc.layers = 1;
    s.mc.heads = 2;
    s.mc.hidden = 32;
    s.mc.vocab_size = static_cast<int>(s.tok.vocab.size());
    s.mc.dropout = 0.1;
    s.oc.batch = 8;
    s.oc.grad_accum = 2;
    s.oc.warmup_steps = 10;
    s.oc.lr = 1e-3;
    return s;
}

} // namespace

TEST_CASE("train: loss trends down on a small synthetic stream") {
    TinySetup s = tiny_setup(300, 4);
    TrainOptions opt;
    opt.out_dir = tmp_dir("wuglab_train_smoke");
    opt.log_every = 5;
    TrainResult result = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 7, opt);
    CHECK(result.updates > 10);
    CHECK(result.last_window_loss < result.first_window_loss);
    CHECK(std::filesystem::exists(result.final_checkpoint));
    CHECK(std::filesystem::exists(opt.out_dir / "train_log.csv"));
    auto log = read_lines(opt.out_dir / "train_log.csv");
    CHECK(log[0] == "step,loss,lr");
    CHECK(log.size() > 2);
    std::filesystem::remove_all(opt.out_dir);
}

TEST_CASE("train: resume reproduces the uninterrupted run bit for bit") {
    TinySetup s = tiny_setup(120, 2);

    // uninterrupted
    TrainOptions full;
    full.out_dir = tmp_dir("wuglab_train_full");
    TrainResult r_full = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 17, full);

    // interrupted: checkpoint mid-run, then resume
    TrainOptions first;
    first.out_dir = tmp_dir("wuglab_train_a");
    first.checkpoint_every = 3;
    train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 17, first);
    auto mid = first.out_dir / "checkpoint_3.ckpt";
    REQUIRE(std::filesystem::exists(mid));

    TrainOptions second;
    second.out_dir = tmp_dir("wuglab_train_b");
    second.resume_from = mid;
    TrainResult r_resumed = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 17, second);

    Checkpoint a = load_checkpoint(r_full.final_checkpoint);
    Checkpoint b = load_checkpoint(r_resumed.final_checkpoint);
    CHECK(a.step == b.step);
    auto da = a.params.directory();
    auto db = b.params.directory();
    for (size_t i = 0; i < da.size(); ++i) {
        REQUIRE(da[i].tensor->a.size() == db[i].tensor->a.size());
        CHECK(da[i].tensor->a == db[i].tensor->a); // bitwise
    }
    auto ma = a.adam.m.directory();
    auto mb = b.adam.m.directory();
    for (size_t i = 0; i < ma.size(); ++i) CHECK(ma[i].tensor->a == mb[i].tensor->a);
    std::filesystem::remove_all(full.out_dir);
    std::filesystem::remove_all(first.out_dir);
    std::filesystem::remove_all(second.out_dir);
}

TEST_CASE("train: two identical runs give identical checkpoints") {
    TinySetup s = tiny_setup(100, 2);
    TrainOptions o1, o2;
    o1.out_dir = tmp_dir("wuglab_train_d1");
    o2.out_dir = tmp_dir("wuglab_train_d2");
    TrainResult r1 = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 23, o1);
    TrainResult r2 = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 23, o2);
    CHECK(read_file(r1.final_checkpoint) == read_file(r2.final_checkpoint));
    std::filesystem::remove_all(o1.out_dir);
    std::filesystem::remove_all(o2.out_dir);
}

TEST_CASE("checkpoint: save/load round-trip preserves tensors and state") {
    TinySetup s = tiny_setup(60, 1);
    TrainOptions opt;
    opt.out_dir = tmp_dir("wuglab_ckpt_rt");
    TrainResult r = train_mlm(s.stream, s.tok, s.mc, s.oc, s.mp, 31, opt);
    Checkpoint c = load_checkpoint(r.final_checkpoint);
    CHECK(c.model_cfg.hidden == s.mc.hidden);
    CHECK(c.optim_cfg.batch == s.oc.batch);
    CHECK(c.step > 0);
    CHECK(c.stream_hash == fnv1a64(s.stream));
    auto copy = opt.out_dir / "copy.ckpt";
    save_checkpoint(copy, c);
    Checkpoint c2 = load_checkpoint(copy);
    auto da = c.params.directory();
    auto db = c2.params.directory();
    for (size_t i = 0; i < da.size(); ++i) CHECK(da[i].tensor->a == db[i].tensor->a);
    CHECK(c2.rng_state == c.rng_state);
    std::filesystem::remove_all(opt.out_dir);
}

TEST_CASE("train: empty stream rejected") {
    TinySetup s = tiny_setup(60, 1);
    TrainOptions opt;
    opt.out_dir = tmp_dir("wuglab_train_empty");
    CHECK_THROWS(train_mlm({}, s.tok, s.mc, s.oc, s.mp, 1, opt));
    std::filesystem::remove_all(opt.out_dir);
}
