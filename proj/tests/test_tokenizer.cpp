#include <doctest.h>

#include <filesystem>

#include "wuglab/bpe.hpp"
#include "wuglab/errors.hpp"
#include "wuglab/lexicon.hpp"
#include "wuglab/synth.hpp"
#include "wuglab/util.hpp"

using namespace wuglab;

TEST_CASE("toy corpus learns the single expected merge") {
    // Words "ab" -> symbols [a, ##b]; the only repeated pair merges once.
    std::vector<std::string> corpus = {"ab ab ab"};
    // specials(5) + closed alphabet {a, ##a, b, ##b} + 1 merge
    TokenizerModel tok = train_bpe(corpus, 5 + 4 + 1, {});
    REQUIRE(tok.merges.size() == 1);
    CHECK(tok.merges[0].first == "a");
    CHECK(tok.merges[0].second == "##b");
    CHECK(tok.vocab.back() == "ab");

    TokenSeq seq = encode(tok, "ab ab");
    REQUIRE(seq.ids.size() == 2);
    CHECK(tok.vocab[static_cast<size_t>(seq.ids[0])] == "ab");
}

TEST_CASE("wug tags are atomic specials") {
    std::vector<std::string> corpus = {"the cat sat", "the dog ran"};
    TokenizerModel tok = train_bpe(corpus, 64, {"<wug#3>", "<wug#7>"});
    CHECK(encode(tok, "<wug#3>").ids.size() == 1);
    CHECK(encode(tok, "<wug#7>").ids.size() == 1);

    TokenSeq seq = encode(tok, "<wug#7> the cat");
    REQUIRE(!seq.ids.empty());
    CHECK(seq.ids[0] == tok.id_of("<wug#7>"));
    CHECK(tok.is_special(seq.ids[0]));

    // tag-with-morphology surfaces keep the tag atomic
    TokenSeq morph = encode(tok, "the <wug#3>s ran");
    int tag_id = tok.id_of("<wug#3>");
    int found = 0;
    for (int id : morph.ids) {
        if (id == tag_id) ++found;
    }
    CHECK(found == 1);
    CHECK(decode(tok, morph.ids) == "the <wug#3>s ran");
}

TEST_CASE("encode/decode trivia") {
    std::vector<std::string> corpus = {"a b a b"};
    TokenizerModel tok = train_bpe(corpus, 32, {});
    CHECK(encode(tok, "").ids.empty());
    CHECK(decode(tok, {}) == "");
    CHECK_THROWS_AS(decode(tok, {99999}), UnknownId);
}

TEST_CASE("unknown characters map to unk") {
    std::vector<std::string> corpus = {"plain words only here"};
    TokenizerModel tok = train_bpe(corpus, 64, {});
    TokenSeq seq = encode(tok, "plain Q");
    REQUIRE(seq.ids.size() >= 2);
    CHECK(seq.ids.back() == tok.unk_id);
}

TEST_CASE("vocab size cap and CorpusTooSmall") {
    std::vector<std::string> corpus = {"abcdefgh ijklmnop"};
    CHECK_THROWS_AS(train_bpe(corpus, 8, {}), CorpusTooSmall);
    TokenizerModel tok = train_bpe(corpus, 4096, {});
    // merges stop when no pair repeats; vocab stays below the cap
    CHECK(tok.vocab.size() < 4096);
}

TEST_CASE("offsets are ordered and non-overlapping") {
    std::vector<std::string> corpus = {"the cat sat on the mat", "a cat ran"};
    TokenizerModel tok = train_bpe(corpus, 64, {});
    std::string text = "the cat ran on a mat";
    TokenSeq seq = encode(tok, text);
    for (size_t i = 0; i < seq.offsets.size(); ++i) {
        CHECK(seq.offsets[i].begin < seq.offsets[i].end);
        if (i) CHECK(seq.offsets[i].begin >= seq.offsets[i - 1].end);
        // each span reconstructs its source slice
        std::string piece = text.substr(static_cast<size_t>(seq.offsets[i].begin),
                                        static_cast<size_t>(seq.offsets[i].end - seq.offsets[i].begin));
        std::string tok_text = tok.vocab[static_cast<size_t>(seq.ids[i])];
        if (tok_text.rfind("##", 0) == 0) tok_text = tok_text.substr(2);
        CHECK(piece == tok_text);
    }
}

TEST_CASE("round-trip identity on sampled synthetic lines") {
    Lexicon pools = load_lexicon(std::filesystem::path(WUGLAB_SOURCE_DIR) / "data" / "lexicons" /
                                 "pools.jsonl");
    auto lines = synth_corpus(pools, 1000, 77);
    TokenizerModel tok = train_bpe(lines, 1200, {"<wug#0>", "<wug#1>"});
    for (const auto& line : lines) {
        CHECK(decode(tok, encode(tok, line).ids) == line);
    }
    CHECK(decode(tok, encode(tok, "the <wug#1> are leaving any traces").ids) ==
          "the <wug#1> are leaving any traces");
}

TEST_CASE("training is deterministic byte for byte") {
    Lexicon pools = load_lexicon(std::filesystem::path(WUGLAB_SOURCE_DIR) / "data" / "lexicons" /
                                 "pools.jsonl");
    auto lines = synth_corpus(pools, 400, 3);
    TokenizerModel a = train_bpe(lines, 700, {"<wug#0>"});
    TokenizerModel b = train_bpe(lines, 700, {"<wug#0>"});
    auto dir = std::filesystem::temp_directory_path() / "wuglab_tok_test";
    std::filesystem::create_directories(dir);
    save_tokenizer(dir / "a.json", a);
    save_tokenizer(dir / "b.json", b);
    CHECK(read_file(dir / "a.json") == read_file(dir / "b.json"));
    TokenizerModel loaded = load_tokenizer(dir / "a.json");
    CHECK(loaded.vocab == a.vocab);
    CHECK(loaded.merges == a.merges);
    std::filesystem::remove_all(dir);
}
