#include <doctest.h>

#include <algorithm>
#include <map>

#include "wuglab/corpus.hpp"

using namespace wuglab;

TEST_CASE("preprocess applies the documented step order") {
    // Dedupe runs on raw strings, before lowercasing, so "The Cat." and
    // "the cat" both survive; "Hi" drops for having fewer than two words.
    auto clean = preprocess({"The Cat.", "the cat", "Hi"}, 3);
    REQUIRE(clean.sentences.size() == 2);
    CHECK(clean.sentences[0] == "the cat");
    CHECK(clean.sentences[1] == "the cat");
}

TEST_CASE("preprocess trivia") {
    CHECK(preprocess({}, 1).sentences.empty());
    auto c = preprocess({"a b", "a b"}, 1);
    REQUIRE(c.sentences.size() == 1);
    CHECK(c.sentences[0] == "a b");
}

TEST_CASE("preprocess is idempotent up to order") {
    std::vector<std::string> raw = {"The RAIN falls.", "a cat sleeps", "Dogs Run Fast.",
                                    "one", "two words here", "a cat sleeps"};
    auto once = preprocess(raw, 5);
    auto twice = preprocess(once.sentences, 17);
    auto a = once.sentences;
    auto b = twice.sentences;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
}

TEST_CASE("preprocess collapses whitespace and strips periods") {
    auto c = preprocess({"A  B.  C."}, 1);
    REQUIRE(c.sentences.size() == 1);
    CHECK(c.sentences[0] == "a b c");
}

namespace {

CleanCorpus ten_line_corpus() {
    std::vector<std::string> raw;
    for (int i = 0; i < 10; ++i) {
        raw.push_back("base line number " + std::to_string(i));
    }
    return preprocess(raw, 11);
}

} // namespace

TEST_CASE("build_stream arithmetic and manifest") {
    CleanCorpus corpus = ten_line_corpus();
    std::vector<InjectedInstance> instances = {{"i1", "the wug one sentence"},
                                               {"i2", "the wug two sentence"}};
    TrainingStream stream = build_stream(corpus, instances, 5, 18, 42);
    CHECK(stream.lines.size() == 10 * 18 + 2 * 5);

    auto counts = verify_counts(stream.lines, instances);
    CHECK(counts.at("i1") == 5);
    CHECK(counts.at("i2") == 5);
    for (const auto& [id, positions] : stream.manifest.placements) {
        CHECK(positions.size() == 5);
        CHECK(std::is_sorted(positions.begin(), positions.end()));
        for (int64_t p : positions) {
            REQUIRE(p >= 0);
            REQUIRE(p < static_cast<int64_t>(stream.lines.size()));
            CHECK(stream.lines[static_cast<size_t>(p)] ==
                  (id == "i1" ? "the wug one sentence" : "the wug two sentence"));
        }
    }
}

TEST_CASE("build_stream n=0 gives pure concatenation") {
    CleanCorpus corpus = ten_line_corpus();
    TrainingStream stream = build_stream(corpus, {}, 0, 18, 1);
    REQUIRE(stream.lines.size() == 180);
    CHECK(stream.manifest.placements.empty());
    for (size_t i = 0; i < stream.lines.size(); ++i) {
        CHECK(stream.lines[i] == corpus.sentences[i % 10]);
    }
}

TEST_CASE("removing manifest positions recovers the base copies in order") {
    CleanCorpus corpus = ten_line_corpus();
    std::vector<InjectedInstance> instances = {{"a", "wug alpha beta"}, {"b", "wug gamma delta"}};
    TrainingStream stream = build_stream(corpus, instances, 7, 3, 9);
    std::vector<bool> injected(stream.lines.size(), false);
    for (const auto& [id, positions] : stream.manifest.placements) {
        for (int64_t p : positions) injected[static_cast<size_t>(p)] = true;
    }
    std::vector<std::string> base;
    for (size_t i = 0; i < stream.lines.size(); ++i) {
        if (!injected[i]) base.push_back(stream.lines[i]);
    }
    REQUIRE(base.size() == 30);
    for (size_t i = 0; i < base.size(); ++i) CHECK(base[i] == corpus.sentences[i % 10]);
}

TEST_CASE("build_stream determinism") {
    CleanCorpus corpus = ten_line_corpus();
    std::vector<InjectedInstance> instances = {{"a", "wug alpha beta"}};
    TrainingStream s1 = build_stream(corpus, instances, 25, 18, 123);
    TrainingStream s2 = build_stream(corpus, instances, 25, 18, 123);
    CHECK(s1.lines == s2.lines);
    TrainingStream s3 = build_stream(corpus, instances, 25, 18, 124);
    CHECK(s1.lines != s3.lines);
}

TEST_CASE("verify_counts ignores the manifest and counts by matching") {
    std::vector<std::string> lines = {"x y", "a b", "x y", "c d"};
    auto counts = verify_counts(lines, {{"q", "x y"}, {"r", "missing line"}});
    CHECK(counts.at("q") == 2);
    CHECK(counts.at("r") == 0);
}

TEST_CASE("stream save/load round-trip") {
    CleanCorpus corpus = ten_line_corpus();
    std::vector<InjectedInstance> instances = {{"a", "wug alpha beta"}};
    TrainingStream stream = build_stream(corpus, instances, 3, 2, 5);
    auto dir = std::filesystem::temp_directory_path() / "wuglab_stream_test";
    save_stream(dir, stream);
    TrainingStream loaded = load_stream(dir);
    CHECK(loaded.lines == stream.lines);
    CHECK(loaded.manifest.placements == stream.manifest.placements);
    CHECK(loaded.corpus_hash == stream.corpus_hash);
    std::filesystem::remove_all(dir);
}
