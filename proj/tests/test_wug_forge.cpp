#include <doctest.h>

#include <filesystem>
#include <set>
#include <unordered_set>

#include "wuglab/errors.hpp"
#include "wuglab/wug_forge.hpp"

using namespace wuglab;

TEST_CASE("tag lexicon stems and ids") {
    WugLexicon lex = make_tag_lexicon(3, 0, WugMode::tag);
    REQUIRE(lex.entries.size() == 3);
    CHECK(lex.entries[0].stem == "<wug#0>");
    CHECK(lex.entries[1].stem == "<wug#1>");
    CHECK(lex.entries[2].stem == "<wug#2>");

    WugLexicon one = make_tag_lexicon(1, 124, WugMode::tag);
    CHECK(one.entries[0].stem == "<wug#124>");

    WugLexicon big = make_tag_lexicon(600, 0, WugMode::tag);
    std::set<int64_t> ids;
    for (const auto& e : big.entries) ids.insert(e.id);
    CHECK(ids.size() == 600);
    // strictly increasing
    for (size_t i = 1; i < big.entries.size(); ++i) {
        CHECK(big.entries[i].id > big.entries[i - 1].id);
    }
}

TEST_CASE("surface forms per mode") {
    WugEntry tag{5, WugMode::tag, "<wug#5>"};
    CHECK(surface_form(tag, Number::plural) == "<wug#5>");
    CHECK(surface_form(tag, Number::singular) == "<wug#5>");

    WugEntry morph{5, WugMode::tag_with_morph, "<wug#5>"};
    CHECK(surface_form(morph, Number::plural) == "<wug#5>s");
    CHECK(surface_form(morph, Number::singular) == "<wug#5>");

    WugEntry pseudo{9, WugMode::pseudoword, "dak"};
    CHECK(surface_form(pseudo, Number::singular) == "dak");
    CHECK(surface_form(pseudo, Number::plural) == "daks");
}

TEST_CASE("pseudoword generation avoids the seed lexicon") {
    std::vector<std::string> seeds = {"cat"};
    WugLexicon lex = generate_pseudowords(seeds, 4, 1, 7);
    REQUIRE(lex.entries.size() == 1);
    CHECK(lex.entries[0].stem != "cat");
    CHECK(lex.entries[0].stem.size() >= 3);
    CHECK(lex.entries[0].stem.size() <= 12);
}

TEST_CASE("pseudoword generation: determinism, uniqueness, charset") {
    std::vector<std::string> seeds = {
        "cat",  "dog",  "house", "river", "stone", "bird",  "table", "chair", "cloud", "storm",
        "tree", "leaf", "road",  "brick", "glass", "plate", "spoon", "shirt", "plant", "grass",
        "mouse", "horse", "sheep", "goat", "snake", "frog", "whale", "shark", "tiger", "bear"};
    WugLexicon a = generate_pseudowords(seeds, 4, 40, 99);
    WugLexicon b = generate_pseudowords(seeds, 4, 40, 99);
    REQUIRE(a.entries.size() == 40);
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(a.entries[i].stem == b.entries[i].stem);
    }

    // brute-force membership scan against the seed lexicon
    std::unordered_set<std::string> seed_set(seeds.begin(), seeds.end());
    std::unordered_set<std::string> produced;
    for (const auto& e : a.entries) {
        CHECK(seed_set.count(e.stem) == 0);
        CHECK(produced.insert(e.stem).second);
        for (char c : e.stem) {
            CHECK(c >= 'a');
            CHECK(c <= 'z');
        }
    }

    WugLexicon c = generate_pseudowords(seeds, 4, 40, 100);
    bool any_different = false;
    for (size_t i = 0; i < c.entries.size(); ++i) {
        if (c.entries[i].stem != a.entries[i].stem) any_different = true;
    }
    CHECK(any_different);
}

TEST_CASE("pseudoword generation exhaustion") {
    // One three-letter seed cannot yield many distinct plausible words.
    std::vector<std::string> seeds = {"aba"};
    CHECK_THROWS_AS(generate_pseudowords(seeds, 4, 4, 3), GenerationExhausted);
}

TEST_CASE("wug lexicon file round-trip") {
    auto dir = std::filesystem::temp_directory_path() / "wuglab_forge_test";
    std::filesystem::create_directories(dir);
    WugLexicon lex = make_tag_lexicon(5, 10, WugMode::tag_with_morph);
    save_wug_lexicon(dir / "wugs.jsonl", lex);
    WugLexicon loaded = load_wug_lexicon(dir / "wugs.jsonl");
    REQUIRE(loaded.entries.size() == 5);
    CHECK(loaded.mode == WugMode::tag_with_morph);
    CHECK(loaded.entries[4].id == 14);
    CHECK(loaded.entries[4].stem == "<wug#14>");
    std::filesystem::remove_all(dir);
}
