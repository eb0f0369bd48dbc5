#include <doctest.h>

#include <filesystem>
#include <regex>
#include <set>

#include "wuglab/errors.hpp"
#include "wuglab/interference.hpp"
#include "wuglab/util.hpp"

using namespace wuglab;

namespace {

const Lexicon& pools() {
    static Lexicon lex = load_lexicon(std::filesystem::path(WUGLAB_SOURCE_DIR) / "data" /
                                      "lexicons" / "pools.jsonl");
    return lex;
}

std::vector<std::string> lexie_verbs_3sg() {
    std::vector<std::string> verbs;
    for (const auto& e : pools().pool("anagen_verb_lexie")) verbs.push_back(e.form("pres_sg"));
    return verbs;
}

InterferenceSet make(const char* kind_name, int wug_count = 20, uint64_t seed = 3) {
    NounBanks banks = load_noun_banks(pools());
    WugLexicon wugs = make_tag_lexicon(wug_count, 700, WugMode::tag);
    return make_interference_set(interference_from_name(kind_name), banks, lexie_verbs_3sg(),
                                 wugs, seed);
}

} // namespace

TEST_CASE("interference kinds parse and enumerate") {
    CHECK(all_interference_kinds().size() == 10); // DE + 3 families x 3 levels
    CHECK(interference_from_name("at2").family == InterferenceFamily::at);
    CHECK(interference_from_name("dt1").level == 1);
    CHECK_THROWS(interference_from_name("zz9"));
}

TEST_CASE("interference: training instances match the table skeletons") {
    std::set<std::string> fem, masc, neut_sg, neut_pl;
    for (const auto& e : pools().pool("interference_fem")) fem.insert(e.form("sg"));
    for (const auto& e : pools().pool("interference_masc")) masc.insert(e.form("sg"));
    for (const auto& e : pools().pool("interference_neutral")) {
        neut_sg.insert(e.form("sg"));
        neut_pl.insert(e.form("pl"));
    }
    auto verb_list = lexie_verbs_3sg();
    std::set<std::string> verbs(verb_list.begin(), verb_list.end());

    auto tokens_of = [](const std::string& s) { return split_ws(s); };

    SUBCASE("de baseline: <w> V refl") {
        InterferenceSet set = make("de");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 3);
            CHECK(t[0].rfind("<wug#", 0) == 0);
            CHECK(verbs.count(t[1]) == 1);
            CHECK((t[2] == "herself" || t[2] == "himself"));
        }
    }
    SUBCASE("at0: neutral attractor noun") {
        InterferenceSet set = make("at0");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 6);
            CHECK(t[1] == "helping");
            CHECK(t[2] == "the");
            CHECK(neut_sg.count(t[3]) == 1);
            CHECK(verbs.count(t[4]) == 1);
        }
    }
    SUBCASE("at1: opposite-gender attractor noun") {
        InterferenceSet set = make("at1");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 6);
            bool fem_refl = t.back() == "herself";
            CHECK((fem_refl ? masc : fem).count(t[3]) == 1);
        }
    }
    SUBCASE("at2: opposite-gender pronoun") {
        InterferenceSet set = make("at2");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 5);
            CHECK(t[1] == "helping");
            bool fem_refl = t.back() == "herself";
            CHECK(t[2] == (fem_refl ? "him" : "her"));
        }
    }
    SUBCASE("dt1: whose-clause distance") {
        InterferenceSet set = make("dt1");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 8);
            CHECK(t[1] == "whose");
            CHECK(neut_sg.count(t[2]) == 1);
            CHECK(t[3] == "helps");
            CHECK(t[4] == "the");
            CHECK(neut_sg.count(t[5]) == 1);
        }
    }
    SUBCASE("dt2: stacked relative clauses") {
        InterferenceSet set = make("dt2");
        for (const auto& inst : set.train) {
            auto t = tokens_of(inst.sentence);
            REQUIRE(t.size() == 12);
            CHECK(t[6] == "who");
            CHECK(t[7] == "finds");
            CHECK(neut_pl.count(t[9]) == 1);
        }
    }
}

TEST_CASE("interference: an2 places exactly 13 tokens between wug and verb") {
    InterferenceSet set = make("an2");
    for (const auto& inst : set.train) {
        auto tokens = split_ws(inst.sentence);
        std::string wug = tokens[0];
        // main verb precedes the final reflexive
        std::string verb = tokens[tokens.size() - 2];
        CHECK(interference_span_tokens(inst.sentence, wug, verb) == 13);
    }
    // an0 and an1 shrink by one prepositional link each
    for (const auto& inst : make("an1").train) {
        auto tokens = split_ws(inst.sentence);
        CHECK(interference_span_tokens(inst.sentence, tokens[0], tokens[tokens.size() - 2]) == 10);
    }
    for (const auto& inst : make("an0").train) {
        auto tokens = split_ws(inst.sentence);
        CHECK(interference_span_tokens(inst.sentence, tokens[0], tokens[tokens.size() - 2]) == 7);
    }
}

TEST_CASE("interference: eval pairs take the DE form with matched verbs") {
    InterferenceSet set = make("dt2", 30, 9);
    REQUIRE(set.eval.size() == 30);
    int fem_count = 0;
    for (size_t i = 0; i < set.eval.size(); ++i) {
        const auto& pair = set.eval[i];
        auto good = split_ws(pair.good);
        auto bad = split_ws(pair.bad);
        REQUIRE(good.size() == 3);
        REQUIRE(bad.size() == 3);
        CHECK(good[0] == bad[0]);
        CHECK(good[1] == bad[1]); // same verb in both members
        CHECK(good[2] != bad[2]);
        if (good[2] == "herself") ++fem_count;
        // the training instance for the same wug ends with the same reflexive
        auto train = split_ws(set.train[i].sentence);
        CHECK(train.back() == good[2]);
    }
    CHECK(fem_count == 15); // genders alternate, exactly balanced
}

TEST_CASE("interference: determinism and bank checks") {
    InterferenceSet a = make("at2", 10, 5);
    InterferenceSet b = make("at2", 10, 5);
    for (size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].sentence == b.train[i].sentence);
    }
    NounBanks small;
    small.feminine.resize(10);
    small.masculine.resize(10);
    small.neutral.resize(10);
    WugLexicon wugs = make_tag_lexicon(5, 0, WugMode::tag);
    CHECK_THROWS_AS(
        make_interference_set({InterferenceFamily::at, 0}, small, {"loves"}, wugs, 1),
        BankTooSmall);
}
