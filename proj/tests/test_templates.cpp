#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "wuglab/errors.hpp"
#include "wuglab/template_engine.hpp"
#include "wuglab/util.hpp"

using namespace wuglab;

namespace {

std::filesystem::path data_dir() {
    return std::filesystem::path(WUGLAB_SOURCE_DIR) / "data";
}

const Lexicon& pools() {
    static Lexicon lex = load_lexicon(data_dir() / "lexicons" / "pools.jsonl");
    return lex;
}

std::vector<Template> templates_for(const char* name) {
    return parse_template_file(data_dir() / "templates" / (std::string(name) + ".jsonl"));
}

ExpandResult expand_phenomenon(Phenomenon ph, int64_t pairs, uint64_t seed) {
    const auto& info = phenomenon_info(ph);
    auto templates = templates_for(info.name);
    WugLexicon wugs = make_tag_lexicon(pairs, 0, WugMode::tag);
    BalanceSpec balance = balance_spec_for(ph, pairs, pools());
    return expand(templates, pools(), wugs, balance, seed);
}

// token-level diff: returns the differing spans' lengths
std::pair<int, int> diff_span(const std::string& a, const std::string& b) {
    auto ta = split_ws(a), tb = split_ws(b);
    size_t prefix = 0;
    while (prefix < ta.size() && prefix < tb.size() && ta[prefix] == tb[prefix]) ++prefix;
    size_t suffix = 0;
    while (suffix < ta.size() - prefix && suffix < tb.size() - prefix &&
           ta[ta.size() - 1 - suffix] == tb[tb.size() - 1 - suffix]) {
        ++suffix;
    }
    return {static_cast<int>(ta.size() - prefix - suffix),
            static_cast<int>(tb.size() - prefix - suffix)};
}

} // namespace

TEST_CASE("parse: valid line, line numbers in errors, invariants enforced") {
    std::string one =
        R"({"id":"t1","phenomenon":"dn_agr","use":"lexie","seq":[{"kind":"lit","text":"the"},{"kind":"wug"}]})";
    auto ts = parse_templates(one + "\n", "mem");
    REQUIRE(ts.size() == 1);
    CHECK(ts[0].id == "t1");

    CHECK_THROWS_AS(parse_templates("{broken\n", "mem"), ParseError);
    try {
        parse_templates("\n{broken\n", "mem");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    }

    // two wug slots violate the template invariant
    std::string two_wugs =
        R"({"id":"t2","phenomenon":"dn_agr","use":"lexie","seq":[{"kind":"wug"},{"kind":"wug"}]})";
    CHECK_THROWS_AS(parse_templates(two_wugs + "\n", "mem"), ValidationError);

    // eval without an alternation rule
    std::string no_alt =
        R"({"id":"t3","phenomenon":"dn_agr","use":"eval","seq":[{"kind":"wug"}]})";
    CHECK_THROWS_AS(parse_templates(no_alt + "\n", "mem"), ValidationError);

    // alternation referencing a slot outside the sequence
    std::string bad_slot =
        R"({"id":"t4","phenomenon":"dn_agr","use":"eval","seq":[{"kind":"wug"}],"alt":{"mode":"flip","slot":5}})";
    CHECK_THROWS_AS(parse_templates(bad_slot + "\n", "mem"), ValidationError);
}

TEST_CASE("bundled template files parse for every phenomenon") {
    for (const auto& info : all_phenomena()) {
        auto ts = templates_for(info.name);
        CHECK(ts.size() >= 8);
        bool has_eval = false, has_lexie = false, has_synie = false;
        for (const auto& t : ts) {
            if (t.use == "eval") has_eval = true;
            if (t.use == "lexie") has_lexie = true;
            if (t.use == "synie") has_synie = true;
        }
        CHECK(has_eval);
        CHECK(has_lexie);
        CHECK(has_synie);
    }
}

TEST_CASE("expand: empty template list gives empty outputs") {
    WugLexicon wugs = make_tag_lexicon(10, 0, WugMode::tag);
    BalanceSpec balance = balance_spec_for(Phenomenon::dn_agr, 0, pools());
    ExpandResult r = expand({}, pools(), wugs, balance, 1);
    CHECK(r.eval_set.empty());
}

TEST_CASE("expand: anaphor gender shapes match the expected pattern") {
    ExpandResult r = expand_phenomenon(Phenomenon::ana_gen_agr, 30, 5);
    REQUIRE(r.eval_set.size() == 30);
    for (const auto& pair : r.eval_set) {
        bool fem = pair.good.find("herself") != std::string::npos;
        bool masc = pair.good.find("himself") != std::string::npos;
        CHECK(fem != masc); // exactly one reflexive per good member
        // the bad member swaps the reflexive
        CHECK(pair.bad.find(fem ? "himself" : "herself") != std::string::npos);
        CHECK(pair.good.find(pair.wug_surface) == 0); // wug-initial subject
    }
    // one LexIE and one SynIE instance per pair, same wug ids
    const auto& lexie = r.train_sets.at(EvidenceLevel::lexie);
    const auto& synie = r.train_sets.at(EvidenceLevel::synie);
    REQUIRE(lexie.size() == 30);
    REQUIRE(synie.size() == 30);
    for (size_t i = 0; i < 30; ++i) {
        CHECK(lexie[i].wug_id == r.eval_set[i].wug_id);
        CHECK(synie[i].wug_id == r.eval_set[i].wug_id);
    }
}

TEST_CASE("expand: pairs differ in exactly one contiguous span") {
    for (auto ph : {Phenomenon::ana_gen_agr, Phenomenon::dn_agr, Phenomenon::sv_agr_v,
                    Phenomenon::sv_agr_s, Phenomenon::ana_num_agr}) {
        ExpandResult r = expand_phenomenon(ph, 24, 7);
        for (const auto& pair : r.eval_set) {
            auto [la, lb] = diff_span(pair.good, pair.bad);
            CHECK(la >= 1);
            CHECK(lb >= 1);
            CHECK(la <= 2);
            CHECK(lb <= 2);
            CHECK(pair.good != pair.bad);
            CHECK(pair.good.find(pair.wug_surface) != std::string::npos);
            CHECK(pair.bad.find(pair.wug_surface) != std::string::npos);
        }
    }
    // transitive drops the object; intransitive adds one
    ExpandResult tr = expand_phenomenon(Phenomenon::transitive, 24, 7);
    for (const auto& pair : tr.eval_set) {
        auto [la, lb] = diff_span(pair.good, pair.bad);
        CHECK(la >= 1);
        CHECK(lb == 0);
    }
    ExpandResult in = expand_phenomenon(Phenomenon::intransitive, 24, 7);
    for (const auto& pair : in.eval_set) {
        auto [la, lb] = diff_span(pair.good, pair.bad);
        CHECK(la == 0);
        CHECK(lb >= 1);
    }
}

TEST_CASE("derive_de: identical to the good member") {
    ExpandResult r = expand_phenomenon(Phenomenon::dn_agr, 12, 3);
    auto de = derive_de(r.eval_set);
    REQUIRE(de.size() == r.eval_set.size());
    for (size_t i = 0; i < de.size(); ++i) {
        CHECK(de[i].sentence == r.eval_set[i].good);
        CHECK(de[i].wug_id == r.eval_set[i].wug_id);
        CHECK(de[i].evidence == EvidenceLevel::de);
    }
    CHECK(derive_de({}).empty());
}

TEST_CASE("expand: determinism and duplicate-freedom") {
    ExpandResult a = expand_phenomenon(Phenomenon::sv_agr_v, 60, 11);
    ExpandResult b = expand_phenomenon(Phenomenon::sv_agr_v, 60, 11);
    REQUIRE(a.eval_set.size() == b.eval_set.size());
    for (size_t i = 0; i < a.eval_set.size(); ++i) {
        CHECK(a.eval_set[i].good == b.eval_set[i].good);
        CHECK(a.eval_set[i].bad == b.eval_set[i].bad);
    }
    std::set<std::string> seen;
    for (const auto& p : a.eval_set) {
        CHECK(seen.insert(p.good).second);
        CHECK(seen.insert(p.bad).second);
    }
    for (auto ev : {EvidenceLevel::lexie, EvidenceLevel::synie}) {
        for (const auto& inst : a.train_sets.at(ev)) {
            CHECK(seen.insert(inst.sentence).second);
        }
    }
}

TEST_CASE("templates: lexie shares the skeleton, synie differs") {
    for (const auto& info : all_phenomena()) {
        auto templates = templates_for(info.name);
        for (const auto& t : templates) {
            if (t.use != "eval") continue;
            bool matched = false;
            for (const auto& l : templates) {
                if (l.use == "lexie" && l.signature() == t.signature() &&
                    l.negated == t.negated) {
                    matched = true;
                }
            }
            CHECK_MESSAGE(matched, t.id);
        }
        std::set<std::string> eval_sigs;
        for (const auto& t : templates) {
            if (t.use == "eval") eval_sigs.insert(t.signature());
        }
        for (const auto& t : templates) {
            if (t.use == "synie") CHECK_MESSAGE(eval_sigs.count(t.signature()) == 0, t.id);
        }
    }
}

TEST_CASE("check_balance: generated sets hit the property targets") {
    for (auto ph : {Phenomenon::ana_gen_agr, Phenomenon::ana_num_agr, Phenomenon::dn_agr,
                    Phenomenon::sv_agr_s}) {
        const int64_t pairs = 60; // divisible by 3: exact fill-level balance
        ExpandResult r = expand_phenomenon(ph, pairs, 19);
        BalanceSpec spec = balance_spec_for(ph, pairs, pools());
        BalanceReport report = check_balance(r.eval_set, spec);
        for (const auto& row : report.rows) {
            INFO(phenomenon_info(ph).name, " ", row.value, " observed ", row.observed,
                 " expected ", row.expected);
            CHECK(row.pass);
        }
        CHECK(report.negation_rate >= spec.negation_lo);
        CHECK(report.negation_rate <= spec.negation_hi);
        CHECK(report.pass);
    }
}

TEST_CASE("check_balance: empty set fails with undefined rate") {
    BalanceSpec spec = balance_spec_for(Phenomenon::dn_agr, 600, pools());
    BalanceReport report = check_balance({}, spec);
    CHECK(std::isnan(report.negation_rate));
    CHECK_FALSE(report.pass);
    for (const auto& row : report.rows) CHECK(row.observed == 0);
}

TEST_CASE("check_balance: paper-scale targets") {
    BalanceSpec spec = balance_spec_for(Phenomenon::dn_agr, 600, pools());
    REQUIRE(spec.targets.size() == 4);
    for (const auto& t : spec.targets) CHECK(t.count == 150);
    BalanceSpec ag = balance_spec_for(Phenomenon::ana_gen_agr, 600, pools());
    REQUIRE(ag.targets.size() == 2);
    for (const auto& t : ag.targets) CHECK(t.count == 300);
}

TEST_CASE("expand: wug-as-subject phenomena stick to the bare 'the'") {
    for (auto ph : {Phenomenon::ana_num_agr, Phenomenon::sv_agr_v}) {
        ExpandResult r = expand_phenomenon(ph, 30, 23);
        for (const auto& pair : r.eval_set) {
            CHECK(pair.good.rfind("the ", 0) == 0);
            auto tokens = split_ws(pair.good);
            CHECK(tokens[1] == pair.wug_surface);
        }
    }
}

TEST_CASE("expand: sv_agr_s keeps present tense without auxiliaries") {
    ExpandResult r = expand_phenomenon(Phenomenon::sv_agr_s, 30, 29);
    std::set<std::string> auxes = {"is",  "are", "was", "were", "will", "would", "can",
                                   "could", "has", "have", "had", "does", "do", "did"};
    for (const auto& inst : derive_de(r.eval_set)) {
        for (const auto& tok : split_ws(inst.sentence)) {
            CHECK(auxes.count(tok) == 0);
        }
    }
}

TEST_CASE("expand: training instances contain the wug surface exactly once") {
    ExpandResult r = expand_phenomenon(Phenomenon::transitive, 30, 31);
    for (auto ev : {EvidenceLevel::lexie, EvidenceLevel::synie}) {
        for (const auto& inst : r.train_sets.at(ev)) {
            size_t first = inst.sentence.find("<wug#");
            REQUIRE(first != std::string::npos);
            CHECK(inst.sentence.find("<wug#", first + 1) == std::string::npos);
        }
    }
}

TEST_CASE("pairs and instances round-trip through JSONL") {
    ExpandResult r = expand_phenomenon(Phenomenon::dn_agr, 12, 37);
    auto dir = std::filesystem::temp_directory_path() / "wuglab_tpl_test";
    std::filesystem::create_directories(dir);
    save_pairs(dir / "eval.jsonl", r.eval_set);
    auto pairs = load_pairs(dir / "eval.jsonl");
    REQUIRE(pairs.size() == r.eval_set.size());
    CHECK(pairs[3].good == r.eval_set[3].good);
    CHECK(pairs[3].wug_id == r.eval_set[3].wug_id);

    auto de = derive_de(r.eval_set);
    save_instances(dir / "de.jsonl", de);
    auto loaded = load_instances(dir / "de.jsonl");
    REQUIRE(loaded.size() == de.size());
    CHECK(loaded[5].sentence == de[5].sentence);
    CHECK(loaded[5].instance_id() == de[5].instance_id());
    std::filesystem::remove_all(dir);
}

TEST_CASE("expand: tag-with-morphology keeps the tag and adds plural s") {
    auto templates = templates_for("dn_agr");
    WugLexicon wugs = make_tag_lexicon(24, 0, WugMode::tag_with_morph);
    BalanceSpec balance = balance_spec_for(Phenomenon::dn_agr, 24, pools());
    ExpandResult r = expand(templates, pools(), wugs, balance, 41);
    bool saw_plural = false;
    for (const auto& pair : r.eval_set) {
        if (pair.property == "these" || pair.property == "those") {
            CHECK(pair.wug_surface == "<wug#" + std::to_string(pair.wug_id) + ">s");
            saw_plural = true;
        } else {
            CHECK(pair.wug_surface == "<wug#" + std::to_string(pair.wug_id) + ">");
        }
        // identical wug surface in both members
        CHECK(pair.good.find(pair.wug_surface) != std::string::npos);
        CHECK(pair.bad.find(pair.wug_surface) != std::string::npos);
    }
    CHECK(saw_plural);
}
