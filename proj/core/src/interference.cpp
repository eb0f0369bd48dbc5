#include "wuglab/interference.hpp"

#include <algorithm>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

namespace wuglab {

std::string InterferenceKind::name() const {
    switch (family) {
        case InterferenceFamily::de: return "de";
        case InterferenceFamily::at: return "at" + std::to_string(level);
        case InterferenceFamily::an: return "an" + std::to_string(level);
        case InterferenceFamily::dt: return "dt" + std::to_string(level);
    }
    return "de";
}

InterferenceKind interference_from_name(const std::string& name) {
    if (name == "de") return {InterferenceFamily::de, 0};
    if (name.size() == 3) {
        int level = name[2] - '0';
        if (level >= 0 && level <= 2) {
            if (name.compare(0, 2, "at") == 0) return {InterferenceFamily::at, level};
            if (name.compare(0, 2, "an") == 0) return {InterferenceFamily::an, level};
            if (name.compare(0, 2, "dt") == 0) return {InterferenceFamily::dt, level};
        }
    }
    throw Error("unknown interference kind: " + name);
}

std::vector<InterferenceKind> all_interference_kinds() {
    std::vector<InterferenceKind> kinds = {{InterferenceFamily::de, 0}};
    for (auto family : {InterferenceFamily::at, InterferenceFamily::an, InterferenceFamily::dt}) {
        for (int level = 0; level <= 2; ++level) kinds.push_back({family, level});
    }
    return kinds;
}

NounBanks load_noun_banks(const Lexicon& lexicon) {
    NounBanks banks;
    banks.feminine = lexicon.pool("interference_fem");
    banks.masculine = lexicon.pool("interference_masc");
    banks.neutral = lexicon.pool("interference_neutral");
    return banks;
}

namespace {

struct BankDraw {
    // 25 nouns per gender, singular and plural forms of each.
    std::vector<std::string> fem_sg, fem_pl, masc_sg, masc_pl, neut_sg, neut_pl;
};

BankDraw select_nouns(const NounBanks& banks, Rng& rng) {
    auto check = [](const Pool& pool, const char* name) {
        if (pool.size() < 100) {
            throw BankTooSmall(std::string("noun bank '") + name + "' holds " +
                               std::to_string(pool.size()) + " nouns, need >= 100");
        }
    };
    check(banks.feminine, "feminine");
    check(banks.masculine, "masculine");
    check(banks.neutral, "neutral");

    BankDraw draw;
    auto take25 = [&](const Pool& pool, std::vector<std::string>& sg, std::vector<std::string>& pl) {
        std::vector<size_t> idx(pool.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        for (size_t i = 0; i < 25; ++i) {
            sg.push_back(pool[idx[i]].form("sg"));
            pl.push_back(pool[idx[i]].form("pl"));
        }
    };
    take25(banks.feminine, draw.fem_sg, draw.fem_pl);
    take25(banks.masculine, draw.masc_sg, draw.masc_pl);
    take25(banks.neutral, draw.neut_sg, draw.neut_pl);
    return draw;
}

// Table-pattern skeletons. {V} is the main verb, {R} the reflexive, and
// noun slots are filled from the drawn banks.
std::string train_pattern(const InterferenceKind& kind, const std::string& wug,
                          const std::string& verb, const std::string& refl,
                          const std::string& opp_pron, const std::vector<std::string>& opp,
                          const std::vector<std::string>& neut, const std::string& neut_pl) {
    switch (kind.family) {
        case InterferenceFamily::de:
            return wug + " " + verb + " " + refl;
        case InterferenceFamily::at:
            if (kind.level == 0) return wug + " helping the " + neut[0] + " " + verb + " " + refl;
            if (kind.level == 1) return wug + " helping the " + opp[0] + " " + verb + " " + refl;
            return wug + " helping " + opp_pron + " " + verb + " " + refl;
        case InterferenceFamily::an:
            if (kind.level == 0) {
                return wug + " helping the " + opp[0] + " to see the " + opp[1] + " " + verb + " " +
                       refl;
            }
            if (kind.level == 1) {
                return wug + " helping the " + opp[0] + " for the " + opp[1] + " to see the " +
                       opp[2] + " " + verb + " " + refl;
            }
            return wug + " helping the " + opp[0] + " for the " + opp[1] + " of the " + opp[2] +
                   " to see the " + opp[3] + " " + verb + " " + refl;
        case InterferenceFamily::dt:
            if (kind.level == 0) {
                return wug + " who helps the " + neut[0] + " " + verb + " " + refl;
            }
            if (kind.level == 1) {
                return wug + " whose " + neut[0] + " helps the " + neut[1] + " " + verb + " " + refl;
            }
            return wug + " whose " + neut[0] + " helps the " + neut[1] + " who finds the " +
                   neut_pl + " " + verb + " " + refl;
    }
    return "";
}

} // namespace

InterferenceSet make_interference_set(const InterferenceKind& kind, const NounBanks& banks,
                                      const std::vector<std::string>& verbs_3sg,
                                      const WugLexicon& wugs, uint64_t rng_seed) {
    if (verbs_3sg.empty()) throw BankTooSmall("interference verb list is empty");
    if (wugs.entries.empty()) throw Error("make_interference_set: empty wug lexicon");

    Rng rng(rng_seed);
    BankDraw draw = select_nouns(banks, rng);

    InterferenceSet out;
    for (size_t i = 0; i < wugs.entries.size(); ++i) {
        const WugEntry& wug = wugs.entries[i];
        bool feminine = i % 2 == 0;
        std::string surface = surface_form(wug, Number::singular);
        const std::string& verb = verbs_3sg[static_cast<size_t>(rng.below(verbs_3sg.size()))];
        std::string refl = feminine ? "herself" : "himself";
        std::string anti_refl = feminine ? "himself" : "herself";
        std::string opp_pron = feminine ? "him" : "her";
        const auto& opp_bank = feminine ? draw.masc_sg : draw.fem_sg;
        std::vector<std::string> opp;
        for (int k = 0; k < 4; ++k) {
            opp.push_back(opp_bank[static_cast<size_t>(rng.below(opp_bank.size()))]);
        }
        std::vector<std::string> neut;
        for (int k = 0; k < 2; ++k) {
            neut.push_back(draw.neut_sg[static_cast<size_t>(rng.below(draw.neut_sg.size()))]);
        }
        const std::string& neut_pl =
            draw.neut_pl[static_cast<size_t>(rng.below(draw.neut_pl.size()))];

        TrainingInstance inst;
        inst.instance_index = static_cast<int64_t>(i);
        inst.wug_id = wug.id;
        inst.phenomenon = Phenomenon::ana_gen_agr;
        inst.evidence = EvidenceLevel::de; // interference variants are DE-strength material
        inst.sentence = train_pattern(kind, surface, verb, refl, opp_pron, opp, neut, neut_pl);
        out.train.push_back(std::move(inst));

        MinimalPair pair;
        pair.pair_id = static_cast<int64_t>(i);
        pair.wug_id = wug.id;
        pair.phenomenon = Phenomenon::ana_gen_agr;
        pair.good = surface + " " + verb + " " + refl;
        pair.bad = surface + " " + verb + " " + anti_refl;
        pair.property = feminine ? "f" : "m";
        pair.wug_surface = surface;
        out.eval.push_back(std::move(pair));
    }
    return out;
}

int interference_span_tokens(const std::string& sentence, const std::string& wug_surface,
                             const std::string& verb_3sg) {
    auto tokens = split_ws(sentence);
    int wug_pos = -1, verb_pos = -1;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i] == wug_surface && wug_pos < 0) wug_pos = static_cast<int>(i);
        if (tokens[i] == verb_3sg) verb_pos = static_cast<int>(i); // last occurrence = main verb
    }
    if (wug_pos < 0 || verb_pos < 0 || verb_pos <= wug_pos) {
        throw SpanNotFound("cannot locate wug/verb span in: " + sentence);
    }
    return verb_pos - wug_pos - 1;
}

} // namespace wuglab
