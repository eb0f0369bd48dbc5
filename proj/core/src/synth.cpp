#include "wuglab/synth.hpp"

#include <unordered_set>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

namespace wuglab {
namespace {

struct Gen {
    const Lexicon& lex;
    Rng& rng;

    const LexEntry& pick(const std::string& pool) { return rng.pick(lex.pool(pool)); }

    std::string det_for(bool plural) {
        // "the" dominates; demonstratives and quantifiers stay balanced
        // within each number so they carry no global bias.
        double u = rng.uniform();
        if (plural) {
            if (u < 0.45) return "the";
            if (u < 0.55) return "these";
            if (u < 0.65) return "those";
            if (u < 0.75) return "some";
            if (u < 0.85) return "many";
            if (u < 0.93) return "few";
            return "most";
        }
        if (u < 0.45) return "the";
        if (u < 0.60) return "a";
        if (u < 0.70) return "this";
        if (u < 0.80) return "that";
        if (u < 0.90) return "every";
        return "each";
    }

    std::string np(bool plural, const std::string& pool) {
        const LexEntry& n = pick(pool);
        std::string det = det_for(plural);
        if (det == "a" && plural) det = "the";
        return det + " " + n.form(plural ? "pl" : "sg");
    }

    std::string modal() {
        static const std::vector<std::string> modals = {
            "can", "could", "will", "would", "should", "must", "may", "might"};
        return rng.pick(modals);
    }

    std::string tail() {
        double u = rng.uniform();
        if (u < 0.5) return "";
        if (u < 0.62) return " " + rng.pick(lex.pool("synth_advs")).form("word");
        const LexEntry& place = pick("synth_nouns");
        static const std::vector<std::string> preps = {"in", "near", "behind", "beside", "under"};
        return " " + rng.pick(preps) + " the " + place.form(rng.uniform() < 0.7 ? "sg" : "pl");
    }

    std::string sentence() {
        double u = rng.uniform();
        bool plural = rng.uniform() < 0.5;
        if (u < 0.24) return transitive(plural);
        if (u < 0.36) return intransitive(plural);
        if (u < 0.50) return copula(plural);
        if (u < 0.62) return progressive(plural);
        if (u < 0.74) return reflexive();
        if (u < 0.86) return possessive();
        if (u < 0.93) return negated(plural);
        return relative();
    }

    std::string transitive(bool plural) {
        const LexEntry& v = pick("synth_trans_verbs");
        double t = rng.uniform();
        std::string verb;
        if (t < 0.5) verb = v.form(plural ? "pres_pl" : "pres_sg");
        else if (t < 0.8) verb = v.form("past");
        else verb = modal() + " " + v.form("base");
        return np(plural, "synth_nouns") + " " + verb + " " + np(rng.uniform() < 0.5, "synth_nouns") + tail();
    }

    std::string intransitive(bool plural) {
        const LexEntry& v = pick("synth_intrans_verbs");
        double t = rng.uniform();
        std::string verb;
        if (t < 0.5) verb = v.form(plural ? "pres_pl" : "pres_sg");
        else if (t < 0.8) verb = v.form("past");
        else verb = modal() + " " + v.form("base");
        return np(plural, "synth_nouns") + " " + verb + tail();
    }

    std::string copula(bool plural) {
        std::string adj = pick("synth_adjs").form("word");
        double t = rng.uniform();
        std::string cop = plural ? (t < 0.7 ? "are" : "were") : (t < 0.7 ? "is" : "was");
        return np(plural, "synth_nouns") + " " + cop + " " + adj + tail();
    }

    std::string progressive(bool plural) {
        const LexEntry& v = pick("synth_trans_verbs");
        std::string obj = rng.uniform() < 0.7 ? " " + np(rng.uniform() < 0.5, "synth_nouns") : "";
        return np(plural, "synth_nouns") + (plural ? " are " : " is ") + v.form("prog") + obj + tail();
    }

    std::string reflexive() {
        double u = rng.uniform();
        const LexEntry* subj;
        std::string refl;
        bool plural = false;
        if (u < 0.3) {
            subj = &pick("synth_persons_f");
            refl = "herself";
        } else if (u < 0.6) {
            subj = &pick("synth_persons_m");
            refl = "himself";
        } else if (u < 0.8) {
            subj = &pick("synth_persons_n");
            refl = "themselves";
            plural = true;
        } else {
            subj = &pick("synth_nouns");
            refl = "itself";
        }
        const LexEntry& v = pick("synth_trans_verbs");
        std::string verb = v.form(plural ? "pres_pl" : "pres_sg");
        return "the " + subj->form(plural ? "pl" : "sg") + " " + verb + " " + refl + tail();
    }

    std::string possessive() {
        double u = rng.uniform();
        const LexEntry* subj;
        std::string poss;
        bool plural = false;
        if (u < 0.3) {
            subj = &pick("synth_persons_f");
            poss = "her";
        } else if (u < 0.6) {
            subj = &pick("synth_persons_m");
            poss = "his";
        } else if (u < 0.8) {
            subj = &pick("synth_persons_n");
            poss = "their";
            plural = true;
        } else {
            subj = &pick("synth_nouns");
            poss = "its";
        }
        const LexEntry& v = pick("synth_trans_verbs");
        const LexEntry& obj = pick("synth_nouns");
        std::string verb = v.form(plural ? "pres_pl" : "pres_sg");
        return "the " + subj->form(plural ? "pl" : "sg") + " " + verb + " " + poss + " " +
               obj.form(rng.uniform() < 0.6 ? "sg" : "pl") + tail();
    }

    std::string negated(bool plural) {
        const LexEntry& v = pick("synth_trans_verbs");
        double t = rng.uniform();
        std::string aux;
        std::string verb = v.form("base");
        if (t < 0.35) aux = plural ? "don't" : "doesn't";
        else if (t < 0.6) aux = "didn't";
        else if (t < 0.8) aux = "won't";
        else aux = modal() + " not";
        return np(plural, "synth_nouns") + " " + aux + " " + verb + " " +
               np(rng.uniform() < 0.5, "synth_nouns") + tail();
    }

    std::string relative() {
        const LexEntry& subj = pick("synth_persons_n");
        const LexEntry& v1 = pick("synth_trans_verbs");
        const LexEntry& v2 = pick("synth_trans_verbs");
        bool plural = rng.uniform() < 0.5;
        std::string who = plural ? "who" : "who";
        std::string s = "the " + subj.form(plural ? "pl" : "sg") + " " + who + " " +
                        v1.form(plural ? "pres_pl" : "pres_sg") + " " + np(rng.uniform() < 0.5, "synth_nouns") +
                        " " + v2.form(plural ? "pres_pl" : "pres_sg") + " " + np(rng.uniform() < 0.5, "synth_nouns");
        return s;
    }
};

} // namespace

std::vector<std::string> synth_corpus(const Lexicon& pools, int sentences, uint64_t rng_seed) {
    if (sentences < 0) throw Error("synth_corpus: negative sentence count");
    Rng rng(rng_seed);
    Gen gen{pools, rng};
    std::unordered_set<std::string> seen;
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(sentences));
    int64_t attempts = 0;
    const int64_t max_attempts = 60ll * sentences + 1000;
    while (static_cast<int>(out.size()) < sentences) {
        if (++attempts > max_attempts) {
            throw GenerationExhausted("synth_corpus: could not generate enough unique sentences");
        }
        std::string s = gen.sentence();
        if (seen.insert(s).second) out.push_back(std::move(s));
    }
    return out;
}

} // namespace wuglab
