#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wuglab/lexicon.hpp"
#include "wuglab/template_engine.hpp"
#include "wuglab/wug_forge.hpp"

namespace wuglab {

// Gender-agreement interference material: attractor type (AT), attractor
// number (AN) and distance (DT) patterns at levels 0-2, plus the plain
// "<w> loves herself" direct-evidence baseline.
enum class InterferenceFamily { de, at, an, dt };

struct InterferenceKind {
    InterferenceFamily family = InterferenceFamily::de;
    int level = 0; // 0..2; ignored for the DE baseline

    std::string name() const;
};

InterferenceKind interference_from_name(const std::string& name);
std::vector<InterferenceKind> all_interference_kinds();

struct NounBanks {
    Pool feminine; // entries with sg/pl forms
    Pool masculine;
    Pool neutral;
};

NounBanks load_noun_banks(const Lexicon& lexicon);

struct InterferenceSet {
    std::vector<TrainingInstance> train;
    std::vector<MinimalPair> eval;
};

// One training instance and one DE-form evaluation pair per wug. Wug
// genders alternate; attractor nouns come from 25 selected nouns per
// gender (singular and plural forms), verbs from the supplied
// third-person-singular list. Deterministic in rng_seed.
InterferenceSet make_interference_set(const InterferenceKind& kind, const NounBanks& banks,
                                      const std::vector<std::string>& verbs_3sg,
                                      const WugLexicon& wugs, uint64_t rng_seed);

// Tokens strictly between the wug and the main verb: the interference span.
int interference_span_tokens(const std::string& sentence, const std::string& wug_surface,
                             const std::string& verb_3sg);

} // namespace wuglab
