#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "wuglab/lexicon.hpp"
#include "wuglab/wug_forge.hpp"

namespace wuglab {

enum class Phenomenon {
    ana_gen_agr,
    ana_num_agr,
    transitive,
    intransitive,
    dn_agr,
    sv_agr_v,
    sv_agr_s,
};

enum class Pos { noun, verb, adj };

struct PhenomenonInfo {
    Phenomenon ph;
    const char* name;
    Pos pos;
    bool gender;
    bool number;
    bool transitivity;
    bool long_agreement;
};

const std::vector<PhenomenonInfo>& all_phenomena();
const PhenomenonInfo& phenomenon_info(Phenomenon ph);
Phenomenon phenomenon_from_name(const std::string& name);

enum class EvidenceLevel { de, lexie, synie };
const char* evidence_name(EvidenceLevel e);
EvidenceLevel evidence_from_name(const std::string& name);

// ---- templates ----

struct Slot {
    enum class Kind { literal, wug, noun, verb, aux, det, refl, poss };
    Kind kind = Kind::literal;
    std::string text;   // literal
    std::string pool;   // noun/verb/aux pools
    std::string form;   // verb form: base | pres | past | prog | part
    std::string number; // "sg" | "pl" | "pair"
    std::string gender; // "f" | "m" | "n" | "pair"
    std::string det;    // determiner folded into a noun slot ("the", "a", "pair", ...)
    std::string suffix; // wug suffix, e.g. "ed" for verb wugs
};

struct AltRule {
    enum class Mode { flip, drop, add };
    Mode mode = Mode::flip;
    int slot = -1;               // flipped or dropped slot index
    std::vector<Slot> add_seq;   // appended after `slot` in the bad member
};

struct Template {
    std::string id;
    Phenomenon phenomenon = Phenomenon::dn_agr;
    std::string use; // "eval" | "lexie" | "synie"
    std::vector<Slot> seq;
    AltRule alt;     // meaningful for eval templates
    bool negated = false;

    // Sequence of slot kinds; LexIE must match its eval template's
    // signature, SynIE must differ.
    std::string signature() const;
};

std::vector<Template> parse_template_file(const std::filesystem::path& path);
std::vector<Template> parse_templates(const std::string& content, const std::string& origin);

// ---- generated material ----

struct MinimalPair {
    int64_t pair_id = 0;
    int64_t wug_id = 0;
    Phenomenon phenomenon = Phenomenon::dn_agr;
    std::string good;
    std::string bad;
    std::string property; // pair-level property value ("f", "sg", "these", ...)
    std::string wug_surface; // surface of the wug word as it appears in both members
};

struct TrainingInstance {
    int64_t instance_index = 0;
    int64_t wug_id = 0;
    Phenomenon phenomenon = Phenomenon::dn_agr;
    EvidenceLevel evidence = EvidenceLevel::de;
    std::string sentence;

    std::string instance_id() const;
};

struct PropertyTarget {
    std::string value;
    int64_t count = 0;
    std::set<std::string> markers; // surface words that indicate the value
};

struct BalanceSpec {
    std::vector<PropertyTarget> targets; // empty for unbalanced phenomena
    double negation_lo = 0.10;
    double negation_hi = 0.50;
    double negation_goal = 0.30;
    int64_t set_size = 0;
};

// Scaled per-property targets for a phenomenon (paper counts at 600 pairs).
BalanceSpec balance_spec_for(Phenomenon ph, int64_t pairs, const Lexicon& lexicon);

struct BalanceReport {
    struct Row {
        std::string value;
        int64_t expected = 0;
        int64_t observed = 0;
        bool pass = false;
    };
    std::vector<Row> rows;
    double negation_rate = 0.0; // NaN when the set is empty
    bool negation_pass = false;
    bool pass = false;
};

BalanceReport check_balance(const std::vector<MinimalPair>& set, const BalanceSpec& spec);

struct ExpandResult {
    std::vector<MinimalPair> eval_set;
    std::map<EvidenceLevel, std::vector<TrainingInstance>> train_sets; // lexie, synie
};

// 600-style expansion: ceil(pairs/3) concrete template fills x 3 tag sets,
// one LexIE (same skeleton, disjoint lexemes) and one SynIE (different
// skeleton) instance per pair, balanced per `balance`, deterministic in
// rng_seed, duplicate sentences rejected.
ExpandResult expand(const std::vector<Template>& templates, const Lexicon& lexicon,
                    const WugLexicon& wugs, const BalanceSpec& balance, uint64_t rng_seed);

std::vector<TrainingInstance> derive_de(const std::vector<MinimalPair>& eval_set);

// ---- JSONL io (External Interfaces) ----

void save_pairs(const std::filesystem::path& path, const std::vector<MinimalPair>& pairs);
std::vector<MinimalPair> load_pairs(const std::filesystem::path& path);
void save_instances(const std::filesystem::path& path, const std::vector<TrainingInstance>& set);
std::vector<TrainingInstance> load_instances(const std::filesystem::path& path);

} // namespace wuglab
