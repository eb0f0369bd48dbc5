#include "wuglab/template_engine.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

namespace wuglab {

// ---- phenomena (feature flags per the property table) ----

const std::vector<PhenomenonInfo>& all_phenomena() {
    static const std::vector<PhenomenonInfo> table = {
        {Phenomenon::ana_gen_agr, "ana_gen_agr", Pos::noun, true, false, false, true},
        {Phenomenon::ana_num_agr, "ana_num_agr", Pos::noun, false, true, false, true},
        {Phenomenon::transitive, "transitive", Pos::verb, false, false, true, false},
        {Phenomenon::intransitive, "intransitive", Pos::verb, false, false, true, false},
        {Phenomenon::dn_agr, "dn_agr", Pos::adj, false, true, false, false},
        {Phenomenon::sv_agr_v, "sv_agr_v", Pos::verb, false, true, false, false},
        {Phenomenon::sv_agr_s, "sv_agr_s", Pos::noun, false, true, false, false},
    };
    return table;
}

const PhenomenonInfo& phenomenon_info(Phenomenon ph) {
    for (const auto& info : all_phenomena()) {
        if (info.ph == ph) return info;
    }
    throw Error("unknown phenomenon");
}

Phenomenon phenomenon_from_name(const std::string& name) {
    for (const auto& info : all_phenomena()) {
        if (name == info.name) return info.ph;
    }
    throw Error("unknown phenomenon: " + name);
}

const char* evidence_name(EvidenceLevel e) {
    switch (e) {
        case EvidenceLevel::de: return "de";
        case EvidenceLevel::lexie: return "lexie";
        case EvidenceLevel::synie: return "synie";
    }
    return "de";
}

EvidenceLevel evidence_from_name(const std::string& name) {
    if (name == "de") return EvidenceLevel::de;
    if (name == "lexie") return EvidenceLevel::lexie;
    if (name == "synie") return EvidenceLevel::synie;
    throw Error("unknown evidence level: " + name);
}

std::string TrainingInstance::instance_id() const {
    return std::string(phenomenon_info(phenomenon).name) + "/" + evidence_name(evidence) + "/" +
           std::to_string(instance_index);
}

// ---- template parsing ----

namespace {

Slot::Kind slot_kind_from_name(const std::string& name) {
    if (name == "lit") return Slot::Kind::literal;
    if (name == "wug") return Slot::Kind::wug;
    if (name == "noun") return Slot::Kind::noun;
    if (name == "verb") return Slot::Kind::verb;
    if (name == "aux") return Slot::Kind::aux;
    if (name == "det") return Slot::Kind::det;
    if (name == "refl") return Slot::Kind::refl;
    if (name == "poss") return Slot::Kind::poss;
    throw Error("unknown slot kind: " + name);
}

const char* slot_kind_name(Slot::Kind kind) {
    switch (kind) {
        case Slot::Kind::literal: return "lit";
        case Slot::Kind::wug: return "wug";
        case Slot::Kind::noun: return "noun";
        case Slot::Kind::verb: return "verb";
        case Slot::Kind::aux: return "aux";
        case Slot::Kind::det: return "det";
        case Slot::Kind::refl: return "refl";
        case Slot::Kind::poss: return "poss";
    }
    return "?";
}

Slot slot_from_json(const nlohmann::json& j) {
    Slot s;
    s.kind = slot_kind_from_name(j.at("kind").get<std::string>());
    auto get = [&](const char* key, std::string& dst) {
        if (j.contains(key)) dst = j.at(key).get<std::string>();
    };
    get("text", s.text);
    get("pool", s.pool);
    get("form", s.form);
    get("number", s.number);
    get("gender", s.gender);
    get("det", s.det);
    get("suffix", s.suffix);
    return s;
}

void validate_template(const Template& t) {
    int wug_slots = 0;
    for (const auto& s : t.seq) {
        if (s.kind == Slot::Kind::wug) ++wug_slots;
    }
    if (wug_slots != 1) {
        throw ValidationError("template " + t.id + ": expected exactly one wug slot, found " +
                              std::to_string(wug_slots));
    }
    if (t.use == "eval") {
        if (t.alt.slot < 0 || t.alt.slot >= static_cast<int>(t.seq.size())) {
            throw ValidationError("template " + t.id + ": alternation references slot " +
                                  std::to_string(t.alt.slot) + " outside the sequence");
        }
        if (t.alt.mode == AltRule::Mode::add && t.alt.add_seq.empty()) {
            throw ValidationError("template " + t.id + ": add alternation without added slots");
        }
        if (t.alt.mode == AltRule::Mode::flip &&
            t.seq[static_cast<size_t>(t.alt.slot)].kind == Slot::Kind::literal) {
            throw ValidationError("template " + t.id + ": flip alternation on a literal slot");
        }
    }
    // Wug-as-subject phenomena admit no determiner besides "the".
    if ((t.phenomenon == Phenomenon::ana_num_agr || t.phenomenon == Phenomenon::sv_agr_v) &&
        t.use != "synie") {
        bool ok = t.seq.size() >= 2 && t.seq[0].kind == Slot::Kind::literal &&
                  t.seq[0].text == "the" && t.seq[1].kind == Slot::Kind::wug;
        if (!ok) {
            throw ValidationError("template " + t.id +
                                  ": wug subject must be introduced by the literal \"the\"");
        }
    }
    // Wug verbs in the subject-number phenomenon stay in bare present form.
    if (t.phenomenon == Phenomenon::sv_agr_s && t.use != "synie") {
        for (const auto& s : t.seq) {
            if (s.kind == Slot::Kind::wug && !s.suffix.empty()) {
                throw ValidationError("template " + t.id + ": wug verb must carry no suffix");
            }
            if (s.kind == Slot::Kind::aux) {
                throw ValidationError("template " + t.id + ": auxiliaries not allowed");
            }
        }
    }
}

} // namespace

std::string Template::signature() const {
    std::string sig;
    for (const auto& s : seq) {
        sig += slot_kind_name(s.kind);
        sig += '.';
    }
    return sig;
}

std::vector<Template> parse_templates(const std::string& content, const std::string& origin) {
    std::vector<Template> out;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= content.size()) {
        size_t eol = content.find('\n', pos);
        std::string line = content.substr(pos, eol == std::string::npos ? eol : eol - pos);
        pos = eol == std::string::npos ? content.size() + 1 : eol + 1;
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            Template t;
            t.id = j.at("id").get<std::string>();
            t.phenomenon = phenomenon_from_name(j.at("phenomenon").get<std::string>());
            t.use = j.at("use").get<std::string>();
            if (t.use != "eval" && t.use != "lexie" && t.use != "synie") {
                throw ValidationError("template " + t.id + ": unknown use " + t.use);
            }
            if (j.contains("negated")) t.negated = j.at("negated").get<bool>();
            for (const auto& sj : j.at("seq")) t.seq.push_back(slot_from_json(sj));
            if (j.contains("alt")) {
                const auto& aj = j.at("alt");
                std::string mode = aj.at("mode").get<std::string>();
                if (mode == "flip") t.alt.mode = AltRule::Mode::flip;
                else if (mode == "drop") t.alt.mode = AltRule::Mode::drop;
                else if (mode == "add") t.alt.mode = AltRule::Mode::add;
                else throw ValidationError("template " + t.id + ": unknown alt mode " + mode);
                t.alt.slot = aj.at("slot").get<int>();
                if (aj.contains("add")) {
                    for (const auto& sj : aj.at("add")) t.alt.add_seq.push_back(slot_from_json(sj));
                }
            } else if (t.use == "eval") {
                throw ValidationError("template " + t.id + ": eval template without alternation");
            }
            validate_template(t);
            out.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::vector<Template> parse_template_file(const std::filesystem::path& path) {
    return parse_templates(read_file(path), path.string());
}

// ---- properties ----

namespace {

bool property_plural(const std::string& prop) {
    return prop == "pl" || prop == "these" || prop == "those";
}

std::string property_gender(const std::string& prop) {
    if (prop == "f" || prop == "m") return prop;
    return "n";
}

std::string opposite_property(const std::string& prop) {
    if (prop == "f") return "m";
    if (prop == "m") return "f";
    if (prop == "sg") return "pl";
    if (prop == "pl") return "sg";
    if (prop == "this") return "these";
    if (prop == "these") return "this";
    if (prop == "that") return "those";
    if (prop == "those") return "that";
    return prop;
}

std::vector<std::string> property_domain(Phenomenon ph) {
    switch (ph) {
        case Phenomenon::ana_gen_agr: return {"f", "m"};
        case Phenomenon::ana_num_agr: return {"sg", "pl"};
        case Phenomenon::dn_agr: return {"this", "that", "these", "those"};
        case Phenomenon::sv_agr_v: return {"sg", "pl"};
        case Phenomenon::sv_agr_s: return {"sg", "pl"};
        case Phenomenon::transitive:
        case Phenomenon::intransitive: return {"none"};
    }
    return {"none"};
}

std::string reflexive_surface(const std::string& gender, bool plural) {
    if (plural) return "themselves";
    if (gender == "f") return "herself";
    if (gender == "m") return "himself";
    return "itself";
}

std::string possessive_surface(const std::string& gender, bool plural) {
    if (plural) return "their";
    if (gender == "f") return "her";
    if (gender == "m") return "his";
    return "its";
}

// Words that signal negation when scanning generated surfaces.
const std::unordered_set<std::string>& negation_words() {
    static const std::unordered_set<std::string> words = {
        "not",   "never",  "didn't", "doesn't", "don't",  "won't",
        "can't", "isn't",  "aren't", "wasn't",  "weren't", "cannot"};
    return words;
}

} // namespace

// ---- realization ----

namespace {

struct FillChoice {
    const Template* tpl = nullptr;
    // pool entry chosen per slot index (nullptr for non-pool slots)
    std::vector<const LexEntry*> words;
    std::vector<const LexEntry*> alt_words; // for alt.add_seq slots
};

bool resolve_plural(const Slot& s, const std::string& prop, const std::string& which) {
    const std::string& attr = which == "gender" ? s.gender : s.number;
    (void)attr;
    if (s.number == "pl") return true;
    if (s.number == "sg") return false;
    if (s.number == "pair") return property_plural(prop);
    return false; // unspecified: singular
}

std::string resolve_gender(const Slot& s, const std::string& prop) {
    if (s.gender == "pair") return property_gender(prop);
    if (!s.gender.empty()) return s.gender;
    return "n";
}

std::string realize_slot(const Slot& s, const LexEntry* word, const std::string& prop,
                         const std::string& wug_stem_surface_sg, const std::string& wug_stem_surface_pl) {
    bool plural = resolve_plural(s, prop, "number");
    switch (s.kind) {
        case Slot::Kind::literal:
            return s.text;
        case Slot::Kind::wug: {
            std::string surface = plural ? wug_stem_surface_pl : wug_stem_surface_sg;
            return surface + s.suffix;
        }
        case Slot::Kind::noun: {
            std::string det = s.det;
            if (det == "pair") det = prop; // demonstratives bound to the pair property
            std::string noun = word->form(plural ? "pl" : "sg");
            return det.empty() ? noun : det + " " + noun;
        }
        case Slot::Kind::verb: {
            std::string form = s.form.empty() ? "base" : s.form;
            if (form == "pres") form = plural ? "pres_pl" : "pres_sg";
            return word->form(form);
        }
        case Slot::Kind::aux:
            return word->form(plural ? "pl" : "sg");
        case Slot::Kind::det:
            if (s.number == "pair") return prop;
            return s.text;
        case Slot::Kind::refl:
            return reflexive_surface(resolve_gender(s, prop), plural);
        case Slot::Kind::poss:
            return possessive_surface(resolve_gender(s, prop), plural);
    }
    return "";
}

struct Realized {
    std::string sentence;
    std::string wug_surface;
    std::vector<std::string> content_words; // pool-backed noun/verb/aux surfaces
};

Realized realize(const FillChoice& fill, const std::string& prop, const WugEntry& wug,
                 bool bad_member) {
    const Template& t = *fill.tpl;
    std::string stem_sg = surface_form(wug, Number::singular);
    std::string stem_pl = surface_form(wug, Number::plural);

    Realized r;
    std::vector<std::string> tokens;
    for (size_t i = 0; i < t.seq.size(); ++i) {
        const Slot& s = t.seq[i];
        bool is_alt_slot = t.alt.slot == static_cast<int>(i);
        if (bad_member && is_alt_slot && t.alt.mode == AltRule::Mode::drop) continue;
        std::string prop_here = prop;
        if (bad_member && is_alt_slot && t.alt.mode == AltRule::Mode::flip) {
            prop_here = opposite_property(prop);
        }
        std::string surface = realize_slot(s, fill.words[i], prop_here, stem_sg, stem_pl);
        if (!surface.empty()) tokens.push_back(surface);
        if (s.kind == Slot::Kind::wug) r.wug_surface = surface;
        // Pool-backed slots contribute content lexemes, except slots bound to
        // the pair property (their surface is agreement morphology, shared
        // with the evaluation pair by design). Determiners folded into noun
        // slots are structural.
        if (fill.words[i] != nullptr && s.number != "pair" && s.gender != "pair" &&
            (s.kind == Slot::Kind::noun || s.kind == Slot::Kind::verb || s.kind == Slot::Kind::aux)) {
            std::string content = s.kind == Slot::Kind::noun
                                      ? fill.words[i]->form(resolve_plural(s, prop_here, "number")
                                                                ? "pl" : "sg")
                                      : surface;
            r.content_words.push_back(content);
        }
        if (bad_member && is_alt_slot && t.alt.mode == AltRule::Mode::add) {
            for (size_t k = 0; k < t.alt.add_seq.size(); ++k) {
                const Slot& extra = t.alt.add_seq[k];
                std::string es = realize_slot(extra, fill.alt_words[k], prop, stem_sg, stem_pl);
                if (!es.empty()) tokens.push_back(es);
            }
        }
    }
    r.sentence = join(tokens);
    return r;
}

int count_occurrences(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return 0;
    int count = 0;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

// Largest-remainder apportionment of `total` across weights.
std::vector<int64_t> apportion(const std::vector<double>& weights, int64_t total) {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    std::vector<int64_t> out(weights.size(), 0);
    std::vector<std::pair<double, size_t>> rema;
    int64_t assigned = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
        double exact = total * (weights[i] / wsum);
        out[i] = static_cast<int64_t>(std::floor(exact));
        assigned += out[i];
        rema.push_back({exact - std::floor(exact), i});
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int64_t k = 0; k < total - assigned; ++k) {
        out[rema[static_cast<size_t>(k) % rema.size()].second] += 1;
    }
    return out;
}

} // namespace

// ---- balance ----

BalanceSpec balance_spec_for(Phenomenon ph, int64_t pairs, const Lexicon& lexicon) {
    BalanceSpec spec;
    spec.set_size = pairs;
    auto domain = property_domain(ph);
    if (domain.size() == 1 && domain[0] == "none") return spec;

    std::vector<double> weights(domain.size(), 1.0);
    auto counts = apportion(weights, pairs);
    for (size_t i = 0; i < domain.size(); ++i) {
        PropertyTarget target;
        target.value = domain[i];
        target.count = counts[i];
        switch (ph) {
            case Phenomenon::ana_gen_agr:
                target.markers = {domain[i] == "f" ? "herself" : "himself"};
                break;
            case Phenomenon::ana_num_agr:
                target.markers = {domain[i] == "sg" ? "itself" : "themselves"};
                break;
            case Phenomenon::dn_agr:
                target.markers = {domain[i]};
                break;
            case Phenomenon::sv_agr_v: {
                // the auxiliary/verb number is the observable signal
                for (const char* pool : {"svv_aux", "svv_verb_eval", "svv_verb_lexie"}) {
                    if (!lexicon.has_pool(pool)) continue;
                    for (const auto& e : lexicon.pool(pool)) {
                        const char* key = domain[i] == "sg" ? "sg" : "pl";
                        const char* vkey = domain[i] == "sg" ? "pres_sg" : "pres_pl";
                        if (e.has(key)) target.markers.insert(e.form(key));
                        if (e.has(vkey)) target.markers.insert(e.form(vkey));
                    }
                }
                break;
            }
            case Phenomenon::sv_agr_s: {
                for (const char* pool : {"svs_subj_eval", "svs_subj_lexie"}) {
                    if (!lexicon.has_pool(pool)) continue;
                    for (const auto& e : lexicon.pool(pool)) {
                        target.markers.insert(e.form(domain[i] == "sg" ? "sg" : "pl"));
                    }
                }
                break;
            }
            default:
                break;
        }
        spec.targets.push_back(std::move(target));
    }
    return spec;
}

BalanceReport check_balance(const std::vector<MinimalPair>& set, const BalanceSpec& spec) {
    BalanceReport report;
    // Property counts at non-multiple-of-3 set sizes can drift by a couple
    // of pairs because properties attach to template fills (tag-set
    // triples); allow that much.
    const int64_t tolerance = set.empty() ? 0 : 3;
    report.pass = true;
    for (const auto& target : spec.targets) {
        BalanceReport::Row row;
        row.value = target.value;
        row.expected = target.count;
        for (const auto& pair : set) {
            for (const auto& tok : split_ws(pair.good)) {
                if (target.markers.count(tok)) {
                    ++row.observed;
                    break;
                }
            }
        }
        row.pass = std::llabs(row.observed - row.expected) <= tolerance;
        report.pass = report.pass && row.pass;
        report.rows.push_back(row);
    }
    if (set.empty()) {
        report.negation_rate = std::nan("");
        report.negation_pass = false;
        report.pass = false;
        return report;
    }
    int64_t negated = 0;
    for (const auto& pair : set) {
        for (const auto& tok : split_ws(pair.good)) {
            if (negation_words().count(tok)) {
                ++negated;
                break;
            }
        }
    }
    report.negation_rate = static_cast<double>(negated) / static_cast<double>(set.size());
    report.negation_pass =
        report.negation_rate >= spec.negation_lo && report.negation_rate <= spec.negation_hi;
    report.pass = report.pass && report.negation_pass;
    return report;
}

// ---- expansion ----

namespace {

const LexEntry* pick_pool_word(const Lexicon& lexicon, const Slot& s, Rng& rng) {
    if (s.pool.empty()) return nullptr;
    const Pool& pool = lexicon.pool(s.pool);
    if (pool.empty()) throw BalanceUnsatisfiable("empty lexicon pool: " + s.pool);
    return &pool[static_cast<size_t>(rng.below(pool.size()))];
}

FillChoice make_fill(const Template& tpl, const Lexicon& lexicon, Rng& rng) {
    FillChoice fill;
    fill.tpl = &tpl;
    fill.words.resize(tpl.seq.size(), nullptr);
    for (size_t i = 0; i < tpl.seq.size(); ++i) {
        fill.words[i] = pick_pool_word(lexicon, tpl.seq[i], rng);
    }
    fill.alt_words.resize(tpl.alt.add_seq.size(), nullptr);
    for (size_t i = 0; i < tpl.alt.add_seq.size(); ++i) {
        fill.alt_words[i] = pick_pool_word(lexicon, tpl.alt.add_seq[i], rng);
    }
    return fill;
}

std::string fill_key(const FillChoice& fill) {
    std::string key = fill.tpl->id;
    for (const auto* w : fill.words) {
        key += '|';
        if (w) key += w->forms.begin()->second;
    }
    for (const auto* w : fill.alt_words) {
        key += '|';
        if (w) key += w->forms.begin()->second;
    }
    return key;
}

void check_normalized(const std::string& sentence, const std::string& what) {
    if (sentence.find('.') != std::string::npos) {
        throw ValidationError(what + " contains a period: " + sentence);
    }
    for (char c : sentence) {
        if (c >= 'A' && c <= 'Z') {
            throw ValidationError(what + " not lowercase: " + sentence);
        }
    }
}

} // namespace

ExpandResult expand(const std::vector<Template>& templates, const Lexicon& lexicon,
                    const WugLexicon& wugs, const BalanceSpec& balance, uint64_t rng_seed) {
    ExpandResult result;
    result.train_sets[EvidenceLevel::lexie] = {};
    result.train_sets[EvidenceLevel::synie] = {};
    if (templates.empty() || balance.set_size == 0) return result;

    const Phenomenon ph = templates.front().phenomenon;
    for (const auto& t : templates) {
        if (t.phenomenon != ph) {
            throw ValidationError("expand: templates span multiple phenomena");
        }
    }
    const int64_t pairs_target = balance.set_size;
    if (static_cast<int64_t>(wugs.entries.size()) < pairs_target) {
        throw ValidationError("expand: wug lexicon smaller than the requested pair count");
    }

    // Split templates by role; group eval/lexie by (signature, negated).
    std::vector<const Template*> eval_templates;
    std::map<std::pair<std::string, bool>, std::vector<const Template*>> lexie_by_sig;
    std::vector<const Template*> synie_templates;
    std::set<std::string> eval_signatures;
    for (const auto& t : templates) {
        if (t.use == "eval") {
            eval_templates.push_back(&t);
            eval_signatures.insert(t.signature());
        } else if (t.use == "lexie") {
            lexie_by_sig[{t.signature(), t.negated}].push_back(&t);
        } else {
            synie_templates.push_back(&t);
        }
    }
    if (eval_templates.empty()) throw ValidationError("expand: no eval templates");
    if (synie_templates.empty()) throw ValidationError("expand: no synie templates");
    for (const auto* t : synie_templates) {
        if (eval_signatures.count(t->signature())) {
            throw ValidationError("template " + t->id +
                                  ": synie skeleton must differ from every eval skeleton");
        }
    }

    Rng rng(rng_seed);

    // Per-fill plans: property values and negation flags.
    const int64_t fills_target = (pairs_target + 2) / 3;
    auto domain = property_domain(ph);
    std::vector<std::string> fill_props;
    if (domain.size() == 1) {
        fill_props.assign(static_cast<size_t>(fills_target), domain[0]);
    } else {
        std::vector<double> weights;
        for (const auto& target : balance.targets) weights.push_back(static_cast<double>(target.count));
        auto counts = apportion(weights, fills_target);
        for (size_t i = 0; i < counts.size(); ++i) {
            for (int64_t k = 0; k < counts[i]; ++k) fill_props.push_back(balance.targets[i].value);
        }
    }
    rng.shuffle(fill_props);

    int64_t negated_fills = llround(balance.negation_goal * static_cast<double>(fills_target));
    std::vector<char> fill_neg(static_cast<size_t>(fills_target), 0);
    for (int64_t i = 0; i < negated_fills; ++i) fill_neg[static_cast<size_t>(i)] = 1;
    {
        // same shuffle routine, over indices
        std::vector<char>& v = fill_neg;
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(rng.below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::vector<const Template*> eval_plain, eval_neg;
    for (const auto* t : eval_templates) (t->negated ? eval_neg : eval_plain).push_back(t);
    if (eval_plain.empty()) throw ValidationError("expand: no non-negated eval templates");
    if (negated_fills > 0 && eval_neg.empty()) {
        throw ValidationError("expand: negation requested but no negated eval templates");
    }
    std::vector<const Template*> synie_plain, synie_neg;
    for (const auto* t : synie_templates) (t->negated ? synie_neg : synie_plain).push_back(t);

    std::unordered_set<std::string> used_sentences;
    std::unordered_set<std::string> used_fill_keys;

    int64_t pair_id = 0;
    const int kMaxFillTries = 200;
    for (int64_t f = 0; f < fills_target && pair_id < pairs_target; ++f) {
        const std::string& prop = fill_props[static_cast<size_t>(f)];
        bool neg = fill_neg[static_cast<size_t>(f)] != 0;

        // Draw eval/lexie/synie fills until every realized sentence of the
        // whole tag-set block is fresh.
        bool placed = false;
        for (int attempt = 0; attempt < kMaxFillTries && !placed; ++attempt) {
            const Template* etpl = neg ? eval_neg[static_cast<size_t>(rng.below(eval_neg.size()))]
                                       : eval_plain[static_cast<size_t>(rng.below(eval_plain.size()))];
            FillChoice efill = make_fill(*etpl, lexicon, rng);

            auto lex_it = lexie_by_sig.find({etpl->signature(), etpl->negated});
            if (lex_it == lexie_by_sig.end() || lex_it->second.empty()) {
                throw ValidationError("expand: no lexie template matches skeleton of " + etpl->id);
            }
            const Template* ltpl =
                lex_it->second[static_cast<size_t>(rng.below(lex_it->second.size()))];
            FillChoice lfill = make_fill(*ltpl, lexicon, rng);

            const std::vector<const Template*>& synie_pool =
                (neg && !synie_neg.empty()) ? synie_neg : synie_plain;
            if (synie_pool.empty()) throw ValidationError("expand: no synie templates available");
            const Template* stpl = synie_pool[static_cast<size_t>(rng.below(synie_pool.size()))];
            FillChoice sfill = make_fill(*stpl, lexicon, rng);

            std::string key = fill_key(efill) + "//" + fill_key(lfill) + "//" + fill_key(sfill);
            if (used_fill_keys.count(key)) continue;

            // Realize the whole block for up to three tag sets.
            int64_t block_pairs = std::min<int64_t>(3, pairs_target - pair_id);
            std::vector<MinimalPair> block_eval;
            std::vector<TrainingInstance> block_lexie, block_synie;
            std::vector<std::string> block_sentences;
            bool ok = true;
            for (int64_t tset = 0; tset < block_pairs && ok; ++tset) {
                const WugEntry& wug = wugs.entries[static_cast<size_t>(pair_id + tset)];
                Realized good = realize(efill, prop, wug, /*bad_member=*/false);
                Realized bad = realize(efill, prop, wug, /*bad_member=*/true);
                Realized lex = realize(lfill, prop, wug, /*bad_member=*/false);
                Realized syn = realize(sfill, prop, wug, /*bad_member=*/false);

                // LexIE shares the skeleton but no content lexemes.
                for (const auto& w : lex.content_words) {
                    if (std::find(good.content_words.begin(), good.content_words.end(), w) !=
                        good.content_words.end()) {
                        throw ValidationError("lexie template " + ltpl->id +
                                              " shares content word '" + w + "' with " + etpl->id);
                    }
                }
                for (const std::string* s : {&good.sentence, &bad.sentence, &lex.sentence, &syn.sentence}) {
                    check_normalized(*s, "generated sentence");
                }
                if (count_occurrences(good.sentence, good.wug_surface) != 1 ||
                    count_occurrences(lex.sentence, lex.wug_surface) != 1 ||
                    count_occurrences(syn.sentence, syn.wug_surface) != 1) {
                    ok = false;
                    break;
                }
                // DE duplicates the good member by definition; everything else
                // must be globally fresh.
                std::vector<std::string> fresh = {good.sentence, bad.sentence, lex.sentence,
                                                  syn.sentence};
                for (const auto& s : fresh) {
                    if (used_sentences.count(s)) ok = false;
                }
                std::sort(fresh.begin(), fresh.end());
                if (std::adjacent_find(fresh.begin(), fresh.end()) != fresh.end()) ok = false;
                if (!ok) break;

                MinimalPair pair;
                pair.pair_id = pair_id + tset;
                pair.wug_id = wug.id;
                pair.phenomenon = ph;
                pair.good = good.sentence;
                pair.bad = bad.sentence;
                pair.property = prop;
                pair.wug_surface = good.wug_surface;
                block_eval.push_back(std::move(pair));

                TrainingInstance li;
                li.instance_index = pair_id + tset;
                li.wug_id = wug.id;
                li.phenomenon = ph;
                li.evidence = EvidenceLevel::lexie;
                li.sentence = lex.sentence;
                block_lexie.push_back(std::move(li));

                TrainingInstance si;
                si.instance_index = pair_id + tset;
                si.wug_id = wug.id;
                si.phenomenon = ph;
                si.evidence = EvidenceLevel::synie;
                si.sentence = syn.sentence;
                block_synie.push_back(std::move(si));

                block_sentences.insert(block_sentences.end(),
                                       {good.sentence, bad.sentence, lex.sentence, syn.sentence});
            }
            if (!ok) continue;

            used_fill_keys.insert(key);
            for (const auto& s : block_sentences) used_sentences.insert(s);
            for (auto& p : block_eval) result.eval_set.push_back(std::move(p));
            for (auto& i : block_lexie) result.train_sets[EvidenceLevel::lexie].push_back(std::move(i));
            for (auto& i : block_synie) result.train_sets[EvidenceLevel::synie].push_back(std::move(i));
            pair_id += block_pairs;
            placed = true;
        }
        if (!placed) {
            throw DuplicateExhaustion(
                "expand: could not realize a fresh template fill after " +
                std::to_string(kMaxFillTries) + " attempts (lexicon too small for " +
                std::to_string(pairs_target) + " pairs)");
        }
    }
    return result;
}

std::vector<TrainingInstance> derive_de(const std::vector<MinimalPair>& eval_set) {
    std::vector<TrainingInstance> out;
    out.reserve(eval_set.size());
    for (const auto& pair : eval_set) {
        TrainingInstance inst;
        inst.instance_index = pair.pair_id;
        inst.wug_id = pair.wug_id;
        inst.phenomenon = pair.phenomenon;
        inst.evidence = EvidenceLevel::de;
        inst.sentence = pair.good;
        out.push_back(std::move(inst));
    }
    return out;
}

// ---- io ----

void save_pairs(const std::filesystem::path& path, const std::vector<MinimalPair>& pairs) {
    std::vector<std::string> lines;
    lines.reserve(pairs.size());
    for (const auto& p : pairs) {
        nlohmann::json j{{"pair_id", p.pair_id},
                         {"phenomenon", phenomenon_info(p.phenomenon).name},
                         {"evidence", "eval"},
                         {"wug_id", p.wug_id},
                         {"good", p.good},
                         {"bad", p.bad},
                         {"property", p.property},
                         {"wug_surface", p.wug_surface}};
        lines.push_back(j.dump());
    }
    write_lines_atomic(path, lines);
}

std::vector<MinimalPair> load_pairs(const std::filesystem::path& path) {
    std::vector<MinimalPair> out;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        MinimalPair p;
        p.pair_id = j.at("pair_id").get<int64_t>();
        p.phenomenon = phenomenon_from_name(j.at("phenomenon").get<std::string>());
        p.wug_id = j.at("wug_id").get<int64_t>();
        p.good = j.at("good").get<std::string>();
        p.bad = j.at("bad").get<std::string>();
        if (j.contains("property")) p.property = j.at("property").get<std::string>();
        if (j.contains("wug_surface")) p.wug_surface = j.at("wug_surface").get<std::string>();
        out.push_back(std::move(p));
    }
    return out;
}

void save_instances(const std::filesystem::path& path, const std::vector<TrainingInstance>& set) {
    std::vector<std::string> lines;
    lines.reserve(set.size());
    for (const auto& inst : set) {
        nlohmann::json j{{"instance_id", inst.instance_id()},
                         {"phenomenon", phenomenon_info(inst.phenomenon).name},
                         {"evidence", evidence_name(inst.evidence)},
                         {"wug_id", inst.wug_id},
                         {"sentence", inst.sentence}};
        lines.push_back(j.dump());
    }
    write_lines_atomic(path, lines);
}

std::vector<TrainingInstance> load_instances(const std::filesystem::path& path) {
    std::vector<TrainingInstance> out;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        TrainingInstance inst;
        std::string id = j.at("instance_id").get<std::string>();
        size_t last_slash = id.find_last_of('/');
        inst.instance_index = std::stoll(id.substr(last_slash + 1));
        inst.phenomenon = phenomenon_from_name(j.at("phenomenon").get<std::string>());
        inst.evidence = evidence_from_name(j.at("evidence").get<std::string>());
        inst.wug_id = j.at("wug_id").get<int64_t>();
        inst.sentence = j.at("sentence").get<std::string>();
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace wuglab
