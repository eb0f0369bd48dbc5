#include "wuglab/wug_forge.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

namespace wuglab {

const char* wug_mode_name(WugMode m) {
    switch (m) {
        case WugMode::tag: return "tag";
        case WugMode::tag_with_morph: return "tag_with_morph";
        case WugMode::pseudoword: return "pseudoword";
    }
    return "tag";
}

WugMode wug_mode_from_name(const std::string& name) {
    if (name == "tag") return WugMode::tag;
    if (name == "tag_with_morph") return WugMode::tag_with_morph;
    if (name == "pseudoword") return WugMode::pseudoword;
    throw Error("unknown wug mode: " + name);
}

const WugEntry& WugLexicon::by_id(int64_t id) const {
    for (const auto& e : entries) {
        if (e.id == id) return e;
    }
    throw Error("wug id not in lexicon: " + std::to_string(id));
}

WugLexicon make_tag_lexicon(int64_t count, int64_t start_id, WugMode mode) {
    if (count < 1) throw Error("make_tag_lexicon: count must be >= 1");
    if (start_id < 0) throw Error("make_tag_lexicon: start_id must be >= 0");
    if (mode == WugMode::pseudoword) {
        throw Error("make_tag_lexicon: pseudoword lexicons come from generate_pseudowords");
    }
    WugLexicon lex;
    lex.mode = mode;
    lex.entries.reserve(static_cast<size_t>(count));
    for (int64_t i = 0; i < count; ++i) {
        int64_t id = start_id + i;
        lex.entries.push_back({id, mode, "<wug#" + std::to_string(id) + ">"});
    }
    return lex;
}

namespace {

bool all_lower_alpha(const std::string& w) {
    return !w.empty() &&
           std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Words split into maximal consonant/vowel runs (onset, nucleus, coda and
// interior clusters). Replacement segments come from the matching run class
// across the whole seed lexicon.
enum class SegClass { consonant, vowel };

struct Segment {
    SegClass cls;
    std::string text;
};

std::vector<Segment> decompose(const std::string& w) {
    std::vector<Segment> runs;
    size_t i = 0;
    while (i < w.size()) {
        size_t start = i;
        bool v = is_vowel(w[i]);
        while (i < w.size() && is_vowel(w[i]) == v) ++i;
        runs.push_back({v ? SegClass::vowel : SegClass::consonant, w.substr(start, i - start)});
    }
    return runs;
}

struct SegmentInventory {
    // class -> length -> distinct segments, sorted for determinism
    std::unordered_map<int, std::unordered_map<int, std::vector<std::string>>> by_class_len;
    std::unordered_set<std::string> bigrams;

    void add(const std::string& word) {
        for (const auto& seg : decompose(word)) {
            auto& bucket = by_class_len[static_cast<int>(seg.cls)][static_cast<int>(seg.text.size())];
            bucket.push_back(seg.text);
        }
        for (size_t i = 0; i + 1 < word.size(); ++i) bigrams.insert(word.substr(i, 2));
    }

    void finalize() {
        for (auto& [cls, by_len] : by_class_len) {
            for (auto& [len, v] : by_len) {
                std::sort(v.begin(), v.end());
                v.erase(std::unique(v.begin(), v.end()), v.end());
            }
        }
    }

    // Same-class segment with length within +-1 of the original.
    const std::string* sample(SegClass cls, int len, Rng& rng) const {
        auto it = by_class_len.find(static_cast<int>(cls));
        if (it == by_class_len.end()) return nullptr;
        std::vector<const std::vector<std::string>*> buckets;
        size_t total = 0;
        for (int d = -1; d <= 1; ++d) {
            auto jt = it->second.find(len + d);
            if (jt != it->second.end() && !jt->second.empty()) {
                buckets.push_back(&jt->second);
                total += jt->second.size();
            }
        }
        if (total == 0) return nullptr;
        size_t k = static_cast<size_t>(rng.below(total));
        for (const auto* b : buckets) {
            if (k < b->size()) return &(*b)[k];
            k -= b->size();
        }
        return nullptr;
    }

    bool plausible(const std::string& w) const {
        for (size_t i = 0; i + 1 < w.size(); ++i) {
            if (!bigrams.count(w.substr(i, 2))) return false;
        }
        return true;
    }
};

} // namespace

WugLexicon generate_pseudowords(const std::vector<std::string>& seed_lexicon,
                                int per_seed, int count, uint64_t rng_seed,
                                int64_t start_id) {
    if (seed_lexicon.empty()) throw Error("generate_pseudowords: empty seed lexicon");
    if (per_seed < 1 || count < 1) throw Error("generate_pseudowords: per_seed and count must be >= 1");
    if (static_cast<int64_t>(count) > static_cast<int64_t>(per_seed) * static_cast<int64_t>(seed_lexicon.size())) {
        throw Error("generate_pseudowords: count exceeds per_seed * |seed_lexicon|");
    }

    SegmentInventory inv;
    std::unordered_set<std::string> seed_set;
    for (const auto& w : seed_lexicon) {
        if (!all_lower_alpha(w)) throw Error("seed lexicon word not lowercase a-z: " + w);
        inv.add(w);
        seed_set.insert(w);
    }
    inv.finalize();

    Rng rng(rng_seed);
    std::vector<std::string> order = seed_lexicon;
    rng.shuffle(order);

    WugLexicon lex;
    lex.mode = WugMode::pseudoword;
    std::unordered_set<std::string> produced;

    const int kTriesPerCandidate = 32;
    int64_t remaining_attempts = 200ll * count + 2000;

    size_t cursor = 0;
    while (static_cast<int>(lex.entries.size()) < count) {
        if (remaining_attempts-- <= 0) {
            throw GenerationExhausted(
                "generate_pseudowords: could not produce " + std::to_string(count) +
                " unique pseudowords; seed lexicon too small or too uniform");
        }
        const std::string& seed = order[cursor % order.size()];
        ++cursor;

        // Emit per_seed candidates from this seed, keep one at random. The
        // bigram filter applies on the first attempts; if the inventory is
        // too small to satisfy it (tiny seed lists), it is waived so the
        // rejection rule alone decides.
        std::vector<std::string> candidates;
        for (int c = 0; c < per_seed; ++c) {
            for (int t = 0; t < kTriesPerCandidate; ++t) {
                std::string cand;
                for (const auto& seg : decompose(seed)) {
                    const std::string* sub = inv.sample(seg.cls, static_cast<int>(seg.text.size()), rng);
                    cand += sub ? *sub : seg.text;
                }
                if (cand.size() < 3 || cand.size() > 12) continue;
                if (seed_set.count(cand) || produced.count(cand)) continue;
                if (t < kTriesPerCandidate / 2 && !inv.plausible(cand)) continue;
                candidates.push_back(cand);
                break;
            }
        }
        if (candidates.empty()) continue;
        const std::string& chosen = rng.pick(candidates);
        int64_t id = start_id + static_cast<int64_t>(lex.entries.size());
        produced.insert(chosen);
        lex.entries.push_back({id, WugMode::pseudoword, chosen});
    }
    return lex;
}

std::string surface_form(const WugEntry& entry, Number number) {
    if (entry.mode == WugMode::tag || number == Number::singular) return entry.stem;
    return entry.stem + "s";
}

void save_wug_lexicon(const std::filesystem::path& path, const WugLexicon& lex) {
    std::vector<std::string> lines;
    lines.reserve(lex.entries.size());
    for (const auto& e : lex.entries) {
        nlohmann::json j{{"id", e.id}, {"mode", wug_mode_name(e.mode)}, {"stem", e.stem}};
        lines.push_back(j.dump());
    }
    write_lines_atomic(path, lines);
}

WugLexicon load_wug_lexicon(const std::filesystem::path& path) {
    WugLexicon lex;
    std::set<int64_t> seen;
    bool first = true;
    for (const auto& line : read_lines(path)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        WugEntry e;
        e.id = j.at("id").get<int64_t>();
        e.mode = wug_mode_from_name(j.at("mode").get<std::string>());
        e.stem = j.at("stem").get<std::string>();
        if (!seen.insert(e.id).second) {
            throw Error("duplicate wug id in lexicon file: " + std::to_string(e.id));
        }
        if (first) {
            lex.mode = e.mode;
            first = false;
        } else if (e.mode != lex.mode) {
            throw Error("mixed wug modes in lexicon file: " + path.string());
        }
        lex.entries.push_back(std::move(e));
    }
    return lex;
}

std::vector<std::string> load_word_list(const std::filesystem::path& path) {
    std::vector<std::string> words;
    for (const auto& line : read_lines(path)) {
        auto toks = split_ws(line);
        for (auto& t : toks) words.push_back(std::move(t));
    }
    return words;
}

} // namespace wuglab
