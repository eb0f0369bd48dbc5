#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wuglab {

// How a coined word surfaces in text. Tag renders as the literal "<wug#N>"
// and never inflects; TagWithMorph uses the same tag but takes plural "s";
// Pseudoword is a generated letter string that inflects like a regular noun.
enum class WugMode { tag, tag_with_morph, pseudoword };

enum class Number { singular, plural };

const char* wug_mode_name(WugMode m);
WugMode wug_mode_from_name(const std::string& name);

struct WugEntry {
    int64_t id = 0;
    WugMode mode = WugMode::tag;
    std::string stem;
};

struct WugLexicon {
    WugMode mode = WugMode::tag;
    std::vector<WugEntry> entries;

    const WugEntry& by_id(int64_t id) const;
};

// Sequential tag entries with stems "<wug#ID>", ids start_id .. start_id+count-1.
WugLexicon make_tag_lexicon(int64_t count, int64_t start_id, WugMode mode);

// Wuggy-style generation: each output substitutes the onset/nucleus/coda
// segments of one seed noun with same-class segments drawn from the whole
// seed lexicon, filtered for attested character bigrams. Candidates equal to
// any seed word are rejected. Deterministic in rng_seed. Throws
// GenerationExhausted when the bounded rejection loop cannot reach `count`.
WugLexicon generate_pseudowords(const std::vector<std::string>& seed_lexicon,
                                int per_seed, int count, uint64_t rng_seed,
                                int64_t start_id = 0);

std::string surface_form(const WugEntry& entry, Number number);

// JSON Lines: {"id":N,"mode":"tag","stem":"<wug#N>"} per entry.
void save_wug_lexicon(const std::filesystem::path& path, const WugLexicon& lex);
WugLexicon load_wug_lexicon(const std::filesystem::path& path);

// One word per line, blank lines ignored.
std::vector<std::string> load_word_list(const std::filesystem::path& path);

} // namespace wuglab
