#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace wuglab {

// One lexical entry with named surface forms. Nouns carry "sg"/"pl" (and
// optionally "gender"); verbs carry "base"/"pres_sg"/"pres_pl"/"past"/
// "prog"/"part"; single-form entries just use "word".
struct LexEntry {
    std::map<std::string, std::string> forms;

    const std::string& form(const std::string& key) const;
    bool has(const std::string& key) const { return forms.count(key) != 0; }
};

using Pool = std::vector<LexEntry>;

struct Lexicon {
    std::map<std::string, Pool> pools;

    const Pool& pool(const std::string& name) const;
    bool has_pool(const std::string& name) const { return pools.count(name) != 0; }
    void merge(const Lexicon& other);
};

// JSON Lines, one entry per line: {"pool":"dn_subj","sg":"senator","pl":"senators"}
Lexicon load_lexicon(const std::filesystem::path& path);

} // namespace wuglab
