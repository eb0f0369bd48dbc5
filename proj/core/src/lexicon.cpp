#include "wuglab/lexicon.hpp"

#include <nlohmann/json.hpp>

#include "wuglab/errors.hpp"
#include "wuglab/util.hpp"

namespace wuglab {

const std::string& LexEntry::form(const std::string& key) const {
    auto it = forms.find(key);
    if (it == forms.end()) {
        throw ValidationError("lexical entry lacks form '" + key + "'");
    }
    return it->second;
}

const Pool& Lexicon::pool(const std::string& name) const {
    auto it = pools.find(name);
    if (it == pools.end()) throw ValidationError("unknown lexicon pool: " + name);
    return it->second;
}

void Lexicon::merge(const Lexicon& other) {
    for (const auto& [name, pool] : other.pools) {
        auto& dst = pools[name];
        dst.insert(dst.end(), pool.begin(), pool.end());
    }
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    Lexicon lex;
    int line_no = 0;
    for (const auto& line : read_lines(path)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("pool")) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) +
                             ": expected an object with a \"pool\" field");
        }
        LexEntry entry;
        std::string pool_name;
        for (auto& [key, value] : j.items()) {
            if (key == "pool") {
                pool_name = value.get<std::string>();
            } else {
                entry.forms[key] = value.get<std::string>();
            }
        }
        if (entry.forms.empty()) {
            throw ParseError(path.string() + ":" + std::to_string(line_no) + ": entry has no forms");
        }
        lex.pools[pool_name].push_back(std::move(entry));
    }
    return lex;
}

} // namespace wuglab
