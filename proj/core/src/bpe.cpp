#include "wuglab/bpe.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "wuglab/errors.hpp"
#include "wuglab/util.hpp"

namespace wuglab {

namespace {

constexpr const char* kCont = "##";

bool is_continuation(const std::string& sym) {
    return sym.size() >= 2 && sym[0] == '#' && sym[1] == '#';
}

std::string strip_continuation(const std::string& sym) {
    return is_continuation(sym) ? sym.substr(2) : sym;
}

std::string merge_symbols(const std::string& left, const std::string& right) {
    return left + strip_continuation(right);
}

// UTF-8 code point lengths; invalid lead bytes are treated as length 1.
int cp_len(unsigned char c) {
    if (c < 0x80) return 1;
    if ((c >> 5) == 0x6) return 2;
    if ((c >> 4) == 0xe) return 3;
    if ((c >> 3) == 0x1e) return 4;
    return 1;
}

// Splits a word (no whitespace) into initial symbols: first code point
// plain, the rest with the continuation prefix. `continuation_start` marks
// fragments that continue a word after an embedded special token.
std::vector<std::string> word_symbols(std::string_view word, bool continuation_start) {
    std::vector<std::string> syms;
    size_t i = 0;
    bool first = true;
    while (i < word.size()) {
        int len = cp_len(static_cast<unsigned char>(word[i]));
        if (i + static_cast<size_t>(len) > word.size()) len = 1;
        std::string cp(word.substr(i, static_cast<size_t>(len)));
        if (first && !continuation_start) {
            syms.push_back(cp);
        } else {
            syms.push_back(kCont + cp);
        }
        first = false;
        i += static_cast<size_t>(len);
    }
    return syms;
}

uint64_t pack_pair(int a, int b) {
    return (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32) | static_cast<uint32_t>(b);
}

// ---- trainer ----

struct Trainer {
    std::vector<std::string> sym_text;                  // local symbol table
    std::unordered_map<std::string, int> sym_id;

    struct Word {
        std::vector<int> syms;
        int64_t freq = 0;
    };
    std::vector<Word> words;

    std::unordered_map<uint64_t, int64_t> pair_count;
    std::unordered_map<uint64_t, std::set<int>> pair_words;

    int intern(const std::string& s) {
        auto it = sym_id.find(s);
        if (it != sym_id.end()) return it->second;
        int id = static_cast<int>(sym_text.size());
        sym_text.push_back(s);
        sym_id.emplace(s, id);
        return id;
    }

    void add_word_pairs(int w, int sign) {
        const auto& syms = words[static_cast<size_t>(w)].syms;
        int64_t f = words[static_cast<size_t>(w)].freq * sign;
        for (size_t i = 0; i + 1 < syms.size(); ++i) {
            uint64_t key = pack_pair(syms[i], syms[i + 1]);
            pair_count[key] += f;
            if (sign > 0) {
                pair_words[key].insert(w);
            }
        }
    }

    // Best pair by count, ties broken on the symbol strings.
    bool best_pair(uint64_t* out) const {
        int64_t best_count = 1; // a pair must repeat to be worth a merge
        const std::string* best_l = nullptr;
        const std::string* best_r = nullptr;
        uint64_t best_key = 0;
        bool found = false;
        for (const auto& [key, count] : pair_count) {
            if (count < best_count) continue;
            const std::string& l = sym_text[key >> 32];
            const std::string& r = sym_text[key & 0xffffffffu];
            if (count > best_count) {
                best_count = count;
            } else if (found) {
                if (l > *best_l || (l == *best_l && r >= *best_r)) continue;
            }
            best_l = &l;
            best_r = &r;
            best_key = key;
            found = true;
        }
        if (found && pair_count.at(best_key) >= 2) {
            *out = best_key;
            return true;
        }
        return false;
    }

    void apply_merge(uint64_t key, int merged_sym) {
        int left = static_cast<int>(key >> 32);
        int right = static_cast<int>(key & 0xffffffffu);
        auto touched = pair_words[key]; // copy; rewriting words mutates the index
        for (int w : touched) {
            auto& word = words[static_cast<size_t>(w)];
            add_word_pairs(w, -1);
            for (size_t i = 0; i + 1 < word.syms.size();) {
                if (word.syms[i] == left && word.syms[i + 1] == right) {
                    word.syms[i] = merged_sym;
                    word.syms.erase(word.syms.begin() + static_cast<long>(i) + 1);
                } else {
                    ++i;
                }
            }
            add_word_pairs(w, +1);
        }
        // Drop exhausted counters so the scan stays tight.
        for (auto it = pair_count.begin(); it != pair_count.end();) {
            if (it->second <= 0) {
                pair_words.erase(it->first);
                it = pair_count.erase(it);
            } else {
                ++it;
            }
        }
    }
};

} // namespace

int TokenizerModel::id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    if (it == token_to_id.end()) throw Error("token not in vocabulary: " + token);
    return it->second;
}

void TokenizerModel::rebuild_index() {
    token_to_id.clear();
    for (size_t i = 0; i < vocab.size(); ++i) token_to_id.emplace(vocab[i], static_cast<int>(i));
    merge_rank.clear();
    for (size_t r = 0; r < merges.size(); ++r) {
        int a = id_of(merges[r].first);
        int b = id_of(merges[r].second);
        merge_rank.emplace(pack_pair(a, b), static_cast<int>(r));
    }
}

TokenizerModel train_bpe(const std::vector<std::string>& corpus_lines, int vocab_size,
                         const std::vector<std::string>& extra_specials) {
    TokenizerModel model;
    model.specials = {kPadToken, kMaskToken, kBosToken, kEosToken, kUnkToken};
    for (const auto& s : extra_specials) {
        if (std::find(model.specials.begin(), model.specials.end(), s) == model.specials.end()) {
            model.specials.push_back(s);
        }
    }

    // Word frequencies.
    std::unordered_map<std::string, int64_t> word_freq;
    for (const auto& line : corpus_lines) {
        for (auto& w : split_ws(line)) word_freq[w] += 1;
    }

    Trainer tr;
    std::map<std::string, int64_t> sorted_words(word_freq.begin(), word_freq.end());
    for (const auto& [w, f] : sorted_words) {
        Trainer::Word word;
        for (const auto& s : word_symbols(w, false)) word.syms.push_back(tr.intern(s));
        word.freq = f;
        tr.words.push_back(std::move(word));
    }
    for (size_t i = 0; i < tr.words.size(); ++i) tr.add_word_pairs(static_cast<int>(i), +1);

    // Alphabet closed over continuation variants: every observed character
    // gets both its plain and "##" form, so fragments that only occur after
    // an embedded special token (e.g. the plural "s" of "<wug#5>s") stay
    // encodable even when the corpus never shows them word-internally.
    std::set<std::string> alphabet_set;
    for (const auto& sym : tr.sym_text) {
        alphabet_set.insert(sym);
        std::string bare = strip_continuation(sym);
        alphabet_set.insert(bare);
        alphabet_set.insert(kCont + bare);
    }
    std::vector<std::string> alphabet(alphabet_set.begin(), alphabet_set.end());

    size_t reserved = model.specials.size() + alphabet.size();
    if (static_cast<size_t>(vocab_size) < reserved) {
        throw CorpusTooSmall("vocab_size " + std::to_string(vocab_size) +
                             " below specials+alphabet " + std::to_string(reserved));
    }

    model.vocab = model.specials;
    model.vocab.insert(model.vocab.end(), alphabet.begin(), alphabet.end());

    int64_t budget = vocab_size - static_cast<int64_t>(model.vocab.size());
    for (int64_t m = 0; m < budget; ++m) {
        uint64_t key;
        if (!tr.best_pair(&key)) break;
        const std::string left = tr.sym_text[key >> 32];
        const std::string right = tr.sym_text[key & 0xffffffffu];
        std::string merged = merge_symbols(left, right);
        int merged_sym = tr.intern(merged);
        tr.apply_merge(key, merged_sym);
        model.merges.emplace_back(left, right);
        model.vocab.push_back(merged);
    }

    model.rebuild_index();
    return model;
}

namespace {

struct Piece {
    std::string sym;
    int begin = 0;
    int end = 0;
    bool special = false;
};

// Applies merges by rank within one word fragment.
void bpe_merge_loop(const TokenizerModel& model, std::vector<Piece>& pieces) {
    auto rank_of = [&](const Piece& a, const Piece& b) -> int {
        auto ia = model.token_to_id.find(a.sym);
        auto ib = model.token_to_id.find(b.sym);
        if (ia == model.token_to_id.end() || ib == model.token_to_id.end()) return -1;
        auto it = model.merge_rank.find(pack_pair(ia->second, ib->second));
        return it == model.merge_rank.end() ? -1 : it->second;
    };
    for (;;) {
        int best_rank = -1;
        size_t best_i = 0;
        for (size_t i = 0; i + 1 < pieces.size(); ++i) {
            int r = rank_of(pieces[i], pieces[i + 1]);
            if (r >= 0 && (best_rank < 0 || r < best_rank)) {
                best_rank = r;
                best_i = i;
            }
        }
        if (best_rank < 0) break;
        pieces[best_i].sym = merge_symbols(pieces[best_i].sym, pieces[best_i + 1].sym);
        pieces[best_i].end = pieces[best_i + 1].end;
        pieces.erase(pieces.begin() + static_cast<long>(best_i) + 1);
    }
}

} // namespace

TokenSeq encode(const TokenizerModel& model, std::string_view sentence) {
    // Specials sorted longest-first for leftmost-longest matching.
    std::vector<const std::string*> specials_by_len;
    for (const auto& s : model.specials) specials_by_len.push_back(&s);
    std::sort(specials_by_len.begin(), specials_by_len.end(),
              [](const std::string* a, const std::string* b) {
                  if (a->size() != b->size()) return a->size() > b->size();
                  return *a < *b;
              });

    TokenSeq out;
    size_t i = 0;
    while (i < sentence.size()) {
        while (i < sentence.size() && sentence[i] == ' ') ++i;
        if (i >= sentence.size()) break;
        size_t word_start = i;
        while (i < sentence.size() && sentence[i] != ' ') ++i;
        std::string_view word = sentence.substr(word_start, i - word_start);

        // Split the word around embedded special tokens.
        std::vector<Piece> pieces;
        size_t frag_start = 0;
        size_t p = 0;
        bool after_special = false;
        auto flush_fragment = [&](size_t end) {
            if (end <= frag_start) return;
            std::string_view frag = word.substr(frag_start, end - frag_start);
            std::vector<Piece> frag_pieces;
            size_t off = frag_start;
            for (const auto& sym : word_symbols(frag, after_special)) {
                int len = static_cast<int>(strip_continuation(sym).size());
                frag_pieces.push_back({sym, static_cast<int>(word_start + off),
                                       static_cast<int>(word_start + off) + len, false});
                off += static_cast<size_t>(len);
            }
            bpe_merge_loop(model, frag_pieces);
            for (auto& fp : frag_pieces) pieces.push_back(std::move(fp));
        };
        while (p < word.size()) {
            const std::string* matched = nullptr;
            for (const auto* s : specials_by_len) {
                if (s->size() > 0 && word.size() - p >= s->size() &&
                    word.compare(p, s->size(), *s) == 0) {
                    matched = s;
                    break;
                }
            }
            if (matched) {
                flush_fragment(p);
                pieces.push_back({*matched, static_cast<int>(word_start + p),
                                  static_cast<int>(word_start + p + matched->size()), true});
                p += matched->size();
                frag_start = p;
                after_special = true;
            } else {
                p += static_cast<size_t>(cp_len(static_cast<unsigned char>(word[p])));
            }
        }
        flush_fragment(word.size());

        for (const auto& piece : pieces) {
            auto it = model.token_to_id.find(piece.sym);
            out.ids.push_back(it == model.token_to_id.end() ? model.unk_id : it->second);
            out.offsets.push_back({piece.begin, piece.end});
        }
    }
    return out;
}

std::string decode(const TokenizerModel& model, const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= static_cast<int>(model.vocab.size())) {
            throw UnknownId("token id out of range: " + std::to_string(id));
        }
        const std::string& tok = model.vocab[static_cast<size_t>(id)];
        if (is_continuation(tok) && !model.is_special(id)) {
            out += strip_continuation(tok);
        } else {
            if (!out.empty()) out += ' ';
            out += tok;
        }
    }
    return out;
}

void save_tokenizer(const std::filesystem::path& path, const TokenizerModel& model) {
    nlohmann::json merges = nlohmann::json::array();
    for (const auto& [a, b] : model.merges) merges.push_back({a, b});
    nlohmann::json j{{"schema_version", model.schema_version},
                     {"specials", model.specials},
                     {"vocab", model.vocab},
                     {"merges", merges}};
    write_file_atomic(path, j.dump() + "\n");
}

TokenizerModel load_tokenizer(const std::filesystem::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    TokenizerModel model;
    model.schema_version = j.at("schema_version").get<int>();
    model.specials = j.at("specials").get<std::vector<std::string>>();
    model.vocab = j.at("vocab").get<std::vector<std::string>>();
    for (const auto& m : j.at("merges")) {
        model.merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
    model.rebuild_index();
    return model;
}

} // namespace wuglab
