#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wuglab {

// Byte-pair tokenizer trained from scratch. Words are pre-tokenized on
// whitespace; non-initial pieces carry a "##" continuation prefix, which
// keeps decoding unambiguous when an atomic special token sits at either
// end of a word (e.g. "<wug#5>s" -> [<wug#5>, ##s]).
struct TokenizerModel {
    int schema_version = 1;
    std::vector<std::string> vocab;   // id -> token; specials first
    std::vector<std::pair<std::string, std::string>> merges;
    std::vector<std::string> specials; // pad, mask, bos, eos, unk, then extras

    int pad_id = 0, mask_id = 1, bos_id = 2, eos_id = 3, unk_id = 4;

    std::unordered_map<std::string, int> token_to_id;
    std::unordered_map<uint64_t, int> merge_rank; // packed symbol-id pair -> rank

    bool is_special(int id) const { return id >= 0 && id < static_cast<int>(specials.size()); }
    bool is_core_special(int id) const { return id >= 0 && id < 5; }
    int id_of(const std::string& token) const;

    void rebuild_index();
};

inline const char* kPadToken = "<pad>";
inline const char* kMaskToken = "<mask>";
inline const char* kBosToken = "<bos>";
inline const char* kEosToken = "<eos>";
inline const char* kUnkToken = "<unk>";

struct TokenSpan {
    int begin = 0; // byte offsets into the source sentence
    int end = 0;
};

struct TokenSeq {
    std::vector<int> ids;
    std::vector<TokenSpan> offsets;
};

// Greedy highest-frequency pair merging until vocab_size is reached or no
// pair occurs twice; ties break lexicographically on (left, right). The
// extra specials (wug tags) are reserved verbatim ahead of the alphabet.
TokenizerModel train_bpe(const std::vector<std::string>& corpus_lines, int vocab_size,
                         const std::vector<std::string>& extra_specials);

TokenSeq encode(const TokenizerModel& model, std::string_view sentence);
std::string decode(const TokenizerModel& model, const std::vector<int>& ids);

void save_tokenizer(const std::filesystem::path& path, const TokenizerModel& model);
TokenizerModel load_tokenizer(const std::filesystem::path& path);

} // namespace wuglab
