#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wuglab/scorer.hpp"
#include "wuglab/template_engine.hpp"

namespace wuglab {

enum class Method { sentence_pll, wug_level, antecedent_level };
const char* method_name(Method m);
Method method_from_name(const std::string& name);

// Token sequence prepared for scoring: bos/eos wrapped; `scoreable` marks
// positions that enter the PLL sum (everything except the core specials;
// wug tags count as words).
struct ScoredSentence {
    std::vector<int> ids;
    std::vector<uint8_t> scoreable;
    std::vector<int> wug_positions;
};

struct ScoredPair {
    int64_t pair_id = 0;
    ScoredSentence good, bad;
};

ScoredSentence prepare_sentence(const TokenizerModel& tok, const std::string& sentence,
                                const std::string& wug_surface);
ScoredPair prepare_pair(const TokenizerModel& tok, const MinimalPair& pair);

// Length-normalized pseudo-likelihood: mean over scoreable positions of
// log P(token | sequence with that position masked).
double pll(const Scorer& scorer, const ScoredSentence& sentence);

struct PairScore {
    double good_score = 0.0;
    double bad_score = 0.0;
    bool correct = false;
    bool tie = false;
};

PairScore score_pair(const Scorer& scorer, const ScoredPair& pair, Method method);

struct EvalResult {
    std::string phenomenon;
    std::string evidence;
    int64_t n = 0;
    uint64_t seed = 0;
    double init_std = 0.02;
    std::string wug_mode;
    std::string method;
    double accuracy = 0.0;
    int64_t num_pairs = 0;
    int64_t tie_count = 0;
};

struct ResultMeta {
    std::string phenomenon;
    std::string evidence;
    int64_t n = 0;
    uint64_t seed = 0;
    double init_std = 0.02;
    std::string wug_mode;
};

// Ties count as incorrect; aggregation is order-independent.
EvalResult accuracy(const Scorer& scorer, const std::vector<ScoredPair>& pairs, Method method,
                    const ResultMeta& meta);

} // namespace wuglab
