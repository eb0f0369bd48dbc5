#include "wuglab/evaluator.hpp"

#include <algorithm>

#include "wuglab/errors.hpp"

namespace wuglab {

const char* method_name(Method m) {
    switch (m) {
        case Method::sentence_pll: return "sentence_pll";
        case Method::wug_level: return "wug_level";
        case Method::antecedent_level: return "antecedent_level";
    }
    return "sentence_pll";
}

Method method_from_name(const std::string& name) {
    if (name == "sentence_pll") return Method::sentence_pll;
    if (name == "wug_level") return Method::wug_level;
    if (name == "antecedent_level") return Method::antecedent_level;
    throw Error("unknown scoring method: " + name);
}

ScoredSentence prepare_sentence(const TokenizerModel& tok, const std::string& sentence,
                                const std::string& wug_surface) {
    if (sentence.empty()) throw EmptySentence("cannot score an empty sentence");

    // The wug occurrence is the whitespace word containing its surface.
    int word_begin = -1, word_end = -1;
    if (!wug_surface.empty()) {
        size_t at = sentence.find(wug_surface);
        if (at == std::string::npos) {
            throw SpanNotFound("wug surface '" + wug_surface + "' not in: " + sentence);
        }
        size_t b = at;
        while (b > 0 && sentence[b - 1] != ' ') --b;
        size_t e = at + wug_surface.size();
        while (e < sentence.size() && sentence[e] != ' ') ++e;
        word_begin = static_cast<int>(b);
        word_end = static_cast<int>(e);
    }

    TokenSeq seq = encode(tok, sentence);
    ScoredSentence out;
    out.ids.push_back(tok.bos_id);
    out.scoreable.push_back(0);
    for (size_t i = 0; i < seq.ids.size(); ++i) {
        int pos = static_cast<int>(out.ids.size());
        out.ids.push_back(seq.ids[i]);
        out.scoreable.push_back(tok.is_core_special(seq.ids[i]) ? 0 : 1);
        if (word_begin >= 0 && seq.offsets[i].begin < word_end && seq.offsets[i].end > word_begin) {
            out.wug_positions.push_back(pos);
        }
    }
    out.ids.push_back(tok.eos_id);
    out.scoreable.push_back(0);
    return out;
}

ScoredPair prepare_pair(const TokenizerModel& tok, const MinimalPair& pair) {
    ScoredPair out;
    out.pair_id = pair.pair_id;
    out.good = prepare_sentence(tok, pair.good, pair.wug_surface);
    out.bad = prepare_sentence(tok, pair.bad, pair.wug_surface);
    return out;
}

namespace {

double masked_sum(const Scorer& scorer, const ScoredSentence& s, const std::vector<int>& positions) {
    std::vector<int> targets(positions.size());
    for (size_t i = 0; i < positions.size(); ++i) {
        targets[i] = s.ids[static_cast<size_t>(positions[i])];
    }
    auto logprobs = scorer.masked_token_logprobs(s.ids, positions, targets);
    double sum = 0.0;
    for (double lp : logprobs) sum += lp;
    return sum;
}

std::vector<int> scoreable_positions(const ScoredSentence& s) {
    std::vector<int> out;
    for (size_t i = 0; i < s.ids.size(); ++i) {
        if (s.scoreable[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

// The differing token span of a pair: strip the longest common prefix and
// suffix of the id sequences.
std::pair<std::vector<int>, std::vector<int>> differing_spans(const ScoredSentence& a,
                                                              const ScoredSentence& b) {
    const auto& x = a.ids;
    const auto& y = b.ids;
    size_t prefix = 0;
    while (prefix < x.size() && prefix < y.size() && x[prefix] == y[prefix]) ++prefix;
    size_t suffix = 0;
    while (suffix < x.size() - prefix && suffix < y.size() - prefix &&
           x[x.size() - 1 - suffix] == y[y.size() - 1 - suffix]) {
        ++suffix;
    }
    std::vector<int> span_a, span_b;
    for (size_t i = prefix; i < x.size() - suffix; ++i) span_a.push_back(static_cast<int>(i));
    for (size_t i = prefix; i < y.size() - suffix; ++i) span_b.push_back(static_cast<int>(i));
    return {span_a, span_b};
}

} // namespace

double pll(const Scorer& scorer, const ScoredSentence& sentence) {
    auto positions = scoreable_positions(sentence);
    if (positions.empty()) throw EmptySentence("no scoreable tokens");
    return masked_sum(scorer, sentence, positions) / static_cast<double>(positions.size());
}

PairScore score_pair(const Scorer& scorer, const ScoredPair& pair, Method method) {
    PairScore score;
    switch (method) {
        case Method::sentence_pll:
            score.good_score = pll(scorer, pair.good);
            score.bad_score = pll(scorer, pair.bad);
            break;
        case Method::wug_level: {
            if (pair.good.wug_positions.empty() || pair.bad.wug_positions.empty()) {
                throw SpanNotFound("wug-level scoring requires wug positions in both members");
            }
            score.good_score = masked_sum(scorer, pair.good, pair.good.wug_positions);
            score.bad_score = masked_sum(scorer, pair.bad, pair.bad.wug_positions);
            break;
        }
        case Method::antecedent_level: {
            auto [span_good, span_bad] = differing_spans(pair.good, pair.bad);
            if (span_good.empty() || span_bad.empty()) {
                throw SpanNotFound("pair has no two-sided differing span");
            }
            score.good_score = masked_sum(scorer, pair.good, span_good);
            score.bad_score = masked_sum(scorer, pair.bad, span_bad);
            break;
        }
    }
    score.tie = score.good_score == score.bad_score;
    score.correct = score.good_score > score.bad_score;
    return score;
}

EvalResult accuracy(const Scorer& scorer, const std::vector<ScoredPair>& pairs, Method method,
                    const ResultMeta& meta) {
    if (pairs.empty()) throw Error("accuracy: empty evaluation set");
    int64_t correct = 0, ties = 0;
    for (const auto& pair : pairs) {
        PairScore s = score_pair(scorer, pair, method);
        if (s.correct) ++correct;
        if (s.tie) ++ties;
    }
    EvalResult result;
    result.phenomenon = meta.phenomenon;
    result.evidence = meta.evidence;
    result.n = meta.n;
    result.seed = meta.seed;
    result.init_std = meta.init_std;
    result.wug_mode = meta.wug_mode;
    result.method = method_name(method);
    result.num_pairs = static_cast<int64_t>(pairs.size());
    result.tie_count = ties;
    result.accuracy = static_cast<double>(correct) / static_cast<double>(pairs.size());
    return result;
}

} // namespace wuglab
