#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wuglab/lexicon.hpp"

namespace wuglab {

// Deterministic English-like base corpus for the toy scale. Sentences are
// sampled from a small clause grammar over the bundled word pools, with
// number, gender and determiner agreement kept consistent so a compact
// model has regularities to pick up. Output lines are unique, lowercase
// and period-free.
std::vector<std::string> synth_corpus(const Lexicon& pools, int sentences, uint64_t rng_seed);

} // namespace wuglab
