#pragma once

#include <map>
#include <string>
#include <vector>

#include "wuglab/bpe.hpp"
#include "wuglab/checkpoint.hpp"

namespace wuglab {

// A probability source: given a token sequence and one masked position,
// yields log-probabilities over the vocabulary. Realized by a trained
// checkpoint or by a fixed lookup table in tests.
struct Scorer {
    virtual ~Scorer() = default;

    // log P(targets[i] | ids with positions[i] masked), each masked one at a time.
    virtual std::vector<double> masked_token_logprobs(const std::vector<int>& ids,
                                                      const std::vector<int>& positions,
                                                      const std::vector<int>& targets) const = 0;

    // Full log-probability row at one masked position.
    virtual std::vector<double> masked_distribution(const std::vector<int>& ids,
                                                    int position) const = 0;
};

class ModelScorer : public Scorer {
  public:
    ModelScorer(const Checkpoint& ckpt, const TokenizerModel& tok);

    std::vector<double> masked_token_logprobs(const std::vector<int>& ids,
                                              const std::vector<int>& positions,
                                              const std::vector<int>& targets) const override;
    std::vector<double> masked_distribution(const std::vector<int>& ids, int position) const override;

    const TokenizerModel& tokenizer() const { return tok_; }

  private:
    ModelConfig cfg_;
    ModelParams<float> params_;
    TokenizerModel tok_;
};

// Test-oracle backend: distributions registered per (sequence, masked
// position); probabilities are normalized on insert.
class TableScorer : public Scorer {
  public:
    explicit TableScorer(int vocab_size) : vocab_size_(vocab_size) {}

    void set(const std::vector<int>& ids, int position, const std::vector<double>& probs);

    std::vector<double> masked_token_logprobs(const std::vector<int>& ids,
                                              const std::vector<int>& positions,
                                              const std::vector<int>& targets) const override;
    std::vector<double> masked_distribution(const std::vector<int>& ids, int position) const override;

  private:
    static std::string key(const std::vector<int>& ids, int position);
    int vocab_size_;
    std::map<std::string, std::vector<double>> table_;
};

} // namespace wuglab
