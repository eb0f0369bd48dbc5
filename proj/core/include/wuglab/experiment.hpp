#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wuglab/adamw.hpp"
#include "wuglab/bpe.hpp"
#include "wuglab/corpus.hpp"
#include "wuglab/evaluator.hpp"
#include "wuglab/interference.hpp"
#include "wuglab/masking.hpp"
#include "wuglab/template_engine.hpp"

namespace wuglab {

struct ExperimentConfig {
    std::vector<Phenomenon> phenomena;
    std::vector<EvidenceLevel> evidence{EvidenceLevel::de, EvidenceLevel::lexie,
                                        EvidenceLevel::synie};
    std::vector<int64_t> freq_grid{0, 1, 5, 25, 50, 75, 100};
    std::vector<uint64_t> seeds{0};
    std::vector<double> init_stds{0.02};
    WugMode wug_mode = WugMode::tag;
    std::vector<Method> methods{Method::sentence_pll};
    std::string scale = "toy";

    ModelConfig model;
    OptimizerConfig optim;
    MaskingPolicy masking;

    int64_t pairs_per_phenomenon = 100;
    int synth_sentences = 20000;
    int bpe_vocab = 2000;
    int interference_wugs = 100;
    bool interference = false;

    std::string corpus_path;  // empty: deterministic synthetic corpus
    std::string data_dir = "data";
    std::string out_dir = "out";
    uint64_t data_seed = 1234; // template expansion / corpus shuffling

    void validate() const;
};

// Defaults per scale: "toy" (bundled synthetic corpus, 2-layer model) or
// "paper" (the published hyperparameters; bring your own corpus).
ExperimentConfig config_preset(const std::string& scale);
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& config);

struct RunKey {
    std::string phenomenon;
    std::string evidence; // "none" for the n=0 baseline; "int_*" for interference runs
    int64_t n = 0;
    uint64_t seed = 0;
    double init_std = 0.02;
    std::string wug_mode;

    std::string id() const; // filesystem-safe, unique within a plan
};

// Main grid: per (seed, std), each phenomenon gets one shared n=0 baseline
// plus evidence x nonzero-n runs; interference adds the Table-3 kinds for
// anaphor gender agreement.
std::vector<RunKey> plan_grid(const ExperimentConfig& config);

// ---- result store ----

class ResultStore {
  public:
    static constexpr const char* kHeader =
        "phenomenon,evidence,n,seed,init_std,wug_mode,method,accuracy,num_pairs,tie_count";

    explicit ResultStore(std::filesystem::path csv_path);

    void append(const std::vector<EvalResult>& new_rows); // atomic rewrite
    const std::vector<EvalResult>& rows() const { return rows_; }
    const std::filesystem::path& path() const { return csv_path_; }

    static std::string to_csv_row(const EvalResult& r);
    static std::vector<EvalResult> parse_csv(const std::filesystem::path& path);

  private:
    void persist() const;
    std::filesystem::path csv_path_;
    std::vector<EvalResult> rows_;
};

// ---- execution ----

class ExperimentContext {
  public:
    explicit ExperimentContext(const ExperimentConfig& config);

    const CleanCorpus& corpus();
    const TokenizerModel& tokenizer();
    const ExpandResult& expansion(Phenomenon ph);
    const WugLexicon& wugs(Phenomenon ph);
    const WugLexicon& interference_wugs();
    const Lexicon& pools();
    int64_t total_wugs() const;

    const ExperimentConfig& config() const { return config_; }

  private:
    ExperimentConfig config_;
    std::optional<CleanCorpus> corpus_;
    std::optional<TokenizerModel> tokenizer_;
    std::optional<Lexicon> pools_;
    std::map<Phenomenon, ExpandResult> expansions_;
    std::map<Phenomenon, WugLexicon> wug_lexicons_;
    std::optional<WugLexicon> interference_wugs_;
    std::optional<WugLexicon> pseudo_all_;
    const WugLexicon& pseudo_pool();
};

struct RunOutcome {
    std::vector<EvalResult> rows;
    bool from_cache = false;
    std::string error; // non-empty when the run failed
};

// Full pipeline for one key: build instances, inject, train (cached by
// stream/model hash), evaluate with every configured method. Errors are
// captured, not thrown, so a grid keeps going.
RunOutcome execute(const RunKey& key, ExperimentContext& ctx, ResultStore& store,
                   bool force = false);

// ---- ablation summary ----

struct AblationRow {
    std::string phenomenon;
    double init_std = 0.0;
    double mean = 0.0;
    double stddev = 0.0; // sample standard deviation
    int64_t n_seeds = 0;
};

// Mean +- sample std of accuracy per (phenomenon, init_std) group; throws
// InsufficientSeeds when any group has fewer than two rows.
std::vector<AblationRow> summarize_ablation(const std::vector<EvalResult>& rows);

} // namespace wuglab
