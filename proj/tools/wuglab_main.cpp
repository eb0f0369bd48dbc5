// Command-line front end: wug lexicons, template expansion, stream
// injection, tokenizer/model training, evaluation, experiment grids and
// reports.

#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "wuglab/bpe.hpp"
#include "wuglab/corpus.hpp"
#include "wuglab/errors.hpp"
#include "wuglab/evaluator.hpp"
#include "wuglab/experiment.hpp"
#include "wuglab/interference.hpp"
#include "wuglab/parallel.hpp"
#include "wuglab/report.hpp"
#include "wuglab/synth.hpp"
#include "wuglab/template_engine.hpp"
#include "wuglab/trainer.hpp"
#include "wuglab/util.hpp"

namespace fs = std::filesystem;
using namespace wuglab;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string data_dir = "data";
    std::string out;
    std::string scale = "toy";
    uint64_t seed = 0;
    bool force = false;
    int threads = 0;
};

ExperimentConfig resolve_config(const GlobalOpts& g) {
    ExperimentConfig config =
        g.config_path.empty() ? config_preset(g.scale) : load_config(g.config_path);
    if (!g.out.empty()) config.out_dir = g.out;
    if (g.data_dir != "data" || config.data_dir.empty()) config.data_dir = g.data_dir;
    return config;
}

int cmd_forge(const GlobalOpts& g, const std::string& mode_name, int64_t count,
              int64_t start_id, const std::string& seed_lexicon, int per_seed,
              const std::string& out_file) {
    WugMode mode = wug_mode_from_name(mode_name);
    WugLexicon lex;
    if (mode == WugMode::pseudoword) {
        if (seed_lexicon.empty()) {
            throw Error("pseudoword mode needs --seed-lexicon");
        }
        auto seeds = load_word_list(seed_lexicon);
        lex = generate_pseudowords(seeds, per_seed, static_cast<int>(count), g.seed, start_id);
    } else {
        lex = make_tag_lexicon(count, start_id, mode);
    }
    save_wug_lexicon(out_file, lex);
    std::printf("wrote %zu %s wugs to %s\n", lex.entries.size(), mode_name.c_str(),
                out_file.c_str());
    return 0;
}

int cmd_gen(const GlobalOpts& g, const std::string& phenomenon_name, int64_t pairs,
            const std::string& mode_name, int64_t start_id, const std::string& out_dir) {
    Phenomenon ph = phenomenon_from_name(phenomenon_name);
    WugMode mode = wug_mode_from_name(mode_name);
    Lexicon pools = load_lexicon(fs::path(g.data_dir) / "lexicons" / "pools.jsonl");
    auto templates =
        parse_template_file(fs::path(g.data_dir) / "templates" / (phenomenon_name + ".jsonl"));
    WugLexicon wugs;
    if (mode == WugMode::pseudoword) {
        auto seeds = load_word_list(fs::path(g.data_dir) / "lexicons" / "seed_nouns.txt");
        wugs = generate_pseudowords(seeds, 4, static_cast<int>(pairs),
                                    derive_seed(g.seed, "wuggy"), start_id);
    } else {
        wugs = make_tag_lexicon(pairs, start_id, mode);
    }
    BalanceSpec balance = balance_spec_for(ph, pairs, pools);
    ExpandResult result = expand(templates, pools, wugs, balance, g.seed);

    fs::path dir(out_dir);
    ensure_dir(dir);
    save_pairs(dir / "eval.jsonl", result.eval_set);
    save_instances(dir / "lexie.jsonl", result.train_sets.at(EvidenceLevel::lexie));
    save_instances(dir / "synie.jsonl", result.train_sets.at(EvidenceLevel::synie));
    save_instances(dir / "de.jsonl", derive_de(result.eval_set));
    save_wug_lexicon(dir / "wugs.jsonl", wugs);

    BalanceReport report = check_balance(result.eval_set, balance);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : report.rows) {
        rows.push_back({{"value", row.value},
                        {"expected", row.expected},
                        {"observed", row.observed},
                        {"pass", row.pass}});
    }
    nlohmann::json balance_json{{"rows", rows},
                                {"negation_rate", report.negation_rate},
                                {"negation_pass", report.negation_pass},
                                {"pass", report.pass}};
    write_file_atomic(dir / "balance.json", balance_json.dump(2) + "\n");
    std::printf("%s: %zu pairs, %zu lexie, %zu synie -> %s (balance %s)\n",
                phenomenon_name.c_str(), result.eval_set.size(),
                result.train_sets.at(EvidenceLevel::lexie).size(),
                result.train_sets.at(EvidenceLevel::synie).size(), out_dir.c_str(),
                report.pass ? "ok" : "FAILED");
    return report.pass ? 0 : 1;
}

int cmd_inject(const GlobalOpts& g, const std::string& corpus_path,
               const std::vector<std::string>& instance_files, int64_t n, int epochs,
               bool skip_preprocess, const std::string& out_dir) {
    std::vector<std::string> raw = read_lines(corpus_path);
    CleanCorpus corpus;
    if (skip_preprocess) {
        corpus.sentences = std::move(raw);
        corpus.source_id = corpus_path;
    } else {
        corpus = preprocess(raw, derive_seed(g.seed, "preprocess"), corpus_path);
    }
    std::vector<InjectedInstance> instances;
    for (const auto& file : instance_files) {
        for (const auto& inst : load_instances(file)) {
            instances.push_back({inst.instance_id(), inst.sentence});
        }
    }
    TrainingStream stream =
        build_stream(corpus, instances, n, epochs, derive_seed(g.seed, "inject"));
    save_stream(out_dir, stream);

    auto counts = verify_counts(stream.lines, instances);
    int64_t mismatches = 0;
    for (const auto& [id, count] : counts) {
        if (count != n) {
            ++mismatches;
            std::printf("MISMATCH %s: %lld != %lld\n", id.c_str(),
                        static_cast<long long>(count), static_cast<long long>(n));
        }
    }
    std::printf("stream: %zu lines (%zu base x %d + %zu instances x %lld) -> %s\n",
                stream.lines.size(), corpus.sentences.size(), epochs, instances.size(),
                static_cast<long long>(n), out_dir.c_str());
    std::printf("verify_counts: %zu instances, %lld mismatches\n", counts.size(),
                static_cast<long long>(mismatches));
    return mismatches == 0 ? 0 : 1;
}

int cmd_tok_train(const GlobalOpts& g, const std::string& corpus_path, int vocab_size,
                  int64_t wug_tags, const std::string& specials_file,
                  const std::string& out_file) {
    (void)g;
    auto lines = read_lines(corpus_path);
    std::vector<std::string> specials;
    for (int64_t i = 0; i < wug_tags; ++i) specials.push_back("<wug#" + std::to_string(i) + ">");
    if (!specials_file.empty()) {
        for (const auto& w : load_word_list(specials_file)) specials.push_back(w);
    }
    TokenizerModel tok = train_bpe(lines, vocab_size, specials);
    save_tokenizer(out_file, tok);
    std::printf("tokenizer: %zu vocab (%zu specials, %zu merges) -> %s\n", tok.vocab.size(),
                tok.specials.size(), tok.merges.size(), out_file.c_str());
    return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& stream_path,
              const std::string& tokenizer_path, const std::string& out_dir,
              const std::string& resume, int64_t checkpoint_every) {
    ExperimentConfig config = resolve_config(g);
    TokenizerModel tok = load_tokenizer(tokenizer_path);
    std::vector<std::string> stream = read_lines(stream_path);
    ModelConfig mc = config.model;
    mc.vocab_size = static_cast<int>(tok.vocab.size());
    TrainOptions opt;
    opt.out_dir = out_dir;
    opt.checkpoint_every = checkpoint_every;
    opt.quiet = false;
    if (!resume.empty()) opt.resume_from = resume;
    TrainResult result = train_mlm(stream, tok, mc, config.optim, config.masking, g.seed, opt);
    std::printf("trained %lld updates; final checkpoint %s\n",
                static_cast<long long>(result.updates), result.final_checkpoint.c_str());
    return 0;
}

int cmd_eval(const GlobalOpts& g, const std::string& ckpt_path, const std::string& tokenizer_path,
             const std::string& pairs_path, const std::vector<std::string>& method_names,
             const std::string& out_csv, const std::string& evidence, int64_t n,
             double init_std) {
    TokenizerModel tok = load_tokenizer(tokenizer_path);
    Checkpoint ckpt = load_checkpoint(ckpt_path);
    ModelScorer scorer(ckpt, tok);
    auto pairs = load_pairs(pairs_path);
    if (pairs.empty()) throw Error("no pairs in " + pairs_path);
    std::vector<ScoredPair> prepared;
    prepared.reserve(pairs.size());
    for (const auto& pair : pairs) prepared.push_back(prepare_pair(tok, pair));

    ResultMeta meta;
    meta.phenomenon = phenomenon_info(pairs.front().phenomenon).name;
    meta.evidence = evidence;
    meta.n = n;
    meta.seed = g.seed;
    meta.init_std = init_std;
    meta.wug_mode = "tag";

    std::vector<EvalResult> rows;
    for (const auto& name : method_names) {
        rows.push_back(accuracy(scorer, prepared, method_from_name(name), meta));
        std::printf("%s: accuracy %.4f over %lld pairs (%lld ties)\n", name.c_str(),
                    rows.back().accuracy, static_cast<long long>(rows.back().num_pairs),
                    static_cast<long long>(rows.back().tie_count));
    }
    if (!out_csv.empty()) {
        ResultStore store(out_csv);
        store.append(rows);
    }
    return 0;
}

int cmd_grid(const GlobalOpts& g) {
    ExperimentConfig config = resolve_config(g);
    ExperimentContext ctx(config);
    ensure_dir(config.out_dir);
    save_config(fs::path(config.out_dir) / "config.json", config);
    ResultStore store(fs::path(config.out_dir) / "results.csv");
    auto keys = plan_grid(config);
    std::printf("grid: %zu runs -> %s\n", keys.size(), config.out_dir.c_str());
    size_t failed = 0;
    for (size_t i = 0; i < keys.size(); ++i) {
        RunOutcome outcome = execute(keys[i], ctx, store, g.force);
        if (!outcome.error.empty()) {
            ++failed;
            std::printf("[%zu/%zu] %s FAILED: %s\n", i + 1, keys.size(), keys[i].id().c_str(),
                        outcome.error.c_str());
            continue;
        }
        double acc = outcome.rows.empty() ? 0.0 : outcome.rows.front().accuracy;
        std::printf("[%zu/%zu] %s%s accuracy %.4f\n", i + 1, keys.size(), keys[i].id().c_str(),
                    outcome.from_cache ? " (cached)" : "", acc);
        std::fflush(stdout);
    }
    std::printf("grid done: %zu/%zu runs ok; results at %s\n", keys.size() - failed, keys.size(),
                store.path().c_str());
    return failed == 0 ? 0 : 1;
}

int cmd_report(const GlobalOpts& g, const std::string& store_path, const std::string& out_dir) {
    (void)g;
    ResultStore store(store_path);
    if (store.rows().empty()) throw Error("empty result store: " + store_path);
    emit_report(store, out_dir);

    // ablation summary over n=0 rows when at least two seeds exist per group
    std::vector<EvalResult> baseline;
    for (const auto& row : store.rows()) {
        if (row.n == 0 && row.method == "sentence_pll") baseline.push_back(row);
    }
    std::map<std::pair<std::string, double>, int> group_sizes;
    for (const auto& row : baseline) group_sizes[{row.phenomenon, row.init_std}] += 1;
    bool enough = !baseline.empty();
    for (const auto& [key, size] : group_sizes) enough = enough && size >= 2;
    if (enough) {
        auto summary = summarize_ablation(baseline);
        std::vector<std::string> lines = {"phenomenon,init_std,mean,std,seeds"};
        for (const auto& row : summary) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%s,%g,%.6f,%.6f,%lld", row.phenomenon.c_str(),
                          row.init_std, row.mean, row.stddev,
                          static_cast<long long>(row.n_seeds));
            lines.emplace_back(buf);
        }
        write_lines_atomic(fs::path(out_dir) / "ablation.csv", lines);
    }
    std::printf("report: %zu rows -> %s\n", store.rows().size(), out_dir.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"controlled-evidence experiments for compact masked language models"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOpts g;
    app.add_option("--config", g.config_path, "experiment config JSON")->envname("WUGLAB_CONFIG");
    app.add_option("--data", g.data_dir, "bundled data directory (templates + lexicons)");
    app.add_option("--seed", g.seed, "base RNG seed");
    app.add_option("--out", g.out, "output directory override");
    app.add_option("--scale", g.scale, "preset: toy|paper")->check(CLI::IsMember({"toy", "paper"}));
    app.add_flag("--force", g.force, "re-run cached results");
    app.add_option("--threads", g.threads, "worker threads (default: hardware)");

    // forge
    auto* forge = app.add_subcommand("forge", "create a wug lexicon")->fallthrough();
    std::string forge_mode = "tag", forge_seeds, forge_out = "wugs.jsonl";
    int64_t forge_count = 600, forge_start = 0;
    int forge_per_seed = 4;
    forge->add_option("--mode", forge_mode, "tag|tag_with_morph|pseudoword");
    forge->add_option("--count", forge_count);
    forge->add_option("--start-id", forge_start);
    forge->add_option("--seed-lexicon", forge_seeds, "one noun per line (pseudoword mode)");
    forge->add_option("--per-seed", forge_per_seed, "candidates per seed noun");
    forge->add_option("--out-file", forge_out);

    // gen
    auto* gen = app.add_subcommand("gen", "expand templates into pairs and instances")->fallthrough();
    std::string gen_ph = "dn_agr", gen_mode = "tag", gen_out = "gen_out";
    int64_t gen_pairs = 600, gen_start = 0;
    gen->add_option("--phenomenon", gen_ph)->required();
    gen->add_option("--pairs", gen_pairs);
    gen->add_option("--mode", gen_mode);
    gen->add_option("--start-id", gen_start);
    gen->add_option("--out-dir", gen_out);

    // inject
    auto* inject = app.add_subcommand("inject", "build the 18x stream with exact-count injection")->fallthrough();
    std::string inj_corpus, inj_out = "stream_out";
    std::vector<std::string> inj_instances;
    int64_t inj_n = 0;
    int inj_epochs = 18;
    bool inj_no_preprocess = false;
    inject->add_option("--corpus", inj_corpus)->required();
    inject->add_option("--instances", inj_instances, "instance JSONL file(s)");
    inject->add_option("-n,--count", inj_n, "occurrences per instance");
    inject->add_option("--epochs", inj_epochs);
    inject->add_flag("--no-preprocess", inj_no_preprocess, "corpus is already normalized");
    inject->add_option("--out-dir", inj_out);

    // tok-train
    auto* tok_train = app.add_subcommand("tok-train", "train the BPE tokenizer from scratch")->fallthrough();
    std::string tt_corpus, tt_specials, tt_out = "tokenizer.json";
    int tt_vocab = 9600;
    int64_t tt_wug_tags = 0;
    tok_train->add_option("--corpus", tt_corpus)->required();
    tok_train->add_option("--vocab-size", tt_vocab);
    tok_train->add_option("--wug-tags", tt_wug_tags, "register <wug#0..N-1> as specials");
    tok_train->add_option("--specials-file", tt_specials, "extra specials, one per line");
    tok_train->add_option("--out-file", tt_out);

    // train
    auto* train = app.add_subcommand("train", "train the masked LM on a stream")->fallthrough();
    std::string tr_stream, tr_tok, tr_out = "train_out", tr_resume;
    int64_t tr_ckpt_every = 0;
    train->add_option("--stream", tr_stream)->required();
    train->add_option("--tokenizer", tr_tok)->required();
    train->add_option("--out-dir", tr_out);
    train->add_option("--resume", tr_resume, "checkpoint to resume from");
    train->add_option("--checkpoint-every", tr_ckpt_every, "updates between checkpoints");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score minimal pairs with a trained checkpoint")->fallthrough();
    std::string ev_ckpt, ev_tok, ev_pairs, ev_out_csv, ev_evidence = "de";
    std::vector<std::string> ev_methods = {"sentence_pll"};
    int64_t ev_n = 0;
    double ev_std = 0.02;
    eval_cmd->add_option("--checkpoint", ev_ckpt)->required();
    eval_cmd->add_option("--tokenizer", ev_tok)->required();
    eval_cmd->add_option("--pairs", ev_pairs)->required();
    eval_cmd->add_option("--methods", ev_methods,
                         "sentence_pll|wug_level|antecedent_level");
    eval_cmd->add_option("--evidence", ev_evidence, "metadata for the result row");
    eval_cmd->add_option("-n,--count", ev_n, "metadata for the result row");
    eval_cmd->add_option("--init-std", ev_std, "metadata for the result row");
    eval_cmd->add_option("--out-csv", ev_out_csv);

    // grid / report
    auto* grid = app.add_subcommand("grid", "plan and execute the experiment grid")->fallthrough();
    auto* report = app.add_subcommand("report", "emit CSV and SVG reports from a result store")->fallthrough();
    std::string rp_store = "out/results.csv", rp_out = "out/report";
    report->add_option("--store", rp_store, "results CSV");
    report->add_option("--out-dir", rp_out);

    CLI11_PARSE(app, argc, argv);
    if (g.threads > 0) set_worker_threads(g.threads);

    try {
        if (forge->parsed()) {
            return cmd_forge(g, forge_mode, forge_count, forge_start, forge_seeds, forge_per_seed,
                             forge_out);
        }
        if (gen->parsed()) return cmd_gen(g, gen_ph, gen_pairs, gen_mode, gen_start, gen_out);
        if (inject->parsed()) {
            return cmd_inject(g, inj_corpus, inj_instances, inj_n, inj_epochs, inj_no_preprocess,
                              inj_out);
        }
        if (tok_train->parsed()) {
            return cmd_tok_train(g, tt_corpus, tt_vocab, tt_wug_tags, tt_specials, tt_out);
        }
        if (train->parsed()) return cmd_train(g, tr_stream, tr_tok, tr_out, tr_resume, tr_ckpt_every);
        if (eval_cmd->parsed()) {
            return cmd_eval(g, ev_ckpt, ev_tok, ev_pairs, ev_methods, ev_out_csv, ev_evidence,
                            ev_n, ev_std);
        }
        if (grid->parsed()) return cmd_grid(g);
        if (report->parsed()) return cmd_report(g, rp_store, rp_out);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
