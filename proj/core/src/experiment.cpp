#include "wuglab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "wuglab/errors.hpp"
#include "wuglab/synth.hpp"
#include "wuglab/trainer.hpp"
#include "wuglab/util.hpp"

namespace fs = std::filesystem;

namespace wuglab {

void ExperimentConfig::validate() const {
    model.validate();
    optim.validate();
    masking.validate();
    if (phenomena.empty()) throw Error("config: no phenomena selected");
    if (seeds.empty()) throw Error("config: no seeds");
    if (init_stds.empty()) throw Error("config: no init_stds");
    if (pairs_per_phenomenon < 1) throw Error("config: pairs_per_phenomenon must be >= 1");
    for (int64_t n : freq_grid) {
        if (n < 0) throw Error("config: frequency grid values must be >= 0");
    }
    if (!std::is_sorted(freq_grid.begin(), freq_grid.end())) {
        throw Error("config: frequency grid must be sorted");
    }
}

ExperimentConfig config_preset(const std::string& scale) {
    ExperimentConfig c;
    c.scale = scale;
    for (const auto& info : all_phenomena()) c.phenomena.push_back(info.ph);
    if (scale == "paper") {
        c.model = ModelConfig{}; // published hyperparameters are the defaults
        c.optim = OptimizerConfig{};
        c.pairs_per_phenomenon = 600;
        c.bpe_vocab = 9600;
        c.synth_sentences = 675000;
        c.interference_wugs = 100;
    } else if (scale == "toy") {
        c.model.layers = 2;
        c.model.heads = 4;
        c.model.hidden = 128;
        c.model.dropout = 0.1;
        c.model.init_std = 0.02;
        c.model.max_seq_len = 128;
        c.optim.lr = 5e-4;
        c.optim.warmup_steps = 300;
        c.optim.batch = 16;
        c.optim.grad_accum = 2;
        c.optim.epochs = 18;
        c.pairs_per_phenomenon = 100;
        c.bpe_vocab = 2000;
        c.synth_sentences = 20000;
        c.interference_wugs = 100;
    } else {
        throw Error("unknown scale preset: " + scale + " (expected toy|paper)");
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    ExperimentConfig c = config_preset(j.value("scale", std::string("toy")));
    if (j.contains("phenomena")) {
        c.phenomena.clear();
        for (const auto& name : j["phenomena"]) {
            c.phenomena.push_back(phenomenon_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("evidence")) {
        c.evidence.clear();
        for (const auto& name : j["evidence"]) {
            c.evidence.push_back(evidence_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("freq_grid")) c.freq_grid = j["freq_grid"].get<std::vector<int64_t>>();
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<uint64_t>>();
    if (j.contains("init_stds")) c.init_stds = j["init_stds"].get<std::vector<double>>();
    if (j.contains("wug_mode")) c.wug_mode = wug_mode_from_name(j["wug_mode"].get<std::string>());
    if (j.contains("methods")) {
        c.methods.clear();
        for (const auto& name : j["methods"]) {
            c.methods.push_back(method_from_name(name.get<std::string>()));
        }
    }
    if (j.contains("model")) c.model = model_cfg_from_json(j["model"], c.model);
    if (j.contains("optimizer")) c.optim = optim_cfg_from_json(j["optimizer"], c.optim);
    if (j.contains("masking")) c.masking = masking_from_json(j["masking"], c.masking);
    if (j.contains("pairs_per_phenomenon")) {
        c.pairs_per_phenomenon = j["pairs_per_phenomenon"].get<int64_t>();
    }
    if (j.contains("synth_sentences")) c.synth_sentences = j["synth_sentences"].get<int>();
    if (j.contains("bpe_vocab")) c.bpe_vocab = j["bpe_vocab"].get<int>();
    if (j.contains("interference")) c.interference = j["interference"].get<bool>();
    if (j.contains("interference_wugs")) c.interference_wugs = j["interference_wugs"].get<int>();
    if (j.contains("corpus_path")) c.corpus_path = j["corpus_path"].get<std::string>();
    if (j.contains("data_dir")) c.data_dir = j["data_dir"].get<std::string>();
    if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
    if (j.contains("data_seed")) c.data_seed = j["data_seed"].get<uint64_t>();
    c.validate();
    return c;
}

void save_config(const fs::path& path, const ExperimentConfig& c) {
    nlohmann::json j;
    j["scale"] = c.scale;
    nlohmann::json phenomena = nlohmann::json::array();
    for (auto ph : c.phenomena) phenomena.push_back(phenomenon_info(ph).name);
    j["phenomena"] = phenomena;
    nlohmann::json evidence = nlohmann::json::array();
    for (auto ev : c.evidence) evidence.push_back(evidence_name(ev));
    j["evidence"] = evidence;
    j["freq_grid"] = c.freq_grid;
    j["seeds"] = c.seeds;
    j["init_stds"] = c.init_stds;
    j["wug_mode"] = wug_mode_name(c.wug_mode);
    nlohmann::json methods = nlohmann::json::array();
    for (auto m : c.methods) methods.push_back(method_name(m));
    j["methods"] = methods;
    j["model"] = model_cfg_to_json(c.model);
    j["optimizer"] = optim_cfg_to_json(c.optim);
    j["masking"] = masking_to_json(c.masking);
    j["pairs_per_phenomenon"] = c.pairs_per_phenomenon;
    j["synth_sentences"] = c.synth_sentences;
    j["bpe_vocab"] = c.bpe_vocab;
    j["interference"] = c.interference;
    j["interference_wugs"] = c.interference_wugs;
    j["corpus_path"] = c.corpus_path;
    j["data_dir"] = c.data_dir;
    j["out_dir"] = c.out_dir;
    j["data_seed"] = c.data_seed;
    write_file_atomic(path, j.dump(2) + "\n");
}

// ---- run keys ----

std::string RunKey::id() const {
    std::ostringstream os;
    os << phenomenon << "_" << evidence << "_n" << n << "_seed" << seed << "_std" << init_std
       << "_" << wug_mode;
    std::string s = os.str();
    for (char& ch : s) {
        if (ch == '.') ch = 'p';
    }
    return s;
}

std::vector<RunKey> plan_grid(const ExperimentConfig& config) {
    config.validate();
    std::vector<RunKey> keys;
    bool has_zero = std::find(config.freq_grid.begin(), config.freq_grid.end(), 0) !=
                    config.freq_grid.end();
    for (uint64_t seed : config.seeds) {
        for (double std_value : config.init_stds) {
            for (auto ph : config.phenomena) {
                RunKey base;
                base.phenomenon = phenomenon_info(ph).name;
                base.seed = seed;
                base.init_std = std_value;
                base.wug_mode = wug_mode_name(config.wug_mode);
                if (has_zero) {
                    RunKey k = base;
                    k.evidence = "none";
                    k.n = 0;
                    keys.push_back(k);
                }
                for (auto ev : config.evidence) {
                    for (int64_t n : config.freq_grid) {
                        if (n == 0) continue;
                        RunKey k = base;
                        k.evidence = evidence_name(ev);
                        k.n = n;
                        keys.push_back(k);
                    }
                }
            }
            if (config.interference) {
                for (const auto& kind : all_interference_kinds()) {
                    for (int64_t n : config.freq_grid) {
                        if (n == 0) continue;
                        RunKey k;
                        k.phenomenon = phenomenon_info(Phenomenon::ana_gen_agr).name;
                        k.evidence = "int_" + kind.name();
                        k.n = n;
                        k.seed = seed;
                        k.init_std = std_value;
                        k.wug_mode = wug_mode_name(config.wug_mode);
                        keys.push_back(k);
                    }
                }
            }
        }
    }
    return keys;
}

// ---- result store ----

ResultStore::ResultStore(fs::path csv_path) : csv_path_(std::move(csv_path)) {
    if (fs::exists(csv_path_)) rows_ = parse_csv(csv_path_);
}

std::string ResultStore::to_csv_row(const EvalResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%llu,%g,%s,%s,%.6f,%lld,%lld",
                  r.phenomenon.c_str(), r.evidence.c_str(), static_cast<long long>(r.n),
                  static_cast<unsigned long long>(r.seed), r.init_std, r.wug_mode.c_str(),
                  r.method.c_str(), r.accuracy, static_cast<long long>(r.num_pairs),
                  static_cast<long long>(r.tie_count));
    return buf;
}

std::vector<EvalResult> ResultStore::parse_csv(const fs::path& path) {
    std::vector<EvalResult> rows;
    auto lines = read_lines(path);
    for (size_t i = 1; i < lines.size(); ++i) { // skip header
        if (lines[i].empty()) continue;
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream is(lines[i]);
        while (std::getline(is, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) throw IoError("bad results row: " + lines[i]);
        EvalResult r;
        r.phenomenon = cells[0];
        r.evidence = cells[1];
        r.n = std::stoll(cells[2]);
        r.seed = std::stoull(cells[3]);
        r.init_std = std::stod(cells[4]);
        r.wug_mode = cells[5];
        r.method = cells[6];
        r.accuracy = std::stod(cells[7]);
        r.num_pairs = std::stoll(cells[8]);
        r.tie_count = std::stoll(cells[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

void ResultStore::persist() const {
    std::vector<std::string> lines = {kHeader};
    for (const auto& r : rows_) lines.push_back(to_csv_row(r));
    write_lines_atomic(csv_path_, lines);
}

void ResultStore::append(const std::vector<EvalResult>& new_rows) {
    rows_.insert(rows_.end(), new_rows.begin(), new_rows.end());
    persist();
}

// ---- context ----

ExperimentContext::ExperimentContext(const ExperimentConfig& config) : config_(config) {
    config_.validate();
}

const Lexicon& ExperimentContext::pools() {
    if (!pools_) {
        pools_ = load_lexicon(fs::path(config_.data_dir) / "lexicons" / "pools.jsonl");
    }
    return *pools_;
}

const CleanCorpus& ExperimentContext::corpus() {
    if (!corpus_) {
        std::vector<std::string> raw;
        std::string source;
        if (!config_.corpus_path.empty()) {
            raw = read_lines(config_.corpus_path);
            source = config_.corpus_path;
        } else {
            raw = synth_corpus(pools(), config_.synth_sentences,
                               derive_seed(config_.data_seed, "synth"));
            source = "synthetic";
        }
        corpus_ = preprocess(raw, derive_seed(config_.data_seed, "preprocess"), source);
        fs::path dir = fs::path(config_.out_dir) / "corpus";
        ensure_dir(dir);
        write_lines_atomic(dir / "clean.txt", corpus_->sentences);
    }
    return *corpus_;
}

int64_t ExperimentContext::total_wugs() const {
    return static_cast<int64_t>(config_.phenomena.size()) * config_.pairs_per_phenomenon +
           config_.interference_wugs;
}

const WugLexicon& ExperimentContext::pseudo_pool() {
    if (!pseudo_all_) {
        auto seeds = load_word_list(fs::path(config_.data_dir) / "lexicons" / "seed_nouns.txt");
        pseudo_all_ = generate_pseudowords(seeds, 4, static_cast<int>(total_wugs()),
                                           derive_seed(config_.data_seed, "wuggy"), 0);
    }
    return *pseudo_all_;
}

const WugLexicon& ExperimentContext::wugs(Phenomenon ph) {
    auto it = wug_lexicons_.find(ph);
    if (it != wug_lexicons_.end()) return it->second;
    int64_t index = 0;
    for (size_t i = 0; i < config_.phenomena.size(); ++i) {
        if (config_.phenomena[i] == ph) {
            index = static_cast<int64_t>(i);
            break;
        }
    }
    int64_t start = index * config_.pairs_per_phenomenon;
    WugLexicon lex;
    if (config_.wug_mode == WugMode::pseudoword) {
        const WugLexicon& all = pseudo_pool();
        lex.mode = WugMode::pseudoword;
        lex.entries.assign(all.entries.begin() + start,
                           all.entries.begin() + start + config_.pairs_per_phenomenon);
    } else {
        lex = make_tag_lexicon(config_.pairs_per_phenomenon, start, config_.wug_mode);
    }
    return wug_lexicons_.emplace(ph, std::move(lex)).first->second;
}

const WugLexicon& ExperimentContext::interference_wugs() {
    if (!interference_wugs_) {
        int64_t start = static_cast<int64_t>(config_.phenomena.size()) * config_.pairs_per_phenomenon;
        if (config_.wug_mode == WugMode::pseudoword) {
            const WugLexicon& all = pseudo_pool();
            WugLexicon lex;
            lex.mode = WugMode::pseudoword;
            lex.entries.assign(all.entries.begin() + start,
                               all.entries.begin() + start + config_.interference_wugs);
            interference_wugs_ = std::move(lex);
        } else {
            interference_wugs_ =
                make_tag_lexicon(config_.interference_wugs, start, config_.wug_mode);
        }
    }
    return *interference_wugs_;
}

const TokenizerModel& ExperimentContext::tokenizer() {
    if (!tokenizer_) {
        const CleanCorpus& clean = corpus();
        std::vector<std::string> specials;
        if (config_.wug_mode != WugMode::pseudoword) {
            for (int64_t i = 0; i < total_wugs(); ++i) {
                specials.push_back("<wug#" + std::to_string(i) + ">");
            }
        }
        uint64_t key = clean.content_hash();
        key = derive_seed(key, "vocab" + std::to_string(config_.bpe_vocab));
        key = derive_seed(key, "specials" + std::to_string(specials.size()));
        fs::path cache = fs::path(config_.out_dir) / "tokenizer" /
                         ("tok_" + std::to_string(key) + ".json");
        if (fs::exists(cache)) {
            tokenizer_ = load_tokenizer(cache);
        } else {
            tokenizer_ = train_bpe(clean.sentences, config_.bpe_vocab, specials);
            save_tokenizer(cache, *tokenizer_);
        }
    }
    return *tokenizer_;
}

const ExpandResult& ExperimentContext::expansion(Phenomenon ph) {
    auto it = expansions_.find(ph);
    if (it != expansions_.end()) return it->second;
    const auto& info = phenomenon_info(ph);
    auto templates =
        parse_template_file(fs::path(config_.data_dir) / "templates" / (std::string(info.name) + ".jsonl"));
    BalanceSpec balance = balance_spec_for(ph, config_.pairs_per_phenomenon, pools());
    ExpandResult result = expand(templates, pools(), wugs(ph), balance,
                                 derive_seed(config_.data_seed, std::string("expand/") + info.name));
    // Persist the generated material for inspection and reuse.
    fs::path dir = fs::path(config_.out_dir) / "data" / info.name;
    ensure_dir(dir);
    save_pairs(dir / "eval.jsonl", result.eval_set);
    save_instances(dir / "lexie.jsonl", result.train_sets.at(EvidenceLevel::lexie));
    save_instances(dir / "synie.jsonl", result.train_sets.at(EvidenceLevel::synie));
    save_instances(dir / "de.jsonl", derive_de(result.eval_set));
    save_wug_lexicon(dir / "wugs.jsonl", wugs(ph));
    return expansions_.emplace(ph, std::move(result)).first->second;
}

// ---- execution ----

namespace {

std::vector<InjectedInstance> to_injected(const std::vector<TrainingInstance>& instances) {
    std::vector<InjectedInstance> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) out.push_back({inst.instance_id(), inst.sentence});
    return out;
}

std::vector<std::string> interference_verbs(const Lexicon& pools) {
    std::vector<std::string> verbs;
    for (const auto& e : pools.pool("anagen_verb_lexie")) {
        if (e.has("pres_sg")) verbs.push_back(e.form("pres_sg"));
    }
    return verbs;
}

uint64_t config_fingerprint(const ModelConfig& mc, const OptimizerConfig& oc,
                            const MaskingPolicy& mp) {
    nlohmann::json j{{"model", model_cfg_to_json(mc)},
                     {"optim", optim_cfg_to_json(oc)},
                     {"masking", masking_to_json(mp)}};
    return fnv1a64(j.dump());
}

} // namespace

RunOutcome execute(const RunKey& key, ExperimentContext& ctx, ResultStore& store, bool force) {
    RunOutcome outcome;
    const ExperimentConfig& config = ctx.config();
    fs::path run_dir = fs::path(config.out_dir) / "runs" / key.id();
    fs::path result_path = run_dir / "result.json";

    if (!force && fs::exists(result_path)) {
        nlohmann::json j = nlohmann::json::parse(read_file(result_path));
        for (const auto& rj : j.at("rows")) {
            EvalResult r;
            r.phenomenon = rj.at("phenomenon").get<std::string>();
            r.evidence = rj.at("evidence").get<std::string>();
            r.n = rj.at("n").get<int64_t>();
            r.seed = rj.at("seed").get<uint64_t>();
            r.init_std = rj.at("init_std").get<double>();
            r.wug_mode = rj.at("wug_mode").get<std::string>();
            r.method = rj.at("method").get<std::string>();
            r.accuracy = rj.at("accuracy").get<double>();
            r.num_pairs = rj.at("num_pairs").get<int64_t>();
            r.tie_count = rj.at("tie_count").get<int64_t>();
            outcome.rows.push_back(std::move(r));
        }
        outcome.from_cache = true;
        return outcome;
    }

    try {
        Phenomenon ph = phenomenon_from_name(key.phenomenon);
        ensure_dir(run_dir);

        // 1. Instances and evaluation pairs for this key.
        std::vector<TrainingInstance> instances;
        std::vector<MinimalPair> eval_pairs;
        if (key.evidence.rfind("int_", 0) == 0) {
            InterferenceKind kind = interference_from_name(key.evidence.substr(4));
            NounBanks banks = load_noun_banks(ctx.pools());
            InterferenceSet set =
                make_interference_set(kind, banks, interference_verbs(ctx.pools()),
                                      ctx.interference_wugs(),
                                      derive_seed(config.data_seed, "interference"));
            instances = std::move(set.train);
            eval_pairs = std::move(set.eval);
        } else {
            const ExpandResult& expansion = ctx.expansion(ph);
            eval_pairs = expansion.eval_set;
            if (key.n > 0) {
                EvidenceLevel ev = evidence_from_name(key.evidence);
                if (ev == EvidenceLevel::de) {
                    instances = derive_de(expansion.eval_set);
                } else {
                    instances = expansion.train_sets.at(ev);
                }
            }
        }

        // 2. Build + persist the stream; verify the injection counts.
        uint64_t inject_seed = derive_seed(
            key.seed, "inject/" + key.phenomenon + "/" + key.evidence + "/" + std::to_string(key.n));
        TrainingStream stream =
            build_stream(ctx.corpus(), to_injected(instances), key.n, config.optim.epochs,
                         inject_seed);
        save_manifest(run_dir / "manifest.json", stream.manifest);
        {
            auto counts = verify_counts(stream.lines, to_injected(instances));
            for (const auto& [id, count] : counts) {
                if (count != key.n) {
                    throw Error("injection count mismatch for " + id + ": observed " +
                                std::to_string(count) + ", expected " + std::to_string(key.n));
                }
            }
            nlohmann::json v{{"instances", counts.size()}, {"n", key.n}, {"verified", true}};
            write_file_atomic(run_dir / "verify.json", v.dump(2) + "\n");
        }

        // 3. Train (or reuse) the model for this stream/config/seed.
        ModelConfig mc = config.model;
        mc.init_std = key.init_std;
        mc.vocab_size = static_cast<int>(ctx.tokenizer().vocab.size());
        uint64_t model_key = fnv1a64(stream.lines);
        model_key = derive_seed(model_key, "cfg" + std::to_string(config_fingerprint(
                                               mc, config.optim, config.masking)));
        model_key = derive_seed(model_key, "seed" + std::to_string(key.seed));
        fs::path model_dir = fs::path(config.out_dir) / "models" / std::to_string(model_key);
        fs::path ckpt_path = model_dir / "checkpoint_final.ckpt";
        if (force || !fs::exists(ckpt_path)) {
            TrainOptions opt;
            opt.out_dir = model_dir;
            TrainResult tr = train_mlm(stream.lines, ctx.tokenizer(), mc, config.optim,
                                       config.masking, key.seed, opt);
            (void)tr;
        }
        Checkpoint ckpt = load_checkpoint(ckpt_path);

        // 4. Evaluate with every configured method.
        ModelScorer scorer(ckpt, ctx.tokenizer());
        std::vector<ScoredPair> prepared;
        prepared.reserve(eval_pairs.size());
        for (const auto& pair : eval_pairs) prepared.push_back(prepare_pair(ctx.tokenizer(), pair));
        ResultMeta meta;
        meta.phenomenon = key.phenomenon;
        meta.evidence = key.evidence;
        meta.n = key.n;
        meta.seed = key.seed;
        meta.init_std = key.init_std;
        meta.wug_mode = key.wug_mode;
        for (Method method : config.methods) {
            outcome.rows.push_back(accuracy(scorer, prepared, method, meta));
        }

        // 5. Persist rows and append to the store.
        nlohmann::json rows_json = nlohmann::json::array();
        for (const auto& r : outcome.rows) {
            rows_json.push_back({{"phenomenon", r.phenomenon},
                                 {"evidence", r.evidence},
                                 {"n", r.n},
                                 {"seed", r.seed},
                                 {"init_std", r.init_std},
                                 {"wug_mode", r.wug_mode},
                                 {"method", r.method},
                                 {"accuracy", r.accuracy},
                                 {"num_pairs", r.num_pairs},
                                 {"tie_count", r.tie_count}});
        }
        nlohmann::json result_json{{"key", key.id()}, {"rows", rows_json}};
        write_file_atomic(result_path, result_json.dump(2) + "\n");
        store.append(outcome.rows);
    } catch (const std::exception& e) {
        outcome.error = e.what();
        nlohmann::json err{{"key", key.id()}, {"error", outcome.error}};
        write_file_atomic(run_dir / "error.json", err.dump(2) + "\n");
    }
    return outcome;
}

// ---- ablation ----

std::vector<AblationRow> summarize_ablation(const std::vector<EvalResult>& rows) {
    std::map<std::pair<std::string, double>, std::vector<double>> groups;
    for (const auto& r : rows) {
        groups[{r.phenomenon, r.init_std}].push_back(r.accuracy);
    }
    std::vector<AblationRow> out;
    for (const auto& [key, values] : groups) {
        if (values.size() < 2) {
            throw InsufficientSeeds("group (" + key.first + ", std=" +
                                    std::to_string(key.second) + ") has " +
                                    std::to_string(values.size()) + " rows; need >= 2 seeds");
        }
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        AblationRow row;
        row.phenomenon = key.first;
        row.init_std = key.second;
        row.mean = mean;
        row.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        row.n_seeds = static_cast<int64_t>(values.size());
        out.push_back(std::move(row));
    }
    return out;
}

} // namespace wuglab
