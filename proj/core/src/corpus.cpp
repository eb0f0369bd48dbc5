#include "wuglab/corpus.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "wuglab/errors.hpp"
#include "wuglab/rng.hpp"
#include "wuglab/util.hpp"

namespace fs = std::filesystem;

namespace wuglab {

uint64_t CleanCorpus::content_hash() const { return fnv1a64(sentences); }

CleanCorpus preprocess(const std::vector<std::string>& raw, uint64_t rng_seed,
                       const std::string& source_id) {
    std::vector<std::string> lines = raw;
    Rng rng(rng_seed);
    rng.shuffle(lines);

    // Dedupe on the raw strings, before normalization.
    std::unordered_set<std::string> seen;
    std::vector<std::string> deduped;
    deduped.reserve(lines.size());
    for (auto& l : lines) {
        if (seen.insert(l).second) deduped.push_back(std::move(l));
    }

    CleanCorpus out;
    out.source_id = source_id;
    out.sentences.reserve(deduped.size());
    for (const auto& l : deduped) {
        auto words = split_ws(l);
        if (words.size() < 2) continue;
        std::string s = lowercase(join(words));
        s.erase(std::remove(s.begin(), s.end(), '.'), s.end());
        // Removing periods can merge or empty tokens; re-normalize spacing.
        auto toks = split_ws(s);
        if (toks.size() < 2) continue;
        out.sentences.push_back(join(toks));
    }
    return out;
}

TrainingStream build_stream(const CleanCorpus& corpus,
                            const std::vector<InjectedInstance>& instances,
                            int64_t n, int epochs, uint64_t rng_seed) {
    if (n < 0) throw Error("build_stream: n must be >= 0");
    if (epochs < 1) throw Error("build_stream: epochs must be >= 1");

    const int64_t base = static_cast<int64_t>(corpus.sentences.size()) * epochs;
    const int64_t injected = n * static_cast<int64_t>(instances.size());
    const int64_t total = base + injected;

    TrainingStream stream;
    stream.manifest.epochs = epochs;
    stream.manifest.per_instance_count = n;
    stream.manifest.rng_seed = rng_seed;
    stream.corpus_hash = corpus.content_hash();

    // One slot per injected copy, drawn uniformly without replacement over
    // the final stream indices.
    Rng rng(rng_seed);
    std::vector<std::pair<int64_t, const InjectedInstance*>> slots;
    slots.reserve(static_cast<size_t>(injected));
    std::unordered_set<int64_t> used;
    used.reserve(static_cast<size_t>(injected) * 2);
    for (const auto& inst : instances) {
        auto& positions = stream.manifest.placements[inst.instance_id];
        for (int64_t k = 0; k < n; ++k) {
            int64_t pos;
            do {
                pos = static_cast<int64_t>(rng.below(static_cast<uint64_t>(total)));
            } while (!used.insert(pos).second);
            positions.push_back(pos);
            slots.emplace_back(pos, &inst);
        }
        std::sort(positions.begin(), positions.end());
    }
    std::sort(slots.begin(), slots.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    stream.lines.reserve(static_cast<size_t>(total));
    size_t next_slot = 0;
    int64_t base_cursor = 0;
    const int64_t corpus_size = static_cast<int64_t>(corpus.sentences.size());
    for (int64_t i = 0; i < total; ++i) {
        if (next_slot < slots.size() && slots[next_slot].first == i) {
            stream.lines.push_back(slots[next_slot].second->sentence);
            ++next_slot;
        } else {
            stream.lines.push_back(corpus.sentences[static_cast<size_t>(base_cursor % corpus_size)]);
            ++base_cursor;
        }
    }
    return stream;
}

std::map<std::string, int64_t> verify_counts(const std::vector<std::string>& stream_lines,
                                             const std::vector<InjectedInstance>& instances) {
    std::map<std::string, int64_t> counts;
    std::unordered_map<std::string, std::vector<const std::string*>> by_sentence;
    for (const auto& inst : instances) {
        counts[inst.instance_id] = 0;
        by_sentence[inst.sentence].push_back(&inst.instance_id);
    }
    for (const auto& line : stream_lines) {
        auto it = by_sentence.find(line);
        if (it == by_sentence.end()) continue;
        for (const auto* id : it->second) ++counts[*id];
    }
    return counts;
}

void save_stream(const fs::path& dir, const TrainingStream& stream) {
    ensure_dir(dir);
    write_lines_atomic(dir / "stream.txt", stream.lines);
    save_manifest(dir / "manifest.json", stream.manifest);
    nlohmann::json header{{"corpus_hash", stream.corpus_hash},
                          {"epochs", stream.manifest.epochs},
                          {"rng_seed", stream.manifest.rng_seed},
                          {"lines", stream.lines.size()}};
    write_file_atomic(dir / "header.json", header.dump(2) + "\n");
}

TrainingStream load_stream(const fs::path& dir) {
    TrainingStream stream;
    stream.lines = read_lines(dir / "stream.txt");
    stream.manifest = load_manifest(dir / "manifest.json");
    nlohmann::json header = nlohmann::json::parse(read_file(dir / "header.json"));
    stream.corpus_hash = header.at("corpus_hash").get<uint64_t>();
    return stream;
}

void save_manifest(const fs::path& path, const InjectionPlan& plan) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [id, positions] : plan.placements) {
        entries.push_back({{"instance_id", id}, {"n", positions.size()}, {"positions", positions}});
    }
    nlohmann::json j{{"epochs", plan.epochs},
                     {"n", plan.per_instance_count},
                     {"rng_seed", plan.rng_seed},
                     {"placements", entries}};
    write_file_atomic(path, j.dump(2) + "\n");
}

InjectionPlan load_manifest(const fs::path& path) {
    InjectionPlan plan;
    nlohmann::json j = nlohmann::json::parse(read_file(path));
    plan.epochs = j.at("epochs").get<int>();
    plan.per_instance_count = j.at("n").get<int64_t>();
    plan.rng_seed = j.at("rng_seed").get<uint64_t>();
    for (const auto& e : j.at("placements")) {
        plan.placements[e.at("instance_id").get<std::string>()] =
            e.at("positions").get<std::vector<int64_t>>();
    }
    return plan;
}

} // namespace wuglab
