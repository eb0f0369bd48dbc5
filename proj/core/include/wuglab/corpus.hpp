#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace wuglab {

struct CleanCorpus {
    std::vector<std::string> sentences;
    std::string source_id;
    int preprocessing_version = 1;

    uint64_t content_hash() const;
};

// Steps, in order: seeded shuffle, dedupe on raw strings, drop lines with
// fewer than two words, lowercase, strip '.' characters. Whitespace is
// collapsed to single spaces at the end so that lines tokenize reversibly.
CleanCorpus preprocess(const std::vector<std::string>& raw, uint64_t rng_seed,
                       const std::string& source_id = "");

struct InjectedInstance {
    std::string instance_id;
    std::string sentence;
};

struct InjectionPlan {
    int epochs = 18;
    int64_t per_instance_count = 0;
    uint64_t rng_seed = 0;
    // instance id -> sorted positions in the final stream
    std::map<std::string, std::vector<int64_t>> placements;
};

struct TrainingStream {
    std::vector<std::string> lines;
    InjectionPlan manifest;
    uint64_t corpus_hash = 0;
};

// Concatenates the clean corpus `epochs` times and inserts each instance at
// exactly n uniformly drawn slots of the combined stream. Base order is
// preserved; the stream grows by one slot per injected copy.
TrainingStream build_stream(const CleanCorpus& corpus,
                            const std::vector<InjectedInstance>& instances,
                            int64_t n, int epochs, uint64_t rng_seed);

// Independent frequency oracle: full linear scan with exact string match.
// Deliberately ignores the manifest.
std::map<std::string, int64_t> verify_counts(const std::vector<std::string>& stream_lines,
                                             const std::vector<InjectedInstance>& instances);

void save_stream(const std::filesystem::path& dir, const TrainingStream& stream);
TrainingStream load_stream(const std::filesystem::path& dir);

void save_manifest(const std::filesystem::path& path, const InjectionPlan& plan);
InjectionPlan load_manifest(const std::filesystem::path& path);

} // namespace wuglab
