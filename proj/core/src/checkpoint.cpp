#include "wuglab/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "config_json.hpp"
#include "wuglab/errors.hpp"
#include "wuglab/util.hpp"

namespace fs = std::filesystem;

namespace wuglab {

namespace {

constexpr char kMagic[8] = {'W', 'U', 'G', 'C', 'K', 'P', 'T', '1'};

static_assert(sizeof(float) == 4, "float32 payloads expected");

void write_u64(std::ofstream& out, uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

uint64_t read_u64(std::ifstream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(buf[i]) << (8 * i);
    return v;
}

// Tensor payloads are raw float32 in host order; this implementation
// assumes a little-endian host, which the loader checks via the magic.
void write_tensor(std::ofstream& out, const Mat<float>& m) {
    out.write(reinterpret_cast<const char*>(m.a.data()),
              static_cast<std::streamsize>(m.a.size() * sizeof(float)));
}

void read_tensor(std::ifstream& in, Mat<float>& m) {
    in.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(float)));
}

} // namespace

void save_checkpoint(const fs::path& path, Checkpoint& ckpt) {
    auto params_dir = ckpt.params.directory();
    auto m_dir = ckpt.adam.m.directory();
    auto v_dir = ckpt.adam.v.directory();

    nlohmann::json tensors = nlohmann::json::array();
    auto add_dir = [&](const char* group, std::vector<NamedTensor<float>>& dir) {
        for (auto& nt : dir) {
            tensors.push_back({{"name", std::string(group) + nt.name},
                               {"rows", nt.tensor->rows},
                               {"cols", nt.tensor->cols}});
        }
    };
    add_dir("", params_dir);
    add_dir("adam.m.", m_dir);
    add_dir("adam.v.", v_dir);

    nlohmann::json header{{"format_version", 1},
                          {"model", model_cfg_to_json(ckpt.model_cfg)},
                          {"optimizer", optim_cfg_to_json(ckpt.optim_cfg)},
                          {"masking", masking_to_json(ckpt.masking)},
                          {"step", ckpt.step},
                          {"next_line", ckpt.next_line},
                          {"total_updates", ckpt.total_updates},
                          {"rng_state", ckpt.rng_state},
                          {"run_seed", ckpt.run_seed},
                          {"stream_hash", ckpt.stream_hash},
                          {"tensors", tensors}};
    std::string header_str = header.dump();

    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open checkpoint for writing: " + tmp.string());
        out.write(kMagic, sizeof(kMagic));
        write_u64(out, header_str.size());
        out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
        for (auto& nt : params_dir) write_tensor(out, *nt.tensor);
        for (auto& nt : m_dir) write_tensor(out, *nt.tensor);
        for (auto& nt : v_dir) write_tensor(out, *nt.tensor);
        if (!out) throw IoError("checkpoint write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw IoError("not a checkpoint file: " + path.string());
    }
    uint64_t header_len = read_u64(in);
    std::string header_str(header_len, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(header_len));
    nlohmann::json header = nlohmann::json::parse(header_str);
    if (header.at("format_version").get<int>() != 1) {
        throw IoError("unsupported checkpoint version in " + path.string());
    }

    Checkpoint ckpt;
    ckpt.model_cfg = model_cfg_from_json(header.at("model"));
    ckpt.optim_cfg = optim_cfg_from_json(header.at("optimizer"));
    ckpt.masking = masking_from_json(header.at("masking"));
    ckpt.step = header.at("step").get<int64_t>();
    ckpt.next_line = header.at("next_line").get<int64_t>();
    ckpt.total_updates = header.at("total_updates").get<int64_t>();
    ckpt.rng_state = header.at("rng_state").get<std::string>();
    ckpt.run_seed = header.at("run_seed").get<uint64_t>();
    ckpt.stream_hash = header.at("stream_hash").get<uint64_t>();

    ckpt.params.build(ckpt.model_cfg);
    ckpt.adam.build(ckpt.model_cfg);

    auto params_dir = ckpt.params.directory();
    auto m_dir = ckpt.adam.m.directory();
    auto v_dir = ckpt.adam.v.directory();
    size_t expected = params_dir.size() * 3;
    if (header.at("tensors").size() != expected) {
        throw IoError("checkpoint tensor directory mismatch in " + path.string());
    }
    for (auto& nt : params_dir) read_tensor(in, *nt.tensor);
    for (auto& nt : m_dir) read_tensor(in, *nt.tensor);
    for (auto& nt : v_dir) read_tensor(in, *nt.tensor);
    if (!in) throw IoError("checkpoint payload truncated: " + path.string());
    return ckpt;
}

} // namespace wuglab
