#include "alignlab/policy.hpp"

#include <cstring>
#include <fstream>

namespace alignlab::policy {

namespace {

constexpr char kMagic[4] = {'A', 'L', 'P', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}

void write_matrix(std::ofstream& out, const Matd& m) {
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

void read_matrix(std::ifstream& in, Matd& m) {
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
}

}  // namespace

void save_checkpoint(const Parameters& params, const std::filesystem::path& path, uint64_t vocab_hash) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path.string());
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, static_cast<uint32_t>(params.vocab_size()));
    write_pod(out, static_cast<uint32_t>(params.dim()));
    write_pod(out, static_cast<uint32_t>(params.features.context));
    write_pod(out, static_cast<uint32_t>(params.rank()));
    write_pod(out, static_cast<uint8_t>(params.frozen_base ? 1 : 0));
    write_pod(out, vocab_hash);
    write_matrix(out, params.base);
    if (params.adapter) {
        write_matrix(out, params.adapter->down);
        write_matrix(out, params.adapter->up);
    }
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path.string());
}

Parameters load_checkpoint(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_checkpoint: bad magic in " + path.string());
    uint32_t version = 0, v = 0, d = 0, context = 0, rank = 0;
    uint8_t frozen = 0;
    uint64_t vocab_hash = 0;
    read_pod(in, version);
    if (version != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));
    read_pod(in, v);
    read_pod(in, d);
    read_pod(in, context);
    read_pod(in, rank);
    read_pod(in, frozen);
    read_pod(in, vocab_hash);
    if (vocab_hash != vocab.hash())
        throw std::runtime_error("load_checkpoint: vocabulary hash mismatch in " + path.string());
    if (static_cast<int>(v) != vocab.size())
        throw std::runtime_error("load_checkpoint: vocab size mismatch in " + path.string());

    Parameters p;
    p.features = FeatureSpec::for_vocab(vocab, static_cast<int>(context));
    if (p.features.dim() != static_cast<int>(d))
        throw std::runtime_error("load_checkpoint: feature dim mismatch in " + path.string());
    p.base.resize(v, d);
    read_matrix(in, p.base);
    if (rank > 0) {
        Adapter<double> a;
        a.down.resize(rank, d);
        a.up.resize(v, rank);
        read_matrix(in, a.down);
        read_matrix(in, a.up);
        p.adapter = std::move(a);
    }
    p.frozen_base = frozen != 0;
    if (!in) throw std::runtime_error("load_checkpoint: truncated file " + path.string());
    return p;
}

}  // namespace alignlab::policy
