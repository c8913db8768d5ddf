#include "sonobox/nn/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "sonobox/common.hpp"

namespace sonobox::nn {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw DataError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f64(std::ostream& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

double read_f64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw DataError("checkpoint: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<NamedParam>& state) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("checkpoint: cannot open for writing: " + path);
    out.write(kCheckpointMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(state.size()));
    for (const NamedParam& p : state) {
        write_u32(out, static_cast<std::uint32_t>(p.name.size()));
        out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
        write_u32(out, 4);
        for (int d : p.tensor->shape) write_u32(out, static_cast<std::uint32_t>(d));
        for (double v : p.tensor->data) write_f64(out, v);
    }
    if (!out) throw DataError("checkpoint: write failed: " + path);
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0)
        throw DataError("checkpoint: bad magic: " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kCheckpointVersion) throw DataError("checkpoint: unsupported version");
    const std::uint32_t count = read_u32(in);

    std::vector<std::pair<std::string, Tensor>> state;
    state.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = read_u32(in);
        if (name_len > 4096) throw DataError("checkpoint: implausible tensor name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw DataError("checkpoint: truncated file");
        const std::uint32_t ndims = read_u32(in);
        if (ndims != 4) throw DataError("checkpoint: expected 4 dims per tensor");
        int dims[4];
        for (int d = 0; d < 4; ++d) {
            const std::uint32_t v = read_u32(in);
            if (v == 0 || v > (1u << 24)) throw DataError("checkpoint: implausible dimension");
            dims[d] = static_cast<int>(v);
        }
        Tensor t(dims[0], dims[1], dims[2], dims[3]);
        for (double& v : t.data) v = read_f64(in);
        state.emplace_back(std::move(name), std::move(t));
    }
    return state;
}

}  // namespace sonobox::nn
