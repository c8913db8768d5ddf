#include "sonobox/io/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "sonobox/common.hpp"

namespace sonobox::io {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits = 0;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::vector<char>& buf;
    size_t pos = 0;

    void need(size_t n, const char* what) const {
        if (pos + n > buf.size()) throw DataError(std::string("wav: truncated while reading ") + what);
    }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(static_cast<uint8_t>(buf[pos]) |
                                           (static_cast<uint8_t>(buf[pos + 1]) << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::string tag(const char* what) {
        need(4, what);
        std::string t(buf.data() + pos, 4);
        pos += 4;
        return t;
    }
};

}  // namespace

void write_wav(const std::filesystem::path& path, const sim::WaveformBundle& bundle) {
    const size_t frames = bundle.length();
    for (const auto& ch : bundle.channels)
        if (ch.size() != frames) throw DataError("wav: channels differ in length");
    if (bundle.sample_rate <= 0.0) throw DataError("wav: sample rate must be positive");

    const uint32_t data_size = static_cast<uint32_t>(frames * 4 * sizeof(float));
    const uint32_t sample_rate = static_cast<uint32_t>(std::lround(bundle.sample_rate));
    const uint16_t block_align = 4 * sizeof(float);

    std::string out;
    out.reserve(12 + 24 + 12 + 8 + data_size);
    out += "RIFF";
    put_u32(out, 4 + 24 + 12 + 8 + data_size);
    out += "WAVE";
    out += "fmt ";
    put_u32(out, 16);
    put_u16(out, 3);  // IEEE float
    put_u16(out, 4);
    put_u32(out, sample_rate);
    put_u32(out, sample_rate * block_align);
    put_u16(out, block_align);
    put_u16(out, 32);
    out += "fact";  // required for non-PCM formats
    put_u32(out, 4);
    put_u32(out, static_cast<uint32_t>(frames));
    out += "data";
    put_u32(out, data_size);
    for (size_t i = 0; i < frames; ++i)
        for (int ch = 0; ch < 4; ++ch) put_f32(out, static_cast<float>(bundle.channels[ch][i]));

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("wav: cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("wav: write failed: " + path.string());
}

sim::WaveformBundle read_wav(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("wav: cannot open: " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    Reader r{buf};
    if (r.tag("riff id") != "RIFF") throw DataError("wav: not a RIFF file: " + path.string());
    r.u32("riff size");
    if (r.tag("wave id") != "WAVE") throw DataError("wav: not a WAVE file: " + path.string());

    bool have_fmt = false;
    uint32_t sample_rate = 0;
    sim::WaveformBundle bundle;
    bool have_data = false;

    while (r.pos + 8 <= buf.size()) {
        const std::string id = r.tag("chunk id");
        const uint32_t size = r.u32("chunk size");
        r.need(size, id.c_str());
        const size_t body = r.pos;
        if (id == "fmt ") {
            const uint16_t format = r.u16("format");
            const uint16_t channels = r.u16("channels");
            sample_rate = r.u32("sample rate");
            r.u32("byte rate");
            r.u16("block align");
            const uint16_t bits = r.u16("bits");
            if (format != 3 || bits != 32)
                throw DataError("wav: expected 32-bit float samples: " + path.string());
            if (channels != 4) throw DataError("wav: expected 4 channels, got " + std::to_string(channels));
            have_fmt = true;
        } else if (id == "data") {
            if (!have_fmt) throw DataError("wav: data chunk before fmt: " + path.string());
            if (size % 16 != 0) throw DataError("wav: data size not a whole number of frames");
            const size_t frames = size / 16;
            for (auto& ch : bundle.channels) ch.resize(frames);
            for (size_t i = 0; i < frames; ++i)
                for (int ch = 0; ch < 4; ++ch) {
                    uint32_t bits = r.u32("sample");
                    float v = 0.0f;
                    std::memcpy(&v, &bits, 4);
                    bundle.channels[ch][i] = v;
                }
            have_data = true;
        }
        r.pos = body + size + (size % 2);  // chunks are word-aligned
    }
    if (!have_fmt || !have_data) throw DataError("wav: missing fmt or data chunk: " + path.string());
    bundle.sample_rate = sample_rate;
    return bundle;
}

}  // namespace sonobox::io
