#include "sonobox/io/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "sonobox/common.hpp"

namespace sonobox::io {

namespace {

constexpr char kDepthComment[] = "# linear depth: gray / 65535 = height as a fraction of the palette maximum\n";

uint32_t quantize(double v, uint32_t maxval) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return static_cast<uint32_t>(std::lround(clamped * maxval));
}

struct HeaderReader {
    std::ifstream& f;
    const std::filesystem::path& path;

    // Netpbm header tokens separated by whitespace; '#' comments run to end of line.
    int next_int(const char* what) {
        int c = f.get();
        while (c != EOF && (std::isspace(c) || c == '#')) {
            if (c == '#')
                while (c != EOF && c != '\n') c = f.get();
            c = f.get();
        }
        std::string tok;
        while (c != EOF && !std::isspace(c)) {
            tok.push_back(static_cast<char>(c));
            c = f.get();
        }
        if (c == EOF && tok.empty())
            throw DataError(std::string("image: truncated header (") + what + "): " + path.string());
        try {
            size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
            return v;
        } catch (const std::exception&) {
            throw DataError(std::string("image: bad header value for ") + what + " ('" + tok +
                            "'): " + path.string());
        }
    }
};

void check_magic(std::ifstream& f, const char* magic, const std::filesystem::path& path) {
    char m[2] = {0, 0};
    f.read(m, 2);
    if (!f || m[0] != magic[0] || m[1] != magic[1])
        throw DataError(std::string("image: expected ") + magic + " file: " + path.string());
}

void write_bytes(const std::filesystem::path& path, const std::string& out) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("image: cannot open for writing: " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError("image: write failed: " + path.string());
}

}  // namespace

Image8 quantize_rgb(const geom::SceneImage& scene) {
    Image8 img;
    img.w = scene.res;
    img.h = scene.res;
    img.data.resize(scene.rgb.size());
    for (size_t i = 0; i < scene.rgb.size(); ++i)
        img.data[i] = static_cast<uint8_t>(quantize(scene.rgb[i], 255));
    return img;
}

Image16 quantize_depth(const geom::SceneImage& scene) {
    Image16 img;
    img.w = scene.res;
    img.h = scene.res;
    img.data.resize(scene.depth.size());
    for (size_t i = 0; i < scene.depth.size(); ++i)
        img.data[i] = static_cast<uint16_t>(quantize(scene.depth[i], 65535));
    return img;
}

geom::SceneImage scene_from_images(const Image8& rgb, const Image16& depth) {
    if (rgb.w != rgb.h || depth.w != depth.h || rgb.w != depth.w)
        throw DataError("image: scene images must be square and of equal size");
    geom::SceneImage scene;
    scene.res = rgb.w;
    scene.meters_per_pixel = 0.0;
    scene.rgb.resize(rgb.data.size());
    scene.depth.resize(depth.data.size());
    for (size_t i = 0; i < rgb.data.size(); ++i) scene.rgb[i] = rgb.data[i] / 255.0;
    for (size_t i = 0; i < depth.data.size(); ++i) scene.depth[i] = depth.data[i] / 65535.0;
    return scene;
}

void write_ppm(const std::filesystem::path& path, const Image8& img) {
    if (img.data.size() != static_cast<size_t>(img.w) * img.h * 3)
        throw DataError("image: rgb buffer size does not match dimensions");
    std::string out = "P6\n" + std::to_string(img.w) + " " + std::to_string(img.h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.data.data()), img.data.size());
    write_bytes(path, out);
}

Image8 read_ppm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("image: cannot open: " + path.string());
    check_magic(f, "P6", path);
    HeaderReader hdr{f, path};
    Image8 img;
    img.w = hdr.next_int("width");
    img.h = hdr.next_int("height");
    if (hdr.next_int("maxval") != 255) throw DataError("image: only 8-bit PPM supported: " + path.string());
    img.data.resize(static_cast<size_t>(img.w) * img.h * 3);
    f.read(reinterpret_cast<char*>(img.data.data()), static_cast<std::streamsize>(img.data.size()));
    if (!f) throw DataError("image: truncated pixel data: " + path.string());
    return img;
}

void write_pgm(const std::filesystem::path& path, const Image16& img) {
    if (img.data.size() != static_cast<size_t>(img.w) * img.h)
        throw DataError("image: depth buffer size does not match dimensions");
    std::string out = "P5\n";
    out += kDepthComment;
    out += std::to_string(img.w) + " " + std::to_string(img.h) + "\n65535\n";
    for (uint16_t v : img.data) {
        out.push_back(static_cast<char>(v >> 8));  // netpbm stores the high byte first
        out.push_back(static_cast<char>(v & 0xff));
    }
    write_bytes(path, out);
}

Image16 read_pgm(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("image: cannot open: " + path.string());
    check_magic(f, "P5", path);
    HeaderReader hdr{f, path};
    Image16 img;
    img.w = hdr.next_int("width");
    img.h = hdr.next_int("height");
    if (hdr.next_int("maxval") != 65535)
        throw DataError("image: only 16-bit PGM supported: " + path.string());
    img.data.resize(static_cast<size_t>(img.w) * img.h);
    std::vector<char> raw(img.data.size() * 2);
    f.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!f) throw DataError("image: truncated pixel data: " + path.string());
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = static_cast<uint16_t>((static_cast<uint8_t>(raw[2 * i]) << 8) |
                                            static_cast<uint8_t>(raw[2 * i + 1]));
    return img;
}

}  // namespace sonobox::io
