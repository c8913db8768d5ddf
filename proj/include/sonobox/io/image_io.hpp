#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sonobox/geometry.hpp"

namespace sonobox::io {

// Interleaved RGB, row-major.
struct Image8 {
    int w = 0;
    int h = 0;
    std::vector<uint8_t> data;
};

// Single plane, row-major.
struct Image16 {
    int w = 0;
    int h = 0;
    std::vector<uint16_t> data;
};

// Rounding quantization: 255 maps to color 1.0, 65535 to depth 1.0.
Image8 quantize_rgb(const geom::SceneImage& scene);
Image16 quantize_depth(const geom::SceneImage& scene);

// Inverse of the quantizers up to rounding. The images must be square and of
// equal size; meters_per_pixel is not stored in the files and comes back 0.
geom::SceneImage scene_from_images(const Image8& rgb, const Image16& depth);

// Binary PPM (P6, maxval 255).
void write_ppm(const std::filesystem::path& path, const Image8& img);
Image8 read_ppm(const std::filesystem::path& path);

// Binary PGM (P5, maxval 65535, big-endian samples). The header comment
// documents the linear depth scale.
void write_pgm(const std::filesystem::path& path, const Image16& img);
Image16 read_pgm(const std::filesystem::path& path);

}  // namespace sonobox::io
