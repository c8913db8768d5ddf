#pragma once

#include <filesystem>

#include "sonobox/sim.hpp"

namespace sonobox::io {

// 4-channel IEEE float32 RIFF WAVE, one frame per sample across the mics in
// index order. Samples are narrowed to float on write, so a read-back bundle
// re-writes byte-identically.
void write_wav(const std::filesystem::path& path, const sim::WaveformBundle& bundle);

sim::WaveformBundle read_wav(const std::filesystem::path& path);

}  // namespace sonobox::io
