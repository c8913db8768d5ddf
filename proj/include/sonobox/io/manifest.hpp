#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sonobox/geometry.hpp"

namespace sonobox::io {

struct EpisodeRecord {
    int id = 0;
    uint64_t seed = 0;
    std::string shape;
    geom::Pose2D final_pose{};
    int impact_count = 0;
    std::string wav_path;
    std::string rgb_path;
    std::string depth_path;
};

// Line-delimited JSON, one record per line, keys in sorted order so a
// read-back manifest re-writes byte-identically.
void write_manifest(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> read_manifest(const std::filesystem::path& path);

}  // namespace sonobox::io
