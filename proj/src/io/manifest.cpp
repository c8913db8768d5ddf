#include "sonobox/io/manifest.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sonobox/common.hpp"

namespace sonobox::io {

namespace {

nlohmann::json to_json(const EpisodeRecord& r) {
    return {
        {"id", r.id},
        {"seed", r.seed},
        {"shape", r.shape},
        {"final_pose", {{"x", r.final_pose.x}, {"y", r.final_pose.y}, {"theta", r.final_pose.theta}}},
        {"impact_count", r.impact_count},
        {"wav_path", r.wav_path},
        {"rgb_path", r.rgb_path},
        {"depth_path", r.depth_path},
    };
}

EpisodeRecord from_json(const nlohmann::json& j) {
    EpisodeRecord r;
    r.id = j.at("id").get<int>();
    r.seed = j.at("seed").get<uint64_t>();
    r.shape = j.at("shape").get<std::string>();
    const auto& pose = j.at("final_pose");
    r.final_pose.x = pose.at("x").get<double>();
    r.final_pose.y = pose.at("y").get<double>();
    r.final_pose.theta = pose.at("theta").get<double>();
    r.impact_count = j.at("impact_count").get<int>();
    r.wav_path = j.at("wav_path").get<std::string>();
    r.rgb_path = j.at("rgb_path").get<std::string>();
    r.depth_path = j.at("depth_path").get<std::string>();
    return r;
}

}  // namespace

void write_manifest(const std::filesystem::path& path, const std::vector<EpisodeRecord>& records) {
    std::ostringstream out;
    for (const auto& r : records) out << to_json(r).dump() << "\n";
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("manifest: cannot open for writing: " + path.string());
    const std::string s = out.str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw DataError("manifest: write failed: " + path.string());
}

std::vector<EpisodeRecord> read_manifest(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("manifest: cannot open: " + path.string());
    std::vector<EpisodeRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            records.push_back(from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("manifest: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return records;
}

}  // namespace sonobox::io
