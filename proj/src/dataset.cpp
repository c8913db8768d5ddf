#include "sonobox/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "sonobox/common.hpp"
#include "sonobox/io/image_io.hpp"
#include "sonobox/io/wav.hpp"
#include "sonobox/rng.hpp"
#include "sonobox/sim.hpp"

namespace sonobox::data {

namespace fs = std::filesystem;

namespace {

std::string episode_stem(int id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ep_%05d", id);
    return buf;
}

}  // namespace

void generate_to_dir(const ExperimentConfig& cfg, const fs::path& dir, bool force) {
    cfg.validate();
    if (fs::exists(dir) && !fs::is_empty(dir) && !force)
        throw ConfigError("dataset: output directory not empty (pass --force to overwrite): " +
                          dir.string());
    fs::create_directories(dir / "wav");
    fs::create_directories(dir / "rgb");
    fs::create_directories(dir / "depth");

    sim::DatasetParams params;
    params.world = cfg.box_world();
    params.acoustics = cfg.acoustics;
    params.trajectory = cfg.trajectory;
    params.image_res = cfg.dataset.image_res;

    std::vector<io::EpisodeRecord> records;
    records.reserve(cfg.dataset.episodes);
    sim::generate_dataset_stream(
        cfg.dataset.episodes, cfg.shape_roster(), params, cfg.dataset.master_seed,
        [&](int index, const sim::DropEvent& event, const sim::WaveformBundle& bundle) {
            const std::string stem = episode_stem(index);
            io::EpisodeRecord rec;
            rec.id = index;
            rec.seed = event.seed;
            rec.shape = geom::shape_name(event.shape.kind);
            rec.final_pose = event.final_pose;
            rec.impact_count = static_cast<int>(event.impacts.size());
            rec.wav_path = "wav/" + stem + ".wav";
            rec.rgb_path = "rgb/" + stem + ".ppm";
            rec.depth_path = "depth/" + stem + ".pgm";

            io::write_wav(dir / rec.wav_path, bundle);
            const auto scene = geom::render_scene(params.world, event.shape, event.final_pose,
                                                  params.image_res, params.palette);
            io::write_ppm(dir / rec.rgb_path, io::quantize_rgb(scene));
            io::write_pgm(dir / rec.depth_path, io::quantize_depth(scene));
            records.push_back(std::move(rec));
        });

    io::write_manifest(dir / "manifest.jsonl", records);
    save_config(dir / "config.json", cfg);
}

SplitIndices split_indices(int n, double train_fraction, double val_fraction, uint64_t seed) {
    if (n < 1) throw DomainError("split: need at least one episode");
    int n_train = static_cast<int>(std::lround(train_fraction * n));
    int n_val = static_cast<int>(std::lround(val_fraction * n));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.integer(static_cast<uint64_t>(i) + 1)]);

    SplitIndices split;
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    split.test.assign(perm.begin() + n_train + n_val, perm.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

SplitIndices dataset_split(const ExperimentConfig& cfg) {
    return split_indices(cfg.dataset.episodes, cfg.dataset.train_fraction, cfg.dataset.val_fraction,
                         cfg.dataset.split_seed);
}

std::vector<io::EpisodeRecord> load_manifest_checked(const fs::path& dir) {
    const auto records = io::read_manifest(dir / "manifest.jsonl");
    for (const auto& rec : records)
        for (const auto& rel : {rec.wav_path, rec.rgb_path, rec.depth_path})
            if (!fs::exists(dir / rel))
                throw DataError("dataset: manifest references a missing file: " + rel);
    return records;
}

std::vector<float> input_to_chw(const dsp::InputTensor& input) {
    const int t = input.t_bins;
    const int f = input.f_bins;
    std::vector<float> out(static_cast<size_t>(4) * t * f);
    for (int ch = 0; ch < 4; ++ch)
        for (int i = 0; i < t * f; ++i)
            out[static_cast<size_t>(ch) * t * f + i] = static_cast<float>(input.channels[ch][i]);
    return out;
}

std::vector<float> rgb_to_chw(const geom::SceneImage& scene) {
    const int res = scene.res;
    std::vector<float> out(static_cast<size_t>(3) * res * res);
    for (int ch = 0; ch < 3; ++ch)
        for (int r = 0; r < res; ++r)
            for (int c = 0; c < res; ++c)
                out[(static_cast<size_t>(ch) * res + r) * res + c] =
                    static_cast<float>(scene.rgb_at(r, c, ch));
    return out;
}

geom::SceneImage scene_from_chw(const std::vector<float>& rgb, const std::vector<float>& depth,
                                int res) {
    const size_t plane = static_cast<size_t>(res) * res;
    if (rgb.size() != 3 * plane) throw DataError("scene: rgb plane size mismatch");
    if (!depth.empty() && depth.size() != plane) throw DataError("scene: depth plane size mismatch");
    geom::SceneImage scene;
    scene.res = res;
    scene.meters_per_pixel = 0.0;
    scene.rgb.resize(3 * plane);
    scene.depth.assign(plane, 0.0);
    for (int ch = 0; ch < 3; ++ch)
        for (size_t i = 0; i < plane; ++i) scene.rgb[i * 3 + ch] = rgb[ch * plane + i];
    for (size_t i = 0; i < depth.size(); ++i) scene.depth[i] = depth[i];
    return scene;
}

SamplePack load_samples(const fs::path& dir, const ExperimentConfig& cfg,
                        const std::vector<int>& ids,
                        const std::function<dsp::InputTensor(dsp::InputTensor)>& transform) {
    const auto records = load_manifest_checked(dir);
    std::map<int, const io::EpisodeRecord*> by_id;
    for (const auto& rec : records) by_id[rec.id] = &rec;

    SamplePack pack;
    pack.input_res = cfg.model.input_res;
    pack.image_res = cfg.dataset.image_res;
    pack.records.reserve(ids.size());
    pack.inputs.reserve(ids.size());
    pack.rgb.reserve(ids.size());
    pack.depth.reserve(ids.size());

    for (int id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end())
            throw DataError("dataset: episode " + std::to_string(id) + " not in manifest");
        const auto& rec = *it->second;

        const auto bundle = io::read_wav(dir / rec.wav_path);
        auto input = dsp::preprocess(bundle, cfg.stft, cfg.seg_threshold, cfg.model.input_res);
        if (transform) input = transform(std::move(input));
        pack.inputs.push_back(input_to_chw(input));

        const auto scene =
            io::scene_from_images(io::read_ppm(dir / rec.rgb_path), io::read_pgm(dir / rec.depth_path));
        if (scene.res != cfg.dataset.image_res)
            throw DataError("dataset: image resolution differs from the config");
        pack.rgb.push_back(rgb_to_chw(scene));
        std::vector<float> depth(scene.depth.size());
        for (size_t i = 0; i < depth.size(); ++i) depth[i] = static_cast<float>(scene.depth[i]);
        pack.depth.push_back(std::move(depth));
        pack.records.push_back(rec);
    }
    return pack;
}

}  // namespace sonobox::data
