#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include "sonobox/config.hpp"
#include "sonobox/dsp.hpp"
#include "sonobox/io/manifest.hpp"

namespace sonobox::data {

// Directory layout written by generate_to_dir:
//   dir/config.json     resolved configuration
//   dir/manifest.jsonl  one record per episode
//   dir/wav/ep_XXXXX.wav
//   dir/rgb/ep_XXXXX.ppm
//   dir/depth/ep_XXXXX.pgm
// Refuses a non-empty directory unless force is set; a re-run with the same
// config produces byte-identical files.
void generate_to_dir(const ExperimentConfig& cfg, const std::filesystem::path& dir, bool force);

struct SplitIndices {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;
};

// Seeded shuffle, then contiguous cuts; each part comes back sorted.
// Counts round to the nearest episode with the remainder going to test.
SplitIndices split_indices(int n, double train_fraction, double val_fraction, uint64_t seed);
SplitIndices dataset_split(const ExperimentConfig& cfg);

// Episodes flattened for training: spectrogram tensors in channel-major
// order, targets as interleaved rgb and a depth plane, all float.
struct SamplePack {
    std::vector<io::EpisodeRecord> records;
    std::vector<std::vector<float>> inputs;
    std::vector<std::vector<float>> rgb;
    std::vector<std::vector<float>> depth;
    int input_res = 0;
    int image_res = 0;

    size_t size() const { return records.size(); }
};

// transform, when set, edits each spectrogram tensor before flattening;
// the test-time input perturbations plug in here.
SamplePack load_samples(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                        const std::vector<int>& ids,
                        const std::function<dsp::InputTensor(dsp::InputTensor)>& transform = {});

// Reads the manifest and checks it against the directory contents.
std::vector<io::EpisodeRecord> load_manifest_checked(const std::filesystem::path& dir);

std::vector<float> input_to_chw(const dsp::InputTensor& input);
std::vector<float> rgb_to_chw(const geom::SceneImage& scene);
geom::SceneImage scene_from_chw(const std::vector<float>& rgb, const std::vector<float>& depth,
                                int res);

}  // namespace sonobox::data
