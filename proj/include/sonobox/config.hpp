#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sonobox/dsp.hpp"
#include "sonobox/geometry.hpp"
#include "sonobox/nn/model.hpp"
#include "sonobox/sim.hpp"

namespace sonobox {

// Everything an experiment needs, serializable as JSON. All randomness flows
// from the four seeds below; nothing reads the clock.
struct ExperimentConfig {
    struct WorldSection {
        double width_m = 0.155;
        double length_m = 0.26;
        double height_m = 0.13;
        double wave_speed = 500.0;
        double sample_rate = 16000.0;
        double mic_height_m = 0.02;
    } world;

    sim::TrajectoryConfig trajectory;
    sim::AcousticsConfig acoustics;

    dsp::StftConfig stft;
    double seg_threshold = 0.01;

    struct ModelSection {
        double filter_scale = 0.25;
        int input_res = 128;
        std::string heads = "rgb";  // rgb | depth | both
        uint64_t seed = 1;
    } model;

    struct TrainingSection {
        int epochs = 100;
        int batch_size = 32;
        double base_lr = 1e-3;
        std::vector<int> lr_milestones{20, 50, 100};
        uint64_t shuffle_seed = 2;
    } training;

    struct DatasetSection {
        int episodes = 1000;
        double train_fraction = 0.8;
        double val_fraction = 0.1;
        double test_fraction = 0.1;
        std::string shapes = "mixed";  // cube | block | stick | mixed
        uint64_t master_seed = 3;
        uint64_t split_seed = 4;
        int image_res = 128;
    } dataset;

    struct PathsSection {
        std::string data_dir = "data";
        std::string run_dir = "run";
    } paths;

    void validate() const;

    // Configured box with wall-centered pickups.
    geom::BoxWorld box_world() const;
    nn::ModelConfig model_config(int out_channels) const;
    std::vector<geom::ShapeSpec> shape_roster() const;
};

// Quarter-width networks and a training length that fits on one core.
ExperimentConfig desk_config();
// Full-width networks and the long training schedule.
ExperimentConfig paper_config();
ExperimentConfig preset_config(const std::string& scale);  // "desk" | "paper"

// Strict parse: every key must be present, unknown keys are errors.
ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg);
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

}  // namespace sonobox
