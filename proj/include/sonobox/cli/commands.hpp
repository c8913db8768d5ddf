#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sonobox/config.hpp"
#include "sonobox/dataset.hpp"

namespace sonobox::cli {

struct Options {
    std::string command;  // init | gen | train | eval | ablate | tdoa
    std::filesystem::path config_path;
    std::string scale = "desk";
    std::optional<uint64_t> seed;
    std::filesystem::path out;
    bool force = false;
    std::vector<std::filesystem::path> checkpoints;
    std::string which;               // flip | amplitude | shift
    std::vector<double> magnitudes;  // shift frames, or the amplitude threshold
};

// Sidecar written next to every checkpoint. Records how the network was
// trained so evaluation can rebuild it and the ablation guard can tell a
// retrained network from a stock one.
struct CheckpointMeta {
    std::string head = "rgb";       // rgb | depth
    std::string ablation = "none";  // none | amplitude
    double amplitude_tau = 0.0;
    double filter_scale = 0.25;
    int input_res = 128;
    uint64_t model_seed = 0;
};

void write_checkpoint_meta(const std::filesystem::path& path, const CheckpointMeta& meta);
CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

int cmd_init(const Options& opts);
int cmd_gen(const Options& opts);
int cmd_train(const Options& opts);
int cmd_eval(const Options& opts);
int cmd_ablate(const Options& opts);
int cmd_tdoa(const Options& opts);

// Dispatch on opts.command; lets tests drive commands in-process.
int run_command(const Options& opts);

// Full argv round: parse, dispatch, and map errors onto exit codes
// (2 config, 3 data, 4 numeric).
int run_cli(const std::vector<std::string>& args);

// Shared plumbing between train, eval, and ablate.
ExperimentConfig resolve_config(const Options& opts);
std::filesystem::path default_out(const Options& opts, const ExperimentConfig& cfg);
void train_one_head(const ExperimentConfig& cfg, const std::string& head,
                    const data::SamplePack& train_pack, const data::SamplePack& val_pack,
                    const std::filesystem::path& ckpt_path, const std::string& ablation, double tau,
                    std::ostream& losses);

}  // namespace sonobox::cli
