#include "sonobox/cli/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "sonobox/common.hpp"
#include "sonobox/dataset.hpp"
#include "sonobox/nn/checkpoint.hpp"
#include "sonobox/nn/model.hpp"
#include "sonobox/nn/train.hpp"

namespace sonobox::cli {

namespace fs = std::filesystem;
using nlohmann::json;

ExperimentConfig resolve_config(const Options& opts) {
    ExperimentConfig cfg =
        opts.config_path.empty() ? preset_config(opts.scale) : load_config(opts.config_path);
    if (opts.seed) {
        if (opts.command == "gen") {
            cfg.dataset.master_seed = *opts.seed;
        } else {
            cfg.model.seed = *opts.seed;
            cfg.training.shuffle_seed = *opts.seed + 1;
        }
    }
    return cfg;
}

fs::path default_out(const Options& opts, const ExperimentConfig& cfg) {
    if (!opts.out.empty()) return opts.out;
    if (opts.command == "gen") return cfg.paths.data_dir;
    return cfg.paths.run_dir;
}

void write_checkpoint_meta(const fs::path& path, const CheckpointMeta& meta) {
    const json j = {
        {"head", meta.head},
        {"ablation", meta.ablation},
        {"amplitude_tau", meta.amplitude_tau},
        {"filter_scale", meta.filter_scale},
        {"input_res", meta.input_res},
        {"model_seed", meta.model_seed},
    };
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("meta: cannot open for writing: " + path.string());
    const std::string text = j.dump(2) + "\n";
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

CheckpointMeta read_checkpoint_meta(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("meta: cannot open (expected next to the checkpoint): " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        const json j = json::parse(ss.str());
        CheckpointMeta meta;
        meta.head = j.at("head").get<std::string>();
        meta.ablation = j.at("ablation").get<std::string>();
        meta.amplitude_tau = j.at("amplitude_tau").get<double>();
        meta.filter_scale = j.at("filter_scale").get<double>();
        meta.input_res = j.at("input_res").get<int>();
        meta.model_seed = j.at("model_seed").get<uint64_t>();
        return meta;
    } catch (const json::exception& e) {
        throw DataError("meta: " + path.string() + ": " + e.what());
    }
}

int cmd_init(const Options& opts) {
    const fs::path out = opts.out.empty() ? fs::path("config.json") : opts.out;
    if (fs::exists(out) && !opts.force)
        throw ConfigError("init: " + out.string() + " exists (pass --force to overwrite)");
    ExperimentConfig cfg = preset_config(opts.scale);
    if (opts.seed) cfg.dataset.master_seed = *opts.seed;
    save_config(out, cfg);
    std::cout << "wrote " << out.string() << " (" << opts.scale << " preset)\n";
    return 0;
}

int cmd_gen(const Options& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const fs::path out = default_out(opts, cfg);
    data::generate_to_dir(cfg, out, opts.force);
    std::cout << "generated " << cfg.dataset.episodes << " episodes in " << out.string() << "\n";
    return 0;
}

namespace {

std::vector<nn::TrainSample> make_samples(const data::SamplePack& pack, const std::string& head) {
    std::vector<nn::TrainSample> samples;
    samples.reserve(pack.size());
    for (size_t i = 0; i < pack.size(); ++i)
        samples.push_back({pack.inputs[i], head == "rgb" ? pack.rgb[i] : pack.depth[i]});
    return samples;
}

}  // namespace

void train_one_head(const ExperimentConfig& cfg, const std::string& head,
                    const data::SamplePack& train_pack, const data::SamplePack& val_pack,
                    const fs::path& ckpt_path, const std::string& ablation, double tau,
                    std::ostream& losses) {
    const int out_channels = head == "rgb" ? 3 : 1;
    nn::SceneModel model(cfg.model_config(out_channels), cfg.model.seed);

    nn::TrainConfig tc;
    tc.epochs = cfg.training.epochs;
    tc.batch_size = cfg.training.batch_size;
    tc.base_lr = cfg.training.base_lr;
    tc.lr_milestones = cfg.training.lr_milestones;
    tc.loss = head == "rgb" ? nn::LossKind::SquaredError : nn::LossKind::AbsoluteError;
    tc.shuffle_seed = cfg.training.shuffle_seed;

    nn::train_model(model, make_samples(train_pack, head), make_samples(val_pack, head), tc,
                    [&](const nn::EpochStats& s) {
                        const json row = {{"epoch", s.epoch},
                                          {"head", head},
                                          {"lr", s.lr},
                                          {"train_loss", s.train_loss},
                                          {"val_loss", s.val_loss}};
                        losses << row.dump() << "\n";
                        losses.flush();
                        std::cout << "train[" << head << "] epoch " << s.epoch + 1 << "/" << tc.epochs
                                  << " train " << s.train_loss << " val " << s.val_loss << "\n";
                        std::cout.flush();
                    });

    nn::save_checkpoint(ckpt_path, model.named_state());
    CheckpointMeta meta;
    meta.head = head;
    meta.ablation = ablation;
    meta.amplitude_tau = tau;
    meta.filter_scale = cfg.model.filter_scale;
    meta.input_res = cfg.model.input_res;
    meta.model_seed = cfg.model.seed;
    write_checkpoint_meta(ckpt_path.string() + ".meta.json", meta);
}

int cmd_train(const Options& opts) {
    const ExperimentConfig cfg = resolve_config(opts);
    const fs::path data_dir = cfg.paths.data_dir;
    const fs::path out = default_out(opts, cfg);
    fs::create_directories(out);

    const auto split = data::dataset_split(cfg);
    const auto train_pack = data::load_samples(data_dir, cfg, split.train);
    const auto val_pack = data::load_samples(data_dir, cfg, split.val);
    std::cout << "loaded " << train_pack.size() << " train / " << val_pack.size() << " val episodes\n";

    std::ofstream losses(out / "losses.jsonl", std::ios::binary | std::ios::trunc);
    if (!losses) throw DataError("train: cannot open loss trace for writing");

    const std::vector<std::string> heads =
        cfg.model.heads == "both" ? std::vector<std::string>{"rgb", "depth"}
                                  : std::vector<std::string>{cfg.model.heads};
    for (const auto& head : heads)
        train_one_head(cfg, head, train_pack, val_pack, out / (head + ".ckpt"), "none", 0.0, losses);
    std::cout << "checkpoints written to " << out.string() << "\n";
    return 0;
}

int run_command(const Options& opts) {
    if (opts.command == "init") return cmd_init(opts);
    if (opts.command == "gen") return cmd_gen(opts);
    if (opts.command == "train") return cmd_train(opts);
    if (opts.command == "eval") return cmd_eval(opts);
    if (opts.command == "ablate") return cmd_ablate(opts);
    if (opts.command == "tdoa") return cmd_tdoa(opts);
    throw ConfigError("unknown command: " + opts.command);
}

}  // namespace sonobox::cli
