#include "sonobox/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sonobox/common.hpp"

namespace sonobox {

namespace {

using nlohmann::json;

// Wraps one JSON object; every accessor marks its key as consumed so finish()
// can flag typos.
struct Section {
    const json& j;
    std::string prefix;
    std::set<std::string> seen;

    const json& field(const std::string& key) {
        if (!j.contains(key)) throw ConfigError("config: missing key " + prefix + key);
        seen.insert(key);
        return j.at(key);
    }
    double num(const std::string& key) {
        const json& v = field(key);
        if (!v.is_number()) throw ConfigError("config: " + prefix + key + " must be a number");
        return v.get<double>();
    }
    int integer(const std::string& key) {
        const json& v = field(key);
        if (!v.is_number_integer()) throw ConfigError("config: " + prefix + key + " must be an integer");
        return v.get<int>();
    }
    uint64_t seed(const std::string& key) {
        const json& v = field(key);
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw ConfigError("config: " + prefix + key + " must be an integer seed");
        return v.get<uint64_t>();
    }
    std::string str(const std::string& key) {
        const json& v = field(key);
        if (!v.is_string()) throw ConfigError("config: " + prefix + key + " must be a string");
        return v.get<std::string>();
    }
    std::vector<int> int_list(const std::string& key) {
        const json& v = field(key);
        if (!v.is_array()) throw ConfigError("config: " + prefix + key + " must be a list");
        std::vector<int> out;
        for (const auto& e : v) {
            if (!e.is_number_integer())
                throw ConfigError("config: " + prefix + key + " entries must be integers");
            out.push_back(e.get<int>());
        }
        return out;
    }
    Section object(const std::string& key) { return Section{field(key), prefix + key + ".", {}}; }
    void finish() {
        for (const auto& [key, value] : j.items())
            if (!seen.count(key)) throw ConfigError("config: unknown key " + prefix + key);
    }
};

void require(bool ok, const std::string& what) {
    if (!ok) throw ConfigError("config: " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
    require(world.width_m > 0 && world.length_m > 0 && world.height_m > 0, "box dimensions must be positive");
    require(world.sample_rate > 0, "sample rate must be positive");
    require(world.wave_speed > 0, "wave speed must be positive");
    require(world.mic_height_m >= 0 && world.mic_height_m <= world.height_m,
            "mic height must lie within the box");

    require(trajectory.drop_height_lo_m > 0 && trajectory.drop_height_hi_m >= trajectory.drop_height_lo_m,
            "drop height range is empty or non-positive");
    require(trajectory.restitution_lo >= 0 && trajectory.restitution_hi >= trajectory.restitution_lo &&
                trajectory.restitution_hi < 1,
            "restitution range must lie in [0, 1)");
    require(trajectory.max_h_speed >= 0, "max horizontal speed must be non-negative");
    require(trajectory.stop_speed > 0, "stop speed must be positive");
    require(trajectory.max_impacts >= 1, "at least one impact");
    require(trajectory.gravity > 0, "gravity must be positive");

    acoustics.validate();
    stft.validate(world.sample_rate);
    require(seg_threshold > 0 && seg_threshold < 1, "segmentation threshold must lie in (0, 1)");

    require(model.filter_scale > 0, "filter scale must be positive");
    require(model.heads == "rgb" || model.heads == "depth" || model.heads == "both",
            "heads must be rgb, depth, or both");
    require(model.input_res == stft.n_mels, "model input resolution must equal the mel band count");

    require(training.epochs >= 1, "at least one epoch");
    require(training.batch_size >= 1, "batch size must be positive");
    require(training.base_lr > 0, "learning rate must be positive");

    require(dataset.episodes >= 1, "at least one episode");
    const double frac_sum =
        dataset.train_fraction + dataset.val_fraction + dataset.test_fraction;
    require(dataset.train_fraction >= 0 && dataset.val_fraction >= 0 && dataset.test_fraction >= 0,
            "split fractions must be non-negative");
    require(std::abs(frac_sum - 1.0) <= 1e-9, "split fractions must sum to 1");
    require(dataset.shapes == "cube" || dataset.shapes == "block" || dataset.shapes == "stick" ||
                dataset.shapes == "mixed",
            "shapes must be cube, block, stick, or mixed");
    require(dataset.image_res == model.input_res,
            "scene resolution must match the model output resolution");
    require(!paths.data_dir.empty() && !paths.run_dir.empty(), "paths must not be empty");

    model_config(3).validate();
}

geom::BoxWorld ExperimentConfig::box_world() const {
    geom::BoxWorld w;
    w.width_m = world.width_m;
    w.length_m = world.length_m;
    w.height_m = world.height_m;
    w.wave_speed = world.wave_speed;
    w.sample_rate = world.sample_rate;
    const double h = world.mic_height_m;
    w.mic_positions = {
        Vec3{0.0, w.length_m / 2.0, h},
        Vec3{w.width_m / 2.0, 0.0, h},
        Vec3{w.width_m / 2.0, w.length_m, h},
        Vec3{w.width_m, w.length_m / 2.0, h},
    };
    w.validate();
    return w;
}

nn::ModelConfig ExperimentConfig::model_config(int out_channels) const {
    nn::ModelConfig cfg;
    cfg.out_channels = out_channels;
    cfg.input_hw = model.input_res;
    cfg.filter_scale = model.filter_scale;
    return cfg;
}

std::vector<geom::ShapeSpec> ExperimentConfig::shape_roster() const {
    using geom::ShapeKind;
    if (dataset.shapes == "mixed")
        return {geom::default_shape(ShapeKind::Cube), geom::default_shape(ShapeKind::Block),
                geom::default_shape(ShapeKind::Stick)};
    return {geom::default_shape(geom::shape_from_name(dataset.shapes))};
}

ExperimentConfig desk_config() { return ExperimentConfig{}; }

ExperimentConfig paper_config() {
    ExperimentConfig cfg;
    cfg.model.filter_scale = 1.0;
    cfg.model.heads = "both";
    cfg.training.epochs = 500;
    return cfg;
}

ExperimentConfig preset_config(const std::string& scale) {
    if (scale == "desk") return desk_config();
    if (scale == "paper") return paper_config();
    throw ConfigError("config: unknown scale '" + scale + "' (expected desk or paper)");
}

std::string config_to_json(const ExperimentConfig& cfg) {
    const json j = {
        {"world",
         {{"width_m", cfg.world.width_m},
          {"length_m", cfg.world.length_m},
          {"height_m", cfg.world.height_m},
          {"wave_speed", cfg.world.wave_speed},
          {"sample_rate", cfg.world.sample_rate},
          {"mic_height_m", cfg.world.mic_height_m}}},
        {"trajectory",
         {{"drop_height_lo_m", cfg.trajectory.drop_height_lo_m},
          {"drop_height_hi_m", cfg.trajectory.drop_height_hi_m},
          {"restitution_lo", cfg.trajectory.restitution_lo},
          {"restitution_hi", cfg.trajectory.restitution_hi},
          {"max_h_speed", cfg.trajectory.max_h_speed},
          {"stop_speed", cfg.trajectory.stop_speed},
          {"max_impacts", cfg.trajectory.max_impacts},
          {"gravity", cfg.trajectory.gravity}}},
        {"acoustics",
         {{"decay_tau_s", cfg.acoustics.decay_tau_s},
          {"ring_freq_lo_hz", cfg.acoustics.ring_freq_lo_hz},
          {"ring_freq_hi_hz", cfg.acoustics.ring_freq_hi_hz},
          {"attenuation_exponent", cfg.acoustics.attenuation_exponent},
          {"echo_count", cfg.acoustics.echo_count},
          {"echo_delay_s", cfg.acoustics.echo_delay_s},
          {"echo_gain", cfg.acoustics.echo_gain},
          {"noise_std", cfg.acoustics.noise_std},
          {"clip_len_s", cfg.acoustics.clip_len_s},
          {"min_distance_m", cfg.acoustics.min_distance_m}}},
        {"dsp",
         {{"window_len", cfg.stft.window_len},
          {"hop", cfg.stft.hop},
          {"n_mels", cfg.stft.n_mels},
          {"fmin_hz", cfg.stft.fmin_hz},
          {"fmax_hz", cfg.stft.fmax_hz},
          {"log_floor", cfg.stft.log_floor},
          {"seg_threshold", cfg.seg_threshold}}},
        {"model",
         {{"filter_scale", cfg.model.filter_scale},
          {"input_res", cfg.model.input_res},
          {"heads", cfg.model.heads},
          {"seed", cfg.model.seed}}},
        {"training",
         {{"epochs", cfg.training.epochs},
          {"batch_size", cfg.training.batch_size},
          {"base_lr", cfg.training.base_lr},
          {"lr_milestones", cfg.training.lr_milestones},
          {"shuffle_seed", cfg.training.shuffle_seed}}},
        {"dataset",
         {{"episodes", cfg.dataset.episodes},
          {"train_fraction", cfg.dataset.train_fraction},
          {"val_fraction", cfg.dataset.val_fraction},
          {"test_fraction", cfg.dataset.test_fraction},
          {"shapes", cfg.dataset.shapes},
          {"master_seed", cfg.dataset.master_seed},
          {"split_seed", cfg.dataset.split_seed},
          {"image_res", cfg.dataset.image_res}}},
        {"paths", {{"data_dir", cfg.paths.data_dir}, {"run_dir", cfg.paths.run_dir}}},
    };
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top level must be an object");

    ExperimentConfig cfg;
    Section root{j, "", {}};

    Section world = root.object("world");
    cfg.world.width_m = world.num("width_m");
    cfg.world.length_m = world.num("length_m");
    cfg.world.height_m = world.num("height_m");
    cfg.world.wave_speed = world.num("wave_speed");
    cfg.world.sample_rate = world.num("sample_rate");
    cfg.world.mic_height_m = world.num("mic_height_m");
    world.finish();

    Section traj = root.object("trajectory");
    cfg.trajectory.drop_height_lo_m = traj.num("drop_height_lo_m");
    cfg.trajectory.drop_height_hi_m = traj.num("drop_height_hi_m");
    cfg.trajectory.restitution_lo = traj.num("restitution_lo");
    cfg.trajectory.restitution_hi = traj.num("restitution_hi");
    cfg.trajectory.max_h_speed = traj.num("max_h_speed");
    cfg.trajectory.stop_speed = traj.num("stop_speed");
    cfg.trajectory.max_impacts = traj.integer("max_impacts");
    cfg.trajectory.gravity = traj.num("gravity");
    traj.finish();

    Section ac = root.object("acoustics");
    cfg.acoustics.decay_tau_s = ac.num("decay_tau_s");
    cfg.acoustics.ring_freq_lo_hz = ac.num("ring_freq_lo_hz");
    cfg.acoustics.ring_freq_hi_hz = ac.num("ring_freq_hi_hz");
    cfg.acoustics.attenuation_exponent = ac.num("attenuation_exponent");
    cfg.acoustics.echo_count = ac.integer("echo_count");
    cfg.acoustics.echo_delay_s = ac.num("echo_delay_s");
    cfg.acoustics.echo_gain = ac.num("echo_gain");
    cfg.acoustics.noise_std = ac.num("noise_std");
    cfg.acoustics.clip_len_s = ac.num("clip_len_s");
    cfg.acoustics.min_distance_m = ac.num("min_distance_m");
    ac.finish();

    Section dsp = root.object("dsp");
    cfg.stft.window_len = dsp.integer("window_len");
    cfg.stft.hop = dsp.integer("hop");
    cfg.stft.n_mels = dsp.integer("n_mels");
    cfg.stft.fmin_hz = dsp.num("fmin_hz");
    cfg.stft.fmax_hz = dsp.num("fmax_hz");
    cfg.stft.log_floor = dsp.num("log_floor");
    cfg.seg_threshold = dsp.num("seg_threshold");
    dsp.finish();

    Section model = root.object("model");
    cfg.model.filter_scale = model.num("filter_scale");
    cfg.model.input_res = model.integer("input_res");
    cfg.model.heads = model.str("heads");
    cfg.model.seed = model.seed("seed");
    model.finish();

    Section training = root.object("training");
    cfg.training.epochs = training.integer("epochs");
    cfg.training.batch_size = training.integer("batch_size");
    cfg.training.base_lr = training.num("base_lr");
    cfg.training.lr_milestones = training.int_list("lr_milestones");
    cfg.training.shuffle_seed = training.seed("shuffle_seed");
    training.finish();

    Section dataset = root.object("dataset");
    cfg.dataset.episodes = dataset.integer("episodes");
    cfg.dataset.train_fraction = dataset.num("train_fraction");
    cfg.dataset.val_fraction = dataset.num("val_fraction");
    cfg.dataset.test_fraction = dataset.num("test_fraction");
    cfg.dataset.shapes = dataset.str("shapes");
    cfg.dataset.master_seed = dataset.seed("master_seed");
    cfg.dataset.split_seed = dataset.seed("split_seed");
    cfg.dataset.image_res = dataset.integer("image_res");
    dataset.finish();

    Section paths = root.object("paths");
    cfg.paths.data_dir = paths.str("data_dir");
    cfg.paths.run_dir = paths.str("run_dir");
    paths.finish();

    root.finish();
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("config: cannot open: " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

void save_config(const std::filesystem::path& path, const ExperimentConfig& cfg) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("config: cannot open for writing: " + path.string());
    const std::string text = config_to_json(cfg);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f) throw ConfigError("config: write failed: " + path.string());
}

}  // namespace sonobox
