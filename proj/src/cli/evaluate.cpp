#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "json.hpp"
#include "sonobox/cli/commands.hpp"
#include "sonobox/common.hpp"
#include "sonobox/dataset.hpp"
#include "sonobox/eval/baselines.hpp"
#include "sonobox/eval/metrics.hpp"
#include "sonobox/io/image_io.hpp"
#include "sonobox/io/wav.hpp"
#include "sonobox/nn/checkpoint.hpp"
#include "sonobox/nn/model.hpp"
#include "sonobox/tdoa.hpp"

namespace sonobox::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kMaskTol = 0.15;

struct Row {
    std::string system;
    int run = 0;
    int id = 0;
    double iou = 0.0;
    std::optional<double> d;
    double l = 0.0;
    bool hit = false;
    std::optional<double> d_mirror;
};

json row_json(const Row& r) {
    json j = {{"system", r.system}, {"run", r.run}, {"id", r.id},
              {"iou", r.iou},       {"l", r.l},     {"hit", r.hit}};
    j["d"] = r.d ? json(*r.d) : json(nullptr);
    if (r.d_mirror) j["d_mirror"] = *r.d_mirror;
    return j;
}

// Trailing aggregates: per system, the mean over runs of each run's mean,
// with the standard error of that mean once there are at least two runs.
void write_report(const fs::path& path, const std::vector<Row>& rows) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("report: cannot open for writing: " + path.string());
    for (const auto& r : rows) f << row_json(r).dump() << "\n";

    std::vector<std::string> order;
    std::map<std::string, std::map<int, std::vector<const Row*>>> by_system;
    for (const auto& r : rows) {
        if (!by_system.count(r.system)) order.push_back(r.system);
        by_system[r.system][r.run].push_back(&r);
    }
    for (const auto& system : order) {
        std::vector<double> iou_means, loc_means;
        double d_sum = 0.0, dm_sum = 0.0;
        int d_n = 0, dm_n = 0, n_per_run = 0;
        for (const auto& [run, rs] : by_system[system]) {
            double iou = 0.0, loc = 0.0;
            for (const auto* r : rs) {
                iou += r->iou;
                loc += r->hit ? 1.0 : 0.0;
                if (r->d) {
                    d_sum += *r->d;
                    ++d_n;
                }
                if (r->d_mirror) {
                    dm_sum += *r->d_mirror;
                    ++dm_n;
                }
            }
            iou_means.push_back(iou / rs.size());
            loc_means.push_back(loc / rs.size());
            n_per_run = static_cast<int>(rs.size());
        }
        const int k = static_cast<int>(iou_means.size());
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / v.size();
        };
        auto sem = [&](const std::vector<double>& v) {
            const double m = mean(v);
            double ss = 0.0;
            for (double x : v) ss += (x - m) * (x - m);
            return std::sqrt(ss / (v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
        };
        json agg = {{"aggregate", true},          {"system", system},
                    {"runs", k},                  {"n", n_per_run},
                    {"iou_mean", mean(iou_means)}, {"loc_score", mean(loc_means)}};
        if (k >= 2) {
            agg["iou_sem"] = sem(iou_means);
            agg["loc_sem"] = sem(loc_means);
        }
        if (d_n > 0) agg["d_mean"] = d_sum / d_n;
        if (dm_n > 0) agg["d_mirror_mean"] = dm_sum / dm_n;
        f << agg.dump() << "\n";
    }
    if (!f) throw DataError("report: write failed: " + path.string());
}

std::string episode_tag(int id) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ep_%05d", id);
    return buf;
}

geom::SceneImage rgb_scene(const std::vector<float>& planes, int res) {
    return data::scene_from_chw(planes, {}, res);
}

// Depth-only predictions are scored through the same mask machinery by
// replicating the plane into the color channels against a black background.
geom::SceneImage depth_scene(const std::vector<float>& plane, int res) {
    geom::SceneImage s;
    s.res = res;
    s.meters_per_pixel = 0.0;
    s.rgb.resize(static_cast<size_t>(res) * res * 3);
    s.depth.assign(plane.begin(), plane.end());
    for (size_t i = 0; i < plane.size(); ++i)
        for (int ch = 0; ch < 3; ++ch) s.rgb[i * 3 + ch] = plane[i];
    return s;
}

struct LoadedModel {
    CheckpointMeta meta;
    nn::SceneModel model;
};

LoadedModel load_model(const fs::path& ckpt_path) {
    const auto meta = read_checkpoint_meta(ckpt_path.string() + ".meta.json");
    nn::ModelConfig mc;
    mc.out_channels = meta.head == "rgb" ? 3 : 1;
    mc.input_hw = meta.input_res;
    mc.filter_scale = meta.filter_scale;
    LoadedModel lm{meta, nn::SceneModel(mc, 0)};
    lm.model.load_state(nn::load_checkpoint(ckpt_path));
    return lm;
}

std::vector<std::vector<float>> predict_all(nn::SceneModel& model, const data::SamplePack& pack,
                                            int out_channels, int batch = 16) {
    const int res = pack.input_res;
    const size_t in_plane = static_cast<size_t>(4) * res * res;
    const size_t out_plane = static_cast<size_t>(out_channels) * res * res;
    std::vector<std::vector<float>> out;
    out.reserve(pack.size());
    for (size_t start = 0; start < pack.size(); start += batch) {
        const int bs = static_cast<int>(std::min<size_t>(batch, pack.size() - start));
        nn::Tensor x(bs, 4, res, res, false);
        for (int b = 0; b < bs; ++b)
            for (size_t i = 0; i < in_plane; ++i)
                x.data[b * in_plane + i] = pack.inputs[start + b][i];
        const nn::Tensor y = model.forward(x, false);
        for (int b = 0; b < bs; ++b) {
            std::vector<float> planes(out_plane);
            for (size_t i = 0; i < out_plane; ++i)
                planes[i] = static_cast<float>(y.data[b * out_plane + i]);
            out.push_back(std::move(planes));
        }
    }
    return out;
}

std::optional<double> mask_center_distance(const geom::SceneImage& pred,
                                           const std::array<double, 3>& background, double mx,
                                           double my) {
    const auto mask = eval::binarize(pred, background, kMaskTol);
    if (mask.empty()) return std::nullopt;
    const auto box = eval::min_area_box(mask);
    const double dx = box.cx - mx;
    const double dy = box.cy - my;
    return std::sqrt(dx * dx + dy * dy);
}

struct EvalData {
    ExperimentConfig cfg;
    fs::path data_dir;
    fs::path out;
    data::SplitIndices split;
    data::SamplePack test;
    geom::RenderPalette palette;
};

EvalData prepare(const Options& opts,
                 const std::function<dsp::InputTensor(dsp::InputTensor)>& transform = {}) {
    EvalData ed{resolve_config(opts), {}, {}, {}, {}, {}};
    ed.data_dir = ed.cfg.paths.data_dir;
    ed.out = default_out(opts, ed.cfg);
    fs::create_directories(ed.out);
    ed.split = data::dataset_split(ed.cfg);
    ed.test = data::load_samples(ed.data_dir, ed.cfg, ed.split.test, transform);
    if (ed.test.size() == 0) throw DataError("eval: the test split is empty");
    return ed;
}

// Scores one checkpoint over the test pack in its native head space.
std::vector<Row> model_rows(const std::string& system, int run, LoadedModel& lm,
                            const EvalData& ed, bool mirror_diagnostic,
                            std::vector<std::vector<float>>* export_planes = nullptr) {
    const auto preds = predict_all(lm.model, ed.test, lm.meta.head == "rgb" ? 3 : 1);
    const bool rgb = lm.meta.head == "rgb";
    const std::array<double, 3> bg = rgb ? ed.palette.background : std::array<double, 3>{0, 0, 0};
    const auto world = ed.cfg.box_world();
    const int res = ed.test.image_res;
    const Vec2 center_px =
        geom::world_to_pixel(world, res, world.width_m / 2.0, world.length_m / 2.0);

    std::vector<Row> rows;
    for (size_t i = 0; i < ed.test.size(); ++i) {
        const auto pred = rgb ? rgb_scene(preds[i], res) : depth_scene(preds[i], res);
        const auto truth =
            rgb ? rgb_scene(ed.test.rgb[i], res) : depth_scene(ed.test.depth[i], res);
        const auto score = eval::score_pair(pred, truth, bg, kMaskTol);
        Row row{system, run, ed.test.records[i].id, score.iou, std::nullopt, score.l, score.hit, {}};
        if (!score.pred_empty) row.d = score.d;
        if (mirror_diagnostic) {
            const auto truth_box = eval::min_area_box(eval::binarize(truth, bg, kMaskTol));
            row.d_mirror = mask_center_distance(pred, bg, 2.0 * center_px.x - truth_box.cx,
                                                2.0 * center_px.y - truth_box.cy);
        }
        rows.push_back(row);
    }
    if (export_planes) *export_planes = preds;
    return rows;
}

void export_predictions(const EvalData& ed, const CheckpointMeta& meta,
                        const std::vector<std::vector<float>>& preds) {
    const fs::path dir = ed.out / "pred";
    fs::create_directories(dir);
    const int res = ed.test.image_res;
    for (size_t i = 0; i < ed.test.size(); ++i) {
        const std::string tag = episode_tag(ed.test.records[i].id);
        if (meta.head == "rgb") {
            io::write_ppm(dir / (tag + ".ppm"), io::quantize_rgb(rgb_scene(preds[i], res)));
        } else {
            io::write_pgm(dir / (tag + ".pgm"), io::quantize_depth(depth_scene(preds[i], res)));
        }
    }
}

std::vector<Row> tdoa_rows(const EvalData& ed) {
    const auto world = ed.cfg.box_world();
    const int res = ed.test.image_res;
    std::vector<Row> rows;
    for (size_t i = 0; i < ed.test.size(); ++i) {
        const auto& rec = ed.test.records[i];
        const auto bundle = io::read_wav(ed.data_dir / rec.wav_path);
        const auto shape = geom::default_shape(geom::shape_from_name(rec.shape));
        const auto pred = tdoa::tdoa_predict_scene(bundle, world, shape, {}, res, ed.palette);
        const auto truth = rgb_scene(ed.test.rgb[i], res);
        const auto score = eval::score_pair(pred, truth, ed.palette.background, kMaskTol);
        Row row{"tdoa", 0, rec.id, score.iou, std::nullopt, score.l, score.hit, {}};
        if (!score.pred_empty) row.d = score.d;
        rows.push_back(row);
    }
    return rows;
}

std::vector<Row> baseline_rows(const EvalData& ed, const data::SamplePack& train, uint64_t seed) {
    const int res = ed.test.image_res;
    const auto bg = ed.palette.background;
    std::vector<Row> rows;

    auto push = [&](const char* system, size_t i, const geom::SceneImage& pred) {
        const auto truth = rgb_scene(ed.test.rgb[i], res);
        const auto score = eval::score_pair(pred, truth, bg, kMaskTol);
        Row row{system, 0, ed.test.records[i].id, score.iou, std::nullopt, score.l, score.hit, {}};
        if (!score.pred_empty) row.d = score.d;
        rows.push_back(row);
    };

    const auto picks = eval::baseline_random_picks(static_cast<int>(train.size()),
                                                   static_cast<int>(ed.test.size()), seed);
    for (size_t i = 0; i < ed.test.size(); ++i)
        push("random", i, rgb_scene(train.rgb[picks[i]], res));

    std::vector<eval::RotatedBox> boxes;
    for (size_t i = 0; i < train.size(); ++i) {
        const auto mask = eval::binarize(rgb_scene(train.rgb[i], res), bg, kMaskTol);
        if (!mask.empty()) boxes.push_back(eval::min_area_box(mask));
    }
    if (boxes.empty()) throw DataError("eval: no foreground in any training scene");
    const auto avg_scene = eval::render_box_scene(eval::average_box(boxes), res, ed.palette);
    for (size_t i = 0; i < ed.test.size(); ++i) push("avg_box", i, avg_scene);

    for (size_t i = 0; i < ed.test.size(); ++i) {
        const int j = eval::nearest_index(train.inputs, ed.test.inputs[i]);
        push("nearest", i, rgb_scene(train.rgb[j], res));
    }
    return rows;
}

}  // namespace

int cmd_eval(const Options& opts) {
    if (opts.checkpoints.empty()) throw ConfigError("eval: --checkpoint is required");
    EvalData ed = prepare(opts);
    const auto train = data::load_samples(ed.data_dir, ed.cfg, ed.split.train);
    if (train.size() == 0) throw DataError("eval: the training split is empty");

    std::vector<Row> rows;
    for (size_t r = 0; r < opts.checkpoints.size(); ++r) {
        auto lm = load_model(opts.checkpoints[r]);
        std::vector<std::vector<float>> preds;
        auto mr = model_rows("model", static_cast<int>(r), lm, ed, false, r == 0 ? &preds : nullptr);
        rows.insert(rows.end(), mr.begin(), mr.end());
        if (r == 0) export_predictions(ed, lm.meta, preds);
    }
    for (auto& r : tdoa_rows(ed)) rows.push_back(r);
    for (auto& r : baseline_rows(ed, train, opts.seed.value_or(0))) rows.push_back(r);

    write_report(ed.out / "report_eval.jsonl", rows);
    std::cout << "report written to " << (ed.out / "report_eval.jsonl").string() << "\n";
    return 0;
}

int cmd_tdoa(const Options& opts) {
    EvalData ed = prepare(opts);
    write_report(ed.out / "report_tdoa.jsonl", tdoa_rows(ed));
    std::cout << "report written to " << (ed.out / "report_tdoa.jsonl").string() << "\n";
    return 0;
}

int cmd_ablate(const Options& opts) {
    if (opts.which == "flip") {
        if (opts.checkpoints.empty()) throw ConfigError("ablate: --checkpoint is required for flip");
        EvalData ed = prepare(opts, [](dsp::InputTensor t) { return dsp::ablate_flip(std::move(t)); });
        std::vector<Row> rows;
        for (size_t r = 0; r < opts.checkpoints.size(); ++r) {
            auto lm = load_model(opts.checkpoints[r]);
            auto mr = model_rows("flip", static_cast<int>(r), lm, ed, true);
            rows.insert(rows.end(), mr.begin(), mr.end());
        }
        write_report(ed.out / "report_flip.jsonl", rows);
        std::cout << "report written to " << (ed.out / "report_flip.jsonl").string() << "\n";
        return 0;
    }

    if (opts.which == "shift") {
        if (opts.checkpoints.empty()) throw ConfigError("ablate: --checkpoint is required for shift");
        const std::vector<double> magnitudes =
            opts.magnitudes.empty() ? std::vector<double>{0.0} : opts.magnitudes;
        for (double mag : magnitudes) {
            const int frames = static_cast<int>(std::lround(mag));
            if (frames < 0) throw ConfigError("ablate: shift magnitude must be non-negative");
            EvalData ed = prepare(opts, [frames](dsp::InputTensor t) {
                return dsp::ablate_temporal_shift(std::move(t), frames);
            });
            std::vector<Row> rows;
            for (size_t r = 0; r < opts.checkpoints.size(); ++r) {
                auto lm = load_model(opts.checkpoints[r]);
                auto mr = model_rows("shift", static_cast<int>(r), lm, ed, false);
                rows.insert(rows.end(), mr.begin(), mr.end());
            }
            const fs::path path = ed.out / ("report_shift_" + std::to_string(frames) + ".jsonl");
            write_report(path, rows);
            std::cout << "report written to " << path.string() << "\n";
        }
        return 0;
    }

    if (opts.which == "amplitude") {
        double tau = opts.magnitudes.empty() ? 0.5 : opts.magnitudes[0];
        if (tau <= 0.0 || tau >= 1.0) throw ConfigError("ablate: amplitude threshold must lie in (0, 1)");

        std::vector<fs::path> checkpoints = opts.checkpoints;
        if (checkpoints.empty()) {
            // no checkpoint: retrain on thresholded inputs, then evaluate
            const ExperimentConfig cfg = resolve_config(opts);
            const fs::path out = default_out(opts, cfg);
            fs::create_directories(out);
            const auto split = data::dataset_split(cfg);
            auto threshold = [tau](dsp::InputTensor t) {
                return dsp::ablate_threshold_amplitude(std::move(t), tau);
            };
            const auto train_pack = data::load_samples(cfg.paths.data_dir, cfg, split.train, threshold);
            const auto val_pack = data::load_samples(cfg.paths.data_dir, cfg, split.val, threshold);
            std::ofstream losses(out / "losses_amplitude.jsonl", std::ios::binary | std::ios::trunc);
            if (!losses) throw DataError("ablate: cannot open loss trace for writing");
            const std::vector<std::string> heads =
                cfg.model.heads == "both" ? std::vector<std::string>{"rgb", "depth"}
                                          : std::vector<std::string>{cfg.model.heads};
            for (const auto& head : heads) {
                const fs::path ckpt = out / (head + "_amplitude.ckpt");
                train_one_head(cfg, head, train_pack, val_pack, ckpt, "amplitude", tau, losses);
                checkpoints.push_back(ckpt);
            }
        } else {
            for (const auto& ckpt : checkpoints) {
                const auto meta = read_checkpoint_meta(ckpt.string() + ".meta.json");
                if (meta.ablation != "amplitude")
                    throw ConfigError(
                        "ablate: " + ckpt.string() +
                        " was not trained on thresholded input; retrain (run without --checkpoint) "
                        "instead of evaluating a stock network under the amplitude ablation");
                tau = meta.amplitude_tau;
            }
        }

        EvalData ed = prepare(opts, [tau](dsp::InputTensor t) {
            return dsp::ablate_threshold_amplitude(std::move(t), tau);
        });
        std::vector<Row> rows;
        for (size_t r = 0; r < checkpoints.size(); ++r) {
            auto lm = load_model(checkpoints[r]);
            auto mr = model_rows("amplitude", static_cast<int>(r), lm, ed, false);
            rows.insert(rows.end(), mr.begin(), mr.end());
        }
        write_report(ed.out / "report_amplitude.jsonl", rows);
        std::cout << "report written to " << (ed.out / "report_amplitude.jsonl").string() << "\n";
        return 0;
    }

    throw ConfigError("ablate: --which must be flip, amplitude, or shift");
}

}  // namespace sonobox::cli
