#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "sonobox/cli/commands.hpp"
#include "sonobox/common.hpp"
#include "sonobox/config.hpp"
#include "sonobox/dsp.hpp"
#include "sonobox/eval/metrics.hpp"
#include "sonobox/geometry.hpp"
#include "sonobox/nn/checkpoint.hpp"
#include "sonobox/nn/model.hpp"
#include "sonobox/sim.hpp"
#include "sonobox/tdoa.hpp"

namespace py = pybind11;

namespace sonobox {
namespace {

using NpArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig cfg = config_from_json(text);
    cfg.validate();
    return cfg;
}

sim::WaveformBundle bundle_from(const NpArray& waveforms, double sample_rate) {
    if (waveforms.ndim() != 2 || waveforms.shape(0) != 4)
        throw ConfigError("waveforms must have shape (4, n)");
    auto view = waveforms.unchecked<2>();
    sim::WaveformBundle bundle;
    bundle.sample_rate = sample_rate;
    const py::ssize_t n = view.shape(1);
    for (int ch = 0; ch < 4; ++ch) {
        bundle.channels[ch].resize(static_cast<size_t>(n));
        for (py::ssize_t i = 0; i < n; ++i) bundle.channels[ch][i] = view(ch, i);
    }
    return bundle;
}

py::array waveforms_to_numpy(const sim::WaveformBundle& bundle) {
    const py::ssize_t n = static_cast<py::ssize_t>(bundle.length());
    NpArray out({py::ssize_t{4}, n});
    auto view = out.mutable_unchecked<2>();
    for (int ch = 0; ch < 4; ++ch)
        for (py::ssize_t i = 0; i < n; ++i) view(ch, i) = bundle.channels[ch][i];
    return out;
}

dsp::InputTensor input_from(const NpArray& planes) {
    if (planes.ndim() != 3 || planes.shape(0) != 4)
        throw ConfigError("input must have shape (4, t, f)");
    auto view = planes.unchecked<3>();
    dsp::InputTensor t;
    t.t_bins = static_cast<int>(view.shape(1));
    t.f_bins = static_cast<int>(view.shape(2));
    for (int ch = 0; ch < 4; ++ch) {
        t.channels[ch].resize(static_cast<size_t>(t.t_bins) * t.f_bins);
        for (int r = 0; r < t.t_bins; ++r)
            for (int c = 0; c < t.f_bins; ++c) t.at(r, c, ch) = view(ch, r, c);
    }
    return t;
}

py::array input_to_numpy(const dsp::InputTensor& t) {
    NpArray out({py::ssize_t{4}, py::ssize_t{t.t_bins}, py::ssize_t{t.f_bins}});
    auto view = out.mutable_unchecked<3>();
    for (int ch = 0; ch < 4; ++ch)
        for (int r = 0; r < t.t_bins; ++r)
            for (int c = 0; c < t.f_bins; ++c) view(ch, r, c) = t.at(r, c, ch);
    return out;
}

py::array rgb_to_numpy(const geom::SceneImage& scene) {
    NpArray out({py::ssize_t{scene.res}, py::ssize_t{scene.res}, py::ssize_t{3}});
    std::copy(scene.rgb.begin(), scene.rgb.end(), out.mutable_data());
    return out;
}

py::array depth_to_numpy(const geom::SceneImage& scene) {
    NpArray out({py::ssize_t{scene.res}, py::ssize_t{scene.res}});
    std::copy(scene.depth.begin(), scene.depth.end(), out.mutable_data());
    return out;
}

geom::SceneImage scene_from_rgb(const NpArray& rgb) {
    if (rgb.ndim() != 3 || rgb.shape(0) != rgb.shape(1) || rgb.shape(2) != 3)
        throw ConfigError("scene image must have shape (res, res, 3)");
    geom::SceneImage scene;
    scene.res = static_cast<int>(rgb.shape(0));
    scene.rgb.assign(rgb.data(), rgb.data() + rgb.size());
    scene.depth.assign(static_cast<size_t>(scene.res) * scene.res, 0.0);
    return scene;
}

py::dict simulate_episode(const std::string& config_text, uint64_t seed,
                          const std::string& shape_name) {
    const ExperimentConfig cfg = parse_config(config_text);
    sim::DatasetParams params;
    params.world = cfg.box_world();
    params.acoustics = cfg.acoustics;
    params.trajectory = cfg.trajectory;
    params.image_res = cfg.dataset.image_res;
    const geom::ShapeSpec shape = geom::default_shape(geom::shape_from_name(shape_name));
    const auto episodes = sim::generate_dataset(1, {shape}, params, seed);
    const sim::DropEvent& event = episodes.front().first;
    const sim::WaveformBundle& bundle = episodes.front().second;

    py::list impacts;
    for (const sim::Impact& hit : event.impacts)
        impacts.append(py::make_tuple(hit.time_s, hit.position.x, hit.position.y, hit.energy));

    py::dict out;
    out["shape"] = shape_name;
    out["seed"] = event.seed;
    out["impacts"] = impacts;
    out["final_pose"] =
        py::make_tuple(event.final_pose.x, event.final_pose.y, event.final_pose.theta);
    out["waveforms"] = waveforms_to_numpy(bundle);
    out["sample_rate"] = bundle.sample_rate;
    out["rgb"] = rgb_to_numpy(event.scene);
    out["depth"] = depth_to_numpy(event.scene);
    return out;
}

py::array preprocess(const NpArray& waveforms, double sample_rate,
                     const std::string& config_text) {
    const ExperimentConfig cfg = parse_config(config_text);
    const sim::WaveformBundle bundle = bundle_from(waveforms, sample_rate);
    return input_to_numpy(
        dsp::preprocess(bundle, cfg.stft, cfg.seg_threshold, cfg.model.input_res));
}

py::dict tdoa_locate(const NpArray& waveforms, double sample_rate,
                     const std::string& config_text) {
    const ExperimentConfig cfg = parse_config(config_text);
    const sim::WaveformBundle bundle = bundle_from(waveforms, sample_rate);
    const tdoa::Localization loc = tdoa::localize(bundle, cfg.box_world());
    py::dict out;
    out["x"] = loc.position.x;
    out["y"] = loc.position.y;
    out["residual"] = loc.residual;
    return out;
}

py::tuple render_scene(const std::string& config_text, const std::string& shape_name, double x,
                       double y, double theta) {
    const ExperimentConfig cfg = parse_config(config_text);
    const geom::ShapeSpec shape = geom::default_shape(geom::shape_from_name(shape_name));
    const geom::SceneImage scene = geom::render_scene(
        cfg.box_world(), shape, geom::Pose2D{x, y, theta}, cfg.dataset.image_res);
    return py::make_tuple(rgb_to_numpy(scene), depth_to_numpy(scene));
}

py::dict score_scenes(const NpArray& pred, const NpArray& truth,
                      std::optional<std::array<double, 3>> background, double tol) {
    const geom::RenderPalette palette;
    const eval::PairScore score =
        eval::score_pair(scene_from_rgb(pred), scene_from_rgb(truth),
                         background.value_or(palette.background), tol);
    py::dict out;
    out["iou"] = score.iou;
    out["d"] = score.pred_empty ? py::object(py::none()) : py::object(py::float_(score.d));
    out["l"] = score.l;
    out["hit"] = score.hit;
    out["pred_empty"] = score.pred_empty;
    return out;
}

// A trained network plus the sidecar metadata needed to rebuild it.
class Model {
public:
    explicit Model(const std::string& checkpoint_path)
        : meta_(cli::read_checkpoint_meta(checkpoint_path + ".meta.json")) {
        nn::ModelConfig mc;
        mc.out_channels = meta_.head == "rgb" ? 3 : 1;
        mc.input_hw = meta_.input_res;
        mc.filter_scale = meta_.filter_scale;
        model_ = std::make_unique<nn::SceneModel>(mc, 0);
        model_->load_state(nn::load_checkpoint(checkpoint_path));
    }

    const std::string& head() const { return meta_.head; }
    const std::string& ablation() const { return meta_.ablation; }
    int input_res() const { return meta_.input_res; }
    double filter_scale() const { return meta_.filter_scale; }

    py::array predict(const NpArray& input) {
        nn::Tensor y = model_->forward(to_batch(input), false);
        const int res = y.h();
        if (y.c() == 1) {
            NpArray out({py::ssize_t{res}, py::ssize_t{res}});
            std::copy(y.data.begin(), y.data.end(), out.mutable_data());
            return out;
        }
        NpArray out({py::ssize_t{res}, py::ssize_t{res}, py::ssize_t{y.c()}});
        auto view = out.mutable_unchecked<3>();
        for (int ch = 0; ch < y.c(); ++ch)
            for (int r = 0; r < res; ++r)
                for (int c = 0; c < res; ++c) view(r, c, ch) = y.at(0, ch, r, c);
        return out;
    }

    py::array embed(const NpArray& input) {
        nn::Tensor z = model_->embed(to_batch(input));
        NpArray out({static_cast<py::ssize_t>(z.numel())});
        std::copy(z.data.begin(), z.data.end(), out.mutable_data());
        return out;
    }

private:
    nn::Tensor to_batch(const NpArray& input) const {
        const dsp::InputTensor t = input_from(input);
        if (t.t_bins != meta_.input_res || t.f_bins != meta_.input_res)
            throw ConfigError("input is " + std::to_string(t.t_bins) + "x" +
                              std::to_string(t.f_bins) + " but the checkpoint expects " +
                              std::to_string(meta_.input_res) + "x" +
                              std::to_string(meta_.input_res));
        nn::Tensor x(1, 4, t.t_bins, t.f_bins);
        for (int ch = 0; ch < 4; ++ch)
            for (int r = 0; r < t.t_bins; ++r)
                for (int c = 0; c < t.f_bins; ++c) x.at(0, ch, r, c) = t.at(r, c, ch);
        return x;
    }

    cli::CheckpointMeta meta_;
    std::unique_ptr<nn::SceneModel> model_;
};

}  // namespace
}  // namespace sonobox

PYBIND11_MODULE(_core, m) {
    using namespace sonobox;

    m.doc() = "Box-drop acoustic imaging: simulate episodes, preprocess contact-mic "
              "recordings, run the delay-based baseline, and query trained networks.";

    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const DomainError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const DataError& e) {
            PyErr_SetString(PyExc_RuntimeError, e.what());
        } catch (const NumericError& e) {
            PyErr_SetString(PyExc_ArithmeticError, e.what());
        }
    });

    m.def(
        "default_config",
        [](const std::string& scale) { return config_to_json(preset_config(scale)); },
        py::arg("scale") = "desk",
        "Full config template as a JSON string; scale is 'desk' or 'paper'.");

    m.def(
        "validate_config", [](const std::string& text) { parse_config(text); },
        py::arg("text"), "Parse and validate a config JSON string, raising ValueError if bad.");

    m.def(
        "run",
        [](const std::vector<std::string>& args) { return cli::run_cli(args); },
        py::arg("args"), py::call_guard<py::gil_scoped_release>(),
        "Invoke the command-line interface (init/gen/train/eval/ablate/tdoa); "
        "returns its exit code.");

    m.def("simulate_episode", &simulate_episode, py::arg("config"), py::arg("seed"),
          py::arg("shape") = "cube",
          "Drop one object and return a dict with impacts, final_pose, waveforms (4, n), "
          "sample_rate, and the rendered rgb/depth ground truth.");

    m.def("preprocess", &preprocess, py::arg("waveforms"), py::arg("sample_rate"),
          py::arg("config"),
          "Turn a (4, n) recording into the normalized (4, t, f) network input.");

    m.def("tdoa_locate", &tdoa_locate, py::arg("waveforms"), py::arg("sample_rate"),
          py::arg("config"),
          "Arrival-delay grid search; returns {'x', 'y', 'residual'} in box coordinates.");

    m.def("render_scene", &render_scene, py::arg("config"), py::arg("shape"), py::arg("x"),
          py::arg("y"), py::arg("theta"),
          "Render the top-down (rgb, depth) pair for a shape at the given pose.");

    m.def("score_scenes", &score_scenes, py::arg("pred"), py::arg("truth"),
          py::arg("background") = py::none(), py::arg("tol") = 0.15,
          "Segmentation IoU and center-distance scores between two (res, res, 3) images; "
          "'d' is None when the prediction segments to nothing.");

    py::class_<Model>(m, "Model",
                      "A trained scene network loaded from a checkpoint and its meta sidecar.")
        .def(py::init<const std::string&>(), py::arg("checkpoint_path"))
        .def_property_readonly("head", &Model::head)
        .def_property_readonly("ablation", &Model::ablation)
        .def_property_readonly("input_res", &Model::input_res)
        .def_property_readonly("filter_scale", &Model::filter_scale)
        .def("predict", &Model::predict, py::arg("input"),
             "Run the network on a (4, t, f) input; returns (res, res, 3) for the color head "
             "or (res, res) for depth.")
        .def("embed", &Model::embed, py::arg("input"),
             "Bottleneck features for a (4, t, f) input as a flat vector.");
}
