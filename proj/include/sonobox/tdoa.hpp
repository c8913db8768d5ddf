#pragma once

#include <array>
#include <span>
#include <vector>

#include "sonobox/common.hpp"
#include "sonobox/geometry.hpp"
#include "sonobox/sim.hpp"

namespace sonobox::tdoa {

struct DelayEstimate {
    int i = 0;
    int j = 0;
    double delay_s = 0.0;     // positive: the signal reaches channel i later
    double confidence = 0.0;  // 1 - second peak / first peak, clamped to [0,1]
};

struct TdoaConfig {
    double grid_res_m = 0.005;
    double max_lag_safety = 2.0;  // times the box diagonal travel time
    // Restrict analysis to the window around the k-th short-time energy peak
    // (1-based). The later bounces are cleaner than the first contact; falls
    // back to the full clip when fewer peaks exist. 0 always uses the clip.
    int bounce_index = 3;
    double window_pre_s = 0.005;
    double window_post_s = 0.05;
    double min_confidence = 0.05;
    double rms_floor = 1e-9;
};

// Whitened cross-correlation delay estimate between two equal-length
// channels, with parabolic sub-sample refinement.
DelayEstimate gcc_phat(std::span<const double> x, std::span<const double> y,
                       double sample_rate, int max_lag, double rms_floor = 1e-9);

struct Localization {
    Vec2 position{};
    double residual = 0.0;
};

// Confidence-weighted grid search over floor cell centers against the six
// pairwise delay estimates. Ties break toward the smallest x, then y.
Localization localize(const sim::WaveformBundle& bundle, const geom::BoxWorld& world,
                      const TdoaConfig& cfg = TdoaConfig{});

// Renders the given shape, axis-aligned, at the localized position. The
// orientation is never estimated by this baseline.
geom::SceneImage tdoa_predict_scene(const sim::WaveformBundle& bundle,
                                    const geom::BoxWorld& world, const geom::ShapeSpec& shape,
                                    const TdoaConfig& cfg = TdoaConfig{}, int res = 128,
                                    const geom::RenderPalette& palette = geom::RenderPalette{});

}  // namespace sonobox::tdoa
