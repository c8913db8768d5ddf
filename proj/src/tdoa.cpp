#include "sonobox/tdoa.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "sonobox/fft.hpp"

namespace sonobox::tdoa {

DelayEstimate gcc_phat(std::span<const double> x, std::span<const double> y,
                       double sample_rate, int max_lag, double rms_floor) {
    if (x.size() != y.size()) throw DomainError("gcc_phat channels must have equal length");
    if (x.size() < 64) throw DomainError("gcc_phat needs at least 64 samples");
    if (max_lag < 1) throw DomainError("max_lag must be positive");

    double ex = 0.0, ey = 0.0;
    for (double v : x) ex += v * v;
    for (double v : y) ey += v * v;
    const auto n = static_cast<double>(x.size());
    if (std::sqrt(ex / n) < rms_floor || std::sqrt(ey / n) < rms_floor) {
        throw DataError("gcc_phat: near-silent input");
    }

    const size_t nfft = next_pow2(2 * x.size());
    auto X = fft_real(x, nfft);
    const auto Y = fft_real(y, nfft);
    double smax = 0.0;
    for (size_t k = 0; k < nfft; ++k) {
        X[k] *= std::conj(Y[k]);
        smax = std::max(smax, std::abs(X[k]));
    }
    const double eps = std::max(smax * 1e-12, 1e-300);
    for (auto& s : X) s /= std::max(std::abs(s), eps);
    fft_inplace(X, true);

    const int lag_cap = std::min<int>(max_lag, static_cast<int>(nfft / 2) - 1);
    auto corr = [&](int lag) {
        const size_t idx = lag >= 0 ? static_cast<size_t>(lag) : nfft + lag;
        return X[idx].real();
    };

    int best = 0;
    double best_v = corr(0);
    for (int lag = -lag_cap; lag <= lag_cap; ++lag) {
        const double v = corr(lag);
        if (v > best_v) {
            best_v = v;
            best = lag;
        }
    }

    // parabolic refinement around the integer peak
    const double ym = corr(best - 1), y0 = corr(best), yp = corr(best + 1);
    const double denom = ym - 2.0 * y0 + yp;
    double delta = 0.0;
    if (std::abs(denom) > 1e-30) {
        delta = 0.5 * (ym - yp) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
    }

    // second peak outside a small exclusion zone around the first
    double second = 0.0;
    for (int lag = -lag_cap; lag <= lag_cap; ++lag) {
        if (std::abs(lag - best) <= 3) continue;
        second = std::max(second, corr(lag));
    }

    DelayEstimate est;
    est.delay_s = (best + delta) / sample_rate;
    est.confidence = best_v > 0.0 ? std::clamp(1.0 - second / best_v, 0.0, 1.0) : 0.0;
    return est;
}

namespace {

// Sample window around the k-th short-time energy peak of the summed
// channels; (0, len) when there are fewer than k peaks.
std::pair<size_t, size_t> bounce_window(const sim::WaveformBundle& bundle,
                                        const TdoaConfig& cfg) {
    const size_t len = bundle.channels[0].size();
    if (cfg.bounce_index <= 0) return {0, len};

    const int win = 256, hop = 128;
    if (len < static_cast<size_t>(win)) return {0, len};
    const int frames = static_cast<int>((len - win) / hop) + 1;
    std::vector<double> energy(frames, 0.0);
    double max_e = 0.0;
    for (int t = 0; t < frames; ++t) {
        double e = 0.0;
        for (const auto& ch : bundle.channels) {
            const double* frame = ch.data() + static_cast<size_t>(t) * hop;
            for (int k = 0; k < win; ++k) e += frame[k] * frame[k];
        }
        energy[t] = e;
        max_e = std::max(max_e, e);
    }
    if (max_e <= 0.0) return {0, len};

    std::vector<int> peaks;
    for (int t = 1; t + 1 < frames; ++t) {
        if (energy[t] > energy[t - 1] && energy[t] >= energy[t + 1] &&
            energy[t] >= 0.02 * max_e) {
            peaks.push_back(t);
        }
    }
    if (static_cast<int>(peaks.size()) < cfg.bounce_index) return {0, len};

    const int t = peaks[cfg.bounce_index - 1];
    const double center = t * hop + win / 2.0;
    const double sr = bundle.sample_rate;
    const auto lo = static_cast<long>(center - cfg.window_pre_s * sr);
    const auto hi = static_cast<long>(center + cfg.window_post_s * sr);
    size_t start = lo > 0 ? static_cast<size_t>(lo) : 0;
    size_t end = std::min(len, static_cast<size_t>(std::max(hi, 0L)));
    if (end - start < 64) end = std::min(len, start + 64);
    if (end - start < 64) start = end >= 64 ? end - 64 : 0;
    return {start, end};
}

}  // namespace

Localization localize(const sim::WaveformBundle& bundle, const geom::BoxWorld& world,
                      const TdoaConfig& cfg) {
    world.validate();
    if (cfg.grid_res_m <= 0.0) throw ConfigError("grid_res_m must be positive");
    const auto [start, end] = bounce_window(bundle, cfg);

    const double diag = std::sqrt(world.width_m * world.width_m +
                                  world.length_m * world.length_m +
                                  world.height_m * world.height_m);
    const int max_lag = std::max(
        1, static_cast<int>(std::ceil(diag / world.wave_speed * bundle.sample_rate *
                                      cfg.max_lag_safety)));

    std::vector<DelayEstimate> pairs;
    int confident = 0;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            DelayEstimate est;
            est.i = i;
            est.j = j;
            try {
                const std::span<const double> xi(bundle.channels[i].data() + start, end - start);
                const std::span<const double> xj(bundle.channels[j].data() + start, end - start);
                const DelayEstimate got =
                    gcc_phat(xi, xj, bundle.sample_rate, max_lag, cfg.rms_floor);
                est.delay_s = got.delay_s;
                est.confidence = got.confidence;
            } catch (const DataError&) {
                est.confidence = 0.0;
            }
            if (est.confidence >= cfg.min_confidence) ++confident;
            pairs.push_back(est);
        }
    }
    if (confident == 0) throw DataError("unlocalizable: no confident delay estimate");

    const int nx = std::max(1, static_cast<int>(world.width_m / cfg.grid_res_m));
    const int ny = std::max(1, static_cast<int>(world.length_m / cfg.grid_res_m));
    Localization best;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int ix = 0; ix < nx; ++ix) {
        const double x = (ix + 0.5) * cfg.grid_res_m;
        for (int iy = 0; iy < ny; ++iy) {
            const double y = (iy + 0.5) * cfg.grid_res_m;
            const auto model = geom::expected_delays(world, x, y, 0.0);
            double sse = 0.0;
            for (const auto& p : pairs) {
                if (p.confidence < cfg.min_confidence) continue;
                const double diff = model[p.i] - model[p.j] - p.delay_s;
                sse += p.confidence * diff * diff;
            }
            if (sse < best_sse) {
                best_sse = sse;
                best.position = Vec2{x, y};
            }
        }
    }
    best.residual = best_sse;
    return best;
}

geom::SceneImage tdoa_predict_scene(const sim::WaveformBundle& bundle,
                                    const geom::BoxWorld& world, const geom::ShapeSpec& shape,
                                    const TdoaConfig& cfg, int res,
                                    const geom::RenderPalette& palette) {
    const Localization loc = localize(bundle, world, cfg);
    // clamp so the axis-aligned footprint stays renderable near the walls
    geom::Pose2D pose;
    pose.x = std::clamp(loc.position.x, shape.half_x_m, world.width_m - shape.half_x_m);
    pose.y = std::clamp(loc.position.y, shape.half_y_m, world.length_m - shape.half_y_m);
    pose.theta = 0.0;
    return geom::render_scene(world, shape, pose, res, palette);
}

}  // namespace sonobox::tdoa
