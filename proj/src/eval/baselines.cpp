#include "sonobox/eval/baselines.hpp"

#include <cmath>

#include "sonobox/common.hpp"
#include "sonobox/rng.hpp"

namespace sonobox::eval {

std::vector<int> baseline_random_picks(int train_count, int test_count, std::uint64_t seed) {
    if (train_count <= 0 || test_count <= 0)
        throw DomainError("baseline_random_picks: counts must be positive");
    Rng rng(seed);
    std::vector<int> picks(test_count);
    for (int& p : picks) p = static_cast<int>(rng.integer(static_cast<std::uint64_t>(train_count)));
    return picks;
}

double circular_mean_half_turn(const std::vector<double>& angles) {
    if (angles.empty()) throw DomainError("circular_mean_half_turn: no angles");
    double s = 0.0, c = 0.0;
    for (double a : angles) {
        s += std::sin(2.0 * a);
        c += std::cos(2.0 * a);
    }
    if (std::hypot(s, c) < 1e-12 * static_cast<double>(angles.size()))
        return 0.0;  // directions cancel; any representative works
    return wrap_half_turn(0.5 * std::atan2(s, c));
}

RotatedBox average_box(const std::vector<RotatedBox>& boxes) {
    if (boxes.empty()) throw DataError("average_box: no boxes");
    RotatedBox mean;
    std::vector<double> angles;
    for (const RotatedBox& b : boxes) {
        mean.cx += b.cx;
        mean.cy += b.cy;
        mean.half_x += b.half_x;
        mean.half_y += b.half_y;
        angles.push_back(b.angle);
    }
    const double n = static_cast<double>(boxes.size());
    mean.cx /= n;
    mean.cy /= n;
    mean.half_x /= n;
    mean.half_y /= n;
    mean.angle = circular_mean_half_turn(angles);
    return mean;
}

geom::SceneImage render_box_scene(const RotatedBox& box, int res,
                                  const geom::RenderPalette& palette) {
    if (res <= 0) throw DomainError("render_box_scene: resolution must be positive");
    geom::SceneImage img;
    img.res = res;
    img.meters_per_pixel = 0.0;
    img.rgb.assign(static_cast<size_t>(res) * res * 3, 0.0);
    img.depth.assign(static_cast<size_t>(res) * res, 0.0);

    const double co = std::cos(box.angle), si = std::sin(box.angle);
    for (int r = 0; r < res; ++r) {
        for (int c = 0; c < res; ++c) {
            const double dx = c - box.cx, dy = r - box.cy;
            const double u = co * dx + si * dy;
            const double v = -si * dx + co * dy;
            const bool inside = std::abs(u) <= box.half_x && std::abs(v) <= box.half_y;
            for (int ch = 0; ch < 3; ++ch)
                img.rgb[(static_cast<size_t>(r) * res + c) * 3 + ch] =
                    inside ? palette.foreground[ch] : palette.background[ch];
            img.depth[static_cast<size_t>(r) * res + c] = inside ? 0.4 : 0.0;
        }
    }
    return img;
}

int nearest_index(const std::vector<std::vector<float>>& train_inputs,
                  const std::vector<float>& probe) {
    if (train_inputs.empty()) throw DataError("nearest_index: no training inputs");
    int best = -1;
    double best_d2 = 0.0;
    for (int i = 0; i < static_cast<int>(train_inputs.size()); ++i) {
        const std::vector<float>& t = train_inputs[i];
        if (t.size() != probe.size()) throw DomainError("nearest_index: length mismatch");
        double d2 = 0.0;
        for (size_t k = 0; k < t.size(); ++k) {
            const double d = static_cast<double>(t[k]) - static_cast<double>(probe[k]);
            d2 += d * d;
        }
        if (best < 0 || d2 < best_d2) {
            best = i;
            best_d2 = d2;
        }
    }
    return best;
}

}  // namespace sonobox::eval
