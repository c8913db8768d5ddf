#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "sonobox/common.hpp"
#include "sonobox/eval/baselines.hpp"
#include "sonobox/eval/metrics.hpp"
#include "sonobox/rng.hpp"

using namespace sonobox;
using namespace sonobox::eval;

namespace {

BinaryMask make_mask(int h, int w, const std::vector<std::pair<int, int>>& fg) {
    BinaryMask m;
    m.h = h;
    m.w = w;
    m.cells.assign(static_cast<size_t>(h) * w, 0);
    for (const auto& [r, c] : fg) {
        if (!m.cells[static_cast<size_t>(r) * w + c]) ++m.foreground;
        m.cells[static_cast<size_t>(r) * w + c] = 1;
    }
    return m;
}

BinaryMask rect_mask(int h, int w, int r0, int r1, int c0, int c1) {
    std::vector<std::pair<int, int>> fg;
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c) fg.push_back({r, c});
    return make_mask(h, w, fg);
}

geom::SceneImage mask_to_scene(const BinaryMask& m, const geom::RenderPalette& pal) {
    geom::SceneImage img;
    img.res = m.h;
    img.meters_per_pixel = 0.0;
    img.rgb.assign(static_cast<size_t>(m.h) * m.w * 3, 0.0);
    img.depth.assign(static_cast<size_t>(m.h) * m.w, 0.0);
    for (int r = 0; r < m.h; ++r)
        for (int c = 0; c < m.w; ++c)
            for (int ch = 0; ch < 3; ++ch)
                img.rgb[(static_cast<size_t>(r) * m.w + c) * 3 + ch] =
                    m.at(r, c) ? pal.foreground[ch] : pal.background[ch];
    return img;
}

// Exhaustive sweep over candidate orientations: the minimum over a fine
// grid brackets the true minimum area.
double sweep_min_area(const BinaryMask& m, double step_deg = 0.1) {
    double best = 1e300;
    for (double deg = 0.0; deg < 90.0; deg += step_deg) {
        const double a = deg * kPi / 180.0;
        const double co = std::cos(a), si = std::sin(a);
        double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
        for (int r = 0; r < m.h; ++r) {
            for (int c = 0; c < m.w; ++c) {
                if (!m.at(r, c)) continue;
                const double u = co * c + si * r;
                const double v = -si * c + co * r;
                min_u = std::min(min_u, u);
                max_u = std::max(max_u, u);
                min_v = std::min(min_v, v);
                max_v = std::max(max_v, v);
            }
        }
        best = std::min(best, (max_u - min_u) * (max_v - min_v));
    }
    return best;
}

bool box_contains_all(const RotatedBox& box, const BinaryMask& m, double slack = 1e-6) {
    const double co = std::cos(box.angle), si = std::sin(box.angle);
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w; ++c) {
            if (!m.at(r, c)) continue;
            const double dx = c - box.cx, dy = r - box.cy;
            const double u = co * dx + si * dy;
            const double v = -si * dx + co * dy;
            if (std::abs(u) > box.half_x + slack || std::abs(v) > box.half_y + slack) return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("binarized rendering equals the rasterized footprint") {
    const geom::BoxWorld world = geom::default_world();
    const geom::ShapeSpec shape = geom::default_shape(geom::ShapeKind::Block);
    const geom::Pose2D pose{0.06, 0.10, 0.3};
    const geom::RenderPalette pal;
    const geom::SceneImage img = geom::render_scene(world, shape, pose, 128, pal);

    const BinaryMask m = binarize(img, pal.background);
    int fg = 0;
    for (int r = 0; r < 128; ++r) {
        for (int c = 0; c < 128; ++c) {
            const bool object = img.depth_at(r, c) > 0.0;
            CHECK(m.at(r, c) == object);
            fg += object;
        }
    }
    CHECK(m.foreground == fg);
    CHECK(fg > 0);
}

TEST_CASE("all-background image binarizes to the empty mask") {
    const geom::RenderPalette pal;
    const BinaryMask empty = binarize(mask_to_scene(make_mask(32, 32, {}), pal), pal.background);
    CHECK(empty.empty());
    CHECK(empty.foreground == 0);
}

TEST_CASE("binarize keeps only the largest connected blob") {
    const geom::RenderPalette pal;
    BinaryMask two = rect_mask(40, 40, 5, 9, 5, 14);  // 5x10 = 50 pixels
    for (int r = 25; r < 30; ++r)
        for (int c = 30; c < 32; ++c) {
            two.cells[static_cast<size_t>(r) * 40 + c] = 1;
            ++two.foreground;
        }
    const BinaryMask kept = binarize(mask_to_scene(two, pal), pal.background);
    CHECK(kept.foreground == 50);
    CHECK(kept.at(7, 7));
    CHECK_FALSE(kept.at(27, 30));
}

TEST_CASE("iou matches brute-force pixel counting") {
    const BinaryMask a = rect_mask(64, 64, 10, 19, 10, 19);
    const BinaryMask b = rect_mask(64, 64, 10, 19, 15, 24);  // half-offset copy

    long inter = 0, uni = 0;
    for (size_t i = 0; i < a.cells.size(); ++i) {
        inter += a.cells[i] && b.cells[i];
        uni += a.cells[i] || b.cells[i];
    }
    CHECK(iou(a, b) == doctest::Approx(static_cast<double>(inter) / uni).epsilon(1e-12));
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(iou(a, b) == doctest::Approx(iou(b, a)).epsilon(1e-15));
    CHECK(iou(a, a) == doctest::Approx(1.0).epsilon(1e-15));

    const BinaryMask far = rect_mask(64, 64, 40, 49, 40, 49);
    CHECK(iou(a, far) == 0.0);
    const BinaryMask none = make_mask(64, 64, {});
    CHECK(iou(none, none) == 0.0);
    CHECK(iou(a, none) == 0.0);
}

TEST_CASE("axis-aligned square box recovered exactly") {
    const BinaryMask m = rect_mask(64, 64, 20, 29, 20, 29);
    const RotatedBox box = min_area_box(m);
    CHECK(box.cx == doctest::Approx(24.5).epsilon(1e-12));
    CHECK(box.cy == doctest::Approx(24.5).epsilon(1e-12));
    CHECK(box.angle == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(box.half_x == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(box.half_y == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(box.area() == doctest::Approx(81.0).epsilon(1e-9));
    CHECK(box.area() > 80.0);
    CHECK(box.area() < 101.0);

    const double sweep = sweep_min_area(m);
    CHECK(std::abs(box.area() - sweep) <= 0.01 * sweep);
    CHECK(box_contains_all(box, m));
    CHECK(box.diagonal() == doctest::Approx(2.0 * std::sqrt(2 * 4.5 * 4.5)).epsilon(1e-12));
}

TEST_CASE("single pixel gives a degenerate box") {
    const BinaryMask m = make_mask(16, 16, {{7, 9}});
    const RotatedBox box = min_area_box(m);
    CHECK(box.cx == 9.0);
    CHECK(box.cy == 7.0);
    CHECK(box.half_x == 0.0);
    CHECK(box.half_y == 0.0);
    CHECK(box.diagonal() == 0.0);
}

TEST_CASE("collinear pixels give a segment box") {
    const BinaryMask m = make_mask(16, 16, {{3, 2}, {5, 4}, {7, 6}, {9, 8}});
    const RotatedBox box = min_area_box(m);
    CHECK(box.half_y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(box.half_x == doctest::Approx(std::hypot(3.0, 3.0)).epsilon(1e-12));
    CHECK(box.angle == doctest::Approx(kPi / 4).epsilon(1e-12));
}

TEST_CASE("empty mask has no box") {
    CHECK_THROWS_AS(min_area_box(make_mask(8, 8, {})), DataError);
}

TEST_CASE("tilted rectangle orientation recovered within two degrees") {
    std::vector<std::pair<int, int>> fg;
    const double theta = kPi / 4, cx = 40, cy = 40, hx = 18, hy = 6;
    for (int r = 0; r < 80; ++r) {
        for (int c = 0; c < 80; ++c) {
            const double u = std::cos(theta) * (c - cx) + std::sin(theta) * (r - cy);
            const double v = -std::sin(theta) * (c - cx) + std::cos(theta) * (r - cy);
            if (std::abs(u) <= hx && std::abs(v) <= hy) fg.push_back({r, c});
        }
    }
    const BinaryMask m = make_mask(80, 80, fg);
    const RotatedBox box = min_area_box(m);
    CHECK(std::abs(box.angle - kPi / 4) < 2.0 * kPi / 180.0);
    CHECK(box.half_x > box.half_y);

    const double sweep = sweep_min_area(m);
    CHECK(std::abs(box.area() - sweep) <= 0.01 * sweep);
    CHECK(box_contains_all(box, m));
}

TEST_CASE("minimum-area box never beats itself at angle zero") {
    Rng rng(520);
    for (int trial = 0; trial < 12; ++trial) {
        std::vector<std::pair<int, int>> fg;
        const int blobs = 1 + static_cast<int>(rng.integer(3));
        for (int b = 0; b < blobs; ++b) {
            const int r0 = 5 + static_cast<int>(rng.integer(30));
            const int c0 = 5 + static_cast<int>(rng.integer(30));
            const int rh = 2 + static_cast<int>(rng.integer(12));
            const int cw = 2 + static_cast<int>(rng.integer(12));
            for (int r = r0; r < std::min(48, r0 + rh); ++r)
                for (int c = c0; c < std::min(48, c0 + cw); ++c) fg.push_back({r, c});
        }
        const BinaryMask m = make_mask(48, 48, fg);
        if (m.empty()) continue;
        const RotatedBox box = min_area_box(m);

        int rmin = 48, rmax = -1, cmin = 48, cmax = -1;
        for (const auto& [r, c] : fg) {
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
            cmin = std::min(cmin, c);
            cmax = std::max(cmax, c);
        }
        const double aabb = static_cast<double>(rmax - rmin) * (cmax - cmin);
        CHECK(box.area() <= aabb + 1e-9);
        CHECK(box_contains_all(box, m));
        const double sweep = sweep_min_area(m, 0.25);
        CHECK(box.area() <= sweep + 1e-9);
    }
}

TEST_CASE("localization success boundary is inclusive") {
    const geom::RenderPalette pal;
    // ground truth 7x9 pixels: half extents (3,4), diagonal 10 exactly
    const BinaryMask truth = rect_mask(64, 64, 20, 28, 20, 26);
    const geom::SceneImage truth_img = mask_to_scene(truth, pal);
    REQUIRE(min_area_box(truth).diagonal() == doctest::Approx(10.0).epsilon(1e-12));

    const BinaryMask at_half = rect_mask(64, 64, 20, 28, 25, 31);  // moved 5 = l/2
    const BinaryMask beyond = rect_mask(64, 64, 20, 28, 26, 32);   // moved 6

    const PairScore hit = score_pair(mask_to_scene(at_half, pal), truth_img, pal.background);
    CHECK(hit.d == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(hit.l == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(hit.hit);

    const PairScore miss = score_pair(mask_to_scene(beyond, pal), truth_img, pal.background);
    CHECK(miss.d == doctest::Approx(6.0).epsilon(1e-12));
    CHECK_FALSE(miss.hit);

    const PairScore blank = score_pair(mask_to_scene(make_mask(64, 64, {}), pal), truth_img, pal.background);
    CHECK(blank.pred_empty);
    CHECK_FALSE(blank.hit);
    CHECK(blank.iou == 0.0);
}

TEST_CASE("localization score is a permutation-invariant mean of hits") {
    const geom::RenderPalette pal;
    std::vector<geom::SceneImage> preds, truths;
    Rng rng(521);
    for (int i = 0; i < 10; ++i) {
        const int r = 10 + static_cast<int>(rng.integer(30));
        const int c = 10 + static_cast<int>(rng.integer(30));
        truths.push_back(mask_to_scene(rect_mask(64, 64, r, r + 6, c, c + 6), pal));
        const int shift = static_cast<int>(rng.integer(14));
        preds.push_back(mask_to_scene(rect_mask(64, 64, r, r + 6, c + shift, c + 6 + shift), pal));
    }
    const double base = localization_score(preds, truths, pal.background);
    CHECK(base > 0.0);
    CHECK(base < 1.0);

    std::vector<geom::SceneImage> pp = preds, tt = truths;
    for (size_t i = 0; i + 1 < pp.size(); i += 2) {
        std::swap(pp[i], pp[i + 1]);
        std::swap(tt[i], tt[i + 1]);
    }
    CHECK(localization_score(pp, tt, pal.background) == doctest::Approx(base).epsilon(1e-15));

    // push every prediction far beyond any diagonal: score can only drop
    std::vector<geom::SceneImage> shifted;
    for (size_t i = 0; i < truths.size(); ++i) {
        const RotatedBox b = min_area_box(binarize(truths[i], pal.background));
        RotatedBox far = b;
        far.cx = std::min(60.0, b.cx + 30.0);
        shifted.push_back(render_box_scene(far, 64, pal));
    }
    CHECK(localization_score(shifted, truths, pal.background) <= base);
}

TEST_CASE("half-turn circular mean agrees with hand checks") {
    const double deg = kPi / 180.0;
    CHECK(circular_mean_half_turn({10 * deg, 170 * deg}) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(circular_mean_half_turn({80 * deg, 100 * deg}) == doctest::Approx(90 * deg).epsilon(1e-9));
    CHECK(circular_mean_half_turn({30 * deg}) == doctest::Approx(30 * deg).epsilon(1e-12));
    CHECK(circular_mean_half_turn({20 * deg, 40 * deg}) == doctest::Approx(30 * deg).epsilon(1e-9));
}

TEST_CASE("average box over identical scenes reproduces the box") {
    const geom::RenderPalette pal;
    RotatedBox src;
    src.cx = 30.0;
    src.cy = 24.0;
    src.half_x = 9.0;
    src.half_y = 4.0;
    src.angle = 0.3;

    std::vector<RotatedBox> boxes(3, src);
    const RotatedBox mean = average_box(boxes);
    CHECK(mean.cx == doctest::Approx(src.cx).epsilon(1e-12));
    CHECK(mean.half_x == doctest::Approx(src.half_x).epsilon(1e-12));
    CHECK(mean.angle == doctest::Approx(src.angle).epsilon(1e-9));

    const geom::SceneImage img = render_box_scene(mean, 64, pal);
    const RotatedBox refit = min_area_box(binarize(img, pal.background));
    CHECK(refit.cx == doctest::Approx(src.cx).epsilon(0.05));
    CHECK(refit.cy == doctest::Approx(src.cy).epsilon(0.05));
    CHECK(std::abs(refit.angle - src.angle) < 0.05);
    CHECK(refit.half_x == doctest::Approx(src.half_x).epsilon(0.15));
}

TEST_CASE("random baseline draws members deterministically") {
    const std::vector<int> a = baseline_random_picks(17, 40, 9);
    const std::vector<int> b = baseline_random_picks(17, 40, 9);
    CHECK(a == b);
    for (int p : a) {
        CHECK(p >= 0);
        CHECK(p < 17);
    }
    CHECK(baseline_random_picks(17, 40, 10) != a);
}

TEST_CASE("random baseline expectation matches pair enumeration") {
    Rng rng(522);
    std::vector<RotatedBox> train(30), test(40);
    for (RotatedBox& b : train) {
        b.cx = rng.uniform(14.0, 50.0);
        b.cy = rng.uniform(14.0, 50.0);
        b.half_x = rng.uniform(3.0, 7.0);
        b.half_y = rng.uniform(2.0, b.half_x);
    }
    for (RotatedBox& b : test) {
        b.cx = rng.uniform(14.0, 50.0);
        b.cy = rng.uniform(14.0, 50.0);
        b.half_x = rng.uniform(3.0, 7.0);
        b.half_y = rng.uniform(2.0, b.half_x);
    }

    const auto hit = [](const RotatedBox& pred, const RotatedBox& truth) {
        return std::hypot(pred.cx - truth.cx, pred.cy - truth.cy) <= 0.5 * truth.diagonal();
    };
    double expected = 0.0;
    for (const RotatedBox& p : train)
        for (const RotatedBox& t : test) expected += hit(p, t);
    expected /= static_cast<double>(train.size() * test.size());

    double observed = 0.0;
    const int reps = 25;
    for (int s = 0; s < reps; ++s) {
        const std::vector<int> picks =
            baseline_random_picks(static_cast<int>(train.size()), static_cast<int>(test.size()),
                                  1000 + static_cast<std::uint64_t>(s));
        double score = 0.0;
        for (size_t j = 0; j < test.size(); ++j) score += hit(train[picks[j]], test[j]);
        observed += score / static_cast<double>(test.size());
    }
    observed /= reps;
    CHECK(std::abs(observed - expected) <= 0.05);
}

TEST_CASE("nearest-neighbor baseline matches brute force and breaks ties low") {
    Rng rng(523);
    std::vector<std::vector<float>> train(5, std::vector<float>(6));
    for (auto& t : train)
        for (float& v : t) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    train[3] = train[1];  // deliberate tie

    for (int probe_i = 0; probe_i < 8; ++probe_i) {
        std::vector<float> probe(6);
        for (float& v : probe) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        int best = -1;
        double best_d = 1e300;
        for (int i = 0; i < 5; ++i) {
            double d = 0.0;
            for (int k = 0; k < 6; ++k) {
                const double diff = train[i][k] - probe[k];
                d += diff * diff;
            }
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        CHECK(nearest_index(train, probe) == best);
    }

    CHECK(nearest_index(train, train[1]) == 1);  // not 3: ties go to the lowest index
    CHECK(nearest_index(train, train[4]) == 4);
}
