#include "sonobox/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "sonobox/common.hpp"

namespace sonobox::eval {

namespace {

struct Pt {
    double x, y;
};

double cross(const Pt& o, const Pt& a, const Pt& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew monotone chain, counter-clockwise, collinear points dropped.
std::vector<Pt> convex_hull(std::vector<Pt> pts) {
    std::sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Pt& a, const Pt& b) { return a.x == b.x && a.y == b.y; }),
              pts.end());
    const size_t n = pts.size();
    if (n <= 2) return pts;
    std::vector<Pt> hull(2 * n);
    size_t k = 0;
    for (size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const size_t lower = k + 1;
    for (size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

RotatedBox box_from_frame(const std::vector<Pt>& pts, double ux, double uy) {
    double min_u = 1e300, max_u = -1e300, min_v = 1e300, max_v = -1e300;
    for (const Pt& p : pts) {
        const double u = p.x * ux + p.y * uy;
        const double v = -p.x * uy + p.y * ux;
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
    }
    const double cu = 0.5 * (min_u + max_u), cv = 0.5 * (min_v + max_v);
    const double eu = 0.5 * (max_u - min_u), ev = 0.5 * (max_v - min_v);

    RotatedBox box;
    box.cx = cu * ux - cv * uy;
    box.cy = cu * uy + cv * ux;
    if (eu >= ev) {
        box.half_x = eu;
        box.half_y = ev;
        box.angle = wrap_half_turn(std::atan2(uy, ux));
    } else {
        box.half_x = ev;
        box.half_y = eu;
        box.angle = wrap_half_turn(std::atan2(ux, -uy));
    }
    if (std::abs(eu - ev) < 1e-12) {
        const double alt = wrap_half_turn(std::atan2(ux, -uy));
        box.angle = std::min(box.angle, alt);
    }
    return box;
}

}  // namespace

double RotatedBox::diagonal() const { return 2.0 * std::sqrt(half_x * half_x + half_y * half_y); }

BinaryMask binarize(const geom::SceneImage& img, const std::array<double, 3>& background,
                    double tol) {
    BinaryMask m;
    m.h = img.res;
    m.w = img.res;
    m.cells.assign(static_cast<size_t>(m.h) * m.w, 0);

    std::vector<std::uint8_t> fg(m.cells.size(), 0);
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w; ++c) {
            double dist = 0.0;
            for (int ch = 0; ch < 3; ++ch)
                dist = std::max(dist, std::abs(img.rgb_at(r, c, ch) - background[ch]));
            fg[static_cast<size_t>(r) * m.w + c] = dist > tol ? 1 : 0;
        }
    }

    // keep the largest 8-connected component (first in scan order on ties)
    std::vector<int> label(fg.size(), -1);
    int best_count = 0, best_label = -1, next = 0;
    for (int r = 0; r < m.h; ++r) {
        for (int c = 0; c < m.w; ++c) {
            const size_t i = static_cast<size_t>(r) * m.w + c;
            if (!fg[i] || label[i] >= 0) continue;
            int count = 0;
            std::queue<std::pair<int, int>> q;
            q.push({r, c});
            label[i] = next;
            while (!q.empty()) {
                const auto [qr, qc] = q.front();
                q.pop();
                ++count;
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int nr = qr + dr, nc = qc + dc;
                        if (nr < 0 || nr >= m.h || nc < 0 || nc >= m.w) continue;
                        const size_t ni = static_cast<size_t>(nr) * m.w + nc;
                        if (!fg[ni] || label[ni] >= 0) continue;
                        label[ni] = next;
                        q.push({nr, nc});
                    }
                }
            }
            if (count > best_count) {
                best_count = count;
                best_label = next;
            }
            ++next;
        }
    }
    if (best_label >= 0) {
        for (size_t i = 0; i < fg.size(); ++i) {
            if (label[i] == best_label) {
                m.cells[i] = 1;
                ++m.foreground;
            }
        }
    }
    return m;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
    if (a.h != b.h || a.w != b.w) throw DomainError("iou: mask dims differ");
    long inter = 0, uni = 0;
    for (size_t i = 0; i < a.cells.size(); ++i) {
        const bool pa = a.cells[i] != 0, pb = b.cells[i] != 0;
        inter += pa && pb;
        uni += pa || pb;
    }
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

RotatedBox min_area_box(const BinaryMask& m) {
    if (m.empty()) throw DataError("min_area_box: empty mask");
    std::vector<Pt> pts;
    pts.reserve(m.foreground);
    for (int r = 0; r < m.h; ++r)
        for (int c = 0; c < m.w; ++c)
            if (m.at(r, c)) pts.push_back({static_cast<double>(c), static_cast<double>(r)});

    const std::vector<Pt> hull = convex_hull(pts);
    if (hull.size() == 1) {
        RotatedBox box;
        box.cx = hull[0].x;
        box.cy = hull[0].y;
        return box;
    }
    if (hull.size() == 2) {
        const double dx = hull[1].x - hull[0].x, dy = hull[1].y - hull[0].y;
        const double len = std::hypot(dx, dy);
        RotatedBox box;
        box.cx = 0.5 * (hull[0].x + hull[1].x);
        box.cy = 0.5 * (hull[0].y + hull[1].y);
        box.half_x = 0.5 * len;
        box.half_y = 0.0;
        box.angle = wrap_half_turn(std::atan2(dy, dx));
        return box;
    }

    RotatedBox best;
    double best_area = 1e300;
    for (size_t i = 0; i < hull.size(); ++i) {
        const Pt& a = hull[i];
        const Pt& b = hull[(i + 1) % hull.size()];
        const double len = std::hypot(b.x - a.x, b.y - a.y);
        if (len < 1e-12) continue;
        const RotatedBox cand = box_from_frame(hull, (b.x - a.x) / len, (b.y - a.y) / len);
        const double area = cand.area();
        const double tol = 1e-9 * std::max(1.0, std::min(area, best_area));
        if (area < best_area - tol || (area < best_area + tol && cand.angle < best.angle)) {
            best_area = std::min(best_area, area);
            best = cand;
        }
    }
    return best;
}

PairScore score_pair(const geom::SceneImage& pred, const geom::SceneImage& truth,
                     const std::array<double, 3>& background, double tol) {
    const BinaryMask pm = binarize(pred, background, tol);
    const BinaryMask tm = binarize(truth, background, tol);
    if (tm.empty()) throw DataError("score_pair: ground-truth mask is empty");

    const RotatedBox tb = min_area_box(tm);
    PairScore s;
    s.iou = iou(pm, tm);
    s.l = tb.diagonal();
    if (pm.empty()) {
        s.pred_empty = true;
        return s;
    }
    const RotatedBox pb = min_area_box(pm);
    s.d = std::hypot(pb.cx - tb.cx, pb.cy - tb.cy);
    s.hit = s.d <= 0.5 * s.l;
    return s;
}

double localization_score(const std::vector<geom::SceneImage>& preds,
                          const std::vector<geom::SceneImage>& truths,
                          const std::array<double, 3>& background, double tol) {
    if (preds.size() != truths.size()) throw DomainError("localization_score: list sizes differ");
    if (preds.empty()) throw DomainError("localization_score: empty lists");
    int hits = 0;
    for (size_t i = 0; i < preds.size(); ++i)
        hits += score_pair(preds[i], truths[i], background, tol).hit;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace sonobox::eval
