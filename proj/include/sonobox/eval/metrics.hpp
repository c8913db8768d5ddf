#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sonobox/geometry.hpp"

namespace sonobox::eval {

struct BinaryMask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> cells;  // row-major
    int foreground = 0;

    bool at(int row, int col) const { return cells[static_cast<size_t>(row) * w + col] != 0; }
    bool empty() const { return foreground == 0; }
};

// Minimum-area rectangle over foreground pixel centers, which sit at
// integer (col, row) coordinates. The angle is the direction of the
// longer side, in [0, pi); half_x >= half_y. Squares canonicalize to
// the smaller of the two axis angles.
struct RotatedBox {
    double cx = 0.0, cy = 0.0;      // pixels (col, row)
    double half_x = 0.0, half_y = 0.0;
    double angle = 0.0;

    double diagonal() const;
    double area() const { return 4.0 * half_x * half_y; }
};

// Foreground: max-channel distance from the background color exceeds
// tol. Only the largest 8-connected component is kept.
BinaryMask binarize(const geom::SceneImage& img, const std::array<double, 3>& background,
                    double tol = 0.15);

// Both masks empty is defined as 0.
double iou(const BinaryMask& a, const BinaryMask& b);

// Convex hull plus rotating calipers. Throws DataError on an empty mask.
RotatedBox min_area_box(const BinaryMask& m);

struct PairScore {
    double iou = 0.0;
    double d = 0.0;  // center distance in pixels; meaningless when pred_empty
    double l = 0.0;  // ground-truth box diagonal in pixels
    bool hit = false;
    bool pred_empty = false;
};

PairScore score_pair(const geom::SceneImage& pred, const geom::SceneImage& truth,
                     const std::array<double, 3>& background, double tol = 0.15);

// Fraction of pairs with d <= l/2; an empty prediction counts as a miss.
double localization_score(const std::vector<geom::SceneImage>& preds,
                          const std::vector<geom::SceneImage>& truths,
                          const std::array<double, 3>& background, double tol = 0.15);

}  // namespace sonobox::eval
