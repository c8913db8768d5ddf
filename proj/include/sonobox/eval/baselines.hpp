#pragma once

#include <cstdint>
#include <vector>

#include "sonobox/eval/metrics.hpp"
#include "sonobox/geometry.hpp"

namespace sonobox::eval {

// Which training scene to serve as the prediction for each test sample.
std::vector<int> baseline_random_picks(int train_count, int test_count, std::uint64_t seed);

// Mean direction of half-turn-periodic angles, computed on doubled
// angles so 10 deg and 170 deg average to 0 deg rather than 90.
double circular_mean_half_turn(const std::vector<double>& angles);

// Component-wise mean of centers and extents, circular mean of angles.
RotatedBox average_box(const std::vector<RotatedBox>& boxes);

// Rasterize a box as a scene: foreground color inside, background
// outside, a flat nominal depth. Pixel centers at integer coordinates,
// matching min_area_box.
geom::SceneImage render_box_scene(const RotatedBox& box, int res,
                                  const geom::RenderPalette& palette);

// Index of the training input with minimal L2 distance; ties resolve
// to the lowest index.
int nearest_index(const std::vector<std::vector<float>>& train_inputs,
                  const std::vector<float>& probe);

}  // namespace sonobox::eval
