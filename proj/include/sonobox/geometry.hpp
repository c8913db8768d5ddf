#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sonobox/common.hpp"

namespace sonobox::geom {

// The physical configuration shared by the simulator and the TDoA solver:
// box interior dimensions, the four wall-mounted pickups, and the
// structure-borne propagation speed.
struct BoxWorld {
    double width_m = 0.155;   // x extent
    double length_m = 0.26;   // y extent
    double height_m = 0.13;   // z extent
    std::array<Vec3, 4> mic_positions{};
    double wave_speed = 500.0;    // m/s
    double sample_rate = 16000.0; // Hz

    void validate() const;
};

// Mics at the horizontal center of each wall, mic_height above the floor.
// Mic 1 and 4 face each other across x, mic 2 and 3 across y, so swapping
// (1,4) and (2,3) mirrors the layout through the box center.
BoxWorld default_world(double sample_rate = 16000.0, double wave_speed = 500.0,
                       double mic_height = 0.02);

enum class ShapeKind : uint8_t { Cube = 0, Block = 1, Stick = 2 };

const char* shape_name(ShapeKind kind);
ShapeKind shape_from_name(const std::string& name);

struct ShapeSpec {
    ShapeKind kind = ShapeKind::Cube;
    double half_x_m = 0.025;  // resting footprint half-extents
    double half_y_m = 0.025;
    double height_m = 0.05;   // resting height

    void validate() const;
    double circumradius() const;
};

ShapeSpec default_shape(ShapeKind kind);

struct Pose2D {
    double x = 0.0;      // object center, box floor frame
    double y = 0.0;
    double theta = 0.0;  // [0, pi)
};

bool pose_inside(const BoxWorld& world, const ShapeSpec& shape, const Pose2D& pose);

// Top-down view of the box interior. The image covers a square of side
// max(width, length) meters centered on the box; row index grows with y.
struct SceneImage {
    int res = 0;
    double meters_per_pixel = 0.0;
    std::vector<double> rgb;    // res*res*3, [0,1], row-major, interleaved
    std::vector<double> depth;  // res*res, [0,1], 0 = floor

    double& rgb_at(int r, int c, int ch) { return rgb[(static_cast<size_t>(r) * res + c) * 3 + ch]; }
    double rgb_at(int r, int c, int ch) const { return rgb[(static_cast<size_t>(r) * res + c) * 3 + ch]; }
    double& depth_at(int r, int c) { return depth[static_cast<size_t>(r) * res + c]; }
    double depth_at(int r, int c) const { return depth[static_cast<size_t>(r) * res + c]; }
};

struct RenderPalette {
    // One wood tone for every shape; the blocks share color and material.
    std::array<double, 3> foreground{0.82, 0.66, 0.43};
    std::array<double, 3> background{0.08, 0.09, 0.11};
    double depth_max_height_m = 0.05;  // tallest shape maps to depth 1.0
};

// Pixel centers inside the rotated footprint get the foreground color and the
// shape height (normalized); everything else is background at depth 0.
SceneImage render_scene(const BoxWorld& world, const ShapeSpec& shape, const Pose2D& pose,
                        int res, const RenderPalette& palette = RenderPalette{});

// Map between pixel index coordinates (col, row; integer coords name pixel
// centers) and box floor coordinates.
Vec2 pixel_to_world(const BoxWorld& world, int res, double col, double row);
Vec2 world_to_pixel(const BoxWorld& world, int res, double x, double y);

// Straight-line arrival delay from a source inside the box to each mic.
std::array<double, 4> expected_delays(const BoxWorld& world, double x, double y, double z);

}  // namespace sonobox::geom
