#include "sonobox/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sonobox::geom {

namespace {
constexpr double kWallTol = 1e-9;
}

void BoxWorld::validate() const {
    if (width_m <= 0.0 || length_m <= 0.0 || height_m <= 0.0) {
        throw DomainError("box dimensions must be positive");
    }
    if (wave_speed <= 0.0) throw DomainError("wave_speed must be positive");
    if (sample_rate <= 0.0) throw DomainError("sample_rate must be positive");
    for (const auto& m : mic_positions) {
        const bool on_wall = std::abs(m.x) < kWallTol || std::abs(m.x - width_m) < kWallTol ||
                             std::abs(m.y) < kWallTol || std::abs(m.y - length_m) < kWallTol;
        if (!on_wall) throw DomainError("every mic must lie on a wall plane");
        if (m.x < -kWallTol || m.x > width_m + kWallTol || m.y < -kWallTol ||
            m.y > length_m + kWallTol || m.z < -kWallTol || m.z > height_m + kWallTol) {
            throw DomainError("mic position outside the box");
        }
    }
}

BoxWorld default_world(double sample_rate, double wave_speed, double mic_height) {
    BoxWorld w;
    w.sample_rate = sample_rate;
    w.wave_speed = wave_speed;
    w.mic_positions = {
        Vec3{0.0, w.length_m / 2.0, mic_height},        // mic 1, wall x = 0
        Vec3{w.width_m / 2.0, 0.0, mic_height},         // mic 2, wall y = 0
        Vec3{w.width_m / 2.0, w.length_m, mic_height},  // mic 3, wall y = length
        Vec3{w.width_m, w.length_m / 2.0, mic_height},  // mic 4, wall x = width
    };
    w.validate();
    return w;
}

const char* shape_name(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Cube: return "cube";
        case ShapeKind::Block: return "block";
        case ShapeKind::Stick: return "stick";
    }
    return "cube";
}

ShapeKind shape_from_name(const std::string& name) {
    if (name == "cube") return ShapeKind::Cube;
    if (name == "block") return ShapeKind::Block;
    if (name == "stick") return ShapeKind::Stick;
    throw ConfigError("unknown shape: " + name);
}

void ShapeSpec::validate() const {
    if (half_x_m <= 0.0 || half_y_m <= 0.0 || height_m <= 0.0) {
        throw DomainError("shape extents must be positive");
    }
    if (kind == ShapeKind::Cube && std::abs(half_x_m - half_y_m) > 1e-12) {
        throw DomainError("cube footprint must be square");
    }
}

double ShapeSpec::circumradius() const {
    return std::sqrt(half_x_m * half_x_m + half_y_m * half_y_m);
}

ShapeSpec default_shape(ShapeKind kind) {
    switch (kind) {
        case ShapeKind::Cube: return ShapeSpec{ShapeKind::Cube, 0.025, 0.025, 0.05};
        case ShapeKind::Block: return ShapeSpec{ShapeKind::Block, 0.0375, 0.025, 0.025};
        case ShapeKind::Stick: return ShapeSpec{ShapeKind::Stick, 0.05, 0.01, 0.02};
    }
    return ShapeSpec{};
}

bool pose_inside(const BoxWorld& world, const ShapeSpec& shape, const Pose2D& pose) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    for (int sx : {-1, 1}) {
        for (int sy : {-1, 1}) {
            const double dx = sx * shape.half_x_m;
            const double dy = sy * shape.half_y_m;
            const double x = pose.x + c * dx - s * dy;
            const double y = pose.y + s * dx + c * dy;
            if (x < -kWallTol || x > world.width_m + kWallTol || y < -kWallTol ||
                y > world.length_m + kWallTol) {
                return false;
            }
        }
    }
    return true;
}

Vec2 pixel_to_world(const BoxWorld& world, int res, double col, double row) {
    const double side = std::max(world.width_m, world.length_m);
    const double mpp = side / res;
    const double x0 = world.width_m / 2.0 - side / 2.0;
    const double y0 = world.length_m / 2.0 - side / 2.0;
    return Vec2{x0 + (col + 0.5) * mpp, y0 + (row + 0.5) * mpp};
}

Vec2 world_to_pixel(const BoxWorld& world, int res, double x, double y) {
    const double side = std::max(world.width_m, world.length_m);
    const double mpp = side / res;
    const double x0 = world.width_m / 2.0 - side / 2.0;
    const double y0 = world.length_m / 2.0 - side / 2.0;
    return Vec2{(x - x0) / mpp - 0.5, (y - y0) / mpp - 0.5};
}

SceneImage render_scene(const BoxWorld& world, const ShapeSpec& shape, const Pose2D& pose,
                        int res, const RenderPalette& palette) {
    world.validate();
    shape.validate();
    if (res <= 0) throw DomainError("render resolution must be positive");
    if (!pose_inside(world, shape, pose)) {
        throw DomainError("pose places the object footprint outside the box");
    }
    SceneImage img;
    img.res = res;
    img.meters_per_pixel = std::max(world.width_m, world.length_m) / res;
    img.rgb.assign(static_cast<size_t>(res) * res * 3, 0.0);
    img.depth.assign(static_cast<size_t>(res) * res, 0.0);

    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    const double depth_value =
        std::min(1.0, shape.height_m / palette.depth_max_height_m);
    for (int r = 0; r < res; ++r) {
        for (int col = 0; col < res; ++col) {
            const Vec2 p = pixel_to_world(world, res, col, r);
            const double dx = p.x - pose.x;
            const double dy = p.y - pose.y;
            // into the footprint frame
            const double u = c * dx + s * dy;
            const double v = -s * dx + c * dy;
            const bool inside = std::abs(u) <= shape.half_x_m && std::abs(v) <= shape.half_y_m;
            const auto& color = inside ? palette.foreground : palette.background;
            for (int ch = 0; ch < 3; ++ch) img.rgb_at(r, col, ch) = color[ch];
            img.depth_at(r, col) = inside ? depth_value : 0.0;
        }
    }
    return img;
}

std::array<double, 4> expected_delays(const BoxWorld& world, double x, double y, double z) {
    if (x < 0.0 || x > world.width_m || y < 0.0 || y > world.length_m || z < 0.0 ||
        z > world.height_m) {
        throw DomainError("source outside the box");
    }
    std::array<double, 4> delays{};
    const Vec3 src{x, y, z};
    for (int i = 0; i < 4; ++i) {
        delays[i] = distance(src, world.mic_positions[i]) / world.wave_speed;
    }
    return delays;
}

}  // namespace sonobox::geom
