#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sonobox/geometry.hpp"

namespace sonobox::sim {

struct Impact {
    double time_s = 0.0;
    Vec3 position{};   // floor contact point, z = 0
    double energy = 0.0;  // impulse magnitude, proportional to impact speed^2
};

struct DropEvent {
    geom::ShapeSpec shape{};
    std::vector<Impact> impacts;
    geom::Pose2D final_pose{};
    geom::SceneImage scene{};  // rendered lazily; empty until the dataset step
    uint64_t seed = 0;
};

struct WaveformBundle {
    std::array<std::vector<double>, 4> channels;
    double sample_rate = 0.0;

    size_t length() const { return channels[0].size(); }
};

struct TrajectoryConfig {
    double drop_height_lo_m = 0.10;
    double drop_height_hi_m = 0.20;
    double restitution_lo = 0.35;
    double restitution_hi = 0.60;   // capped so impact amplitudes stay monotone
    double max_h_speed = 0.15;      // m/s
    double stop_speed = 0.25;       // impact speed below this ends the episode
    int max_impacts = 8;
    double gravity = 9.81;
    // Test hooks: pin the drop point / horizontal velocity instead of sampling.
    std::optional<Vec2> fixed_drop_point;
    std::optional<Vec2> fixed_h_velocity;
};

struct AcousticsConfig {
    double decay_tau_s = 0.06;          // impulse ring-down time constant
    double ring_freq_lo_hz = 300.0;     // per-impact resonance band
    double ring_freq_hi_hz = 3000.0;
    double attenuation_exponent = 1.0;  // amplitude ~ energy / distance^p
    int echo_count = 3;
    double echo_delay_s = 0.012;
    double echo_gain = 0.45;
    double noise_std = 0.002;
    double clip_len_s = 1.024;
    double min_distance_m = 0.03;       // near-field amplitude clamp

    void validate() const;
};

// Checks the invariants the simulator promises for its own episodes.
void validate_drop_event(const DropEvent& event, const TrajectoryConfig& cfg);

// Seeded 2D billiard with restitution: ballistic floor bounces, wall
// reflections of the horizontal motion, termination when the impact speed
// falls below the stop threshold (or the impact cap).
DropEvent simulate_trajectory(const geom::BoxWorld& world, const geom::ShapeSpec& shape,
                              uint64_t seed, const TrajectoryConfig& cfg = TrajectoryConfig{});

// Per-impact damped sinusoids delayed by the geometric arrival time at each
// mic, attenuated by distance, with echo copies, additive noise, and one
// joint peak normalization across all four channels.
WaveformBundle synthesize_waveforms(const DropEvent& event, const geom::BoxWorld& world,
                                    const AcousticsConfig& cfg, uint64_t noise_seed);

// Per-impact, per-channel direct-path amplitude (before normalization).
// Exposed so tests can check the amplitude ordering invariants.
std::array<double, 4> impact_amplitudes(const Impact& impact, const geom::BoxWorld& world,
                                        const AcousticsConfig& cfg);

struct DatasetParams {
    geom::BoxWorld world{};
    AcousticsConfig acoustics{};
    TrajectoryConfig trajectory{};
    int image_res = 128;
    geom::RenderPalette palette{};
};

// Episodes seeded as hash(master_seed, index); shapes cycled round-robin.
// Episodes whose impacts plus arrival delay would overrun the clip are
// re-seeded with an attempt counter. Emitted in index order.
void generate_dataset_stream(
    int n, const std::vector<geom::ShapeSpec>& shapes, const DatasetParams& params,
    uint64_t master_seed,
    const std::function<void(int index, const DropEvent&, const WaveformBundle&)>& sink);

std::vector<std::pair<DropEvent, WaveformBundle>> generate_dataset(
    int n, const std::vector<geom::ShapeSpec>& shapes, const DatasetParams& params,
    uint64_t master_seed);

}  // namespace sonobox::sim
