#include "sonobox/sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "sonobox/rng.hpp"

namespace sonobox::sim {

void AcousticsConfig::validate() const {
    if (decay_tau_s <= 0.0 || clip_len_s <= 0.0 || echo_delay_s <= 0.0) {
        throw DomainError("acoustic time constants must be positive");
    }
    if (ring_freq_lo_hz <= 0.0 || ring_freq_hi_hz < ring_freq_lo_hz) {
        throw DomainError("invalid resonance band");
    }
    if (echo_gain <= 0.0 || echo_gain >= 1.0) throw DomainError("echo_gain must be in (0,1)");
    if (echo_count < 0) throw DomainError("echo_count must be >= 0");
    if (noise_std < 0.0) throw DomainError("noise_std must be >= 0");
    if (attenuation_exponent < 0.0) throw DomainError("attenuation_exponent must be >= 0");
    if (min_distance_m <= 0.0) throw DomainError("min_distance_m must be positive");
}

void validate_drop_event(const DropEvent& event, const TrajectoryConfig& cfg) {
    if (event.impacts.size() < 2 || event.impacts.size() > static_cast<size_t>(cfg.max_impacts)) {
        throw DomainError("impact count outside [2, max_impacts]");
    }
    for (size_t i = 1; i < event.impacts.size(); ++i) {
        if (!(event.impacts[i].time_s > event.impacts[i - 1].time_s)) {
            throw DomainError("impact times must strictly increase");
        }
        if (event.impacts[i].energy > event.impacts[i - 1].energy + 1e-12) {
            throw DomainError("impact energies must be non-increasing");
        }
    }
    const Impact& last = event.impacts.back();
    if (std::abs(event.final_pose.x - last.position.x) > 1e-9 ||
        std::abs(event.final_pose.y - last.position.y) > 1e-9) {
        throw DomainError("final pose must coincide with the last impact");
    }
}

namespace {

// Fold q0 + v*t into [lo, hi] by reflection; flips *v when the fold lands on
// a descending segment of the triangle wave.
double fold_reflect(double q0, double* v, double t, double lo, double hi) {
    const double span = hi - lo;
    if (span <= 0.0) {
        *v = 0.0;
        return (lo + hi) / 2.0;
    }
    double u = std::fmod(q0 - lo + *v * t, 2.0 * span);
    if (u < 0.0) u += 2.0 * span;
    if (u < span) return lo + u;
    *v = -*v;
    return lo + 2.0 * span - u;
}

}  // namespace

DropEvent simulate_trajectory(const geom::BoxWorld& world, const geom::ShapeSpec& shape,
                              uint64_t seed, const TrajectoryConfig& cfg) {
    world.validate();
    shape.validate();
    Rng rng(seed);

    const double r = shape.circumradius();
    const double x_lo = r, x_hi = world.width_m - r;
    const double y_lo = r, y_hi = world.length_m - r;

    const double h0 = rng.uniform(cfg.drop_height_lo_m, cfg.drop_height_hi_m);
    const double e = rng.uniform(cfg.restitution_lo, cfg.restitution_hi);

    double px, py;
    if (cfg.fixed_drop_point) {
        px = cfg.fixed_drop_point->x;
        py = cfg.fixed_drop_point->y;
    } else {
        px = x_lo < x_hi ? rng.uniform(x_lo, x_hi) : (x_lo + x_hi) / 2.0;
        py = y_lo < y_hi ? rng.uniform(y_lo, y_hi) : (y_lo + y_hi) / 2.0;
    }
    double vx, vy;
    if (cfg.fixed_h_velocity) {
        vx = cfg.fixed_h_velocity->x;
        vy = cfg.fixed_h_velocity->y;
    } else {
        const double speed = rng.uniform(0.0, cfg.max_h_speed);
        const double dir = rng.uniform(0.0, 2.0 * kPi);
        vx = speed * std::cos(dir);
        vy = speed * std::sin(dir);
    }

    DropEvent event;
    event.shape = shape;
    event.seed = seed;

    const double v1 = std::sqrt(2.0 * cfg.gravity * h0);
    double t = std::sqrt(2.0 * h0 / cfg.gravity);  // first floor contact
    double speed = v1;
    int k = 0;
    while (k < cfg.max_impacts) {
        ++k;
        Impact imp;
        imp.time_s = t;
        imp.position = Vec3{px, py, 0.0};
        imp.energy = speed * speed;
        event.impacts.push_back(imp);
        // post-bounce state
        const double next_speed = e * speed;
        if (k >= 2 && next_speed < cfg.stop_speed) break;
        const double dt = 2.0 * next_speed / cfg.gravity;
        px = fold_reflect(px, &vx, dt, x_lo, x_hi);
        py = fold_reflect(py, &vy, dt, y_lo, y_hi);
        vx *= e;
        vy *= e;
        t += dt;
        speed = next_speed;
        if (k >= 2 && speed < cfg.stop_speed) break;
    }

    event.final_pose.x = event.impacts.back().position.x;
    event.final_pose.y = event.impacts.back().position.y;
    event.final_pose.theta = rng.uniform(0.0, kPi);
    validate_drop_event(event, cfg);
    return event;
}

std::array<double, 4> impact_amplitudes(const Impact& impact, const geom::BoxWorld& world,
                                        const AcousticsConfig& cfg) {
    std::array<double, 4> amps{};
    for (int i = 0; i < 4; ++i) {
        const double d =
            std::max(distance(impact.position, world.mic_positions[i]), cfg.min_distance_m);
        amps[i] = impact.energy / std::pow(d, cfg.attenuation_exponent);
    }
    return amps;
}

WaveformBundle synthesize_waveforms(const DropEvent& event, const geom::BoxWorld& world,
                                    const AcousticsConfig& cfg, uint64_t seed) {
    world.validate();
    cfg.validate();
    if (event.impacts.empty()) throw DomainError("event has no impacts");

    const double sr = world.sample_rate;
    const size_t length = static_cast<size_t>(std::llround(cfg.clip_len_s * sr));

    // All direct-path onsets must land inside the clip.
    double last_onset = 0.0;
    for (const auto& imp : event.impacts) {
        const auto delays =
            geom::expected_delays(world, imp.position.x, imp.position.y, imp.position.z);
        for (double d : delays) last_onset = std::max(last_onset, imp.time_s + d);
    }
    if (last_onset >= cfg.clip_len_s) {
        throw DomainError("clip too short to contain the last impact");
    }

    Rng rng(seed);
    std::vector<double> ring_freqs(event.impacts.size());
    for (auto& f : ring_freqs) f = rng.uniform(cfg.ring_freq_lo_hz, cfg.ring_freq_hi_hz);

    WaveformBundle bundle;
    bundle.sample_rate = sr;
    for (auto& ch : bundle.channels) ch.assign(length, 0.0);

    const double decay_step = std::exp(-1.0 / (sr * cfg.decay_tau_s));
    for (size_t j = 0; j < event.impacts.size(); ++j) {
        const Impact& imp = event.impacts[j];
        const auto delays =
            geom::expected_delays(world, imp.position.x, imp.position.y, imp.position.z);
        const auto amps = impact_amplitudes(imp, world, cfg);
        const double freq = ring_freqs[j];
        const std::complex<double> rot_step(std::cos(2.0 * kPi * freq / sr),
                                            std::sin(2.0 * kPi * freq / sr));
        for (int i = 0; i < 4; ++i) {
            for (int echo = 0; echo <= cfg.echo_count; ++echo) {
                const double onset = imp.time_s + delays[i] + echo * cfg.echo_delay_s;
                const double amp = amps[i] * std::pow(cfg.echo_gain, echo);
                const size_t k0 = static_cast<size_t>(std::ceil(onset * sr));
                if (k0 >= length) continue;
                const double frac = static_cast<double>(k0) / sr - onset;  // [0, 1/sr)
                double env = std::exp(-frac / cfg.decay_tau_s);
                std::complex<double> phase(std::cos(2.0 * kPi * freq * frac),
                                           std::sin(2.0 * kPi * freq * frac));
                auto& ch = bundle.channels[i];
                for (size_t k = k0; k < length; ++k) {
                    ch[k] += amp * env * phase.imag();
                    env *= decay_step;
                    phase *= rot_step;
                    if (env < 1e-9) break;
                }
            }
        }
    }

    if (cfg.noise_std > 0.0) {
        for (auto& ch : bundle.channels) {
            for (auto& s : ch) s += cfg.noise_std * rng.normal();
        }
    }

    double peak = 0.0;
    for (const auto& ch : bundle.channels) {
        for (double s : ch) peak = std::max(peak, std::abs(s));
    }
    if (peak > 0.0) {
        const double gain = 1.0 / peak;
        for (auto& ch : bundle.channels) {
            for (auto& s : ch) s *= gain;
        }
    }
    for (const auto& ch : bundle.channels) {
        for (double s : ch) {
            if (!std::isfinite(s)) throw NumericError("non-finite sample in synthesis");
        }
    }
    return bundle;
}

void generate_dataset_stream(
    int n, const std::vector<geom::ShapeSpec>& shapes, const DatasetParams& params,
    uint64_t master_seed,
    const std::function<void(int, const DropEvent&, const WaveformBundle&)>& sink) {
    if (n <= 0) throw DomainError("dataset size must be positive");
    if (shapes.empty()) throw DomainError("at least one shape required");
    const double diag = std::sqrt(params.world.width_m * params.world.width_m +
                                  params.world.length_m * params.world.length_m +
                                  params.world.height_m * params.world.height_m);
    const double max_delay = diag / params.world.wave_speed;
    for (int index = 0; index < n; ++index) {
        const geom::ShapeSpec& shape = shapes[index % shapes.size()];
        DropEvent event;
        uint64_t seed = 0;
        bool ok = false;
        for (uint64_t attempt = 0; attempt < 100; ++attempt) {
            seed = attempt == 0 ? hash_seed(master_seed, index)
                                : hash_seed(master_seed, index, attempt);
            event = simulate_trajectory(params.world, shape, seed, params.trajectory);
            if (event.impacts.back().time_s + max_delay <
                params.acoustics.clip_len_s - 1.0 / params.world.sample_rate) {
                ok = true;
                break;
            }
        }
        if (!ok) throw NumericError("could not seed an episode that fits the clip");
        event.scene = geom::render_scene(params.world, shape, event.final_pose,
                                         params.image_res, params.palette);
        const WaveformBundle bundle = synthesize_waveforms(
            event, params.world, params.acoustics, mix64(seed ^ 0x6e6f697365ULL));
        sink(index, event, bundle);
    }
}

std::vector<std::pair<DropEvent, WaveformBundle>> generate_dataset(
    int n, const std::vector<geom::ShapeSpec>& shapes, const DatasetParams& params,
    uint64_t master_seed) {
    std::vector<std::pair<DropEvent, WaveformBundle>> out;
    out.reserve(n);
    generate_dataset_stream(n, shapes, params, master_seed,
                            [&out](int, const DropEvent& e, const WaveformBundle& w) {
                                out.emplace_back(e, w);
                            });
    return out;
}

}  // namespace sonobox::sim
