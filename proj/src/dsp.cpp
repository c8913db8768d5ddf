#include "sonobox/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "sonobox/fft.hpp"

namespace sonobox::dsp {

void StftConfig::validate(double sample_rate) const {
    if (hop <= 0 || window_len < hop) throw ConfigError("window_len >= hop > 0 required");
    if (n_mels <= 0) throw ConfigError("n_mels must be positive");
    if (fmin_hz < 0.0 || fmin_hz >= fmax(sample_rate)) throw ConfigError("fmin must be below fmax");
    if (fmax(sample_rate) > sample_rate / 2.0 + 1e-9) throw ConfigError("fmax above Nyquist");
    if (log_floor <= 0.0) throw ConfigError("log_floor must be positive");
}

Matrix stft_magnitude(std::span<const double> channel, const StftConfig& cfg) {
    const int win = cfg.window_len;
    if (static_cast<int>(channel.size()) < win) {
        throw DomainError("channel shorter than one analysis window");
    }
    const int frames = static_cast<int>((channel.size() - win) / cfg.hop) + 1;
    const int bins = cfg.freq_bins();

    std::vector<double> window(win);
    for (int n = 0; n < win; ++n) {
        window[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / win));
    }

    const size_t nfft = next_pow2(win);
    Matrix mag(frames, bins);
    std::vector<std::complex<double>> buf(nfft);
    for (int t = 0; t < frames; ++t) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const double* frame = channel.data() + static_cast<size_t>(t) * cfg.hop;
        for (int n = 0; n < win; ++n) buf[n] = frame[n] * window[n];
        fft_inplace(buf, false);
        for (int f = 0; f < bins; ++f) mag.at(t, f) = std::abs(buf[f]);
    }
    return mag;
}

namespace {

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

}  // namespace

Matrix mel_filterbank(double sample_rate, const StftConfig& cfg) {
    cfg.validate(sample_rate);
    const int bins = cfg.freq_bins();
    const double mel_lo = hz_to_mel(cfg.fmin_hz);
    const double mel_hi = hz_to_mel(cfg.fmax(sample_rate));

    std::vector<double> corners(cfg.n_mels + 2);
    for (int i = 0; i < cfg.n_mels + 2; ++i) {
        corners[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (cfg.n_mels + 1));
    }

    Matrix fb(cfg.n_mels, bins);
    for (int m = 0; m < cfg.n_mels; ++m) {
        const double lo = corners[m], mid = corners[m + 1], hi = corners[m + 2];
        for (int f = 0; f < bins; ++f) {
            const double freq = f * sample_rate / cfg.window_len;
            double w = 0.0;
            if (freq > lo && freq < hi) {
                w = freq <= mid ? (freq - lo) / (mid - lo) : (hi - freq) / (hi - mid);
            }
            fb.at(m, f) = w;
        }
    }
    return fb;
}

Matrix mel_spectrogram(const Matrix& mag, double sample_rate, const StftConfig& cfg) {
    if (mag.cols != cfg.freq_bins()) throw DomainError("spectrogram width does not match config");
    const Matrix fb = mel_filterbank(sample_rate, cfg);
    Matrix out(mag.rows, cfg.n_mels);
    for (int t = 0; t < mag.rows; ++t) {
        for (int m = 0; m < cfg.n_mels; ++m) {
            double acc = 0.0;
            for (int f = 0; f < mag.cols; ++f) acc += fb.at(m, f) * mag.at(t, f);
            out.at(t, m) = std::log1p(acc / cfg.log_floor);
        }
    }
    return out;
}

Segment segment_by_energy(std::span<const double> channel, double threshold, int window,
                          int hop) {
    if (channel.empty()) return Segment{0, 0, true};
    const int win = std::min<int>(window, static_cast<int>(channel.size()));
    const int frames = static_cast<int>((channel.size() - win) / hop) + 1;

    std::vector<double> energy(frames, 0.0);
    double max_e = 0.0;
    for (int t = 0; t < frames; ++t) {
        double e = 0.0;
        const double* frame = channel.data() + static_cast<size_t>(t) * hop;
        for (int n = 0; n < win; ++n) e += frame[n] * frame[n];
        energy[t] = e;
        max_e = std::max(max_e, e);
    }
    if (max_e <= 0.0) return Segment{0, channel.size(), true};

    int first = -1, last = -1;
    for (int t = 0; t < frames; ++t) {
        if (energy[t] >= threshold * max_e) {
            if (first < 0) first = t;
            last = t;
        }
    }
    Segment seg;
    seg.start = static_cast<size_t>(first) * hop;
    seg.end = std::min(channel.size(), static_cast<size_t>(last) * hop + win);
    return seg;
}

std::pair<size_t, size_t> synchronize(const std::array<Segment, 4>& segments) {
    size_t start = segments[0].start, end = segments[0].end;
    for (const auto& s : segments) {
        if (s.silent) throw DataError("cannot synchronize: a channel is silent");
        start = std::min(start, s.start);
        end = std::max(end, s.end);
    }
    return {start, end};
}

namespace {

// Linear interpolation along the time axis to out_t rows.
Matrix resize_time(const Matrix& in, int out_t) {
    if (in.rows == out_t) return in;
    Matrix out(out_t, in.cols);
    for (int t = 0; t < out_t; ++t) {
        const double pos = out_t > 1
                               ? static_cast<double>(t) * (in.rows - 1) / (out_t - 1)
                               : 0.0;
        const int t0 = std::min(in.rows - 1, static_cast<int>(pos));
        const int t1 = std::min(in.rows - 1, t0 + 1);
        const double w = pos - t0;
        for (int f = 0; f < in.cols; ++f) {
            out.at(t, f) = (1.0 - w) * in.at(t0, f) + w * in.at(t1, f);
        }
    }
    return out;
}

}  // namespace

InputTensor build_input(const sim::WaveformBundle& bundle, const StftConfig& cfg, int out_t) {
    cfg.validate(bundle.sample_rate);
    double peak = 0.0;
    for (const auto& ch : bundle.channels) {
        for (double s : ch) peak = std::max(peak, std::abs(s));
    }

    InputTensor tensor;
    tensor.t_bins = out_t;
    tensor.f_bins = cfg.n_mels;
    double lo = 0.0, hi = 0.0;
    bool first_value = true;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> scaled(bundle.channels[i]);
        if (peak > 0.0) {
            for (double& s : scaled) s /= peak;
        }
        const Matrix mel =
            mel_spectrogram(stft_magnitude(scaled, cfg), bundle.sample_rate, cfg);
        Matrix plane = resize_time(mel, out_t);
        for (double v : plane.data) {
            if (first_value) {
                lo = hi = v;
                first_value = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        tensor.channels[i] = std::move(plane.data);
    }

    const double range = hi - lo;
    for (auto& plane : tensor.channels) {
        if (range <= 0.0) {
            std::fill(plane.begin(), plane.end(), 0.0);
        } else {
            for (double& v : plane) v = (v - lo) / range;
        }
    }
    return tensor;
}

InputTensor preprocess(const sim::WaveformBundle& bundle, const StftConfig& cfg,
                       double seg_threshold, int out_t) {
    std::array<Segment, 4> segs;
    for (int i = 0; i < 4; ++i) segs[i] = segment_by_energy(bundle.channels[i], seg_threshold);
    auto [start, end] = synchronize(segs);
    const size_t len = bundle.channels[0].size();
    if (end - start < static_cast<size_t>(cfg.window_len)) {
        end = std::min(len, start + static_cast<size_t>(cfg.window_len));
        start = end - std::min<size_t>(end, cfg.window_len);
    }
    sim::WaveformBundle cut;
    cut.sample_rate = bundle.sample_rate;
    for (int i = 0; i < 4; ++i) {
        cut.channels[i].assign(bundle.channels[i].begin() + start,
                               bundle.channels[i].begin() + end);
    }
    return build_input(cut, cfg, out_t);
}

InputTensor ablate_flip(InputTensor t) {
    std::swap(t.channels[0], t.channels[3]);
    std::swap(t.channels[1], t.channels[2]);
    return t;
}

InputTensor ablate_threshold_amplitude(InputTensor t, double tau) {
    for (auto& plane : t.channels) {
        for (double& v : plane) v = v >= tau ? 1.0 : 0.0;
    }
    return t;
}

InputTensor ablate_temporal_shift(InputTensor t, int shift_frames) {
    const int T = t.t_bins, F = t.f_bins;
    auto shift_plane = [&](std::vector<double>& plane, int s) {
        std::vector<double> out(plane.size(), 0.0);
        for (int dst = 0; dst < T; ++dst) {
            const int src = dst - s;
            if (src < 0 || src >= T) continue;
            std::copy_n(plane.begin() + static_cast<size_t>(src) * F, F,
                        out.begin() + static_cast<size_t>(dst) * F);
        }
        plane = std::move(out);
    };
    shift_plane(t.channels[0], shift_frames);
    shift_plane(t.channels[1], shift_frames);
    shift_plane(t.channels[2], -shift_frames);
    shift_plane(t.channels[3], -shift_frames);
    return t;
}

}  // namespace sonobox::dsp
