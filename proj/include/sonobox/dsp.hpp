#pragma once

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "sonobox/common.hpp"
#include "sonobox/sim.hpp"

namespace sonobox::dsp {

struct StftConfig {
    int window_len = 512;
    int hop = 128;
    int n_mels = 128;
    double fmin_hz = 20.0;
    double fmax_hz = 0.0;  // 0 means Nyquist
    double log_floor = 1e-6;

    void validate(double sample_rate) const;
    double fmax(double sample_rate) const { return fmax_hz > 0.0 ? fmax_hz : sample_rate / 2.0; }
    int freq_bins() const { return window_len / 2 + 1; }
};

// Row-major time x frequency matrix.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

// Hann-windowed one-sided magnitude spectrogram. Frames start every hop
// samples; count = floor((len - window_len)/hop) + 1.
Matrix stft_magnitude(std::span<const double> channel, const StftConfig& cfg);

// Triangular filters with unit peak, corners equally spaced on the
// 2595*log10(1 + f/700) scale between fmin and fmax. n_mels x freq_bins.
Matrix mel_filterbank(double sample_rate, const StftConfig& cfg);

// Filterbank pooling followed by log(1 + x/log_floor) compression.
Matrix mel_spectrogram(const Matrix& mag, double sample_rate, const StftConfig& cfg);

struct Segment {
    size_t start = 0;  // samples
    size_t end = 0;
    bool silent = false;
};

// Short-time energy gate: frames whose energy reaches threshold * max are
// active; the segment spans the first through last active frame.
Segment segment_by_energy(std::span<const double> channel, double threshold,
                          int window = 256, int hop = 128);

// Widest common window: earliest start, latest end. Throws on a silent
// channel so a dead mic cannot silently shrink the analysis window.
std::pair<size_t, size_t> synchronize(const std::array<Segment, 4>& segments);

// The network input: four time x frequency planes, jointly normalized.
struct InputTensor {
    int t_bins = 0;
    int f_bins = 0;
    std::array<std::vector<double>, 4> channels;

    double& at(int t, int f, int ch) { return channels[ch][static_cast<size_t>(t) * f_bins + f]; }
    double at(int t, int f, int ch) const {
        return channels[ch][static_cast<size_t>(t) * f_bins + f];
    }
};

// Per channel: spectrogram -> mel -> linear time-axis resize to out_t frames;
// then one min-max normalization across all four channels. All-constant
// tensors normalize to zero.
InputTensor build_input(const sim::WaveformBundle& bundle, const StftConfig& cfg,
                        int out_t = 128);

// Energy segmentation on each channel, synchronized to a common window,
// then build_input on the common slice.
InputTensor preprocess(const sim::WaveformBundle& bundle, const StftConfig& cfg,
                       double seg_threshold = 0.01, int out_t = 128);

// Swaps the opposing mic pairs (1,4) and (2,3).
InputTensor ablate_flip(InputTensor t);

// Binary amplitude: 1 where value >= tau.
InputTensor ablate_threshold_amplitude(InputTensor t, double tau);

// Shifts channels 1 and 2 by +s frames and channels 3 and 4 by -s frames
// along the time axis, zero-filling vacated frames.
InputTensor ablate_temporal_shift(InputTensor t, int shift_frames);

}  // namespace sonobox::dsp
