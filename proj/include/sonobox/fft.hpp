#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sonobox {

// In-place radix-2 FFT. Size must be a power of two. The inverse transform
// includes the 1/N scale.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

std::size_t next_pow2(std::size_t n);

// Forward FFT of a real signal zero-padded to n (power of two).
std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n);

}  // namespace sonobox
