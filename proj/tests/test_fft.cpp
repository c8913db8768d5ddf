#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "sonobox/common.hpp"
#include "sonobox/fft.hpp"
#include "sonobox/rng.hpp"

using namespace sonobox;
using cd = std::complex<double>;

namespace {

// Quadratic-time DFT used as the reference.
std::vector<cd> dft(const std::vector<cd>& x) {
    const size_t n = x.size();
    std::vector<cd> out(n);
    for (size_t k = 0; k < n; ++k) {
        cd acc(0.0, 0.0);
        for (size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
            acc += x[j] * cd(std::cos(ang), std::sin(ang));
        }
        out[k] = acc;
    }
    return out;
}

}  // namespace

TEST_CASE("impulse transforms to a flat spectrum") {
    std::vector<cd> a(64, cd(0.0, 0.0));
    a[0] = cd(1.0, 0.0);
    fft_inplace(a, false);
    for (const auto& c : a) {
        CHECK(c.real() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(c.imag() == doctest::Approx(0.0).epsilon(1e-12));
    }
}

TEST_CASE("matches the direct DFT on random input") {
    Rng rng(99);
    std::vector<cd> x(128);
    for (auto& c : x) c = cd(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    auto ref = dft(x);
    auto a = x;
    fft_inplace(a, false);
    for (size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(a[i] - ref[i]) < 1e-9);
    }
}

TEST_CASE("forward then inverse is the identity") {
    Rng rng(17);
    std::vector<cd> x(256);
    for (auto& c : x) c = cd(rng.normal(), rng.normal());
    auto a = x;
    fft_inplace(a, false);
    fft_inplace(a, true);
    for (size_t i = 0; i < x.size(); ++i) {
        CHECK(std::abs(a[i] - x[i]) < 1e-12);
    }
}

TEST_CASE("Parseval holds") {
    Rng rng(23);
    std::vector<cd> x(512);
    double time_energy = 0.0;
    for (auto& c : x) {
        c = cd(rng.normal(), 0.0);
        time_energy += std::norm(c);
    }
    auto a = x;
    fft_inplace(a, false);
    double freq_energy = 0.0;
    for (const auto& c : a) freq_energy += std::norm(c);
    freq_energy /= static_cast<double>(x.size());
    CHECK(freq_energy == doctest::Approx(time_energy).epsilon(1e-12));
}

TEST_CASE("real helper zero-pads") {
    std::vector<double> x{1.0, 2.0, 3.0};
    auto a = fft_real(x, 8);
    cd dc(0.0, 0.0);
    for (double v : x) dc += v;
    CHECK(std::abs(a[0] - dc) < 1e-12);

    std::vector<cd> full(8, cd(0.0, 0.0));
    for (size_t i = 0; i < x.size(); ++i) full[i] = x[i];
    auto ref = dft(full);
    for (size_t i = 0; i < 8; ++i) CHECK(std::abs(a[i] - ref[i]) < 1e-12);
}

TEST_CASE("non-power-of-two size is rejected") {
    std::vector<cd> a(12);
    CHECK_THROWS(fft_inplace(a, false));
}

TEST_CASE("next_pow2") {
    CHECK(next_pow2(1) == 1);
    CHECK(next_pow2(2) == 2);
    CHECK(next_pow2(3) == 4);
    CHECK(next_pow2(1000) == 1024);
    CHECK(next_pow2(1024) == 1024);
}
