#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "melcmp/common.hpp"

namespace melcmp {

inline bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Iterative radix-2 FFT plan for a fixed power-of-two size. The
/// bit-reversal permutation and twiddle table are built once and reused
/// across frames.
class Fft {
public:
    explicit Fft(std::size_t n) : n_(n) {
        if (!is_pow2(n)) throw DomainError("Fft: size must be a power of two");
        bitrev_.resize(n);
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            bitrev_[i] = j;
            std::size_t bit = n >> 1;
            while (bit != 0 && (j & bit) != 0) {
                j ^= bit;
                bit >>= 1;
            }
            j |= bit;
        }
        tw_.resize(n / 2);
        for (std::size_t k = 0; k < n / 2; ++k) {
            double ang = -2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(n);
            tw_[k] = {std::cos(ang), std::sin(ang)};
        }
    }

    std::size_t size() const { return n_; }

    /// In-place forward transform of n complex samples.
    void forward(std::complex<double>* a) const {
        for (std::size_t i = 0; i < n_; ++i)
            if (i < bitrev_[i]) std::swap(a[i], a[bitrev_[i]]);
        for (std::size_t len = 2; len <= n_; len <<= 1) {
            const std::size_t stride = n_ / len;
            for (std::size_t base = 0; base < n_; base += len) {
                for (std::size_t k = 0; k < len / 2; ++k) {
                    std::complex<double> u = a[base + k];
                    std::complex<double> v = a[base + k + len / 2] * tw_[k * stride];
                    a[base + k] = u + v;
                    a[base + k + len / 2] = u - v;
                }
            }
        }
    }

    [[nodiscard]] std::vector<std::complex<double>>
    forward(std::vector<std::complex<double>> a) const {
        if (a.size() != n_) throw DomainError("Fft::forward: length mismatch");
        forward(a.data());
        return a;
    }

private:
    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<std::complex<double>> tw_;
};

}  // namespace melcmp
