#pragma once

// Thin FFT layer (FFTW3) plus the transform-based linear convolution and
// correlation used by the reflectometry chain.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wtdiag::spectral {

using Complex = std::complex<double>;

std::size_t next_pow2(std::size_t n);

/// Forward DFT, X[k] = sum_n x[n] e^{-j 2 pi k n / N}.
std::vector<Complex> fft(std::span<const Complex> x);

/// Inverse DFT including the 1/N factor.
std::vector<Complex> ifft(std::span<const Complex> x);

/// Full linear convolution, length a.size() + b.size() - 1.
std::vector<double> convolve(std::span<const double> a, std::span<const double> b);

/// u[t] = sum_tau ref[tau] * sig[t + tau] for t = 0 .. sig.size()-1.
std::vector<double> correlate(std::span<const double> ref, std::span<const double> sig);

}  // namespace wtdiag::spectral
