#include "wtdiag/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace wtdiag::spectral {

namespace {

// The FFTW planner is not re-entrant; execution on a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct Plan {
    std::size_t n = 0;
    fftw_complex* buf = nullptr;
    fftw_plan plan = nullptr;

    Plan(std::size_t size, int sign) : n(size) {
        std::lock_guard lock(planner_mutex());
        buf = fftw_alloc_complex(n);
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
    }
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
        fftw_free(buf);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
};

Plan& plan_for(std::size_t n, int sign) {
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
    auto& slot = cache[{n, sign}];
    if (!slot) slot = std::make_unique<Plan>(n, sign);
    return *slot;
}

std::vector<Complex> transform(std::span<const Complex> x, int sign) {
    const std::size_t n = x.size();
    if (n == 0) return {};
    Plan& p = plan_for(n, sign);
    auto* data = reinterpret_cast<Complex*>(p.buf);
    std::copy(x.begin(), x.end(), data);
    fftw_execute(p.plan);
    return {data, data + n};
}

std::vector<Complex> padded(std::span<const double> x, std::size_t n) {
    std::vector<Complex> out(n);
    std::copy(x.begin(), x.end(), out.begin());
    return out;
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<Complex> fft(std::span<const Complex> x) { return transform(x, FFTW_FORWARD); }

std::vector<Complex> ifft(std::span<const Complex> x) {
    auto out = transform(x, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= scale;
    return out;
}

std::vector<double> convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t len = a.size() + b.size() - 1;
    const std::size_t n = next_pow2(len);
    auto fa = fft(padded(a, n));
    const auto fb = fft(padded(b, n));
    for (std::size_t k = 0; k < n; ++k) fa[k] *= fb[k];
    const auto y = ifft(fa);
    std::vector<double> out(len);
    for (std::size_t i = 0; i < len; ++i) out[i] = y[i].real();
    return out;
}

std::vector<double> correlate(std::span<const double> ref, std::span<const double> sig) {
    if (ref.empty() || sig.empty()) return std::vector<double>(sig.size(), 0.0);
    // Zero padding to ref+sig keeps the circular wrap of negative lags out of [0, sig.size()).
    const std::size_t n = next_pow2(ref.size() + sig.size());
    const auto fr = fft(padded(ref, n));
    auto fs = fft(padded(sig, n));
    for (std::size_t k = 0; k < n; ++k) fs[k] *= std::conj(fr[k]);
    const auto y = ifft(fs);
    std::vector<double> out(sig.size());
    for (std::size_t i = 0; i < sig.size(); ++i) out[i] = y[i].real();
    return out;
}

}  // namespace wtdiag::spectral
