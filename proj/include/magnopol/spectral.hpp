#pragma once

// Oscillator frequency estimation from complex traces.
//
//  * phase slope: unwrap arg a(t) over the trailing part of the post-transient
//    window and fit phi = -W t + phi0 by |a|^2-weighted least squares.
//  * Hann-windowed FFT: two-sided magnitude spectrum, frequency axis oriented
//    so that a trace exp(-i W t) peaks at +W/2pi (positive = blue shift).

#include "magnopol/errors.hpp"
#include "magnopol/trajectory.hpp"
#include "magnopol/units.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

namespace magnopol {

/// Weighted mean-square phase residual (rad^2) that maps to confidence 0.5.
/// Fits above it are flagged low-confidence.
inline constexpr double phase_residual_reference = 1e-2;

struct PhaseSlopeFit {
    double omega = 0.0;               // rad/us
    double confidence = 0.0;          // 1 / (1 + normalized residual)
    double normalized_residual = 0.0; // weighted mean-square residual / reference
    bool low_confidence = false;
};

/// Unwrapped phase of a complex series.
[[nodiscard]] inline std::vector<double> unwrap_phase(std::span<const std::complex<double>> x) {
    std::vector<double> phi(x.size());
    if (x.empty()) return phi;
    constexpr double two_pi = 2.0 * std::numbers::pi;
    phi[0] = std::arg(x[0]);
    double offset = 0.0;
    double prev = phi[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double raw = std::arg(x[i]);
        double d = raw - prev;
        if (d > std::numbers::pi) offset -= two_pi;
        else if (d < -std::numbers::pi) offset += two_pi;
        prev = raw;
        phi[i] = raw + offset;
    }
    return phi;
}

/// Phase-slope estimate on samples [first, end) of `a` with spacing dt.
[[nodiscard]] inline PhaseSlopeFit phase_slope(std::span<const std::complex<double>> a, double dt) {
    if (a.size() < 2) throw domain_error("phase slope needs at least 2 samples");
    const std::vector<double> phi = unwrap_phase(a);
    double sw = 0.0, st = 0.0, sp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = std::norm(a[i]);
        sw += w;
        st += w * static_cast<double>(i);
        sp += w * phi[i];
    }
    if (!(sw > 0.0)) throw domain_error("phase undefined: trace is identically zero");
    const double tbar = st / sw;
    const double pbar = sp / sw;
    double stt = 0.0, stp = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double w = std::norm(a[i]);
        const double ti = static_cast<double>(i) - tbar;
        stt += w * ti * ti;
        stp += w * ti * (phi[i] - pbar);
    }
    if (!(stt > 0.0)) throw domain_error("phase undefined: weight concentrated on one sample");
    const double slope = stp / stt;  // rad per sample
    double rss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = phi[i] - pbar - slope * (static_cast<double>(i) - tbar);
        rss += std::norm(a[i]) * e * e;
    }
    PhaseSlopeFit fit;
    fit.omega = -slope / dt;
    fit.normalized_residual = rss / sw / phase_residual_reference;
    fit.confidence = 1.0 / (1.0 + fit.normalized_residual);
    fit.low_confidence = fit.normalized_residual > 1.0;
    return fit;
}

/// Phase-slope estimate on the trailing `fit_fraction` of the trace after `t_drop`.
[[nodiscard]] inline PhaseSlopeFit phase_slope_offset(const TrajectorySegment& seg, double t_drop,
                                                      double fit_fraction) {
    if (!(fit_fraction > 0.0 && fit_fraction <= 1.0))
        throw domain_error("fit_fraction must lie in (0, 1]");
    const std::size_t first = seg.first_index_after(t_drop);
    const std::size_t post = seg.size() > first ? seg.size() - first : 0;
    if (post < 16) throw domain_error("phase slope needs at least 16 post-transient samples");
    const auto skip = static_cast<std::size_t>(std::floor((1.0 - fit_fraction) * static_cast<double>(post)));
    const std::size_t start = first + std::min(skip, post - 2);
    return phase_slope(std::span(seg.a_samples).subspan(start), seg.dt);
}

namespace detail {
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Symmetric Hann window w_n = 0.5 (1 - cos(2 pi n / (N - 1))).
[[nodiscard]] inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1)));
    return w;
}

/// X_k = sum_n w_n x_n exp(+2 pi i k n / N), natural order k = 0..N-1 (not normalized).
[[nodiscard]] inline std::vector<std::complex<double>> windowed_dft(std::span<const std::complex<double>> x) {
    const std::size_t n = x.size();
    std::vector<std::complex<double>> out(n);
    if (n == 0) return out;
    const std::vector<double> w = hann_window(n);
    auto* in = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    auto* res = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!in || !res) {
        fftw_free(in);
        fftw_free(res);
        throw numeric_error("fftw allocation failed");
    }
    fftw_plan plan;
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), in, res, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < n; ++i) {
        in[i][0] = w[i] * x[i].real();
        in[i][1] = w[i] * x[i].imag();
    }
    fftw_execute(plan);
    for (std::size_t i = 0; i < n; ++i) out[i] = {res[i][0], res[i][1]};
    {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(res);
    return out;
}

struct Spectrum {
    std::vector<double> freqs_hz;   // ascending, centered on the rotating frame
    std::vector<double> magnitude;  // normalized to unit maximum
    double peak_raw = 0.0;          // maximum |X_k| before normalization

    [[nodiscard]] std::size_t peak_index() const {
        return static_cast<std::size_t>(std::max_element(magnitude.begin(), magnitude.end()) - magnitude.begin());
    }
    [[nodiscard]] double bin_width_hz() const {
        return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0;
    }
};

/// Normalized two-sided Hann spectrum of samples with spacing dt (us).
[[nodiscard]] inline Spectrum hann_spectrum(std::span<const std::complex<double>> x, double dt) {
    if (x.size() < 2) throw domain_error("spectrum needs at least 2 samples");
    const std::vector<std::complex<double>> X = windowed_dft(x);
    const std::size_t n = X.size();
    const auto half = static_cast<long>(n / 2);
    Spectrum s;
    s.freqs_hz.resize(n);
    s.magnitude.resize(n);
    const double df_hz = units::us_per_s / (static_cast<double>(n) * dt);
    for (std::size_t j = 0; j < n; ++j) {
        const long k = static_cast<long>(j) - half;
        const std::size_t src = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
        s.freqs_hz[j] = static_cast<double>(k) * df_hz;
        s.magnitude[j] = std::abs(X[src]);
    }
    s.peak_raw = *std::max_element(s.magnitude.begin(), s.magnitude.end());
    if (s.peak_raw > 0.0)
        for (double& v : s.magnitude) v /= s.peak_raw;
    return s;
}

[[nodiscard]] inline Spectrum hann_fft(const TrajectorySegment& seg, double t_drop) {
    const std::size_t first = seg.first_index_after(t_drop);
    if (seg.size() < first + 2) throw domain_error("spectrum needs at least 2 post-transient samples");
    return hann_spectrum(std::span(seg.a_samples).subspan(first), seg.dt);
}

/// Scales a non-negative series to unit maximum (all-zero input is returned unchanged).
inline void normalize_to_unit_max(std::vector<double>& v) {
    if (v.empty()) return;
    const double mx = *std::max_element(v.begin(), v.end());
    if (mx > 0.0)
        for (double& x : v) x /= mx;
}

struct FrequencyWindow {
    double f_min_hz = -std::numeric_limits<double>::infinity();
    double f_max_hz = std::numeric_limits<double>::infinity();
};

/// S(f, detuning): one normalized Hann spectrum per column.
struct Spectrogram {
    std::vector<double> freqs_hz;
    std::vector<double> detunings;   // nominal detuning per column, rad/us
    std::vector<double> magnitudes;  // row-major, rows = freqs, cols = detunings

    [[nodiscard]] std::size_t rows() const { return freqs_hz.size(); }
    [[nodiscard]] std::size_t cols() const { return detunings.size(); }
    [[nodiscard]] double at(std::size_t f, std::size_t k) const { return magnitudes[f * cols() + k]; }

    [[nodiscard]] std::vector<double> column(std::size_t k) const {
        std::vector<double> c(rows());
        for (std::size_t f = 0; f < rows(); ++f) c[f] = at(f, k);
        return c;
    }

    /// log10 S with a floor, for rendering.
    [[nodiscard]] std::vector<double> log10_view(double floor = 1e-6) const {
        std::vector<double> out(magnitudes.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log10(std::max(magnitudes[i], floor));
        return out;
    }
};

[[nodiscard]] inline Spectrogram build_spectrogram(std::span<const TrajectorySegment> segments,
                                                   std::span<const double> detunings, double t_drop,
                                                   FrequencyWindow window = {}) {
    if (segments.size() != detunings.size())
        throw domain_error("spectrogram shape: one detuning per segment required");
    Spectrogram sg;
    if (segments.empty()) return sg;
    const double dt = segments.front().dt;
    const std::size_t post = segments.front().size() - segments.front().first_index_after(t_drop);
    for (const auto& s : segments)
        if (s.dt != dt || s.size() - s.first_index_after(t_drop) != post)
            throw domain_error("spectrogram shape: segments differ in dt or post-transient length");

    std::vector<Spectrum> spectra;
    spectra.reserve(segments.size());
    for (const auto& s : segments) spectra.push_back(hann_fft(s, t_drop));

    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < spectra.front().freqs_hz.size(); ++j) {
        const double f = spectra.front().freqs_hz[j];
        if (f >= window.f_min_hz && f <= window.f_max_hz) keep.push_back(j);
    }
    sg.detunings.assign(detunings.begin(), detunings.end());
    sg.freqs_hz.reserve(keep.size());
    for (std::size_t j : keep) sg.freqs_hz.push_back(spectra.front().freqs_hz[j]);
    sg.magnitudes.assign(keep.size() * segments.size(), 0.0);
    for (std::size_t k = 0; k < spectra.size(); ++k)
        for (std::size_t r = 0; r < keep.size(); ++r) sg.magnitudes[r * segments.size() + k] = spectra[k].magnitude[keep[r]];
    return sg;
}

} // namespace magnopol
