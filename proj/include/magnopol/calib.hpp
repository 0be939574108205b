#pragma once

// Calibration helpers: one-port reflection dip fitting and the linear Kittel
// law mapping applied field to magnon frequency.
//
// |S11|^2 = (d^2 + (w - wm)^2) / (h^2 + (w - wm)^2) with h = kappa_load/2 and
// d = h - kappa_a = (gamma - kappa_a)/2. The magnitude only sees d^2, so the
// under/over-coupled assignment of (kappa_a, gamma) has to be supplied.

#include "magnopol/errors.hpp"
#include "magnopol/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

namespace magnopol {

struct ReflectionFit {
    double omega_m = 0.0;  // rad/us
    double kappa_a = 0.0;  // rad/us
    double gamma = 0.0;    // rad/us
    double goodness = 0.0; // rms misfit of |S11| after baseline normalization
    double baseline = 1.0; // factor dividing the raw data so the off-resonance level is 1
    int iterations = 0;

    [[nodiscard]] double kappa_load() const { return kappa_a + gamma; }
};

enum class Coupling { under, over };

[[nodiscard]] inline std::complex<double> s11_model(double omega, const ReflectionFit& f) {
    return 1.0 - f.kappa_a / (I * (omega - f.omega_m) + 0.5 * f.kappa_load());
}

struct SpectrumPoint {
    double omega;      // rad/us
    double magnitude;  // |S11|
};

namespace detail {

// Solves the 4x4 system A x = b in place by Gaussian elimination with partial pivoting.
inline bool solve4(std::array<std::array<double, 4>, 4> A, std::array<double, 4>& b) {
    for (int c = 0; c < 4; ++c) {
        int piv = c;
        for (int r = c + 1; r < 4; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (A[piv][c] == 0.0) return false;
        std::swap(A[c], A[piv]);
        std::swap(b[c], b[piv]);
        for (int r = c + 1; r < 4; ++r) {
            const double f = A[r][c] / A[c][c];
            for (int k = c; k < 4; ++k) A[r][k] -= f * A[c][k];
            b[r] -= f * b[c];
        }
    }
    for (int c = 3; c >= 0; --c) {
        for (int k = c + 1; k < 4; ++k) b[c] -= A[c][k] * b[k];
        b[c] /= A[c][c];
    }
    return true;
}

// |S11| in normalized frequency units; x = (nu_m, ln h, d, c).
inline double s11_mag_scaled(double nu, const std::array<double, 4>& x) {
    const double h = std::exp(x[1]);
    const double dn = nu - x[0];
    return x[3] * std::sqrt((x[2] * x[2] + dn * dn) / (h * h + dn * dn));
}

} // namespace detail

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of |S11| samples.
[[nodiscard]] inline ReflectionFit fit_s11(std::span<const SpectrumPoint> data,
                                           Coupling coupling = Coupling::under) {
    if (data.size() < 8) throw domain_error("S11 fit needs at least 8 points");
    std::vector<SpectrumPoint> pts(data.begin(), data.end());
    for (const auto& p : pts)
        if (!std::isfinite(p.omega) || !std::isfinite(p.magnitude) || p.magnitude < 0.0)
            throw domain_error("S11 samples must be finite with |S11| >= 0");
    std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) { return l.omega < r.omega; });
    const double w_lo = pts.front().omega, w_hi = pts.back().omega;
    if (!(w_hi > w_lo)) throw domain_error("S11 samples must span a frequency range");

    // normalized axis nu = (w - center) / span keeps the problem O(1)
    const double center = 0.5 * (w_lo + w_hi);
    const double span = w_hi - w_lo;
    const std::size_t n = pts.size();
    std::vector<double> nu(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        nu[i] = (pts[i].omega - center) / span;
        y[i] = pts[i].magnitude;
    }

    const auto imin = static_cast<std::size_t>(std::min_element(y.begin(), y.end()) - y.begin());
    const double base0 = std::max(y.front(), y.back());
    if (imin == 0 || imin == n - 1 || !(y[imin] < (1.0 - 1e-3) * base0))
        throw fit_error("no reflection dip found in S11 data");

    // half depth of |S|^2 sits at detuning h
    const double q = y[imin] / base0;
    const double level = base0 * std::sqrt(0.5 * (1.0 + q * q));
    std::size_t l = imin, r = imin;
    while (l > 0 && y[l] < level) --l;
    while (r < n - 1 && y[r] < level) ++r;
    double h0 = 0.5 * (nu[r] - nu[l]);
    if (!(h0 > 0.0)) h0 = 0.05;
    std::array<double, 4> x{nu[imin], std::log(h0), q * h0, base0};

    auto residuals = [&](const std::array<double, 4>& p, std::vector<double>& res) {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            res[i] = detail::s11_mag_scaled(nu[i], p) - y[i];
            cost += res[i] * res[i];
        }
        return cost;
    };

    std::vector<double> res(n), trial_res(n);
    std::vector<std::array<double, 4>> jac(n);
    double cost = residuals(x, res);
    double lambda = 1e-3;
    int it = 0;
    for (; it < 500; ++it) {
        for (int k = 0; k < 4; ++k) {
            const double step = 1e-7 * std::max(1.0, std::abs(x[k]));
            auto xp = x, xm = x;
            xp[k] += step;
            xm[k] -= step;
            for (std::size_t i = 0; i < n; ++i)
                jac[i][k] = (detail::s11_mag_scaled(nu[i], xp) - detail::s11_mag_scaled(nu[i], xm)) / (2.0 * step);
        }
        std::array<std::array<double, 4>, 4> JtJ{};
        std::array<double, 4> Jtr{};
        for (std::size_t i = 0; i < n; ++i)
            for (int a = 0; a < 4; ++a) {
                Jtr[a] += jac[i][a] * res[i];
                for (int b = 0; b < 4; ++b) JtJ[a][b] += jac[i][a] * jac[i][b];
            }
        bool improved = false;
        double rel_change = 0.0;
        while (lambda < 1e12) {
            auto A = JtJ;
            for (int a = 0; a < 4; ++a) A[a][a] += lambda * std::max(JtJ[a][a], 1e-12);
            std::array<double, 4> delta{-Jtr[0], -Jtr[1], -Jtr[2], -Jtr[3]};
            if (!detail::solve4(A, delta)) {
                lambda *= 10.0;
                continue;
            }
            auto xt = x;
            for (int a = 0; a < 4; ++a) xt[a] += delta[a];
            const double ct = residuals(xt, trial_res);
            if (std::isfinite(ct) && ct < cost) {
                rel_change = (cost - ct) / std::max(cost, 1e-300);
                x = xt;
                res.swap(trial_res);
                cost = ct;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                break;
            }
            lambda *= 4.0;
        }
        if (!improved || rel_change < 1e-14) break;
    }

    const double h = std::exp(x[1]) * span;
    const double d = std::abs(x[2]) * span;
    if (!(d <= h)) throw fit_error("S11 fit converged to a peak rather than a dip");
    ReflectionFit f;
    f.omega_m = center + x[0] * span;
    f.kappa_a = coupling == Coupling::under ? h - d : h + d;
    f.gamma = 2.0 * h - f.kappa_a;
    f.baseline = x[3];
    f.goodness = std::sqrt(cost / static_cast<double>(n)) / x[3];
    f.iterations = it;
    if (!std::isfinite(f.omega_m) || f.omega_m < w_lo || f.omega_m > w_hi)
        throw fit_error("S11 fit resonance left the sampled band");
    return f;
}

struct KittelFit {
    double slope = 0.0;      // gamma_e mu0, rad/us per tesla
    double intercept = 0.0;  // rad/us
    double rms = 0.0;        // rad/us

    /// gamma_e / 2pi in Hz per tesla.
    [[nodiscard]] double gyromagnetic_hz_per_tesla() const {
        return units::hz_from_rate(slope);
    }
    /// mu0 H_A in tesla.
    [[nodiscard]] double anisotropy_tesla() const { return intercept / slope; }
    [[nodiscard]] double omega_m(double field_tesla) const { return slope * field_tesla + intercept; }
};

struct FieldPoint {
    double field;  // mu0 H0, tesla
    double omega;  // rad/us
};

/// Ordinary least squares omega_m = slope * B + intercept.
[[nodiscard]] inline KittelFit fit_kittel(std::span<const FieldPoint> pts) {
    if (pts.size() < 2) throw domain_error("Kittel fit needs at least 2 points");
    double bx = 0.0, by = 0.0;
    for (const auto& p : pts) {
        if (!std::isfinite(p.field) || !std::isfinite(p.omega)) throw domain_error("Kittel samples must be finite");
        bx += p.field;
        by += p.omega;
    }
    const double nn = static_cast<double>(pts.size());
    bx /= nn;
    by /= nn;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& p : pts) {
        sxx += (p.field - bx) * (p.field - bx);
        sxy += (p.field - bx) * (p.omega - by);
    }
    double bmax = 0.0;
    for (const auto& p : pts) bmax = std::max(bmax, std::abs(p.field));
    if (!(sxx > nn * 1e-24 * bmax * bmax)) throw domain_error("Kittel fit is rank deficient: all fields identical");
    KittelFit f;
    f.slope = sxy / sxx;
    f.intercept = by - f.slope * bx;
    double ss = 0.0;
    for (const auto& p : pts) {
        const double e = p.omega - f.omega_m(p.field);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / nn);
    return f;
}

/// Nominal magnon detuning at applied field B: gamma_e mu0 (H0 + H_A) - omega_ref.
[[nodiscard]] inline double detuning_from_field(double field_tesla, const KittelFit& k, double omega_ref) {
    return k.omega_m(field_tesla) - omega_ref;
}

} // namespace magnopol
