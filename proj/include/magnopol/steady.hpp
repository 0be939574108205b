#pragma once

// Steady states of the coupled-mode equations.
//
// Passive: taking the modulus of the stationary photon/magnon relations gives a
// real cubic in the magnon occupation n_m,
//
//     |(kappa/2 + i dc)(gamma/2 + i(dm + K n_m)) + g^2|^2 n_m = g^2 |eta|^2 .
//
// Active: with a(t) = a0 exp(-i W t), m(t) = m0 exp(-i W t) and the auxiliary
// A = G_eff - Gamma |a0|^2 the stationary equations reduce to
//
//     (i)   A^2 + W^2 = 2 g^2 A / gamma
//     (ii)  n_m = 2 A (G_eff - A) / (Gamma gamma)
//     (iii) W (2A - gamma) / (2A) = dm + K n_m
//
// Eliminating W with (iii) and multiplying (i) by (2A - gamma)^2 gives
//
//     (A^2 - 2 g^2 A / gamma)(2A - gamma)^2 + 4 A^2 (dm + K n_m(A))^2 = 0,
//
// a sextic with a common factor A; the remaining quintic is solved here.

#include "magnopol/errors.hpp"
#include "magnopol/model.hpp"
#include "magnopol/polynomial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <vector>

namespace magnopol {

enum class Branch {
    coupled,    // ordinary solution of the coupled equations
    decoupled,  // bare van der Pol oscillation with m0 = 0 (active, g = 0)
    quiescent,  // a0 = m0 = 0 below the self-oscillation threshold (active, G_eff <= 0)
};

inline const char* to_string(Branch b) {
    switch (b) {
    case Branch::coupled: return "coupled";
    case Branch::decoupled: return "decoupled";
    case Branch::quiescent: return "quiescent";
    }
    return "?";
}

struct FixedPoint {
    SystemKind kind = SystemKind::passive;
    cplx a0{};
    cplx m0{};
    double omega_off = 0.0;  // rad/us, 0 for passive
    double aux_A = 0.0;      // rad/us, active only
    double residual = 0.0;
    Branch branch = Branch::coupled;

    [[nodiscard]] double n_a() const { return std::norm(a0); }
    [[nodiscard]] double n_m() const { return std::norm(m0); }
};

/// Residual tolerance applied to every returned solution (nondimensional).
inline constexpr double steady_residual_tol = 1e-8;

/// Max-norm of the stationary equations at `fp`, with rates divided by the
/// system rate scale and amplitudes by the reference occupation.
[[nodiscard]] inline double residual(const FixedPoint& fp, const SystemParams& p,
                                     const DriveSpec& drive = {}) {
    const double rho = p.rate_scale();
    const double n_ref = reference_occupation(p, drive);
    const double norm = rho * std::sqrt(n_ref);
    cplx r1, r2;
    if (fp.kind == SystemKind::passive) {
        r1 = -(0.5 * p.kappa + I * p.delta_c) * fp.a0 - I * p.g * fp.m0 + drive.eta;
        r2 = -(0.5 * p.gamma + I * p.delta_m) * fp.m0 - I * p.g * fp.a0 -
             I * p.kerr * fp.n_m() * fp.m0;
    } else {
        r1 = (p.effective_gain() - p.gamma_sat * fp.n_a() + I * fp.omega_off) * fp.a0 - I * p.g * fp.m0;
        r2 = (0.5 * p.gamma + I * (p.delta_m - fp.omega_off) + I * p.kerr * fp.n_m()) * fp.m0 +
             I * p.g * fp.a0;
    }
    return std::max(std::abs(r1), std::abs(r2)) / norm;
}

/// Whether a solution enters the stable/unstable tallies of a phase map.
/// Active maps count coupled solutions; the bare oscillator only when g == 0.
[[nodiscard]] inline bool counts_toward_phase(const FixedPoint& fp, const SystemParams& p) {
    if (fp.kind == SystemKind::passive) return true;
    switch (fp.branch) {
    case Branch::coupled: return true;
    case Branch::decoupled: return p.g == 0.0;
    case Branch::quiescent: return false;
    }
    return false;
}

namespace detail {

inline void check_residual(FixedPoint& fp, const SystemParams& p, const DriveSpec& drive) {
    fp.residual = residual(fp, p, drive);
    if (!(fp.residual < steady_residual_tol)) {
        std::ostringstream os;
        os.precision(17);
        os << "steady state failed residual check (" << fp.residual << ") for " << to_string(fp.kind)
           << " solution a0=" << fp.a0 << " m0=" << fp.m0 << " omega=" << fp.omega_off;
        throw consistency_error(os.str());
    }
}

} // namespace detail

/// Coefficients (ascending) of the nondimensional passive cubic in
/// x = n_m / n_ref. Exposed for tests.
[[nodiscard]] inline Polynomial passive_cubic(const SystemParams& p, const DriveSpec& drive,
                                              double n_ref) {
    const double rho = p.rate_scale();
    const cplx P = (0.5 * p.kappa + I * p.delta_c) / rho;
    const double gt = p.g / rho;
    const double k = p.kerr * n_ref / rho;
    const double eta2 = drive.eta * drive.eta / (rho * rho * n_ref);
    const cplx c0 = P * (0.5 * p.gamma / rho + I * p.delta_m / rho) + gt * gt;
    const cplx c1 = I * P * k;
    return Polynomial{-gt * gt * eta2, std::norm(c0), 2.0 * (c0 * std::conj(c1)).real(), std::norm(c1)};
}

[[nodiscard]] inline std::vector<FixedPoint> passive_fixed_points(const SystemParams& p,
                                                                  const DriveSpec& drive) {
    p.validate();
    if (p.kind != SystemKind::passive) throw domain_error("passive_fixed_points: active parameters");
    if (!std::isfinite(drive.eta)) throw domain_error("drive amplitude must be finite");

    std::vector<FixedPoint> out;
    if (drive.eta == 0.0) {
        FixedPoint fp;
        fp.kind = SystemKind::passive;
        out.push_back(fp);
        return out;
    }

    const cplx P = 0.5 * p.kappa + I * p.delta_c;
    const double rho = p.rate_scale();
    const double n_ref = drive.eta * drive.eta / (std::norm(P) > 0.0 ? std::norm(P) : rho * rho);

    for (double x : real_roots(passive_cubic(p, drive, n_ref))) {
        if (x < 0.0) continue;
        const double n_m = x * n_ref;
        const cplx Q = 0.5 * p.gamma + I * (p.delta_m + p.kerr * n_m);
        const cplx den = P * Q + p.g * p.g;
        if (std::abs(den) == 0.0) continue;
        FixedPoint fp;
        fp.kind = SystemKind::passive;
        fp.a0 = drive.eta * Q / den;
        fp.m0 = std::abs(Q) > 0.0 ? -I * p.g * fp.a0 / Q : cplx{};
        fp.branch = p.g == 0.0 ? Branch::decoupled : Branch::coupled;
        detail::check_residual(fp, p, drive);
        out.push_back(fp);
    }
    std::sort(out.begin(), out.end(),
              [](const FixedPoint& l, const FixedPoint& r) { return l.n_m() < r.n_m(); });
    return out;
}

/// Quintic in alpha = A / rho (ascending coefficients). Exposed for tests.
[[nodiscard]] inline Polynomial active_quintic(const SystemParams& p) {
    const double rho = p.rate_scale();
    const double G = p.effective_gain() / rho;
    const double gam = p.gamma / rho;
    const double gt = p.g / rho;
    const double dm = p.delta_m / rho;
    // K n_m with n_m measured in units of G_eff / Gamma
    const double k = p.kerr * (p.effective_gain() / p.gamma_sat) / rho;
    const double c = 2.0 * k / (gam * G);
    const Polynomial B{dm, c * G, -c};
    const Polynomial lin{-2.0 * gt * gt / gam, 1.0};
    const Polynomial two_a_minus_gamma{-gam, 2.0};
    return lin * two_a_minus_gamma * two_a_minus_gamma + Polynomial{0.0, 4.0} * B * B;
}

[[nodiscard]] inline std::vector<FixedPoint> active_fixed_points(const SystemParams& p) {
    p.validate();
    if (p.kind != SystemKind::active) throw domain_error("active_fixed_points: passive parameters");
    const double G = p.effective_gain();
    std::vector<FixedPoint> out;
    if (G <= 0.0) {
        FixedPoint fp;
        fp.kind = SystemKind::active;
        fp.aux_A = G;
        fp.branch = Branch::quiescent;
        out.push_back(fp);
        return out;
    }
    if (!(p.gamma_sat > 0.0)) throw domain_error("active steady states require gamma_sat > 0");
    const double n_ref = G / p.gamma_sat;

    if (p.g == 0.0) {
        FixedPoint fp;
        fp.kind = SystemKind::active;
        fp.a0 = std::sqrt(n_ref);
        fp.branch = Branch::decoupled;
        detail::check_residual(fp, p, {});
        out.push_back(fp);
        return out;
    }
    if (!(p.gamma > 0.0)) throw domain_error("active steady states require gamma > 0");

    const double rho = p.rate_scale();
    const double Gt = G / rho;
    const double gam = p.gamma / rho;
    const double gt = p.g / rho;
    const double dm = p.delta_m / rho;
    const double k = p.kerr * n_ref / rho;
    const double a_max = std::min(Gt, 2.0 * gt * gt / gam);

    auto emit = [&](double alpha, double omega_t) {
        const double n_a_scaled = std::max(0.0, (Gt - alpha) / Gt);
        FixedPoint fp;
        fp.kind = SystemKind::active;
        fp.aux_A = alpha * rho;
        fp.omega_off = omega_t * rho;
        fp.a0 = std::sqrt(n_a_scaled * n_ref);
        fp.m0 = (fp.aux_A + I * fp.omega_off) * fp.a0 / (I * p.g);
        fp.branch = Branch::coupled;
        detail::check_residual(fp, p, {});
        out.push_back(fp);
    };

    // stationarity of (A + iW)(gamma/2 + i(dm - W + K n_m)) = g^2, with n_m fixed by energy balance
    auto D = [&](double alpha) { return dm + k * 2.0 * alpha * (Gt - alpha) / (gam * Gt); };
    auto dD = [&](double alpha) { return k * 2.0 * (Gt - 2.0 * alpha) / (gam * Gt); };
    auto F = [&](double alpha, double w) {
        const double d = D(alpha);
        return std::array<double, 2>{0.5 * alpha * gam - w * (d - w) - gt * gt, 0.5 * w * gam + alpha * (d - w)};
    };
    auto polish = [&](double& alpha, double& w) {
        for (int it = 0; it < 8; ++it) {
            const auto f = F(alpha, w);
            const double d = D(alpha), dd = dD(alpha);
            const double j00 = 0.5 * gam - w * dd, j01 = 2.0 * w - d;
            const double j10 = d - w + alpha * dd, j11 = 0.5 * gam - alpha;
            const double det = j00 * j11 - j01 * j10;
            if (!(std::abs(det) > 0.0)) break;
            const double da = (j11 * f[0] - j01 * f[1]) / det, dw = (j00 * f[1] - j10 * f[0]) / det;
            alpha -= da;
            w -= dw;
            if (std::abs(da) + std::abs(dw) < 1e-15 * (1.0 + std::abs(alpha) + std::abs(w))) break;
        }
    };

    std::vector<std::array<double, 2>> cands;
    auto quadratic_candidates = [&](double alpha) {
        // W^2 - D W + alpha gamma/2 - g^2 = 0 from the real part alone
        const double d = D(alpha);
        const double disc = d * d - 4.0 * (0.5 * alpha * gam - gt * gt);
        if (disc < 0.0) return;
        cands.push_back({alpha, 0.5 * (d + std::sqrt(disc))});
        cands.push_back({alpha, 0.5 * (d - std::sqrt(disc))});
    };
    for (double alpha : real_roots(active_quintic(p))) {
        const double denom = 2.0 * alpha - gam;
        if (std::abs(denom) > 1e-6 * gam)
            cands.push_back({alpha, 2.0 * alpha * D(alpha) / denom});
        else
            quadratic_candidates(alpha);
    }
    // alpha = gamma/2 is a double root of the quintic when D vanishes there and may
    // come back from the root finder as a near-real complex pair
    if (std::abs(D(0.5 * gam)) < 1e-6 * (gam + std::abs(dm))) quadratic_candidates(0.5 * gam);

    std::vector<std::array<double, 2>> sols;
    for (auto [alpha, w] : cands) {
        polish(alpha, w);
        const auto f = F(alpha, w);
        if (!(std::max(std::abs(f[0]), std::abs(f[1])) < 1e-10 * (gt * gt + gam * gam))) continue;
        if (!(alpha > 1e-12 * Gt) || alpha > a_max * (1.0 + 1e-10)) continue;
        alpha = std::min(alpha, a_max);
        bool dup = false;
        for (const auto& s2 : sols)
            if (std::abs(s2[0] - alpha) + std::abs(s2[1] - w) < 1e-7 * (Gt + gt)) dup = true;
        if (!dup) sols.push_back({alpha, w});
    }
    for (const auto& [alpha, w] : sols) emit(alpha, w);
    std::sort(out.begin(), out.end(),
              [](const FixedPoint& l, const FixedPoint& r) { return l.aux_A < r.aux_A; });
    return out;
}

[[nodiscard]] inline std::vector<FixedPoint> fixed_points(const SystemParams& p, const DriveSpec& drive) {
    return p.kind == SystemKind::passive ? passive_fixed_points(p, drive) : active_fixed_points(p);
}

} // namespace magnopol
