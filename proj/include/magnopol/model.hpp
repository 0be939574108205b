#pragma once

// Semiclassical coupled-mode model of a cavity photon mode `a` and a Kittel
// magnon mode `m`, in two flavours:
//
//   passive:  a' = -(kappa/2 + i dc) a - i g m + eta
//   active:   a' = G_eff a - Gamma |a|^2 a - i g m          (van der Pol photon)
//   both:     m' = -(gamma/2 + i dm) m - i g a - i K |m|^2 m
//
// All rates are rad/us (see units.hpp).

#include "magnopol/errors.hpp"
#include "magnopol/units.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>

namespace magnopol {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

enum class SystemKind { passive, active };

inline const char* to_string(SystemKind kind) {
    return kind == SystemKind::passive ? "passive" : "active";
}

struct SystemParams {
    SystemKind kind = SystemKind::passive;
    double kappa = 0.0;      // photon damping
    double kappa_ext = 0.0;  // external coupling
    double gamma = 0.0;      // magnon damping
    double g = 0.0;          // spin-photon coupling
    double kerr = 0.0;       // K, per quantum
    double gain = 0.0;       // G, raw or effective depending on gain_absorbed
    bool gain_absorbed = true;
    double gamma_sat = 0.0;  // Gamma, per photon
    double omega_d = 0.0;    // drive / reference frequency
    double delta_c = 0.0;    // cavity-drive detuning, passive only
    double delta_m = 0.0;    // magnon-drive detuning

    /// Gain with the cavity loss already subtracted (G - kappa/2).
    [[nodiscard]] double effective_gain() const {
        return gain_absorbed ? gain : gain - 0.5 * kappa;
    }

    /// Largest linear rate in the problem; used to nondimensionalize.
    [[nodiscard]] double rate_scale() const {
        double s = std::max({0.5 * kappa, 0.5 * gamma, std::abs(g), std::abs(delta_c),
                             std::abs(delta_m)});
        if (kind == SystemKind::active) s = std::max(s, std::abs(effective_gain()));
        return s > 0.0 ? s : 1.0;
    }

    void validate() const {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!(finite(kappa) && finite(kappa_ext) && finite(gamma) && finite(g) && finite(kerr) &&
              finite(gain) && finite(gamma_sat) && finite(omega_d) && finite(delta_c) &&
              finite(delta_m)))
            throw domain_error("system parameters must be finite");
        if (kappa < 0 || kappa_ext < 0 || gamma < 0 || gamma_sat < 0 || omega_d < 0)
            throw domain_error("damping rates, gain saturation and drive frequency must be >= 0");
        if (kappa_ext > kappa) throw domain_error("kappa_ext must not exceed kappa");
        if (kind == SystemKind::active && delta_c != 0.0)
            throw domain_error("active configuration requires delta_c == 0");
    }
};

struct ModeState {
    cplx a{};
    cplx m{};
    double t = 0.0;  // us

    [[nodiscard]] double n_a() const { return std::norm(a); }
    [[nodiscard]] double n_m() const { return std::norm(m); }
    [[nodiscard]] bool finite() const {
        return std::isfinite(a.real()) && std::isfinite(a.imag()) && std::isfinite(m.real()) &&
               std::isfinite(m.imag());
    }
};

/// Time derivative of a ModeState.
struct ModeRate {
    cplx da{};
    cplx dm{};
};

struct DriveSpec {
    std::optional<double> power_in;  // W
    double s_in = 0.0;               // incident flux, (quanta/s)^(1/2)
    double eta = 0.0;                // drive amplitude, quanta^(1/2) / us
};

namespace detail {

inline void require_finite(const ModeState& s) {
    if (!s.finite()) throw numeric_error("numeric overflow: non-finite mode amplitude");
}

inline cplx magnon_rate(const ModeState& s, const SystemParams& p) {
    return -(0.5 * p.gamma + I * p.delta_m) * s.m - I * p.g * s.a - I * p.kerr * s.n_m() * s.m;
}

} // namespace detail

[[nodiscard]] inline ModeRate rhs_passive(const ModeState& s, const SystemParams& p,
                                          const DriveSpec& drive) {
    detail::require_finite(s);
    ModeRate r;
    r.da = -(0.5 * p.kappa + I * p.delta_c) * s.a - I * p.g * s.m + drive.eta;
    r.dm = detail::magnon_rate(s, p);
    return r;
}

[[nodiscard]] inline ModeRate rhs_active(const ModeState& s, const SystemParams& p) {
    detail::require_finite(s);
    ModeRate r;
    r.da = p.effective_gain() * s.a - p.gamma_sat * s.n_a() * s.a - I * p.g * s.m;
    r.dm = detail::magnon_rate(s, p);
    return r;
}

[[nodiscard]] inline ModeRate rhs(const ModeState& s, const SystemParams& p, const DriveSpec& drive) {
    return p.kind == SystemKind::passive ? rhs_passive(s, p, drive) : rhs_active(s, p);
}

/// Input-output drive mapping: s_in = sqrt(P / (hbar omega_d)), eta = sqrt(kappa_ext) s_in.
[[nodiscard]] inline DriveSpec eta_from_power(double power_w, const SystemParams& p) {
    if (!(power_w >= 0.0)) throw domain_error("input power must be >= 0");
    DriveSpec d;
    d.power_in = power_w;
    if (power_w == 0.0) return d;
    const double omega_d_si = units::rad_per_s_from_rate(p.omega_d);
    if (omega_d_si <= 0.0) throw domain_error("drive frequency must be > 0 to convert power");
    d.s_in = std::sqrt(power_w / (units::hbar * omega_d_si));
    const double kappa_ext_si = units::rad_per_s_from_rate(p.kappa_ext);
    d.eta = std::sqrt(kappa_ext_si) * d.s_in / units::us_per_s;
    return d;
}

/// Drive given directly as an amplitude (internal units).
[[nodiscard]] inline DriveSpec drive_from_eta(double eta) {
    DriveSpec d;
    d.eta = eta;
    return d;
}

/// Occupation that makes scaled amplitudes O(1): G_eff/Gamma for a
/// self-oscillating active system, the empty-cavity photon number for a
/// driven passive one, 1 otherwise.
[[nodiscard]] inline double reference_occupation(const SystemParams& p, const DriveSpec& drive) {
    if (p.kind == SystemKind::active) {
        const double g_eff = p.effective_gain();
        if (g_eff > 0.0 && p.gamma_sat > 0.0) return g_eff / p.gamma_sat;
        return 1.0;
    }
    const double denom = 0.25 * p.kappa * p.kappa + p.delta_c * p.delta_c;
    if (drive.eta != 0.0 && denom > 0.0) return drive.eta * drive.eta / denom;
    return 1.0;
}

struct Rescaled {
    ModeState state;
    SystemParams params;
    DriveSpec drive;
};

/// Amplitude rescaling a -> a/s. Nonlinear coefficients pick up s^2 and the
/// drive 1/s so that the scaled system has identical dynamics.
[[nodiscard]] inline Rescaled rescale(const ModeState& state, const SystemParams& params,
                                      const DriveSpec& drive, double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw domain_error("rescale factor must be > 0");
    Rescaled out{state, params, drive};
    out.state.a /= s;
    out.state.m /= s;
    out.params.kerr *= s * s;
    out.params.gamma_sat *= s * s;
    out.drive.eta /= s;
    out.drive.s_in /= s;
    out.drive.power_in.reset();
    return out;
}

[[nodiscard]] inline Rescaled rescale(const ModeState& state, const SystemParams& params, double s) {
    return rescale(state, params, DriveSpec{}, s);
}

} // namespace magnopol
