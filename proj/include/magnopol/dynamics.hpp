#pragma once

// Fixed-step RK4 integration and the hysteretic detuning sweep.
//
// Integration runs on amplitudes divided by sqrt(n_ref) (see model.hpp) so the
// state is O(1) regardless of whether the physical occupation is 1 or 1e14.
// Samples are converted back to physical units on output.

#include "magnopol/errors.hpp"
#include "magnopol/model.hpp"
#include "magnopol/spectral.hpp"
#include "magnopol/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace magnopol {

/// Nondimensional amplitude cap; beyond it a segment is declared divergent.
inline constexpr double divergence_cap = 1e6;

namespace detail {

inline ModeState rk4_step(const ModeState& s, const SystemParams& p, const DriveSpec& d, double h) {
    auto shift = [](const ModeState& x, const ModeRate& k, double f) {
        ModeState y = x;
        y.a += f * k.da;
        y.m += f * k.dm;
        return y;
    };
    const ModeRate k1 = rhs(s, p, d);
    const ModeRate k2 = rhs(shift(s, k1, 0.5 * h), p, d);
    const ModeRate k3 = rhs(shift(s, k2, 0.5 * h), p, d);
    const ModeRate k4 = rhs(shift(s, k3, h), p, d);
    ModeState out = s;
    out.a += (h / 6.0) * (k1.da + 2.0 * k2.da + 2.0 * k3.da + k4.da);
    out.m += (h / 6.0) * (k1.dm + 2.0 * k2.dm + 2.0 * k3.dm + k4.dm);
    out.t += h;
    return out;
}

inline long step_count(double duration, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw domain_error("dt must be > 0");
    if (!(duration > 0.0) || !std::isfinite(duration)) throw domain_error("duration must be > 0");
    const double ratio = duration / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio))
        throw domain_error("duration must be an integer multiple of dt");
    return static_cast<long>(n);
}

} // namespace detail

/// Classical RK4 from `initial` over `duration` (us) with step `dt` (us).
/// Returns n+1 samples including the initial state.
[[nodiscard]] inline TrajectorySegment integrate_segment(const ModeState& initial, const SystemParams& p,
                                                         const DriveSpec& drive, double duration, double dt,
                                                         double cap = divergence_cap) {
    p.validate();
    if (!initial.finite()) throw domain_error("initial state must be finite");
    const long n = detail::step_count(duration, dt);

    double s = std::sqrt(reference_occupation(p, drive));
    s = std::max({s, std::abs(initial.a), std::abs(initial.m)});
    const Rescaled sc = rescale(initial, p, drive, s);

    TrajectorySegment seg;
    seg.dt = dt;
    seg.detuning_used = p.delta_m;
    seg.times.resize(static_cast<std::size_t>(n) + 1);
    seg.a_samples.resize(static_cast<std::size_t>(n) + 1);
    seg.m_samples.resize(static_cast<std::size_t>(n) + 1);

    ModeState x = sc.state;
    x.t = 0.0;
    seg.times[0] = initial.t;
    seg.a_samples[0] = initial.a;
    seg.m_samples[0] = initial.m;
    for (long k = 1; k <= n; ++k) {
        try {
            x = detail::rk4_step(x, sc.params, sc.drive, dt);
        } catch (const numeric_error&) {
            throw divergence_error("amplitude became non-finite at step " + std::to_string(k), k);
        }
        if (!x.finite() || std::abs(x.a) > cap || std::abs(x.m) > cap)
            throw divergence_error("amplitude exceeded cap at step " + std::to_string(k), k);
        const auto i = static_cast<std::size_t>(k);
        seg.times[i] = initial.t + static_cast<double>(k) * dt;
        seg.a_samples[i] = x.a * s;
        seg.m_samples[i] = x.m * s;
    }
    seg.final_state.a = seg.a_samples.back();
    seg.final_state.m = seg.m_samples.back();
    seg.final_state.t = seg.times.back();
    return seg;
}

/// Small real photon kick, a = fraction * sqrt(G_eff / Gamma), m = 0. Passive
/// systems start empty.
[[nodiscard]] inline ModeState default_seed(const SystemParams& p, double fraction = 1e-3) {
    ModeState s;
    if (p.kind == SystemKind::active) s.a = fraction * std::sqrt(reference_occupation(p, {}));
    return s;
}

struct SweepProtocol {
    std::vector<double> detunings;  // nominal magnon detunings, rad/us, in sweep order
    double dt = 1e-3;               // us
    double t_total = 8.0;           // us
    double t_drop = 3.0;            // us
    bool memory_detuning = true;
    bool memory_state = true;
    double fit_fraction = 0.5;
    std::optional<ModeState> initial_state;  // default_seed() when empty
    double omega_initial = 0.0;              // offset assumed before the first step, rad/us

    void validate() const {
        if (detunings.empty()) throw domain_error("detuning list must not be empty");
        for (double d : detunings)
            if (!std::isfinite(d)) throw domain_error("detunings must be finite");
        if (!(dt > 0.0 && dt < t_drop && t_drop < t_total)) throw domain_error("need 0 < dt < t_drop < t_total");
        if (!(fit_fraction > 0.0 && fit_fraction <= 1.0)) throw domain_error("fit_fraction must lie in (0, 1]");
        if (initial_state && !initial_state->finite()) throw domain_error("initial state must be finite");
        if (!std::isfinite(omega_initial)) throw domain_error("omega_initial must be finite");
        (void)detail::step_count(t_total, dt);
    }
};

struct SweepStep {
    std::size_t index = 0;
    double nominal = 0.0;    // rad/us
    double effective = 0.0;  // detuning applied to the equations, rad/us
    double omega = 0.0;      // extracted offset, rad/us
    double confidence = 0.0;
    bool low_confidence = false;
};

struct SweepResult {
    std::vector<TrajectorySegment> segments;
    std::vector<SweepStep> steps;
    ModeState seed;
    std::optional<std::string> error;  // set when the sweep halted early

    [[nodiscard]] bool complete() const { return !error.has_value(); }
    [[nodiscard]] std::vector<double> nominal_detunings() const {
        std::vector<double> v;
        for (const auto& s : steps) v.push_back(s.nominal);
        return v;
    }
};

/// Steps through the detuning list. With memory_detuning the equations at step
/// k see delta_m = nominal_k - W_{k-1}; with memory_state each segment starts
/// from the previous final state.
[[nodiscard]] inline SweepResult run_sweep(const SweepProtocol& protocol, const SystemParams& params,
                                           const DriveSpec& drive = {}) {
    protocol.validate();
    params.validate();
    SweepResult out;
    out.seed = protocol.initial_state.value_or(default_seed(params));
    out.seed.t = 0.0;

    ModeState state = out.seed;
    double omega_prev = protocol.omega_initial;
    for (std::size_t k = 0; k < protocol.detunings.size(); ++k) {
        SweepStep step;
        step.index = k;
        step.nominal = protocol.detunings[k];
        step.effective = protocol.memory_detuning ? step.nominal - omega_prev : step.nominal;
        SystemParams p = params;
        p.delta_m = step.effective;
        try {
            ModeState start = protocol.memory_state ? state : out.seed;
            start.t = 0.0;
            TrajectorySegment seg = integrate_segment(start, p, drive, protocol.t_total, protocol.dt);
            const PhaseSlopeFit fit = phase_slope_offset(seg, protocol.t_drop, protocol.fit_fraction);
            step.omega = fit.omega;
            step.confidence = fit.confidence;
            step.low_confidence = fit.low_confidence;
            state = seg.final_state;
            out.segments.push_back(std::move(seg));
            out.steps.push_back(step);
            omega_prev = step.omega;
        } catch (const divergence_error& e) {
            out.error = "step " + std::to_string(k) + ": " + e.what();
            break;
        } catch (const domain_error& e) {
            out.error = "step " + std::to_string(k) + ": " + e.what();
            break;
        }
    }
    return out;
}

} // namespace magnopol
