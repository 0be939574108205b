#pragma once

// Linear stability of fixed points in the doubled basis (da, da*, dm, dm*).
// Active solutions are linearized in the frame co-rotating at their offset W;
// the free global phase of the self-oscillator then shows up as a zero
// eigenvalue, which is discarded (smallest |lambda|) before classification.

#include "magnopol/linalg.hpp"
#include "magnopol/model.hpp"
#include "magnopol/steady.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace magnopol {

/// |margin| below this fraction of the rate scale is reported as marginal.
inline constexpr double marginal_band = 1e-6;
/// Discarded neutral eigenvalue must be below this fraction of the largest
/// retained |lambda|; otherwise the report is flagged.
inline constexpr double neutral_mode_tol = 1e-3;

struct StabilityReport {
    std::vector<cplx> eigenvalues;  // all four, rad/us
    std::optional<cplx> discarded;  // neutral phase mode (active only)
    double margin = 0.0;            // max Re over retained eigenvalues, rad/us
    bool is_stable = false;         // margin < 0
    bool marginal = false;          // |margin| inside the tolerance band
    bool neutral_mode_suspect = false;
};

namespace detail {

// Rows for (dm, dm*) shared by both systems; `detuning` is the magnon detuning
// in the frame of linearization.
inline void fill_magnon_rows(ComplexMatrix& J, const FixedPoint& fp, const SystemParams& p,
                             double detuning) {
    const double kn = p.kerr * fp.n_m();
    const cplx km2 = p.kerr * fp.m0 * fp.m0;
    J(2, 0) = -I * p.g;
    J(2, 2) = -(0.5 * p.gamma + I * detuning) - 2.0 * I * kn;
    J(2, 3) = -I * km2;
    J(3, 1) = I * p.g;
    J(3, 2) = I * std::conj(km2);
    J(3, 3) = -(0.5 * p.gamma - I * detuning) + 2.0 * I * kn;
}

} // namespace detail

[[nodiscard]] inline ComplexMatrix jacobian_passive(const FixedPoint& fp, const SystemParams& p) {
    if (fp.kind != SystemKind::passive) throw domain_error("jacobian_passive: active fixed point");
    ComplexMatrix J(4);
    const cplx P = 0.5 * p.kappa + I * p.delta_c;
    J(0, 0) = -P;
    J(0, 2) = -I * p.g;
    J(1, 1) = -std::conj(P);
    J(1, 3) = I * p.g;
    detail::fill_magnon_rows(J, fp, p, p.delta_m);
    return J;
}

[[nodiscard]] inline ComplexMatrix jacobian_active(const FixedPoint& fp, const SystemParams& p) {
    if (fp.kind != SystemKind::active) throw domain_error("jacobian_active: passive fixed point");
    ComplexMatrix J(4);
    const double G = p.effective_gain();
    const double sat = 2.0 * p.gamma_sat * fp.n_a();
    const cplx sa2 = p.gamma_sat * fp.a0 * fp.a0;
    J(0, 0) = G + I * fp.omega_off - sat;
    J(0, 1) = -sa2;
    J(0, 2) = -I * p.g;
    J(1, 0) = -std::conj(sa2);
    J(1, 1) = G - I * fp.omega_off - sat;
    J(1, 3) = I * p.g;
    detail::fill_magnon_rows(J, fp, p, p.delta_m - fp.omega_off);
    return J;
}

[[nodiscard]] inline ComplexMatrix jacobian(const FixedPoint& fp, const SystemParams& p) {
    return fp.kind == SystemKind::passive ? jacobian_passive(fp, p) : jacobian_active(fp, p);
}

[[nodiscard]] inline StabilityReport classify(const FixedPoint& fp, const SystemParams& p) {
    const double rho = p.rate_scale();
    ComplexMatrix J = jacobian(fp, p);
    J *= 1.0 / rho;
    StabilityReport rep;
    for (const cplx& l : eigenvalues(J)) rep.eigenvalues.push_back(l * rho);

    std::vector<cplx> retained = rep.eigenvalues;
    if (fp.kind == SystemKind::active) {
        auto it = std::min_element(retained.begin(), retained.end(),
                                   [](cplx l, cplx r) { return std::abs(l) < std::abs(r); });
        rep.discarded = *it;
        retained.erase(it);
        double largest = 0.0;
        for (const cplx& l : retained) largest = std::max(largest, std::abs(l));
        rep.neutral_mode_suspect = std::abs(*rep.discarded) >= neutral_mode_tol * largest;
    }
    rep.margin = -std::numeric_limits<double>::infinity();
    for (const cplx& l : retained) rep.margin = std::max(rep.margin, l.real());
    rep.is_stable = rep.margin < 0.0;
    rep.marginal = std::abs(rep.margin) < marginal_band * rho;
    return rep;
}

} // namespace magnopol
