#include "magnopol/phasemap.hpp"
#include "magnopol/stability.hpp"
#include "magnopol/steady.hpp"

#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <random>

using namespace magnopol;
using Catch::Approx;

namespace {

SystemParams reference_passive(double delta_c_mhz = 0.0) {
    SystemParams p;
    p.kappa = units::rate_from_mhz(1.5);
    p.kappa_ext = 0.5 * p.kappa;
    p.gamma = units::rate_from_mhz(16.5);
    p.g = units::rate_from_mhz(30.0);
    p.kerr = units::rate_from_hz(9.8e-9);
    p.omega_d = units::rate_from_ghz(3.0);
    p.delta_c = units::rate_from_mhz(delta_c_mhz);
    return p;
}

SystemParams fitted_active(double gain_mhz, double delta_m_mhz) {
    SystemParams p;
    p.kind = SystemKind::active;
    p.g = units::rate_from_mhz(25.0);
    p.gamma = units::rate_from_mhz(10.3);
    p.kerr = units::rate_from_hz(3.2e-6);
    p.gamma_sat = units::rate_from_hz(0.8e-6);
    p.gain = units::rate_from_mhz(gain_mhz);
    p.delta_m = units::rate_from_mhz(delta_m_mhz);
    return p;
}

// Pairs every library solution with an oracle solution; returns worst relative distance.
double pair_distance(const std::vector<FixedPoint>& fps, const std::vector<oracle::Solution>& ref) {
    double worst = 0.0;
    for (const auto& fp : fps) {
        double best = 1e300;
        const double scale = std::abs(fp.a0) + std::abs(fp.m0);
        for (const auto& r : ref) best = std::min(best, (std::abs(fp.a0 - r.a) + std::abs(fp.m0 - r.m)) / scale);
        worst = std::max(worst, best);
    }
    return worst;
}

} // namespace

TEST_CASE("passive: zero drive gives the trivial solution with zero residual") {
    const SystemParams p = reference_passive();
    const auto fps = passive_fixed_points(p, drive_from_eta(0.0));
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].n_m() == 0.0);
    CHECK(fps[0].n_a() == 0.0);
    CHECK(residual(fps[0], p, {}) == 0.0);
}

TEST_CASE("passive: K = 0 reduces to the linear two-mode response") {
    SystemParams p = reference_passive(7.0);
    p.kerr = 0.0;
    p.delta_m = units::rate_from_mhz(-12.0);
    const DriveSpec d = drive_from_eta(1e5);
    const auto fps = passive_fixed_points(p, d);
    REQUIRE(fps.size() == 1);
    const double expect = p.g * p.g * fps[0].n_a() / (0.25 * p.gamma * p.gamma + p.delta_m * p.delta_m);
    CHECK(fps[0].n_m() == Approx(expect).epsilon(1e-12));
    // closed form of the linear response
    const cplx P = 0.5 * p.kappa + I * p.delta_c, Q = 0.5 * p.gamma + I * p.delta_m;
    CHECK(std::abs(fps[0].a0 - d.eta * Q / (P * Q + p.g * p.g)) < 1e-12 * std::abs(fps[0].a0));
}

TEST_CASE("passive: three real positive roots in the detuned-cavity bistable window") {
    const SystemParams base = reference_passive(80.0);
    int bistable = 0;
    for (double dm = -100.0; dm <= 100.0; dm += 5.0) {
        SystemParams p = base;
        p.delta_m = units::rate_from_mhz(dm);
        const auto fps = passive_fixed_points(p, n0_to_drive_passive(1e15, p));
        CHECK((fps.size() == 1 || fps.size() == 3 || fps.size() == 2));
        if (fps.size() == 3) {
            ++bistable;
            int stable = 0;
            for (const auto& f : fps) stable += classify(f, p).is_stable;
            CHECK(stable == 2);
        }
        for (const auto& f : fps) CHECK(f.residual < steady_residual_tol);
    }
    CHECK(bistable > 0);
}

TEST_CASE("residual flags a perturbed Kerr-bent root") {
    SystemParams p = reference_passive(80.0);
    p.delta_m = units::rate_from_mhz(-70.0);
    const DriveSpec d = n0_to_drive_passive(1e15, p);
    const auto fps = passive_fixed_points(p, d);
    REQUIRE(!fps.empty());
    FixedPoint bent = fps.back();
    CHECK(residual(bent, p, d) < 1e-8);
    bent.m0 *= std::sqrt(1.01);
    CHECK(residual(bent, p, d) > 1e-8);
}

TEST_CASE("active: bare oscillator for g = 0") {
    SystemParams p = fitted_active(15.0, -20.0);
    p.g = 0.0;
    const auto fps = active_fixed_points(p);
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].branch == Branch::decoupled);
    CHECK(fps[0].n_a() == Approx(p.gain / p.gamma_sat).epsilon(1e-14));
    CHECK(fps[0].m0 == cplx{});
    CHECK(fps[0].omega_off == 0.0);
    CHECK(fps[0].aux_A == 0.0);
    CHECK(counts_toward_phase(fps[0], p));
}

TEST_CASE("active: K = 0, resonant magnon gives the W = 0 branch at A = 2g^2/gamma") {
    SystemParams p = fitted_active(150.0, 0.0);
    p.kerr = 0.0;
    const double A = 2.0 * p.g * p.g / p.gamma;
    REQUIRE(A <= p.gain);
    const auto fps = active_fixed_points(p);
    bool found = false;
    for (const auto& f : fps)
        if (std::abs(f.omega_off) < 1e-9 * p.gain && std::abs(f.aux_A - A) < 1e-8 * A) found = true;
    CHECK(found);
}

TEST_CASE("active: fitted parameters at -46.4 MHz give 2 stable + 1 unstable") {
    const SystemParams p = fitted_active(15.45, -46.4);
    const auto fps = active_fixed_points(p);
    REQUIRE(fps.size() == 3);
    int stable = 0;
    for (const auto& f : fps) {
        CHECK(f.residual < steady_residual_tol);
        CHECK(f.aux_A <= p.gain);
        CHECK(f.n_a() == Approx((p.gain - f.aux_A) / p.gamma_sat).epsilon(1e-10));
        stable += classify(f, p).is_stable;
    }
    CHECK(stable == 2);
}

TEST_CASE("active: non-positive gain returns only the quiescent branch") {
    SystemParams p = fitted_active(0.0, -10.0);
    auto fps = active_fixed_points(p);
    REQUIRE(fps.size() == 1);
    CHECK(fps[0].branch == Branch::quiescent);
    CHECK_FALSE(counts_toward_phase(fps[0], p));
    p.gain = -1.0;
    CHECK(active_fixed_points(p).size() == 1);
}

TEST_CASE("root sets match the multi-start Newton oracle on random draws") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    int active_multi = 0, passive_multi = 0;
    for (int trial = 0; trial < 400; ++trial) {
        if (trial % 2 == 0) {
            SystemParams p = fitted_active(10.0 + 15.0 * U(rng), -80.0 + 80.0 * U(rng));
            const auto fps = active_fixed_points(p);
            const auto ref = oracle::active_newton(p);
            INFO("G/2pi=" << units::mhz_from_rate(p.gain) << " dm/2pi=" << units::mhz_from_rate(p.delta_m));
            CHECK(fps.size() == ref.size());
            CHECK(pair_distance(fps, ref) < 1e-6);
            active_multi += fps.size() > 1;
        } else {
            SystemParams p = reference_passive(80.0 * U(rng));
            p.delta_m = units::rate_from_mhz(-100.0 + 200.0 * U(rng));
            const DriveSpec d = n0_to_drive_passive(std::pow(10.0, 12.0 + 3.0 * U(rng)), p);
            const auto fps = passive_fixed_points(p, d);
            const auto ref = oracle::passive_newton(p, d.eta);
            INFO("dc/2pi=" << units::mhz_from_rate(p.delta_c) << " dm/2pi=" << units::mhz_from_rate(p.delta_m));
            CHECK(fps.size() == ref.size());
            CHECK(pair_distance(fps, ref) < 1e-6);
            passive_multi += fps.size() > 1;
        }
    }
    // the draw must actually exercise multistable cells
    CHECK(active_multi > 10);
    CHECK(passive_multi > 0);
}

TEST_CASE("continuity along a fine detuning ramp inside one region") {
    // -54 .. -40 MHz stays inside the three-solution region
    SystemParams p = fitted_active(15.45, -54.0);
    auto prev = active_fixed_points(p);
    REQUIRE(prev.size() == 3);
    const double step = units::rate_from_mhz(14.0) / 200.0;
    for (int k = 0; k < 200; ++k) {
        p.delta_m += step;
        const auto cur = active_fixed_points(p);
        REQUIRE(cur.size() == prev.size());
        for (const auto& c : cur) {
            double rel = 1e300;
            for (const auto& q : prev)
                rel = std::min(rel, (std::abs(c.a0 - q.a0) + std::abs(c.m0 - q.m0)) / (std::abs(q.a0) + std::abs(q.m0)));
            CHECK(rel < 2e-2);
        }
        prev = cur;
    }
}

TEST_CASE("K -> 0 limit recovers the K = 0 offsets") {
    SystemParams p = fitted_active(20.0, -30.0);
    SystemParams p0 = p;
    p0.kerr = 0.0;
    const auto ref = active_fixed_points(p0);
    p.kerr *= 1e-3;
    const auto small = active_fixed_points(p);
    REQUIRE(ref.size() == small.size());
    for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(small[i].omega_off == Approx(ref[i].omega_off).epsilon(1e-3));
}

TEST_CASE("K -> -K with mirrored detuning mirrors the offsets") {
    for (double dm : {-60.0, -46.4, -20.0, 10.0}) {
        SystemParams p = fitted_active(16.0, dm);
        SystemParams q = p;
        q.kerr = -p.kerr;
        q.delta_m = -p.delta_m;
        const auto a = active_fixed_points(p);
        const auto b = active_fixed_points(q);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(b[i].omega_off == Approx(-a[i].omega_off).epsilon(1e-9));
            CHECK(classify(a[i], p).is_stable == classify(b[i], q).is_stable);
        }
    }
}

TEST_CASE("solution counts stay within bounds") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        SystemParams p = fitted_active(5.0 + 30.0 * U(rng), -100.0 + 150.0 * U(rng));
        CHECK(active_fixed_points(p).size() <= 5);
        SystemParams q = reference_passive(100.0 * U(rng));
        q.delta_m = units::rate_from_mhz(-100.0 + 200.0 * U(rng));
        CHECK(passive_fixed_points(q, n0_to_drive_passive(std::pow(10.0, 9.0 + 6.0 * U(rng)), q)).size() <= 3);
    }
}
