#include "magnopol/dynamics.hpp"
#include "magnopol/steady.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

using namespace magnopol;
using Catch::Approx;

namespace {

SystemParams fitted_active(double gain_mhz, double delta_m_mhz = 0.0) {
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

std::vector<double> mhz_range(double from, double to, double step) {
    std::vector<double> v;
    const int n = static_cast<int>(std::lround((to - from) / step));
    for (int k = 0; k <= n; ++k) v.push_back(units::rate_from_mhz(from + step * k));
    return v;
}

std::vector<double> omegas(const SweepResult& r) {
    std::vector<double> v;
    for (const auto& s : r.steps) v.push_back(s.omega);
    return v;
}

} // namespace

TEST_CASE("step count must divide the duration") {
    CHECK(detail::step_count(8.0, 1e-3) == 8000);
    CHECK(detail::step_count(1.0, 0.1) == 10);
    CHECK_THROWS_AS(detail::step_count(1.0, 0.3), domain_error);
    CHECK_THROWS_AS(detail::step_count(1.0, 0.0), domain_error);
    CHECK_THROWS_AS(detail::step_count(-1.0, 0.1), domain_error);
}

TEST_CASE("segment sampling is uniform and includes the initial state") {
    const SystemParams p = fitted_active(15.0, -10.0);
    ModeState s0;
    s0.a = {3e3, -1e3};
    s0.t = 2.5;
    const auto seg = integrate_segment(s0, p, {}, 1.0, 1e-3);
    REQUIRE(seg.size() == 1001);
    CHECK(seg.a_samples.front() == s0.a);
    CHECK(seg.times.front() == 2.5);
    for (std::size_t i = 1; i < seg.size(); ++i) CHECK(seg.times[i] - seg.times[i - 1] == Approx(1e-3).margin(1e-12));
    for (const auto& z : seg.m_samples) CHECK(std::isfinite(std::abs(z)));
    CHECK(seg.final_state.a == seg.a_samples.back());
    CHECK(seg.first_index_after(0.5) == 500);
}

TEST_CASE("bare oscillator settles on the van der Pol amplitude") {
    SystemParams p = fitted_active(15.0);
    p.g = 0.0;
    const auto seg = integrate_segment(default_seed(p), p, {}, 8.0, 1e-3);
    const double target = std::sqrt(p.gain / p.gamma_sat);
    CHECK(std::abs(std::abs(seg.final_state.a) / target - 1.0) < 1e-4);
}

TEST_CASE("halving dt changes the final state by less than 1e-5") {
    const SystemParams p = fitted_active(15.45, -20.0);
    const ModeState s0 = default_seed(p);
    const auto coarse = integrate_segment(s0, p, {}, 8.0, 1e-3);
    const auto fine = integrate_segment(s0, p, {}, 8.0, 5e-4);
    // the oscillation phase is neutral, so compare after removing a global rotation
    const cplx a1 = coarse.final_state.a, m1 = coarse.final_state.m;
    const cplx a2 = fine.final_state.a, m2 = fine.final_state.m;
    const cplx ov = std::conj(a1) * a2 + std::conj(m1) * m2;
    const cplx rot = ov / std::abs(ov);
    const double scale = std::hypot(std::abs(a2), std::abs(m2));
    const double diff = std::hypot(std::abs(a1 * rot - a2), std::abs(m1 * rot - m2));
    CHECK(diff / scale < 1e-5);
}

TEST_CASE("divergence reports the offending step") {
    SystemParams p = fitted_active(15.0);
    try {
        (void)integrate_segment(default_seed(p), p, {}, 8.0, 1e-3, 0.5);
        FAIL("expected divergence");
    } catch (const divergence_error& e) {
        CHECK(e.step() > 0);
        CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
    }
}

TEST_CASE("sweep halts on divergence and keeps partial results") {
    SystemParams p = fitted_active(15.0);
    p.gamma_sat = 0.0;  // unbounded linear gain
    SweepProtocol proto;
    proto.detunings = mhz_range(-10.0, 10.0, 5.0);
    const auto r = run_sweep(proto, p);
    CHECK_FALSE(r.complete());
    CHECK(r.steps.size() < proto.detunings.size());
    CHECK(r.error->rfind("step 0", 0) == 0);
}

TEST_CASE("protocol validation") {
    SweepProtocol proto;
    CHECK_THROWS_AS(proto.validate(), domain_error);
    proto.detunings = {0.0};
    proto.validate();
    proto.t_drop = 9.0;
    CHECK_THROWS_AS(proto.validate(), domain_error);
    proto.t_drop = 3.0;
    proto.fit_fraction = 0.0;
    CHECK_THROWS_AS(proto.validate(), domain_error);
    proto.fit_fraction = 1.0;
    proto.dt = 3e-3 + 1e-9;
    CHECK_THROWS_AS(proto.validate(), domain_error);
}

TEST_CASE("single step with g = 0 gives zero offset") {
    SystemParams p = fitted_active(15.0, -30.0);
    p.g = 0.0;
    SweepProtocol proto;
    proto.detunings = {p.delta_m};
    const auto r = run_sweep(proto, p);
    REQUIRE(r.complete());
    REQUIRE(r.steps.size() == 1);
    CHECK(std::abs(r.steps[0].omega) < 1e-9 * p.gain);
    CHECK(r.steps[0].effective == proto.detunings[0]);
}

TEST_CASE("effective detuning follows the previous offset") {
    const SystemParams p = fitted_active(15.45);
    SweepProtocol proto;
    proto.detunings = mhz_range(-40.0, -30.0, 2.0);
    proto.omega_initial = units::rate_from_mhz(1.0);
    const auto r = run_sweep(proto, p);
    REQUIRE(r.complete());
    CHECK(r.steps[0].effective == proto.detunings[0] - proto.omega_initial);
    for (std::size_t k = 1; k < r.steps.size(); ++k) {
        CHECK(r.steps[k].effective == r.steps[k].nominal - r.steps[k - 1].omega);
        CHECK(r.segments[k].detuning_used == r.steps[k].effective);
        CHECK(r.segments[k].a_samples.front() == r.segments[k - 1].final_state.a);
    }
}

TEST_CASE("up and down sweeps differ in the bistable window and repeat exactly") {
    const SystemParams p = fitted_active(15.45);
    SweepProtocol up;
    up.detunings = mhz_range(-80.0, 40.0, 1.0);
    SweepProtocol down = up;
    std::reverse(down.detunings.begin(), down.detunings.end());

    const auto ru = run_sweep(up, p);
    const auto ru2 = run_sweep(up, p);
    const auto rd = run_sweep(down, p);
    REQUIRE(ru.complete());
    REQUIRE(rd.complete());
    CHECK(omegas(ru) == omegas(ru2));

    auto wd = omegas(rd);
    std::reverse(wd.begin(), wd.end());
    const auto wu = omegas(ru);
    double area = 0.0;
    for (std::size_t k = 0; k < wu.size(); ++k) area += std::abs(wu[k] - wd[k]);
    CHECK(units::mhz_from_rate(area) > 10.0);
}

TEST_CASE("without memory each step is independent of the sweep order") {
    const SystemParams p = fitted_active(15.45);
    SweepProtocol proto;
    proto.memory_detuning = false;
    proto.memory_state = false;
    proto.detunings = mhz_range(-60.0, 10.0, 10.0);
    const auto ref = run_sweep(proto, p);
    REQUIRE(ref.complete());

    std::vector<std::size_t> perm(proto.detunings.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(5);
    std::shuffle(perm.begin(), perm.end(), rng);
    SweepProtocol shuffled = proto;
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.detunings[i] = proto.detunings[perm[i]];
    const auto r = run_sweep(shuffled, p);
    REQUIRE(r.complete());
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(r.steps[i].omega == ref.steps[perm[i]].omega);
}

TEST_CASE("adiabatic sweep follows the steady offset when K = 0 and g is small") {
    SystemParams p = fitted_active(15.0);
    p.kerr = 0.0;
    p.g = units::rate_from_mhz(2.0);
    SweepProtocol proto;
    proto.detunings = mhz_range(-20.0, 20.0, 4.0);
    const auto r = run_sweep(proto, p);
    REQUIRE(r.complete());
    for (const auto& s : r.steps) {
        SystemParams q = p;
        q.delta_m = s.effective;
        const auto fps = active_fixed_points(q);
        REQUIRE_FALSE(fps.empty());
        double best = 1e300;
        for (const auto& f : fps) best = std::min(best, std::abs(f.omega_off - s.omega));
        const double ref = std::max(std::abs(fps.front().omega_off), 1e-3 * p.g);
        INFO("delta_eff/2pi = " << units::mhz_from_rate(s.effective) << " MHz");
        CHECK(best < 1e-3 * ref);
    }
}

TEST_CASE("fitted up-sweep reaches a blue shift near 26 MHz and switches back") {
    const SystemParams p = fitted_active(15.45);
    SweepProtocol proto;
    proto.detunings = mhz_range(-80.0, 40.0, 1.0);
    const auto r = run_sweep(proto, p);
    REQUIRE(r.complete());
    const auto w = omegas(r);
    const auto it = std::max_element(w.begin(), w.end());
    CHECK(units::mhz_from_rate(*it) == Approx(26.0).margin(2.0));
    std::size_t k = 0;
    for (std::size_t i = 1; i + 1 < w.size(); ++i)
        if (w[i] - w[i + 1] > w[k] - w[k + 1]) k = i;
    CHECK(units::mhz_from_rate(w[k] - w[k + 1]) > 20.0);
    CHECK(units::mhz_from_rate(r.steps[k + 1].nominal) < 0.0);
    CHECK(k >= static_cast<std::size_t>(it - w.begin()));
}
