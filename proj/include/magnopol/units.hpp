#pragma once

// Internal unit convention: time in microseconds, every rate in rad/us.
// Nonlinear coefficients (Kerr K, gain saturation Gamma) are rad/us per
// quantum. SI quantities only appear at I/O boundaries.

#include <numbers>

namespace magnopol::units {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduced Planck constant, J*s (CODATA 2018).
inline constexpr double hbar = 1.054571817e-34;

inline constexpr double us_per_s = 1.0e6;

/// f/2pi given in MHz -> rad/us.
constexpr double rate_from_mhz(double f_mhz) { return two_pi * f_mhz; }
/// f/2pi given in Hz -> rad/us.
constexpr double rate_from_hz(double f_hz) { return two_pi * f_hz / us_per_s; }
constexpr double rate_from_khz(double f_khz) { return rate_from_hz(f_khz * 1.0e3); }
constexpr double rate_from_ghz(double f_ghz) { return rate_from_mhz(f_ghz * 1.0e3); }
constexpr double rate_from_rad_per_s(double w) { return w / us_per_s; }

constexpr double mhz_from_rate(double rate) { return rate / two_pi; }
constexpr double hz_from_rate(double rate) { return rate * us_per_s / two_pi; }
constexpr double rad_per_s_from_rate(double rate) { return rate * us_per_s; }

constexpr double us_from_ns(double t_ns) { return t_ns * 1.0e-3; }

constexpr double tesla_from_mt(double b_mt) { return b_mt * 1.0e-3; }
constexpr double tesla_from_gauss(double b_g) { return b_g * 1.0e-4; }

} // namespace magnopol::units
