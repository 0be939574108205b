#pragma once

// Plain-text and binary writers plus the calibration CSV reader. Numbers are
// printed with %.17g so files round-trip exactly and compare byte-for-byte.

#include "magnopol/calib.hpp"
#include "magnopol/errors.hpp"
#include "magnopol/phasemap.hpp"
#include "magnopol/spectral.hpp"
#include "magnopol/trajectory.hpp"
#include "magnopol/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace magnopol::io {

using json = nlohmann::ordered_json;

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw numeric_error("cannot open " + path.string() + " for writing");
    f << text;
    if (!f) throw numeric_error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    write_text(path, j.dump(2) + "\n");
}

inline std::string grid_csv(const IntGrid& g) {
    std::string s;
    for (int r = 0; r < g.rows(); ++r) {
        for (int c = 0; c < g.cols(); ++c) {
            if (c) s += ',';
            s += std::to_string(g(r, c));
        }
        s += '\n';
    }
    return s;
}

inline std::string matrix_csv(const std::vector<double>& data, std::size_t rows, std::size_t cols) {
    std::string s;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) s += ',';
            s += fmt(data[r * cols + c]);
        }
        s += '\n';
    }
    return s;
}

/// Interleaved re/im little-endian float64 samples of a(t) then m(t).
inline void write_trace_binary(const std::filesystem::path& stem, const TrajectorySegment& seg,
                               std::size_t index) {
    std::ofstream f(stem.string() + ".bin", std::ios::binary);
    if (!f) throw numeric_error("cannot open " + stem.string() + ".bin");
    auto put = [&](double v) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        f.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    };
    for (const auto& z : seg.a_samples) {
        put(z.real());
        put(z.imag());
    }
    for (const auto& z : seg.m_samples) {
        put(z.real());
        put(z.imag());
    }
    if (!f) throw numeric_error("write failed: " + stem.string() + ".bin");
    json h;
    h["segment_index"] = index;
    h["dt_us"] = seg.dt;
    h["length"] = seg.size();
    h["layout"] = "a then m, interleaved re/im, float64 little-endian";
    h["detuning_used_mhz_over_2pi"] = units::mhz_from_rate(seg.detuning_used);
    write_json(stem.string() + ".json", h);
}

/// Reads samples written by write_trace_binary. Returns a then m.
inline std::pair<std::vector<cplx>, std::vector<cplx>> read_trace_binary(const std::filesystem::path& bin,
                                                                         std::size_t length) {
    std::ifstream f(bin, std::ios::binary);
    if (!f) throw numeric_error("cannot open " + bin.string());
    auto get = [&] {
        std::uint64_t bits = 0;
        f.read(reinterpret_cast<char*>(&bits), sizeof bits);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        return std::bit_cast<double>(bits);
    };
    std::vector<cplx> a(length), m(length);
    for (auto& z : a) z = {get(), get()};
    for (auto& z : m) z = {get(), get()};
    if (!f) throw numeric_error("truncated trace file " + bin.string());
    return {a, m};
}

// ---- calibration CSV -------------------------------------------------------

struct CalibrationTable {
    std::string freq_unit = "GHz";
    std::string field_unit = "mT";
    std::vector<std::pair<double, double>> rows;  // raw column values
};

namespace detail {

inline std::string trim(std::string s) {
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
    s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
    return s;
}

inline std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

} // namespace detail

/// Two numeric columns after optional `freq_unit,<Hz|GHz>` / `field_unit,<mT|G>`
/// header lines. Blank lines and lines starting with '#' are skipped.
inline CalibrationTable read_calibration_csv(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw config_error(path.string(), "cannot open calibration file");
    CalibrationTable t;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split(line);
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (cells.size() == 2 && cells[0] == "freq_unit") {
            if (cells[1] != "Hz" && cells[1] != "GHz") throw config_error(where, "freq_unit must be Hz or GHz");
            t.freq_unit = cells[1];
            continue;
        }
        if (cells.size() == 2 && cells[0] == "field_unit") {
            if (cells[1] != "mT" && cells[1] != "G") throw config_error(where, "field_unit must be mT or G");
            t.field_unit = cells[1];
            continue;
        }
        if (cells.size() != 2) throw config_error(where, "expected two columns");
        try {
            std::size_t p0 = 0, p1 = 0;
            const double x = std::stod(cells[0], &p0);
            const double y = std::stod(cells[1], &p1);
            if (p0 != cells[0].size() || p1 != cells[1].size()) throw std::invalid_argument("trailing text");
            t.rows.emplace_back(x, y);
        } catch (const std::exception&) {
            throw config_error(where, "non-numeric value");
        }
    }
    if (t.rows.empty()) throw config_error(path.string(), "no data rows");
    return t;
}

inline double frequency_to_rate(double v, const std::string& unit) {
    return unit == "Hz" ? units::rate_from_hz(v) : units::rate_from_ghz(v);
}

inline double field_to_tesla(double v, const std::string& unit) {
    return unit == "G" ? units::tesla_from_gauss(v) : units::tesla_from_mt(v);
}

} // namespace magnopol::io
