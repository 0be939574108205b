#pragma once

// Strict JSON run configuration. Every physical number carries its unit in the
// key name; unknown keys are rejected with the path of the offending field.
//
//   rates / frequencies:  <name>_ghz_over_2pi  _mhz_over_2pi  _khz_over_2pi
//                         _hz_over_2pi  _uhz_over_2pi  _nhz_over_2pi  _rad_per_s
//   times:                <name>_ns  <name>_us
//   power:                power_w  power_dbm
//   occupation:           <name>_quanta

#include "magnopol/calib.hpp"
#include "magnopol/dynamics.hpp"
#include "magnopol/errors.hpp"
#include "magnopol/model.hpp"
#include "magnopol/phasemap.hpp"
#include "magnopol/units.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace magnopol::config {

using json = nlohmann::ordered_json;

inline constexpr int format_version = 1;

/// Field reader that remembers which keys were consumed.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    [[nodiscard]] std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }
    [[nodiscard]] const std::string& path() const { return path_; }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    std::optional<double> number(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = raw(key);
        if (!v.is_number()) throw config_error(at(key), "expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw config_error(at(key), "must be finite");
        return d;
    }
    double number(const std::string& key, double fallback) { return number(key).value_or(fallback); }
    double require_number(const std::string& key) {
        auto v = number(key);
        if (!v) throw config_error(at(key), "required field missing");
        return *v;
    }

    std::optional<long long> integer(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = raw(key);
        if (!v.is_number_integer()) throw config_error(at(key), "expected an integer");
        return v.get<long long>();
    }

    std::optional<bool> boolean(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = raw(key);
        if (!v.is_boolean()) throw config_error(at(key), "expected true or false");
        return v.get<bool>();
    }

    std::optional<std::string> string(const std::string& key) {
        if (!has(key)) return std::nullopt;
        const json& v = raw(key);
        if (!v.is_string()) throw config_error(at(key), "expected a string");
        return v.get<std::string>();
    }

    /// A rate given under exactly one unit-suffixed key; returns rad/us.
    std::optional<double> rate(const std::string& base) {
        static const std::pair<const char*, double (*)(double)> suffixes[] = {
            {"_ghz_over_2pi", [](double v) { return units::rate_from_ghz(v); }},
            {"_mhz_over_2pi", [](double v) { return units::rate_from_mhz(v); }},
            {"_khz_over_2pi", [](double v) { return units::rate_from_khz(v); }},
            {"_hz_over_2pi", [](double v) { return units::rate_from_hz(v); }},
            {"_uhz_over_2pi", [](double v) { return units::rate_from_hz(v * 1e-6); }},
            {"_nhz_over_2pi", [](double v) { return units::rate_from_hz(v * 1e-9); }},
            {"_rad_per_s", [](double v) { return units::rate_from_rad_per_s(v); }},
        };
        std::optional<double> out;
        std::string found;
        for (const auto& [suffix, conv] : suffixes) {
            const std::string key = base + suffix;
            if (!has(key)) continue;
            if (out) throw config_error(at(key), "conflicts with " + found);
            out = conv(require_number(key));
            found = key;
        }
        return out;
    }
    double rate(const std::string& base, double fallback) { return rate(base).value_or(fallback); }
    double require_rate(const std::string& base) {
        auto v = rate(base);
        if (!v) throw config_error(at(base + "_mhz_over_2pi"), "required field missing (any rate unit)");
        return *v;
    }

    /// A list of rates under one unit-suffixed key.
    std::optional<std::vector<double>> rate_list(const std::string& base) {
        static const std::pair<const char*, double> scales[] = {
            {"_ghz_over_2pi", units::rate_from_ghz(1.0)}, {"_mhz_over_2pi", units::rate_from_mhz(1.0)},
            {"_khz_over_2pi", units::rate_from_khz(1.0)}, {"_hz_over_2pi", units::rate_from_hz(1.0)},
            {"_rad_per_s", units::rate_from_rad_per_s(1.0)}};
        std::optional<std::vector<double>> out;
        for (const auto& [suffix, scale] : scales) {
            const std::string key = base + suffix;
            if (!has(key)) continue;
            if (out) throw config_error(at(key), "list given in more than one unit");
            const json& v = raw(key);
            if (!v.is_array()) throw config_error(at(key), "expected an array");
            std::vector<double> xs;
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (!v[i].is_number()) throw config_error(at(key) + "[" + std::to_string(i) + "]", "expected a number");
                xs.push_back(scale * v[i].get<double>());
            }
            out = std::move(xs);
        }
        return out;
    }

    /// Time in us from `<base>_ns` or `<base>_us`.
    std::optional<double> time(const std::string& base) {
        const bool ns = has(base + "_ns"), us = has(base + "_us");
        if (ns && us) throw config_error(at(base + "_us"), "conflicts with " + base + "_ns");
        if (ns) return units::us_from_ns(require_number(base + "_ns"));
        if (us) return require_number(base + "_us");
        return std::nullopt;
    }

    Reader object(const std::string& key) {
        if (!has(key)) throw config_error(at(key), "required block missing");
        return Reader(raw(key), at(key));
    }
    std::optional<Reader> optional_object(const std::string& key) {
        if (!has(key)) return std::nullopt;
        return Reader(raw(key), at(key));
    }

    /// Rejects any key that was never read.
    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw config_error(at(k), "unknown key");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline SystemParams parse_system(Reader r) {
    SystemParams p;
    const std::string kind = r.string("kind").value_or("passive");
    if (kind == "passive") p.kind = SystemKind::passive;
    else if (kind == "active") p.kind = SystemKind::active;
    else throw config_error(r.at("kind"), "must be \"passive\" or \"active\"");
    p.kappa = r.rate("kappa", 0.0);
    p.kappa_ext = r.rate("kappa_ext").value_or(0.5 * p.kappa);
    p.gamma = r.rate("gamma", 0.0);
    p.g = r.rate("g", 0.0);
    p.kerr = r.rate("kerr", 0.0);
    p.gain = r.rate("gain", 0.0);
    p.gain_absorbed = r.boolean("gain_absorbed").value_or(true);
    p.gamma_sat = r.rate("gamma_sat", 0.0);
    p.omega_d = r.rate("omega_d", 0.0);
    p.delta_c = r.rate("delta_c", 0.0);
    p.delta_m = r.rate("delta_m", 0.0);
    r.finish();
    try {
        p.validate();
    } catch (const domain_error& e) {
        throw config_error(r.path(), e.what());
    }
    return p;
}

inline DriveSpec parse_drive(Reader r, const SystemParams& p) {
    const int given = static_cast<int>(r.has("power_w")) + r.has("power_dbm") + r.has("n0_quanta") +
                      r.has("eta_per_us");
    if (given > 1) throw config_error(r.at("power_w"), "give only one of power_w, power_dbm, n0_quanta, eta_per_us");
    DriveSpec d;
    try {
        if (auto w = r.number("power_w")) d = eta_from_power(*w, p);
        else if (auto dbm = r.number("power_dbm")) d = eta_from_power(1e-3 * std::pow(10.0, *dbm / 10.0), p);
        else if (auto n0 = r.number("n0_quanta")) d = n0_to_drive_passive(*n0, p);
        else if (auto eta = r.number("eta_per_us")) d = drive_from_eta(*eta);
    } catch (const domain_error& e) {
        throw config_error(r.path(), e.what());
    }
    r.finish();
    return d;
}

inline GridSpec parse_grid(Reader r, const SystemParams& base) {
    GridSpec g;
    g.base = base;
    const std::string axis = r.string("x_axis").value_or("n0");
    if (axis == "n0") {
        g.x_axis = XAxis::n0;
        g.x_min = r.require_number("n0_min_quanta");
        g.x_max = r.require_number("n0_max_quanta");
    } else if (axis == "gain") {
        g.x_axis = XAxis::gain;
        g.x_min = r.require_rate("gain_min");
        g.x_max = r.require_rate("gain_max");
    } else {
        throw config_error(r.at("x_axis"), "must be \"n0\" or \"gain\"");
    }
    g.y_min = r.require_rate("delta_m_min");
    g.y_max = r.require_rate("delta_m_max");
    g.nx = static_cast<int>(r.integer("nx").value_or(201));
    g.ny = static_cast<int>(r.integer("ny").value_or(201));
    r.finish();
    try {
        g.validate();
    } catch (const domain_error& e) {
        throw config_error(r.path(), e.what());
    }
    return g;
}

struct SpectrogramOptions {
    FrequencyWindow window;
    double log_floor = 1e-6;
    bool write_traces = false;
};

struct SweepConfig {
    SweepProtocol protocol;
    double seed_fraction = 1e-3;
    SpectrogramOptions spectrogram;
};

inline SweepConfig parse_sweep(Reader r, const SystemParams& p) {
    SweepConfig c;
    auto& pr = c.protocol;
    if (auto list = r.rate_list("detunings")) {
        pr.detunings = *list;
    } else {
        const double start = r.require_rate("start");
        const double stop = r.require_rate("stop");
        const auto steps = r.integer("steps");
        if (!steps || *steps < 1) throw config_error(r.at("steps"), "required positive integer");
        for (long long k = 0; k < *steps; ++k)
            pr.detunings.push_back(*steps == 1 ? start
                                               : start + (stop - start) * static_cast<double>(k) / static_cast<double>(*steps - 1));
    }
    const std::string dir = r.string("direction").value_or("up");
    if (dir == "down") std::reverse(pr.detunings.begin(), pr.detunings.end());
    else if (dir != "up") throw config_error(r.at("direction"), "must be \"up\" or \"down\"");
    pr.dt = r.time("dt").value_or(1e-3);
    pr.t_total = r.time("t_total").value_or(8.0);
    pr.t_drop = r.time("t_drop").value_or(3.0);
    pr.memory_detuning = r.boolean("memory_detuning").value_or(true);
    pr.memory_state = r.boolean("memory_state").value_or(true);
    pr.fit_fraction = r.number("fit_fraction", 0.5);
    pr.omega_initial = r.rate("omega_initial", 0.0);
    c.seed_fraction = r.number("seed_fraction", 1e-3);
    if (auto s = r.optional_object("initial_state")) {
        ModeState st;
        st.a = {s->number("a_re", 0.0), s->number("a_im", 0.0)};
        st.m = {s->number("m_re", 0.0), s->number("m_im", 0.0)};
        s->finish();
        pr.initial_state = st;
    } else {
        pr.initial_state = default_seed(p, c.seed_fraction);
    }
    if (auto s = r.optional_object("spectrogram")) {
        if (auto v = s->rate("f_min")) c.spectrogram.window.f_min_hz = units::hz_from_rate(*v);
        if (auto v = s->rate("f_max")) c.spectrogram.window.f_max_hz = units::hz_from_rate(*v);
        c.spectrogram.log_floor = s->number("log_floor", 1e-6);
        c.spectrogram.write_traces = s->boolean("write_traces").value_or(false);
        s->finish();
    }
    r.finish();
    try {
        pr.validate();
    } catch (const domain_error& e) {
        throw config_error(r.path(), e.what());
    }
    return c;
}

struct FitConfig {
    std::filesystem::path input;
    Coupling coupling = Coupling::under;
    std::optional<double> omega_ref;  // rad/us, Kittel only
};

inline FitConfig parse_fit(Reader r, const std::filesystem::path& base_dir) {
    FitConfig f;
    const auto in = r.string("input");
    if (!in || in->empty()) throw config_error(r.at("input"), "required path missing");
    f.input = std::filesystem::path(*in);
    if (f.input.is_relative()) f.input = base_dir / f.input;
    const std::string coupling = r.string("coupling").value_or("under");
    if (coupling == "over") f.coupling = Coupling::over;
    else if (coupling != "under") throw config_error(r.at("coupling"), "must be \"under\" or \"over\"");
    f.omega_ref = r.rate("omega_ref");
    r.finish();
    return f;
}

/// Parsed configuration. `raw` keeps the document as given (with CLI overrides
/// applied) so a manifest reproduces the run exactly.
struct RunConfig {
    json raw;
    std::filesystem::path base_dir;
    std::uint64_t seed = 0;
    SystemParams system;
    DriveSpec drive;
    std::optional<GridSpec> grid;
    std::optional<SweepConfig> sweep;
    std::optional<FitConfig> fit;
};

inline RunConfig parse(const json& doc, const std::filesystem::path& base_dir = ".") {
    RunConfig c;
    c.raw = doc;
    c.base_dir = base_dir;
    Reader r(doc, "");
    if (auto v = r.integer("format_version"); v && *v != format_version)
        throw config_error("format_version", "unsupported version " + std::to_string(*v));
    if (auto s = r.integer("seed")) {
        if (*s < 0) throw config_error("seed", "must be >= 0");
        c.seed = static_cast<std::uint64_t>(*s);
    }
    (void)r.string("command");
    if (r.has("provenance")) (void)r.raw("provenance");  // written by manifests, informational only
    if (r.has("system")) c.system = parse_system(r.object("system"));
    if (auto d = r.optional_object("drive")) c.drive = parse_drive(std::move(*d), c.system);
    if (auto g = r.optional_object("grid")) c.grid = parse_grid(std::move(*g), c.system);
    if (auto s = r.optional_object("sweep")) c.sweep = parse_sweep(std::move(*s), c.system);
    if (auto f = r.optional_object("fit")) c.fit = parse_fit(std::move(*f), base_dir);
    r.finish();
    return c;
}

inline json load_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw config_error(path.string(), "cannot open config file");
    try {
        return json::parse(f);
    } catch (const json::parse_error& e) {
        throw config_error(path.string(), std::string("malformed JSON: ") + e.what());
    }
}

} // namespace magnopol::config
