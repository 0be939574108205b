#pragma once

// Command implementations behind the `magnopol` executable. Each command reads
// a strict JSON config, writes its outputs plus `manifest.json` into the output
// directory and returns a process exit code:
//   0 success, 1 numeric or I/O failure, 2 invalid input.

#include "magnopol/calib.hpp"
#include "magnopol/config.hpp"
#include "magnopol/dynamics.hpp"
#include "magnopol/errors.hpp"
#include "magnopol/io.hpp"
#include "magnopol/phasemap.hpp"
#include "magnopol/spectral.hpp"
#include "magnopol/stability.hpp"
#include "magnopol/steady.hpp"

#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#ifndef MAGNOPOL_VERSION
#define MAGNOPOL_VERSION "dev"
#endif

namespace magnopol::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { ok = 0, numeric_failure = 1, invalid_input = 2 };

struct Options {
    std::filesystem::path config;
    std::filesystem::path out = ".";
    unsigned threads = 1;
    std::optional<std::pair<int, int>> resolution;  // nx, ny
};

/// Parses "NxM" into (N, M).
inline std::pair<int, int> parse_resolution(const std::string& s) {
    const auto x = s.find_first_of("xX");
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        std::size_t p0 = 0, p1 = 0;
        const int n = std::stoi(s.substr(0, x), &p0);
        const int m = std::stoi(s.substr(x + 1), &p1);
        if (p0 != x || p1 != s.size() - x - 1 || n < 2 || m < 2) throw std::invalid_argument(s);
        return {n, m};
    } catch (const std::exception&) {
        throw config_error("--resolution", "expected NxM with N, M >= 2, got \"" + s + "\"");
    }
}

namespace detail {

inline double mhz(double rate) { return units::mhz_from_rate(rate); }

inline json complex_pair(cplx z) { return json::array({z.real(), z.imag()}); }

/// Loads the config, applies command-line overrides and records them in the
/// raw document so the manifest reproduces the run.
inline config::RunConfig load(const std::string& command, const Options& opt) {
    json doc = config::load_json(opt.config);
    if (!doc.is_object()) throw config_error("<root>", "expected an object");
    if (doc.contains("command") && doc["command"] != command)
        throw config_error("command", "config is for \"" + doc["command"].dump() + "\", not \"" + command + "\"");
    doc["command"] = command;
    if (opt.resolution) {
        if (!doc.contains("grid") || !doc["grid"].is_object())
            throw config_error("--resolution", "only applies to configs with a grid block");
        doc["grid"]["nx"] = opt.resolution->first;
        doc["grid"]["ny"] = opt.resolution->second;
    }
    const auto base = opt.config.has_parent_path() ? opt.config.parent_path() : std::filesystem::path(".");
    config::RunConfig c = config::parse(doc, base);
    if (c.fit) c.raw["fit"]["input"] = std::filesystem::absolute(c.fit->input).lexically_normal().string();
    return c;
}

inline void write_manifest(const std::filesystem::path& out, const config::RunConfig& c, json resolved) {
    json m = c.raw;
    m.erase("provenance");
    json prov;
    prov["tool"] = "magnopol";
    prov["version"] = MAGNOPOL_VERSION;
    prov["format_version"] = config::format_version;
    prov["resolved"] = std::move(resolved);
    m["provenance"] = std::move(prov);
    io::write_json(out / "manifest.json", m);
}

inline json system_json(const SystemParams& p) {
    json j;
    j["kind"] = to_string(p.kind);
    j["kappa_mhz_over_2pi"] = mhz(p.kappa);
    j["kappa_ext_mhz_over_2pi"] = mhz(p.kappa_ext);
    j["gamma_mhz_over_2pi"] = mhz(p.gamma);
    j["g_mhz_over_2pi"] = mhz(p.g);
    j["kerr_hz_over_2pi"] = units::hz_from_rate(p.kerr);
    j["gain_mhz_over_2pi"] = mhz(p.gain);
    j["effective_gain_mhz_over_2pi"] = mhz(p.effective_gain());
    j["gamma_sat_hz_over_2pi"] = units::hz_from_rate(p.gamma_sat);
    j["omega_d_mhz_over_2pi"] = mhz(p.omega_d);
    j["delta_c_mhz_over_2pi"] = mhz(p.delta_c);
    j["delta_m_mhz_over_2pi"] = mhz(p.delta_m);
    return j;
}

inline void prepare_out(const std::filesystem::path& out) {
    std::error_code ec;
    std::filesystem::create_directories(out, ec);
    if (ec) throw numeric_error("cannot create output directory " + out.string() + ": " + ec.message());
}

} // namespace detail

inline json fixed_point_report(const SystemParams& p, const DriveSpec& drive) {
    json list = json::array();
    CellCounts counts;
    const auto fps = fixed_points(p, drive);
    for (std::size_t i = 0; i < fps.size(); ++i) {
        const FixedPoint& fp = fps[i];
        const StabilityReport rep = classify(fp, p);
        const bool counted = counts_toward_phase(fp, p);
        json e;
        e["index"] = i;
        e["branch"] = to_string(fp.branch);
        e["a0"] = detail::complex_pair(fp.a0);
        e["m0"] = detail::complex_pair(fp.m0);
        e["n_a"] = fp.n_a();
        e["n_m"] = fp.n_m();
        e["omega_offset_mhz_over_2pi"] = detail::mhz(fp.omega_off);
        if (p.kind == SystemKind::active) e["aux_A_mhz_over_2pi"] = detail::mhz(fp.aux_A);
        e["residual"] = fp.residual;
        e["classification"] = rep.marginal ? "marginal" : rep.is_stable ? "stable" : "unstable";
        e["margin_mhz_over_2pi"] = detail::mhz(rep.margin);
        json ev = json::array();
        for (const cplx& l : rep.eigenvalues) ev.push_back(detail::complex_pair(l / units::two_pi));
        e["eigenvalues_mhz_over_2pi"] = std::move(ev);
        if (rep.discarded) e["discarded_neutral_mhz_over_2pi"] = detail::complex_pair(*rep.discarded / units::two_pi);
        e["neutral_mode_suspect"] = rep.neutral_mode_suspect;
        e["counted"] = counted;
        if (counted) {
            if (rep.marginal) ++counts.marginal;
            else if (rep.is_stable) ++counts.stable;
            else ++counts.unstable;
        }
        list.push_back(std::move(e));
    }
    json r;
    r["system"] = detail::system_json(p);
    r["drive_eta_per_us"] = drive.eta;
    r["fixed_points"] = std::move(list);
    r["stable"] = counts.stable;
    r["unstable"] = counts.unstable;
    r["marginal"] = counts.marginal;
    r["label"] = phase_label(counts);
    return r;
}

inline int cmd_fixed_points(const Options& opt, std::ostream& log) {
    const auto c = detail::load("fixed-points", opt);
    if (!c.raw.contains("system")) throw config_error("system", "required block missing");
    detail::prepare_out(opt.out);
    const json report = fixed_point_report(c.system, c.drive);
    io::write_json(opt.out / "fixed_points.json", report);
    json resolved;
    resolved["system"] = detail::system_json(c.system);
    resolved["drive_eta_per_us"] = c.drive.eta;
    detail::write_manifest(opt.out, c, resolved);
    log << report["label"].get<std::string>() << " (" << report["fixed_points"].size() << " fixed points)\n";
    return ok;
}

inline int cmd_phase_diagram(const Options& opt, std::ostream& log) {
    const auto c = detail::load("phase-diagram", opt);
    if (!c.grid) throw config_error("grid", "required block missing");
    detail::prepare_out(opt.out);
    const PhaseDiagram d = scan(*c.grid, opt.threads);
    io::write_text(opt.out / "stable_counts.csv", io::grid_csv(d.stable_count));
    io::write_text(opt.out / "unstable_counts.csv", io::grid_csv(d.unstable_count));
    io::write_text(opt.out / "marginal_counts.csv", io::grid_csv(d.marginal_count));

    const GridSpec& g = *c.grid;
    json side;
    side["rows"] = "delta_m";
    side["cols"] = to_string(g.x_axis);
    json xs = json::array(), ys = json::array();
    for (int i = 0; i < g.nx; ++i) xs.push_back(g.x_axis == XAxis::n0 ? g.x_at(i) : detail::mhz(g.x_at(i)));
    for (int j = 0; j < g.ny; ++j) ys.push_back(detail::mhz(g.y_at(j)));
    side[g.x_axis == XAxis::n0 ? "x_n0_quanta" : "x_gain_mhz_over_2pi"] = std::move(xs);
    side["y_delta_m_mhz_over_2pi"] = std::move(ys);
    const auto summary = d.summary();
    json sj;
    for (const auto& [label, n] : summary) sj[label] = n;
    side["summary"] = sj;
    side["errors"] = d.errors;
    io::write_json(opt.out / "phase_diagram.json", side);

    json resolved;
    resolved["system"] = detail::system_json(g.base);
    resolved["nx"] = g.nx;
    resolved["ny"] = g.ny;
    detail::write_manifest(opt.out, c, resolved);

    const double cells = static_cast<double>(g.nx) * g.ny;
    for (const auto& [label, n] : summary)
        log << std::setw(10) << label << "  " << std::setw(7) << n << "  " << std::fixed << std::setprecision(2)
            << 100.0 * n / cells << "%\n";
    log.unsetf(std::ios::floatfield);
    if (!d.errors.empty()) log << d.errors.size() << " cells failed; see phase_diagram.json\n";
    return ok;
}

inline int cmd_sweep(const Options& opt, std::ostream& log) {
    const auto c = detail::load("sweep", opt);
    if (!c.sweep) throw config_error("sweep", "required block missing");
    detail::prepare_out(opt.out);
    const auto& sc = *c.sweep;
    const SweepResult r = run_sweep(sc.protocol, c.system, c.drive);

    std::string csv = "k,nominal_mhz_over_2pi,effective_mhz_over_2pi,omega_mhz_over_2pi,confidence,low_confidence\n";
    for (const auto& s : r.steps)
        csv += std::to_string(s.index) + "," + io::fmt(detail::mhz(s.nominal)) + "," +
               io::fmt(detail::mhz(s.effective)) + "," + io::fmt(detail::mhz(s.omega)) + "," +
               io::fmt(s.confidence) + "," + (s.low_confidence ? "1" : "0") + "\n";
    io::write_text(opt.out / "sweep.csv", csv);

    if (!r.segments.empty()) {
        const auto det = r.nominal_detunings();
        const Spectrogram sg = build_spectrogram(r.segments, det, sc.protocol.t_drop, sc.spectrogram.window);
        io::write_text(opt.out / "spectrogram.csv", io::matrix_csv(sg.magnitudes, sg.rows(), sg.cols()));
        json side;
        side["rows"] = "frequency";
        side["cols"] = "nominal delta_m";
        json fs = json::array(), ds = json::array();
        for (double f : sg.freqs_hz) fs.push_back(f * 1e-6);
        for (double d : sg.detunings) ds.push_back(detail::mhz(d));
        side["freqs_mhz"] = std::move(fs);
        side["detunings_mhz_over_2pi"] = std::move(ds);
        side["normalization"] = "each column scaled to unit maximum";
        side["log_floor"] = sc.spectrogram.log_floor;
        io::write_json(opt.out / "spectrogram.json", side);
        if (sc.spectrogram.write_traces) {
            std::filesystem::create_directories(opt.out / "traces");
            for (std::size_t k = 0; k < r.segments.size(); ++k) {
                char name[32];
                std::snprintf(name, sizeof name, "segment_%04zu", k);
                io::write_trace_binary(opt.out / "traces" / name, r.segments[k], k);
            }
        }
    }

    json meta;
    meta["complete"] = r.complete();
    meta["steps_completed"] = r.steps.size();
    meta["steps_requested"] = sc.protocol.detunings.size();
    meta["error"] = r.error ? json(*r.error) : json(nullptr);
    io::write_json(opt.out / "sweep.json", meta);

    json resolved;
    resolved["system"] = detail::system_json(c.system);
    resolved["dt_us"] = sc.protocol.dt;
    resolved["t_total_us"] = sc.protocol.t_total;
    resolved["t_drop_us"] = sc.protocol.t_drop;
    resolved["memory_detuning"] = sc.protocol.memory_detuning;
    resolved["memory_state"] = sc.protocol.memory_state;
    resolved["fit_fraction"] = sc.protocol.fit_fraction;
    resolved["omega_initial_mhz_over_2pi"] = detail::mhz(sc.protocol.omega_initial);
    resolved["seed_state"] = {{"a", detail::complex_pair(r.seed.a)}, {"m", detail::complex_pair(r.seed.m)}};
    resolved["steps"] = sc.protocol.detunings.size();
    resolved["phase_residual_reference_rad2"] = phase_residual_reference;
    detail::write_manifest(opt.out, c, resolved);

    double max_omega = -std::numeric_limits<double>::infinity();
    for (const auto& s : r.steps) max_omega = std::max(max_omega, s.omega);
    log << r.steps.size() << "/" << sc.protocol.detunings.size() << " steps";
    if (!r.steps.empty()) log << ", max omega/2pi = " << detail::mhz(max_omega) << " MHz";
    log << "\n";
    if (r.error) log << "sweep halted: " << *r.error << "\n";
    return ok;
}

inline int cmd_fit_s11(const Options& opt, std::ostream& log) {
    const auto c = detail::load("fit-s11", opt);
    if (!c.fit) throw config_error("fit", "required block missing");
    const io::CalibrationTable t = io::read_calibration_csv(c.fit->input);
    std::vector<SpectrumPoint> pts;
    for (const auto& [f, s] : t.rows) pts.push_back({io::frequency_to_rate(f, t.freq_unit), s});
    detail::prepare_out(opt.out);
    const ReflectionFit fit = fit_s11(pts, c.fit->coupling);
    json r;
    r["omega_m_ghz_over_2pi"] = detail::mhz(fit.omega_m) * 1e-3;
    r["kappa_a_mhz_over_2pi"] = detail::mhz(fit.kappa_a);
    r["gamma_mhz_over_2pi"] = detail::mhz(fit.gamma);
    r["kappa_load_mhz_over_2pi"] = detail::mhz(fit.kappa_load());
    r["coupling"] = c.fit->coupling == Coupling::under ? "under" : "over";
    r["baseline_factor"] = fit.baseline;
    r["rms_misfit"] = fit.goodness;
    r["points"] = pts.size();
    io::write_json(opt.out / "fit.json", r);
    detail::write_manifest(opt.out, c, json::object());
    log << "omega_m/2pi = " << std::setprecision(10) << r["omega_m_ghz_over_2pi"].get<double>() << " GHz, kappa_a/2pi = "
        << std::setprecision(6) << r["kappa_a_mhz_over_2pi"].get<double>() << " MHz, gamma/2pi = "
        << r["gamma_mhz_over_2pi"].get<double>() << " MHz\n";
    return ok;
}

inline int cmd_fit_kittel(const Options& opt, std::ostream& log) {
    const auto c = detail::load("fit-kittel", opt);
    if (!c.fit) throw config_error("fit", "required block missing");
    const io::CalibrationTable t = io::read_calibration_csv(c.fit->input);
    std::vector<FieldPoint> pts;
    for (const auto& [b, f] : t.rows) pts.push_back({io::field_to_tesla(b, t.field_unit), io::frequency_to_rate(f, t.freq_unit)});
    KittelFit k;
    try {
        k = fit_kittel(pts);
    } catch (const domain_error& e) {
        throw config_error(c.fit->input.string(), e.what());
    }
    detail::prepare_out(opt.out);
    json r;
    r["gyromagnetic_mhz_per_mt"] = k.gyromagnetic_hz_per_tesla() * 1e-9;
    r["anisotropy_mt"] = k.anisotropy_tesla() * 1e3;
    r["rms_mhz"] = detail::mhz(k.rms);
    r["points"] = pts.size();
    if (c.fit->omega_ref) {
        json det = json::array();
        for (const auto& p : pts)
            det.push_back({{"field_mt", p.field * 1e3},
                           {"delta_m_mhz_over_2pi", detail::mhz(detuning_from_field(p.field, k, *c.fit->omega_ref))}});
        r["omega_ref_ghz_over_2pi"] = detail::mhz(*c.fit->omega_ref) * 1e-3;
        r["detunings"] = std::move(det);
    }
    io::write_json(opt.out / "fit.json", r);
    detail::write_manifest(opt.out, c, json::object());
    log << "gamma_e/2pi = " << r["gyromagnetic_mhz_per_mt"].get<double>() << " MHz/mT, mu0 H_A = "
        << r["anisotropy_mt"].get<double>() << " mT\n";
    return ok;
}

/// Dispatches a subcommand and maps exceptions to exit codes.
inline int run(const std::string& command, const Options& opt, std::ostream& log, std::ostream& err) {
    try {
        if (command == "fixed-points") return cmd_fixed_points(opt, log);
        if (command == "phase-diagram") return cmd_phase_diagram(opt, log);
        if (command == "sweep") return cmd_sweep(opt, log);
        if (command == "fit-s11") return cmd_fit_s11(opt, log);
        if (command == "fit-kittel") return cmd_fit_kittel(opt, log);
        err << "unknown command " << command << "\n";
        return invalid_input;
    } catch (const config_error& e) {
        err << "invalid input: " << e.what() << "\n";
        return invalid_input;
    } catch (const domain_error& e) {
        err << "invalid input: " << e.what() << "\n";
        return invalid_input;
    } catch (const numeric_error& e) {
        err << "numeric failure: " << e.what() << "\n";
        return numeric_failure;
    } catch (const consistency_error& e) {
        err << "internal consistency failure: " << e.what() << "\n";
        return numeric_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O failure: " << e.what() << "\n";
        return numeric_failure;
    }
}

} // namespace magnopol::cli
