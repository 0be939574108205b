#pragma once

// Phase diagrams: integer maps of stable / unstable fixed-point counts over a
// 2-D grid. Rows index the magnon detuning (linear axis), columns index either
// the empty-cavity photon number n0 (log axis) or the effective gain (linear).

#include "magnopol/errors.hpp"
#include "magnopol/model.hpp"
#include "magnopol/stability.hpp"
#include "magnopol/steady.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <vector>

namespace magnopol {

enum class XAxis { n0, gain };

inline const char* to_string(XAxis x) { return x == XAxis::n0 ? "n0" : "gain"; }

struct GridSpec {
    SystemParams base;            // kind selects passive / active
    XAxis x_axis = XAxis::n0;
    double x_min = 0.0, x_max = 0.0;  // n0 in quanta, gain in rad/us
    int nx = 2;
    double y_min = 0.0, y_max = 0.0;  // delta_m, rad/us
    int ny = 2;

    void validate() const {
        base.validate();
        if (nx < 2 || ny < 2) throw domain_error("grid needs at least 2 points per axis");
        if (!(x_max >= x_min) || !(y_max >= y_min)) throw domain_error("grid range must be ordered");
        if (x_axis == XAxis::n0 && !(x_min > 0.0))
            throw domain_error("log-sampled n0 axis requires a strictly positive range");
        if (x_axis == XAxis::gain && base.kind != SystemKind::active)
            throw domain_error("gain axis only applies to the active system");
    }

    [[nodiscard]] double x_at(int i) const {
        const double f = static_cast<double>(i) / (nx - 1);
        if (x_axis == XAxis::n0) return x_min * std::pow(x_max / x_min, f);
        return x_min + (x_max - x_min) * f;
    }
    [[nodiscard]] double y_at(int j) const {
        return y_min + (y_max - y_min) * static_cast<double>(j) / (ny - 1);
    }
};

/// Empty-cavity photon number -> drive, inverting n0 = |eta|^2 / ((kappa/2)^2 + dc^2)
/// through the input power.
[[nodiscard]] inline DriveSpec n0_to_drive_passive(double n0, const SystemParams& p) {
    if (!(n0 >= 0.0)) throw domain_error("n0 must be >= 0");
    if (p.kappa_ext == 0.0) throw domain_error("n0 -> power mapping is degenerate for kappa_ext = 0");
    if (!(p.omega_d > 0.0)) throw domain_error("n0 -> power mapping requires omega_d > 0");
    const double denom = 0.25 * p.kappa * p.kappa + p.delta_c * p.delta_c;  // (rad/us)^2
    const double eta2_si = n0 * denom * units::us_per_s * units::us_per_s;  // 1/s^2
    const double power = eta2_si * units::hbar * units::rad_per_s_from_rate(p.omega_d) /
                         units::rad_per_s_from_rate(p.kappa_ext);
    return eta_from_power(power, p);
}

[[nodiscard]] inline double n0_from_drive_passive(const DriveSpec& d, const SystemParams& p) {
    const double denom = 0.25 * p.kappa * p.kappa + p.delta_c * p.delta_c;
    if (denom == 0.0) throw domain_error("n0 undefined for kappa = delta_c = 0");
    return d.eta * d.eta / denom;
}

/// Isolated van der Pol occupation n0 = G_eff / Gamma, inverted.
[[nodiscard]] inline double n0_to_gain_active(double n0, const SystemParams& p) {
    if (!(n0 >= 0.0)) throw domain_error("n0 must be >= 0");
    return n0 * p.gamma_sat;
}

class IntGrid {
public:
    IntGrid() = default;
    IntGrid(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, 0) {}
    [[nodiscard]] int rows() const { return rows_; }
    [[nodiscard]] int cols() const { return cols_; }
    int& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    int operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    bool operator==(const IntGrid&) const = default;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<int> data_;
};

struct CellCounts {
    int stable = 0;
    int unstable = 0;
    int marginal = 0;
    [[nodiscard]] int total() const { return stable + unstable + marginal; }
};

/// Phase label such as "2S+1U"; marginal solutions append "+1M"; empty cells are "blank".
[[nodiscard]] inline std::string phase_label(const CellCounts& c) {
    if (c.total() == 0) return "blank";
    std::string s = std::to_string(c.stable) + "S+" + std::to_string(c.unstable) + "U";
    if (c.marginal > 0) s += "+" + std::to_string(c.marginal) + "M";
    return s;
}

struct PhaseDiagram {
    GridSpec grid;
    IntGrid stable_count, unstable_count, marginal_count;  // rows = delta_m, cols = x
    IntGrid cell_error;                                    // 1 where the cell solver threw
    std::vector<std::string> errors;                       // "row,col: message", row-major order

    [[nodiscard]] CellCounts counts(int row, int col) const {
        return {stable_count(row, col), unstable_count(row, col), marginal_count(row, col)};
    }
    [[nodiscard]] bool blank(int row, int col) const { return counts(row, col).total() == 0; }
    [[nodiscard]] std::string label(int row, int col) const { return phase_label(counts(row, col)); }

    /// Number of cells per phase label.
    [[nodiscard]] std::map<std::string, int> summary() const {
        std::map<std::string, int> out;
        for (int r = 0; r < grid.ny; ++r)
            for (int c = 0; c < grid.nx; ++c) ++out[label(r, c)];
        return out;
    }
};

/// Parameters and drive for one grid cell.
struct CellSetup {
    SystemParams params;
    DriveSpec drive;
};

[[nodiscard]] inline CellSetup cell_setup(const GridSpec& grid, int row, int col) {
    CellSetup s{grid.base, {}};
    s.params.delta_m = grid.y_at(row);
    const double x = grid.x_at(col);
    if (grid.base.kind == SystemKind::passive) {
        s.drive = n0_to_drive_passive(x, s.params);
    } else {
        s.params.gain = grid.x_axis == XAxis::n0 ? n0_to_gain_active(x, s.params) : x;
        s.params.gain_absorbed = true;
    }
    return s;
}

[[nodiscard]] inline CellCounts evaluate_cell(const SystemParams& params, const DriveSpec& drive) {
    CellCounts c;
    for (const FixedPoint& fp : fixed_points(params, drive)) {
        if (!counts_toward_phase(fp, params)) continue;
        const StabilityReport rep = classify(fp, params);
        if (rep.marginal)
            ++c.marginal;
        else if (rep.is_stable)
            ++c.stable;
        else
            ++c.unstable;
    }
    return c;
}

/// Evaluates every cell independently. Rows are handed out to `threads`
/// workers; each cell owns its output slot so the result does not depend on
/// the partitioning.
[[nodiscard]] inline PhaseDiagram scan(const GridSpec& grid, unsigned threads = 1) {
    grid.validate();
    PhaseDiagram d;
    d.grid = grid;
    d.stable_count = IntGrid(grid.ny, grid.nx);
    d.unstable_count = IntGrid(grid.ny, grid.nx);
    d.marginal_count = IntGrid(grid.ny, grid.nx);
    d.cell_error = IntGrid(grid.ny, grid.nx);
    std::vector<std::string> messages(static_cast<std::size_t>(grid.nx) * grid.ny);

    std::atomic<int> next_row{0};
    auto worker = [&] {
        for (int r = next_row++; r < grid.ny; r = next_row++) {
            for (int c = 0; c < grid.nx; ++c) {
                try {
                    const CellSetup s = cell_setup(grid, r, c);
                    const CellCounts cc = evaluate_cell(s.params, s.drive);
                    d.stable_count(r, c) = cc.stable;
                    d.unstable_count(r, c) = cc.unstable;
                    d.marginal_count(r, c) = cc.marginal;
                } catch (const std::exception& e) {
                    d.cell_error(r, c) = 1;
                    messages[static_cast<std::size_t>(r) * grid.nx + c] = e.what();
                }
            }
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(grid.ny)));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (int r = 0; r < grid.ny; ++r)
        for (int c = 0; c < grid.nx; ++c)
            if (d.cell_error(r, c))
                d.errors.push_back(std::to_string(r) + "," + std::to_string(c) + ": " +
                                   messages[static_cast<std::size_t>(r) * grid.nx + c]);
    return d;
}

} // namespace magnopol
