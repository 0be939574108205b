#pragma once

#include "magnopol/model.hpp"

#include <cstddef>
#include <vector>

namespace magnopol {

/// Uniformly sampled trace of both mode amplitudes. Sample i sits at
/// times[i] = times[0] + i * dt (us); amplitudes are in physical units.
struct TrajectorySegment {
    double dt = 0.0;
    std::vector<double> times;
    std::vector<cplx> a_samples;
    std::vector<cplx> m_samples;
    double detuning_used = 0.0;  // magnon detuning applied for this segment, rad/us
    ModeState final_state;

    [[nodiscard]] std::size_t size() const { return a_samples.size(); }

    /// Index of the first sample at or after `t_drop` measured from the segment start.
    [[nodiscard]] std::size_t first_index_after(double t_drop) const {
        if (times.empty()) return 0;
        const double t0 = times.front();
        std::size_t i = 0;
        while (i < times.size() && times[i] - t0 < t_drop - 1e-9 * dt) ++i;
        return i;
    }
};

} // namespace magnopol
