#pragma once

#include "slowfast/model.hpp"

#include <span>
#include <vector>

namespace slowfast {

/// Per-direction range [m_v, M_v] of v . f(x, .) over the fast torus.
///
/// The rate function L(x, .) is finite only for velocities alpha with
/// m_v < alpha . v < M_v in every nondegenerate direction v, and with
/// alpha . v = m_v = M_v in degenerate ones.
struct DomainBox {
    std::vector<Vec> directions;
    Vec m;
    Vec M;
    std::vector<bool> degenerate;

    [[nodiscard]] std::size_t size() const { return directions.size(); }
    [[nodiscard]] bool unbounded() const { return directions.empty(); }

    /// True when alpha is in the finite-rate region described above.
    [[nodiscard]] bool admits(std::span<const double> alpha, double degenerate_tol = 1e-9) const;
};

/// Coordinate axes, plus normalized pairwise diagonals when d > 1.
[[nodiscard]] std::vector<Vec> default_directions(int d);

/// Dense scan of v . f(x, .) on grid_n points per fast axis, refined by a
/// local golden-section search around the extremal nodes. A direction is
/// degenerate when M_v - m_v < 1e-9.
[[nodiscard]] DomainBox domain_box(const SystemSpec& spec, std::span<const double> x,
                                   const std::vector<Vec>& directions, int grid_n = 64);

}  // namespace slowfast
