#pragma once

#include "slowfast/model.hpp"
#include "slowfast/random.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace slowfast {

/// Euler-Maruyama step of dy = B(x, y) dt + C(x, y) dW on the torus.
///
/// Step k of a replica consumes normals k*l .. k*l + l - 1 of the stream
/// keyed by (seed, replica), so paths are reproducible under any schedule.
class FastStepper {
public:
    FastStepper(const SystemSpec& spec, std::uint64_t seed, std::uint64_t replica);

    /// Advances y by h with the slow argument held at x; wraps y.
    /// Returns false if the unwrapped state is not finite.
    bool step(std::span<const double> x, std::span<double> y, double h);

    /// Same update but also returns the unwrapped displacement (for coupling).
    bool step_with_noise(std::span<const double> x, std::span<double> y, double h,
                         std::span<const double> noise);

    /// Draws the next l standard normals of this replica's stream.
    void draw(std::span<double> noise);

private:
    const SystemSpec& spec_;
    NormalStream stream_;
    int l_;
    std::array<double, kMaxDim> b_{};
    std::array<double, kMaxDim * kMaxDim> c_{};
    std::array<double, kMaxDim> xi_{};
};

/// Number of steps of size dt covering [0, t_end], the last one possibly short.
[[nodiscard]] long step_count(double t_end, double dt);

struct FrozenFastPath {
    Vec times;
    Vec states;  // row-major, times.size() x dim_fast
    int dim_fast = 1;
    std::vector<double> period;  // torus period per fast axis
    Vec frozen_x;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] std::span<const double> state(std::size_t k) const {
        return {states.data() + k * static_cast<std::size_t>(dim_fast), static_cast<std::size_t>(dim_fast)};
    }
};

/// Frozen fast motion dy = B(x, y) dt + C(x, y) dW, y_0 = y0, on [0, t_end].
/// Throws SimulationBlowup naming the step index on a non-finite state.
[[nodiscard]] FrozenFastPath simulate_frozen(const SystemSpec& spec, std::span<const double> x,
                                             std::span<const double> y0, double t_end, double dt,
                                             std::uint64_t seed);

struct OccupationMeasure {
    int dim_fast = 1;
    int bins = 0;  // per axis
    std::vector<Vec> bin_edges;  // per axis, bins + 1 entries
    Vec mass;  // bins^dim_fast entries, axis 0 fastest
    double total_time = 0.0;

    [[nodiscard]] Vec bin_center(std::size_t flat_index) const;
};

/// Time-weighted histogram; each state carries the duration until the next.
[[nodiscard]] OccupationMeasure occupation(const FrozenFastPath& path, const TorusGeometry& geometry, int bins);
[[nodiscard]] OccupationMeasure occupation(const FrozenFastPath& path, int bins);

/// (1/t_end) * integral of f(x, y^x_s) ds along one frozen path from y0.
[[nodiscard]] Vec invariant_average_f(const SystemSpec& spec, std::span<const double> x, double t_end,
                                      double dt, std::uint64_t seed, std::span<const double> y0 = {});

void write_csv(std::ostream& os, const FrozenFastPath& path);
void write_csv(std::ostream& os, const OccupationMeasure& occ);

}  // namespace slowfast
