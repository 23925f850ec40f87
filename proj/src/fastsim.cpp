#include "slowfast/fastsim.hpp"

#include "slowfast/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace slowfast {

FastStepper::FastStepper(const SystemSpec& spec, std::uint64_t seed, std::uint64_t replica)
    : spec_(spec), stream_(seed, replica), l_(spec.dim_fast()) {}

void FastStepper::draw(std::span<double> noise) {
    for (int j = 0; j < l_; ++j) noise[static_cast<std::size_t>(j)] = stream_.next();
}

bool FastStepper::step(std::span<const double> x, std::span<double> y, double h) {
    draw(xi_);
    return step_with_noise(x, y, h, {xi_.data(), static_cast<std::size_t>(l_)});
}

bool FastStepper::step_with_noise(std::span<const double> x, std::span<double> y, double h,
                                  std::span<const double> noise) {
    const auto l = static_cast<std::size_t>(l_);
    spec_.B(x, y, {b_.data(), l});
    spec_.C(x, y, {c_.data(), l * l});
    const double sq = std::sqrt(h);
    bool finite = true;
    for (std::size_t i = 0; i < l; ++i) {
        double inc = b_[i] * h;
        for (std::size_t k = 0; k < l; ++k) inc += c_[i * l + k] * sq * noise[k];
        y[i] += inc;
        finite = finite && std::isfinite(y[i]);
    }
    if (finite) spec_.geometry.wrap(y);
    return finite;
}

long step_count(double t_end, double dt) {
    require(dt > 0.0 && t_end > 0.0, "step sizes and horizons must be positive");
    require(dt <= t_end * (1.0 + 1e-12), "dt must not exceed the horizon");
    const double r = t_end / dt;
    auto n = static_cast<long>(std::ceil(r - 1e-9));
    return std::max(1L, n);
}

FrozenFastPath simulate_frozen(const SystemSpec& spec, std::span<const double> x, std::span<const double> y0,
                               double t_end, double dt, std::uint64_t seed) {
    const int l = spec.dim_fast();
    require(static_cast<int>(x.size()) == spec.dim_slow, "simulate_frozen: x has wrong dimension");
    require(static_cast<int>(y0.size()) == l, "simulate_frozen: y0 has wrong dimension");
    const long n = step_count(t_end, dt);

    FrozenFastPath path;
    path.dim_fast = l;
    path.period = spec.geometry.period;
    path.frozen_x.assign(x.begin(), x.end());
    path.seed = seed;
    path.times.reserve(static_cast<std::size_t>(n + 1));
    path.states.reserve(static_cast<std::size_t>((n + 1) * l));

    Vec y(y0.begin(), y0.end());
    spec.geometry.wrap(y);
    path.times.push_back(0.0);
    path.states.insert(path.states.end(), y.begin(), y.end());

    FastStepper stepper(spec, seed, 0);
    for (long k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const double t1 = (k == n - 1) ? t_end : static_cast<double>(k + 1) * dt;
        if (!stepper.step(x, y, t1 - t0))
            throw SimulationBlowup(fmt::format("frozen fast simulation blew up at step {}", k), k);
        path.times.push_back(t1);
        path.states.insert(path.states.end(), y.begin(), y.end());
    }
    return path;
}

Vec OccupationMeasure::bin_center(std::size_t flat_index) const {
    Vec c(static_cast<std::size_t>(dim_fast));
    for (int a = 0; a < dim_fast; ++a) {
        const std::size_t i = flat_index % static_cast<std::size_t>(bins);
        flat_index /= static_cast<std::size_t>(bins);
        const auto& e = bin_edges[static_cast<std::size_t>(a)];
        c[static_cast<std::size_t>(a)] = 0.5 * (e[i] + e[i + 1]);
    }
    return c;
}

OccupationMeasure occupation(const FrozenFastPath& path, const TorusGeometry& geometry, int bins) {
    require(path.size() >= 1, "occupation: empty path");
    require(bins >= 2, "occupation: need at least 2 bins");
    require(path.dim_fast == geometry.dim_fast, "occupation: geometry does not match path");
    OccupationMeasure occ;
    occ.dim_fast = path.dim_fast;
    occ.bins = bins;
    std::size_t cells = 1;
    for (int a = 0; a < path.dim_fast; ++a) {
        const double p = geometry.period[static_cast<std::size_t>(a)];
        Vec e(static_cast<std::size_t>(bins) + 1);
        for (int i = 0; i <= bins; ++i) e[static_cast<std::size_t>(i)] = p * i / bins;
        occ.bin_edges.push_back(std::move(e));
        cells *= static_cast<std::size_t>(bins);
    }
    occ.mass.assign(cells, 0.0);

    auto cell_of = [&](std::span<const double> y) {
        std::size_t flat = 0, stride = 1;
        for (int a = 0; a < path.dim_fast; ++a) {
            const double p = geometry.period[static_cast<std::size_t>(a)];
            auto i = static_cast<long>(std::floor(geometry.wrap_coord(y[static_cast<std::size_t>(a)], a) / p * bins));
            i = std::clamp(i, 0L, static_cast<long>(bins) - 1);
            flat += static_cast<std::size_t>(i) * stride;
            stride *= static_cast<std::size_t>(bins);
        }
        return flat;
    };

    if (path.size() == 1) {
        occ.mass[cell_of(path.state(0))] = 1.0;
        return occ;
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double w = path.times[k + 1] - path.times[k];
        occ.mass[cell_of(path.state(k))] += w;
        total += w;
    }
    for (double& m : occ.mass) m /= total;
    occ.total_time = total;
    return occ;
}

OccupationMeasure occupation(const FrozenFastPath& path, int bins) {
    require(static_cast<int>(path.period.size()) == path.dim_fast, "occupation: path has no torus period");
    return occupation(path, TorusGeometry(path.dim_fast, path.period), bins);
}

Vec invariant_average_f(const SystemSpec& spec, std::span<const double> x, double t_end, double dt,
                        std::uint64_t seed, std::span<const double> y0) {
    const int d = spec.dim_slow;
    const int l = spec.dim_fast();
    require(static_cast<int>(x.size()) == d, "invariant_average_f: x has wrong dimension");
    Vec y(static_cast<std::size_t>(l), 0.0);
    if (!y0.empty()) {
        require(static_cast<int>(y0.size()) == l, "invariant_average_f: y0 has wrong dimension");
        y.assign(y0.begin(), y0.end());
    }
    spec.geometry.wrap(y);
    const long n = step_count(t_end, dt);
    Vec acc(static_cast<std::size_t>(d), 0.0), fv(static_cast<std::size_t>(d));
    FastStepper stepper(spec, seed, 0);
    for (long k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * dt;
        const double t1 = (k == n - 1) ? t_end : static_cast<double>(k + 1) * dt;
        const double h = t1 - t0;
        spec.f(x, y, fv);
        for (int i = 0; i < d; ++i) acc[static_cast<std::size_t>(i)] += fv[static_cast<std::size_t>(i)] * h;
        if (!stepper.step(x, y, h))
            throw SimulationBlowup(fmt::format("frozen fast simulation blew up at step {}", k), k);
    }
    for (double& a : acc) a /= t_end;
    return acc;
}

void write_csv(std::ostream& os, const FrozenFastPath& path) {
    std::vector<std::string> header{"t"};
    for (auto& h : io::indexed("y", path.dim_fast)) header.push_back(h);
    io::CsvWriter w(os, header);
    for (std::size_t k = 0; k < path.size(); ++k) {
        Vec row{path.times[k]};
        auto s = path.state(k);
        row.insert(row.end(), s.begin(), s.end());
        w.row_numbers(row);
    }
}

void write_csv(std::ostream& os, const OccupationMeasure& occ) {
    std::vector<std::string> header = io::indexed("bin_center", occ.dim_fast);
    header.emplace_back("mass");
    io::CsvWriter w(os, header);
    for (std::size_t i = 0; i < occ.mass.size(); ++i) {
        Vec row = occ.bin_center(i);
        row.push_back(occ.mass[i]);
        w.row_numbers(row);
    }
}

}  // namespace slowfast
