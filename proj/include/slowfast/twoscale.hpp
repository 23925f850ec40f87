#pragma once

#include "slowfast/fastsim.hpp"
#include "slowfast/model.hpp"

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

struct SimConfig {
    double epsilon = 0.1;
    double T = 1.0;
    /// Step in the rescaled fast time; the original-time step is dt_fast * eps^2.
    double dt_fast = 0.01;
    std::uint64_t seed = 0;
    long replicas = 1;

    /// Throws InvalidArgument on eps outside (0, 1], dt_fast outside (0, 0.01], etc.
    void validate() const;
};

/// Fast block length t(eps) and slow block Delta of the two-scale partition,
/// with the tolerance nu.
struct TwoScaleSchedule {
    double Delta = 0.2;
    double t_eps = 1.0;
    double nu = 0.05;

    /// t(eps) = c * sqrt(log(1/eps)).
    [[nodiscard]] static TwoScaleSchedule for_epsilon(double eps, double Delta, double nu, double c = 1.0);
    /// t_eps * eps^2 <= Delta and t_eps / log(1/eps) <= cap.
    void validate(double eps, double cap = 2.0) const;
};

struct CoupledTrajectory {
    Vec times;
    Vec slow;  // times.size() x dim_slow
    Vec fast;  // times.size() x dim_fast
    int dim_slow = 1;
    int dim_fast = 1;
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;

    [[nodiscard]] std::size_t size() const { return times.size(); }
    [[nodiscard]] std::span<const double> x(std::size_t k) const {
        return {slow.data() + k * static_cast<std::size_t>(dim_slow), static_cast<std::size_t>(dim_slow)};
    }
    [[nodiscard]] std::span<const double> y(std::size_t k) const {
        return {fast.data() + k * static_cast<std::size_t>(dim_fast), static_cast<std::size_t>(dim_fast)};
    }
};

/// Euler-Maruyama for dX = f dt, dY = eps^-2 B dt + eps^-1 C dW over [0, T]
/// with step dt_fast * eps^2. `observe(t, X, Y)` runs at t = 0 and after every
/// step; returning false stops the run. Replica r uses stream r of `seed`.
template <typename Observer>
void run_coupled(const SystemSpec& spec, std::span<const double> x0, std::span<const double> y0, double eps,
                 double T, double dt_fast, std::uint64_t seed, std::uint64_t replica, Observer&& observe) {
    const auto d = static_cast<std::size_t>(spec.dim_slow);
    const auto l = static_cast<std::size_t>(spec.dim_fast());
    const double h = dt_fast * eps * eps;
    const long n = step_count(T, h);
    std::array<double, kMaxDim> X{}, Y{}, fv{};
    std::copy(x0.begin(), x0.end(), X.begin());
    std::copy(y0.begin(), y0.end(), Y.begin());
    std::span<double> xs(X.data(), d), ys(Y.data(), l), fs(fv.data(), d);
    spec.geometry.wrap(ys);
    FastStepper stepper(spec, seed, replica);
    if (!observe(0.0, std::span<const double>(xs), std::span<const double>(ys))) return;
    for (long k = 0; k < n; ++k) {
        const double t0 = static_cast<double>(k) * h;
        const double t1 = (k == n - 1) ? T : static_cast<double>(k + 1) * h;
        const double hk = t1 - t0;
        spec.f(xs, ys, fs);
        if (!stepper.step(xs, ys, hk / (eps * eps)))
            throw SimulationBlowup(fmt::format("coupled simulation (replica {}) blew up at step {}", replica, k), k);
        bool finite = true;
        for (std::size_t i = 0; i < d; ++i) {
            X[i] += fv[i] * hk;
            finite = finite && std::isfinite(X[i]);
        }
        if (!finite)
            throw SimulationBlowup(fmt::format("coupled simulation (replica {}) blew up at step {}", replica, k), k);
        if (!observe(t1, std::span<const double>(xs), std::span<const double>(ys))) return;
    }
}

/// One recorded trajectory (replica `replica` of cfg.seed), keeping every
/// `record_every`-th step plus the final one.
[[nodiscard]] CoupledTrajectory simulate_coupled(const SystemSpec& spec, std::span<const double> x0,
                                                 std::span<const double> y0, const SimConfig& cfg,
                                                 std::uint64_t replica = 0, long record_every = 1);

/// X_T for cfg.replicas replicas, row-major replicas x d.
[[nodiscard]] Vec coupled_endpoints(const SystemSpec& spec, std::span<const double> x0, std::span<const double> y0,
                                    const SimConfig& cfg, int jobs = 0);

struct CouplingError {
    /// Mean over replicas of sup_{t <= t_eps} |y_t - y^x_t|^2 (torus distance).
    double mean_sq_sup = 0.0;
    double stderr_ = 0.0;
    long replicas = 0;
};

/// True fast motion (slow variable moving, X_0 = x) against the frozen one,
/// driven by the same Gaussian increments over rescaled time [0, t_eps].
[[nodiscard]] CouplingError coupling_error(const SystemSpec& spec, std::span<const double> x, const SimConfig& cfg,
                                           double t_eps, std::span<const double> y0 = {}, int jobs = 0);

struct BlockRate {
    int index = 0;
    double t_start = 0.0;  // rescaled fast time
    /// t_eps^-1 log-mean-exp of beta . int_block f(x', Y) over the block.
    double rate = 0.0;
    double deviation = 0.0;  // |rate - H_ref|
    double ess = 0.0;
};

struct Lemma5Report {
    double lambda_hat = 0.0;
    double delta_H = 0.0;
    double nu = 0.0;
    /// |lambda_hat - delta_H| / Delta.
    double nu_hat = 0.0;
    bool pass = false;
    double stderr_ = 0.0;
    double ess = 0.0;
    long replicas = 0;
    bool unreliable = false;
    double epsilon = 0.0;
    double Delta = 0.0;
    double t_eps = 0.0;
    std::vector<BlockRate> blocks;
    double block_nu_hat = 0.0;
};

/// Lambda-hat = eps^2 log mean exp(beta eps^-2 int_0^Delta f(x', Y_s) ds) over
/// cfg.replicas coupled runs from (x, y0), compared with Delta * H_ref.
[[nodiscard]] Lemma5Report verify_lemma5(const SystemSpec& spec, std::span<const double> x_prime,
                                         std::span<const double> x, std::span<const double> beta,
                                         const SimConfig& cfg, const TwoScaleSchedule& schedule, double H_ref,
                                         std::span<const double> y0 = {}, int jobs = 0);

/// CSV columns t, x_1.., y_1...
void write_csv(std::ostream& os, const CoupledTrajectory& traj);
[[nodiscard]] std::string lemma5_json(const Lemma5Report& r);

}  // namespace slowfast
