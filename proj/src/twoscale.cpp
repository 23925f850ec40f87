#include "slowfast/twoscale.hpp"

#include "slowfast/io.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stats.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace slowfast {

void SimConfig::validate() const {
    require(epsilon > 0.0 && epsilon <= 1.0, "SimConfig: epsilon must lie in (0, 1]");
    require(T > 0.0, "SimConfig: T must be positive");
    require(dt_fast > 0.0 && dt_fast <= 0.01, "SimConfig: dt_fast must lie in (0, 0.01]");
    require(replicas >= 1, "SimConfig: replicas must be >= 1");
}

TwoScaleSchedule TwoScaleSchedule::for_epsilon(double eps, double Delta, double nu, double c) {
    require(eps > 0.0 && eps < 1.0, "schedule: epsilon must lie in (0, 1)");
    return {Delta, c * std::sqrt(std::log(1.0 / eps)), nu};
}

void TwoScaleSchedule::validate(double eps, double cap) const {
    require(Delta > 0.0 && t_eps > 0.0 && nu > 0.0, "schedule: Delta, t_eps and nu must be positive");
    require(t_eps * eps * eps <= Delta * (1.0 + 1e-12), "schedule: t_eps * eps^2 must not exceed Delta");
    if (eps < 1.0)
        require(t_eps / std::log(1.0 / eps) <= cap,
                fmt::format("schedule: t_eps / log(1/eps) = {} exceeds the cap {}", t_eps / std::log(1.0 / eps), cap));
}

namespace {

Vec start_point(std::span<const double> y0, int l) {
    Vec y(static_cast<std::size_t>(l), 0.0);
    if (!y0.empty()) {
        require(static_cast<int>(y0.size()) == l, "fast start point has wrong dimension");
        y.assign(y0.begin(), y0.end());
    }
    return y;
}

}  // namespace

CoupledTrajectory simulate_coupled(const SystemSpec& spec, std::span<const double> x0, std::span<const double> y0,
                                   const SimConfig& cfg, std::uint64_t replica, long record_every) {
    cfg.validate();
    require(static_cast<int>(x0.size()) == spec.dim_slow, "simulate_coupled: x0 has wrong dimension");
    require(record_every >= 1, "simulate_coupled: record_every must be >= 1");
    const Vec y = start_point(y0, spec.dim_fast());
    CoupledTrajectory tr;
    tr.dim_slow = spec.dim_slow;
    tr.dim_fast = spec.dim_fast();
    tr.seed = cfg.seed;
    tr.replica = replica;
    const long n = step_count(cfg.T, cfg.dt_fast * cfg.epsilon * cfg.epsilon);
    long k = 0;
    run_coupled(spec, x0, y, cfg.epsilon, cfg.T, cfg.dt_fast, cfg.seed, replica,
                [&](double t, std::span<const double> X, std::span<const double> Y) {
                    if (k % record_every == 0 || k == n) {
                        tr.times.push_back(t);
                        tr.slow.insert(tr.slow.end(), X.begin(), X.end());
                        tr.fast.insert(tr.fast.end(), Y.begin(), Y.end());
                    }
                    ++k;
                    return true;
                });
    return tr;
}

Vec coupled_endpoints(const SystemSpec& spec, std::span<const double> x0, std::span<const double> y0,
                      const SimConfig& cfg, int jobs) {
    cfg.validate();
    const auto d = static_cast<std::size_t>(spec.dim_slow);
    require(x0.size() == d, "coupled_endpoints: x0 has wrong dimension");
    const Vec y = start_point(y0, spec.dim_fast());
    Vec out(static_cast<std::size_t>(cfg.replicas) * d);
    parallel_for(static_cast<std::size_t>(cfg.replicas), jobs, [&](std::size_t r) {
        run_coupled(spec, x0, y, cfg.epsilon, cfg.T, cfg.dt_fast, cfg.seed, r,
                    [&](double, std::span<const double> X, std::span<const double>) {
                        std::copy(X.begin(), X.end(), out.begin() + static_cast<std::ptrdiff_t>(r * d));
                        return true;
                    });
    });
    return out;
}

CouplingError coupling_error(const SystemSpec& spec, std::span<const double> x, const SimConfig& cfg, double t_eps,
                             std::span<const double> y0, int jobs) {
    cfg.validate();
    require(t_eps > 0.0, "coupling_error: t_eps must be positive");
    require(t_eps * cfg.epsilon * cfg.epsilon <= cfg.T * (1.0 + 1e-12), "coupling_error: t_eps * eps^2 must not exceed T");
    const auto d = static_cast<std::size_t>(spec.dim_slow);
    const auto l = static_cast<std::size_t>(spec.dim_fast());
    require(x.size() == d, "coupling_error: x has wrong dimension");
    const Vec y = start_point(y0, spec.dim_fast());
    const long n = step_count(t_eps, cfg.dt_fast);
    const double eps2 = cfg.epsilon * cfg.epsilon;
    Vec sup_sq(static_cast<std::size_t>(cfg.replicas));

    parallel_for(static_cast<std::size_t>(cfg.replicas), jobs, [&](std::size_t r) {
        FastStepper true_step(spec, cfg.seed, r);
        FastStepper frozen_step(spec, cfg.seed, r);
        std::array<double, kMaxDim> X{}, Yt{}, Yf{}, fv{}, xi{};
        std::copy(x.begin(), x.end(), X.begin());
        std::copy(y.begin(), y.end(), Yt.begin());
        std::span<double> xs(X.data(), d), yt(Yt.data(), l), yf(Yf.data(), l), fs(fv.data(), d), ns(xi.data(), l);
        spec.geometry.wrap(yt);
        std::copy(Yt.begin(), Yt.end(), Yf.begin());
        double worst = 0.0;
        for (long k = 0; k < n; ++k) {
            const double t0 = static_cast<double>(k) * cfg.dt_fast;
            const double hk = (k == n - 1) ? t_eps - t0 : cfg.dt_fast;
            true_step.draw(ns);
            spec.f(xs, yt, fs);
            const bool ok_t = true_step.step_with_noise(xs, yt, hk, ns);
            const bool ok_f = frozen_step.step_with_noise(x, yf, hk, ns);
            if (!ok_t || !ok_f)
                throw SimulationBlowup(fmt::format("coupling run (replica {}) blew up at step {}", r, k), k);
            for (std::size_t i = 0; i < d; ++i) X[i] += fv[i] * hk * eps2;
            const double dist = spec.geometry.distance(yt, yf);
            worst = std::max(worst, dist * dist);
        }
        sup_sq[r] = worst;
    });
    const MeanVar mv = mean_var(sup_sq);
    return {mv.mean, std::sqrt(mv.variance / static_cast<double>(cfg.replicas)), cfg.replicas};
}

Lemma5Report verify_lemma5(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
                           std::span<const double> beta, const SimConfig& cfg, const TwoScaleSchedule& schedule,
                           double H_ref, std::span<const double> y0, int jobs) {
    cfg.validate();
    schedule.validate(cfg.epsilon);
    const auto d = static_cast<std::size_t>(spec.dim_slow);
    require(x_prime.size() == d && x.size() == d && beta.size() == d,
            "verify_lemma5: x', x and beta must have the slow dimension");
    const Vec y = start_point(y0, spec.dim_fast());
    const double eps2 = cfg.epsilon * cfg.epsilon;
    const double horizon = schedule.Delta / eps2;  // rescaled fast time
    const auto n_blocks = static_cast<std::size_t>(std::floor(horizon / schedule.t_eps + 1e-9));
    const auto R = static_cast<std::size_t>(cfg.replicas);
    Vec z(R), zb(R * n_blocks, 0.0);

    parallel_for(R, jobs, [&](std::size_t r) {
        std::array<double, kMaxDim> fv{};
        std::span<double> fs(fv.data(), d);
        double acc = 0.0, last_t = 0.0;
        std::array<double, kMaxDim> prev{};
        std::copy(y.begin(), y.end(), prev.begin());
        spec.geometry.wrap({prev.data(), y.size()});
        run_coupled(spec, x, y, cfg.epsilon, schedule.Delta, cfg.dt_fast, cfg.seed, r,
                    [&](double t, std::span<const double>, std::span<const double> Y) {
                        if (t > 0.0) {
                            // left point of the step just taken
                            spec.f(x_prime, {prev.data(), Y.size()}, fs);
                            double bf = 0.0;
                            for (std::size_t i = 0; i < d; ++i) bf += beta[i] * fv[i];
                            const double s0 = last_t / eps2;
                            const double inc = bf * (t - last_t) / eps2;
                            acc += inc;
                            const auto b = static_cast<std::size_t>(std::floor(s0 / schedule.t_eps + 1e-12));
                            if (b < n_blocks) zb[r * n_blocks + b] += inc;
                        }
                        std::copy(Y.begin(), Y.end(), prev.begin());
                        last_t = t;
                        return true;
                    });
        z[r] = acc;
    });

    const LogMeanExp lme = log_mean_exp(z);
    Lemma5Report rep;
    rep.lambda_hat = eps2 * lme.value;
    rep.delta_H = schedule.Delta * H_ref;
    rep.nu = schedule.nu;
    rep.nu_hat = std::abs(rep.lambda_hat - rep.delta_H) / schedule.Delta;
    rep.pass = rep.nu_hat <= schedule.nu;
    rep.stderr_ = eps2 * lme.stderr_log;
    rep.ess = lme.ess;
    rep.replicas = cfg.replicas;
    rep.unreliable = lme.ess < 10.0;
    rep.epsilon = cfg.epsilon;
    rep.Delta = schedule.Delta;
    rep.t_eps = schedule.t_eps;
    Vec col(R);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        for (std::size_t r = 0; r < R; ++r) col[r] = zb[r * n_blocks + b];
        const LogMeanExp lb = log_mean_exp(col);
        BlockRate br;
        br.index = static_cast<int>(b);
        br.t_start = static_cast<double>(b) * schedule.t_eps;
        br.rate = lb.value / schedule.t_eps;
        br.deviation = std::abs(br.rate - H_ref);
        br.ess = lb.ess;
        rep.block_nu_hat = std::max(rep.block_nu_hat, br.deviation);
        rep.blocks.push_back(br);
    }
    return rep;
}

void write_csv(std::ostream& os, const CoupledTrajectory& traj) {
    std::vector<std::string> header{"t"};
    for (auto& h : io::indexed("x", traj.dim_slow)) header.push_back(h);
    for (auto& h : io::indexed("y", traj.dim_fast)) header.push_back(h);
    io::CsvWriter w(os, header);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        Vec row{traj.times[k]};
        const auto a = traj.x(k), b = traj.y(k);
        row.insert(row.end(), a.begin(), a.end());
        row.insert(row.end(), b.begin(), b.end());
        w.row_numbers(row);
    }
}

std::string lemma5_json(const Lemma5Report& r) {
    nlohmann::json blocks = nlohmann::json::array();
    for (const auto& b : r.blocks)
        blocks.push_back({{"index", b.index}, {"t_start", b.t_start}, {"rate", b.rate}, {"deviation", b.deviation},
                          {"ess", b.ess}});
    nlohmann::json j{{"lambda_hat", r.lambda_hat}, {"delta_H", r.delta_H},   {"nu", r.nu},
                     {"nu_hat", r.nu_hat},         {"pass", r.pass},         {"stderr", r.stderr_},
                     {"ess", r.ess},               {"replicas", r.replicas}, {"unreliable", r.unreliable},
                     {"epsilon", r.epsilon},       {"Delta", r.Delta},       {"t_eps", r.t_eps},
                     {"blocks", blocks},           {"block_nu_hat", r.block_nu_hat}};
    return j.dump(2);
}

}  // namespace slowfast
