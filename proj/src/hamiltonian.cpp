#include "slowfast/hamiltonian.hpp"

#include "slowfast/fastsim.hpp"
#include "slowfast/io.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/stats.hpp"

#include <fmt/format.h>
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>

namespace slowfast {

// ---------------------------------------------------------------------------
// Generator discretization
// ---------------------------------------------------------------------------

FeynmanKacOperator::FeynmanKacOperator(const SystemSpec& spec, std::span<const double> x_prime,
                                       std::span<const double> x, std::span<const double> beta, int grid_n)
    : grid_n_(grid_n), dim_fast_(spec.dim_fast()) {
    require(grid_n >= 16, "FeynmanKacOperator: grid must have at least 16 points per dimension");
    require(static_cast<int>(x_prime.size()) == spec.dim_slow, "FeynmanKacOperator: x' has wrong dimension");
    require(static_cast<int>(x.size()) == spec.dim_slow, "FeynmanKacOperator: x has wrong dimension");
    require(beta.size() == x.size(), "FeynmanKacOperator: beta has wrong dimension");
    const int l = dim_fast_;
    require(l <= 3, "FeynmanKacOperator: at most 3 fast dimensions supported");

    std::size_t n_total = 1;
    for (int a = 0; a < l; ++a) {
        n_total *= static_cast<std::size_t>(grid_n);
        spacing_.push_back(spec.geometry.period[static_cast<std::size_t>(a)] / grid_n);
    }
    if (l == 3) warnings_.emplace_back("three fast dimensions: grid has n^3 nodes, expect long solves");

    std::vector<std::size_t> stride(static_cast<std::size_t>(l));
    stride[0] = 1;
    for (int a = 1; a < l; ++a) stride[static_cast<std::size_t>(a)] = stride[static_cast<std::size_t>(a - 1)] * static_cast<std::size_t>(grid_n);

    auto shifted = [&](std::size_t flat, int axis, int delta) {
        const std::size_t s = stride[static_cast<std::size_t>(axis)];
        const auto i = static_cast<long>((flat / s) % static_cast<std::size_t>(grid_n));
        const long j = ((i + delta) % grid_n + grid_n) % grid_n;
        return flat - static_cast<std::size_t>(i) * s + static_cast<std::size_t>(j) * s;
    };

    potential_.resize(n_total);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n_total * static_cast<std::size_t>(2 * l + 2 * l * (l - 1) + 1));
    Vec a_diff, b(static_cast<std::size_t>(l)), fv(static_cast<std::size_t>(spec.dim_slow));
    double max_rate = 0.0;
    double max_potential = 0.0;
    long negative_weights = 0;

    for (std::size_t flat = 0; flat < n_total; ++flat) {
        const Vec y = node(flat);
        a_diff = spec.eval_diffusion(x, y);
        spec.B(x, y, b);
        spec.f(x_prime, y, fv);
        double pot = 0.0;
        for (std::size_t i = 0; i < fv.size(); ++i) pot += beta[i] * fv[i];
        potential_[flat] = pot;
        max_potential = std::max(max_potential, std::abs(pot));

        // neighbour weights accumulated in a small map keyed by column
        std::vector<std::pair<std::size_t, double>> w;
        auto add = [&](std::size_t col, double val) {
            for (auto& [c, v] : w)
                if (c == col) {
                    v += val;
                    return;
                }
            w.emplace_back(col, val);
        };

        bool upwinded = false;
        for (int k = 0; k < l; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            const double h = spacing_[ku];
            const double D = 0.5 * a_diff[ku * static_cast<std::size_t>(l) + ku];
            const double drift = b[ku];
            double wp = D / (h * h) + drift / (2.0 * h);
            double wm = D / (h * h) - drift / (2.0 * h);
            if (std::abs(drift) * h > 2.0 * D) {
                wp = D / (h * h) + std::max(drift, 0.0) / h;
                wm = D / (h * h) + std::max(-drift, 0.0) / h;
                upwinded = true;
            }
            add(shifted(flat, k, +1), wp);
            add(shifted(flat, k, -1), wm);
        }
        for (int k = 0; k < l; ++k) {
            for (int m = k + 1; m < l; ++m) {
                const double akm = a_diff[static_cast<std::size_t>(k * l + m)];
                if (akm == 0.0) continue;
                const double c = std::abs(akm) / (2.0 * spacing_[static_cast<std::size_t>(k)] * spacing_[static_cast<std::size_t>(m)]);
                const int sm = akm > 0.0 ? 1 : -1;
                add(shifted(shifted(flat, k, +1), m, sm), c);
                add(shifted(shifted(flat, k, -1), m, -sm), c);
                add(shifted(flat, k, +1), -c);
                add(shifted(flat, k, -1), -c);
                add(shifted(flat, m, +1), -c);
                add(shifted(flat, m, -1), -c);
            }
        }
        if (upwinded) ++upwind_rows_;
        double off = 0.0;
        for (const auto& [col, v] : w) {
            if (col == flat) continue;
            if (v < 0.0) ++negative_weights;
            off += v;
            trip.emplace_back(static_cast<int>(flat), static_cast<int>(col), v);
        }
        trip.emplace_back(static_cast<int>(flat), static_cast<int>(flat), -off);
        max_rate = std::max(max_rate, off - pot);
    }
    if (negative_weights > 0)
        warnings_.push_back(fmt::format(
            "mixed-derivative stencil produced {} negative off-diagonal weights; refine the grid", negative_weights));

    transport_.resize(static_cast<int>(n_total), static_cast<int>(n_total));
    transport_.setFromTriplets(trip.begin(), trip.end());
    transport_.makeCompressed();
    shift_ = 1.05 * std::max(max_rate, 0.0) + max_potential + 1e-3;
}

Vec FeynmanKacOperator::node(std::size_t flat) const {
    Vec y(static_cast<std::size_t>(dim_fast_));
    for (int a = 0; a < dim_fast_; ++a) {
        const std::size_t i = flat % static_cast<std::size_t>(grid_n_);
        flat /= static_cast<std::size_t>(grid_n_);
        y[static_cast<std::size_t>(a)] = static_cast<double>(i) * spacing_[static_cast<std::size_t>(a)];
    }
    return y;
}

void FeynmanKacOperator::apply(std::span<const double> v, std::span<double> out) const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::Map<const Eigen::VectorXd> vin(v.data(), n);
    Eigen::Map<Eigen::VectorXd> vout(out.data(), n);
    Eigen::Map<const Eigen::VectorXd> pot(potential_.data(), n);
    vout.noalias() = transport_ * vin;
    vout += pot.cwiseProduct(vin);
}

double FeynmanKacOperator::max_row_defect() const {
    double worst = 0.0;
    for (int r = 0; r < transport_.outerSize(); ++r) {
        double s = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(transport_, r); it; ++it) s += it.value();
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Perron eigenpair
// ---------------------------------------------------------------------------

namespace {

struct Bracket {
    double lo;
    double hi;
    bool valid;
};

Bracket collatz_wielandt(const Eigen::VectorXd& v, const Eigen::VectorXd& av) {
    double lo = kInf, hi = -kInf;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!(v[i] > 0.0)) return {0.0, 0.0, false};
        const double r = av[i] / v[i];
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    return {lo, hi, true};
}

}  // namespace

EigenPair principal_eigenpair(const FeynmanKacOperator& op, const EigenOptions& opts,
                              std::span<const double> warm_start) {
    const auto n = static_cast<Eigen::Index>(op.size());
    const double s = op.iteration_shift();

    // P = I + A / s, entrywise nonnegative with positive diagonal.
    Eigen::SparseMatrix<double, Eigen::RowMajor> P = op.transport() / s;
    for (Eigen::Index i = 0; i < n; ++i) P.coeffRef(i, i) += 1.0 + op.potential()[static_cast<std::size_t>(i)] / s;
    P.makeCompressed();

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
    if (!warm_start.empty()) {
        require(static_cast<Eigen::Index>(warm_start.size()) == n, "warm start has wrong size");
        for (Eigen::Index i = 0; i < n; ++i) v[i] = warm_start[static_cast<std::size_t>(i)];
        if (!(v.minCoeff() > 0.0)) v.setOnes();
        v /= v.maxCoeff();
    }
    Eigen::VectorXd w(n), av(n);
    EigenPair out;
    out.grid_n = op.grid_n();
    out.warnings = op.warnings();

    Bracket last{-kInf, kInf, false};
    long it = 0;
    for (; it <= opts.max_iters; ++it) {
        w.noalias() = P * v;
        if (it % opts.check_every == 0) {
            av = s * (w - v);
            const Bracket b = collatz_wielandt(v, av);
            if (b.valid) {
                last = b;
                if (b.hi - b.lo <= opts.tol) break;
            }
        }
        v = w;
        if (it % 16 == 0) v /= v.maxCoeff();
    }
    if (it > opts.max_iters) {
        throw ConvergenceError(
            fmt::format("power iteration did not converge in {} iterations (bracket width {:.3g})", opts.max_iters,
                        last.valid ? last.hi - last.lo : kInf),
            last.valid ? 0.5 * (last.hi - last.lo) : kInf);
    }
    v /= v.maxCoeff();
    out.eigenvalue = 0.5 * (last.lo + last.hi);
    out.residual = 0.5 * (last.hi - last.lo);
    out.iterations = it;
    out.eigenfunction.assign(v.data(), v.data() + n);
    return out;
}

EigenPair h_spectral(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
                     std::span<const double> beta, int grid_n, const EigenOptions& opts,
                     std::span<const double> warm_start) {
    FeynmanKacOperator op(spec, x_prime, x, beta, grid_n);
    EigenPair ep = principal_eigenpair(op, opts, warm_start);
    if (opts.check_grid && grid_n / 2 >= 16) {
        FeynmanKacOperator coarse(spec, x_prime, x, beta, grid_n / 2);
        const EigenPair ec = principal_eigenpair(coarse, opts);
        ep.grid_disagreement = std::abs(ep.eigenvalue - ec.eigenvalue);
        if (ep.grid_disagreement > opts.grid_check_tol)
            ep.warnings.push_back(fmt::format("grid too coarse: |H(n={}) - H(n={})| = {:.3g} > {:.3g}", grid_n,
                                              grid_n / 2, ep.grid_disagreement, opts.grid_check_tol));
    }
    return ep;
}

// ---------------------------------------------------------------------------
// Monte Carlo route
// ---------------------------------------------------------------------------

MonteCarloH h_montecarlo(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
                         std::span<const double> beta, double t, double dt, long replicas, std::uint64_t seed,
                         std::span<const double> y0, int jobs) {
    require(t >= 1.0, "h_montecarlo: t must be >= 1");
    require(replicas >= 100, "h_montecarlo: at least 100 replicas required");
    const int d = spec.dim_slow;
    const int l = spec.dim_fast();
    require(static_cast<int>(x_prime.size()) == d && static_cast<int>(x.size()) == d &&
                static_cast<int>(beta.size()) == d,
            "h_montecarlo: x', x, beta must have the slow dimension");
    Vec start(static_cast<std::size_t>(l), 0.0);
    if (!y0.empty()) {
        require(static_cast<int>(y0.size()) == l, "h_montecarlo: y0 has wrong dimension");
        start.assign(y0.begin(), y0.end());
    }
    const long steps = step_count(t, dt);
    Vec z(static_cast<std::size_t>(replicas));

    parallel_for(static_cast<std::size_t>(replicas), jobs, [&](std::size_t r) {
        FastStepper stepper(spec, seed, r);
        std::array<double, kMaxDim> y{}, fv{};
        std::copy(start.begin(), start.end(), y.begin());
        std::span<double> ys(y.data(), static_cast<std::size_t>(l));
        std::span<double> fs(fv.data(), static_cast<std::size_t>(d));
        spec.geometry.wrap(ys);
        double acc = 0.0;
        for (long k = 0; k < steps; ++k) {
            const double t0 = static_cast<double>(k) * dt;
            const double h = (k == steps - 1) ? t - t0 : dt;
            spec.f(x_prime, ys, fs);
            double bf = 0.0;
            for (int i = 0; i < d; ++i) bf += beta[static_cast<std::size_t>(i)] * fv[static_cast<std::size_t>(i)];
            acc += bf * h;
            if (!stepper.step(x, ys, h))
                throw SimulationBlowup(fmt::format("replica {} blew up at step {}", r, k), k);
        }
        z[r] = acc;
    });

    const LogMeanExp lme = log_mean_exp(z);
    MonteCarloH out;
    out.estimate = lme.value / t;
    out.stderr_ = lme.stderr_log / t;
    out.ess = lme.ess;
    out.replicas = replicas;
    out.degenerate = lme.ess < 10.0;
    return out;
}

// ---------------------------------------------------------------------------
// Gradient
// ---------------------------------------------------------------------------

Vec grad_h(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
           std::span<const double> beta, double step, int grid_n, const EigenOptions& opts,
           std::span<const double> warm_start) {
    require(step > 0.0 && step <= 0.1, "grad_h: step must lie in (0, 0.1]");
    const std::size_t d = beta.size();
    Vec g(d);
    Vec warm(warm_start.begin(), warm_start.end());
    Vec b(beta.begin(), beta.end());
    auto H = [&](std::size_t i, double delta) {
        b[i] = beta[i] + delta;
        EigenPair ep = h_spectral(spec, x_prime, x, b, grid_n, opts, warm);
        b[i] = beta[i];
        return ep.eigenvalue;
    };
    for (std::size_t i = 0; i < d; ++i) {
        const double coarse = (H(i, step) - H(i, -step)) / (2.0 * step);
        const double fine = (H(i, 0.5 * step) - H(i, -0.5 * step)) / step;
        g[i] = (4.0 * fine - coarse) / 3.0;
    }
    return g;
}

// ---------------------------------------------------------------------------
// Surface
// ---------------------------------------------------------------------------

BetaBox BetaBox::symmetric(int d, double radius) {
    return {Vec(static_cast<std::size_t>(d), -radius), Vec(static_cast<std::size_t>(d), radius)};
}

HamiltonianSurface::HamiltonianSurface(BetaBox box, int n_per_axis, Vec values, Vec gradients, DomainBox domain)
    : box_(std::move(box)), n_(n_per_axis), values_(std::move(values)), gradients_(std::move(gradients)),
      domain_(std::move(domain)) {
    require(box_.dim() >= 1 && box_.lo.size() == box_.hi.size(), "surface: malformed beta box");
    require(n_ >= 2, "surface: need at least 2 nodes per axis");
    std::size_t expect = 1;
    for (int a = 0; a < dim(); ++a) {
        require(box_.hi[static_cast<std::size_t>(a)] > box_.lo[static_cast<std::size_t>(a)], "surface: empty beta box");
        expect *= static_cast<std::size_t>(n_);
    }
    require(values_.size() == expect, "surface: value count does not match the grid");
    require(gradients_.size() == expect * static_cast<std::size_t>(dim()), "surface: gradient count does not match");
}

HamiltonianSurface HamiltonianSurface::from_function(const BetaBox& box, int n_per_axis, const ValueFn& value,
                                                     const GradFn& grad, DomainBox domain) {
    const int d = box.dim();
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n_per_axis);
    Vec values(total), grads(total * static_cast<std::size_t>(d));
    HamiltonianSurface probe(box, n_per_axis, Vec(total), Vec(total * static_cast<std::size_t>(d)), {});
    for (std::size_t i = 0; i < total; ++i) {
        const Vec b = probe.node(i);
        values[i] = value(b);
        const Vec g = grad(b);
        std::copy(g.begin(), g.end(), grads.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(d)));
    }
    HamiltonianSurface s(box, n_per_axis, std::move(values), std::move(grads), std::move(domain));
    s.set_exact(value);
    s.run_checks(kInf);
    return s;
}

double HamiltonianSurface::spacing(int axis) const {
    const auto a = static_cast<std::size_t>(axis);
    return (box_.hi[a] - box_.lo[a]) / (n_ - 1);
}

double HamiltonianSurface::inner_radius() const {
    double r = kInf;
    for (int a = 0; a < dim(); ++a) {
        const auto k = static_cast<std::size_t>(a);
        r = std::min({r, std::max(0.0, -box_.lo[k]), std::max(0.0, box_.hi[k])});
    }
    return r;
}

Vec HamiltonianSurface::node(std::size_t flat) const {
    Vec b(static_cast<std::size_t>(dim()));
    for (int a = 0; a < dim(); ++a) {
        const std::size_t i = flat % static_cast<std::size_t>(n_);
        flat /= static_cast<std::size_t>(n_);
        const auto k = static_cast<std::size_t>(a);
        b[k] = (i + 1 == static_cast<std::size_t>(n_)) ? box_.hi[k] : box_.lo[k] + static_cast<double>(i) * spacing(a);
    }
    return b;
}

std::span<const double> HamiltonianSurface::node_gradient(std::size_t flat) const {
    const auto d = static_cast<std::size_t>(dim());
    return {gradients_.data() + flat * d, d};
}

std::size_t HamiltonianSurface::flat_index(std::span<const std::size_t> idx) const {
    std::size_t flat = 0, stride = 1;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        flat += idx[a] * stride;
        stride *= static_cast<std::size_t>(n_);
    }
    return flat;
}

bool HamiltonianSurface::contains(std::span<const double> beta, double slack) const {
    for (int a = 0; a < dim(); ++a) {
        const auto k = static_cast<std::size_t>(a);
        if (beta[k] < box_.lo[k] - slack || beta[k] > box_.hi[k] + slack) return false;
    }
    return true;
}

namespace {

struct Cell {
    std::size_t index;
    double t;
};

Cell locate(double b, double lo, double h, int n) {
    double u = (b - lo) / h;
    auto j = static_cast<long>(std::floor(u));
    j = std::clamp(j, 0L, static_cast<long>(n) - 2);
    double t = std::clamp(u - static_cast<double>(j), 0.0, 1.0);
    return {static_cast<std::size_t>(j), t};
}

}  // namespace

double HamiltonianSurface::value(std::span<const double> beta) const {
    if (!contains(beta, 1e-9)) return std::numeric_limits<double>::quiet_NaN();
    const int d = dim();
    if (d == 1) {
        const double h = spacing(0);
        const Cell c = locate(beta[0], box_.lo[0], h, n_);
        const double t = c.t, t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * values_[c.index] + h10 * h * gradients_[c.index] + h01 * values_[c.index + 1] +
               h11 * h * gradients_[c.index + 1];
    }
    std::array<Cell, kMaxDim> cells{};
    for (int a = 0; a < d; ++a)
        cells[static_cast<std::size_t>(a)] = locate(beta[static_cast<std::size_t>(a)], box_.lo[static_cast<std::size_t>(a)], spacing(a), n_);
    double v = 0.0;
    std::array<std::size_t, kMaxDim> idx{};
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1u;
            const auto& c = cells[static_cast<std::size_t>(a)];
            idx[static_cast<std::size_t>(a)] = c.index + (up ? 1 : 0);
            w *= up ? c.t : 1.0 - c.t;
        }
        if (w != 0.0) v += w * values_[flat_index({idx.data(), static_cast<std::size_t>(d)})];
    }
    return v;
}

Vec HamiltonianSurface::gradient(std::span<const double> beta) const {
    const int d = dim();
    if (!contains(beta, 1e-9)) return Vec(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
    if (d == 1) {
        const double h = spacing(0);
        const Cell c = locate(beta[0], box_.lo[0], h, n_);
        const double t = c.t, t2 = t * t;
        const double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
        const double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
        return {(d00 * values_[c.index] + d01 * values_[c.index + 1]) / h + d10 * gradients_[c.index] +
                d11 * gradients_[c.index + 1]};
    }
    std::array<Cell, kMaxDim> cells{};
    for (int a = 0; a < d; ++a)
        cells[static_cast<std::size_t>(a)] = locate(beta[static_cast<std::size_t>(a)], box_.lo[static_cast<std::size_t>(a)], spacing(a), n_);
    Vec g(static_cast<std::size_t>(d), 0.0);
    std::array<std::size_t, kMaxDim> idx{};
    for (unsigned corner = 0; corner < (1u << d); ++corner) {
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            const bool up = (corner >> a) & 1u;
            const auto& c = cells[static_cast<std::size_t>(a)];
            idx[static_cast<std::size_t>(a)] = c.index + (up ? 1 : 0);
            w *= up ? c.t : 1.0 - c.t;
        }
        if (w == 0.0) continue;
        const auto gn = node_gradient(flat_index({idx.data(), static_cast<std::size_t>(d)}));
        for (int a = 0; a < d; ++a) g[static_cast<std::size_t>(a)] += w * gn[static_cast<std::size_t>(a)];
    }
    return g;
}

void HamiltonianSurface::run_checks(double bound_slope) {
    SurfaceChecks& c = checks_;
    c.bound_slope = bound_slope;
    c.max_convexity_violation = -kInf;
    c.max_bound_excess = -kInf;
    const int d = dim();
    const std::size_t total = values_.size();

    bool zero_is_node = true;
    std::array<std::size_t, kMaxDim> zidx{};
    for (int a = 0; a < d; ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double u = -box_.lo[k] / spacing(a);
        const double r = std::round(u);
        if (std::abs(u - r) > 1e-9 || r < 0 || r > n_ - 1) zero_is_node = false;
        zidx[k] = static_cast<std::size_t>(std::max(0.0, r));
    }
    if (zero_is_node) {
        c.value_at_zero = values_[flat_index({zidx.data(), static_cast<std::size_t>(d)})];
    } else {
        c.value_at_zero = value(Vec(static_cast<std::size_t>(d), 0.0));
        c.warnings.emplace_back("beta = 0 is not a grid node; value_at_zero is interpolated");
    }
    c.zero_ok = std::abs(c.value_at_zero) <= 1e-10;

    std::vector<std::size_t> idx(static_cast<std::size_t>(d));
    for (std::size_t flat = 0; flat < total; ++flat) {
        std::size_t rem = flat;
        for (int a = 0; a < d; ++a) {
            idx[static_cast<std::size_t>(a)] = rem % static_cast<std::size_t>(n_);
            rem /= static_cast<std::size_t>(n_);
        }
        if (std::isfinite(bound_slope)) {
            const Vec b = node(flat);
            double nb = 0.0;
            for (double v : b) nb += v * v;
            c.max_bound_excess = std::max(c.max_bound_excess, std::abs(values_[flat]) - bound_slope * std::sqrt(nb));
        }
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            if (idx[k] == 0 || idx[k] + 1 >= static_cast<std::size_t>(n_)) continue;
            auto lo = idx, hi = idx;
            lo[k] -= 1;
            hi[k] += 1;
            const double viol = values_[flat] - 0.5 * (values_[flat_index(lo)] + values_[flat_index(hi)]);
            c.max_convexity_violation = std::max(c.max_convexity_violation, viol);
        }
    }
    if (c.max_convexity_violation == -kInf) c.max_convexity_violation = 0.0;
    if (c.max_bound_excess == -kInf) c.max_bound_excess = 0.0;
    c.convex_ok = c.max_convexity_violation <= 1e-8;
    c.bound_ok = !std::isfinite(bound_slope) || c.max_bound_excess <= 1e-8;
}

HamiltonianSurface build_surface(const SystemPtr& spec, std::span<const double> x_prime, std::span<const double> x,
                                 const BetaBox& box, int n_per_axis, const SurfaceOptions& opts) {
    require(spec != nullptr, "build_surface: null system");
    const int d = spec->dim_slow;
    require(box.dim() == d, "build_surface: beta box has wrong dimension");
    require(n_per_axis >= 5, "build_surface: n_per_axis must be >= 5");
    for (int a = 0; a < d; ++a) {
        const auto k = static_cast<std::size_t>(a);
        require(box.lo[k] <= 0.0 && box.hi[k] >= 0.0, "build_surface: beta box must contain 0");
    }
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n_per_axis);
    const std::size_t lines = total / static_cast<std::size_t>(n_per_axis);

    HamiltonianSurface layout(box, n_per_axis, Vec(total), Vec(total * static_cast<std::size_t>(d)), {});
    Vec values(total), grads(total * static_cast<std::size_t>(d)), eig_min(total), residual(total);
    std::vector<std::vector<std::string>> node_warnings(total);

    // One warm-started chain per grid line along axis 0; chains are
    // independent so the result does not depend on the worker count.
    parallel_for(lines, opts.jobs, [&](std::size_t line) {
        Vec warm;
        for (std::size_t i = 0; i < static_cast<std::size_t>(n_per_axis); ++i) {
            const std::size_t flat = line * static_cast<std::size_t>(n_per_axis) + i;
            const Vec beta = layout.node(flat);
            try {
                EigenPair ep = h_spectral(*spec, x_prime, x, beta, opts.grid_n, opts.eigen, warm);
                const Vec g = grad_h(*spec, x_prime, x, beta, opts.fd_step, opts.grid_n, opts.eigen, ep.eigenfunction);
                values[flat] = ep.eigenvalue;
                std::copy(g.begin(), g.end(), grads.begin() + static_cast<std::ptrdiff_t>(flat * static_cast<std::size_t>(d)));
                eig_min[flat] = *std::min_element(ep.eigenfunction.begin(), ep.eigenfunction.end());
                residual[flat] = ep.residual;
                node_warnings[flat] = ep.warnings;
                warm = std::move(ep.eigenfunction);
            } catch (const ConvergenceError& e) {
                throw ConvergenceError(fmt::format("surface node beta = [{}]: {}", fmt::join(beta, ", "), e.what()),
                                       e.residual());
            } catch (const SimulationBlowup&) {
                throw;
            } catch (const Error& e) {
                throw Error(fmt::format("surface node beta = [{}]: {}", fmt::join(beta, ", "), e.what()));
            }
        }
    });

    DomainBox domain = domain_box(*spec, x_prime, default_directions(d), opts.domain_grid_n);
    HamiltonianSurface s(box, n_per_axis, std::move(values), std::move(grads), std::move(domain));
    s.x_prime.assign(x_prime.begin(), x_prime.end());
    s.x.assign(x.begin(), x.end());
    s.grid_n = opts.grid_n;
    s.fd_step = opts.fd_step;
    s.eigen_tol = opts.eigen.tol;
    s.spec_hash = io::sha256_hex(spec->description);
    s.run_checks(spec->f_sup_norm);
    auto& c = s.mutable_checks();
    c.min_eigenfunction = *std::min_element(eig_min.begin(), eig_min.end());
    c.max_residual = *std::max_element(residual.begin(), residual.end());
    for (const auto& w : node_warnings)
        for (const auto& msg : w)
            if (std::find(c.warnings.begin(), c.warnings.end(), msg) == c.warnings.end()) c.warnings.push_back(msg);

    if (opts.attach_exact) {
        const Vec xp(x_prime.begin(), x_prime.end()), xx(x.begin(), x.end());
        const int grid = opts.grid_n;
        const EigenOptions eo = opts.eigen;
        SystemPtr sp = spec;
        s.set_exact([sp, xp, xx, grid, eo](std::span<const double> beta) {
            return h_spectral(*sp, xp, xx, beta, grid, eo).eigenvalue;
        });
    }
    return s;
}

// ---------------------------------------------------------------------------
// Export / import
// ---------------------------------------------------------------------------

void write_surface_csv(std::ostream& os, const HamiltonianSurface& s) {
    const int d = s.dim();
    std::vector<std::string> header = io::indexed("beta", d);
    header.emplace_back("H");
    for (auto& h : io::indexed("dH", d)) header.push_back(h);
    io::CsvWriter w(os, header);
    for (std::size_t i = 0; i < s.node_count(); ++i) {
        Vec row = s.node(i);
        row.push_back(s.node_value(i));
        const auto g = s.node_gradient(i);
        row.insert(row.end(), g.begin(), g.end());
        w.row_numbers(row);
    }
}

namespace {
nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}
}  // namespace

std::string surface_sidecar_json(const HamiltonianSurface& s) {
    const auto& c = s.checks();
    nlohmann::json dom = nlohmann::json::object();
    dom["directions"] = s.domain().directions;
    dom["m"] = s.domain().m;
    dom["M"] = s.domain().M;
    dom["degenerate"] = s.domain().degenerate;
    nlohmann::json j{
        {"spec_hash", s.spec_hash},
        {"x_prime", s.x_prime},
        {"x", s.x},
        {"box_lo", s.box().lo},
        {"box_hi", s.box().hi},
        {"n_per_axis", s.n_per_axis()},
        {"grid_n", s.grid_n},
        {"fd_step", s.fd_step},
        {"eigen_tol", s.eigen_tol},
        {"domain", dom},
        {"checks",
         {{"value_at_zero", finite_or_null(c.value_at_zero)},
          {"max_convexity_violation", finite_or_null(c.max_convexity_violation)},
          {"max_bound_excess", finite_or_null(c.max_bound_excess)},
          {"min_eigenfunction", finite_or_null(c.min_eigenfunction)},
          {"max_residual", finite_or_null(c.max_residual)},
          {"convex_ok", c.convex_ok},
          {"zero_ok", c.zero_ok},
          {"bound_ok", c.bound_ok},
          {"warnings", c.warnings}}},
    };
    return j.dump(2);
}

HamiltonianSurface read_surface(std::istream& csv, const std::string& sidecar_json) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(sidecar_json);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("surface sidecar: {}", e.what()));
    }
    BetaBox box{j.at("box_lo").get<Vec>(), j.at("box_hi").get<Vec>()};
    const int n = j.at("n_per_axis").get<int>();
    const int d = box.dim();
    const io::CsvTable t = io::read_csv(csv);
    std::size_t total = 1;
    for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(n);
    if (t.rows.size() != total)
        throw ConfigError(fmt::format("surface csv has {} rows, expected {}", t.rows.size(), total));
    const int hcol = t.column("H");
    if (hcol < 0) throw ConfigError("surface csv lacks column H");
    Vec values(total), grads(total * static_cast<std::size_t>(d));
    for (std::size_t r = 0; r < total; ++r) {
        values[r] = io::parse_num(t.rows[r][static_cast<std::size_t>(hcol)]);
        for (int a = 0; a < d; ++a) {
            const int col = t.column(fmt::format("dH_{}", a + 1));
            if (col < 0) throw ConfigError(fmt::format("surface csv lacks column dH_{}", a + 1));
            grads[r * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)] =
                io::parse_num(t.rows[r][static_cast<std::size_t>(col)]);
        }
    }
    DomainBox dom;
    if (j.contains("domain")) {
        const auto& jd = j.at("domain");
        dom.directions = jd.at("directions").get<std::vector<Vec>>();
        dom.m = jd.at("m").get<Vec>();
        dom.M = jd.at("M").get<Vec>();
        dom.degenerate = jd.at("degenerate").get<std::vector<bool>>();
    }
    HamiltonianSurface s(box, n, std::move(values), std::move(grads), std::move(dom));
    s.x_prime = j.value("x_prime", Vec{});
    s.x = j.value("x", Vec{});
    s.grid_n = j.value("grid_n", 0);
    s.fd_step = j.value("fd_step", 0.0);
    s.eigen_tol = j.value("eigen_tol", 0.0);
    s.spec_hash = j.value("spec_hash", std::string{});
    s.run_checks(kInf);
    return s;
}

}  // namespace slowfast
