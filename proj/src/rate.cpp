#include "slowfast/rate.hpp"

#include "slowfast/io.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <ostream>

namespace slowfast {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

// Clip to the box, then pull back into the ball. The box contains the
// origin, so the scaled point stays inside it.
void project(Vec& beta, const BetaBox& box, double b) {
    for (std::size_t i = 0; i < beta.size(); ++i) beta[i] = std::clamp(beta[i], box.lo[i], box.hi[i]);
    const double n = norm(beta);
    if (std::isfinite(b) && n > b) {
        for (double& v : beta) v *= b / n;
    }
}

struct Objective {
    const HamiltonianSurface& s;
    std::span<const double> alpha;

    double value(std::span<const double> beta) const { return dot(alpha, beta) - s.value(beta); }
    Vec ascent(std::span<const double> beta) const {
        Vec g = s.gradient(beta);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = alpha[i] - g[i];
        return g;
    }
};

// Largest point of [lo, hi] where the nonincreasing function g is >= level,
// assuming g(lo) >= level > g(hi).
template <typename G>
double bisect_level(G&& g, double lo, double hi, double level) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo) + std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) >= level)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double maximize_1d(const Objective& obj, double lo, double hi, double band) {
    auto gp = [&](double b) {
        const double beta[1] = {b};
        return obj.ascent(beta)[0];
    };
    const double g_lo = gp(lo), g_hi = gp(hi);
    if (g_lo < -band) return lo;
    if (g_hi > band) return hi;
    // Plateau [left, right] where |g'| <= band; pick the point closest to 0.
    const double left = g_lo <= band ? lo : bisect_level(gp, lo, hi, band);
    const double right = g_hi >= -band ? hi : bisect_level(gp, lo, hi, -band);
    if (left > right) return 0.5 * (left + right);
    return std::clamp(0.0, left, right);
}

// Grid argmax plus golden-section refinement along each axis; used when the
// tabulated surface is not convex and ascent cannot be trusted.
Vec grid_argmax(const Objective& obj, const BetaBox& box, double b) {
    const HamiltonianSurface& s = obj.s;
    Vec best(static_cast<std::size_t>(s.dim()), 0.0);
    double best_v = obj.value(best);
    for (std::size_t i = 0; i < s.node_count(); ++i) {
        Vec n = s.node(i);
        if (std::isfinite(b) && norm(n) > b) continue;
        const double v = dot(obj.alpha, n) - s.node_value(i);
        if (v > best_v) {
            best_v = v;
            best = std::move(n);
        }
    }
    for (int a = 0; a < s.dim(); ++a) {
        const auto k = static_cast<std::size_t>(a);
        const double h = s.spacing(a);
        double lo = std::max(box.lo[k], best[k] - h), hi = std::min(box.hi[k], best[k] + h);
        constexpr double r = 0.6180339887498949;
        Vec probe = best;
        auto f = [&](double t) {
            probe[k] = t;
            Vec p = probe;
            project(p, box, b);
            return obj.value(p);
        };
        for (int it = 0; it < 80; ++it) {
            const double c = hi - r * (hi - lo), d = lo + r * (hi - lo);
            if (f(c) > f(d))
                hi = d;
            else
                lo = c;
        }
        probe[k] = 0.5 * (lo + hi);
        project(probe, box, b);
        if (obj.value(probe) > obj.value(best)) best = probe;
    }
    return best;
}

Vec maximize_nd(const Objective& obj, const BetaBox& box, double b, double tol) {
    const HamiltonianSurface& s = obj.s;
    Vec beta(static_cast<std::size_t>(s.dim()), 0.0);
    double best = obj.value(beta);
    for (std::size_t i = 0; i < s.node_count(); ++i) {
        Vec n = s.node(i);
        if (std::isfinite(b) && norm(n) > b) continue;
        const double v = dot(obj.alpha, n) - s.node_value(i);
        if (v > best) {
            best = v;
            beta = std::move(n);
        }
    }
    double step = 1.0;
    for (int it = 0; it < 20000; ++it) {
        const Vec g = obj.ascent(beta);
        Vec cand(beta.size());
        bool accepted = false;
        while (step > 1e-14) {
            for (std::size_t i = 0; i < beta.size(); ++i) cand[i] = beta[i] + step * g[i];
            project(cand, box, b);
            const double v = obj.value(cand);
            double lin = 0.0;
            for (std::size_t i = 0; i < beta.size(); ++i) lin += g[i] * (cand[i] - beta[i]);
            if (v >= best + 1e-4 * lin && v >= best) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        double moved = 0.0;
        for (std::size_t i = 0; i < beta.size(); ++i) moved = std::max(moved, std::abs(cand[i] - beta[i]));
        beta = cand;
        best = obj.value(beta);
        step = std::min(step * 2.0, 1e3);
        if (moved < 1e-3 * tol) break;
    }
    return beta;
}

}  // namespace

AdjointResult legendre(const HamiltonianSurface& surface, std::span<const double> alpha, double b,
                       const RateOptions& opts) {
    const int d = surface.dim();
    require(static_cast<int>(alpha.size()) == d, "legendre: alpha has wrong dimension");
    require(b > 0.0, "legendre: truncation radius must be positive");
    AdjointResult out;
    if (!std::isfinite(b) && !surface.domain().unbounded() && !surface.domain().admits(alpha)) {
        out.value = kInf;
        out.beta_star.assign(static_cast<std::size_t>(d), std::numeric_limits<double>::quiet_NaN());
        return out;
    }

    const BetaBox& box = surface.box();
    const Objective obj{surface, alpha};
    Vec beta;
    if (!surface.checks().convex_ok) {
        out.warnings.emplace_back("interpolated surface is not convex; using grid argmax");
        beta = grid_argmax(obj, box, b);
    } else if (d == 1) {
        const double lo = std::max(box.lo[0], -b), hi = std::min(box.hi[0], b);
        beta = {maximize_1d(obj, lo, hi, 1e-3 * opts.solver_tol)};
    } else {
        beta = maximize_nd(obj, box, b, opts.solver_tol);
    }

    const double h = (opts.exact_polish && surface.has_exact()) ? surface.exact_value(beta) : surface.value(beta);
    out.value = dot(alpha, beta) - h;
    out.beta_star = beta;
    out.on_boundary = std::isfinite(b) && norm(beta) >= b * (1.0 - 1e-12);
    if (!out.on_boundary) {
        const Vec g = obj.ascent(beta);
        for (int a = 0; a < d; ++a) {
            const auto k = static_cast<std::size_t>(a);
            const bool at_lo = beta[k] <= box.lo[k] + 1e-12 && g[k] < -opts.solver_tol;
            const bool at_hi = beta[k] >= box.hi[k] - 1e-12 && g[k] > opts.solver_tol;
            if (at_lo || at_hi) out.at_box_edge = true;
        }
        if (out.at_box_edge)
            out.warnings.push_back(fmt::format(
                "maximizer on the edge of the tabulated beta box; enlarge the box (value {} is a lower bound)",
                out.value));
    }
    return out;
}

double truncation_gap(const HamiltonianSurface& surface, std::span<const double> alpha, double b,
                      const RateOptions& opts) {
    const AdjointResult full = legendre(surface, alpha, kInf, opts);
    if (!full.finite()) return kInf;
    const AdjointResult trunc = legendre(surface, alpha, b, opts);
    return std::max(0.0, full.value - trunc.value);
}

Vec averaged_drift(const HamiltonianSurface& surface, const RateOptions& opts) {
    const Vec zero(static_cast<std::size_t>(surface.dim()), 0.0);
    Vec a = surface.gradient(zero);
    const AdjointResult r = legendre(surface, a, kInf, opts);
    if (!(r.value <= opts.solver_tol))
        throw Error(fmt::format("averaged drift [{}] has rate {} > solver_tol {}", fmt::join(a, ", "), r.value,
                                opts.solver_tol));
    return a;
}

SlopeReport interior_slope_check(const HamiltonianSurface& surface, const DomainBox& box) {
    SlopeReport rep;
    const Vec zero(static_cast<std::size_t>(surface.dim()), 0.0);
    const Vec g = surface.gradient(zero);
    for (std::size_t k = 0; k < box.size(); ++k) {
        SlopeEntry e;
        e.direction = box.directions[k];
        e.m = box.m[k];
        e.M = box.M[k];
        e.slope = dot(e.direction, g);
        e.margin_low = e.slope - e.m;
        e.margin_high = e.M - e.slope;
        e.degenerate = box.degenerate[k];
        if (e.degenerate) {
            e.note = "skipped: card{f(x,.)}=1 in this direction";
        } else {
            rep.checked_any = true;
            e.ok = e.margin_low > 0.0 && e.margin_high > 0.0;
            if (!e.ok)
                e.note = fmt::format("slope {} not strictly inside ({}, {})", e.slope, e.m, e.M);
            rep.ok = rep.ok && e.ok;
        }
        rep.entries.push_back(std::move(e));
    }
    return rep;
}

RateFunction::RateFunction(HamiltonianSurface surface, RateOptions opts)
    : dim_(surface.dim()), opts_(opts),
      fixed_(std::make_shared<const HamiltonianSurface>(std::move(surface))) {
    require(opts_.trunc_b > 0.0, "RateFunction: trunc_b must be positive");
}

RateFunction::RateFunction(SystemPtr spec, BetaBox box, int n_per_axis, SurfaceOptions sopts, RateOptions opts)
    : dim_(spec->dim_slow), opts_(opts), spec_(std::move(spec)), box_(std::move(box)), n_per_axis_(n_per_axis),
      sopts_(sopts) {
    require(opts_.trunc_b > 0.0, "RateFunction: trunc_b must be positive");
    require(box_.dim() == dim_, "RateFunction: beta box has wrong dimension");
    if (spec_->x_independent) {
        const Vec zero(static_cast<std::size_t>(dim_), 0.0);
        fixed_ = std::make_shared<const HamiltonianSurface>(build_surface(spec_, zero, zero, box_, n_per_axis_, sopts_));
    }
}

const HamiltonianSurface& RateFunction::surface_at(std::span<const double> x) const {
    if (fixed_) return *fixed_;
    require(static_cast<int>(x.size()) == dim_, "RateFunction: x has wrong dimension");
    const Vec key(x.begin(), x.end());
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        auto s = std::make_shared<const HamiltonianSurface>(build_surface(spec_, key, key, box_, n_per_axis_, sopts_));
        it = cache_.emplace(key, std::move(s)).first;
    }
    return *it->second;
}

AdjointResult RateFunction::evaluate(std::span<const double> x, std::span<const double> alpha) const {
    return legendre(surface_at(x), alpha, opts_.trunc_b, opts_);
}

Vec RateFunction::averaged_drift(std::span<const double> x) const { return slowfast::averaged_drift(surface_at(x), opts_); }

std::size_t RateFunction::cached_surfaces() const {
    std::lock_guard lock(mu_);
    return fixed_ ? 1 : cache_.size();
}

void write_l_curve(std::ostream& os, const RateFunction& rate, std::span<const double> x,
                   const std::vector<Vec>& alphas) {
    const int d = rate.dim();
    std::vector<std::string> header = io::indexed("alpha", d);
    header.emplace_back("L");
    header.emplace_back("L_b");
    for (auto& h : io::indexed("beta_star", d)) header.push_back(h);
    header.emplace_back("on_boundary");
    io::CsvWriter w(os, header);
    const HamiltonianSurface& s = rate.surface_at(x);
    for (const Vec& a : alphas) {
        const AdjointResult full = legendre(s, a, kInf, rate.options());
        const AdjointResult trunc =
            std::isfinite(rate.options().trunc_b) ? legendre(s, a, rate.options().trunc_b, rate.options()) : full;
        std::vector<std::string> cells;
        for (double v : a) cells.push_back(io::num(v));
        cells.push_back(io::num(full.value));
        cells.push_back(io::num(trunc.value));
        for (double v : trunc.beta_star) cells.push_back(io::num(v));
        cells.emplace_back(trunc.on_boundary ? "1" : "0");
        w.row(cells);
    }
}

}  // namespace slowfast
