#include "slowfast/minpath.hpp"

#include "slowfast/parallel.hpp"

#include "json.hpp"
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>

namespace slowfast {

void MinActionProblem::validate() const {
    require(rate != nullptr, "MinActionProblem: rate is null");
    require(m >= 2, "MinActionProblem: m must be >= 2");
    require(T > 0.0, "MinActionProblem: T must be positive");
    require(static_cast<int>(x_start.size()) == rate->dim() && static_cast<int>(x_end.size()) == rate->dim(),
            "MinActionProblem: endpoints have the wrong dimension");
    for (double v : x_start) require(std::isfinite(v), "MinActionProblem: x_start must be finite");
    for (double v : x_end) require(std::isfinite(v), "MinActionProblem: x_end must be finite");
    require(max_iters >= 1 && tol > 0.0 && fd_x_step > 0.0, "MinActionProblem: bad solver settings");
}

namespace {

struct Evaluation {
    double value = kInf;
    Vec grad;  // (m + 1) x d, all nodes
    int first_infinite = -1;
    Vec bad_slope;
    std::vector<int> edge_segments;
};

// Discrete action of `nodes` and, if asked, its gradient with respect to
// every node: segment k contributes beta*_k / Delta to the right node,
// -beta*_k / Delta + dL/dx to the left node (times Delta).
Evaluation evaluate(const RateFunction& rate, const Vec& nodes, int m, double T, bool with_grad, double fdx,
                    int jobs) {
    const int d = rate.dim();
    const auto du = static_cast<std::size_t>(d);
    const double delta = T / m;
    Vec seg_value(static_cast<std::size_t>(m)), beta(static_cast<std::size_t>(m) * du), dLdx(static_cast<std::size_t>(m) * du, 0.0);
    std::vector<char> edge(static_cast<std::size_t>(m), 0);

    parallel_for(static_cast<std::size_t>(m), jobs, [&](std::size_t k) {
        const std::span<const double> z(nodes.data() + k * du, du);
        Vec s(du);
        for (std::size_t i = 0; i < du; ++i) s[i] = (nodes[(k + 1) * du + i] - z[i]) / delta;
        const AdjointResult r = rate.evaluate(z, s);
        seg_value[k] = delta * r.value;
        if (!r.finite()) return;
        edge[k] = r.at_box_edge ? 1 : 0;
        std::copy(r.beta_star.begin(), r.beta_star.end(), beta.begin() + static_cast<std::ptrdiff_t>(k * du));
        if (with_grad && !rate.x_independent()) {
            Vec zp(z.begin(), z.end()), zm(z.begin(), z.end());
            for (std::size_t i = 0; i < du; ++i) {
                zp[i] = z[i] + fdx;
                zm[i] = z[i] - fdx;
                const double lp = rate.L(zp, s), lm = rate.L(zm, s);
                dLdx[k * du + i] = (std::isfinite(lp) && std::isfinite(lm)) ? (lp - lm) / (2.0 * fdx) : 0.0;
                zp[i] = zm[i] = z[i];
            }
        }
    });

    Evaluation e;
    e.value = 0.0;
    for (int k = 0; k < m; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        if (!std::isfinite(seg_value[ku])) {
            e.value = kInf;
            if (e.first_infinite < 0) {
                e.first_infinite = k;
                for (std::size_t i = 0; i < du; ++i) e.bad_slope.push_back((nodes[(ku + 1) * du + i] - nodes[ku * du + i]) / delta);
            }
            continue;
        }
        e.value += seg_value[ku];
        if (edge[ku]) e.edge_segments.push_back(k);
    }
    if (with_grad && std::isfinite(e.value)) {
        e.grad.assign(static_cast<std::size_t>(m + 1) * du, 0.0);
        for (std::size_t k = 0; k < static_cast<std::size_t>(m); ++k)
            for (std::size_t i = 0; i < du; ++i) {
                e.grad[(k + 1) * du + i] += beta[k * du + i];
                e.grad[k * du + i] += -beta[k * du + i] + delta * dLdx[k * du + i];
            }
    }
    return e;
}

double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct DescentOutcome {
    Vec nodes;
    Evaluation eval;
    double grad_norm = kInf;
    bool converged = false;
    int iterations = 0;
    Vec trace;
    bool stalled = false;
};

// Projected (onto [lo, hi] per coordinate) descent with Armijo backtracking.
// Coordinates with free[i] = 0 never move. L-BFGS directions when asked;
// they are only used while no bound is active.
DescentOutcome descend(const RateFunction& rate, Vec nodes, int m, double T, const std::vector<char>& free,
                       const Vec& lo, const Vec& hi, const MinActionProblem& p) {
    DescentOutcome out;
    Evaluation e = evaluate(rate, nodes, m, T, true, p.fd_x_step, p.jobs);
    out.trace.push_back(e.value);
    const bool bounded = !lo.empty();
    auto project = [&](Vec& z) {
        if (!bounded) return;
        for (std::size_t i = 0; i < z.size(); ++i)
            if (free[i]) z[i] = std::clamp(z[i], lo[i], hi[i]);
    };
    // projected-gradient stationarity measure
    auto stationarity = [&](const Vec& z, const Vec& g) {
        double n = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            if (!free[i]) continue;
            double gi = g[i];
            if (bounded && ((z[i] <= lo[i] && gi > 0.0) || (z[i] >= hi[i] && gi < 0.0))) gi = 0.0;
            n = std::max(n, std::abs(gi));
        }
        return n;
    };

    std::deque<std::pair<Vec, Vec>> memory;
    double step = 1.0;
    int it = 0;
    for (; it < p.max_iters; ++it) {
        Vec g = e.grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!free[i]) g[i] = 0.0;
        out.grad_norm = stationarity(nodes, g);
        if (out.grad_norm <= p.tol) {
            out.converged = true;
            break;
        }
        Vec dir(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) dir[i] = -g[i];
        bool qn = p.quasi_newton && !bounded && !memory.empty();
        if (qn) {
            Vec q = g;
            std::vector<double> alpha(memory.size());
            for (std::size_t j = memory.size(); j-- > 0;) {
                const auto& [s, y] = memory[j];
                alpha[j] = dot(s, q) / dot(y, s);
                for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[j] * y[i];
            }
            const auto& [s_last, y_last] = memory.back();
            const double gamma = dot(s_last, y_last) / dot(y_last, y_last);
            for (double& v : q) v *= gamma;
            for (std::size_t j = 0; j < memory.size(); ++j) {
                const auto& [s, y] = memory[j];
                const double b = dot(y, q) / dot(y, s);
                for (std::size_t i = 0; i < q.size(); ++i) q[i] += s[i] * (alpha[j] - b);
            }
            for (std::size_t i = 0; i < q.size(); ++i) dir[i] = free[i] ? -q[i] : 0.0;
            if (dot(dir, g) >= 0.0) {
                for (std::size_t i = 0; i < g.size(); ++i) dir[i] = -g[i];
                memory.clear();
                qn = false;
            }
        }
        double t = qn ? 1.0 : step;
        bool accepted = false;
        Vec trial;
        Evaluation et;
        while (t > 1e-16) {
            trial = nodes;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] += t * dir[i];
            project(trial);
            et = evaluate(rate, trial, m, T, false, p.fd_x_step, p.jobs);
            if (std::isfinite(et.value)) {
                double decrease = 0.0;
                for (std::size_t i = 0; i < trial.size(); ++i) decrease += g[i] * (trial[i] - nodes[i]);
                if (et.value <= e.value + 1e-4 * decrease) {
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!accepted) {
            out.stalled = true;
            break;
        }
        if (!qn) step = std::min(2.0 * t, 1e6);
        Evaluation en = evaluate(rate, trial, m, T, true, p.fd_x_step, p.jobs);
        if (p.quasi_newton && !bounded) {
            Vec s(trial.size()), y(trial.size());
            for (std::size_t i = 0; i < s.size(); ++i) {
                s[i] = trial[i] - nodes[i];
                y[i] = free[i] ? en.grad[i] - e.grad[i] : 0.0;
            }
            if (dot(s, y) > 1e-16) {
                memory.emplace_back(std::move(s), std::move(y));
                if (memory.size() > 8) memory.pop_front();
            }
        }
        nodes = std::move(trial);
        e = std::move(en);
        out.trace.push_back(e.value);
    }
    if (!out.converged && !out.stalled) {
        Vec g = e.grad;
        for (std::size_t i = 0; i < g.size(); ++i)
            if (!free[i]) g[i] = 0.0;
        out.grad_norm = stationarity(nodes, g);
        out.converged = out.grad_norm <= p.tol;
    }
    out.iterations = it;
    out.nodes = std::move(nodes);
    out.eval = std::move(e);
    return out;
}

}  // namespace

double discrete_action(const RateFunction& rate, const Path& path, int jobs) {
    require(path.dim == rate.dim(), "discrete_action: dimension mismatch");
    return evaluate(rate, path.values, path.segments(), path.T, false, 1e-3, jobs).value;
}

MinActionResult minimize_action(const MinActionProblem& p, const Path& init) {
    p.validate();
    const int d = p.rate->dim();
    const auto du = static_cast<std::size_t>(d);
    Path start = init.values.empty() ? Path::between(p.x_start, p.x_end, p.T, p.m) : init;
    require(start.segments() == p.m && std::abs(start.T - p.T) <= 1e-12 * p.T && start.dim == d,
            "minimize_action: init must have m segments on [0, T]");
    for (std::size_t i = 0; i < du; ++i) {
        require(std::abs(start.node(0)[i] - p.x_start[i]) <= 1e-12 &&
                    std::abs(start.node(p.m)[i] - p.x_end[i]) <= 1e-12,
                "minimize_action: init does not match the endpoints");
    }
    const Evaluation e0 = evaluate(*p.rate, start.values, p.m, p.T, false, p.fd_x_step, p.jobs);
    if (e0.first_infinite >= 0)
        throw InfeasiblePathError(fmt::format("initial path segment {} has slope [{}] outside the finite-rate domain",
                                              e0.first_infinite, fmt::join(e0.bad_slope, ", ")),
                                  e0.first_infinite);

    std::vector<char> free(start.values.size(), 1);
    for (std::size_t i = 0; i < du; ++i) {
        free[i] = 0;
        free[static_cast<std::size_t>(p.m) * du + i] = 0;
    }
    DescentOutcome o = descend(*p.rate, start.values, p.m, p.T, free, {}, {}, p);

    MinActionResult r;
    r.path = Path(p.T, d, std::move(o.nodes));
    r.value = o.eval.value;
    r.grad_norm = o.grad_norm;
    r.converged = o.converged;
    r.iterations = o.iterations;
    r.per_iter = std::move(o.trace);
    r.near_boundary_segments = o.eval.edge_segments;
    if (!r.near_boundary_segments.empty())
        r.warnings.push_back(fmt::format("{} segments have adjoints on the beta-box edge; values are lower bounds",
                                         r.near_boundary_segments.size()));
    if (o.stalled && !o.converged)
        r.warnings.push_back(fmt::format("line search stalled with gradient norm {:.3g}", o.grad_norm));
    return r;
}

LevelSetResult level_set_distance(const Path& path, double s, const MinActionProblem& p, double r_tol) {
    require(p.rate != nullptr, "level_set_distance: rate is null");
    require(s >= 0.0, "level_set_distance: s must be >= 0");
    require(path.dim == p.rate->dim(), "level_set_distance: dimension mismatch");
    const RateFunction& rate = *p.rate;
    const int m = path.segments();
    const int d = path.dim;
    const auto du = static_cast<std::size_t>(d);
    const double slack = 1e-6;

    LevelSetResult res;
    const double s_path = discrete_action(rate, path, p.jobs);
    if (s_path <= s) {
        res.distance = 0.0;
        res.achieved_action = s_path;
        res.xi = path;
        res.converged = true;
        res.note = "path lies in the level set";
        return res;
    }

    // Averaged flow from the same start: a zero-action member of every level set.
    Vec flow(path.values.size());
    std::copy(path.values.begin(), path.values.begin() + d, flow.begin());
    for (int k = 0; k < m; ++k) {
        const std::span<const double> z(flow.data() + static_cast<std::size_t>(k) * du, du);
        const Vec a = rate.averaged_drift(z);
        for (std::size_t i = 0; i < du; ++i)
            flow[static_cast<std::size_t>(k + 1) * du + i] = z[i] + path.step() * a[i];
    }
    double r_hi = 0.0;
    for (std::size_t i = 0; i < flow.size(); ++i) r_hi = std::max(r_hi, std::abs(flow[i] - path.values[i]));
    r_hi += r_tol;

    std::vector<char> free(path.values.size(), 1);
    for (std::size_t i = 0; i < du; ++i) free[i] = 0;

    auto solve = [&](double r, Vec& best, double& best_s) {
        Vec lo(path.values.size()), hi(path.values.size());
        for (std::size_t i = 0; i < lo.size(); ++i) {
            lo[i] = path.values[i] - r;
            hi[i] = path.values[i] + r;
        }
        Vec start(path.values.size());
        for (std::size_t i = 0; i < start.size(); ++i) start[i] = free[i] ? std::clamp(flow[i], lo[i], hi[i]) : path.values[i];
        best = start;
        best_s = evaluate(rate, start, m, path.T, false, p.fd_x_step, p.jobs).value;
        if (best_s <= s + slack) return true;
        for (const Vec* init : {static_cast<const Vec*>(&start), &path.values}) {
            if (!std::isfinite(evaluate(rate, *init, m, path.T, false, p.fd_x_step, p.jobs).value)) continue;
            DescentOutcome o = descend(rate, *init, m, path.T, free, lo, hi, p);
            if (o.eval.value < best_s) {
                best_s = o.eval.value;
                best = o.nodes;
            }
            if (best_s <= s + slack) return true;
        }
        return false;
    };

    Vec xi;
    double xi_s = kInf;
    bool ok = solve(r_hi, xi, xi_s);
    for (int grow = 0; !ok && grow < 10; ++grow) {
        r_hi *= 2.0;
        ok = solve(r_hi, xi, xi_s);
    }
    if (!ok) {
        res.distance = r_hi;
        res.achieved_action = xi_s;
        res.xi = Path(path.T, d, xi);
        res.converged = false;
        res.note = "no feasible member of the level set found; best effort reported";
        return res;
    }
    double r_lo = 0.0;
    while (r_hi - r_lo > r_tol) {
        const double mid = 0.5 * (r_lo + r_hi);
        Vec cand;
        double cand_s = kInf;
        if (solve(mid, cand, cand_s)) {
            r_hi = mid;
            xi = std::move(cand);
            xi_s = cand_s;
        } else {
            r_lo = mid;
        }
    }
    res.distance = r_hi;
    res.achieved_action = xi_s;
    res.xi = Path(path.T, d, std::move(xi));
    res.converged = true;
    res.note = fmt::format("bisection on the tube radius to within {}", r_tol);
    return res;
}

std::string minpath_json(const MinActionResult& r) {
    nlohmann::json j{{"value", std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json("inf")},
                     {"iterations", r.iterations},
                     {"grad_norm", std::isfinite(r.grad_norm) ? nlohmann::json(r.grad_norm) : nlohmann::json("inf")},
                     {"converged", r.converged},
                     {"per_iter", r.per_iter},
                     {"near_boundary_segments", r.near_boundary_segments},
                     {"warnings", r.warnings}};
    return j.dump(2);
}

}  // namespace slowfast
