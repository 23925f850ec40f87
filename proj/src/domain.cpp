#include "slowfast/domain.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace slowfast {

bool DomainBox::admits(std::span<const double> alpha, double degenerate_tol) const {
    for (std::size_t k = 0; k < directions.size(); ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) proj += alpha[i] * directions[k][i];
        if (degenerate[k]) {
            if (std::abs(proj - M[k]) > degenerate_tol) return false;
        } else if (!(proj > m[k] && proj < M[k])) {
            return false;
        }
    }
    return true;
}

std::vector<Vec> default_directions(int d) {
    std::vector<Vec> dirs;
    for (int i = 0; i < d; ++i) {
        Vec e(static_cast<std::size_t>(d), 0.0);
        e[static_cast<std::size_t>(i)] = 1.0;
        dirs.push_back(std::move(e));
    }
    const double s = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            for (double sign : {1.0, -1.0}) {
                Vec e(static_cast<std::size_t>(d), 0.0);
                e[static_cast<std::size_t>(i)] = s;
                e[static_cast<std::size_t>(j)] = sign * s;
                dirs.push_back(std::move(e));
            }
    return dirs;
}

namespace {

// Maximizes g along one fast axis on [c - h, c + h] by golden section.
template <typename G>
double golden_max(G&& g, double lo, double hi, int iters = 60) {
    constexpr double r = 0.6180339887498949;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < iters; ++i) {
        if (gc > gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - r * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + r * (b - a);
            gd = g(d);
        }
    }
    return gc > gd ? c : d;
}

}  // namespace

DomainBox domain_box(const SystemSpec& spec, std::span<const double> x, const std::vector<Vec>& directions,
                     int grid_n) {
    require(grid_n >= 32, "domain_box: grid_n must be >= 32");
    require(static_cast<int>(x.size()) == spec.dim_slow, "domain_box: x has wrong dimension");
    const int l = spec.dim_fast();
    const auto& geom = spec.geometry;
    std::size_t nodes = 1;
    for (int a = 0; a < l; ++a) nodes *= static_cast<std::size_t>(grid_n);

    DomainBox box;
    Vec fv(static_cast<std::size_t>(spec.dim_slow));
    Vec y(static_cast<std::size_t>(l));

    auto node_point = [&](std::size_t flat, Vec& out) {
        for (int a = 0; a < l; ++a) {
            const std::size_t i = flat % static_cast<std::size_t>(grid_n);
            flat /= static_cast<std::size_t>(grid_n);
            out[static_cast<std::size_t>(a)] = geom.period[static_cast<std::size_t>(a)] * static_cast<double>(i) / grid_n;
        }
    };

    for (const Vec& v : directions) {
        require(v.size() == x.size(), "domain_box: direction has wrong dimension");
        double nv = 0.0;
        for (double c : v) nv += c * c;
        require(std::abs(std::sqrt(nv) - 1.0) < 1e-9, "domain_box: directions must be unit vectors");

        auto proj = [&](std::span<const double> yy) {
            spec.f(x, yy, fv);
            double s = 0.0;
            for (std::size_t i = 0; i < fv.size(); ++i) s += fv[i] * v[i];
            return s;
        };

        double best_hi = -kInf, best_lo = kInf;
        Vec y_hi(y.size()), y_lo(y.size());
        for (std::size_t n = 0; n < nodes; ++n) {
            node_point(n, y);
            const double p = proj(y);
            if (p > best_hi) {
                best_hi = p;
                y_hi = y;
            }
            if (p < best_lo) {
                best_lo = p;
                y_lo = y;
            }
        }

        // Coordinate-wise golden-section polish around the best nodes.
        auto refine = [&](Vec start, double sign, double best) {
            for (int sweep = 0; sweep < 3; ++sweep) {
                for (int a = 0; a < l; ++a) {
                    const double h = geom.period[static_cast<std::size_t>(a)] / grid_n;
                    const double c = start[static_cast<std::size_t>(a)];
                    Vec probe = start;
                    auto g = [&](double t) {
                        probe[static_cast<std::size_t>(a)] = t;
                        return sign * proj(probe);
                    };
                    const double t = golden_max(g, c - h, c + h);
                    const double val = g(t);
                    if (val > sign * best) {
                        best = sign * val;
                        start[static_cast<std::size_t>(a)] = t;
                    }
                }
            }
            return best;
        };
        best_hi = refine(y_hi, 1.0, best_hi);
        best_lo = refine(y_lo, -1.0, best_lo);

        box.directions.push_back(v);
        box.M.push_back(best_hi);
        box.m.push_back(best_lo);
        box.degenerate.push_back(best_hi - best_lo < 1e-9);
    }
    return box;
}

}  // namespace slowfast
