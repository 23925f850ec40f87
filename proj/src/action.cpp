#include "slowfast/action.hpp"

#include "slowfast/io.hpp"
#include "slowfast/parallel.hpp"

#include "json.hpp"
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

namespace slowfast {

Path::Path(double T_, int dim_, Vec values_) : T(T_), dim(dim_), values(std::move(values_)) {
    require(T > 0.0, "Path: T must be positive");
    require(dim >= 1, "Path: dimension must be positive");
    require(values.size() % static_cast<std::size_t>(dim) == 0 && values.size() >= 2 * static_cast<std::size_t>(dim),
            "Path: need at least two nodes");
    for (double v : values) require(std::isfinite(v), "Path: values must be finite");
}

Path Path::from_function(double T, int segments, int dim, const std::function<Vec(double)>& fn) {
    require(segments >= 1, "Path: need at least one segment");
    Vec v;
    v.reserve(static_cast<std::size_t>((segments + 1) * dim));
    for (int k = 0; k <= segments; ++k) {
        const Vec p = fn(k == segments ? T : T * k / segments);
        require(static_cast<int>(p.size()) == dim, "Path: function returned wrong dimension");
        v.insert(v.end(), p.begin(), p.end());
    }
    return {T, dim, std::move(v)};
}

Path Path::linear(std::span<const double> x0, std::span<const double> alpha, double T, int segments) {
    require(x0.size() == alpha.size(), "Path::linear: dimension mismatch");
    const Vec a(x0.begin(), x0.end()), s(alpha.begin(), alpha.end());
    return from_function(T, segments, static_cast<int>(a.size()), [&](double t) {
        Vec p = a;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += s[i] * t;
        return p;
    });
}

Path Path::between(std::span<const double> a, std::span<const double> b, double T, int segments) {
    require(a.size() == b.size(), "Path::between: dimension mismatch");
    const Vec from(a.begin(), a.end()), to(b.begin(), b.end());
    return from_function(T, segments, static_cast<int>(from.size()), [&](double t) {
        const double w = t / T;
        Vec p(from.size());
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - w) * from[i] + w * to[i];
        return p;
    });
}

Vec Path::slope(int k) const {
    const auto a = node(k), b = node(k + 1);
    const double h = time(k + 1) - time(k);
    Vec s(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = (b[i] - a[i]) / h;
    return s;
}

Vec Path::eval(double t) const {
    const int n = segments();
    const double h = step();
    int k = static_cast<int>(std::floor(t / h));
    k = std::clamp(k, 0, n - 1);
    const double w = std::clamp((t - time(k)) / h, 0.0, 1.0);
    const auto a = node(k), b = node(k + 1);
    Vec p(static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = a[i] + w * (b[i] - a[i]);
    return p;
}

Vec Path::right_derivative(double t) const {
    const int n = segments();
    int k = static_cast<int>(std::floor(t / step() + 1e-9));
    return slope(std::clamp(k, 0, n - 1));
}

double Path::sup_distance(const Path& other) const {
    double d = 0.0;
    for (int k = 0; k <= segments(); ++k) {
        const Vec q = other.eval(time(k));
        const auto p = node(k);
        for (int i = 0; i < dim; ++i) d = std::max(d, std::abs(p[static_cast<std::size_t>(i)] - q[static_cast<std::size_t>(i)]));
    }
    return d;
}

namespace {

std::size_t piece_of(const Vec& breaks, double s) {
    auto it = std::upper_bound(breaks.begin(), breaks.end(), s);
    auto k = static_cast<std::ptrdiff_t>(it - breaks.begin()) - 1;
    k = std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(breaks.size()) - 2);
    return static_cast<std::size_t>(k);
}

}  // namespace

Vec StepPath::eval(double s) const {
    const auto p = piece(piece_of(breaks, s));
    return {p.begin(), p.end()};
}

Vec PiecewiseLinearPath::eval(double s) const {
    const std::size_t k = piece_of(breaks, s);
    Vec p(static_cast<std::size_t>(dim));
    const auto sl = slope(k);
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = knots[k * static_cast<std::size_t>(dim) + i] + sl[i] * (s - breaks[k]);
    return p;
}

double PiecewiseLinearPath::sup_distance(const Path& phi) const {
    double d = 0.0;
    auto probe = [&](double t) {
        const Vec a = eval(t), b = phi.eval(t);
        for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    };
    for (double t : breaks) probe(t);
    for (int k = 0; k <= phi.segments(); ++k) probe(phi.time(k));
    return d;
}

Discretization discretize(const Path& path, int m, double a) {
    require(m >= 1, "discretize: m must be >= 1");
    require(a >= 0.0 && a < path.T, "discretize: offset must lie in [0, T)");
    const double T = path.T;
    const double delta = T / m;
    const double eps = 1e-12 * T;

    // Piece k starts where s + a crosses k * Delta.
    auto k = static_cast<long>(std::floor(a / delta + 1e-12));
    Vec starts{0.0};
    Vec frozen{std::max(0.0, k * delta - a)};
    for (++k;; ++k) {
        const double s = k * delta - a;
        if (s >= T - eps) break;
        if (s <= eps) continue;
        starts.push_back(s);
        frozen.push_back(s);
    }

    Discretization out;
    StepPath& psi = out.psi;
    PiecewiseLinearPath& chi = out.chi;
    psi.T = chi.T = T;
    psi.dim = chi.dim = path.dim;
    psi.m = m;
    psi.offset_a = a;
    psi.breaks = starts;
    psi.breaks.push_back(T);
    chi.breaks = psi.breaks;

    const auto x0 = path.node(0);
    chi.knots.assign(x0.begin(), x0.end());
    for (std::size_t p = 0; p < starts.size(); ++p) {
        const double u = frozen[p] <= eps ? 0.0 : frozen[p];
        const Vec v = path.eval(u);
        const Vec d = path.right_derivative(u);
        psi.values.insert(psi.values.end(), v.begin(), v.end());
        chi.slopes.insert(chi.slopes.end(), d.begin(), d.end());
        const double len = psi.breaks[p + 1] - psi.breaks[p];
        for (int i = 0; i < path.dim; ++i)
            chi.knots.push_back(chi.knots[p * static_cast<std::size_t>(path.dim) + static_cast<std::size_t>(i)] +
                                d[static_cast<std::size_t>(i)] * len);
    }
    return out;
}

namespace {

ActionValue sum_segments(Vec per) {
    ActionValue v;
    v.per_segment = std::move(per);
    double s = 0.0;
    for (double p : v.per_segment) s += p;
    v.value = s;
    return v;
}

}  // namespace

ActionValue action(const Path& path, const RateFunction& rate, int jobs) {
    require(path.dim == rate.dim(), "action: path and rate dimensions differ");
    const int n = path.segments();
    Vec per(static_cast<std::size_t>(n));
    parallel_for(static_cast<std::size_t>(n), jobs, [&](std::size_t k) {
        const int kk = static_cast<int>(k);
        const auto a = path.node(kk), b = path.node(kk + 1);
        Vec mid(a.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (a[i] + b[i]);
        const double L = rate.L(mid, path.slope(kk));
        per[k] = L * (path.time(kk + 1) - path.time(kk));
    });
    return sum_segments(std::move(per));
}

ActionValue action(const Discretization& pair, const RateFunction& rate, int jobs) {
    const StepPath& psi = pair.psi;
    const PiecewiseLinearPath& chi = pair.chi;
    require(psi.dim == rate.dim(), "action: path and rate dimensions differ");
    Vec per(psi.pieces());
    parallel_for(psi.pieces(), jobs, [&](std::size_t k) {
        per[k] = (psi.breaks[k + 1] - psi.breaks[k]) * rate.L(psi.piece(k), chi.slope(k));
    });
    ActionValue v = sum_segments(std::move(per));
    v.m = psi.m;
    v.offset_a = psi.offset_a;
    return v;
}

ActionConvergence action_convergence(const Path& path, const RateFunction& rate, const std::vector<int>& m_list,
                                     double nu, double a, int jobs) {
    ActionConvergence rep;
    rep.nu = nu;
    rep.reference = action(path, rate, jobs).value;
    require(std::isfinite(rep.reference), "action_convergence: S(phi) must be finite");
    for (int m : m_list) {
        const double s = action(discretize(path, m, a), rate, jobs).value;
        rep.rows.push_back({m, s, std::abs(s - rep.reference)});
    }
    rep.nonincreasing = true;
    std::size_t tail_start = 0;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        if (rep.rows[i].discrepancy > rep.rows[i - 1].discrepancy + 1e-12) {
            rep.nonincreasing = false;
            tail_start = i;
        }
    }
    rep.eventually_nonincreasing = rep.rows.size() >= 2 && rep.rows.size() - tail_start >= 2;
    rep.below_nu = !rep.rows.empty() && rep.rows.back().discrepancy <= nu;
    return rep;
}

double offset_averaged_action(const Path& path, const RateFunction& rate, int m, const std::vector<double>& offsets,
                              int jobs) {
    require(!offsets.empty(), "offset_averaged_action: need at least one offset");
    double s = 0.0;
    for (double a : offsets) s += action(discretize(path, m, a), rate, jobs).value;
    return s / static_cast<double>(offsets.size());
}

void write_path_csv(std::ostream& os, const Path& path) {
    std::vector<std::string> header{"t"};
    for (auto& h : io::indexed("x", path.dim)) header.push_back(h);
    io::CsvWriter w(os, header);
    for (int k = 0; k <= path.segments(); ++k) {
        Vec row{path.time(k)};
        const auto p = path.node(k);
        row.insert(row.end(), p.begin(), p.end());
        w.row_numbers(row);
    }
}

Path read_path_csv(std::istream& is) {
    const io::CsvTable t = io::read_csv(is);
    const int tc = t.column("t");
    if (tc < 0) throw ConfigError("path csv lacks column t");
    int dim = 0;
    while (t.column(fmt::format("x_{}", dim + 1)) >= 0) ++dim;
    if (dim == 0) throw ConfigError("path csv lacks columns x_1..");
    if (t.rows.size() < 2) throw ConfigError("path csv needs at least two rows");
    Vec times, values;
    for (const auto& r : t.rows) {
        times.push_back(io::parse_num(r[static_cast<std::size_t>(tc)]));
        for (int i = 0; i < dim; ++i)
            values.push_back(io::parse_num(r[static_cast<std::size_t>(t.column(fmt::format("x_{}", i + 1)))]));
    }
    if (std::abs(times.front()) > 1e-12) throw ConfigError("path csv must start at t = 0");
    const double T = times.back();
    const double h = T / static_cast<double>(times.size() - 1);
    for (std::size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - h * static_cast<double>(k)) > 1e-9 * std::max(1.0, T))
            throw ConfigError(fmt::format("path csv times are not uniform (row {})", k + 1));
    return {T, dim, std::move(values)};
}

std::string action_json(const ActionValue& v) {
    nlohmann::json per = nlohmann::json::array();
    for (double p : v.per_segment) per.push_back(std::isfinite(p) ? nlohmann::json(p) : nlohmann::json("inf"));
    nlohmann::json j{{"value", std::isfinite(v.value) ? nlohmann::json(v.value) : nlohmann::json("inf")},
                     {"per_segment", per},
                     {"m", v.m},
                     {"a", v.offset_a}};
    return j.dump(2);
}

}  // namespace slowfast
