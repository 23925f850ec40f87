#include "slowfast/model.hpp"

#include "slowfast/expression.hpp"
#include "slowfast/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace slowfast {

namespace {
std::atomic<int> g_default_jobs{1};
}

void set_default_jobs(int jobs) {
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    g_default_jobs.store(jobs);
}

int default_jobs() { return g_default_jobs.load(); }

TorusGeometry::TorusGeometry(int dim, double p) : dim_fast(dim), period(static_cast<std::size_t>(dim), p) {
    require(dim >= 1 && dim <= kMaxDim, fmt::format("fast dimension must be in [1, {}]", kMaxDim));
    require(p > 0.0, "torus period must be positive");
}

TorusGeometry::TorusGeometry(int dim, std::vector<double> periods) : dim_fast(dim), period(std::move(periods)) {
    require(dim >= 1 && dim <= kMaxDim, fmt::format("fast dimension must be in [1, {}]", kMaxDim));
    require(static_cast<int>(period.size()) == dim, "one period per fast coordinate required");
    for (double p : period) require(p > 0.0 && std::isfinite(p), "torus period must be positive");
}

double TorusGeometry::wrap_coord(double v, int axis) const {
    const double p = period[static_cast<std::size_t>(axis)];
    if (v >= 0.0 && v < p) return v;
    double r = v - p * std::floor(v / p);
    if (r >= p || r < 0.0) r = 0.0;
    return r;
}

void TorusGeometry::wrap(std::span<double> y) const {
    for (int i = 0; i < dim_fast; ++i) y[static_cast<std::size_t>(i)] = wrap_coord(y[static_cast<std::size_t>(i)], i);
}

double TorusGeometry::distance(std::span<const double> a, std::span<const double> b) const {
    double s = 0.0;
    for (int i = 0; i < dim_fast; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double p = period[k];
        double d = std::fmod(std::abs(a[k] - b[k]), p);
        d = std::min(d, p - d);
        s += d * d;
    }
    return std::sqrt(s);
}

Vec SystemSpec::eval_f(std::span<const double> x, std::span<const double> y) const {
    Vec out(static_cast<std::size_t>(dim_slow));
    f(x, y, out);
    return out;
}

Vec SystemSpec::eval_B(std::span<const double> x, std::span<const double> y) const {
    Vec out(static_cast<std::size_t>(dim_fast()));
    B(x, y, out);
    return out;
}

Vec SystemSpec::eval_C(std::span<const double> x, std::span<const double> y) const {
    const auto l = static_cast<std::size_t>(dim_fast());
    Vec out(l * l);
    C(x, y, out);
    return out;
}

Vec SystemSpec::eval_diffusion(std::span<const double> x, std::span<const double> y) const {
    const auto l = static_cast<std::size_t>(dim_fast());
    Vec c = eval_C(x, y);
    Vec a(l * l, 0.0);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j)
            for (std::size_t k = 0; k < l; ++k) a[i * l + j] += c[i * l + k] * c[j * l + k];
    return a;
}

namespace {

SystemPtr make_constant() {
    auto s = std::make_shared<SystemSpec>();
    s->name = "constant";
    s->description = "builtin:constant";
    s->f = [](auto, auto, std::span<double> out) { out[0] = 0.7; };
    s->B = [](auto, auto, std::span<double> out) { out[0] = 0.0; };
    s->C = [](auto, auto, std::span<double> out) { out[0] = 1.0; };
    s->f_sup_norm = 0.7;
    s->lipschitz_f = 0.0;
    s->nondegeneracy_floor = 1.0;
    s->x_independent = true;
    s->fast_x_independent = true;
    return s;
}

SystemPtr make_cosine_ring() {
    auto s = std::make_shared<SystemSpec>();
    s->name = "cosine-ring";
    s->description = "builtin:cosine-ring";
    s->f = [](auto, std::span<const double> y, std::span<double> out) { out[0] = std::cos(y[0]); };
    s->B = [](auto, auto, std::span<double> out) { out[0] = 0.0; };
    s->C = [](auto, auto, std::span<double> out) { out[0] = 1.0; };
    s->f_sup_norm = 1.0;
    s->lipschitz_f = 1.0;
    s->nondegeneracy_floor = 1.0;
    s->x_independent = true;
    s->fast_x_independent = true;
    return s;
}

SystemPtr make_full_dep() {
    auto s = std::make_shared<SystemSpec>();
    s->name = "full-dep";
    s->description = "builtin:full-dep";
    s->f = [](auto, std::span<const double> y, std::span<double> out) { out[0] = std::cos(y[0]); };
    s->B = [](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = 0.3 * std::sin(x[0] - y[0]);
    };
    s->C = [](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = std::sqrt(1.0 + 0.5 * std::sin(x[0]) * std::cos(y[0]));
    };
    s->f_sup_norm = 1.0;
    s->lipschitz_f = 1.0;
    s->nondegeneracy_floor = 0.5;
    return s;
}

}  // namespace

const std::vector<BuiltinSystem>& builtin_registry() {
    static const std::vector<BuiltinSystem> registry{
        {"constant", make_constant(),
         "d=1, l=1, f=0.7, B=0, C=1. H(beta)=0.7*beta; L is 0 at alpha=0.7 and +inf elsewhere."},
        {"cosine-ring", make_cosine_ring(),
         "d=1, l=1, f=cos(y), B=0, C=1. H is the principal Mathieu eigenvalue: "
         "H(beta) = beta^2 - 1.75 beta^4 + O(beta^6); averaged drift 0; domain [-1, 1]."},
        {"full-dep", make_full_dep(),
         "d=1, l=1, f=cos(y), B=0.3 sin(x-y), C=sqrt(1+0.5 sin(x) cos(y)). "
         "Drift and diffusion of the fast motion both depend on the slow variable."},
    };
    return registry;
}

std::vector<std::string> builtin_names() {
    std::vector<std::string> names;
    for (const auto& b : builtin_registry()) names.push_back(b.name);
    return names;
}

SystemPtr builtin(const std::string& name) {
    for (const auto& b : builtin_registry())
        if (b.name == name) return b.spec;
    throw UnknownSystemError(
        fmt::format("unknown builtin system '{}'; valid names: {}", name, fmt::join(builtin_names(), ", ")));
}

SystemPtr make_expression_system(const ExpressionSystem& def, std::string name) {
    const int d = def.dim_slow;
    const int l = def.dim_fast;
    if (d < 1 || d > kMaxDim) throw ConfigError(fmt::format("dim_slow must be in [1, {}]", kMaxDim));
    if (l < 1 || l > kMaxDim) throw ConfigError(fmt::format("dim_fast must be in [1, {}]", kMaxDim));
    if (static_cast<int>(def.f.size()) != d)
        throw ConfigError(fmt::format("f needs {} expressions, got {}", d, def.f.size()));
    if (static_cast<int>(def.B.size()) != l)
        throw ConfigError(fmt::format("B needs {} expressions, got {}", l, def.B.size()));
    if (static_cast<int>(def.C.size()) != l * l)
        throw ConfigError(fmt::format("C needs {} expressions (row-major), got {}", l * l, def.C.size()));
    if (def.f_sup_norm < 0.0) throw ConfigError("f_sup_norm must be nonnegative");
    if (def.lipschitz_f < 0.0) throw ConfigError("lipschitz_f must be nonnegative");
    if (def.nondegeneracy_floor <= 0.0) throw ConfigError("nondegeneracy_floor must be positive");

    auto compile = [&](const std::vector<std::string>& src) {
        std::vector<Expression> out;
        out.reserve(src.size());
        for (const auto& t : src) out.push_back(Expression::parse(t, d, l));
        return out;
    };
    auto fe = std::make_shared<const std::vector<Expression>>(compile(def.f));
    auto be = std::make_shared<const std::vector<Expression>>(compile(def.B));
    auto ce = std::make_shared<const std::vector<Expression>>(compile(def.C));

    auto field = [](std::shared_ptr<const std::vector<Expression>> ex) {
        return [ex](std::span<const double> x, std::span<const double> y, std::span<double> out) {
            for (std::size_t i = 0; i < ex->size(); ++i) out[i] = (*ex)[i](x, y);
        };
    };
    auto uses_x = [](const std::vector<Expression>& ex) {
        return std::any_of(ex.begin(), ex.end(), [](const Expression& e) { return e.uses_slow(); });
    };

    auto s = std::make_shared<SystemSpec>();
    s->name = std::move(name);
    s->dim_slow = d;
    s->geometry = def.period.empty() ? TorusGeometry(l) : TorusGeometry(l, def.period);
    s->f = field(fe);
    s->B = field(be);
    s->C = field(ce);
    s->f_sup_norm = def.f_sup_norm;
    s->lipschitz_f = def.lipschitz_f;
    s->nondegeneracy_floor = def.nondegeneracy_floor;
    s->fast_x_independent = !uses_x(*be) && !uses_x(*ce);
    s->x_independent = s->fast_x_independent && !uses_x(*fe);
    s->description = fmt::format("expr:d={};l={};period={};f=[{}];B=[{}];C=[{}]", d, l,
                                 fmt::join(s->geometry.period, ","), fmt::join(def.f, ";"),
                                 fmt::join(def.B, ";"), fmt::join(def.C, ";"));
    return s;
}

namespace {

double min_eigenvalue(const Vec& a, int l) {
    if (l == 1) return a[0];
    Eigen::MatrixXd m(l, l);
    for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j) m(i, j) = a[static_cast<std::size_t>(i * l + j)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double norm_diff(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
}

bool all_finite(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double z) { return std::isfinite(z); });
}

}  // namespace

ValidationReport validate(const SystemSpec& spec, long samples, std::uint64_t seed, double x_radius) {
    require(samples >= 1, "validate: samples must be >= 1");
    const int d = spec.dim_slow;
    const int l = spec.dim_fast();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    ValidationReport rep;
    rep.samples = samples;
    Vec x(static_cast<std::size_t>(d)), y(static_cast<std::size_t>(l));
    Vec x2(x.size()), y2(y.size()), yp(y.size());
    constexpr double kPairScale = 0.05;

    for (long s = 0; s < samples; ++s) {
        for (auto& v : x) v = (2.0 * unit(rng) - 1.0) * x_radius;
        for (int j = 0; j < l; ++j) y[static_cast<std::size_t>(j)] = unit(rng) * spec.geometry.period[static_cast<std::size_t>(j)];
        double dist2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double h = kPairScale * gauss(rng);
            x2[i] = x[i] + h;
            dist2 += h * h;
        }
        for (std::size_t j = 0; j < y.size(); ++j) {
            const double h = kPairScale * gauss(rng);
            y2[j] = y[j] + h;
            dist2 += h * h;
        }
        const double dist = std::sqrt(dist2);

        const Vec f1 = spec.eval_f(x, y), f2 = spec.eval_f(x2, y2);
        const Vec b1 = spec.eval_B(x, y), b2 = spec.eval_B(x2, y2);
        const Vec c1 = spec.eval_C(x, y), c2 = spec.eval_C(x2, y2);
        if (!all_finite(f1) || !all_finite(b1) || !all_finite(c1)) rep.nonfinite = true;

        double fn = 0.0;
        for (double v : f1) fn += v * v;
        rep.max_abs_f = std::max(rep.max_abs_f, std::sqrt(fn));
        if (dist > 0.0) {
            rep.lipschitz_f = std::max(rep.lipschitz_f, norm_diff(f1, f2) / dist);
            rep.lipschitz_B = std::max(rep.lipschitz_B, norm_diff(b1, b2) / dist);
            rep.lipschitz_C = std::max(rep.lipschitz_C, norm_diff(c1, c2) / dist);
        }
        rep.min_eig_diffusion = std::min(rep.min_eig_diffusion, min_eigenvalue(spec.eval_diffusion(x, y), l));

        for (int j = 0; j < l; ++j) {
            yp = y;
            yp[static_cast<std::size_t>(j)] += spec.geometry.period[static_cast<std::size_t>(j)];
            rep.max_periodicity_defect = std::max(rep.max_periodicity_defect, norm_diff(f1, spec.eval_f(x, yp)));
        }
    }

    // Lipschitz quotients are local secants; allow for second-order curvature.
    constexpr double kSecantSlack = 1.05;
    constexpr double kAbsTol = 1e-12;
    if (rep.nonfinite) rep.violations.emplace_back("non-finite coefficient value");
    if (rep.max_abs_f > spec.f_sup_norm + kAbsTol)
        rep.violations.push_back(
            fmt::format("max |f| = {:.6g} exceeds f_sup_norm = {:.6g}", rep.max_abs_f, spec.f_sup_norm));
    if (rep.lipschitz_f > kSecantSlack * spec.lipschitz_f + kAbsTol)
        rep.violations.push_back(fmt::format("Lipschitz quotient of f = {:.6g} exceeds lipschitz_f = {:.6g}",
                                             rep.lipschitz_f, spec.lipschitz_f));
    if (rep.min_eig_diffusion < spec.nondegeneracy_floor - kAbsTol)
        rep.violations.push_back(fmt::format("min eig(CC*) = {:.6g} below nondegeneracy_floor = {:.6g}",
                                             rep.min_eig_diffusion, spec.nondegeneracy_floor));
    if (rep.max_periodicity_defect > 1e-9)
        rep.violations.push_back(fmt::format("f not periodic in y: defect {:.3g}", rep.max_periodicity_defect));
    return rep;
}

}  // namespace slowfast
