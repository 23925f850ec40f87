// slowfast: command-line front end.
//
//   slowfast <command> --config cfg.json [--seed N] [--jobs N] [--out-dir DIR] [--override key=value ...]
//
// Every command writes its outputs plus manifest.json into the output
// directory (default: $SLOWFAST_OUT_DIR, else ./slowfast-out/<command>).

#include "slowfast/action.hpp"
#include "slowfast/config.hpp"
#include "slowfast/fastsim.hpp"
#include "slowfast/hamiltonian.hpp"
#include "slowfast/io.hpp"
#include "slowfast/ldp.hpp"
#include "slowfast/minpath.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/random.hpp"
#include "slowfast/rate.hpp"
#include "slowfast/twoscale.hpp"

#include "CLI11.hpp"
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace slowfast;
using config::Json;
using config::View;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUnexpected = 1,
    kConfigError = 2,
    kUnknownSystem = 3,
    kInvalidArgument = 4,
    kConvergence = 5,
    kBlowup = 6,
    kInfeasible = 7,
    kLibraryError = 8,
    kIoError = 9,
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Context {
    std::string command;
    Json cfg;
    std::uint64_t seed = 0;
    int jobs = 0;
    fs::path out_dir;
    std::vector<std::string> outputs;
    SystemPtr system;

    [[nodiscard]] View section() const {
        static const Json empty = Json::object();
        const Json& j = cfg.contains(command) ? cfg.at(command) : empty;
        return {j, command};
    }
    [[nodiscard]] std::uint64_t stream(const std::string& tag) const { return derive_seed(seed, tag); }

    void write(const std::string& name, const std::string& content) {
        const fs::path p = out_dir / name;
        fs::create_directories(p.parent_path());
        std::ofstream out(p, std::ios::binary);
        if (!out) throw IoError(fmt::format("cannot write {}", p.string()));
        out << content;
        if (!out) throw IoError(fmt::format("write failed: {}", p.string()));
        outputs.push_back(name);
    }
    template <typename Fn>
    void write_with(const std::string& name, Fn&& fn) {
        std::ostringstream ss;
        fn(ss);
        write(name, ss.str());
    }
};

Json num_json(double v) {
    if (std::isfinite(v)) return v;
    return io::num(v);
}

Vec default_vec(int d, double v = 0.0) { return Vec(static_cast<std::size_t>(d), v); }

BetaBox box_from(const View& v, int d, double radius) {
    if (!v.has("box")) return BetaBox::symmetric(d, radius);
    const Json& b = v.raw().at("box");
    if (b.is_object()) {
        const View bv(b, v.field("box"));
        bv.only({"lo", "hi"});
        return {bv.vec("lo", d), bv.vec("hi", d)};
    }
    const Vec lohi = v.vec("box", 2);
    return {default_vec(d, lohi[0]), default_vec(d, lohi[1])};
}

SurfaceOptions surface_options(const View& v, int jobs) {
    SurfaceOptions so;
    so.grid_n = static_cast<int>(v.integer("grid_n", 128));
    so.fd_step = v.number("fd_step", 0.01);
    so.eigen.tol = v.number("eigen_tol", 1e-10);
    so.eigen.check_grid = v.boolean("check_grid", false);
    so.jobs = jobs;
    return so;
}

RateOptions rate_options(const View& v) {
    RateOptions ro;
    ro.trunc_b = v.number("trunc_b", kInf);
    ro.solver_tol = v.number("solver_tol", 1e-5);
    ro.exact_polish = v.boolean("exact_polish", false);
    if (!(ro.trunc_b > 0.0)) throw ConfigError(fmt::format("field '{}': must be > 0", v.field("trunc_b")));
    return ro;
}

std::shared_ptr<const RateFunction> make_rate(const Context& ctx, const View& v, double radius, int n) {
    const int d = ctx.system->dim_slow;
    return std::make_shared<const RateFunction>(ctx.system, box_from(v, d, radius),
                                                static_cast<int>(v.integer("n_per_axis", n)),
                                                surface_options(v, ctx.jobs), rate_options(v));
}

// {"file": "p.csv"} or {"T", "segments", "x0", "slope", "amplitude"}:
// x0 + slope t + amplitude sin(t).
Path path_from(const View& v, int d) {
    if (v.has("file")) {
        v.only({"file"});
        std::ifstream in(v.text("file"));
        if (!in) throw ConfigError(fmt::format("field '{}': cannot open {}", v.field("file"), v.text("file")));
        Path p = read_path_csv(in);
        if (p.dim != d) throw ConfigError(fmt::format("field '{}': path dimension {} != {}", v.field("file"), p.dim, d));
        return p;
    }
    v.only({"T", "segments", "x0", "slope", "amplitude"});
    const double T = v.number("T", 1.0);
    const int segments = static_cast<int>(v.integer("segments", 100));
    const Vec x0 = v.vec("x0", default_vec(d), d);
    const Vec slope = v.vec("slope", default_vec(d), d);
    const Vec amp = v.vec("amplitude", default_vec(d), d);
    if (!(T > 0.0) || segments < 1) throw ConfigError(fmt::format("field '{}': need T > 0 and segments >= 1", v.path()));
    return Path::from_function(T, segments, d, [&](double t) {
        Vec p(x0);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] += slope[i] * t + amp[i] * std::sin(t);
        return p;
    });
}

Json domain_json(const DomainBox& b) {
    Json j = Json::array();
    for (std::size_t k = 0; k < b.size(); ++k)
        j.push_back({{"direction", b.directions[k]}, {"m", b.m[k]}, {"M", b.M[k]}, {"degenerate", static_cast<bool>(b.degenerate[k])}});
    return j;
}

// ---------------------------------------------------------------------------

void cmd_validate(Context& ctx) {
    const View v = ctx.section();
    v.only({"samples", "x_radius"});
    const ValidationReport r =
        validate(*ctx.system, v.integer("samples", 1000), ctx.stream("validate"), v.number("x_radius", kPi));
    const Json j{{"system", ctx.system->name},
                 {"samples", r.samples},
                 {"max_abs_f", r.max_abs_f},
                 {"lipschitz_f", r.lipschitz_f},
                 {"lipschitz_B", r.lipschitz_B},
                 {"lipschitz_C", r.lipschitz_C},
                 {"min_eig_diffusion", num_json(r.min_eig_diffusion)},
                 {"max_periodicity_defect", r.max_periodicity_defect},
                 {"nonfinite", r.nonfinite},
                 {"violations", r.violations},
                 {"ok", r.ok()}};
    ctx.write("validation.json", j.dump(2) + "\n");
}

void cmd_ham(Context& ctx) {
    const View v = ctx.section();
    v.only({"x_prime", "x", "box", "n_per_axis", "grid_n", "fd_step", "eigen_tol", "check_grid"});
    const int d = ctx.system->dim_slow;
    const Vec xp = v.vec("x_prime", default_vec(d), d);
    const Vec x = v.vec("x", xp, d);
    SurfaceOptions so = surface_options(v, ctx.jobs);
    so.attach_exact = false;
    const HamiltonianSurface s =
        build_surface(ctx.system, xp, x, box_from(v, d, 2.0), static_cast<int>(v.integer("n_per_axis", 21)), so);
    ctx.write_with("surface.csv", [&](std::ostream& os) { write_surface_csv(os, s); });
    ctx.write("surface.json", surface_sidecar_json(s) + "\n");
}

void cmd_rate(Context& ctx) {
    const View v = ctx.section();
    v.only({"x", "alpha", "box", "n_per_axis", "grid_n", "fd_step", "eigen_tol", "check_grid", "trunc_b", "solver_tol",
            "exact_polish"});
    const int d = ctx.system->dim_slow;
    const Vec x = v.vec("x", default_vec(d), d);
    const auto rate = make_rate(ctx, v, 5.0, 101);
    std::vector<Vec> alphas;
    if (v.has("alpha") && v.raw().at("alpha").is_object()) {
        const View a = v.sub("alpha");
        a.only({"from", "to", "count"});
        if (d != 1) throw ConfigError(fmt::format("field '{}': ranges need a 1-d system", a.path()));
        const double from = a.number("from"), to = a.number("to");
        const long count = a.integer("count");
        if (count < 2) throw ConfigError(fmt::format("field '{}': must be >= 2", a.field("count")));
        for (long i = 0; i < count; ++i) alphas.push_back({from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1)});
    } else if (v.has("alpha")) {
        for (std::size_t i = 0; i < v.raw().at("alpha").size(); ++i) {
            const Json& e = v.raw().at("alpha")[i];
            Vec a = e.is_array() ? e.get<Vec>() : Vec{e.get<double>()};
            if (static_cast<int>(a.size()) != d)
                throw ConfigError(fmt::format("field '{}[{}]': expected {} entries", v.field("alpha"), i, d));
            alphas.push_back(std::move(a));
        }
    } else {
        for (int i = -10; i <= 10; ++i) {
            Vec a(static_cast<std::size_t>(d), 0.0);
            a[0] = 0.1 * i;
            alphas.push_back(std::move(a));
        }
    }
    ctx.write_with("l_curve.csv", [&](std::ostream& os) { write_l_curve(os, *rate, x, alphas); });
    const HamiltonianSurface& s = rate->surface_at(x);
    const SlopeReport sr = interior_slope_check(s, s.domain());
    Json slopes = Json::array();
    for (const auto& e : sr.entries)
        slopes.push_back({{"direction", e.direction}, {"slope", e.slope}, {"margin_low", e.margin_low},
                          {"margin_high", e.margin_high}, {"degenerate", e.degenerate}, {"ok", e.ok}, {"note", e.note}});
    const Json j{{"x", x},
                 {"averaged_drift", rate->averaged_drift(x)},
                 {"trunc_b", num_json(rate->options().trunc_b)},
                 {"domain", domain_json(s.domain())},
                 {"interior_slope_check", {{"ok", sr.ok}, {"checked_any", sr.checked_any}, {"entries", slopes}}}};
    ctx.write("rate.json", j.dump(2) + "\n");
}

void cmd_action(Context& ctx) {
    const View v = ctx.section();
    v.only({"path", "m_list", "offset_a", "nu", "box", "n_per_axis", "grid_n", "fd_step", "eigen_tol", "check_grid",
            "trunc_b", "solver_tol", "exact_polish"});
    const int d = ctx.system->dim_slow;
    const Path path = path_from(v.sub("path"), d);
    const auto rate = make_rate(ctx, v, 5.0, 101);
    const ActionValue s = action(path, *rate, ctx.jobs);
    ctx.write_with("path.csv", [&](std::ostream& os) { write_path_csv(os, path); });
    ctx.write("action.json", action_json(s) + "\n");
    const std::vector<long> ms = v.integers("m_list", {});
    if (!ms.empty()) {
        if (!s.finite()) throw InvalidArgument("action: S(phi) is infinite; convergence table needs a finite action");
        const double a = v.number("offset_a", 0.0);
        const ActionConvergence c = action_convergence(path, *rate, std::vector<int>(ms.begin(), ms.end()),
                                                       v.number("nu", 1e-2), a, ctx.jobs);
        ctx.write_with("convergence.csv", [&](std::ostream& os) {
            io::CsvWriter w(os, {"m", "action", "discrepancy"});
            for (const auto& r : c.rows) w.row({std::to_string(r.m), io::num(r.action), io::num(r.discrepancy)});
        });
        const Json j{{"reference", c.reference}, {"nu", c.nu}, {"nonincreasing", c.nonincreasing},
                     {"eventually_nonincreasing", c.eventually_nonincreasing}, {"below_nu", c.below_nu}};
        ctx.write("convergence.json", j.dump(2) + "\n");
    }
}

void cmd_simulate(Context& ctx) {
    const View v = ctx.section();
    v.only({"x0", "y0", "epsilon", "T", "dt_fast", "replicas", "record_every"});
    const int d = ctx.system->dim_slow;
    const Vec x0 = v.vec("x0", default_vec(d), d);
    const Vec y0 = v.vec("y0", default_vec(ctx.system->dim_fast()), ctx.system->dim_fast());
    const SimConfig cfg{v.number("epsilon", 0.1), v.number("T", 1.0), v.number("dt_fast", 0.01), ctx.stream("simulate"),
                        v.integer("replicas", 1)};
    cfg.validate();
    if (cfg.replicas > 1000) throw ConfigError(fmt::format("field '{}': at most 1000 trajectories", v.field("replicas")));
    const long every = v.integer("record_every", 1);
    std::vector<CoupledTrajectory> trajs(static_cast<std::size_t>(cfg.replicas));
    parallel_for(trajs.size(), ctx.jobs, [&](std::size_t r) { trajs[r] = simulate_coupled(*ctx.system, x0, y0, cfg, r, every); });
    Json ends = Json::array();
    for (std::size_t r = 0; r < trajs.size(); ++r) {
        ctx.write_with(fmt::format("trajectory_{}.csv", r), [&](std::ostream& os) { write_csv(os, trajs[r]); });
        const auto xe = trajs[r].x(trajs[r].size() - 1);
        ends.push_back(Vec(xe.begin(), xe.end()));
    }
    const Json j{{"epsilon", cfg.epsilon}, {"T", cfg.T}, {"dt_fast", cfg.dt_fast}, {"replicas", cfg.replicas},
                 {"x_T", ends}};
    ctx.write("simulate.json", j.dump(2) + "\n");
}

void cmd_lemma5(Context& ctx) {
    const View v = ctx.section();
    v.only({"x_prime", "x", "beta", "y0", "epsilon", "Delta", "nu", "c", "t_eps", "dt_fast", "replicas", "H_ref",
            "grid_n", "b"});
    const int d = ctx.system->dim_slow;
    const Vec xp = v.vec("x_prime", default_vec(d), d);
    const Vec x = v.vec("x", xp, d);
    const Vec beta = v.vec("beta", default_vec(d, 0.3), d);
    const Vec y0 = v.vec("y0", default_vec(ctx.system->dim_fast()), ctx.system->dim_fast());
    double bn = 0.0;
    for (double b : beta) bn += b * b;
    const double b_cap = v.number("b", 1.0);
    if (std::sqrt(bn) > b_cap)
        throw ConfigError(fmt::format("field '{}': |beta| exceeds the configured b = {}", v.field("beta"), b_cap));
    const SimConfig cfg{v.number("epsilon", 0.1), v.number("Delta", 0.2), v.number("dt_fast", 0.01),
                        ctx.stream("verify-lemma5"), v.integer("replicas", 100000)};
    TwoScaleSchedule sched = TwoScaleSchedule::for_epsilon(cfg.epsilon, cfg.T, v.number("nu", 0.05), v.number("c", 1.0));
    if (v.has("t_eps")) sched.t_eps = v.number("t_eps");
    const double H = v.has("H_ref") ? v.number("H_ref")
                                    : h_spectral(*ctx.system, xp, x, beta, static_cast<int>(v.integer("grid_n", 256))).eigenvalue;
    const Lemma5Report r = verify_lemma5(*ctx.system, xp, x, beta, cfg, sched, H, y0, ctx.jobs);
    ctx.write("lemma5.json", lemma5_json(r) + "\n");
}

void cmd_ldp(Context& ctx) {
    const View v = ctx.section();
    v.only({"path", "delta", "epsilons", "replicas", "dt_fast", "y0", "action_ref", "nu_tol", "box", "n_per_axis",
            "grid_n", "fd_step", "eigen_tol", "check_grid", "trunc_b", "solver_tol", "exact_polish"});
    const int d = ctx.system->dim_slow;
    const Path phi = path_from(v.sub("path"), d);
    TubeConfig tc;
    tc.epsilons = v.vec("epsilons", tc.epsilons);
    tc.delta = v.number("delta", 0.3);
    tc.dt_fast = v.number("dt_fast", 0.01);
    tc.replicas = v.integer("replicas", 10000);
    tc.seed = ctx.stream("ldp");
    tc.y0 = v.vec("y0", default_vec(ctx.system->dim_fast()), ctx.system->dim_fast());
    for (std::size_t i = 1; i < tc.epsilons.size(); ++i)
        if (!(tc.epsilons[i] < tc.epsilons[i - 1]))
            throw ConfigError(fmt::format("field '{}': must be strictly decreasing", v.field("epsilons")));
    const double S = v.has("action_ref") ? v.number("action_ref") : action(phi, *make_rate(ctx, v, 5.0, 101), ctx.jobs).value;

    // Per-epsilon checkpoints let an interrupted sweep resume.
    const std::string key = config::hash(ctx.cfg) + ":" + std::to_string(ctx.seed);
    LdpEstimate est;
    est.delta = tc.delta;
    est.action_ref = S;
    est.all_censored = true;
    for (std::size_t i = 0; i < tc.epsilons.size(); ++i) {
        const std::string name = fmt::format("checkpoints/eps_{}.json", i);
        const fs::path file = ctx.out_dir / name;
        LdpRow row;
        bool resumed = false;
        if (fs::exists(file)) {
            try {
                std::ifstream in(file);
                const Json j = Json::parse(in);
                if (j.at("key").get<std::string>() == key) {
                    row.epsilon = j.at("epsilon").get<double>();
                    row.hits = j.at("hits").get<long>();
                    row.replicas = j.at("replicas").get<long>();
                    row.p_hat = j.at("p_hat").get<double>();
                    row.ci_low = j.at("ci_low").get<double>();
                    row.ci_high = j.at("ci_high").get<double>();
                    row.log_prob = io::parse_num(j.at("eps2_log_p").get<std::string>());
                    row.censored = j.at("censored").get<bool>();
                    resumed = true;
                }
            } catch (const std::exception&) {
                resumed = false;
            }
        }
        if (!resumed) row = tube_probability_at(*ctx.system, phi, tc.delta, tc.epsilons[i], tc, i, ctx.jobs);
        const Json cp{{"key", key},           {"epsilon", row.epsilon}, {"hits", row.hits},
                      {"replicas", row.replicas}, {"p_hat", row.p_hat}, {"ci_low", row.ci_low},
                      {"ci_high", row.ci_high}, {"eps2_log_p", io::num(row.log_prob)}, {"censored", row.censored}};
        ctx.write(name, cp.dump(2) + "\n");
        est.rows.push_back(row);
        est.all_censored = est.all_censored && row.censored;
    }
    const TrendReport t = trend_check(est, v.number("nu_tol", 0.1));
    ctx.write_with("ldp.csv", [&](std::ostream& os) { write_csv(os, est); });
    ctx.write("ldp.json", ldp_json(est, t) + "\n");
}

void cmd_minpath(Context& ctx) {
    const View v = ctx.section();
    v.only({"x_start", "x_end", "T", "m", "max_iters", "tol", "quasi_newton", "fd_x_step", "init", "level_set", "box",
            "n_per_axis", "grid_n", "fd_step", "eigen_tol", "check_grid", "trunc_b", "solver_tol", "exact_polish"});
    const int d = ctx.system->dim_slow;
    MinActionProblem p;
    p.rate = make_rate(ctx, v, 5.0, 101);
    p.x_start = v.vec("x_start", default_vec(d), d);
    p.x_end = v.vec("x_end", p.x_start, d);
    p.T = v.number("T", 1.0);
    p.m = static_cast<int>(v.integer("m", 16));
    p.max_iters = static_cast<int>(v.integer("max_iters", 2000));
    p.tol = v.number("tol", 1e-6);
    p.quasi_newton = v.boolean("quasi_newton", false);
    p.fd_x_step = v.number("fd_x_step", 1e-3);
    p.jobs = ctx.jobs;
    Path init;
    if (v.has("init") && !(v.raw().at("init").is_string() && v.text("init") == "linear")) {
        init = path_from(v.sub("init"), d);
    }
    const MinActionResult r = minimize_action(p, init);
    ctx.write_with("path.csv", [&](std::ostream& os) { write_path_csv(os, r.path); });
    ctx.write("minpath.json", minpath_json(r) + "\n");
    if (v.has("level_set")) {
        const View ls = v.sub("level_set");
        ls.only({"s", "path", "r_tol"});
        const Path target = path_from(ls.sub("path"), d);
        const LevelSetResult res = level_set_distance(target, ls.number("s"), p, ls.number("r_tol", 1e-4));
        const Json j{{"s", ls.number("s")}, {"distance", res.distance}, {"achieved_action", num_json(res.achieved_action)},
                     {"converged", res.converged}, {"note", res.note}};
        ctx.write("level_set.json", j.dump(2) + "\n");
        ctx.write_with("level_set_path.csv", [&](std::ostream& os) { write_path_csv(os, res.xi); });
    }
}

void write_manifest(Context& ctx) {
    const Json j{{"command", ctx.command},
                 {"config_hash", config::hash(ctx.cfg)},
                 {"seed", ctx.seed},
                 {"tool_version", SLOWFAST_VERSION},
                 {"outputs", ctx.outputs}};
    std::ofstream out(ctx.out_dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest.json");
    out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Large-deviation toolkit for averaged slow-fast SDEs"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    std::optional<std::uint64_t> seed_flag;
    int jobs = 1;
    std::string out_dir;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--seed", seed_flag, "Master seed (overrides the config's \"seed\")");
    app.add_option("--jobs", jobs, "Worker threads (0 = hardware concurrency)")->check(CLI::NonNegativeNumber);
    app.add_option("--out-dir", out_dir, "Output directory (default $SLOWFAST_OUT_DIR or ./slowfast-out/<command>)");
    app.add_option("--override", overrides, "key.sub=value, applied to the config in order");
    app.set_version_flag("--version", SLOWFAST_VERSION);

    const std::vector<std::pair<std::string, std::string>> commands{
        {"validate", "Spot-check the declared bounds of the system"},
        {"ham", "Tabulate H(x', x, beta) on a beta grid"},
        {"rate", "L curves, averaged drift and domain box"},
        {"action", "Action functional of a path"},
        {"simulate", "Coupled slow-fast trajectories"},
        {"verify-lemma5", "Exponential-moment estimate against Delta * H"},
        {"ldp", "Tube-probability sweep over epsilon"},
        {"minpath", "Minimum-action path between two points"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        ctx.cfg = config::load(config_path);
        for (const auto& o : overrides) config::apply_override(ctx.cfg, o);
        if (!ctx.cfg.is_object()) throw ConfigError("config: top level must be an object");
        View top(ctx.cfg, "");
        std::vector<const char*> allowed{"system", "seed"};
        for (const auto& c : commands) allowed.push_back(c.first.c_str());
        for (auto it = ctx.cfg.begin(); it != ctx.cfg.end(); ++it) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || it.key() == a;
            if (!ok) throw ConfigError(fmt::format("field '{}': unknown key", it.key()));
        }
        if (!ctx.cfg.contains("system")) throw ConfigError("field 'system': missing");
        ctx.system = config::system_from_json(ctx.cfg.at("system"));
        ctx.seed = seed_flag ? *seed_flag : static_cast<std::uint64_t>(top.integer("seed", 0));
        ctx.jobs = jobs;
        set_default_jobs(jobs == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : jobs);
        if (!out_dir.empty()) {
            ctx.out_dir = out_dir;
        } else if (const char* env = std::getenv("SLOWFAST_OUT_DIR"); env && *env) {
            ctx.out_dir = fs::path(env) / ctx.command;
        } else {
            ctx.out_dir = fs::path("slowfast-out") / ctx.command;
        }
        fs::create_directories(ctx.out_dir);

        if (ctx.command == "validate") cmd_validate(ctx);
        else if (ctx.command == "ham") cmd_ham(ctx);
        else if (ctx.command == "rate") cmd_rate(ctx);
        else if (ctx.command == "action") cmd_action(ctx);
        else if (ctx.command == "simulate") cmd_simulate(ctx);
        else if (ctx.command == "verify-lemma5") cmd_lemma5(ctx);
        else if (ctx.command == "ldp") cmd_ldp(ctx);
        else if (ctx.command == "minpath") cmd_minpath(ctx);
        write_manifest(ctx);
        std::cout << fmt::format("{}: wrote {} files to {}", ctx.command, ctx.outputs.size() + 1, ctx.out_dir.string())
                  << std::endl;
        return kOk;
    } catch (const UnknownSystemError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUnknownSystem;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kInvalidArgument;
    } catch (const ConvergenceError& e) {
        std::cerr << "convergence error: " << e.what() << "\n";
        return kConvergence;
    } catch (const SimulationBlowup& e) {
        std::cerr << "simulation blowup: " << e.what() << "\n";
        return kBlowup;
    } catch (const InfeasiblePathError& e) {
        std::cerr << "infeasible path: " << e.what() << "\n";
        return kInfeasible;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kLibraryError;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kIoError;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kUnexpected;
    }
}
