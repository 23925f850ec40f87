#include "slowfast/action.hpp"
#include "slowfast/config.hpp"
#include "slowfast/fastsim.hpp"
#include "slowfast/hamiltonian.hpp"
#include "slowfast/ldp.hpp"
#include "slowfast/minpath.hpp"
#include "slowfast/rate.hpp"
#include "slowfast/twoscale.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace slowfast;
using py::literals::operator""_a;

namespace {

py::array_t<double> matrix(const Vec& flat, std::size_t cols) {
    const std::size_t rows = cols == 0 ? 0 : flat.size() / cols;
    py::array_t<double> out({rows, cols});
    std::copy(flat.begin(), flat.end(), out.mutable_data());
    return out;
}

BetaBox make_box(int d, double radius) { return BetaBox::symmetric(d, radius); }

SurfaceOptions surface_options(int grid_n, double fd_step, double eigen_tol) {
    SurfaceOptions so;
    so.grid_n = grid_n;
    so.fd_step = fd_step;
    so.eigen.tol = eigen_tol;
    return so;
}

py::dict adjoint_dict(const AdjointResult& r) {
    return py::dict("value"_a = r.value, "beta_star"_a = r.beta_star, "on_boundary"_a = r.on_boundary,
                    "at_box_edge"_a = r.at_box_edge, "warnings"_a = r.warnings);
}

py::dict lemma5_dict(const Lemma5Report& r) {
    py::list blocks;
    for (const auto& b : r.blocks)
        blocks.append(py::dict("index"_a = b.index, "t_start"_a = b.t_start, "rate"_a = b.rate,
                               "deviation"_a = b.deviation, "ess"_a = b.ess));
    return py::dict("lambda_hat"_a = r.lambda_hat, "delta_H"_a = r.delta_H, "nu"_a = r.nu, "nu_hat"_a = r.nu_hat,
                    "pass"_a = r.pass, "stderr"_a = r.stderr_, "ess"_a = r.ess, "replicas"_a = r.replicas,
                    "unreliable"_a = r.unreliable, "epsilon"_a = r.epsilon, "Delta"_a = r.Delta, "t_eps"_a = r.t_eps,
                    "blocks"_a = blocks, "block_nu_hat"_a = r.block_nu_hat);
}

}  // namespace

PYBIND11_MODULE(_slowfast, m) {
    m.doc() = "Slow-fast large-deviation toolkit (C++ core)";
    m.attr("__version__") = SLOWFAST_VERSION;

    py::register_exception<Error>(m, "Error");
    py::register_exception<ConfigError>(m, "ConfigError", m.attr("Error"));
    py::register_exception<UnknownSystemError>(m, "UnknownSystemError", m.attr("Error"));
    py::register_exception<InvalidArgument>(m, "InvalidArgument", m.attr("Error"));
    py::register_exception<ConvergenceError>(m, "ConvergenceError", m.attr("Error"));
    py::register_exception<SimulationBlowup>(m, "SimulationBlowup", m.attr("Error"));
    py::register_exception<InfeasiblePathError>(m, "InfeasiblePathError", m.attr("Error"));

    py::class_<SystemSpec, std::shared_ptr<SystemSpec>>(m, "System")
        .def_readonly("name", &SystemSpec::name)
        .def_readonly("dim_slow", &SystemSpec::dim_slow)
        .def_property_readonly("dim_fast", &SystemSpec::dim_fast)
        .def_readonly("f_sup_norm", &SystemSpec::f_sup_norm)
        .def_readonly("x_independent", &SystemSpec::x_independent)
        .def("f", [](const SystemSpec& s, const Vec& x, const Vec& y) { return s.eval_f(x, y); }, "x"_a, "y"_a)
        .def("B", [](const SystemSpec& s, const Vec& x, const Vec& y) { return s.eval_B(x, y); }, "x"_a, "y"_a)
        .def("C", [](const SystemSpec& s, const Vec& x, const Vec& y) { return s.eval_C(x, y); }, "x"_a, "y"_a)
        .def("__repr__", [](const SystemSpec& s) { return "<System " + s.name + ">"; });

    auto as_mutable = [](SystemPtr p) { return std::const_pointer_cast<SystemSpec>(p); };
    m.def("builtin", [as_mutable](const std::string& name) { return as_mutable(builtin(name)); }, "name"_a);
    m.def("builtin_names", &builtin_names);
    m.def(
        "system_from_json",
        [as_mutable](const std::string& text) { return as_mutable(config::system_from_json(config::parse(text))); },
        "text"_a, "System from a JSON string: a builtin name or an expression object.");

    m.def(
        "validate",
        [](const SystemSpec& s, long samples, std::uint64_t seed) {
            const auto r = validate(s, samples, seed);
            return py::dict("max_abs_f"_a = r.max_abs_f, "lipschitz_f"_a = r.lipschitz_f,
                            "min_eig_diffusion"_a = r.min_eig_diffusion, "violations"_a = r.violations, "ok"_a = r.ok());
        },
        "system"_a, "samples"_a = 1000, "seed"_a = 0);

    m.def(
        "h_spectral",
        [](const SystemSpec& s, const Vec& xp, const Vec& x, const Vec& beta, int grid_n, double tol) {
            EigenOptions o;
            o.tol = tol;
            EigenPair e;
            {
                py::gil_scoped_release release;
                e = h_spectral(s, xp, x, beta, grid_n, o);
            }
            return py::dict("eigenvalue"_a = e.eigenvalue, "residual"_a = e.residual, "iterations"_a = e.iterations,
                            "eigenfunction"_a = py::array_t<double>(static_cast<py::ssize_t>(e.eigenfunction.size()),
                                                                    e.eigenfunction.data()),
                            "warnings"_a = e.warnings);
        },
        "system"_a, "x_prime"_a, "x"_a, "beta"_a, "grid_n"_a = 128, "tol"_a = 1e-10);

    m.def(
        "h_montecarlo",
        [](const SystemSpec& s, const Vec& xp, const Vec& x, const Vec& beta, double t, double dt, long replicas,
           std::uint64_t seed, const Vec& y0) {
            MonteCarloH r;
            {
                py::gil_scoped_release release;
                r = h_montecarlo(s, xp, x, beta, t, dt, replicas, seed, y0);
            }
            return py::dict("estimate"_a = r.estimate, "stderr"_a = r.stderr_, "ess"_a = r.ess,
                            "replicas"_a = r.replicas, "degenerate"_a = r.degenerate);
        },
        "system"_a, "x_prime"_a, "x"_a, "beta"_a, "t"_a, "dt"_a = 0.01, "replicas"_a = 1000, "seed"_a = 0,
        "y0"_a = Vec{});

    m.def(
        "grad_h",
        [](const SystemSpec& s, const Vec& xp, const Vec& x, const Vec& beta, double step, int grid_n) {
            return grad_h(s, xp, x, beta, step, grid_n);
        },
        "system"_a, "x_prime"_a, "x"_a, "beta"_a, "step"_a = 0.01, "grid_n"_a = 128,
        py::call_guard<py::gil_scoped_release>());

    py::class_<HamiltonianSurface>(m, "Surface")
        .def_property_readonly("dim", &HamiltonianSurface::dim)
        .def_property_readonly("n_per_axis", &HamiltonianSurface::n_per_axis)
        .def("value", [](const HamiltonianSurface& s, const Vec& b) { return s.value(b); }, "beta"_a)
        .def("gradient", [](const HamiltonianSurface& s, const Vec& b) { return s.gradient(b); }, "beta"_a)
        .def_property_readonly("nodes",
                               [](const HamiltonianSurface& s) {
                                   Vec flat;
                                   for (std::size_t k = 0; k < s.node_count(); ++k) {
                                       const Vec n = s.node(k);
                                       flat.insert(flat.end(), n.begin(), n.end());
                                   }
                                   return matrix(flat, static_cast<std::size_t>(s.dim()));
                               })
        .def_property_readonly("values",
                               [](const HamiltonianSurface& s) {
                                   Vec v(s.node_count());
                                   for (std::size_t k = 0; k < v.size(); ++k) v[k] = s.node_value(k);
                                   return v;
                               })
        .def_property_readonly("checks",
                               [](const HamiltonianSurface& s) {
                                   const auto& c = s.checks();
                                   return py::dict("ok"_a = c.ok(), "value_at_zero"_a = c.value_at_zero,
                                                   "max_convexity_violation"_a = c.max_convexity_violation,
                                                   "max_bound_excess"_a = c.max_bound_excess,
                                                   "min_eigenfunction"_a = c.min_eigenfunction,
                                                   "warnings"_a = c.warnings);
                               })
        .def_property_readonly("domain", [](const HamiltonianSurface& s) {
            const auto& d = s.domain();
            return py::dict("directions"_a = d.directions, "m"_a = d.m, "M"_a = d.M,
                            "degenerate"_a = std::vector<bool>(d.degenerate.begin(), d.degenerate.end()));
        });

    m.def(
        "build_surface",
        [](const std::shared_ptr<SystemSpec>& s, const Vec& xp, const Vec& x, double radius, int n_per_axis,
           int grid_n) {
            return build_surface(s, xp, x, make_box(s->dim_slow, radius), n_per_axis,
                                 surface_options(grid_n, 0.01, 1e-10));
        },
        "system"_a, "x_prime"_a, "x"_a, "radius"_a = 2.0, "n_per_axis"_a = 21, "grid_n"_a = 128,
        py::call_guard<py::gil_scoped_release>());

    m.def(
        "legendre",
        [](const HamiltonianSurface& s, const Vec& alpha, double b, double solver_tol) {
            RateOptions o;
            o.solver_tol = solver_tol;
            return adjoint_dict(legendre(s, alpha, b, o));
        },
        "surface"_a, "alpha"_a, "b"_a = kInf, "solver_tol"_a = 1e-5);
    m.def(
        "averaged_drift", [](const HamiltonianSurface& s) { return averaged_drift(s); }, "surface"_a);

    py::class_<RateFunction, std::shared_ptr<RateFunction>>(m, "RateFunction")
        .def(py::init([](const std::shared_ptr<SystemSpec>& s, double radius, int n_per_axis, int grid_n,
                         double trunc_b, double solver_tol) {
                 RateOptions o;
                 o.trunc_b = trunc_b;
                 o.solver_tol = solver_tol;
                 return std::make_shared<RateFunction>(s, make_box(s->dim_slow, radius), n_per_axis,
                                                       surface_options(grid_n, 0.01, 1e-10), o);
             }),
             "system"_a, "radius"_a = 5.0, "n_per_axis"_a = 101, "grid_n"_a = 128, "trunc_b"_a = kInf,
             "solver_tol"_a = 1e-5)
        .def("L", [](const RateFunction& r, const Vec& x, const Vec& a) { return r.L(x, a); }, "x"_a, "alpha"_a,
             py::call_guard<py::gil_scoped_release>())
        .def("evaluate", [](const RateFunction& r, const Vec& x, const Vec& a) { return adjoint_dict(r.evaluate(x, a)); },
             "x"_a, "alpha"_a)
        .def("averaged_drift", [](const RateFunction& r, const Vec& x) { return r.averaged_drift(x); }, "x"_a,
             py::call_guard<py::gil_scoped_release>())
        .def_property_readonly("x_independent", &RateFunction::x_independent);

    py::class_<Path>(m, "Path")
        .def(py::init([](double T, const std::vector<Vec>& nodes) {
                 require(!nodes.empty(), "Path: no nodes");
                 Vec flat;
                 for (const auto& n : nodes) flat.insert(flat.end(), n.begin(), n.end());
                 return Path(T, static_cast<int>(nodes.front().size()), flat);
             }),
             "T"_a, "nodes"_a, "Uniform-grid path from a list of node vectors.")
        .def_static("linear", [](const Vec& x0, const Vec& a, double T, int n) { return Path::linear(x0, a, T, n); },
                    "x0"_a, "alpha"_a, "T"_a, "segments"_a)
        .def_readonly("T", &Path::T)
        .def_readonly("dim", &Path::dim)
        .def_property_readonly("segments", &Path::segments)
        .def_property_readonly("nodes", [](const Path& p) { return matrix(p.values, static_cast<std::size_t>(p.dim)); })
        .def("__call__", &Path::eval, "t"_a);

    auto action_dict = [](const ActionValue& v) {
        return py::dict("value"_a = v.value, "per_segment"_a = v.per_segment, "m"_a = v.m, "offset_a"_a = v.offset_a);
    };
    m.def(
        "action",
        [action_dict](const Path& p, const RateFunction& r) {
            ActionValue v;
            {
                py::gil_scoped_release release;
                v = action(p, r);
            }
            return action_dict(v);
        },
        "path"_a, "rate"_a);
    m.def(
        "discretized_action",
        [action_dict](const Path& p, const RateFunction& r, int m_, double a) {
            ActionValue v;
            {
                py::gil_scoped_release release;
                v = action(discretize(p, m_, a), r);
            }
            return action_dict(v);
        },
        "path"_a, "rate"_a, "m"_a, "a"_a = 0.0);

    m.def(
        "simulate_frozen",
        [](const SystemSpec& s, const Vec& x, const Vec& y0, double t_end, double dt, std::uint64_t seed) {
            const auto p = simulate_frozen(s, x, y0, t_end, dt, seed);
            return py::dict("t"_a = p.times, "y"_a = matrix(p.states, static_cast<std::size_t>(p.dim_fast)));
        },
        "system"_a, "x"_a, "y0"_a, "t_end"_a, "dt"_a = 0.01, "seed"_a = 0);
    m.def(
        "invariant_average_f",
        [](const SystemSpec& s, const Vec& x, double t_end, double dt, std::uint64_t seed) {
            return invariant_average_f(s, x, t_end, dt, seed);
        },
        "system"_a, "x"_a, "t_end"_a, "dt"_a = 0.01, "seed"_a = 0, py::call_guard<py::gil_scoped_release>());

    m.def(
        "simulate_coupled",
        [](const SystemSpec& s, const Vec& x0, const Vec& y0, double eps, double T, double dt_fast, std::uint64_t seed,
           std::uint64_t replica, long record_every) {
            const SimConfig cfg{eps, T, dt_fast, seed, 1};
            cfg.validate();
            const auto tr = simulate_coupled(s, x0, y0, cfg, replica, record_every);
            return py::dict("t"_a = tr.times, "x"_a = matrix(tr.slow, static_cast<std::size_t>(tr.dim_slow)),
                            "y"_a = matrix(tr.fast, static_cast<std::size_t>(tr.dim_fast)));
        },
        "system"_a, "x0"_a, "y0"_a, "epsilon"_a, "T"_a, "dt_fast"_a = 0.01, "seed"_a = 0, "replica"_a = 0,
        "record_every"_a = 1);

    m.def(
        "verify_lemma5",
        [](const SystemSpec& s, const Vec& xp, const Vec& x, const Vec& beta, double eps, double Delta, double nu,
           long replicas, std::uint64_t seed, double H_ref) {
            const SimConfig cfg{eps, Delta, 0.01, seed, replicas};
            const auto sched = TwoScaleSchedule::for_epsilon(eps, Delta, nu);
            Lemma5Report r;
            {
                py::gil_scoped_release release;
                r = verify_lemma5(s, xp, x, beta, cfg, sched, H_ref);
            }
            return lemma5_dict(r);
        },
        "system"_a, "x_prime"_a, "x"_a, "beta"_a, "epsilon"_a, "Delta"_a, "nu"_a, "replicas"_a, "seed"_a, "H_ref"_a);

    m.def(
        "tube_probability",
        [](const SystemSpec& s, const Path& phi, double delta, const Vec& epsilons, long replicas, std::uint64_t seed,
           double action_ref) {
            TubeConfig cfg;
            cfg.epsilons = epsilons;
            cfg.delta = delta;
            cfg.replicas = replicas;
            cfg.seed = seed;
            LdpEstimate est;
            {
                py::gil_scoped_release release;
                est = tube_probability(s, phi, cfg, action_ref);
            }
            const auto t = trend_check(est);
            py::list rows;
            for (const auto& r : est.rows)
                rows.append(py::dict("epsilon"_a = r.epsilon, "hits"_a = r.hits, "replicas"_a = r.replicas,
                                     "p_hat"_a = r.p_hat, "ci_low"_a = r.ci_low, "ci_high"_a = r.ci_high,
                                     "eps2_log_p"_a = r.log_prob, "censored"_a = r.censored));
            return py::dict("rows"_a = rows, "all_censored"_a = est.all_censored, "monotone"_a = t.monotone,
                            "gap"_a = t.gap, "nu_hat"_a = t.nu_hat, "lower_bound_holds"_a = t.lower_bound_holds,
                            "message"_a = t.message);
        },
        "system"_a, "phi"_a, "delta"_a, "epsilons"_a, "replicas"_a = 10000, "seed"_a = 0,
        "action_ref"_a = std::numeric_limits<double>::quiet_NaN());

    m.def(
        "minimize_action",
        [](const std::shared_ptr<RateFunction>& rate, const Vec& x_start, const Vec& x_end, double T, int m_,
           int max_iters, double tol, bool quasi_newton) {
            MinActionProblem p;
            p.rate = rate;
            p.x_start = x_start;
            p.x_end = x_end;
            p.T = T;
            p.m = m_;
            p.max_iters = max_iters;
            p.tol = tol;
            p.quasi_newton = quasi_newton;
            MinActionResult r;
            {
                py::gil_scoped_release release;
                r = minimize_action(p);
            }
            return py::dict("path"_a = r.path, "value"_a = r.value, "grad_norm"_a = r.grad_norm,
                            "converged"_a = r.converged, "iterations"_a = r.iterations, "per_iter"_a = r.per_iter,
                            "warnings"_a = r.warnings);
        },
        "rate"_a, "x_start"_a, "x_end"_a, "T"_a = 1.0, "m"_a = 16, "max_iters"_a = 2000, "tol"_a = 1e-6,
        "quasi_newton"_a = false);
}
