// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Usage: slowfast_acceptance [criterion numbers...]

#include "slowfast/action.hpp"
#include "slowfast/fastsim.hpp"
#include "slowfast/hamiltonian.hpp"
#include "slowfast/io.hpp"
#include "slowfast/ldp.hpp"
#include "slowfast/minpath.hpp"
#include "slowfast/rate.hpp"
#include "slowfast/twoscale.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace slowfast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;
    std::function<Outcome()> run;
};

const Vec kZero{0.0};

// Largest eigenvalue of the symmetric periodic matrix
// (1/2) D2 + beta cos(y_i) on n points, built without the library.
double dense_cosine_ring(double beta, int n) {
    const double h = kTwoPi / n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = -1.0 / (h * h) + beta * std::cos(i * h);
        A(i, (i + 1) % n) += 0.5 / (h * h);
        A(i, (i + n - 1) % n) += 0.5 / (h * h);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

Outcome spectral_sanity() {
    double worst_zero = 0.0, worst_bound = -kInf, worst_convex = -kInf;
    for (const auto& b : builtin_registry()) {
        const Vec x{b.spec->x_independent ? 0.0 : 0.5};
        SurfaceOptions so;
        so.grid_n = 64;
        const HamiltonianSurface s = build_surface(b.spec, x, x, BetaBox::symmetric(1, 2.0), 21, so);
        worst_zero = std::max(worst_zero, std::abs(s.checks().value_at_zero));
        worst_bound = std::max(worst_bound, s.checks().max_bound_excess);
        worst_convex = std::max(worst_convex, s.checks().max_convexity_violation);
    }
    const bool pass = worst_zero <= 1e-10 && worst_bound <= 1e-8;
    return {pass, fmt::format("max |H(0)| = {:.2e}, max(|H| - |f||beta|) = {:.2e}, max convexity defect = {:.2e}",
                              worst_zero, worst_bound, worst_convex)};
}

Outcome mathieu() {
    const auto cr = builtin("cosine-ring");
    const Vec beta{0.1};
    const double h = h_spectral(*cr, kZero, kZero, beta, 256).eigenvalue;
    const double series = 0.1 * 0.1 - 1.75 * std::pow(0.1, 4);
    const double dense = dense_cosine_ring(0.1, 512);
    const bool pass = std::abs(h - series) <= 2e-4 && std::abs(h - dense) <= 2e-4;
    return {pass, fmt::format("H(0.1) = {:.8f}, series {:.6f}, dense 512-point {:.8f}", h, series, dense)};
}

Outcome route_agreement() {
    const auto cr = builtin("cosine-ring");
    const Vec beta{0.3}, y0{kPi};
    const double H = h_spectral(*cr, kZero, kZero, beta, 512).eigenvalue;
    const MonteCarloH m10 = h_montecarlo(*cr, kZero, kZero, beta, 10.0, 1e-3, 10000, 11, y0);
    const MonteCarloH m40 = h_montecarlo(*cr, kZero, kZero, beta, 40.0, 1e-3, 10000, 12, y0);
    const double e10 = std::abs(m10.estimate - H), e40 = std::abs(m40.estimate - H);
    const double factor = e10 / e40;
    const double c_est = e10 * 10.0;
    return {factor >= 2.5 && e40 <= 5.0 * c_est / 40.0,
            fmt::format("H = {:.6f}; |err|(t=10) = {:.4f} (se {:.4f}), |err|(t=40) = {:.4f} (se {:.4f}), factor {:.2f}",
                        H, e10, m10.stderr_, e40, m40.stderr_, factor)};
}

Outcome legendre_involution() {
    const auto cr = builtin("cosine-ring");
    SurfaceOptions so;
    so.grid_n = 128;
    const HamiltonianSurface s = build_surface(cr, kZero, kZero, BetaBox::symmetric(1, 3.0), 121, so);
    const RateOptions ro;
    Vec alphas, Ls;
    for (int i = -95; i <= 95; ++i) {
        const Vec a{i * 0.01};
        alphas.push_back(a[0]);
        Ls.push_back(legendre(s, a, kInf, ro).value);
    }
    double worst = 0.0;
    for (int j = -10; j <= 10; ++j) {
        const double b = 0.05 * j;
        double rec = -kInf;
        for (std::size_t i = 0; i < alphas.size(); ++i) rec = std::max(rec, alphas[i] * b - Ls[i]);
        const Vec bv{b};
        const double h = h_spectral(*cr, kZero, kZero, bv, 128).eigenvalue;
        worst = std::max(worst, std::abs(rec - h));
    }
    return {worst <= 2e-3, fmt::format("max |sup_a(a b - L(a)) - H(b)| over |b| <= 0.5: {:.2e}", worst)};
}

Outcome zero_rate_drift() {
    const auto fd = builtin("full-dep");
    std::string detail;
    bool pass = true;
    for (double xv : {0.0, 0.5}) {
        const Vec x{xv};
        SurfaceOptions so;
        so.grid_n = 128;
        const HamiltonianSurface s = build_surface(fd, x, x, BetaBox::symmetric(1, 1.0), 11, so);
        const double a = averaged_drift(s)[0];
        const double t = invariant_average_f(*fd, x, 20000.0, 1e-3, 5 + static_cast<std::uint64_t>(xv * 10))[0];
        pass = pass && std::abs(a - t) <= 0.05;
        detail += fmt::format("x={}: grad H(0) = {:.4f}, time average = {:.4f}; ", xv, a, t);
    }
    return {pass, detail};
}

Outcome domain_box_check() {
    const auto cr = builtin("cosine-ring");
    SurfaceOptions so;
    so.grid_n = 128;
    const HamiltonianSurface s = build_surface(cr, kZero, kZero, BetaBox::symmetric(1, 10.0), 201, so);
    const RateOptions ro;
    bool pass = true;
    std::string detail;
    for (double a : {-1.2, -1.05, 1.05, 1.2}) {
        const Vec av{a};
        const AdjointResult r = legendre(s, av, kInf, ro);
        pass = pass && !r.finite();
        detail += fmt::format("L({}) = {}; ", a, io::num(r.value));
    }
    for (double a : {-0.9, 0.9}) {
        const Vec av{a};
        const AdjointResult r = legendre(s, av, kInf, ro);
        pass = pass && r.finite() && !r.at_box_edge;
        detail += fmt::format("L({}) = {:.4f} (beta* {:.3f}); ", a, r.value, r.beta_star[0]);
    }
    const SlopeReport rep = interior_slope_check(s, s.domain());
    pass = pass && rep.ok && rep.checked_any;
    for (const auto& e : rep.entries) detail += fmt::format("slope margins ({:.3f}, {:.3f})", e.margin_low, e.margin_high);
    return {pass, detail};
}

Outcome lemma5() {
    const auto cr = builtin("cosine-ring");
    const Vec beta{0.3}, y0{0.0};
    const double H = h_spectral(*cr, kZero, kZero, beta, 512).eigenvalue;
    SimConfig cfg{0.1, 0.2, 0.01, 2024, 100000};
    const TwoScaleSchedule sched = TwoScaleSchedule::for_epsilon(0.1, 0.2, 0.05);
    const Lemma5Report r = verify_lemma5(*cr, kZero, kZero, beta, cfg, sched, H, y0);
    const bool pass = std::abs(r.lambda_hat - r.delta_H) <= 0.05 * 0.2 && r.ess >= 100.0;
    return {pass, fmt::format("Lambda = {:.5f}, Delta H = {:.5f}, |diff| = {:.5f} (limit 0.01), ESS = {:.0f}",
                              r.lambda_hat, r.delta_H, std::abs(r.lambda_hat - r.delta_H), r.ess)};
}

Outcome coupling() {
    const auto cr = builtin("cosine-ring");
    const auto fd = builtin("full-dep");
    const Vec x{0.5};
    const CouplingError zero = coupling_error(*cr, x, SimConfig{0.1, 1.0, 0.01, 3, 1000}, 3.0);
    const CouplingError e1 = coupling_error(*fd, x, SimConfig{0.1, 1.0, 0.01, 3, 1000}, 3.0);
    const CouplingError e2 = coupling_error(*fd, x, SimConfig{0.2, 1.0, 0.01, 3, 1000}, 3.0);
    const double ratio = e1.mean_sq_sup / e2.mean_sq_sup;
    const bool pass = zero.mean_sq_sup == 0.0 && ratio >= 0.1 && ratio <= 0.5;
    return {pass, fmt::format("cosine-ring error {}; full-dep error(0.1) = {:.3e}, error(0.2) = {:.3e}, ratio {:.4f} "
                              "(required [0.1, 0.5])",
                              zero.mean_sq_sup, e1.mean_sq_sup, e2.mean_sq_sup, ratio)};
}

Outcome ldp_trend() {
    const auto cr = builtin("cosine-ring");
    const Path phi = Path::linear(kZero, kZero, 1.0, 100);
    TubeConfig cfg;
    cfg.epsilons = {0.3, 0.2, 0.15, 0.1};
    cfg.delta = 0.3;
    cfg.replicas = 10000;
    cfg.seed = 77;
    const LdpEstimate est = tube_probability(*cr, phi, cfg, 0.0);
    const TrendReport t = trend_check(est, 0.1);
    std::string detail;
    for (const auto& r : est.rows) detail += fmt::format("eps {}: {:.4f}; ", r.epsilon, r.log_prob);
    const bool pass = t.has_data && t.monotone && est.rows.back().log_prob >= -0.1;
    return {pass, detail + fmt::format("monotone {}, nu_hat {:.4f}", t.monotone, t.nu_hat)};
}

Outcome min_action() {
    const auto cr = builtin("cosine-ring");
    SurfaceOptions so;
    so.grid_n = 128;
    auto rate = std::make_shared<const RateFunction>(
        build_surface(cr, kZero, kZero, BetaBox::symmetric(1, 6.0), 121, so), RateOptions{});
    const std::vector<std::pair<double, double>> ends{{0.0, 0.5}, {0.2, -0.1}, {-0.3, 0.4}, {1.0, 0.4}, {0.0, -0.65}};
    double worst = 0.0;
    bool pass = true;
    for (const auto& [a, b] : ends) {
        MinActionProblem p;
        p.rate = rate;
        p.x_start = {a};
        p.x_end = {b};
        p.T = 1.0;
        p.m = 16;
        const Path init = Path::from_function(1.0, 16, 1, [&](double t) { return Vec{a + (b - a) * t + 0.05 * std::sin(kPi * t)}; });
        const MinActionResult r = minimize_action(p, init);
        const Vec slope{b - a};
        const double ref = legendre(rate->surface_at(kZero), slope, kInf, rate->options()).value;
        worst = std::max(worst, std::abs(r.value - ref));
        pass = pass && std::abs(r.value - ref) <= 1e-3;
    }
    return {pass, fmt::format("max |S_min - T L(slope)| over 5 endpoint pairs: {:.2e}", worst)};
}

Outcome determinism() {
#ifndef SLOWFAST_CLI
    return {false, "CLI path not configured"};
#else
    const fs::path base = fs::temp_directory_path() / "slowfast_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base);
    const std::string cfg_text = R"({
  "system": "cosine-ring",
  "ham": {"box": [-1, 1], "n_per_axis": 9, "grid_n": 64},
  "rate": {"box": [-3, 3], "n_per_axis": 31, "grid_n": 64, "alpha": {"from": -0.9, "to": 0.9, "count": 7}, "trunc_b": 2},
  "action": {"path": {"T": 1, "segments": 20, "x0": [0], "slope": [0.3]}, "m_list": [4, 8],
             "box": [-3, 3], "n_per_axis": 31, "grid_n": 64},
  "simulate": {"x0": [0], "epsilon": 0.2, "T": 0.2, "replicas": 2, "record_every": 10},
  "verify-lemma5": {"beta": [0.3], "epsilon": 0.2, "Delta": 0.2, "replicas": 500, "grid_n": 64},
  "ldp": {"path": {"T": 0.5, "segments": 10, "x0": [0], "slope": [0]}, "epsilons": [0.3, 0.2, 0.15],
          "replicas": 1000, "delta": 0.3},
  "minpath": {"x_start": [0], "x_end": [0.3], "T": 1, "m": 8, "box": [-3, 3], "n_per_axis": 31, "grid_n": 64}
})";
    const fs::path cfg = base / "config.json";
    std::ofstream(cfg) << cfg_text;
    const std::vector<std::string> commands{"ham", "rate", "action", "simulate", "verify-lemma5", "ldp", "minpath"};
    bool pass = true;
    std::string detail;
    for (const auto& cmd : commands) {
        std::vector<std::map<std::string, std::string>> runs;
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = base / fmt::format("{}_{}", cmd, rep);
            const std::string line = fmt::format("\"{}\" {} --config \"{}\" --seed 5 --out-dir \"{}\" > /dev/null 2>&1",
                                                 SLOWFAST_CLI, cmd, cfg.string(), out.string());
            const int rc = std::system(line.c_str());
            if (rc != 0) {
                pass = false;
                detail += fmt::format("{}: exit {}; ", cmd, rc);
            }
            std::map<std::string, std::string> files;
            if (fs::exists(out))
                for (const auto& e : fs::recursive_directory_iterator(out)) {
                    if (!e.is_regular_file()) continue;
                    std::ifstream in(e.path(), std::ios::binary);
                    std::stringstream ss;
                    ss << in.rdbuf();
                    files[fs::relative(e.path(), out).string()] = ss.str();
                }
            runs.push_back(std::move(files));
        }
        const bool same = !runs[0].empty() && runs[0] == runs[1];
        pass = pass && same;
        detail += fmt::format("{} {} ({} files); ", cmd, same ? "identical" : "DIFFERENT", runs[0].size());
    }
    fs::remove_all(base);
    return {pass, detail};
#endif
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "spectral sanity", 30, spectral_sanity},
        {2, "Mathieu cross-check", 10, mathieu},
        {3, "route agreement", 300, route_agreement},
        {4, "Legendre involution", 60, legendre_involution},
        {5, "zero-rate drift", 300, zero_rate_drift},
        {6, "domain box", 60, domain_box_check},
        {7, "exponential moment verifier", 600, lemma5},
        {8, "coupling error scaling", 600, coupling},
        {9, "LDP lower-bound trend", 1800, ldp_trend},
        {10, "min-action convexity oracle", 300, min_action},
        {11, "CLI determinism", 600, determinism},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int failed = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::cout << fmt::format("[{}] {:>2} {}: {} [{:.1f}s / {:.0f}s{}]", pass ? "PASS" : "FAIL", c.id, c.name,
                                 o.detail, secs, c.budget_s, in_time ? "" : ", over budget")
                  << std::endl;
    }
    std::cout << fmt::format("{} criteria failed", failed) << std::endl;
    return failed == 0 ? 0 : 1;
}
