#include "slowfast/ldp.hpp"

#include "slowfast/io.hpp"
#include "slowfast/parallel.hpp"
#include "slowfast/random.hpp"
#include "slowfast/stats.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace slowfast {

double LdpRow::log_ci_low() const { return epsilon * epsilon * std::log(ci_low); }
double LdpRow::log_ci_high() const { return epsilon * epsilon * std::log(ci_high); }

LdpRow tube_probability_at(const SystemSpec& spec, const Path& phi, double delta, double epsilon,
                           const TubeConfig& cfg, std::uint64_t index, int jobs) {
    require(delta > 0.0, "tube_probability: delta must be positive");
    require(phi.dim == spec.dim_slow, "tube_probability: path dimension differs from the system");
    require(cfg.replicas >= 1000, "tube_probability: at least 1000 replicas per epsilon");
    SimConfig sc{epsilon, phi.T, cfg.dt_fast, derive_seed(cfg.seed, index), cfg.replicas};
    sc.validate();
    Vec y0(static_cast<std::size_t>(spec.dim_fast()), 0.0);
    if (!cfg.y0.empty()) {
        require(static_cast<int>(cfg.y0.size()) == spec.dim_fast(), "tube_probability: y0 has wrong dimension");
        y0 = cfg.y0;
    }
    const auto x0 = phi.node(0);
    std::vector<char> hit(static_cast<std::size_t>(cfg.replicas), 0);
    const double h_phi = phi.step();

    parallel_for(hit.size(), jobs, [&](std::size_t r) {
        bool inside = true;
        run_coupled(spec, x0, y0, epsilon, phi.T, cfg.dt_fast, sc.seed, r,
                    [&](double t, std::span<const double> X, std::span<const double>) {
                        const int k = std::clamp(static_cast<int>(std::floor(t / h_phi)), 0, phi.segments() - 1);
                        const double w = std::clamp((t - phi.time(k)) / h_phi, 0.0, 1.0);
                        const auto a = phi.node(k), b = phi.node(k + 1);
                        for (std::size_t i = 0; i < X.size(); ++i)
                            if (std::abs(X[i] - (a[i] + w * (b[i] - a[i]))) >= delta) inside = false;
                        return inside;
                    });
        hit[r] = inside ? 1 : 0;
    });

    LdpRow row;
    row.epsilon = epsilon;
    row.replicas = cfg.replicas;
    for (char h : hit) row.hits += h;
    row.p_hat = static_cast<double>(row.hits) / static_cast<double>(row.replicas);
    std::tie(row.ci_low, row.ci_high) = wilson_interval(row.hits, row.replicas);
    row.censored = row.hits == 0;
    row.log_prob = row.censored ? row.log_ci_high() : epsilon * epsilon * std::log(row.p_hat);
    return row;
}

LdpEstimate tube_probability(const SystemSpec& spec, const Path& phi, const TubeConfig& cfg, double action_ref,
                             int jobs) {
    require(!cfg.epsilons.empty(), "tube_probability: empty epsilon sweep");
    LdpEstimate est;
    est.delta = cfg.delta;
    est.action_ref = action_ref;
    est.all_censored = true;
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        est.rows.push_back(tube_probability_at(spec, phi, cfg.delta, cfg.epsilons[i], cfg, i, jobs));
        est.all_censored = est.all_censored && est.rows.back().censored;
    }
    return est;
}

TrendReport trend_check(const LdpEstimate& est, double nu_tol) {
    TrendReport rep;
    rep.nu_tol = nu_tol;
    std::vector<LdpRow> rows;
    for (const auto& r : est.rows)
        if (!r.censored) rows.push_back(r);
    rep.uncensored = static_cast<int>(rows.size());
    if (rows.empty()) {
        rep.message = "no uncensored data";
        return rep;
    }
    if (rows.size() < 3) {
        rep.message = fmt::format("only {} uncensored rows; at least 3 are needed", rows.size());
        return rep;
    }
    rep.has_data = true;
    std::sort(rows.begin(), rows.end(), [](const LdpRow& a, const LdpRow& b) { return a.epsilon > b.epsilon; });
    rep.monotone = true;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const LdpRow& big = rows[i - 1];
        const LdpRow& small = rows[i];
        const bool increases = small.log_prob >= big.log_prob;
        const bool overlap = small.log_ci_high() >= big.log_ci_low() && big.log_ci_high() >= small.log_ci_low();
        if (!increases && !overlap) rep.monotone = false;
    }
    const LdpRow& last = rows.back();
    rep.smallest_epsilon = last.epsilon;
    if (std::isnan(est.action_ref)) {
        rep.message = "no reference action; trend only";
        return rep;
    }
    if (std::isinf(est.action_ref)) {
        rep.nu_hat = 0.0;
        rep.lower_bound_holds = true;
        rep.message = "S(phi) = +inf: lower bound is vacuous";
        return rep;
    }
    rep.gap = last.log_prob + est.action_ref;
    rep.nu_hat = std::max(0.0, -est.action_ref - last.log_prob);
    rep.lower_bound_holds = rep.nu_hat <= nu_tol;
    rep.message = fmt::format("eps = {}: eps^2 log p = {}, -S = {}, nu_hat = {}", last.epsilon, last.log_prob,
                              -est.action_ref, rep.nu_hat);
    return rep;
}

void write_csv(std::ostream& os, const LdpEstimate& est) {
    io::CsvWriter w(os, {"epsilon", "p_hat", "ci_low", "ci_high", "eps2_log_p", "censored"});
    for (const auto& r : est.rows)
        w.row({io::num(r.epsilon), io::num(r.p_hat), io::num(r.ci_low), io::num(r.ci_high), io::num(r.log_prob),
               r.censored ? "1" : "0"});
}

namespace {
nlohmann::json num_or_string(double v) {
    if (std::isfinite(v)) return v;
    return io::num(v);
}
}  // namespace

std::string ldp_json(const LdpEstimate& est, const TrendReport& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : est.rows)
        rows.push_back({{"epsilon", r.epsilon},
                        {"hits", r.hits},
                        {"replicas", r.replicas},
                        {"p_hat", r.p_hat},
                        {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high},
                        {"eps2_log_p", num_or_string(r.log_prob)},
                        {"censored", r.censored}});
    nlohmann::json j{{"delta", est.delta},
                     {"action_ref", num_or_string(est.action_ref)},
                     {"all_censored", est.all_censored},
                     {"rows", rows},
                     {"trend",
                      {{"uncensored", t.uncensored},
                       {"has_data", t.has_data},
                       {"monotone", t.monotone},
                       {"smallest_epsilon", t.smallest_epsilon},
                       {"gap", num_or_string(t.gap)},
                       {"nu_hat", num_or_string(t.nu_hat)},
                       {"nu_tol", t.nu_tol},
                       {"lower_bound_holds", t.lower_bound_holds},
                       {"message", t.message}}}};
    return j.dump(2);
}

}  // namespace slowfast
