#pragma once

#include "slowfast/action.hpp"
#include "slowfast/twoscale.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace slowfast {

struct TubeConfig {
    /// Decreasing sweep.
    Vec epsilons{0.3, 0.2, 0.15, 0.1};
    double delta = 0.3;
    double dt_fast = 0.01;
    /// At least 1000.
    long replicas = 10000;
    std::uint64_t seed = 0;
    Vec y0;  // default: origin
};

/// One epsilon of a sweep. When no replica stays in the tube the row is
/// censored: p_hat = 0 is not turned into log 0 = -inf; `log_prob` then
/// holds eps^2 log ci_high, an upper bound.
struct LdpRow {
    double epsilon = 0.0;
    long hits = 0;
    long replicas = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double log_prob = 0.0;
    bool censored = false;

    /// eps^2 log of the Wilson bounds (ci_low may give -inf).
    [[nodiscard]] double log_ci_low() const;
    [[nodiscard]] double log_ci_high() const;
};

struct LdpEstimate {
    double delta = 0.0;
    /// S(phi) when known, NaN otherwise.
    double action_ref = std::numeric_limits<double>::quiet_NaN();
    std::vector<LdpRow> rows;
    bool all_censored = false;
};

/// P(sup_t |X^eps_t - phi_t| < delta) at one epsilon, from x0 = phi_0. The
/// distance is checked after every simulation step; runs leave early once
/// they exit the tube. Seeds: derive_seed(cfg.seed, index).
[[nodiscard]] LdpRow tube_probability_at(const SystemSpec& spec, const Path& phi, double delta, double epsilon,
                                         const TubeConfig& cfg, std::uint64_t index, int jobs = 0);

/// Sweep over cfg.epsilons (row i uses index i).
[[nodiscard]] LdpEstimate tube_probability(const SystemSpec& spec, const Path& phi, const TubeConfig& cfg,
                                           double action_ref = std::numeric_limits<double>::quiet_NaN(),
                                           int jobs = 0);

struct TrendReport {
    int uncensored = 0;
    bool has_data = false;
    /// eps^2 log p_hat nondecreasing as eps decreases, up to overlapping Wilson intervals.
    bool monotone = false;
    double smallest_epsilon = 0.0;
    /// eps^2 log p_hat + S at the smallest uncensored epsilon.
    double gap = std::numeric_limits<double>::quiet_NaN();
    /// max(0, -S - eps^2 log p_hat) at the smallest uncensored epsilon.
    double nu_hat = std::numeric_limits<double>::quiet_NaN();
    double nu_tol = 0.1;
    /// eps^2 log p_hat >= -S - nu_tol at the smallest uncensored epsilon.
    bool lower_bound_holds = false;
    std::string message;
};

/// Needs at least three uncensored rows for a verdict.
[[nodiscard]] TrendReport trend_check(const LdpEstimate& est, double nu_tol = 0.1);

/// CSV columns epsilon, p_hat, ci_low, ci_high, eps2_log_p, censored.
void write_csv(std::ostream& os, const LdpEstimate& est);
[[nodiscard]] std::string ldp_json(const LdpEstimate& est, const TrendReport& trend);

}  // namespace slowfast
