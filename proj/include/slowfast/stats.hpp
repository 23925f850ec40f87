#pragma once

#include <span>
#include <utility>

namespace slowfast {

/// log((1/n) sum exp(z_i)) with the max-shift trick, plus diagnostics of
/// the normalized weights w_i = exp(z_i - max z).
struct LogMeanExp {
    double value = 0.0;
    /// Delta-method standard error of `value`.
    double stderr_log = 0.0;
    /// (sum w)^2 / sum w^2.
    double ess = 0.0;
    long n = 0;
};

[[nodiscard]] LogMeanExp log_mean_exp(std::span<const double> z);

/// Wilson score interval for k successes in n trials.
[[nodiscard]] std::pair<double, double> wilson_interval(long k, long n, double z = 1.959963984540054);

struct MeanVar {
    double mean = 0.0;
    double variance = 0.0;  // unbiased
};

[[nodiscard]] MeanVar mean_var(std::span<const double> v);

}  // namespace slowfast
