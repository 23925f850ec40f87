#include "slowfast/stats.hpp"

#include "slowfast/common.hpp"

#include <algorithm>
#include <cmath>

namespace slowfast {

LogMeanExp log_mean_exp(std::span<const double> z) {
    require(!z.empty(), "log_mean_exp: empty input");
    LogMeanExp r;
    r.n = static_cast<long>(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    if (!std::isfinite(zmax)) throw Error("log_mean_exp: non-finite exponent");
    double s1 = 0.0, s2 = 0.0;
    for (double v : z) {
        const double w = std::exp(v - zmax);
        s1 += w;
        s2 += w * w;
    }
    const double n = static_cast<double>(z.size());
    const double mean = s1 / n;
    r.value = zmax + std::log(mean);
    r.ess = s1 * s1 / s2;
    if (z.size() > 1) {
        const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
        r.stderr_log = std::sqrt(var / n) / mean;
    }
    return r;
}

std::pair<double, double> wilson_interval(long k, long n, double z) {
    require(n > 0 && k >= 0 && k <= n, "wilson_interval: need 0 <= k <= n, n > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    double lo = std::max(0.0, center - half);
    double hi = std::min(1.0, center + half);
    if (k == 0) lo = 0.0;
    if (k == n) hi = 1.0;
    return {lo, hi};
}

MeanVar mean_var(std::span<const double> v) {
    MeanVar r;
    if (v.empty()) return r;
    double s = 0.0;
    for (double x : v) s += x;
    r.mean = s / static_cast<double>(v.size());
    if (v.size() > 1) {
        double q = 0.0;
        for (double x : v) q += (x - r.mean) * (x - r.mean);
        r.variance = q / static_cast<double>(v.size() - 1);
    }
    return r;
}

}  // namespace slowfast
