#pragma once

// Independent reference values used by several test files.

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

/// Top eigenvalue of (1/2) d^2/dy^2 + beta cos(y) on the circle, computed in
/// the Fourier basis e^{iky}, |k| <= kmax: diagonal -k^2/2, neighbours beta/2.
inline double cosine_ring_h(double beta, int kmax = 40) {
    const int n = 2 * kmax + 1;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double k = i - kmax;
        a(i, i) = -0.5 * k * k;
        if (i + 1 < n) a(i, i + 1) = a(i + 1, i) = 0.5 * beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

/// Legendre transform of cosine_ring_h by golden-section search on [-r, r].
inline double cosine_ring_l(double alpha, double r = 8.0) {
    auto g = [&](double b) { return alpha * b - cosine_ring_h(b); };
    double lo = -r, hi = r;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = hi - phi * (hi - lo), d = lo + phi * (hi - lo);
    double gc = g(c), gd = g(d);
    for (int i = 0; i < 100; ++i) {
        if (gc > gd) {
            hi = d;
            d = c;
            gd = gc;
            c = hi - phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + phi * (hi - lo);
            gd = g(d);
        }
    }
    return g(0.5 * (lo + hi));
}

}  // namespace oracle
