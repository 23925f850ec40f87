#pragma once

#include "slowfast/rate.hpp"

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

/// Piecewise-linear path on a uniform grid of [0, T].
struct Path {
    double T = 1.0;
    int dim = 1;
    Vec values;  // (segments + 1) x dim, row-major

    Path() = default;
    Path(double T, int dim, Vec values);

    [[nodiscard]] static Path from_function(double T, int segments, int dim,
                                            const std::function<Vec(double)>& fn);
    /// x0 + alpha t.
    [[nodiscard]] static Path linear(std::span<const double> x0, std::span<const double> alpha, double T,
                                     int segments);
    /// Straight line from a to b.
    [[nodiscard]] static Path between(std::span<const double> a, std::span<const double> b, double T, int segments);

    [[nodiscard]] int segments() const { return static_cast<int>(values.size()) / dim - 1; }
    [[nodiscard]] double step() const { return T / segments(); }
    [[nodiscard]] double time(int k) const { return k == segments() ? T : k * step(); }
    [[nodiscard]] std::span<const double> node(int k) const {
        return {values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    [[nodiscard]] std::span<double> node(int k) {
        return {values.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    /// Forward difference (phi_{k+1} - phi_k) / h on segment k.
    [[nodiscard]] Vec slope(int k) const;
    [[nodiscard]] Vec eval(double t) const;
    /// Right derivative; for t <= 0 the slope of the first segment, for t >= T the last.
    [[nodiscard]] Vec right_derivative(double t) const;
    /// Max over nodes of the sup-norm distance to `other` evaluated at the same times.
    [[nodiscard]] double sup_distance(const Path& other) const;
};

/// psi_s = phi_{kappa_m(s + a) - a} with kappa_m(s) = floor(s / Delta) Delta,
/// Delta = T / m, and phi_s = phi_0 for s < 0. Piece k covers
/// [breaks[k], breaks[k+1]).
struct StepPath {
    double T = 1.0;
    int dim = 1;
    int m = 1;
    double offset_a = 0.0;
    Vec breaks;  // piece boundaries, breaks.front() = 0, breaks.back() = T
    Vec values;  // pieces x dim

    [[nodiscard]] std::size_t pieces() const { return breaks.size() - 1; }
    [[nodiscard]] std::span<const double> piece(std::size_t k) const {
        return {values.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    [[nodiscard]] Vec eval(double s) const;
};

/// chi_0 = phi_0 with slope phi'_{kappa_m(s + a) - a} (right derivative,
/// phi'_s = phi'_0 for s < 0) on the same pieces as the StepPath.
struct PiecewiseLinearPath {
    double T = 1.0;
    int dim = 1;
    Vec breaks;
    Vec slopes;  // pieces x dim
    Vec knots;  // (pieces + 1) x dim, chi at each break

    [[nodiscard]] std::size_t pieces() const { return breaks.size() - 1; }
    [[nodiscard]] std::span<const double> slope(std::size_t k) const {
        return {slopes.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
    [[nodiscard]] Vec eval(double s) const;
    /// Max of |chi - phi| at the breaks and at the nodes of phi.
    [[nodiscard]] double sup_distance(const Path& phi) const;
};

struct Discretization {
    StepPath psi;
    PiecewiseLinearPath chi;
};

/// Requires m >= 1 and 0 <= a < T.
[[nodiscard]] Discretization discretize(const Path& path, int m, double a = 0.0);

struct ActionValue {
    /// Nonnegative, or +infinity when some segment has infinite rate.
    double value = 0.0;
    Vec per_segment;
    /// 0 for a plain path.
    int m = 0;
    double offset_a = 0.0;

    [[nodiscard]] bool finite() const { return std::isfinite(value); }
};

/// Midpoint rule: segment k contributes h * L((phi_k + phi_{k+1}) / 2, slope_k).
[[nodiscard]] ActionValue action(const Path& path, const RateFunction& rate, int jobs = 1);
/// Exact sum of piece_length * L(psi_k, chi'_k).
[[nodiscard]] ActionValue action(const Discretization& pair, const RateFunction& rate, int jobs = 1);

struct ConvergenceRow {
    int m = 0;
    double action = 0.0;
    double discrepancy = 0.0;
};

struct ActionConvergence {
    double reference = 0.0;  // S(phi)
    double nu = 0.0;
    std::vector<ConvergenceRow> rows;
    bool nonincreasing = false;
    /// Nonincreasing from some m onwards (trailing run of length >= 2).
    bool eventually_nonincreasing = false;
    bool below_nu = false;
};

/// |S^psi(chi)(m) - S(phi)| for each m. Requires S(phi) finite.
[[nodiscard]] ActionConvergence action_convergence(const Path& path, const RateFunction& rate,
                                                   const std::vector<int>& m_list, double nu = 1e-2,
                                                   double a = 0.0, int jobs = 1);

/// Mean of S^psi(chi) over the given offsets.
[[nodiscard]] double offset_averaged_action(const Path& path, const RateFunction& rate, int m,
                                            const std::vector<double>& offsets, int jobs = 1);

/// CSV columns t, x_1..x_d.
void write_path_csv(std::ostream& os, const Path& path);
[[nodiscard]] Path read_path_csv(std::istream& is);
/// JSON with value, per_segment, m, a.
[[nodiscard]] std::string action_json(const ActionValue& v);

}  // namespace slowfast
