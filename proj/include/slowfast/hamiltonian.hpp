#pragma once

#include "slowfast/domain.hpp"
#include "slowfast/model.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

/// Generator of the frozen fast motion plus the potential beta . f(x', .),
/// discretized on a periodic grid with grid_n points per fast axis:
///
///   A = (1/2) sum_ij (CC^T)_ij(x, .) d_i d_j + B(x, .) . grad + beta . f(x', .)
///
/// Second derivatives use central differences; first derivatives are
/// central unless the cell Peclet number |b| h / D exceeds 2, in which case
/// the row falls back to upwinding. Mixed derivatives use the 7-point
/// stencil oriented by the sign of the cross coefficient. The transport
/// part has zero row sums by construction, so every row of A sums to its
/// potential value.
class FeynmanKacOperator {
public:
    FeynmanKacOperator(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
                       std::span<const double> beta, int grid_n);

    [[nodiscard]] int grid_n() const { return grid_n_; }
    [[nodiscard]] int dim_fast() const { return dim_fast_; }
    [[nodiscard]] std::size_t size() const { return potential_.size(); }

    /// out = A v
    void apply(std::span<const double> v, std::span<double> out) const;

    [[nodiscard]] const Vec& potential() const { return potential_; }
    /// max_i |sum_j A_ij - potential_i|
    [[nodiscard]] double max_row_defect() const;
    /// Shift s with I + A / s entrywise nonnegative and strictly positive diagonal.
    [[nodiscard]] double iteration_shift() const { return shift_; }
    [[nodiscard]] long upwind_rows() const { return upwind_rows_; }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }
    [[nodiscard]] const Eigen::SparseMatrix<double, Eigen::RowMajor>& transport() const { return transport_; }

    /// Torus coordinates of grid node `flat` (axis 0 fastest).
    [[nodiscard]] Vec node(std::size_t flat) const;

private:
    int grid_n_;
    int dim_fast_;
    std::vector<double> spacing_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> transport_;
    Vec potential_;
    double shift_ = 1.0;
    long upwind_rows_ = 0;
    std::vector<std::string> warnings_;
};

struct EigenOptions {
    /// Stop when the Collatz-Wielandt bracket max_i (Av)_i/v_i - min_i (Av)_i/v_i
    /// is below tol.
    double tol = 1e-10;
    long max_iters = 20'000'000;
    int check_every = 64;
    /// Re-solve on a grid of half the size and warn when the eigenvalues
    /// differ by more than grid_check_tol.
    bool check_grid = false;
    double grid_check_tol = 1e-6;
};

/// Principal eigenpair of a Feynman-Kac generator; eigenvalue = H(x', x, beta).
struct EigenPair {
    double eigenvalue = 0.0;
    /// Positive on the grid, max-normalized.
    Vec eigenfunction;
    /// Half-width of the final Collatz-Wielandt bracket.
    double residual = 0.0;
    long iterations = 0;
    int grid_n = 0;
    /// |lambda(n) - lambda(n/2)| when a grid check was requested, else NaN.
    double grid_disagreement = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::string> warnings;
};

/// Power iteration on I + A/s with s = op.iteration_shift(). `warm_start`
/// (optional) must be positive. Throws ConvergenceError on max_iters.
[[nodiscard]] EigenPair principal_eigenpair(const FeynmanKacOperator& op, const EigenOptions& opts = {},
                                            std::span<const double> warm_start = {});

/// H(x', x, beta) as the principal eigenvalue of the discretized generator.
[[nodiscard]] EigenPair h_spectral(const SystemSpec& spec, std::span<const double> x_prime,
                                   std::span<const double> x, std::span<const double> beta, int grid_n,
                                   const EigenOptions& opts = {}, std::span<const double> warm_start = {});

struct MonteCarloH {
    double estimate = 0.0;
    double stderr_ = 0.0;
    double ess = 0.0;
    long replicas = 0;
    /// Effective sample size below 10: the log-mean-exp is dominated by a
    /// handful of replicas and the standard error is not trustworthy.
    bool degenerate = false;
};

/// t^-1 log mean_r exp(beta . int_0^t f(x', y^x_s) ds) over frozen-fast
/// replicas started at y0 (default: origin). Replica r uses stream r of `seed`.
[[nodiscard]] MonteCarloH h_montecarlo(const SystemSpec& spec, std::span<const double> x_prime,
                                       std::span<const double> x, std::span<const double> beta, double t,
                                       double dt, long replicas, std::uint64_t seed,
                                       std::span<const double> y0 = {}, int jobs = 0);

/// Central differences of h_spectral in each beta coordinate at steps
/// `step` and `step/2`, combined by Richardson extrapolation.
[[nodiscard]] Vec grad_h(const SystemSpec& spec, std::span<const double> x_prime, std::span<const double> x,
                         std::span<const double> beta, double step, int grid_n, const EigenOptions& opts = {},
                         std::span<const double> warm_start = {});

/// Axis-aligned box in beta space.
struct BetaBox {
    Vec lo;
    Vec hi;

    [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
    [[nodiscard]] static BetaBox symmetric(int d, double radius);
};

struct SurfaceChecks {
    double value_at_zero = std::numeric_limits<double>::quiet_NaN();
    /// max over stored grid-line triples of H(mid) - (H(left)+H(right))/2.
    double max_convexity_violation = 0.0;
    /// max over nodes of |H| - bound*|beta|.
    double max_bound_excess = 0.0;
    double bound_slope = kInf;
    /// min over nodes of min over the fast grid of the eigenfunction.
    double min_eigenfunction = std::numeric_limits<double>::quiet_NaN();
    double max_residual = 0.0;
    bool convex_ok = true;
    bool zero_ok = true;
    bool bound_ok = true;
    std::vector<std::string> warnings;

    [[nodiscard]] bool ok() const { return convex_ok && zero_ok && bound_ok; }
};

/// Tabulated H(x', x, .) on a regular beta grid with gradients, plus the
/// domain box of f(x', .) and an optional exact evaluator used for
/// re-solves at optimizer end points.
///
/// Between nodes the surface is interpolated by cubic Hermite splines
/// (values and stored derivatives) when d = 1 and multilinearly otherwise.
class HamiltonianSurface {
public:
    using ValueFn = std::function<double(std::span<const double>)>;
    using GradFn = std::function<Vec(std::span<const double>)>;

    HamiltonianSurface() = default;

    /// Synthetic surface from closed-form H and grad H (tests, analysis).
    static HamiltonianSurface from_function(const BetaBox& box, int n_per_axis, const ValueFn& value,
                                            const GradFn& grad, DomainBox domain = {});

    [[nodiscard]] int dim() const { return box_.dim(); }
    [[nodiscard]] const BetaBox& box() const { return box_; }
    [[nodiscard]] int n_per_axis() const { return n_; }
    [[nodiscard]] std::size_t node_count() const { return values_.size(); }
    [[nodiscard]] Vec node(std::size_t flat) const;
    [[nodiscard]] double node_value(std::size_t flat) const { return values_[flat]; }
    [[nodiscard]] std::span<const double> node_gradient(std::size_t flat) const;
    [[nodiscard]] double spacing(int axis) const;
    /// Radius of the largest origin-centred ball inside the box.
    [[nodiscard]] double inner_radius() const;

    [[nodiscard]] bool contains(std::span<const double> beta, double slack = 1e-12) const;
    /// Interpolated H; NaN outside the box.
    [[nodiscard]] double value(std::span<const double> beta) const;
    /// Interpolated grad H; NaNs outside the box.
    [[nodiscard]] Vec gradient(std::span<const double> beta) const;

    [[nodiscard]] const DomainBox& domain() const { return domain_; }
    [[nodiscard]] const SurfaceChecks& checks() const { return checks_; }
    [[nodiscard]] bool has_exact() const { return static_cast<bool>(exact_); }
    [[nodiscard]] double exact_value(std::span<const double> beta) const { return exact_(beta); }

    Vec x_prime;
    Vec x;
    /// Solver settings recorded for the JSON sidecar.
    int grid_n = 0;
    double fd_step = 0.0;
    double eigen_tol = 0.0;
    std::string spec_hash;

    /// Low-level constructor used by builders and CSV import.
    HamiltonianSurface(BetaBox box, int n_per_axis, Vec values, Vec gradients, DomainBox domain);
    void set_exact(ValueFn exact) { exact_ = std::move(exact); }
    /// Recomputes checks_ from the stored values (bound_slope = |f|_C).
    void run_checks(double bound_slope);
    SurfaceChecks& mutable_checks() { return checks_; }

private:
    BetaBox box_;
    int n_ = 0;
    Vec values_;
    Vec gradients_;  // node-major, dim() per node
    DomainBox domain_;
    SurfaceChecks checks_;
    ValueFn exact_;

    [[nodiscard]] std::size_t flat_index(std::span<const std::size_t> idx) const;
};

struct SurfaceOptions {
    int grid_n = 128;
    double fd_step = 0.01;
    EigenOptions eigen;
    int domain_grid_n = 64;
    /// Attach an exact h_spectral evaluator for optimizer end-point re-solves.
    bool attach_exact = true;
    int jobs = 0;
};

/// Tabulates h_spectral and grad_h on n_per_axis^d nodes of `box`, records
/// the surface invariants, and computes the domain box of f(x', .).
/// Solver failures are rethrown with the failing node's location.
[[nodiscard]] HamiltonianSurface build_surface(const SystemPtr& spec, std::span<const double> x_prime,
                                               std::span<const double> x, const BetaBox& box, int n_per_axis,
                                               const SurfaceOptions& opts = {});

/// CSV columns beta_1.., H, dH_1..; sidecar JSON with solver settings and checks.
void write_surface_csv(std::ostream& os, const HamiltonianSurface& s);
[[nodiscard]] std::string surface_sidecar_json(const HamiltonianSurface& s);
/// Inverse of write_surface_csv (+ sidecar for x', x, domain). Exact evaluator not restored.
[[nodiscard]] HamiltonianSurface read_surface(std::istream& csv, const std::string& sidecar_json);

}  // namespace slowfast
