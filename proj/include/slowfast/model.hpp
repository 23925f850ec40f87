#pragma once

#include "slowfast/common.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

/// Flat torus [0, p_1) x ... x [0, p_l) used as the fast state space.
struct TorusGeometry {
    int dim_fast = 1;
    std::vector<double> period{kTwoPi};

    TorusGeometry() = default;
    explicit TorusGeometry(int dim, double p = kTwoPi);
    TorusGeometry(int dim, std::vector<double> periods);

    /// Maps every coordinate into [0, period).
    void wrap(std::span<double> y) const;
    [[nodiscard]] double wrap_coord(double v, int axis) const;

    /// Euclidean length of the shortest displacement between a and b.
    [[nodiscard]] double distance(std::span<const double> a, std::span<const double> b) const;
};

/// out = f(x, y) or B(x, y); `out` has the codomain dimension.
using VectorField =
    std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;
/// out = C(x, y) as a row-major l x l matrix.
using MatrixField = VectorField;

/// A slow-fast system dX = f dt, dY = eps^-2 B dt + eps^-1 C dW.
///
/// Immutable once built; the coefficient callables must be reentrant.
struct SystemSpec {
    std::string name;
    /// Canonical text used for hashing (builtin name or expression list).
    std::string description;
    int dim_slow = 1;
    TorusGeometry geometry;
    VectorField f;
    VectorField B;
    MatrixField C;
    double f_sup_norm = 0.0;
    double lipschitz_f = 0.0;
    double nondegeneracy_floor = 1.0;
    /// True when none of f, B, C reads x. Enables single-surface rates.
    bool x_independent = false;
    /// True when B and C do not read x (frozen and coupled fast motions agree).
    bool fast_x_independent = false;

    [[nodiscard]] int dim_fast() const { return geometry.dim_fast; }

    /// Convenience scalar-returning evaluators (allocate; not for hot loops).
    [[nodiscard]] Vec eval_f(std::span<const double> x, std::span<const double> y) const;
    [[nodiscard]] Vec eval_B(std::span<const double> x, std::span<const double> y) const;
    [[nodiscard]] Vec eval_C(std::span<const double> x, std::span<const double> y) const;
    /// Row-major C C^T.
    [[nodiscard]] Vec eval_diffusion(std::span<const double> x, std::span<const double> y) const;
};

using SystemPtr = std::shared_ptr<const SystemSpec>;

struct BuiltinSystem {
    std::string name;
    SystemPtr spec;
    std::string notes;
};

[[nodiscard]] const std::vector<BuiltinSystem>& builtin_registry();
[[nodiscard]] std::vector<std::string> builtin_names();

/// Throws UnknownSystemError listing the valid names.
[[nodiscard]] SystemPtr builtin(const std::string& name);

/// Closed-form system from expression strings. `C` is row-major l x l.
struct ExpressionSystem {
    int dim_slow = 1;
    int dim_fast = 1;
    std::vector<double> period;  // empty -> 2*pi for every axis
    std::vector<std::string> f;
    std::vector<std::string> B;
    std::vector<std::string> C;
    double f_sup_norm = 0.0;
    double lipschitz_f = 0.0;
    double nondegeneracy_floor = 1.0;
};

[[nodiscard]] SystemPtr make_expression_system(const ExpressionSystem& def, std::string name = "custom");

struct ValidationReport {
    long samples = 0;
    double max_abs_f = 0.0;
    double lipschitz_f = 0.0;
    double lipschitz_B = 0.0;
    double lipschitz_C = 0.0;
    double min_eig_diffusion = kInf;
    double max_periodicity_defect = 0.0;
    bool nonfinite = false;
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
};

/// Spot-checks the declared bounds of `spec` on `samples` random points.
/// Slow arguments are drawn from [-x_radius, x_radius]^d. Violations are
/// reported, never thrown.
[[nodiscard]] ValidationReport validate(const SystemSpec& spec, long samples, std::uint64_t seed,
                                        double x_radius = kPi);

}  // namespace slowfast
