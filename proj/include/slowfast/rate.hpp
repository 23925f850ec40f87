#pragma once

#include "slowfast/domain.hpp"
#include "slowfast/hamiltonian.hpp"

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace slowfast {

struct RateOptions {
    /// Radius of the truncated Legendre transform; infinity for the full L.
    double trunc_b = kInf;
    double solver_tol = 1e-5;
    /// Re-evaluate H at the maximizer with the exact solver, when attached.
    bool exact_polish = false;

    [[nodiscard]] static RateOptions synthetic() { return {kInf, 1e-8, false}; }
};

/// sup over the feasible set of alpha . beta - H(beta) and its maximizer.
struct AdjointResult {
    /// L or L^b; +infinity when alpha is outside the domain box and b is infinite.
    double value = kInf;
    Vec beta_star;
    /// |beta*| = b for a finite truncation radius.
    bool on_boundary = false;
    /// beta* sits on the edge of the tabulated box: the surface is too small
    /// to resolve the supremum and the value is a lower bound.
    bool at_box_edge = false;
    std::vector<std::string> warnings;

    [[nodiscard]] bool finite() const { return std::isfinite(value); }
};

/// Legendre transform of the tabulated surface at alpha, restricted to
/// |beta| <= b (b may be infinite). Among several maximizers the one with
/// the smallest norm is returned.
[[nodiscard]] AdjointResult legendre(const HamiltonianSurface& surface, std::span<const double> alpha,
                                     double b = kInf, const RateOptions& opts = {});

/// L - L^b, with +inf - finite = +inf.
[[nodiscard]] double truncation_gap(const HamiltonianSurface& surface, std::span<const double> alpha, double b,
                                    const RateOptions& opts = {});

/// grad_beta H at beta = 0. Throws Error when L at the returned velocity
/// exceeds solver_tol.
[[nodiscard]] Vec averaged_drift(const HamiltonianSurface& surface, const RateOptions& opts = {});

struct SlopeEntry {
    Vec direction;
    double m = 0.0;
    double M = 0.0;
    double slope = 0.0;  // v . grad H(0)
    double margin_low = 0.0;  // slope - m
    double margin_high = 0.0;  // M - slope
    bool degenerate = false;
    bool ok = true;
    std::string note;
};

struct SlopeReport {
    std::vector<SlopeEntry> entries;
    bool ok = true;
    /// False when every direction is degenerate and nothing was checked.
    bool checked_any = false;
};

/// m_v < v . grad H(0) < M_v for each nondegenerate direction of `box`.
[[nodiscard]] SlopeReport interior_slope_check(const HamiltonianSurface& surface, const DomainBox& box);

/// L(x, .) for a system. When H does not depend on the slow variable a
/// single surface serves every x; otherwise surfaces H(x, x, .) are built on
/// demand and cached by x.
class RateFunction {
public:
    /// Fixed surface, used for every x.
    explicit RateFunction(HamiltonianSurface surface, RateOptions opts = {});
    /// Surfaces tabulated from `spec` on `box` as needed.
    RateFunction(SystemPtr spec, BetaBox box, int n_per_axis, SurfaceOptions sopts = {}, RateOptions opts = {});

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] bool x_independent() const { return fixed_ != nullptr; }
    [[nodiscard]] const RateOptions& options() const { return opts_; }
    [[nodiscard]] const HamiltonianSurface& surface_at(std::span<const double> x) const;

    /// L^b(x, alpha) with b = options().trunc_b.
    [[nodiscard]] AdjointResult evaluate(std::span<const double> x, std::span<const double> alpha) const;
    [[nodiscard]] double L(std::span<const double> x, std::span<const double> alpha) const {
        return evaluate(x, alpha).value;
    }
    [[nodiscard]] Vec averaged_drift(std::span<const double> x) const;
    [[nodiscard]] std::size_t cached_surfaces() const;

private:
    int dim_ = 1;
    RateOptions opts_;
    std::shared_ptr<const HamiltonianSurface> fixed_;
    SystemPtr spec_;
    BetaBox box_;
    int n_per_axis_ = 0;
    SurfaceOptions sopts_;
    mutable std::mutex mu_;
    mutable std::map<Vec, std::shared_ptr<const HamiltonianSurface>> cache_;
};

/// CSV columns alpha_1.., L, L_b, beta_star_1.., on_boundary with b = rate.options().trunc_b
/// (beta_star from the truncated problem).
void write_l_curve(std::ostream& os, const RateFunction& rate, std::span<const double> x,
                   const std::vector<Vec>& alphas);

}  // namespace slowfast
