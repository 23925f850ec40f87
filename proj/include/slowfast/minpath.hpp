#pragma once

#include "slowfast/action.hpp"

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace slowfast {

/// Minimize sum_k Delta * L(z_k, (z_{k+1} - z_k) / Delta) over the interior
/// nodes z_1 .. z_{m-1}, with z_0 = x_start, z_m = x_end, Delta = T / m.
struct MinActionProblem {
    std::shared_ptr<const RateFunction> rate;
    Vec x_start;
    Vec x_end;
    double T = 1.0;
    int m = 16;
    int max_iters = 2000;
    /// Stop when max_j |dS/dz_j| <= tol.
    double tol = 1e-6;
    /// L-BFGS directions instead of steepest descent.
    bool quasi_newton = false;
    /// Step for the central difference of L in x (surfaces cached per x).
    double fd_x_step = 1e-3;
    int jobs = 1;

    void validate() const;
};

struct MinActionResult {
    Path path;
    double value = kInf;
    double grad_norm = kInf;
    bool converged = false;
    int iterations = 0;
    Vec per_iter;
    /// Segments whose adjoint sits on the edge of the tabulated beta box.
    std::vector<int> near_boundary_segments;
    std::vector<std::string> warnings;
};

/// The discretized action of a node sequence (left-node rule) with +inf for
/// infeasible segments.
[[nodiscard]] double discrete_action(const RateFunction& rate, const Path& path, int jobs = 1);

/// Gradient descent with Armijo backtracking; trial points with infinite
/// action are rejected. `init` must have m segments on [0, T] and match the
/// endpoints; an empty Path means the straight line. Throws
/// InfeasiblePathError naming the first infinite-rate segment of the start.
[[nodiscard]] MinActionResult minimize_action(const MinActionProblem& problem, const Path& init = {});

struct LevelSetResult {
    /// Approximate min over xi with S(xi) <= s of max_t |path_t - xi_t|.
    double distance = 0.0;
    double achieved_action = 0.0;
    Path xi;
    bool converged = false;
    std::string note;
};

/// Bisection on the radius r of a sup-norm tube around `path` (start point
/// held fixed); each trial minimizes the discrete action inside the tube.
/// Uses problem.rate, problem.max_iters and problem.tol.
[[nodiscard]] LevelSetResult level_set_distance(const Path& path, double s, const MinActionProblem& problem,
                                                double r_tol = 1e-4);

[[nodiscard]] std::string minpath_json(const MinActionResult& r);

}  // namespace slowfast
