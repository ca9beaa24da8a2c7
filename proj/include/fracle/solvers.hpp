#pragma once

#include "fracle/domain_grid.hpp"
#include "fracle/energy_functional.hpp"
#include "fracle/fractional_operator.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fracle {

enum class InitialGuess { zero, bump, random_positive, supplied };

std::string_view to_string(InitialGuess guess);
/// Throws ConfigError on unknown names.
InitialGuess parse_initial_guess(std::string_view name);

enum class SolveStatus {
    converged,
    nonconvergence,
    resonant,          ///< pq = 1, rejected before any iteration
    wrong_regime,      ///< exponents outside the solver's regime
    trivial,           ///< iteration ended at (or collapsed to) the zero solution
    singular_jacobian, ///< Newton matrix numerically singular
    not_positive,      ///< a component fails strict interior positivity
};

std::string_view to_string(SolveStatus status);

struct SolverConfig {
    int max_iterations = 5000;
    /// Descent stops when ||W^{-1} g||_inf falls below this value.
    double gradient_tolerance = 1e-6;
    /// Same measure, for the peak of the mountain-pass path.
    double mountain_pass_tolerance = 1e-3;
    double armijo = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-14;
    /// Continuation schedule for the flux smoothing; only used when p > 1.
    std::vector<double> smoothing{1e-2, 1e-4, 1e-6, 1e-8, 1e-10};
    std::uint64_t seed = 1;
    InitialGuess initial_guess = InitialGuess::bump;
    std::vector<double> supplied_guess;
    int path_nodes = 21;
    bool polish = true;
    double residual_tolerance = 1e-10;
    int newton_max_iterations = 30;
    /// Accepted pairs must satisfy both equations to this sup-norm residual.
    double acceptance_tolerance = 1e-6;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

struct IterationRecord {
    int iteration = 0;
    int stage = 0;
    double smoothing = 0.0;
    double energy = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
};

struct MountainPassInfo {
    double endpoint_scale = 0.0;  ///< t with u1 = t * bump
    double endpoint_energy = 0.0; ///< energy of u1, negative
    double peak_energy = 0.0;     ///< path maximum before polishing
    int sweeps = 0;
    int restarts = 0;
};

struct SolutionPair {
    GridFunction u;
    GridFunction v;
    double residual_u = std::numeric_limits<double>::infinity(); ///< ||A u - (v+)^p||_inf
    double residual_v = std::numeric_limits<double>::infinity(); ///< ||A v - (u+)^q||_inf
    EnergyReport energy;
    double min_u = 0.0;
    double min_v = 0.0;
    std::vector<IterationRecord> trace;
    int newton_iterations = 0;
    std::optional<MountainPassInfo> mountain_pass;
    SolveStatus status = SolveStatus::nonconvergence;
    std::string diagnostic;

    /// Both residuals within tolerance and both components strictly positive inside.
    bool accepted(double tolerance) const;
};

/// Builds a pair and fills residuals, energy and minima.
SolutionPair evaluate_pair(const FractionalOperator& op, GridFunction u, GridFunction v, const ExponentPair& exps);

/// u0(x) = max(0, 1 - |x - c|^2 / r^2) normalized to unit sup-norm, c the domain center
/// and r its inradius.
GridFunction bump_function(const Grid& grid);
GridFunction initial_guess(const Grid& grid, const SolverConfig& cfg);

/// v = A^{-1} (u+)^q.
GridFunction recover_v(const FractionalOperator& op, const GridFunction& u, double q);

/// Direct minimization for pq < 1: descent on the energy in the metric A W D A, where D
/// is the derivative of the flux at A u, with Armijo backtracking; then v = recover_v(u)
/// and an optional Newton polish of the coupled system.
SolutionPair minimize_sublinear(const FractionalOperator& op, const ExponentPair& exps, const SolverConfig& cfg);

/// Mountain pass for pq > 1 below the critical hyperbole. The path runs from 0 through a
/// peak node to u1 = t * bump with negative energy. Each sweep takes the max-energy node,
/// moves it by a preconditioned descent step transversal to the path, and raises it back
/// to the energy maximum along its ray, which keeps it the path maximum.
SolutionPair mountain_pass(const FractionalOperator& op, const ExponentPair& exps, const SolverConfig& cfg);

/// Damped Newton on F(u, v) = (A u - (v+)^p, A v - (u+)^q) with the analytic Jacobian.
/// Steps that break strict positivity or fail to reduce ||F||_inf are halved.
SolutionPair newton_polish(const FractionalOperator& op, SolutionPair pair, const ExponentPair& exps,
                           const SolverConfig& cfg);

}  // namespace fracle
