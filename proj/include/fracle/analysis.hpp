#pragma once

#include "fracle/domain_grid.hpp"
#include "fracle/energy_functional.hpp"
#include "fracle/fractional_operator.hpp"
#include "fracle/solvers.hpp"

#include <boost/rational.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace fracle {

using Rational = boost::rational<long long>;

Regime classify(const ExponentPair& exps, int n, double s);
/// Same classification in exact arithmetic; no tolerance is involved.
Regime classify_exact(Rational p, Rational q, int n, Rational s);

/// n/(q+1) + n/(p+1) - (n - 2s), which equals n times the hyperbole gap.
double rhs_factor(const ExponentPair& exps, int n, double s);
Rational rhs_factor_exact(Rational p, Rational q, int n, Rational s);

/// Boundary-layer fit window, in multiples of h along the inward normal.
inline constexpr int kFitFirstLayer = 2;
inline constexpr int kFitLastLayer = 12;
inline constexpr int kFitMinSamples = 6;

struct QuotientSample {
    BoundaryPoint point;
    double value = 0.0; ///< limit of u/d^s at the point; NaN on failure
    int samples = 0;
    bool ok = false;
};

struct QuotientReport {
    std::vector<QuotientSample> points;
    int failures = 0;
    /// Rectangle trace points whose normal ray runs into a corner region were dropped.
    int corners_dropped = 0;
};

/// Fits log(u / d^s) = a0 + a1/k + a2/k^2 + a3 d on samples at distance d = k h along the
/// inward normal, k = 2..12, and returns exp(a0) per trace point. The 1/k terms absorb
/// the discrete boundary layer; the d term absorbs the smooth part.
QuotientReport boundary_quotient(const GridFunction& u, const Grid& grid, double s, int trace_samples = 256);

struct ExponentFit {
    double alpha = 0.0;        ///< mean over successful trace points
    std::vector<double> local; ///< per trace point, NaN on failure
    int failures = 0;
};

/// Fits log u = alpha log d + b + c1/k + c2/k^2 + e d along inward normals.
ExponentFit boundary_exponent_fit(const GridFunction& u, const Grid& grid, int trace_samples = 64);

inline constexpr double kResidualFloor = 1e-14;

struct RellichReport {
    double lhs = 0.0;
    double rhs_factor = 0.0;
    double rhs = 0.0;
    double relative_residual = 0.0;
    double cross_gap = 0.0;
    int fit_failures = 0;
    int corners_dropped = 0;
    bool star_shaped = false;
    bool flagged = false; ///< any boundary fit failed or corners were dropped
};

/// |integral v^{p+1} - integral u^{q+1}| / integral u^{q+1}.
double cross_integral_gap(const SolutionPair& pair, const ExponentPair& exps);

RellichReport rellich_residual(const SolutionPair& pair, const ExponentPair& exps, const Grid& grid, double s,
                               int trace_samples = 256);

struct UniquenessGap {
    double gap_u = 0.0;
    double gap_v = 0.0;
    double relative_u = 0.0; ///< gap_u / sup|u1|
    double relative_v = 0.0;
    double sliding = 0.0;    ///< min over nodes of min(u1/u2, v1/v2)
};

/// Throws ConfigError if the pairs live on different grids or a component of pair2 is
/// not strictly positive.
UniquenessGap uniqueness_gap(const SolutionPair& pair1, const SolutionPair& pair2);

struct AuditWitness {
    int trial = 0;
    int node = 0;
    double value = 0.0;
};

struct AuditReport {
    int trials = 0;
    int passes = 0;
    int skipped = 0; ///< trials whose right-hand side was identically zero
    std::vector<AuditWitness> witnesses;
    bool passed() const { return witnesses.empty(); }
};

/// Solves A w = f for `trials` random f >= 0 and records every node where w <= 0.
/// Trials cycle through dense uniform data, sparse data and single-node indicators.
AuditReport maximum_principle_audit(const FractionalOperator& op, int trials, std::uint64_t seed);

struct OperatorInvariants {
    double symmetry_error = 0.0;  ///< max |A - A^T|
    double max_off_diagonal = 0.0;
    double min_diagonal = 0.0;
    double min_row_sum = 0.0;
    double zero_image = 0.0;      ///< ||A 0||_inf
    double self_adjoint_error = 0.0;
    std::optional<double> green_min; ///< min entry of A^{-1}, only for small grids
    bool passed() const;
};

OperatorInvariants operator_invariants(const FractionalOperator& op, std::uint64_t seed,
                                       std::size_t green_limit = 1024);

}  // namespace fracle
