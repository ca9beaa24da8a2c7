#include "fracle/analysis.hpp"

#include "fracle/errors.hpp"
#include "fracle/special_functions.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fracle {

Regime classify(const ExponentPair& exps, int n, double s) {
    return exps.regime(n, s);
}

// Mixed rational/int comparisons recurse forever in C++20 mode with Boost 1.74, so both
// operands are always Rational here.
Regime classify_exact(Rational p, Rational q, int n, Rational s) {
    const Rational pq = p * q;
    if (pq == Rational(1)) {
        return Regime::resonant;
    }
    if (pq < Rational(1)) {
        return Regime::sublinear;
    }
    if (Rational(n) <= 2 * s) {
        return Regime::superlinear_subcritical;
    }
    const Rational factor = rhs_factor_exact(p, q, n, s);
    if (factor > Rational(0)) {
        return Regime::superlinear_subcritical;
    }
    return factor == Rational(0) ? Regime::critical : Regime::supercritical;
}

double rhs_factor(const ExponentPair& exps, int n, double s) {
    return n / (exps.q + 1.0) + n / (exps.p + 1.0) - (n - 2.0 * s);
}

Rational rhs_factor_exact(Rational p, Rational q, int n, Rational s) {
    return Rational(n) / (q + 1) + Rational(n) / (p + 1) - (Rational(n) - 2 * s);
}

namespace {

struct NormalSamples {
    std::vector<double> distance;
    std::vector<double> layer;  // d / h
    std::vector<double> value;
    bool corner = false;
};

NormalSamples sample_normal(const GridFunction& u, const Grid& grid, const BoundaryPoint& b) {
    NormalSamples out;
    const double h = grid.spacing();
    const int last = std::min(kFitLastLayer, static_cast<int>(std::floor(0.5 * grid.domain().inradius() / h)));
    for (int k = kFitFirstLayer; k <= last; ++k) {
        const double d = k * h;
        const Point x{b.x[0] - d * b.normal[0], b.x[1] - d * b.normal[1]};
        if (std::abs(grid.domain().boundary_distance(x) - d) > 1e-9 * d) {
            out.corner = true;
            return out;
        }
        out.distance.push_back(d);
        out.layer.push_back(k);
        out.value.push_back(grid.interpolate(u.span(), x));
    }
    return out;
}

// Least-squares intercept-type coefficient `index` for log-values against the given basis.
std::optional<double> fit_coefficient(const NormalSamples& smp, bool with_log_distance, double shift_exponent,
                                      int index) {
    const auto m = static_cast<Eigen::Index>(smp.value.size());
    if (m < kFitMinSamples) {
        return std::nullopt;
    }
    const int columns = with_log_distance ? 5 : 4;
    Eigen::MatrixXd basis(m, columns);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (!(smp.value[i] > 0.0)) {
            return std::nullopt;
        }
        const double d = smp.distance[i];
        const double k = smp.layer[i];
        int c = 0;
        if (with_log_distance) {
            basis(i, c++) = std::log(d);
        }
        basis(i, c++) = 1.0;
        basis(i, c++) = 1.0 / k;
        basis(i, c++) = 1.0 / (k * k);
        basis(i, c++) = d;
        rhs[i] = std::log(smp.value[i]) - shift_exponent * std::log(d);
    }
    const Eigen::VectorXd coef = basis.colPivHouseholderQr().solve(rhs);
    if (!coef.allFinite()) {
        return std::nullopt;
    }
    return coef[index];
}

}  // namespace

QuotientReport boundary_quotient(const GridFunction& u, const Grid& grid, double s, int trace_samples) {
    QuotientReport report;
    for (const BoundaryPoint& b : boundary_trace_weights(grid, trace_samples)) {
        const NormalSamples smp = sample_normal(u, grid, b);
        if (smp.corner) {
            ++report.corners_dropped;
            continue;
        }
        QuotientSample q;
        q.point = b;
        q.samples = static_cast<int>(smp.value.size());
        if (const auto a0 = fit_coefficient(smp, false, s, 0)) {
            q.value = std::exp(*a0);
            q.ok = true;
        } else {
            q.value = std::numeric_limits<double>::quiet_NaN();
            ++report.failures;
        }
        report.points.push_back(q);
    }
    return report;
}

ExponentFit boundary_exponent_fit(const GridFunction& u, const Grid& grid, int trace_samples) {
    ExponentFit fit;
    double sum = 0.0;
    int count = 0;
    for (const BoundaryPoint& b : boundary_trace_weights(grid, trace_samples)) {
        const NormalSamples smp = sample_normal(u, grid, b);
        const auto alpha = smp.corner ? std::nullopt : fit_coefficient(smp, true, 0.0, 0);
        if (alpha) {
            fit.local.push_back(*alpha);
            sum += *alpha;
            ++count;
        } else {
            fit.local.push_back(std::numeric_limits<double>::quiet_NaN());
            ++fit.failures;
        }
    }
    fit.alpha = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
    return fit;
}

double cross_integral_gap(const SolutionPair& pair, const ExponentPair& exps) {
    const double iu = pair.u.positive_power(exps.q + 1.0).integral();
    const double iv = pair.v.positive_power(exps.p + 1.0).integral();
    return std::abs(iv - iu) / std::max(iu, kResidualFloor);
}

RellichReport rellich_residual(const SolutionPair& pair, const ExponentPair& exps, const Grid& grid, double s,
                               int trace_samples) {
    RellichReport report;
    const QuotientReport qu = boundary_quotient(pair.u, grid, s, trace_samples);
    const QuotientReport qv = boundary_quotient(pair.v, grid, s, trace_samples);
    const double g = gamma_function(1.0 + s);
    double boundary = 0.0;
    for (std::size_t k = 0; k < qu.points.size(); ++k) {
        const QuotientSample& a = qu.points[k];
        const QuotientSample& b = qv.points[k];
        if (!a.ok || !b.ok) {
            ++report.fit_failures;
            continue;
        }
        const double x_dot_nu = a.point.x[0] * a.point.normal[0] + a.point.x[1] * a.point.normal[1];
        boundary += a.value * b.value * x_dot_nu * a.point.weight;
    }
    const int n = grid.dimension();
    report.lhs = g * g * boundary;
    report.rhs_factor = rhs_factor(exps, n, s);
    report.rhs = report.rhs_factor * pair.u.positive_power(exps.q + 1.0).integral();
    report.relative_residual = std::abs(report.lhs - report.rhs) /
                               std::max({std::abs(report.lhs), std::abs(report.rhs), kResidualFloor});
    report.cross_gap = cross_integral_gap(pair, exps);
    report.corners_dropped = qu.corners_dropped;
    report.star_shaped = grid.domain().is_star_shaped_wrt_origin();
    report.flagged = report.fit_failures > 0 || report.corners_dropped > 0;
    return report;
}

UniquenessGap uniqueness_gap(const SolutionPair& pair1, const SolutionPair& pair2) {
    if (pair1.u.size() != pair2.u.size() || pair1.v.size() != pair2.v.size() ||
        pair1.u.weight() != pair2.u.weight()) {
        throw ConfigError("uniqueness_gap needs both pairs on the same grid");
    }
    if (pair2.u.size() > 0 && (pair2.u.min_value() <= 0.0 || pair2.v.min_value() <= 0.0)) {
        throw ConfigError("uniqueness_gap needs a strictly positive second pair");
    }
    UniquenessGap gap;
    gap.gap_u = (pair1.u.values() - pair2.u.values()).lpNorm<Eigen::Infinity>();
    gap.gap_v = (pair1.v.values() - pair2.v.values()).lpNorm<Eigen::Infinity>();
    const double su = pair1.u.sup_norm();
    const double sv = pair1.v.sup_norm();
    gap.relative_u = su > 0.0 ? gap.gap_u / su : gap.gap_u;
    gap.relative_v = sv > 0.0 ? gap.gap_v / sv : gap.gap_v;
    const Eigen::ArrayXd ratio_u = pair1.u.values().array() / pair2.u.values().array();
    const Eigen::ArrayXd ratio_v = pair1.v.values().array() / pair2.v.values().array();
    gap.sliding = pair1.u.size() > 0 ? std::min(ratio_u.minCoeff(), ratio_v.minCoeff()) : 1.0;
    return gap;
}

AuditReport maximum_principle_audit(const FractionalOperator& op, int trials, std::uint64_t seed) {
    AuditReport report;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto m = static_cast<Eigen::Index>(op.grid().size());
    std::uniform_int_distribution<Eigen::Index> pick(0, std::max<Eigen::Index>(m - 1, 0));
    for (int t = 0; t < trials; ++t) {
        ++report.trials;
        Eigen::VectorXd f = Eigen::VectorXd::Zero(m);
        switch (t % 3) {
        case 0:
            for (Eigen::Index k = 0; k < m; ++k) {
                f[k] = unit(rng);
            }
            break;
        case 1:
            for (Eigen::Index k = 0; k < m; ++k) {
                const double r = unit(rng);
                f[k] = r < 0.1 ? unit(rng) : 0.0;
            }
            break;
        default:
            if (m > 0) {
                f[pick(rng)] = 1.0;
            }
            break;
        }
        if (m == 0 || f.maxCoeff() <= 0.0) {
            ++report.skipped;
            continue;
        }
        const GridFunction w = solve_linear(op, GridFunction(op.grid(), f));
        bool ok = true;
        for (Eigen::Index k = 0; k < m; ++k) {
            if (!(w.values()[k] > 0.0)) {
                report.witnesses.push_back({t, static_cast<int>(k), w.values()[k]});
                ok = false;
            }
        }
        report.passes += ok ? 1 : 0;
    }
    return report;
}

bool OperatorInvariants::passed() const {
    return symmetry_error <= 1e-12 * std::abs(min_diagonal) && max_off_diagonal <= 0.0 && min_diagonal > 0.0 &&
           min_row_sum > 0.0 && zero_image == 0.0 && self_adjoint_error <= 1e-10 &&
           (!green_min || *green_min >= 0.0);
}

OperatorInvariants operator_invariants(const FractionalOperator& op, std::uint64_t seed, std::size_t green_limit) {
    OperatorInvariants inv;
    const Eigen::MatrixXd& a = op.matrix();
    const Eigen::Index m = a.rows();
    inv.symmetry_error = (a - a.transpose()).cwiseAbs().maxCoeff();
    inv.min_diagonal = a.diagonal().minCoeff();
    inv.max_off_diagonal = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i != j) {
                inv.max_off_diagonal = std::max(inv.max_off_diagonal, a(i, j));
            }
        }
    }
    if (m < 2) {
        inv.max_off_diagonal = 0.0;
    }
    inv.min_row_sum = op.row_sums().minCoeff();
    inv.zero_image = op.apply(Eigen::VectorXd::Zero(m)).lpNorm<Eigen::Infinity>();

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(m);
    Eigen::VectorXd v(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        u[k] = normal(rng);
        v[k] = normal(rng);
    }
    const double w = op.grid().weight();
    const double left = w * op.apply(u).dot(v);
    const double right = w * u.dot(op.apply(v));
    const double scale = w * op.apply(u).norm() * v.norm();
    inv.self_adjoint_error = std::abs(left - right) / std::max(scale, kResidualFloor);
    if (op.grid().size() <= green_limit) {
        inv.green_min = op.inverse().minCoeff();
    }
    return inv;
}

}  // namespace fracle
