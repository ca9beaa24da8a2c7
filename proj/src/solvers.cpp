#include "fracle/solvers.hpp"

#include "fracle/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <random>

namespace fracle {

std::string_view to_string(InitialGuess guess) {
    switch (guess) {
    case InitialGuess::zero: return "zero";
    case InitialGuess::bump: return "bump";
    case InitialGuess::random_positive: return "random_positive";
    case InitialGuess::supplied: return "supplied";
    }
    return "unknown";
}

InitialGuess parse_initial_guess(std::string_view name) {
    for (auto g : {InitialGuess::zero, InitialGuess::bump, InitialGuess::random_positive, InitialGuess::supplied}) {
        if (to_string(g) == name) {
            return g;
        }
    }
    throw ConfigError("unknown initial guess '" + std::string(name) + "'");
}

std::string_view to_string(SolveStatus status) {
    switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::nonconvergence: return "nonconvergence";
    case SolveStatus::resonant: return "resonant";
    case SolveStatus::wrong_regime: return "wrong_regime";
    case SolveStatus::trivial: return "trivial";
    case SolveStatus::singular_jacobian: return "singular_jacobian";
    case SolveStatus::not_positive: return "not_positive";
    }
    return "unknown";
}

void SolverConfig::validate() const {
    if (max_iterations <= 0 || newton_max_iterations < 0 || path_nodes < 3) {
        throw ConfigError("iteration budgets must be positive and the path needs at least 3 nodes");
    }
    if (!(gradient_tolerance > 0.0) || !(mountain_pass_tolerance > 0.0) || !(residual_tolerance > 0.0) ||
        !(acceptance_tolerance > 0.0)) {
        throw ConfigError("tolerances must be positive");
    }
    if (!(armijo > 0.0 && armijo < 1.0) || !(backtrack > 0.0 && backtrack < 1.0) || !(min_step > 0.0)) {
        throw ConfigError("line search parameters out of range");
    }
    for (double eps : smoothing) {
        if (!(eps >= 0.0)) {
            throw ConfigError("smoothing values must be nonnegative");
        }
    }
}

bool SolutionPair::accepted(double tolerance) const {
    return residual_u <= tolerance && residual_v <= tolerance && min_u > 0.0 && min_v > 0.0;
}

SolutionPair evaluate_pair(const FractionalOperator& op, GridFunction u, GridFunction v, const ExponentPair& exps) {
    SolutionPair pair;
    pair.residual_u = (op.apply(u).values() - v.positive_power(exps.p).values()).lpNorm<Eigen::Infinity>();
    pair.residual_v = (op.apply(v).values() - u.positive_power(exps.q).values()).lpNorm<Eigen::Infinity>();
    pair.energy = energy(op, u, exps);
    pair.min_u = u.min_value();
    pair.min_v = v.min_value();
    pair.u = std::move(u);
    pair.v = std::move(v);
    return pair;
}

GridFunction bump_function(const Grid& grid) {
    const Point c = grid.domain().center();
    const double r = grid.domain().inradius();
    GridFunction bump = sample(grid, [&](const Point& x) {
        const double dx = x[0] - c[0];
        const double dy = x[1] - c[1];
        return std::max(0.0, 1.0 - (dx * dx + dy * dy) / (r * r));
    });
    const double top = bump.sup_norm();
    if (top > 0.0) {
        bump *= 1.0 / top;
    }
    return bump;
}

GridFunction initial_guess(const Grid& grid, const SolverConfig& cfg) {
    switch (cfg.initial_guess) {
    case InitialGuess::zero: return GridFunction(grid);
    case InitialGuess::bump: return bump_function(grid);
    case InitialGuess::random_positive: {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> dist(0.1, 1.0);
        Eigen::VectorXd values(static_cast<Eigen::Index>(grid.size()));
        for (Eigen::Index k = 0; k < values.size(); ++k) {
            values[k] = dist(rng);
        }
        return GridFunction(grid, std::move(values));
    }
    case InitialGuess::supplied: {
        if (cfg.supplied_guess.size() != grid.size()) {
            throw ConfigError("supplied initial guess has " + std::to_string(cfg.supplied_guess.size()) +
                              " values, the grid has " + std::to_string(grid.size()) + " interior nodes");
        }
        return GridFunction(grid, Eigen::Map<const Eigen::VectorXd>(cfg.supplied_guess.data(),
                                                                    static_cast<Eigen::Index>(grid.size())));
    }
    }
    return GridFunction(grid);
}

GridFunction recover_v(const FractionalOperator& op, const GridFunction& u, double q) {
    return solve_linear(op, u.positive_power(q));
}

namespace {

SolutionPair rejected(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps,
                      SolveStatus status, std::string diagnostic) {
    SolutionPair pair = evaluate_pair(op, u, GridFunction(op.grid()), exps);
    pair.status = status;
    pair.diagnostic = std::move(diagnostic);
    return pair;
}

std::optional<SolutionPair> reject_by_regime(const FractionalOperator& op, const ExponentPair& exps,
                                             Regime wanted, const SolverConfig& cfg) {
    const Regime regime = exps.regime(op.dimension(), op.order());
    if (regime == Regime::resonant) {
        return rejected(op, initial_guess(op.grid(), cfg), exps, SolveStatus::resonant,
                        "pq = 1 is the resonant case; the system degenerates to an eigenvalue problem");
    }
    if (regime != wanted) {
        return rejected(op, initial_guess(op.grid(), cfg), exps, SolveStatus::wrong_regime,
                        "exponents are in the " + std::string(to_string(regime)) + " regime, solver needs " +
                            std::string(to_string(wanted)));
    }
    return std::nullopt;
}

std::vector<double> smoothing_schedule(const ExponentPair& exps, const SolverConfig& cfg) {
    // The flux exponent 1/p - 1 is nonnegative for p <= 1, so no smoothing is needed.
    if (exps.p <= 1.0 || cfg.smoothing.empty()) {
        return {0.0};
    }
    return cfg.smoothing;
}

double stage_tolerance(double final_tolerance, double eps, bool last) {
    return last ? final_tolerance : std::max(final_tolerance, 10.0 * eps);
}

Eigen::VectorXd flux_of(const Eigen::VectorXd& image, double p, double eps) {
    Eigen::VectorXd out(image.size());
    for (Eigen::Index k = 0; k < image.size(); ++k) {
        out[k] = smoothed_flux(image[k], p, eps);
    }
    return out;
}

// Gradient from a precomputed image A u.
Eigen::VectorXd gradient_from_image(const FractionalOperator& op, const GridFunction& u, const Eigen::VectorXd& image,
                                    const ExponentPair& exps, double eps) {
    const double w = u.weight();
    Eigen::VectorXd g = w * op.apply(flux_of(image, exps.p, eps));
    for (Eigen::Index k = 0; k < g.size(); ++k) {
        const double uk = u.values()[k];
        if (uk > 0.0) {
            g[k] -= w * std::pow(uk, exps.q);
        }
    }
    return g;
}

// Diagonal D of the convex part's metric A W D A, floored to stay invertible.
Eigen::VectorXd metric_weights(const Eigen::VectorXd& image, double p, double eps) {
    Eigen::VectorXd d(image.size());
    double top = 0.0;
    for (Eigen::Index k = 0; k < image.size(); ++k) {
        d[k] = smoothed_flux_derivative(image[k], p, eps);
        if (std::isfinite(d[k])) {
            top = std::max(top, d[k]);
        }
    }
    const double floor = top > 0.0 ? 1e-12 * top : 1e-300;
    const double ceiling = top > 0.0 ? 1e12 * top : 1.0;
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        d[k] = std::clamp(std::isfinite(d[k]) ? d[k] : ceiling, floor, ceiling);
    }
    return d;
}

// Steepest descent direction for the metric A W D A: d = -A^{-1} D^{-1} A^{-1} g / w.
Eigen::VectorXd preconditioned_direction(const FractionalOperator& op, const Eigen::VectorXd& g,
                                         const Eigen::VectorXd& metric, double w) {
    Eigen::VectorXd z = op.solve(g);
    z.array() /= metric.array();
    return -op.solve(z) / w;
}

double metric_norm_squared(const FractionalOperator& op, const Eigen::VectorXd& x, const Eigen::VectorXd& metric,
                           double w) {
    const Eigen::VectorXd ax = op.apply(x);
    return w * (ax.array() * metric.array() * ax.array()).sum();
}

// Maximizer of tau -> energy(tau u) over tau > 0, given A u. Empty if u+ = 0.
std::optional<double> ray_maximizer(const GridFunction& u, const Eigen::VectorXd& image, const ExponentPair& exps,
                                    double eps) {
    const double w = u.weight();
    const double r = (exps.p + 1.0) / exps.p;
    double positive = 0.0;
    double kinetic = 0.0;
    for (Eigen::Index k = 0; k < image.size(); ++k) {
        const double uk = u.values()[k];
        if (uk > 0.0) {
            positive += std::pow(uk, exps.q + 1.0);
        }
        kinetic += std::pow(std::abs(image[k]), r);
    }
    positive *= w;
    kinetic *= w;
    if (!(positive > 0.0) || !(kinetic > 0.0)) {
        return std::nullopt;
    }
    auto slope = [&](double tau) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < image.size(); ++k) {
            sum += smoothed_flux(tau * image[k], exps.p, eps) * image[k];
        }
        return w * sum - std::pow(tau, exps.q) * positive;
    };
    auto curvature = [&](double tau) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < image.size(); ++k) {
            sum += smoothed_flux_derivative(tau * image[k], exps.p, eps) * image[k] * image[k];
        }
        return w * sum - exps.q * std::pow(tau, exps.q - 1.0) * positive;
    };
    // Unsmoothed closed form as the starting point.
    double tau = std::pow(kinetic / positive, 1.0 / (exps.q + 1.0 - r));
    double lo = tau;
    double hi = tau;
    for (int k = 0; k < 200 && slope(lo) <= 0.0; ++k) {
        lo *= 0.5;
    }
    for (int k = 0; k < 200 && slope(hi) >= 0.0; ++k) {
        hi *= 2.0;
    }
    for (int k = 0; k < 100; ++k) {
        const double f = slope(tau);
        if (f > 0.0) {
            lo = tau;
        } else {
            hi = tau;
        }
        const double fp = curvature(tau);
        double next = tau - f / fp;
        if (!(fp < 0.0) || !(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::abs(next - tau) <= 1e-15 * tau || hi - lo <= 1e-15 * hi) {
            tau = next;
            break;
        }
        tau = next;
    }
    return tau;
}

SolutionPair finish(const FractionalOperator& op, const GridFunction& u, const ExponentPair& exps,
                    const SolverConfig& cfg, std::vector<IterationRecord> trace, bool descent_converged,
                    std::string descent_note) {
    SolutionPair pair = evaluate_pair(op, u, recover_v(op, u, exps.q), exps);
    if (cfg.polish) {
        pair = newton_polish(op, std::move(pair), exps, cfg);
    } else {
        pair.status = descent_converged ? SolveStatus::converged : SolveStatus::nonconvergence;
    }
    pair.trace = std::move(trace);
    if (pair.status == SolveStatus::converged && !pair.accepted(cfg.acceptance_tolerance)) {
        pair.status = (pair.min_u > 0.0 && pair.min_v > 0.0) ? SolveStatus::nonconvergence : SolveStatus::not_positive;
        pair.diagnostic = "residuals or positivity outside acceptance";
    }
    if (!descent_note.empty()) {
        pair.diagnostic = pair.diagnostic.empty() ? descent_note : descent_note + "; " + pair.diagnostic;
    }
    return pair;
}

}  // namespace

SolutionPair minimize_sublinear(const FractionalOperator& op, const ExponentPair& exps, const SolverConfig& cfg) {
    cfg.validate();
    if (auto r = reject_by_regime(op, exps, Regime::sublinear, cfg)) {
        return *r;
    }
    GridFunction u = initial_guess(op.grid(), cfg);
    if (u.sup_norm() == 0.0) {
        return rejected(op, u, exps, SolveStatus::trivial, "the zero function is a critical point; descent cannot start");
    }
    const double w = u.weight();
    const std::vector<double> schedule = smoothing_schedule(exps, cfg);
    std::vector<IterationRecord> trace;
    int iteration = 0;
    bool converged = false;
    std::string note;

    for (std::size_t stage = 0; stage < schedule.size(); ++stage) {
        const double eps = schedule[stage];
        const bool last = stage + 1 == schedule.size();
        const double tol = stage_tolerance(cfg.gradient_tolerance, eps, last);
        Eigen::VectorXd image = op.apply(u.values());
        double value = energy_from_image(u, image, exps, eps).value;
        double step = 1.0;
        while (true) {
            const Eigen::VectorXd g = gradient_from_image(op, u, image, exps, eps);
            const double gnorm = g.lpNorm<Eigen::Infinity>() / w;
            trace.push_back({iteration, static_cast<int>(stage), eps, value, gnorm, 0.0});
            if (gnorm <= tol) {
                converged = last;
                break;
            }
            if (iteration >= cfg.max_iterations) {
                note = "iteration budget exhausted";
                break;
            }
            const Eigen::VectorXd direction = preconditioned_direction(op, g, metric_weights(image, exps.p, eps), w);
            const double slope = g.dot(direction);
            step = std::min(1.0, 2.0 * step);
            bool accepted = false;
            while (step >= cfg.min_step) {
                GridFunction trial = u;
                trial.values() += step * direction;
                Eigen::VectorXd trial_image = op.apply(trial.values());
                const double trial_value = energy_from_image(trial, trial_image, exps, eps).value;
                if (trial_value <= value + cfg.armijo * step * slope) {
                    u = std::move(trial);
                    image = std::move(trial_image);
                    value = trial_value;
                    accepted = true;
                    break;
                }
                step *= cfg.backtrack;
            }
            ++iteration;
            trace.back().step = accepted ? step : 0.0;
            if (!accepted) {
                note = "line search stalled";
                break;
            }
        }
        if (!note.empty()) {
            break;
        }
    }
    return finish(op, u, exps, cfg, std::move(trace), converged, note);
}

SolutionPair mountain_pass(const FractionalOperator& op, const ExponentPair& exps, const SolverConfig& cfg) {
    cfg.validate();
    if (auto r = reject_by_regime(op, exps, Regime::superlinear_subcritical, cfg)) {
        return *r;
    }
    GridFunction seed = cfg.initial_guess == InitialGuess::supplied || cfg.initial_guess == InitialGuess::random_positive
                            ? initial_guess(op.grid(), cfg)
                            : bump_function(op.grid());
    if (seed.positive_part().sup_norm() == 0.0) {
        return rejected(op, seed, exps, SolveStatus::trivial, "mountain pass needs an endpoint with a positive part");
    }
    const double w = seed.weight();
    const std::vector<double> schedule = smoothing_schedule(exps, cfg);

    // Smallest doubling t with energy(t u) < 0; exists since q + 1 > (p + 1)/p.
    auto endpoint_scale = [&](const GridFunction& u, const Eigen::VectorXd& image) {
        double t = 1.0;
        while (energy_from_image(t * u, t * image, exps).value >= 0.0 && t < 1e18) {
            t *= 2.0;
        }
        return t;
    };
    MountainPassInfo info;
    {
        const Eigen::VectorXd image = op.apply(seed.values());
        info.endpoint_scale = endpoint_scale(seed, image);
        info.endpoint_energy = energy_from_image(info.endpoint_scale * seed, info.endpoint_scale * image, exps).value;
    }

    // The path is the segment from 0 to the endpoint u1 = t * top, sampled at path_nodes
    // nodes. Its max-energy node is refined to the exact maximum along the segment, so
    // the deformed node stays the path maximum and the new path runs through it.
    auto climb = [&](const GridFunction& node, double eps) -> std::optional<GridFunction> {
        const Eigen::VectorXd image = op.apply(node.values());
        const double t = endpoint_scale(node, image);
        double best = -std::numeric_limits<double>::infinity();
        double best_tau = 0.0;
        for (int j = 1; j + 1 < cfg.path_nodes; ++j) {
            const double tau = t * j / (cfg.path_nodes - 1);
            const double e = energy_from_image(tau * node, tau * image, exps, eps).value;
            if (e > best) {
                best = e;
                best_tau = tau;
            }
        }
        if (!(best_tau > 0.0)) {
            return std::nullopt;
        }
        const auto tau = ray_maximizer(node, image, exps, eps);
        return (tau ? *tau : best_tau) * node;
    };

    GridFunction peak = seed;
    std::vector<IterationRecord> trace;
    int sweep = 0;
    bool converged = false;
    std::string note;

    for (std::size_t stage = 0; stage < schedule.size() && note.empty(); ++stage) {
        const double eps = schedule[stage];
        const bool last = stage + 1 == schedule.size();
        const double tol = stage_tolerance(cfg.mountain_pass_tolerance, eps, last);
        auto raised = climb(peak, eps);
        if (!raised) {
            note = "path collapsed: peak lost its positive part";
            break;
        }
        peak = std::move(*raised);
        double step = 1.0;
        while (true) {
            const Eigen::VectorXd image = op.apply(peak.values());
            const double value = energy_from_image(peak, image, exps, eps).value;
            const Eigen::VectorXd g = gradient_from_image(op, peak, image, exps, eps);
            const double gnorm = g.lpNorm<Eigen::Infinity>() / w;
            trace.push_back({sweep, static_cast<int>(stage), eps, value, gnorm, 0.0});
            if (gnorm <= tol) {
                converged = last;
                break;
            }
            if (sweep >= cfg.max_iterations) {
                note = "iteration budget exhausted";
                break;
            }
            const Eigen::VectorXd metric = metric_weights(image, exps.p, eps);
            Eigen::VectorXd direction = preconditioned_direction(op, g, metric, w);
            // Remove the component along the path tangent (the ray through the peak).
            const double tangent_norm2 = metric_norm_squared(op, peak.values(), metric, w);
            direction += (g.dot(peak.values()) / tangent_norm2) * peak.values();
            const double direction_norm = std::sqrt(metric_norm_squared(op, direction, metric, w));
            const double scale = direction_norm > 0.0 ? std::sqrt(tangent_norm2) / direction_norm : 0.0;
            const double slope = g.dot(direction) * scale;
            step = std::min(1.0, 2.0 * step);
            bool accepted = false;
            while (step >= cfg.min_step && scale > 0.0) {
                GridFunction trial = peak;
                trial.values() += (step * scale) * direction;
                if (auto r = climb(trial, eps)) {
                    const double trial_value = energy(op, *r, exps, eps).value;
                    if (trial_value <= value - cfg.armijo * step * std::abs(slope)) {
                        peak = std::move(*r);
                        accepted = true;
                        break;
                    }
                }
                step *= cfg.backtrack;
            }
            ++sweep;
            trace.back().step = accepted ? step : 0.0;
            if (!accepted) {
                // No transversal decrease left at this smoothing level.
                converged = last && gnorm <= 10.0 * tol;
                if (!converged && last) {
                    note = "peak descent stalled";
                }
                break;
            }
            if (peak.sup_norm() < 1e-12) {
                ++info.restarts;
                if (info.restarts > 3) {
                    note = "path collapsed to zero";
                    break;
                }
                peak = seed;
            }
        }
    }
    info.sweeps = sweep;
    info.peak_energy = energy(op, peak, exps).value;
    SolutionPair pair = finish(op, peak, exps, cfg, std::move(trace), converged, note);
    pair.mountain_pass = info;
    if (pair.status == SolveStatus::converged && !(pair.energy.value > 0.0)) {
        pair.status = SolveStatus::trivial;
        pair.diagnostic = "critical point has nonpositive energy";
    }
    return pair;
}

SolutionPair newton_polish(const FractionalOperator& op, SolutionPair pair, const ExponentPair& exps,
                           const SolverConfig& cfg) {
    if (std::abs(exps.product() - 1.0) <= kExponentTolerance) {
        pair = evaluate_pair(op, pair.u, pair.v, exps);
        pair.status = SolveStatus::resonant;
        pair.diagnostic = "pq = 1: the linearization is an eigenvalue problem for A^2, polish skipped";
        return pair;
    }
    const auto m = static_cast<Eigen::Index>(op.grid().size());
    Eigen::VectorXd u = pair.u.values();
    Eigen::VectorXd v = pair.v.values();
    auto positive = [](const Eigen::VectorXd& x) { return x.size() == 0 || x.minCoeff() > 0.0; };
    auto residual = [&](const Eigen::VectorXd& uu, const Eigen::VectorXd& vv) {
        Eigen::VectorXd f(2 * m);
        f.head(m) = op.apply(uu);
        f.tail(m) = op.apply(vv);
        for (Eigen::Index k = 0; k < m; ++k) {
            f[k] -= vv[k] > 0.0 ? std::pow(vv[k], exps.p) : 0.0;
            f[m + k] -= uu[k] > 0.0 ? std::pow(uu[k], exps.q) : 0.0;
        }
        return f;
    };
    std::vector<IterationRecord> trace = std::move(pair.trace);
    auto done = [&](SolveStatus status, std::string diagnostic, int iterations) {
        SolutionPair out = evaluate_pair(op, GridFunction(op.grid(), u), GridFunction(op.grid(), v), exps);
        out.trace = std::move(trace);
        out.mountain_pass = pair.mountain_pass;
        out.newton_iterations = iterations;
        out.status = status;
        out.diagnostic = std::move(diagnostic);
        return out;
    };
    if (!u.allFinite() || !v.allFinite() || !positive(u) || !positive(v)) {
        return done(SolveStatus::not_positive, "Newton polish needs strictly positive components", 0);
    }

    Eigen::VectorXd f = residual(u, v);
    double norm = f.lpNorm<Eigen::Infinity>();
    for (int it = 0; it <= cfg.newton_max_iterations; ++it) {
        if (norm <= cfg.residual_tolerance) {
            return done(SolveStatus::converged, "", it);
        }
        if (it == cfg.newton_max_iterations) {
            break;
        }
        Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        jac.topLeftCorner(m, m) = op.matrix();
        jac.bottomRightCorner(m, m) = op.matrix();
        for (Eigen::Index k = 0; k < m; ++k) {
            jac(k, m + k) = -exps.p * std::pow(v[k], exps.p - 1.0);
            jac(m + k, k) = -exps.q * std::pow(u[k], exps.q - 1.0);
        }
        if (!jac.allFinite()) {
            return done(SolveStatus::singular_jacobian, "Jacobian has non-finite entries", it);
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
        const double rcond = lu.rcond();
        if (!(rcond > 1e-15)) {
            return done(SolveStatus::singular_jacobian,
                        "Jacobian is numerically singular (rcond " + std::to_string(rcond) +
                            "); the solution may be degenerate",
                        it);
        }
        const Eigen::VectorXd delta = lu.solve(-f);
        double lambda = 1.0;
        bool accepted = false;
        while (lambda >= 1e-10) {
            Eigen::VectorXd u_new = u + lambda * delta.head(m);
            Eigen::VectorXd v_new = v + lambda * delta.tail(m);
            if (positive(u_new) && positive(v_new)) {
                Eigen::VectorXd f_new = residual(u_new, v_new);
                const double norm_new = f_new.lpNorm<Eigen::Infinity>();
                if (norm_new <= (1.0 - 1e-4 * lambda) * norm) {
                    u = std::move(u_new);
                    v = std::move(v_new);
                    f = std::move(f_new);
                    norm = norm_new;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            return done(SolveStatus::nonconvergence, "damped Newton could not reduce the residual", it + 1);
        }
    }
    return done(SolveStatus::nonconvergence, "Newton iteration budget exhausted", cfg.newton_max_iterations);
}

}  // namespace fracle
