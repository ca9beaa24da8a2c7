// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "fracle/analysis.hpp"
#include "fracle/experiment.hpp"
#include "fracle/fractional_operator.hpp"
#include "fracle/solvers.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace fracle;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double rel_sup_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).lpNorm<Eigen::Infinity>() / b.lpNorm<Eigen::Infinity>();
}

Grid interval(int n) { return build_grid(Domain::interval(-1.0, 1.0), n); }

void normalization_constant_check(Outcome& o) {
    const auto t0 = Clock::now();
    const double expected[] = {1.0 / std::numbers::pi, 0.5 / std::numbers::pi};
    double worst = 0.0;
    for (int n : {1, 2}) {
        const double target = expected[n - 1];
        for (double c : {normalization_constant(n, 0.5), normalization_constant_quadrature(n, 0.5),
                         oracle::normalization_constant(n, 0.5)}) {
            worst = std::max(worst, std::abs(c - target) / target);
        }
    }
    const double elapsed = seconds_since(t0);
    o.detail << "max rel err " << worst << ", " << elapsed << " s";
    o.require(worst <= 1e-6, "relative error");
    o.require(elapsed < 1.0, "runtime");
}

void torsion_check(Outcome& o) {
    const auto t0 = Clock::now();
    double previous = INFINITY;
    for (int n : {128, 256, 512}) {
        const Grid g = interval(n);
        const GridFunction w = solve_linear(assemble(g, 0.5), sample(g, [](const Point&) { return 1.0; }));
        const GridFunction exact = sample(g, [](const Point& x) { return oracle::torsion(x[0] * x[0], 1, 0.5); });
        const double err = (w - exact).sup_norm() / exact.sup_norm();
        o.detail << "N=" << n << ": " << err << "; ";
        o.require(err < previous, "monotone decrease");
        previous = err;
    }
    const double elapsed = seconds_since(t0);
    o.detail << elapsed << " s";
    o.require(previous <= 0.02, "error at N=512");
    o.require(elapsed < 10.0, "runtime");
}

void local_limit_check(Outcome& o) {
    const Grid g = interval(512);
    const double radius = 0.9;
    const GridFunction bump = sample(g, [&](const Point& x) {
        const double r2 = x[0] * x[0] / (radius * radius);
        return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0;
    });
    const Eigen::VectorXd au = assemble(g, 0.99).apply(bump.values());
    const Eigen::VectorXd lap = oracle::minus_second_difference(bump.values(), g.spacing());
    const double err = (au - lap).norm() / lap.norm();
    o.detail << "relative L2 gap " << err;
    o.require(err <= 0.05, "L2 gap");
}

void maximum_principle_check(Outcome& o) {
    const AuditReport audit = maximum_principle_audit(assemble(interval(128), 0.5), 100, 2024);
    o.detail << "audit " << audit.passes << "/" << audit.trials << " positive, " << audit.skipped << " skipped";
    o.require(audit.passed() && audit.passes + audit.skipped == 100 && audit.skipped == 0, "random right-hand sides");
    double green_min = INFINITY;
    std::vector<Grid> grids;
    for (int n : {8, 16, 32, 64}) {
        grids.push_back(interval(n));
    }
    grids.push_back(build_grid(Domain::disk(1.0), 32));
    grids.push_back(build_grid(Domain::rectangle(2.0, 1.0), 32));
    for (const Grid& g : grids) {
        for (double s : {0.25, 0.5, 0.75}) {
            green_min = std::min(green_min, assemble(g, s).inverse().minCoeff());
        }
    }
    o.detail << "; min Green entry " << green_min;
    o.require(green_min >= 0.0, "Green matrix sign");
}

void sublinear_check(Outcome& o) {
    const auto t0 = Clock::now();
    const FractionalOperator op = assemble(interval(256), 0.5);
    const ExponentPair exps{0.5, 0.5};
    SolverConfig cfg;
    const SolutionPair a = minimize_sublinear(op, exps, cfg);
    cfg.initial_guess = InitialGuess::random_positive;
    const SolutionPair b = minimize_sublinear(op, exps, cfg);
    const Eigen::VectorXd fp = oracle::fixed_point(op.matrix(), exps.p, exps.q);
    const double init_gap = rel_sup_gap(a.u.values(), b.u.values());
    const double oracle_gap = rel_sup_gap(a.u.values(), fp);
    const double elapsed = seconds_since(t0);
    o.detail << "status " << to_string(a.status) << "/" << to_string(b.status) << ", residuals " << a.residual_u
             << " " << a.residual_v << ", energy " << a.energy.value << ", init gap " << init_gap << ", oracle gap "
             << oracle_gap << ", " << elapsed << " s";
    o.require(a.status == SolveStatus::converged && b.status == SolveStatus::converged, "convergence");
    o.require(a.residual_u <= 1e-6 && a.residual_v <= 1e-6, "residuals");
    o.require(a.energy.value < 0.0, "negative energy");
    o.require(a.min_u > 0.0 && a.min_v > 0.0, "positivity");
    o.require(init_gap <= 1e-6, "initialization gap");
    o.require(oracle_gap <= 1e-6, "fixed point oracle");
    o.require(elapsed < 60.0, "runtime");
}

struct SuperlinearRun {
    Grid grid;
    SolutionPair pair;
};

SuperlinearRun superlinear(int n, double s) {
    Grid g = interval(n);
    SolutionPair pair = mountain_pass(assemble(g, s), ExponentPair{3.0, 3.0}, SolverConfig{});
    return {std::move(g), std::move(pair)};
}

void mountain_pass_check(Outcome& o, const SuperlinearRun& run, double elapsed) {
    const SolutionPair& a = run.pair;
    const Eigen::VectorXd w = oracle::scalar_lane_emden(assemble(run.grid, 0.5).matrix(), 3.0);
    const double gap = rel_sup_gap(a.u.values(), w);
    const double symmetry = rel_sup_gap(a.u.values(), a.v.values());
    o.detail << "status " << to_string(a.status) << ", residuals " << a.residual_u << " " << a.residual_v
             << ", energy " << a.energy.value << ", oracle gap " << gap << ", u-v gap " << symmetry << ", "
             << elapsed << " s";
    o.require(a.status == SolveStatus::converged, "convergence");
    o.require(a.residual_u <= 1e-6 && a.residual_v <= 1e-6, "residuals");
    o.require(a.energy.value > 0.0, "positive energy");
    o.require(a.min_u > 0.0 && a.min_v > 0.0, "positivity");
    o.require(gap <= 1e-4 && symmetry <= 1e-4, "symmetric oracle");
    o.require(elapsed < 300.0, "runtime");
}

void rellich_check(Outcome& o, const SuperlinearRun& coarse) {
    const ExponentPair exps{3.0, 3.0};
    const SuperlinearRun fine = superlinear(1024, 0.5);
    const RellichReport rc = rellich_residual(coarse.pair, exps, coarse.grid, 0.5);
    const RellichReport rf = rellich_residual(fine.pair, exps, fine.grid, 0.5);
    const double ratio = rc.relative_residual / rf.relative_residual;
    o.detail << "residual N=256 " << rc.relative_residual << ", N=1024 " << rf.relative_residual << " (ratio "
             << ratio << "), cross gap " << rc.cross_gap;
    o.require(coarse.pair.status == SolveStatus::converged && fine.pair.status == SolveStatus::converged,
              "convergence");
    o.require(!rc.flagged && !rf.flagged, "boundary fits");
    o.require(rc.relative_residual <= 0.1, "residual at N=256");
    o.require(ratio >= 1.5, "refinement decrease");
    o.require(rc.cross_gap <= 0.01, "cross integral");
}

// Side of the hyperbole in exact arithmetic: sign of 1/(p+1) + 1/(q+1) - (n-2s)/n.
int hyperbole_side(Rational p, Rational q, int n, Rational s) {
    const Rational gap = Rational(1) / (p + 1) + Rational(1) / (q + 1) - (Rational(n) - 2 * s) / n;
    return gap > Rational(0) ? 1 : (gap < Rational(0) ? -1 : 0);
}

void classifier_check(Outcome& o) {
    o.require(classify(ExponentPair{1.0, 1.0}, 1, 0.5) == Regime::resonant, "resonant example");
    o.require(classify(ExponentPair{2.0, 2.0}, 3, 0.5) == Regime::critical, "critical example");
    o.require(classify(ExponentPair{5.0, 5.0}, 1, 0.5) == Regime::superlinear_subcritical, "superlinear example");
    o.require(classify(ExponentPair{0.5, 0.5}, 1, 0.5) == Regime::sublinear, "sublinear example");
    const int n = 3;
    const Rational s(1, 2);
    int points = 0;
    int wrong = 0;
    int critical = 0;
    for (int a = 1; a <= 20; ++a) {
        for (int b = 1; b <= 20; ++b) {
            const Rational p(a, 4);
            const Rational q(b, 4);
            const int side = hyperbole_side(p, q, n, s);
            const ExponentPair e{boost::rational_cast<double>(p), boost::rational_cast<double>(q)};
            const Rational exact = rhs_factor_exact(p, q, n, s);
            const int exact_sign = exact > Rational(0) ? 1 : (exact < Rational(0) ? -1 : 0);
            const double approx = rhs_factor(e, n, 0.5);
            const int approx_sign = side == 0 ? (std::abs(approx) <= 1e-12 ? 0 : 2) : (approx > 0 ? 1 : -1);
            bool ok = exact_sign == side && approx_sign == side;
            if (p * q > Rational(1)) {
                const Regime expected = side > 0 ? Regime::superlinear_subcritical
                                                 : (side == 0 ? Regime::critical : Regime::supercritical);
                ok = ok && classify(e, n, 0.5) == expected && classify_exact(p, q, n, s) == expected;
            }
            critical += side == 0 ? 1 : 0;
            wrong += ok ? 0 : 1;
            ++points;
        }
    }
    o.detail << points << " sweep points, " << critical << " on the hyperbole, " << wrong << " misclassified";
    o.require(wrong == 0, "sweep");
}

void boundary_exponent_check(Outcome& o) {
    for (double s : {0.3, 0.5, 0.7}) {
        const Grid g = interval(512);
        const FractionalOperator op = assemble(g, s);
        const SolutionPair sub = minimize_sublinear(op, ExponentPair{0.5, 0.5}, SolverConfig{});
        const SolutionPair sup = mountain_pass(op, ExponentPair{3.0, 3.0}, SolverConfig{});
        for (const SolutionPair* pair : {&sub, &sup}) {
            const ExponentFit fit = boundary_exponent_fit(pair->u, g);
            o.detail << "s=" << s << (pair == &sub ? " sub " : " sup ") << fit.alpha << "; ";
            o.require(pair->status == SolveStatus::converged, "convergence");
            o.require(fit.failures == 0, "fit failures");
            o.require(std::abs(fit.alpha - s) <= 0.05, "exponent window");
        }
    }
}

void gradient_check(Outcome& o) {
    const Grid g = interval(64);
    const FractionalOperator op = assemble(g, 0.5);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> base(-0.3, 1.0);
    std::uniform_real_distribution<double> dir(-1.0, 1.0);
    const double eps = 1e-6;
    double worst = 0.0;
    for (double p : {0.5, 1.0, 3.0}) {
        const ExponentPair exps{p, 2.0};
        for (int t = 0; t < 20; ++t) {
            GridFunction u(g);
            GridFunction phi(g);
            for (std::size_t k = 0; k < g.size(); ++k) {
                u[k] = base(rng);
                phi[k] = dir(rng);
            }
            const double exact = energy_gradient(op, u, exps, eps).values().dot(phi.values());
            const double fd = oracle::central_difference(
                [&](double d) { return energy(op, u + d * phi, exps, eps).value; }, 1e-5);
            worst = std::max(worst, std::abs(fd - exact) / std::abs(exact));
        }
    }
    o.detail << "60 pairs, worst relative error " << worst;
    o.require(worst <= 1e-4, "gradient");
}

void determinism_check(Outcome& o) {
    bool same = true;
    for (const auto& [p, q] : {std::pair{0.5, 0.5}, std::pair{3.0, 3.0}}) {
        ExperimentConfig cfg;
        cfg.resolution = 128;
        cfg.p = p;
        cfg.q = q;
        cfg.solver_config.seed = 12345;
        cfg.solver_config.initial_guess = InitialGuess::random_positive;
        const ExperimentResult a = run_experiment(cfg);
        const ExperimentResult b = run_experiment(cfg);
        same = same && strip_timing(a.record).dump() == strip_timing(b.record).dump() &&
               a.pair->u.values() == b.pair->u.values() && a.pair->v.values() == b.pair->v.values();
        o.require(a.exit_code == kExitOk, "run status");
    }
    o.detail << (same ? "records identical" : "records differ");
    o.require(same, "bitwise reproduction");
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const std::function<void(Outcome&)>& body) {
        Outcome o;
        try {
            body(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.str().c_str());
        std::fflush(stdout);
    };

    report(1, "normalization constant", normalization_constant_check);
    report(2, "torsion oracle", torsion_check);
    report(3, "local limit", local_limit_check);
    report(4, "maximum principle", maximum_principle_check);
    report(5, "sublinear solution", sublinear_check);

    const auto t0 = Clock::now();
    const SuperlinearRun run256 = superlinear(256, 0.5);
    const double mp_seconds = seconds_since(t0);
    report(6, "mountain pass solution", [&](Outcome& o) { mountain_pass_check(o, run256, mp_seconds); });
    report(7, "Rellich identity", [&](Outcome& o) { rellich_check(o, run256); });
    report(8, "classifier", classifier_check);
    report(9, "boundary exponent", boundary_exponent_check);
    report(10, "gradient check", gradient_check);
    report(11, "determinism", determinism_check);

    std::printf("%d of 11 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
