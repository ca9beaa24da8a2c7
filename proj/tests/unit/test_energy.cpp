#include "fracle/energy_functional.hpp"
#include "fracle/errors.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace fracle;

namespace {

GridFunction random_function(const Grid& g, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    GridFunction u(g);
    for (std::size_t k = 0; k < g.size(); ++k) {
        u[k] = dist(rng);
    }
    return u;
}

}  // namespace

TEST_CASE("regime labels") {
    CHECK(ExponentPair{1.0, 1.0}.regime(1, 0.5) == Regime::resonant);
    CHECK(ExponentPair{0.5, 0.5}.regime(1, 0.5) == Regime::sublinear);
    CHECK(ExponentPair{2.0, 2.0}.regime(3, 0.5) == Regime::critical);
    CHECK(ExponentPair{5.0, 5.0}.regime(1, 0.5) == Regime::superlinear_subcritical);
    CHECK(ExponentPair{10.0, 10.0}.regime(3, 0.5) == Regime::supercritical);
    // n <= 2s: the hyperbole constraint is vacuous.
    CHECK(ExponentPair{50.0, 50.0}.regime(1, 0.75) == Regime::superlinear_subcritical);
    CHECK_FALSE(ExponentPair{2.0, 2.0}.hyperbole_gap(1, 0.5).has_value());
    CHECK(*ExponentPair{2.0, 2.0}.hyperbole_gap(3, 0.5) == doctest::Approx(0.0));
    CHECK(std::string(to_string(Regime::superlinear_subcritical)) == "superlinear_subcritical");
}

TEST_CASE("energy of zero and scaling") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 48);
    const FractionalOperator op = assemble(g, 0.5);
    const ExponentPair exps{0.7, 2.5};
    const EnergyReport zero = energy(op, GridFunction(g), exps);
    CHECK(zero.value == 0.0);
    CHECK(zero.kinetic == 0.0);
    CHECK(zero.potential == 0.0);

    std::mt19937_64 rng(3);
    const GridFunction u = random_function(g, rng, -0.5, 1.0);
    const EnergyReport base = energy(op, u, exps);
    CHECK(base.value == doctest::Approx(base.kinetic - base.potential));
    CHECK(base.norm == doctest::Approx(std::pow(base.kinetic * (exps.p + 1.0) / exps.p, exps.p / (exps.p + 1.0))));
    for (double t : {0.1, 2.0, 7.5}) {
        const EnergyReport scaled = energy(op, t * u, exps);
        CHECK(scaled.kinetic == doctest::Approx(std::pow(t, (exps.p + 1.0) / exps.p) * base.kinetic).epsilon(1e-12));
        CHECK(scaled.potential == doctest::Approx(std::pow(t, exps.q + 1.0) * base.potential).epsilon(1e-12));
    }
}

TEST_CASE("sublinear energy is negative near zero along positive directions") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 64);
    const FractionalOperator op = assemble(g, 0.5);
    const ExponentPair exps{0.5, 0.5};
    std::mt19937_64 rng(11);
    for (int t = 0; t < 5; ++t) {
        const GridFunction u = random_function(g, rng, 0.0, 1.0);
        double eps = 1.0;
        while (energy(op, eps * u, exps).value >= 0.0) {
            eps *= 0.5;
            REQUIRE(eps > 1e-12);
        }
        for (double f : {1.0, 0.5, 0.1, 0.01}) {
            CHECK(energy(op, (f * eps) * u, exps).value < 0.0);
        }
    }
}

TEST_CASE("coercivity along rays for pq < 1") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 64);
    const FractionalOperator op = assemble(g, 0.5);
    const ExponentPair exps{0.5, 0.5};
    std::mt19937_64 rng(5);
    for (int r = 0; r < 5; ++r) {
        GridFunction u = random_function(g, rng, -1.0, 1.0);
        u *= 1.0 / energy(op, u, exps).norm;
        const double e10 = energy(op, 10.0 * u, exps).value;
        const double e100 = energy(op, 100.0 * u, exps).value;
        const double e1000 = energy(op, 1000.0 * u, exps).value;
        CHECK(e10 < e100);
        CHECK(e100 < e1000);
        CHECK(e1000 > 0.0);
    }
}

TEST_CASE("gradient vanishes at zero without smoothing for p <= 1") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 32);
    const FractionalOperator op = assemble(g, 0.5);
    for (double p : {0.3, 1.0}) {
        CHECK(energy_gradient(op, GridFunction(g), ExponentPair{p, 2.0}).sup_norm() == 0.0);
    }
}

TEST_CASE("gradient matches central differences") {
    const Grid g = build_grid(Domain::disk(1.0), 12);
    const FractionalOperator op = assemble(g, 0.6);
    std::mt19937_64 rng(17);
    for (double p : {0.5, 1.0, 3.0}) {
        const ExponentPair exps{p, 1.7};
        for (int t = 0; t < 10; ++t) {
            const GridFunction u = random_function(g, rng, -0.3, 1.0);
            const GridFunction phi = random_function(g, rng, -1.0, 1.0);
            const double eps = 1e-8;
            const double exact = energy_gradient(op, u, exps, eps).values().dot(phi.values());
            const double fd = oracle::central_difference(
                [&](double d) { return energy(op, u + d * phi, exps, eps).value; }, 1e-5);
            CHECK(fd == doctest::Approx(exact).epsilon(1e-5));
        }
    }
}

TEST_CASE("Palais-Smale type identity") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 50);
    const FractionalOperator op = assemble(g, 0.5);
    std::mt19937_64 rng(23);
    for (const ExponentPair exps : {ExponentPair{3.0, 2.0}, ExponentPair{0.5, 0.5}, ExponentPair{1.5, 4.0}}) {
        const GridFunction u = random_function(g, rng, -0.2, 1.0);
        const EnergyReport e = energy(op, u, exps);
        const double lhs = (exps.q + 1.0) * e.value - energy_gradient(op, u, exps).values().dot(u.values());
        const double integral = e.kinetic * (exps.p + 1.0) / exps.p;
        const double factor = exps.p * (exps.q + 1.0) / (exps.p + 1.0) - 1.0;
        CHECK(lhs == doctest::Approx(factor * integral).epsilon(1e-10));
        if (exps.product() > 1.0) {
            CHECK(factor > 0.0);
        }
    }
}

TEST_CASE("smoothed gradient converges to the plain gradient") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 40);
    const FractionalOperator op = assemble(g, 0.5);
    std::mt19937_64 rng(29);
    const GridFunction u = random_function(g, rng, 0.1, 1.0);
    const ExponentPair exps{3.0, 2.0};
    const GridFunction plain = energy_gradient(op, u, exps);
    double previous = INFINITY;
    for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
        const double gap = (energy_gradient(op, u, exps, eps) - plain).sup_norm();
        CHECK(gap < previous);
        previous = gap;
    }
    CHECK(previous < 1e-8 * plain.sup_norm());
}

TEST_CASE("smoothed flux helpers are consistent") {
    for (double p : {0.5, 1.0, 3.0}) {
        for (double eps : {0.0, 1e-3}) {
            for (double t : {-1.3, -0.2, 0.4, 2.0}) {
                const double h = 1e-6;
                const double dk = (smoothed_kinetic_density(t + h, p, eps) - smoothed_kinetic_density(t - h, p, eps)) /
                                  (2.0 * h);
                CHECK(dk == doctest::Approx(smoothed_flux(t, p, eps)).epsilon(1e-7));
                const double df = (smoothed_flux(t + h, p, eps) - smoothed_flux(t - h, p, eps)) / (2.0 * h);
                CHECK(df == doctest::Approx(smoothed_flux_derivative(t, p, eps)).epsilon(1e-6));
            }
        }
    }
    CHECK(smoothed_kinetic_density(0.0, 3.0, 1e-2) == 0.0);
}

TEST_CASE("ridge lower bound is positive for pq > 1") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 64);
    const FractionalOperator op = assemble(g, 0.5);
    const RidgeBound b = ridge_lower_bound(op, ExponentPair{3.0, 3.0});
    CHECK(b.radius > 0.0);
    CHECK(b.lower_bound > 0.0);
    CHECK_THROWS_AS(ridge_lower_bound(op, ExponentPair{0.5, 0.5}), ConfigError);
    // Certificate check: energy on the sphere of that radius stays above the bound.
    std::mt19937_64 rng(31);
    for (int t = 0; t < 20; ++t) {
        GridFunction u = random_function(g, rng, -1.0, 1.0);
        const ExponentPair exps{3.0, 3.0};
        u *= b.radius / energy(op, u, exps).norm;
        CHECK(energy(op, u, exps).value >= b.lower_bound);
    }
}
