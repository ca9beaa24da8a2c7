#include "fracle/errors.hpp"
#include "fracle/fractional_operator.hpp"
#include "fracle/special_functions.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <stdexcept>

using namespace fracle;

TEST_CASE("gamma function against the standard library") {
    for (double x = -4.75; x < 12.0; x += 0.125) {
        if (std::abs(x - std::round(x)) < 1e-12 && x <= 0.0) {
            continue;
        }
        CHECK(gamma_function(x) == doctest::Approx(std::tgamma(x)).epsilon(1e-12));
    }
    for (double x : {0.01, 0.5, 1.5, 7.25, 40.0}) {
        CHECK(log_gamma(x) == doctest::Approx(std::lgamma(x)).epsilon(1e-12));
    }
}

TEST_CASE("normalization constant at s = 1/2") {
    CHECK(normalization_constant(1, 0.5) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-12));
    CHECK(normalization_constant(2, 0.5) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-12));
    CHECK(normalization_constant_quadrature(1, 0.5) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-10));
    CHECK(normalization_constant_quadrature(2, 0.5) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-10));
}

TEST_CASE("closed form, library quadrature and oracle quadrature agree") {
    for (int n : {1, 2}) {
        for (double s : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.9}) {
            const double closed = normalization_constant(n, s);
            CHECK(normalization_constant_quadrature(n, s) == doctest::Approx(closed).epsilon(1e-10));
            CHECK(oracle::normalization_constant(n, s) == doctest::Approx(closed).epsilon(1e-8));
        }
    }
}

TEST_CASE("C(1,s)/(1-s) tends to 2 as s tends to 1") {
    const double r99 = normalization_constant(1, 0.99) / 0.01;
    const double r999 = normalization_constant(1, 0.999) / 0.001;
    CHECK(std::abs(r999 - 2.0) < std::abs(r99 - 2.0));
    CHECK(r99 == doctest::Approx(2.0).epsilon(0.04));
    CHECK(r999 == doctest::Approx(2.0).epsilon(0.005));
    CHECK(normalization_constant_quadrature(1, 0.99) / 0.01 == doctest::Approx(r99).epsilon(1e-9));
    CHECK(normalization_constant_quadrature(1, 0.999) / 0.001 == doctest::Approx(r999).epsilon(1e-9));
}

TEST_CASE("order outside (0,1) is a domain error") {
    CHECK_THROWS_AS(normalization_constant(1, 0.0), std::domain_error);
    CHECK_THROWS_AS(normalization_constant(1, 1.0), std::domain_error);
    CHECK_THROWS_AS(normalization_constant(3, 0.5), std::domain_error);
    CHECK_THROWS_AS(normalization_constant_quadrature(2, 1.5), std::domain_error);
}

TEST_CASE("M-matrix structure in 1D and 2D") {
    const Grid grids[] = {build_grid(Domain::interval(-1.0, 1.0), 40), build_grid(Domain::disk(1.0), 14),
                          build_grid(Domain::rectangle(2.0, 1.0, {0.3, 0.0}), 16)};
    for (const Grid& g : grids) {
        for (double s : {0.1, 0.5, 0.9}) {
            for (bool corr : {true, false}) {
                const FractionalOperator op = assemble(g, s, AssemblyOptions{corr});
                const Eigen::MatrixXd& a = op.matrix();
                CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
                CHECK(a.diagonal().minCoeff() > 0.0);
                Eigen::MatrixXd off = a;
                off.diagonal().setZero();
                CHECK(off.maxCoeff() <= 0.0);
                CHECK(op.row_sums().minCoeff() > 0.0);
                CHECK(op.apply(GridFunction(g)).sup_norm() == 0.0);
            }
        }
    }
}

TEST_CASE("self-adjointness in the quadrature inner product") {
    const Grid g = build_grid(Domain::disk(1.0), 18);
    const FractionalOperator op = assemble(g, 0.4);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> normal;
    for (int t = 0; t < 10; ++t) {
        GridFunction u(g);
        GridFunction v(g);
        for (std::size_t k = 0; k < g.size(); ++k) {
            u[k] = normal(rng);
            v[k] = normal(rng);
        }
        const double left = op.apply(u).dot(v);
        const double right = u.dot(op.apply(v));
        CHECK(left == doctest::Approx(right).epsilon(1e-12));
    }
}

TEST_CASE("torsion solution on the interval converges") {
    double previous = INFINITY;
    double previous_l2 = INFINITY;
    for (int n : {64, 128, 256, 512}) {
        const Grid g = build_grid(Domain::interval(-1.0, 1.0), n);
        const FractionalOperator op = assemble(g, 0.5);
        const GridFunction w = solve_linear(op, sample(g, [](const Point&) { return 1.0; }));
        const GridFunction exact = sample(g, [](const Point& x) { return oracle::torsion(x[0] * x[0], 1, 0.5); });
        const GridFunction err = w - exact;
        const double sup = err.sup_norm() / exact.sup_norm();
        const double l2 = err.lp_norm(2.0) / exact.lp_norm(2.0);
        CHECK(sup < previous);
        if (std::isfinite(previous_l2)) {
            // Halving h must cut the L2 error by at least 2^{0.5}.
            CHECK(previous_l2 / l2 >= std::sqrt(2.0));
        }
        previous = sup;
        previous_l2 = l2;
    }
    CHECK(previous <= 0.02);
}

TEST_CASE("torsion solution on the disk") {
    double previous = INFINITY;
    for (int n : {16, 32, 48}) {
        const Grid g = build_grid(Domain::disk(1.0), n);
        const FractionalOperator op = assemble(g, 0.5);
        const GridFunction w = solve_linear(op, sample(g, [](const Point&) { return 1.0; }));
        const GridFunction exact =
            sample(g, [](const Point& x) { return oracle::torsion(x[0] * x[0] + x[1] * x[1], 2, 0.5); });
        const double l2 = (w - exact).lp_norm(2.0) / exact.lp_norm(2.0);
        CHECK(l2 < previous);
        previous = l2;
    }
    CHECK(previous < 0.05);
}

TEST_CASE("solve_linear contracts") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 64);
    const FractionalOperator op = assemble(g, 0.3);
    CHECK(solve_linear(op, GridFunction(g)).sup_norm() == 0.0);
    GridFunction f(g);
    f[10] = 1.0;
    const GridFunction w = solve_linear(op, f);
    CHECK(w.min_value() > 0.0);
    CHECK((op.apply(w) - f).sup_norm() <= 1e-10);
}

TEST_CASE("Green matrix is entrywise positive on small grids") {
    for (const Grid& g : {build_grid(Domain::interval(-1.0, 1.0), 64), build_grid(Domain::disk(1.0), 12)}) {
        const FractionalOperator op = assemble(g, 0.5);
        CHECK(op.inverse().minCoeff() > 0.0);
        CHECK((op.matrix() * op.inverse() - Eigen::MatrixXd::Identity(g.size(), g.size())).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("copies share the factorization safely") {
    const Grid g = build_grid(Domain::interval(-1.0, 1.0), 32);
    const FractionalOperator a = assemble(g, 0.5);
    const FractionalOperator b = a;
    CHECK(&a.inverse() == &b.inverse());
}

TEST_CASE("matrix dump round trip") {
    const Grid g = build_grid(Domain::disk(1.0), 9);
    const FractionalOperator op = assemble(g, 0.25);
    const auto path = std::filesystem::temp_directory_path() / "fracle_matrix_dump_test.bin";
    write_matrix_dump(op, path);
    const MatrixDump dump = read_matrix_dump(path);
    CHECK(dump.dimension == 2);
    CHECK(dump.s == 0.25);
    CHECK(dump.matrix == op.matrix());
    CHECK(std::filesystem::file_size(path) == 4 + 8 + 8 + 8 * g.size() * g.size());
    std::filesystem::resize_file(path, 30);
    CHECK_THROWS_AS(read_matrix_dump(path), ConfigError);
    std::filesystem::remove(path);
}
