#include "fracle/fractional_operator.hpp"

#include "fracle/errors.hpp"
#include "fracle/special_functions.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracle {

namespace {

void check_order(int n, double s) {
    if (n != 1 && n != 2) {
        throw std::domain_error("dimension must be 1 or 2, got " + std::to_string(n));
    }
    if (!(s > 0.0 && s < 1.0)) {
        throw std::domain_error("fractional order must lie in (0, 1), got " + std::to_string(s));
    }
}

// Integral of (1 - cos t) t^{-1-2s} over (0, inf).
double one_dimensional_symbol_integral(double s) {
    // (0, 1]: termwise integration of the cosine series.
    double head = 0.0;
    double factorial = 1.0;
    for (int k = 1; k <= 20; ++k) {
        factorial *= (2.0 * k - 1.0) * (2.0 * k);
        const double term = 1.0 / (factorial * (2.0 * k - 2.0 * s));
        head += (k % 2 == 1) ? term : -term;
    }

    // [1, T] with T a whole number of periods, one Gauss-Kronrod pass per period.
    constexpr int kPeriods = 64;
    const double period = 2.0 * std::numbers::pi;
    const double far = kPeriods * period;
    auto integrand = [s](double t) { return (1.0 - std::cos(t)) * std::pow(t, -1.0 - 2.0 * s); };
    using boost::math::quadrature::gauss_kronrod;
    double middle = gauss_kronrod<double, 31>::integrate(integrand, 1.0, period, 15, 1e-14);
    for (int k = 1; k < kPeriods; ++k) {
        middle += gauss_kronrod<double, 31>::integrate(integrand, k * period, (k + 1) * period, 15, 1e-14);
    }

    // [T, inf): the power part is exact; the cosine part by its asymptotic series, which
    // is sharp because sin T = 0 and cos T = 1.
    const double a = 1.0 + 2.0 * s;
    double cosine_tail = 0.0;
    double coefficient = a;
    for (int m = 0; m < 12; ++m) {
        const double term = coefficient * std::pow(far, -a - 2.0 * m - 1.0);
        cosine_tail += term;
        if (std::abs(term) < 1e-20) {
            break;
        }
        coefficient *= -(a + 2.0 * m + 1.0) * (a + 2.0 * m + 2.0);
    }
    const double tail = std::pow(far, -2.0 * s) / (2.0 * s) - cosine_tail;
    return head + middle + tail;
}

// Integral of t^{-1-2s} times one linear piece of a hat over [lo, lo + 1], lo >= 1, in
// units of h. The integrand is analytic there, so a fixed Gauss rule is at rounding level.
double hat_piece(double lo, double s, bool rising) {
    auto f = [&](double t) {
        const double phi = rising ? (t - lo) : (lo + 1.0 - t);
        return phi * std::pow(t, -1.0 - 2.0 * s);
    };
    return boost::math::quadrature::gauss<double, 20>::integrate(f, lo, lo + 1.0);
}

Eigen::MatrixXd assemble_1d(const Grid& grid, double s, double c, bool correction) {
    const auto m = static_cast<Eigen::Index>(grid.size());
    const double h = grid.spacing();
    const double scale = c * std::pow(h, -2.0 * s);
    const int max_offset = grid.nodes_x();

    // weights[k]: kernel integrated against the hat centered at offset k, over y >= h.
    std::vector<double> weights(static_cast<std::size_t>(max_offset) + 1, 0.0);
    for (int k = 1; k <= max_offset; ++k) {
        double w = hat_piece(static_cast<double>(k), s, false);
        if (k >= 2) {
            w += hat_piece(static_cast<double>(k - 1), s, true);
        }
        weights[static_cast<std::size_t>(k)] = scale * w;
    }
    const double central = correction ? scale / (2.0 - 2.0 * s) : 0.0;
    const double diagonal = scale / s + 2.0 * central;

    Eigen::MatrixXd a(m, m);
    const auto& lattice = grid.lattice();
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index col = 0; col < m; ++col) {
            const int k = std::abs(lattice[static_cast<std::size_t>(r)][0] - lattice[static_cast<std::size_t>(col)][0]);
            if (k == 0) {
                a(r, col) = diagonal;
            } else {
                a(r, col) = -weights[static_cast<std::size_t>(k)] - (k == 1 ? central : 0.0);
            }
        }
    }
    return a;
}

// Integral of |y|^{-2-2s} over the cell [a-1/2, a+1/2] x [b-1/2, b+1/2], unit spacing.
double cell_weight(int a, int b, double s) {
    using Gauss = boost::math::quadrature::gauss<double, 10>;
    const int split = std::max(a, b) <= 3 ? 8 : (std::max(a, b) <= 12 ? 2 : 1);
    const double sub = 1.0 / split;
    double total = 0.0;
    for (int i = 0; i < split; ++i) {
        const double x0 = a - 0.5 + i * sub;
        for (int j = 0; j < split; ++j) {
            const double y0 = b - 0.5 + j * sub;
            auto inner = [&](double x) {
                return Gauss::integrate([&](double y) { return std::pow(x * x + y * y, -1.0 - s); }, y0, y0 + sub);
            };
            total += Gauss::integrate(inner, x0, x0 + sub);
        }
    }
    return total;
}

Eigen::MatrixXd assemble_2d(const Grid& grid, double s, double c, bool correction) {
    const auto m = static_cast<Eigen::Index>(grid.size());
    const double h = grid.spacing();
    const double scale = c * std::pow(h, -2.0 * s);
    const int extent = std::max(grid.nodes_x(), grid.nodes_y());

    std::vector<double> table(static_cast<std::size_t>(extent) * static_cast<std::size_t>(extent), 0.0);
    auto at = [&](int a, int b) -> double& {
        return table[static_cast<std::size_t>(a) * static_cast<std::size_t>(extent) + static_cast<std::size_t>(b)];
    };
    for (int a = 0; a < extent; ++a) {
        for (int b = a; b < extent; ++b) {
            if (a == 0 && b == 0) {
                continue;
            }
            at(a, b) = scale * cell_weight(a, b, s);
            at(b, a) = at(a, b);
        }
    }

    // Angular integrals over the octant 0 <= theta <= pi/4 of the central square.
    using boost::math::quadrature::gauss_kronrod;
    const double quarter = std::numbers::pi / 4.0;
    const double outer_angular = gauss_kronrod<double, 31>::integrate(
        [s](double t) { return std::pow(std::cos(t), 2.0 * s); }, 0.0, quarter, 10, 1e-14);
    const double inner_angular = gauss_kronrod<double, 31>::integrate(
        [s](double t) { return std::pow(std::cos(t), -(2.0 - 2.0 * s)); }, 0.0, quarter, 10, 1e-14);
    const double half = 0.5;
    // Kernel mass outside the central cell, and 1/4 of the second moment inside it.
    const double mass = scale * 8.0 / (2.0 * s) * std::pow(half, -2.0 * s) * outer_angular;
    const double central =
        correction ? scale * 0.25 * 8.0 * std::pow(half, 2.0 - 2.0 * s) / (2.0 - 2.0 * s) * inner_angular : 0.0;

    Eigen::MatrixXd mat(m, m);
    const auto& lattice = grid.lattice();
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& lr = lattice[static_cast<std::size_t>(r)];
        for (Eigen::Index col = 0; col < m; ++col) {
            const auto& lc = lattice[static_cast<std::size_t>(col)];
            const int da = std::abs(lr[0] - lc[0]);
            const int db = std::abs(lr[1] - lc[1]);
            if (da == 0 && db == 0) {
                mat(r, col) = mass + 4.0 * central;
            } else {
                mat(r, col) = -at(da, db) - (da + db == 1 ? central : 0.0);
            }
        }
    }
    return mat;
}

}  // namespace

namespace detail {
struct InverseCache {
    std::once_flag once;
    Eigen::MatrixXd inverse;
};
}  // namespace detail

double normalization_constant(int n, double s) {
    check_order(n, s);
    return std::pow(4.0, s) * s * gamma_function(0.5 * n + s) /
           (std::pow(std::numbers::pi, 0.5 * n) * gamma_function(1.0 - s));
}

double normalization_constant_quadrature(int n, double s) {
    check_order(n, s);
    const double radial = one_dimensional_symbol_integral(s);
    if (n == 1) {
        return 1.0 / (2.0 * radial);
    }
    // Polar coordinates: t = r |cos theta| separates the radial and angular factors.
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double angular =
        4.0 * integrator.integrate([s](double t) { return std::pow(std::cos(t), 2.0 * s); }, 0.0,
                                   std::numbers::pi / 2.0);
    return 1.0 / (angular * radial);
}

FractionalOperator::FractionalOperator(Grid grid, double s, Eigen::MatrixXd matrix, AssemblyOptions options)
    : grid_(std::move(grid)), s_(s), constant_(normalization_constant(grid_.dimension(), s)),
      matrix_(std::move(matrix)), options_(options) {
    auto factor = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(matrix_);
    if (factor->info() != Eigen::Success) {
        throw NumericalError("Cholesky factorization of the fractional operator failed");
    }
    factor_ = std::move(factor);
    inverse_ = std::make_shared<detail::InverseCache>();
}

GridFunction FractionalOperator::apply(const GridFunction& u) const {
    return GridFunction(grid_, matrix_ * u.values());
}

const Eigen::MatrixXd& FractionalOperator::inverse() const {
    auto& cache = *inverse_;
    std::call_once(cache.once, [&] {
        cache.inverse = factor_->solve(Eigen::MatrixXd::Identity(matrix_.rows(), matrix_.cols()));
    });
    return cache.inverse;
}

FractionalOperator assemble(const Grid& grid, double s, AssemblyOptions options) {
    const int n = grid.dimension();
    const double c = normalization_constant(n, s);
    Eigen::MatrixXd matrix = n == 1 ? assemble_1d(grid, s, c, options.singular_correction)
                                    : assemble_2d(grid, s, c, options.singular_correction);
    return FractionalOperator(grid, s, std::move(matrix), options);
}

GridFunction solve_linear(const FractionalOperator& op, const GridFunction& f) {
    const Eigen::VectorXd& rhs = f.values();
    const double rhs_norm = rhs.lpNorm<Eigen::Infinity>();
    if (rhs_norm == 0.0) {
        return GridFunction(op.grid());
    }
    Eigen::VectorXd w = op.solve(rhs);
    Eigen::VectorXd residual = rhs - op.apply(w);
    if (residual.lpNorm<Eigen::Infinity>() > 1e-12 * rhs_norm) {
        w += op.solve(residual);
        residual = rhs - op.apply(w);
    }
    const double relative = residual.lpNorm<Eigen::Infinity>() / rhs_norm;
    if (!(relative <= 1e-10)) {
        throw NumericalError("linear solve residual " + std::to_string(relative) + " exceeds 1e-10");
    }
    return GridFunction(op.grid(), std::move(w));
}

void write_matrix_dump(const FractionalOperator& op, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot open " + path.string() + " for writing");
    }
    const std::int32_t n = op.dimension();
    const double s = op.order();
    const std::int64_t count = op.matrix().rows();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&s), sizeof s);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = op.matrix();
    out.write(reinterpret_cast<const char*>(rows.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows.size())));
}

MatrixDump read_matrix_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::int32_t n = 0;
    double s = 0.0;
    std::int64_t count = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&s), sizeof s);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    if (!in || count < 0) {
        throw ConfigError("truncated matrix dump header in " + path.string());
    }
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(count, count);
    in.read(reinterpret_cast<char*>(rows.data()),
            static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rows.size())));
    if (!in) {
        throw ConfigError("truncated matrix dump body in " + path.string());
    }
    return {n, s, Eigen::MatrixXd(rows)};
}

}  // namespace fracle
